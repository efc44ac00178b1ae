//! Word vocabulary with dense ids and the three reserved tokens.

use std::collections::HashMap;

/// Sentence-begin marker. Present in every vocabulary, never predicted.
pub const SENTENCE_BEGIN: &str = "<s>";
/// Sentence-end marker, predicted once per sentence.
pub const SENTENCE_END: &str = "</s>";
/// Unknown-word token; all out-of-vocabulary words resolve to it.
pub const UNKNOWN: &str = "<unk>";

/// Dense identifier for a vocabulary word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub u32);

impl WordId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective token-to-id map. Reserved tokens occupy ids 0..3.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    pub const BEGIN: WordId = WordId(0);
    pub const END: WordId = WordId(1);
    pub const UNK: WordId = WordId(2);

    /// Vocabulary containing only the reserved tokens.
    pub fn new() -> Self {
        let mut v = Vocabulary {
            words: Vec::new(),
            index: HashMap::new(),
        };
        v.insert(SENTENCE_BEGIN);
        v.insert(SENTENCE_END);
        v.insert(UNKNOWN);
        v
    }

    /// Build from tokens in first-appearance order, reserved tokens first.
    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Self {
        let mut v = Vocabulary::new();
        for t in tokens {
            v.insert(t);
        }
        v
    }

    /// Insert a word, returning its id (existing id if already present).
    pub fn insert(&mut self, word: &str) -> WordId {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = WordId(self.words.len() as u32);
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    /// Id of the word, or of `<unk>` when out of vocabulary.
    pub fn id_or_unknown(&self, word: &str) -> WordId {
        self.id(word).unwrap_or(Self::UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id.index()]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved tokens are always present
    }

    /// All words in id order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.as_str())
    }

    /// Ids of all words that can appear as prediction targets
    /// (everything except sentence-begin).
    pub fn predicted_ids(&self) -> impl Iterator<Item = WordId> + '_ {
        (0..self.words.len() as u32)
            .map(WordId)
            .filter(|&id| id != Self::BEGIN)
    }

    /// Number of predictable words (vocabulary minus sentence-begin).
    pub fn predicted_len(&self) -> usize {
        self.words.len() - 1
    }

    /// Union of two vocabularies: reserved tokens, then `a`'s words, then
    /// `b`'s words not already present, preserving each side's order.
    pub fn union(a: &Vocabulary, b: &Vocabulary) -> Vocabulary {
        let mut v = Vocabulary::new();
        for w in a.words() {
            v.insert(w);
        }
        for w in b.words() {
            v.insert(w);
        }
        v
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_tokens_have_fixed_ids() {
        let v = Vocabulary::new();
        assert_eq!(v.id(SENTENCE_BEGIN), Some(Vocabulary::BEGIN));
        assert_eq!(v.id(SENTENCE_END), Some(Vocabulary::END));
        assert_eq!(v.id(UNKNOWN), Some(Vocabulary::UNK));
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn ids_are_dense_and_bijective() {
        let v = Vocabulary::from_tokens(["b", "a", "b", "c"]);
        assert_eq!(v.len(), 6);
        for (i, w) in v.words().enumerate() {
            assert_eq!(v.id(w), Some(WordId(i as u32)));
        }
    }

    #[test]
    fn oov_resolves_to_unknown() {
        let v = Vocabulary::from_tokens(["a"]);
        assert_eq!(v.id_or_unknown("zzz"), Vocabulary::UNK);
        assert_eq!(v.id_or_unknown("a"), WordId(3));
    }

    #[test]
    fn union_keeps_order_and_dedupes() {
        let a = Vocabulary::from_tokens(["x", "y"]);
        let b = Vocabulary::from_tokens(["y", "z"]);
        let u = Vocabulary::union(&a, &b);
        let words: Vec<&str> = u.words().collect();
        assert_eq!(words, ["<s>", "</s>", "<unk>", "x", "y", "z"]);
    }
}
