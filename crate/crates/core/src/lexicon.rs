//! Pronunciation lexicons and phone-set mapping: per-language lexicons are
//! rewritten onto a shared phone inventory via an explicit mapping table,
//! then merged into one universal lexicon. The mapping tables themselves
//! are configuration data supplied by the caller.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("word {word:?}: empty pronunciation")]
    EmptyPronunciation { word: String },
    #[error("word {word:?}, phone {position}: no mapping for {phone:?}")]
    UnmappedPhone {
        word: String,
        position: usize,
        phone: String,
    },
    #[error("word {word:?}: phone {phone:?} is outside the declared inventory")]
    InventoryMismatch { word: String, phone: String },
    #[error("mapping target {phone:?} is outside the declared inventory")]
    TargetOutsideInventory { phone: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Word-to-pronunciations map; each pronunciation is a phone sequence.
/// Multiple pronunciations per word are kept as a set, so duplicates
/// collapse and iteration order is stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, BTreeSet<Vec<String>>>,
}

impl Lexicon {
    pub fn new() -> Lexicon {
        Lexicon::default()
    }

    pub fn insert(
        &mut self,
        word: impl Into<String>,
        pronunciation: Vec<String>,
    ) -> Result<(), LexiconError> {
        let word = word.into();
        if pronunciation.is_empty() {
            return Err(LexiconError::EmptyPronunciation { word });
        }
        self.entries.entry(word).or_default().insert(pronunciation);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn pronunciations(&self, word: &str) -> Option<&BTreeSet<Vec<String>>> {
        self.entries.get(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<Vec<String>>)> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p))
    }

    /// Every phone symbol used anywhere in the lexicon.
    pub fn phone_inventory(&self) -> BTreeSet<String> {
        self.entries.values().flatten().flatten().cloned().collect()
    }

    /// Read `word<TAB>phone phone ...`, one pronunciation per line,
    /// blank lines skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Lexicon, LexiconError> {
        let mut lex = Lexicon::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (word, phones) = line.split_once('\t').ok_or_else(|| LexiconError::Parse {
                line: lineno,
                msg: "expected 'word<TAB>phone phone ...'".to_string(),
            })?;
            let pron: Vec<String> = phones.split_whitespace().map(str::to_string).collect();
            lex.insert(word.trim(), pron)
                .map_err(|e| LexiconError::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
        }
        Ok(lex)
    }

    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for (word, prons) in &self.entries {
            for pron in prons {
                writeln!(out, "{}\t{}", word, pron.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Source-to-target phone mapping plus the declared target inventory.
#[derive(Debug, Clone, Default)]
pub struct PhoneMap {
    mapping: BTreeMap<String, String>,
    inventory: BTreeSet<String>,
}

impl PhoneMap {
    /// Build from (source, target) pairs; the declared inventory is the set
    /// of targets.
    pub fn from_pairs<I, S, T>(pairs: I) -> PhoneMap
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mapping: BTreeMap<String, String> = pairs
            .into_iter()
            .map(|(s, t)| (s.into(), t.into()))
            .collect();
        let inventory = mapping.values().cloned().collect();
        PhoneMap { mapping, inventory }
    }

    /// Identity map over the given inventory.
    pub fn identity<I: IntoIterator<Item = S>, S: Into<String>>(phones: I) -> PhoneMap {
        PhoneMap::from_pairs(phones.into_iter().map(|p| {
            let p = p.into();
            (p.clone(), p)
        }))
    }

    /// Read `src<TAB>dst` per line, blank lines skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<PhoneMap, LexiconError> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| LexiconError::Parse {
                line: idx + 1,
                msg: "expected 'src<TAB>dst'".to_string(),
            })?;
            pairs.push((src.trim().to_string(), dst.trim().to_string()));
        }
        Ok(PhoneMap::from_pairs(pairs))
    }

    pub fn get(&self, phone: &str) -> Option<&str> {
        self.mapping.get(phone).map(String::as_str)
    }

    pub fn inventory(&self) -> &BTreeSet<String> {
        &self.inventory
    }
}

/// Rewrite every pronunciation symbol through the map, collapsing duplicate
/// pronunciations per word. A phone without a mapping is an error naming
/// the word and position.
pub fn map_phones(lex: &Lexicon, map: &PhoneMap) -> Result<Lexicon, LexiconError> {
    let mut out = Lexicon::new();
    for (word, prons) in lex.iter() {
        for pron in prons {
            let mut mapped = Vec::with_capacity(pron.len());
            for (position, phone) in pron.iter().enumerate() {
                let target = map.get(phone).ok_or_else(|| LexiconError::UnmappedPhone {
                    word: word.to_string(),
                    position,
                    phone: phone.clone(),
                })?;
                mapped.push(target.to_string());
            }
            out.insert(word, mapped)?;
        }
    }
    Ok(out)
}

/// Union of two lexicons over a declared shared inventory: words are
/// unioned and shared words pool their pronunciation sets. Any phone on
/// either side outside the inventory is an error.
pub fn merge(
    a: &Lexicon,
    b: &Lexicon,
    inventory: &BTreeSet<String>,
) -> Result<Lexicon, LexiconError> {
    let mut out = Lexicon::new();
    for lex in [a, b] {
        for (word, prons) in lex.iter() {
            for pron in prons {
                for phone in pron {
                    if !inventory.contains(phone) {
                        return Err(LexiconError::InventoryMismatch {
                            word: word.to_string(),
                            phone: phone.clone(),
                        });
                    }
                }
                out.insert(word, pron.clone())?;
            }
        }
    }
    Ok(out)
}

/// Trailing-digit rewrite on annotated symbols, e.g. CMU stress digits to
/// the plain-vowel tone digit: AH0 -> AH1. A special case of `map_phones`
/// restricted to symbols that end in a digit.
#[derive(Debug, Clone)]
pub struct ToneRewrite {
    digit_map: BTreeMap<char, char>,
}

impl ToneRewrite {
    pub fn new<I: IntoIterator<Item = (char, char)>>(pairs: I) -> ToneRewrite {
        ToneRewrite {
            digit_map: pairs.into_iter().collect(),
        }
    }

    /// All stress digits 0, 1, 2 rewritten to tone digit 1.
    pub fn stress_to_tone_one() -> ToneRewrite {
        ToneRewrite::new([('0', '1'), ('1', '1'), ('2', '1')])
    }
}

/// Apply the suffix rewrite to every annotated symbol. Symbols without a
/// trailing digit pass through; a trailing digit not covered by the rule is
/// an error, since the rewrite must be total over affected symbols.
pub fn stress_to_tone(lex: &Lexicon, rule: &ToneRewrite) -> Result<Lexicon, LexiconError> {
    let mut out = Lexicon::new();
    for (word, prons) in lex.iter() {
        for pron in prons {
            let mut rewritten = Vec::with_capacity(pron.len());
            for (position, phone) in pron.iter().enumerate() {
                let last = phone.chars().last().expect("phones are non-empty");
                if last.is_ascii_digit() {
                    let target =
                        rule.digit_map
                            .get(&last)
                            .ok_or_else(|| LexiconError::UnmappedPhone {
                                word: word.to_string(),
                                position,
                                phone: phone.clone(),
                            })?;
                    let mut sym: String = phone[..phone.len() - last.len_utf8()].to_string();
                    sym.push(*target);
                    rewritten.push(sym);
                } else {
                    rewritten.push(phone.clone());
                }
            }
            out.insert(word, rewritten)?;
        }
    }
    Ok(out)
}
