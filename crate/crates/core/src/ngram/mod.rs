//! Backoff n-gram language models over a word vocabulary.
//!
//! Models store log10 conditional probabilities plus log10 backoff weights,
//! the same convention as the ARPA interchange format. Training uses
//! interpolated Witten-Bell smoothing, which needs no tuned parameters and
//! can be checked by hand on tiny corpora. Models are immutable once built;
//! queries touch only shared state and are safe from any number of threads.

mod arpa;
mod interpolate;
mod prune;

pub use arpa::{read_arpa, write_arpa, ArpaError};
pub use interpolate::{interpolate, mixture_logprob};

use std::collections::HashMap;
use std::io;

use thiserror::Error;

use crate::vocab::{Vocabulary, WordId, SENTENCE_BEGIN, SENTENCE_END, UNKNOWN};

/// Log10 probability assigned to entries that exist only for structural
/// reasons (the sentence-begin unigram), matching ARPA conventions.
pub(crate) const PLACEHOLDER_LOGPROB: f64 = -99.0;

#[derive(Debug, Error)]
pub enum NGramError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1 (got {0})")]
    InvalidOrder(usize),
    #[error("token {0:?} collides with a reserved symbol")]
    ReservedToken(String),
    #[error("interpolation weight must lie in [0, 1] (got {0})")]
    InvalidAlpha(f64),
    #[error("prune threshold must lie strictly between 0 and 1 (got {0})")]
    InvalidThreshold(f64),
    #[error("corpus contains no scored events")]
    NoEvents,
}

/// One stored n-gram: log10 conditional probability plus, when the n-gram
/// also serves as the context of longer n-grams, a log10 backoff weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramEntry {
    pub log_prob: f64,
    pub backoff: Option<f64>,
}

/// Counts describing a tokenized corpus relative to a model order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
    /// Distinct n-grams per order (index 0 = unigrams).
    pub ngram_types: Vec<usize>,
}

/// Backoff n-gram model. `tables[k-1]` maps k-grams (context followed by
/// the predicted word) to their entries.
#[derive(Debug, Clone)]
pub struct LanguageModel {
    name: String,
    order: usize,
    vocab: Vocabulary,
    tables: Vec<HashMap<Box<[WordId]>, NGramEntry>>,
}

impl LanguageModel {
    /// Train a model with interpolated Witten-Bell smoothing:
    /// p(w|h) = (c(h,w) + T(h) * p(w|h')) / (c(h) + T(h)), where T(h) is the
    /// number of distinct words observed after h and h' drops the oldest
    /// word. The unigram level interpolates with the uniform distribution
    /// over the vocabulary minus sentence-begin. Sentences are padded with
    /// one sentence-begin and one sentence-end; when a vocabulary is
    /// supplied, out-of-vocabulary tokens are counted as the unknown token.
    pub fn train(
        corpus: &[Vec<String>],
        order: usize,
        vocab: Option<&Vocabulary>,
    ) -> Result<LanguageModel, NGramError> {
        if order < 1 {
            return Err(NGramError::InvalidOrder(order));
        }
        if corpus.is_empty() {
            return Err(NGramError::EmptyCorpus);
        }
        for sent in corpus {
            for tok in sent {
                if tok == SENTENCE_BEGIN || tok == SENTENCE_END || tok == UNKNOWN {
                    return Err(NGramError::ReservedToken(tok.clone()));
                }
            }
        }

        let vocab = match vocab {
            Some(v) => v.clone(),
            None => Vocabulary::from_tokens(corpus.iter().flatten().map(|t| t.as_str())),
        };

        let counts = Counts::collect(corpus, order, &vocab);
        let mut lm = LanguageModel {
            name: String::new(),
            order,
            vocab,
            tables: (0..order).map(|_| HashMap::new()).collect(),
        };

        // Unigram level: every predictable word gets smoothed mass, backed
        // off to the uniform distribution. Sentence-begin gets a placeholder.
        let uniform = 1.0 / lm.vocab.predicted_len() as f64;
        let root = counts.context_stat(&[]);
        for w in lm.vocab.predicted_ids().collect::<Vec<_>>() {
            let c = counts.gram_count(&[w]);
            let p =
                (c as f64 + root.types as f64 * uniform) / (root.total as f64 + root.types as f64);
            lm.tables[0].insert(
                Box::from([w].as_slice()),
                NGramEntry {
                    log_prob: p.log10(),
                    backoff: None,
                },
            );
        }
        lm.tables[0].insert(
            Box::from([Vocabulary::BEGIN].as_slice()),
            NGramEntry {
                log_prob: PLACEHOLDER_LOGPROB,
                backoff: None,
            },
        );

        // Higher orders, lowest first so each level can read the one below.
        for k in 2..=order {
            let mut table = HashMap::new();
            for (key, &c) in counts.grams(k) {
                let ctx = &key[..k - 1];
                let stat = counts.context_stat(ctx);
                let low = lm.tables[k - 2]
                    .get(&key[1..])
                    .expect("suffix n-gram is always counted")
                    .log_prob;
                let p = (c as f64 + stat.types as f64 * 10f64.powf(low))
                    / (stat.total as f64 + stat.types as f64);
                table.insert(
                    key.clone(),
                    NGramEntry {
                        log_prob: p.log10(),
                        backoff: None,
                    },
                );
            }
            lm.tables[k - 1] = table;
        }

        // Backoff weights: T(h) / (c(h) + T(h)) on every stored context.
        for len in 1..order {
            let keys: Vec<Box<[WordId]>> = counts.contexts(len).map(|(k, _)| k.clone()).collect();
            for ctx in keys {
                let stat = counts.context_stat(&ctx);
                let bow = stat.types as f64 / (stat.total as f64 + stat.types as f64);
                let entry = lm.tables[len - 1]
                    .get_mut(&ctx)
                    .expect("context is always stored one order below");
                entry.backoff = Some(bow.log10());
            }
        }

        Ok(lm)
    }

    /// Model built directly from parts; callers are responsible for
    /// normalization. Used by the ARPA reader and the interpolation merge.
    pub(crate) fn from_parts(
        name: String,
        order: usize,
        vocab: Vocabulary,
        tables: Vec<HashMap<Box<[WordId]>, NGramEntry>>,
    ) -> LanguageModel {
        debug_assert_eq!(tables.len(), order);
        LanguageModel {
            name,
            order,
            vocab,
            tables,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Number of stored n-grams of the given order (1-based).
    pub fn entry_count(&self, order: usize) -> usize {
        self.tables.get(order - 1).map_or(0, |t| t.len())
    }

    /// Stored n-gram counts per order (index 0 = unigrams).
    pub fn entry_counts(&self) -> Vec<usize> {
        self.tables.iter().map(|t| t.len()).collect()
    }

    pub fn total_entries(&self) -> usize {
        self.tables.iter().map(|t| t.len()).sum()
    }

    /// Stored n-grams of one order as (tokens, entry) pairs, sorted by
    /// token sequence.
    pub fn entries(&self, order: usize) -> Vec<(Vec<&str>, &NGramEntry)> {
        let mut out: Vec<(Vec<&str>, &NGramEntry)> = self.tables[order - 1]
            .iter()
            .map(|(key, e)| (self.key_tokens(key), e))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Stored entry for an n-gram given as tokens, if present.
    pub fn entry<S: AsRef<str>>(&self, ngram: &[S]) -> Option<&NGramEntry> {
        if ngram.is_empty() || ngram.len() > self.order {
            return None;
        }
        let ids: Vec<WordId> = ngram
            .iter()
            .map(|t| self.vocab.id_or_unknown(t.as_ref()))
            .collect();
        self.tables[ids.len() - 1].get(ids.as_slice())
    }

    /// Log10 conditional probability of `word` after `history`. A total
    /// function: the history is truncated to the last order-1 tokens,
    /// out-of-vocabulary tokens resolve to the unknown token, and the
    /// backoff recursion always terminates at the unigram level.
    pub fn cond_logprob<S: AsRef<str>>(&self, word: &str, history: &[S]) -> f64 {
        let w = self.vocab.id_or_unknown(word);
        let hist: Vec<WordId> = history
            .iter()
            .map(|t| self.vocab.id_or_unknown(t.as_ref()))
            .collect();
        self.cond_logprob_ids(w, &hist)
    }

    /// As `cond_logprob`, over word ids.
    pub fn cond_logprob_ids(&self, word: WordId, history: &[WordId]) -> f64 {
        let start = history.len().saturating_sub(self.order - 1);
        self.eval(&history[start..], word)
    }

    fn eval(&self, mut hist: &[WordId], w: WordId) -> f64 {
        let mut penalty = 0.0;
        loop {
            let mut key = Vec::with_capacity(hist.len() + 1);
            key.extend_from_slice(hist);
            key.push(w);
            if let Some(e) = self.tables[hist.len()].get(key.as_slice()) {
                return penalty + e.log_prob;
            }
            if hist.is_empty() {
                // Only reachable for models read from files whose unigram
                // section does not cover the queried word.
                return penalty
                    + self.tables[0]
                        .get([Vocabulary::UNK].as_slice())
                        .map_or(PLACEHOLDER_LOGPROB, |e| e.log_prob);
            }
            penalty += self.backoff_weight(hist);
            hist = &hist[1..];
        }
    }

    /// Log10 backoff weight of a stored context, 0 when absent.
    fn backoff_weight(&self, ctx: &[WordId]) -> f64 {
        self.tables[ctx.len() - 1]
            .get(ctx)
            .and_then(|e| e.backoff)
            .unwrap_or(0.0)
    }

    /// Log10 probability of a sentence: every token is scored in turn with
    /// sentence-begin padding, then the sentence-end transition is added.
    /// The empty sentence scores only the sentence-end transition.
    pub fn sentence_logprob<S: AsRef<str>>(&self, sentence: &[S]) -> f64 {
        let mut hist = vec![Vocabulary::BEGIN];
        let mut total = 0.0;
        for tok in sentence {
            let w = self.vocab.id_or_unknown(tok.as_ref());
            total += self.cond_logprob_ids(w, &hist);
            hist.push(w);
        }
        total + self.cond_logprob_ids(Vocabulary::END, &hist)
    }

    /// Perplexity 10^(-L/N) over a corpus, where N counts one event per
    /// token plus one sentence-end per sentence. Out-of-vocabulary tokens
    /// are scored as the unknown token and counted unless `exclude_oov`
    /// is set, in which case they advance the history but are not scored.
    pub fn perplexity(
        &self,
        corpus: &[Vec<String>],
        exclude_oov: bool,
    ) -> Result<(f64, CorpusStats), NGramError> {
        let mut log_total = 0.0;
        let mut events = 0usize;
        for sent in corpus {
            let mut hist = vec![Vocabulary::BEGIN];
            for tok in sent {
                let known = self.vocab.contains(tok);
                let w = self.vocab.id_or_unknown(tok);
                if known || !exclude_oov {
                    log_total += self.cond_logprob_ids(w, &hist);
                    events += 1;
                }
                hist.push(w);
            }
            log_total += self.cond_logprob_ids(Vocabulary::END, &hist);
            events += 1;
        }
        if events == 0 {
            return Err(NGramError::NoEvents);
        }
        let ppl = 10f64.powf(-log_total / events as f64);
        Ok((ppl, corpus_stats(corpus, self.order, &self.vocab)))
    }

    /// Copy with all n-grams of order >= 2 whose stored conditional
    /// probability falls below `threshold` removed. Unigrams are never
    /// removed, and an entry that is still the context of a surviving
    /// longer n-gram is retained so the model stays well-formed. Backoff
    /// weights of surviving contexts are recomputed so every context's
    /// distribution still sums to one.
    pub fn prune(&self, threshold: f64) -> Result<LanguageModel, NGramError> {
        prune::prune(self, threshold)
    }

    /// Iterate stored n-grams of one order as (key, entry) pairs.
    pub(crate) fn table(&self, order: usize) -> &HashMap<Box<[WordId]>, NGramEntry> {
        &self.tables[order - 1]
    }

    pub(crate) fn tables_mut(&mut self) -> &mut Vec<HashMap<Box<[WordId]>, NGramEntry>> {
        &mut self.tables
    }

    /// Stored contexts (n-grams that carry extensions) of a given length,
    /// in deterministic id order.
    pub fn stored_contexts(&self, len: usize) -> Vec<Vec<WordId>> {
        if len >= self.order {
            return Vec::new();
        }
        let mut ctxs: Vec<Vec<WordId>> = self.tables[len]
            .keys()
            .map(|k| k[..len].to_vec())
            .collect::<std::collections::HashSet<_>>()
            .into_iter()
            .collect();
        ctxs.sort();
        ctxs
    }

    /// Tokens of an n-gram key, for reporting and serialization.
    pub(crate) fn key_tokens(&self, key: &[WordId]) -> Vec<&str> {
        key.iter().map(|&id| self.vocab.word(id)).collect()
    }

    /// Recompute every backoff weight from the normalization constraint:
    /// bow(h) = (1 - sum of stored p(w|h)) / (1 - sum of p(w|h') over the
    /// same words). Processes contexts shortest-first so each level reads
    /// finalized values below it. Used after interpolation and pruning.
    #[allow(clippy::type_complexity)]
    pub(crate) fn recompute_backoffs(&mut self) {
        for t in &mut self.tables {
            for e in t.values_mut() {
                e.backoff = None;
            }
        }
        for len in 1..self.order {
            // Group extensions by context, in deterministic order so that
            // floating-point sums (and thus serialized files) are stable.
            let mut groups: HashMap<&[WordId], Vec<WordId>> = HashMap::new();
            for key in self.tables[len].keys() {
                groups.entry(&key[..len]).or_default().push(key[len]);
            }
            let mut ordered: Vec<(Vec<WordId>, Vec<WordId>)> = groups
                .into_iter()
                .map(|(ctx, mut words)| {
                    words.sort();
                    (ctx.to_vec(), words)
                })
                .collect();
            ordered.sort();

            let mut updates: Vec<(Vec<WordId>, Vec<WordId>, f64, Option<f64>)> = Vec::new();
            for (ctx, words) in &ordered {
                let mut stored_mass = 0.0;
                let mut lower_mass = 0.0;
                for &w in words {
                    let mut key = ctx.clone();
                    key.push(w);
                    stored_mass += 10f64.powf(self.tables[len][key.as_slice()].log_prob);
                    lower_mass += 10f64.powf(self.eval(&ctx[1..], w));
                }
                let d = 1.0 - lower_mass;
                if d <= 1e-9 {
                    // Context covers essentially the whole vocabulary; the
                    // backoff weight is unreachable. Rescale the stored mass
                    // to exactly one.
                    updates.push((ctx.clone(), words.clone(), 0.0, Some(-stored_mass.log10())));
                } else {
                    let mut s = stored_mass;
                    let mut rescale = None;
                    if s >= 1.0 - 1e-12 {
                        // Leave a sliver of mass for the backoff path.
                        let target = 1.0 - 1e-7;
                        rescale = Some((target / s).log10());
                        s = target;
                    }
                    updates.push((ctx.clone(), words.clone(), ((1.0 - s) / d).log10(), rescale));
                }
            }
            for (ctx, words, bow, rescale) in updates {
                if let Some(delta) = rescale {
                    for w in words {
                        let mut key = ctx.clone();
                        key.push(w);
                        if let Some(e) = self.tables[len].get_mut(key.as_slice()) {
                            e.log_prob += delta;
                        }
                    }
                }
                let entry = self.tables[len - 1]
                    .get_mut(ctx.as_slice())
                    .expect("context of a stored n-gram is itself stored");
                entry.backoff = Some(bow);
            }
        }
    }
}

struct ContextStat {
    total: u64,
    types: u64,
}

/// N-gram window counts over a padded corpus.
struct Counts {
    /// grams[k-1]: count of each k-gram window.
    grams: Vec<HashMap<Box<[WordId]>, u64>>,
    /// contexts[len]: total and distinct-continuation counts per context.
    contexts: Vec<HashMap<Box<[WordId]>, ContextStat>>,
}

impl Counts {
    fn collect(corpus: &[Vec<String>], order: usize, vocab: &Vocabulary) -> Counts {
        let mut grams: Vec<HashMap<Box<[WordId]>, u64>> =
            (0..order).map(|_| HashMap::new()).collect();
        for sent in corpus {
            let mut padded = Vec::with_capacity(sent.len() + 2);
            padded.push(Vocabulary::BEGIN);
            padded.extend(sent.iter().map(|t| vocab.id_or_unknown(t)));
            padded.push(Vocabulary::END);
            // Windows ending at each predicted position (everything after
            // the sentence-begin pad).
            for i in 1..padded.len() {
                for k in 1..=order.min(i + 1) {
                    let window = &padded[i + 1 - k..=i];
                    *grams[k - 1].entry(Box::from(window)).or_insert(0) += 1;
                }
            }
        }
        let mut contexts: Vec<HashMap<Box<[WordId]>, ContextStat>> =
            (0..order).map(|_| HashMap::new()).collect();
        for (k, table) in grams.iter().enumerate() {
            for (key, &c) in table {
                let stat = contexts[k]
                    .entry(Box::from(&key[..k]))
                    .or_insert(ContextStat { total: 0, types: 0 });
                stat.total += c;
                stat.types += 1;
            }
        }
        Counts { grams, contexts }
    }

    fn gram_count(&self, key: &[WordId]) -> u64 {
        self.grams[key.len() - 1].get(key).copied().unwrap_or(0)
    }

    fn grams(&self, order: usize) -> impl Iterator<Item = (&Box<[WordId]>, &u64)> {
        self.grams[order - 1].iter()
    }

    fn contexts(&self, len: usize) -> impl Iterator<Item = (&Box<[WordId]>, &ContextStat)> {
        self.contexts[len].iter()
    }

    fn context_stat(&self, ctx: &[WordId]) -> &ContextStat {
        self.contexts[ctx.len()]
            .get(ctx)
            .expect("context was counted")
    }
}

/// Counts describing `corpus` as seen by a model of the given order and
/// vocabulary: sentence/token/OOV totals plus distinct n-grams per order.
pub fn corpus_stats(corpus: &[Vec<String>], order: usize, vocab: &Vocabulary) -> CorpusStats {
    let counts = Counts::collect(corpus, order, vocab);
    CorpusStats {
        sentences: corpus.len(),
        tokens: corpus.iter().map(|s| s.len()).sum(),
        oov_tokens: corpus
            .iter()
            .flatten()
            .filter(|t| !vocab.contains(t))
            .count(),
        ngram_types: counts.grams.iter().map(|t| t.len()).collect(),
    }
}

/// Read a training corpus: UTF-8 text, one sentence per line,
/// whitespace-delimited tokens, blank lines skipped.
pub fn read_corpus<R: io::BufRead>(reader: R) -> io::Result<Vec<Vec<String>>> {
    let mut corpus = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if !tokens.is_empty() {
            corpus.push(tokens);
        }
    }
    Ok(corpus)
}

/// Parse an in-memory corpus in the same format as `read_corpus`.
pub fn parse_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|s: &Vec<String>| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests;
