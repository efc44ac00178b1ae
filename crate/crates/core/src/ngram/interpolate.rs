//! Static linear interpolation of two backoff models.

use std::collections::{HashMap, HashSet};

use super::{LanguageModel, NGramEntry, NGramError, PLACEHOLDER_LOGPROB};
use crate::vocab::{Vocabulary, WordId};

/// Merge two models into one of order max(a, b) over the union vocabulary.
/// Every n-gram stored in either model is stored in the result with
/// probability alpha * p_a(w|h) + (1 - alpha) * p_b(w|h), where each side is
/// that model's full backoff evaluation (out-of-vocabulary tokens resolving
/// to its unknown token). The unigram distribution is renormalized over the
/// union vocabulary and backoff weights are recomputed per context, so the
/// merged model normalizes exactly at stored n-grams; elsewhere it is the
/// usual backoff approximation of the mixture.
pub fn interpolate(
    a: &LanguageModel,
    b: &LanguageModel,
    alpha: f64,
) -> Result<LanguageModel, NGramError> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(NGramError::InvalidAlpha(alpha));
    }
    let vocab = Vocabulary::union(a.vocab(), b.vocab());
    let order = a.order().max(b.order());

    let mut tables: Vec<HashMap<Box<[WordId]>, NGramEntry>> = Vec::with_capacity(order);
    for k in 1..=order {
        let mut keys: HashSet<Box<[WordId]>> = HashSet::new();
        for src in [a, b] {
            if k <= src.order() {
                for key in src.table(k).keys() {
                    let translated: Vec<WordId> = key
                        .iter()
                        .map(|&id| {
                            vocab
                                .id(src.vocab().word(id))
                                .expect("union vocabulary covers both models")
                        })
                        .collect();
                    keys.insert(translated.into_boxed_slice());
                }
            }
        }
        let mut table = HashMap::with_capacity(keys.len());
        for key in keys {
            let tokens: Vec<&str> = key.iter().map(|&id| vocab.word(id)).collect();
            let (hist, word) = tokens.split_at(tokens.len() - 1);
            let p = alpha * 10f64.powf(a.cond_logprob(word[0], hist))
                + (1.0 - alpha) * 10f64.powf(b.cond_logprob(word[0], hist));
            table.insert(
                key,
                NGramEntry {
                    log_prob: p.log10(),
                    backoff: None,
                },
            );
        }
        tables.push(table);
    }

    // Every predictable union word carries a unigram so queries always
    // terminate; fill any gap with the mixture value directly.
    let mut unigrams: Vec<WordId> = vocab.predicted_ids().collect();
    unigrams.sort();
    for &w in &unigrams {
        if !tables[0].contains_key([w].as_slice()) {
            let word = vocab.word(w);
            let p = alpha * 10f64.powf(a.cond_logprob::<&str>(word, &[]))
                + (1.0 - alpha) * 10f64.powf(b.cond_logprob::<&str>(word, &[]));
            tables[0].insert(
                Box::from([w].as_slice()),
                NGramEntry {
                    log_prob: p.log10(),
                    backoff: None,
                },
            );
        }
    }

    // Sentence-begin keeps its placeholder and stays out of the mass.
    tables[0].insert(
        Box::from([Vocabulary::BEGIN].as_slice()),
        NGramEntry {
            log_prob: PLACEHOLDER_LOGPROB,
            backoff: None,
        },
    );

    // The union can count one model's unknown-token mass once per word that
    // is missing from it, so the unigram level needs explicit renormalization.
    let mut mass = 0.0;
    for &w in &unigrams {
        mass += 10f64.powf(tables[0][[w].as_slice()].log_prob);
    }
    let correction = mass.log10();
    for &w in &unigrams {
        if let Some(e) = tables[0].get_mut([w].as_slice()) {
            e.log_prob -= correction;
        }
    }

    let name = match (a.name().is_empty(), b.name().is_empty()) {
        (false, false) => format!("{}+{}", a.name(), b.name()),
        _ => String::new(),
    };
    let mut lm = LanguageModel::from_parts(name, order, vocab, tables);
    lm.recompute_backoffs();
    Ok(lm)
}

/// Query-time mixture of two models, used as an independent oracle by the
/// test suite: alpha * p_a + (1 - alpha) * p_b evaluated directly, with no
/// static merge involved.
pub fn mixture_logprob<S: AsRef<str>>(
    a: &LanguageModel,
    b: &LanguageModel,
    alpha: f64,
    word: &str,
    history: &[S],
) -> f64 {
    let p = alpha * 10f64.powf(a.cond_logprob(word, history))
        + (1.0 - alpha) * 10f64.powf(b.cond_logprob(word, history));
    p.log10()
}
