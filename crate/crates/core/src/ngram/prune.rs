//! Threshold pruning of stored n-grams.

use std::collections::HashSet;

use super::{LanguageModel, NGramError};
use crate::vocab::WordId;

pub(super) fn prune(lm: &LanguageModel, threshold: f64) -> Result<LanguageModel, NGramError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(NGramError::InvalidThreshold(threshold));
    }
    let log_threshold = threshold.log10();
    let mut pruned = lm.clone();
    let order = pruned.order();

    // Highest order first, so an entry is only protected while some longer
    // n-gram still needs it as a context.
    let mut removed = 0usize;
    for k in (2..=order).rev() {
        let protected: HashSet<Box<[WordId]>> = if k < order {
            pruned.tables_mut()[k]
                .keys()
                .map(|key| Box::from(&key[..k]))
                .collect()
        } else {
            HashSet::new()
        };
        let table = &mut pruned.tables_mut()[k - 1];
        let before = table.len();
        table.retain(|key, entry| {
            entry.log_prob >= log_threshold || protected.contains(key.as_ref())
        });
        removed += before - table.len();
    }

    if removed == 0 {
        // Entry-for-entry identical copy, backoff weights untouched.
        return Ok(pruned);
    }
    pruned.recompute_backoffs();
    Ok(pruned)
}
