//! Scoring: word error rate with an alignment breakdown, foreign-word
//! correct rate, and implicit language-identification accuracy.
//!
//! All functions are pure; batch callers may parallelize per utterance as
//! long as they aggregate in input order.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("aligned lists differ in length ({refs} references vs {others} others)")]
    LengthMismatch { refs: usize, others: usize },
}

/// Edit counts from the minimal alignment of one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WerBreakdown {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl WerBreakdown {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// 100 * (S + I + D) / N.
    pub fn wer(&self) -> f64 {
        100.0 * self.errors() as f64 / self.ref_len as f64
    }
}

/// One aligned step between reference and hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    /// Identical tokens at (ref index, hyp index).
    Match(usize, usize),
    /// Differing tokens at (ref index, hyp index).
    Substitute(usize, usize),
    /// Reference token at this index has no hypothesis counterpart.
    Delete(usize),
    /// Hypothesis token at this index has no reference counterpart.
    Insert(usize),
}

/// Minimal-edit alignment with unit costs. Among minimal alignments the
/// one with fewer substitutions, then fewer deletions, is chosen, so
/// breakdowns are reproducible.
pub fn wer<S: AsRef<str>, T: AsRef<str>>(
    reference: &[S],
    hypothesis: &[T],
) -> Result<WerBreakdown, EvalError> {
    Ok(wer_alignment(reference, hypothesis)?.0)
}

pub fn wer_alignment<S: AsRef<str>, T: AsRef<str>>(
    reference: &[S],
    hypothesis: &[T],
) -> Result<(WerBreakdown, Vec<AlignOp>), EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let n = reference.len();
    let m = hypothesis.len();

    // Cost tuples (edits, substitutions, deletions), compared
    // lexicographically; additive, so plain DP minimization is exact.
    type Cost = (usize, usize, usize);
    let add = |a: Cost, b: Cost| (a.0 + b.0, a.1 + b.1, a.2 + b.2);
    let mut dp = vec![vec![(0usize, 0usize, 0usize); m + 1]; n + 1];
    for i in 1..=n {
        dp[i][0] = (i, 0, i);
    }
    for j in 1..=m {
        dp[0][j] = (j, 0, 0);
    }
    for i in 1..=n {
        for j in 1..=m {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let diag = add(dp[i - 1][j - 1], if same { (0, 0, 0) } else { (1, 1, 0) });
            let del = add(dp[i - 1][j], (1, 0, 1));
            let ins = add(dp[i][j - 1], (1, 0, 0));
            dp[i][j] = diag.min(del).min(ins);
        }
    }

    // Backtrace, preferring match, then substitution, deletion, insertion.
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i][j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let step = if same { (0, 0, 0) } else { (1, 1, 0) };
            if add(dp[i - 1][j - 1], step) == here {
                ops.push(if same {
                    AlignOp::Match(i - 1, j - 1)
                } else {
                    AlignOp::Substitute(i - 1, j - 1)
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && add(dp[i - 1][j], (1, 0, 1)) == here {
            ops.push(AlignOp::Delete(i - 1));
            i -= 1;
            continue;
        }
        ops.push(AlignOp::Insert(j - 1));
        j -= 1;
    }
    ops.reverse();

    let (edits, subs, dels) = dp[n][m];
    let breakdown = WerBreakdown {
        substitutions: subs,
        insertions: edits - subs - dels,
        deletions: dels,
        ref_len: n,
    };
    Ok((breakdown, ops))
}

/// Correct/total counts over foreign-list tokens in the references.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForeignWordStats {
    pub correct: usize,
    pub total: usize,
}

impl ForeignWordStats {
    /// Fraction correct; `None` when the references contain no foreign tokens.
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Over all foreign-list tokens in the references, the fraction aligned
/// (via the `wer` alignment) to an identical hypothesis token.
pub fn foreign_word_accuracy(
    refs: &[Vec<String>],
    hyps: &[Vec<String>],
    foreign: &BTreeSet<String>,
) -> Result<ForeignWordStats, EvalError> {
    if refs.len() != hyps.len() {
        return Err(EvalError::LengthMismatch {
            refs: refs.len(),
            others: hyps.len(),
        });
    }
    let mut stats = ForeignWordStats {
        correct: 0,
        total: 0,
    };
    for (r, h) in refs.iter().zip(hyps) {
        let (_, ops) = wer_alignment(r, h)?;
        for op in ops {
            let (ri, matched) = match op {
                AlignOp::Match(ri, _) => (ri, true),
                AlignOp::Substitute(ri, _) | AlignOp::Delete(ri) => (ri, false),
                AlignOp::Insert(_) => continue,
            };
            if foreign.contains(&r[ri]) {
                stats.total += 1;
                stats.correct += matched as usize;
            }
        }
    }
    Ok(stats)
}

/// Language-selection accuracy against truth labels, with per-pair
/// confusion counts keyed (truth, selected).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionAccuracy {
    pub correct: usize,
    pub total: usize,
    pub confusion: BTreeMap<(usize, usize), usize>,
}

impl SelectionAccuracy {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.correct as f64 / self.total as f64
    }
}

pub fn selection_accuracy(
    selected: &[usize],
    truth: &[usize],
) -> Result<SelectionAccuracy, EvalError> {
    if selected.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            refs: truth.len(),
            others: selected.len(),
        });
    }
    let mut acc = SelectionAccuracy {
        correct: 0,
        total: selected.len(),
        confusion: BTreeMap::new(),
    };
    for (&s, &t) in selected.iter().zip(truth) {
        if s == t {
            acc.correct += 1;
        }
        *acc.confusion.entry((t, s)).or_insert(0) += 1;
    }
    Ok(acc)
}

/// Per-utterance scoring row.
#[derive(Debug, Clone)]
pub struct UttEval {
    pub utt_id: String,
    pub breakdown: WerBreakdown,
    pub selected_language: Option<usize>,
    pub truth_language: Option<usize>,
}

/// Batch report: per-utterance rows plus pooled aggregates.
#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub rows: Vec<UttEval>,
    pub selection: Option<SelectionAccuracy>,
    pub foreign_words: Option<ForeignWordStats>,
}

impl EvalReport {
    /// Pooled WER: total errors over total reference tokens (not the mean
    /// of per-utterance rates).
    pub fn aggregate_wer(&self) -> f64 {
        let errors: usize = self.rows.iter().map(|r| r.breakdown.errors()).sum();
        let tokens: usize = self.rows.iter().map(|r| r.breakdown.ref_len).sum();
        if tokens == 0 {
            return 0.0;
        }
        100.0 * errors as f64 / tokens as f64
    }

    /// Machine-readable rows: utt-id, ref-len, S, I, D, wer,
    /// selected-language, truth-language; tab-separated, `-` for absent.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "utt_id\tref_len\tsub\tins\tdel\twer\tselected\ttruth")?;
        for row in &self.rows {
            let sel = row
                .selected_language
                .map_or("-".to_string(), |l| l.to_string());
            let truth = row
                .truth_language
                .map_or("-".to_string(), |l| l.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{}\t{}",
                row.utt_id,
                row.breakdown.ref_len,
                row.breakdown.substitutions,
                row.breakdown.insertions,
                row.breakdown.deletions,
                row.breakdown.wer(),
                sel,
                truth
            )?;
        }
        Ok(())
    }

    /// Human-readable summary table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<16} {:>7} {:>5} {:>5} {:>5} {:>8}\n",
            "utt-id", "ref", "sub", "ins", "del", "wer%"
        ));
        for row in &self.rows {
            s.push_str(&format!(
                "{:<16} {:>7} {:>5} {:>5} {:>5} {:>8.2}\n",
                row.utt_id,
                row.breakdown.ref_len,
                row.breakdown.substitutions,
                row.breakdown.insertions,
                row.breakdown.deletions,
                row.breakdown.wer()
            ));
        }
        s.push_str(&format!("aggregate WER: {:.2}%\n", self.aggregate_wer()));
        if let Some(sel) = &self.selection {
            s.push_str(&format!(
                "selection accuracy: {:.2}% ({}/{})\n",
                100.0 * sel.fraction(),
                sel.correct,
                sel.total
            ));
        }
        if let Some(fw) = &self.foreign_words {
            match fw.fraction() {
                Some(f) => s.push_str(&format!(
                    "foreign-word correct rate: {:.2}% ({}/{})\n",
                    100.0 * f,
                    fw.correct,
                    fw.total
                )),
                None => s.push_str("foreign-word correct rate: n/a (no foreign tokens)\n"),
            }
        }
        s
    }
}
