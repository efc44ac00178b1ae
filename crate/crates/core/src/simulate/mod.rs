//! Seeded lattice simulation: generates noise-controlled word lattices from
//! reference transcripts, standing in for an acoustic model and first-pass
//! decoder. Generation is fully deterministic per (config, reference) and
//! portable across platforms (see `rng`).

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead};

use thiserror::Error;

use crate::lattice::{Lattice, NodeId};
use crate::ngram::LanguageModel;
use crate::rng::Xoshiro256StarStar;
use crate::vocab::Vocabulary;

/// Acoustic penalty applied to deletion (skip) arcs.
const DELETION_PENALTY: f64 = -1.0;
/// Acoustic penalty applied to inserted-word arcs.
const INSERTION_PENALTY: f64 = -1.0;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("reference word {0:?} is not in the generator vocabulary")]
    OovReference(String),
    #[error("confusable {confusable:?} for {word:?} is not in the generator vocabulary")]
    OovConfusable { word: String, confusable: String },
    #[error("rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error("acoustic penalty {0} must be non-positive")]
    InvalidPenalty(f64),
    #[error("noise spread {0} must be non-negative")]
    InvalidSpread(f64),
    #[error("max alternatives must be at least 1")]
    InvalidMaxAlternatives,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Substitution/insertion/deletion noise specification.
#[derive(Debug, Clone, Default)]
pub struct ConfusionModel {
    substitutions: HashMap<String, Vec<(String, f64)>>,
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
    /// Half-width of the uniform perturbation added to every acoustic score.
    pub noise_spread: f64,
}

impl ConfusionModel {
    pub fn new(
        substitution_rate: f64,
        insertion_rate: f64,
        deletion_rate: f64,
        noise_spread: f64,
    ) -> Result<ConfusionModel, SimulateError> {
        for rate in [substitution_rate, insertion_rate, deletion_rate] {
            if !(0.0..=1.0).contains(&rate) || rate.is_nan() {
                return Err(SimulateError::InvalidRate(rate));
            }
        }
        if noise_spread < 0.0 || !noise_spread.is_finite() {
            return Err(SimulateError::InvalidSpread(noise_spread));
        }
        Ok(ConfusionModel {
            substitutions: HashMap::new(),
            substitution_rate,
            insertion_rate,
            deletion_rate,
            noise_spread,
        })
    }

    /// Register a confusable with its log10 acoustic penalty (non-positive).
    pub fn add_confusion(
        &mut self,
        word: impl Into<String>,
        confusable: impl Into<String>,
        penalty: f64,
    ) -> Result<(), SimulateError> {
        if penalty > 0.0 || !penalty.is_finite() {
            return Err(SimulateError::InvalidPenalty(penalty));
        }
        self.substitutions
            .entry(word.into())
            .or_default()
            .push((confusable.into(), penalty));
        Ok(())
    }

    pub fn confusables(&self, word: &str) -> &[(String, f64)] {
        self.substitutions.get(word).map_or(&[], |v| v.as_slice())
    }

    /// All words appearing in the table, as sources or confusables.
    pub fn words(&self) -> BTreeSet<String> {
        let mut words = BTreeSet::new();
        for (w, confusables) in &self.substitutions {
            words.insert(w.clone());
            for (c, _) in confusables {
                words.insert(c.clone());
            }
        }
        words
    }

    /// Load confusion entries from text: `word confusable penalty` per
    /// line, blank lines skipped. Rates and spread stay as configured.
    pub fn load_table<R: BufRead>(&mut self, reader: R) -> Result<(), SimulateError> {
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 3 {
                return Err(SimulateError::Parse {
                    line: lineno,
                    msg: format!("expected 'word confusable penalty', found {line:?}"),
                });
            }
            let penalty: f64 = fields[2].parse().map_err(|_| SimulateError::Parse {
                line: lineno,
                msg: format!("non-numeric penalty {:?}", fields[2]),
            })?;
            self.add_confusion(fields[0], fields[1], penalty)
                .map_err(|e| SimulateError::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
        }
        Ok(())
    }

    /// Check that every confusable belongs to the vocabulary.
    fn check_vocabulary(&self, vocabulary: &BTreeSet<String>) -> Result<(), SimulateError> {
        for (word, confusables) in &self.substitutions {
            for (c, _) in confusables {
                if !vocabulary.contains(c) {
                    return Err(SimulateError::OovConfusable {
                        word: word.clone(),
                        confusable: c.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Seed, branching cap, and vocabulary for lattice generation.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Upper bound on word choices per reference position (true word plus
    /// up to max_alternatives - 1 confusables).
    pub max_alternatives: usize,
    pub vocabulary: BTreeSet<String>,
}

impl GeneratorConfig {
    pub fn new(
        seed: u64,
        max_alternatives: usize,
        vocabulary: BTreeSet<String>,
    ) -> Result<GeneratorConfig, SimulateError> {
        if max_alternatives < 1 {
            return Err(SimulateError::InvalidMaxAlternatives);
        }
        Ok(GeneratorConfig {
            seed,
            max_alternatives,
            vocabulary,
        })
    }
}

/// Generate a sausage-shaped lattice around the reference: per position the
/// true word plus up to max_alternatives - 1 confusables, optional skip
/// arcs (deletions) and insertion branches, all acoustic scores perturbed
/// by seeded uniform noise in [-spread, +spread]. The reference word
/// sequence is always a complete path, and `lm_score` fields start at 0.
///
/// Random draws are consumed in a fixed order per position i:
/// 1. noise for the true-word arc;
/// 2. the substitution decision, then one noise draw per emitted confusable
///    (the first max_alternatives - 1 table entries, in table order);
/// 3. when position i+1 exists: the deletion decision, then one noise draw
///    for the skip arc if it fires;
/// 4. the insertion decision, then the inserted-word index and two noise
///    draws (branch re-emission of the true word, then the inserted word)
///    if it fires.
pub fn gen_lattice(
    utt_id: &str,
    reference: &[String],
    noise: &ConfusionModel,
    cfg: &GeneratorConfig,
) -> Result<Lattice, SimulateError> {
    if reference.is_empty() {
        return Err(SimulateError::EmptyReference);
    }
    for w in reference {
        if !cfg.vocabulary.contains(w) {
            return Err(SimulateError::OovReference(w.clone()));
        }
    }
    noise.check_vocabulary(&cfg.vocabulary)?;
    let vocab_words: Vec<&String> = cfg.vocabulary.iter().collect();

    let mut rng = Xoshiro256StarStar::seed_from_u64(cfg.seed);
    let perturb =
        |rng: &mut Xoshiro256StarStar| -> f64 { (2.0 * rng.next_f64() - 1.0) * noise.noise_spread };

    let len = reference.len();
    // Backbone nodes 0..=len; branch nodes appended afterwards.
    let mut extra_nodes = 0usize;
    let mut arcs: Vec<(usize, usize, String, f64)> = Vec::new();

    for (i, word) in reference.iter().enumerate() {
        // True word.
        let am = perturb(&mut rng);
        arcs.push((i, i + 1, word.clone(), am));

        // Confusable alternatives.
        if rng.next_f64() < noise.substitution_rate {
            for (confusable, penalty) in noise
                .confusables(word)
                .iter()
                .take(cfg.max_alternatives.saturating_sub(1))
            {
                let am = penalty + perturb(&mut rng);
                arcs.push((i, i + 1, confusable.clone(), am));
            }
        }

        // Deletion: a skip arc that covers the next position's word while
        // jumping over this one.
        if i + 1 < len && rng.next_f64() < noise.deletion_rate {
            let am = DELETION_PENALTY + perturb(&mut rng);
            arcs.push((i, i + 2, reference[i + 1].clone(), am));
        }

        // Insertion: a two-arc branch re-emitting the true word and then an
        // extra vocabulary word.
        if rng.next_f64() < noise.insertion_rate {
            let pick = rng.next_index(vocab_words.len());
            let branch = len + 1 + extra_nodes;
            extra_nodes += 1;
            let am_true = perturb(&mut rng);
            let am_ins = INSERTION_PENALTY + perturb(&mut rng);
            arcs.push((i, branch, word.clone(), am_true));
            arcs.push((branch, i + 1, vocab_words[pick].clone(), am_ins));
        }
    }

    let mut lat = Lattice::new(utt_id, len + 1 + extra_nodes, NodeId(0));
    for (from, to, word, am) in arcs {
        lat.add_arc(NodeId(from as u32), NodeId(to as u32), word, am, 0.0);
    }
    lat.set_final(NodeId(len as u32));
    Ok(lat)
}

/// Draw sentences from the model by sequential sampling until sentence-end
/// (hard cap 50 tokens). Deterministic per seed; one generator stream
/// serves all n sentences. Each position consumes exactly one draw.
pub fn sample_sentences(lm: &LanguageModel, n: usize, seed: u64) -> Vec<Vec<String>> {
    const MAX_TOKENS: usize = 50;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let predicted: Vec<crate::vocab::WordId> = lm.vocab().predicted_ids().collect();
    let mut sentences = Vec::with_capacity(n);
    for _ in 0..n {
        let mut hist = vec![Vocabulary::BEGIN];
        let mut words = Vec::new();
        while words.len() < MAX_TOKENS {
            let u = rng.next_f64();
            let mut cumulative = 0.0;
            let mut picked = *predicted.last().expect("vocabulary is never empty");
            for &w in &predicted {
                cumulative += 10f64.powf(lm.cond_logprob_ids(w, &hist));
                if u < cumulative {
                    picked = w;
                    break;
                }
            }
            if picked == Vocabulary::END {
                break;
            }
            words.push(lm.vocab().word(picked).to_string());
            hist.push(picked);
        }
        sentences.push(words);
    }
    sentences
}
