//! The identifier-free decoding pipeline: a first pass weights the lattice
//! with the multilingual model, every per-language model then rescores that
//! lattice and contributes its best path as a candidate, and the output is
//! the candidate whose own model assigns it the highest sentence
//! probability (the language score). No language identifier is involved.
//!
//! Per-language branches are independent; they are evaluated in model order
//! so results are deterministic, and all models are shared read-only.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{best_path, rescore, Lattice, LatticeError, ScoreConfig};
use crate::ngram::LanguageModel;

/// Candidates whose top-two language scores differ by less than this many
/// log10 units are flagged as low-margin; typical for very short
/// utterances made of cross-language homographs.
pub const LOW_MARGIN_LOG10: f64 = 1.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("pipeline needs at least one per-language model")]
    NoLanguageModels,
}

/// One language's best-path sentence with its language score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    /// Index into the configured model list.
    pub language_id: usize,
    pub words: Vec<String>,
    /// log10 sentence probability under this language's model.
    pub language_score: f64,
    /// Combined lattice score of the extracted path.
    pub combined_lattice_score: f64,
}

/// Models and scales for the full pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Multilingual model used by the first pass.
    pub lm0: LanguageModel,
    /// Per-language models, in language-id order.
    pub lms: Vec<LanguageModel>,
    pub first_pass: ScoreConfig,
    pub rescoring: ScoreConfig,
    /// Compare language scores divided by (word count + 1) instead of raw.
    /// Off by default: raw scores are the method under test.
    pub normalize_by_length: bool,
}

impl PipelineConfig {
    pub fn new(
        lm0: LanguageModel,
        lms: Vec<LanguageModel>,
    ) -> Result<PipelineConfig, PipelineError> {
        if lms.is_empty() {
            return Err(PipelineError::NoLanguageModels);
        }
        Ok(PipelineConfig {
            lm0,
            lms,
            first_pass: ScoreConfig::default(),
            rescoring: ScoreConfig::default(),
            normalize_by_length: false,
        })
    }
}

/// Wall-clock per pipeline stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub first_pass: Duration,
    pub rescoring: Duration,
    pub selection: Duration,
}

/// Full decoding outcome for one utterance.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub selected: Candidate,
    pub all_candidates: Vec<Candidate>,
    /// Best path after the first pass, before per-language rescoring.
    pub first_pass_words: Vec<String>,
    pub timings: StageTimings,
    /// Top-two language scores closer than `LOW_MARGIN_LOG10`.
    pub low_margin: bool,
    /// Gap between the two best compared scores; `None` with one language.
    pub margin: Option<f64>,
}

/// First pass: weight the lattice with the multilingual model. The output
/// stands in for the lattice a first decoding pass would produce.
pub fn first_pass(lat: &Lattice, cfg: &PipelineConfig) -> Result<Lattice, PipelineError> {
    Ok(rescore(lat, &cfg.lm0)?)
}

/// Rescore the first-pass lattice with every per-language model and take
/// each best path: candidate i carries that path's words and its sentence
/// log-probability under model i.
pub fn candidates(lat0: &Lattice, cfg: &PipelineConfig) -> Result<Vec<Candidate>, PipelineError> {
    let mut out = Vec::with_capacity(cfg.lms.len());
    for (language_id, lm) in cfg.lms.iter().enumerate() {
        let rescored = rescore(lat0, lm)?;
        let path = best_path(&rescored, &cfg.rescoring)?;
        let language_score = lm.sentence_logprob(&path.words);
        out.push(Candidate {
            language_id,
            words: path.words,
            language_score,
            combined_lattice_score: path.combined,
        });
    }
    Ok(out)
}

fn compared_score(c: &Candidate, normalize: bool) -> f64 {
    if normalize {
        c.language_score / (c.words.len() + 1) as f64
    } else {
        c.language_score
    }
}

/// Index of the candidate with the maximal language score; ties break to
/// the smallest language id.
pub fn select(cands: &[Candidate], normalize: bool) -> Result<usize, PipelineError> {
    if cands.is_empty() {
        return Err(PipelineError::EmptyCandidates);
    }
    let mut winner = 0usize;
    for (i, c) in cands.iter().enumerate().skip(1) {
        if compared_score(c, normalize) > compared_score(&cands[winner], normalize) {
            winner = i;
        }
    }
    Ok(winner)
}

/// Full pipeline: first pass, per-language candidates, selection.
/// Deterministic for fixed inputs.
pub fn decode(lat: &Lattice, cfg: &PipelineConfig) -> Result<DecodeResult, PipelineError> {
    let t0 = Instant::now();
    let lat0 = first_pass(lat, cfg)?;
    let first_pass_path = best_path(&lat0, &cfg.first_pass)?;
    let first_pass_time = t0.elapsed();

    let t1 = Instant::now();
    let all_candidates = candidates(&lat0, cfg)?;
    let rescoring_time = t1.elapsed();

    let t2 = Instant::now();
    let winner = select(&all_candidates, cfg.normalize_by_length)?;
    let mut compared: Vec<f64> = all_candidates
        .iter()
        .map(|c| compared_score(c, cfg.normalize_by_length))
        .collect();
    compared.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    let margin = (compared.len() > 1).then(|| compared[0] - compared[1]);
    let low_margin = margin.is_some_and(|m| m < LOW_MARGIN_LOG10);
    let selection_time = t2.elapsed();

    Ok(DecodeResult {
        selected: all_candidates[winner].clone(),
        all_candidates,
        first_pass_words: first_pass_path.words,
        timings: StageTimings {
            first_pass: first_pass_time,
            rescoring: rescoring_time,
            selection: selection_time,
        },
        low_margin,
        margin,
    })
}

/// One line per utterance:
/// `<utt-id> <selected-language> <scores comma-separated> <words...>`.
pub fn format_record(utt_id: &str, result: &DecodeResult) -> String {
    let scores: Vec<String> = result
        .all_candidates
        .iter()
        .map(|c| format!("{:.6}", c.language_score))
        .collect();
    let mut line = format!(
        "{} {} {}",
        utt_id,
        result.selected.language_id,
        scores.join(",")
    );
    for w in &result.selected.words {
        line.push(' ');
        line.push_str(w);
    }
    line
}

/// Parsed form of a `format_record` line.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeRecord {
    pub utt_id: String,
    pub selected_language: usize,
    pub language_scores: Vec<f64>,
    pub words: Vec<String>,
}

pub fn parse_record(line: &str) -> Option<DecodeRecord> {
    let mut fields = line.split_whitespace();
    let utt_id = fields.next()?.to_string();
    let selected_language = fields.next()?.parse().ok()?;
    let language_scores: Vec<f64> = fields
        .next()?
        .split(',')
        .map(|s| s.parse().ok())
        .collect::<Option<_>>()?;
    let words = fields.map(str::to_string).collect();
    Some(DecodeRecord {
        utt_id,
        selected_language,
        language_scores,
        words,
    })
}

/// Structured per-batch report listing every candidate.
#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub utterances: Vec<UttReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UttReport {
    pub utt_id: String,
    pub selected_language: usize,
    pub low_margin: bool,
    pub margin: Option<f64>,
    pub first_pass_words: Vec<String>,
    pub candidates: Vec<Candidate>,
}

impl UttReport {
    pub fn from_result(utt_id: &str, result: &DecodeResult) -> UttReport {
        UttReport {
            utt_id: utt_id.to_string(),
            selected_language: result.selected.language_id,
            low_margin: result.low_margin,
            margin: result.margin,
            first_pass_words: result.first_pass_words.clone(),
            candidates: result.all_candidates.clone(),
        }
    }
}
