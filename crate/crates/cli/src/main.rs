//! `langsel`: one binary for the full lifecycle — train, interpolate,
//! prune, and evaluate n-gram models; generate simulated lattices; run the
//! identifier-free decoding pipeline; and score the results.
//!
//! Exit codes: 0 success, 1 computation or validation failure, 2 usage or
//! I/O failure. Every run writes a manifest; `langsel rerun <manifest>`
//! re-executes a recorded run, and deterministic subcommands reproduce
//! their outputs byte for byte.

mod commands;
mod files;
mod manifest;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Domain(#[from] anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io { .. } => ExitCode::from(2),
            CliError::Domain(_) => ExitCode::from(1),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "langsel",
    version,
    about = "Multilingual lattice decoding with language-score output selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Train a backoff n-gram model and write it in ARPA format
    LmTrain(LmTrainArgs),
    /// Linearly interpolate two ARPA models
    LmInterp(LmInterpArgs),
    /// Remove low-probability n-grams from an ARPA model
    LmPrune(LmPruneArgs),
    /// Report perplexity of an ARPA model on a corpus
    LmPpl(LmPplArgs),
    /// Generate seeded noisy lattices from reference transcripts
    Gen(GenArgs),
    /// Decode lattices: first pass, per-language rescoring, selection
    Decode(DecodeArgs),
    /// Score hypotheses against references
    Score(ScoreArgs),
    /// Re-execute a run recorded in a manifest
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LmTrainArgs {
    /// Training corpus: one sentence per line, whitespace-tokenized
    #[arg(long)]
    pub corpus: PathBuf,
    /// N-gram order
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Restrict the vocabulary to the words in this file (one per line);
    /// other corpus tokens count as the unknown token
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output ARPA path
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LmInterpArgs {
    /// First ARPA model (weight alpha)
    #[arg(long)]
    pub lm_a: PathBuf,
    /// Second ARPA model (weight 1 - alpha)
    #[arg(long)]
    pub lm_b: PathBuf,
    /// Interpolation weight of the first model
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Output ARPA path
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LmPruneArgs {
    /// Input ARPA model
    #[arg(long)]
    pub lm: PathBuf,
    /// Conditional-probability cutoff; entries below it are removed
    #[arg(long, default_value_t = 2e-8)]
    pub threshold: f64,
    /// Output ARPA path
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LmPplArgs {
    /// ARPA model to evaluate
    #[arg(long)]
    pub lm: PathBuf,
    /// Evaluation corpus: one sentence per line
    #[arg(long)]
    pub corpus: PathBuf,
    /// Skip out-of-vocabulary tokens instead of scoring them as unknown
    #[arg(long, default_value_t = false)]
    pub exclude_oov: bool,
    /// Manifest path (default: lm-ppl.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// Reference transcripts: `<utt-id> <words...>` per line
    #[arg(long)]
    pub refs: PathBuf,
    /// Confusion table: `word confusable penalty` per line
    #[arg(long)]
    pub confusion: PathBuf,
    /// Generator seed; utterance i uses seed + i
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Substitution probability per position
    #[arg(long, default_value_t = 0.0)]
    pub sub_rate: f64,
    /// Insertion probability per position
    #[arg(long, default_value_t = 0.0)]
    pub ins_rate: f64,
    /// Deletion probability per position
    #[arg(long, default_value_t = 0.0)]
    pub del_rate: f64,
    /// Half-width of the uniform acoustic noise
    #[arg(long, default_value_t = 0.0)]
    pub spread: f64,
    /// Maximum word choices per position
    #[arg(long, default_value_t = 2)]
    pub max_alternatives: usize,
    /// Generator vocabulary (one word per line); defaults to all words in
    /// the references and the confusion table
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output lattice file
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DecodeArgs {
    /// Input lattice file
    #[arg(long)]
    pub lattices: PathBuf,
    /// Multilingual first-pass ARPA model
    #[arg(long)]
    pub lm0: PathBuf,
    /// Per-language ARPA models, in language-id order
    #[arg(long, num_args = 1.., required = true)]
    pub lms: Vec<PathBuf>,
    /// Acoustic scale for path extraction
    #[arg(long, default_value_t = 1.0)]
    pub am_scale: f64,
    /// Language-model scale for path extraction
    #[arg(long, default_value_t = 1.0)]
    pub lm_scale: f64,
    /// Compare per-event-normalized language scores instead of raw ones
    #[arg(long, default_value_t = false)]
    pub normalize_length: bool,
    /// Truth labels `<utt-id> <language-index>`: rescore each utterance
    /// with its labeled language only (the known-language oracle)
    #[arg(long)]
    pub known_language: Option<PathBuf>,
    /// Emit first-pass best paths as transcripts and stop
    #[arg(long, default_value_t = false)]
    pub first_pass_only: bool,
    /// Output file: selection records, or transcripts with --first-pass-only
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the selected words as plain transcripts
    #[arg(long)]
    pub hyps_out: Option<PathBuf>,
    /// Structured JSON report listing all candidates per utterance
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    /// Reference transcripts: `<utt-id> <words...>` per line
    #[arg(long)]
    pub refs: PathBuf,
    /// Hypotheses, matched to references by utterance id
    #[arg(long)]
    pub hyps: PathBuf,
    /// Hypothesis file format
    #[arg(long, value_enum, default_value_t = HypsFormat::Transcript)]
    pub hyps_format: HypsFormat,
    /// Foreign-word list (one token per line) for the foreign-word rate
    #[arg(long)]
    pub foreign: Option<PathBuf>,
    /// Truth labels `<utt-id> <language-index>` for selection accuracy
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Machine-readable TSV report path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path (default: score.manifest.json)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
pub enum HypsFormat {
    /// `<utt-id> <words...>`
    Transcript,
    /// Decode records `<utt-id> <language> <scores> <words...>`
    Results,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest written by a previous run
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            e.exit_code()
        }
    }
}
