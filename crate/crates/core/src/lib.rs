//! Multilingual decoding without a language identifier: backoff n-gram
//! language models, exact word-lattice rescoring with best-path extraction,
//! and automatic output selection by language score, plus the seeded
//! lattice simulator and scoring tools used to exercise the pipeline
//! end to end without audio.

pub mod eval;
pub mod lattice;
pub mod lexicon;
pub mod ngram;
pub mod rng;
pub mod selection;
pub mod simulate;
pub mod vocab;

pub use eval::{EvalReport, WerBreakdown};
pub use lattice::{Lattice, LatticeArc, LatticeError, LatticePath, NodeId, ScoreConfig};
pub use lexicon::{Lexicon, PhoneMap};
pub use ngram::{interpolate, CorpusStats, LanguageModel, NGramEntry, NGramError};
pub use selection::{decode, Candidate, DecodeResult, PipelineConfig};
pub use simulate::{gen_lattice, sample_sentences, ConfusionModel, GeneratorConfig};
pub use vocab::{Vocabulary, WordId, SENTENCE_BEGIN, SENTENCE_END, UNKNOWN};
