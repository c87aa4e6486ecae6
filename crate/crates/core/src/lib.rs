//! Sliding-window (SW) and light sliding-window (LSW) part-of-speech taggers
//! trained without supervision from ambiguity-class text, optional
//! forbid/enforce bigram rules for LSW, a first-order HMM baseline, and an
//! evaluation harness for comparing them on learning curves.

pub mod corpus;
pub mod decide;
pub mod error;
mod estimate;
pub mod eval;
pub mod hexfloat;
pub mod hmm;
pub mod inventory;
pub mod lsw;
pub mod model;
pub mod rules;
pub mod sw;
pub mod synth;

pub use corpus::{analyze, corpus_stats, count_windows, count_windows_parallel, AmbiguousText, CorpusStats, RawToken, Token, WindowCountTable};
pub use decide::{Decision, DecisionKind, TrainOptions};
pub use error::{Error, Result};
pub use eval::{accuracy, learning_curve, EvalReport, LearningCurve};
pub use hmm::HmmModel;
pub use inventory::{AmbiguityInventory, ClassId, Lexicon, TagId, TagInventory, TagSeq, WindowSpec};
pub use lsw::LswModel;
pub use model::{Model, TaggerConfig, TaggerKind};
pub use rules::RuleSet;
pub use sw::{SwKey, SwModel};
pub use synth::{generate_synthetic, SyntheticLanguage, SyntheticSpec};
