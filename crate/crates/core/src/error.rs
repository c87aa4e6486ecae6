use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty tag set cannot form an ambiguity class")]
    EmptyClass,
    #[error("unknown tag id {0}")]
    UnknownTagId(u32),
    #[error("unknown tag name `{0}`")]
    UnknownTag(String),
    #[error("unknown ambiguity class id {0}")]
    UnknownClassId(u32),
    #[error("duplicate tag name `{0}`")]
    DuplicateTag(String),
    #[error("invalid tag name `{0}`")]
    InvalidTagName(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conflicting rules: {0}")]
    RuleConflict(String),
    #[error("window spec mismatch: model uses {model}, counts use {counts}")]
    SpecMismatch { model: String, counts: String },
    #[error("tag `{0}` has no legal successor under the rule set")]
    NoLegalSuccessor(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("length mismatch: {predicted} predicted tags for {gold} gold tokens")]
    LengthMismatch { predicted: usize, gold: usize },
    #[error("token {0} has no gold tag")]
    MissingGold(usize),
    #[error("training size {size} exceeds corpus of {available} tokens")]
    SizeExceedsCorpus { size: usize, available: usize },
    #[error("invalid synthetic specification: {0}")]
    InvalidSynthetic(String),
    #[error("unsupported model version: expected `{expected}`, found `{found}`")]
    VersionMismatch { expected: String, found: String },
    #[error("tagset hash mismatch: model has {model}, loaded tagset has {loaded}")]
    TagsetMismatch { model: String, loaded: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
