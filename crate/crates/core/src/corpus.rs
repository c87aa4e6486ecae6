//! Corpus ingestion, window counting and corpus statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inventory::{
    parse_tag_list, AmbiguityInventory, ClassId, ClassSeq, Lexicon, TagId, TagInventory, WindowSpec,
};

/// A token as read from a file, before lexicon lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawToken {
    pub line: usize,
    pub surface: String,
    /// Explicit tag subset from a pre-disambiguated stream.
    pub annotation: Option<Vec<String>>,
    pub gold: Option<String>,
}

impl RawToken {
    pub fn plain(surface: &str) -> Self {
        RawToken {
            line: 0,
            surface: surface.to_string(),
            annotation: None,
            gold: None,
        }
    }
}

/// Whitespace tokenization of running text into a single document.
pub fn tokenize_whitespace(text: &str) -> Vec<RawToken> {
    text.split_whitespace().map(RawToken::plain).collect()
}

fn split_documents<F>(text: &str, mut token: F) -> Result<Vec<Vec<RawToken>>>
where
    F: FnMut(usize, &str) -> Result<RawToken>,
{
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(token(i + 1, line)?);
    }
    if !current.is_empty() {
        docs.push(current);
    }
    Ok(docs)
}

/// Read a corpus file: one token per line, either `surface` or
/// `surface<TAB>tag1,tag2,...`; blank lines separate documents.
pub fn read_corpus(text: &str) -> Result<Vec<Vec<RawToken>>> {
    split_documents(text, |line, content| {
        let (surface, annotation) = match content.split_once('\t') {
            Some((s, tags)) => {
                let names: Vec<String> = tags
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect();
                if names.is_empty() {
                    return Err(Error::parse(line, "empty tag annotation"));
                }
                (s, Some(names))
            }
            None => (content, None),
        };
        if surface.is_empty() {
            return Err(Error::parse(line, "empty surface form"));
        }
        Ok(RawToken {
            line,
            surface: surface.to_string(),
            annotation,
            gold: None,
        })
    })
}

/// Read a gold test file: `surface<TAB>goldtag` per line.
pub fn read_gold(text: &str) -> Result<Vec<Vec<RawToken>>> {
    split_documents(text, |line, content| {
        let (surface, gold) = content
            .split_once('\t')
            .ok_or_else(|| Error::parse(line, "expected `surface<TAB>goldtag`"))?;
        let gold = gold.trim();
        if surface.is_empty() || gold.is_empty() || gold.contains(',') {
            return Err(Error::parse(line, "expected `surface<TAB>goldtag`"));
        }
        Ok(RawToken {
            line,
            surface: surface.to_string(),
            annotation: None,
            gold: Some(gold.to_string()),
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub class: ClassId,
    pub gold: Option<TagId>,
}

/// A sequence of documents whose tokens carry ambiguity classes. Documents
/// are the padding unit: windows never cross a document boundary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AmbiguousText {
    tokens: Vec<Token>,
    /// Start offset of each non-empty document.
    starts: Vec<usize>,
}

impl AmbiguousText {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_document(&mut self, doc: Vec<Token>) {
        if doc.is_empty() {
            return;
        }
        self.starts.push(self.tokens.len());
        self.tokens.extend(doc);
    }

    pub fn from_documents<I: IntoIterator<Item = Vec<Token>>>(docs: I) -> Self {
        let mut text = AmbiguousText::new();
        for doc in docs {
            text.push_document(doc);
        }
        text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn document_count(&self) -> usize {
        self.starts.len()
    }

    pub fn documents(&self) -> impl Iterator<Item = &[Token]> + '_ {
        self.starts.iter().enumerate().map(move |(i, &start)| {
            let end = self.starts.get(i + 1).copied().unwrap_or(self.tokens.len());
            &self.tokens[start..end]
        })
    }

    /// The first `n` tokens, keeping document boundaries.
    pub fn prefix(&self, n: usize) -> AmbiguousText {
        let mut out = AmbiguousText::new();
        let mut left = n;
        for doc in self.documents() {
            if left == 0 {
                break;
            }
            let take = left.min(doc.len());
            out.push_document(doc[..take].to_vec());
            left -= take;
        }
        out
    }

    /// Copy with gold tags removed.
    pub fn without_gold(&self) -> AmbiguousText {
        let mut out = self.clone();
        for t in &mut out.tokens {
            t.gold = None;
        }
        out
    }

    /// Re-split documents after every token whose class is `delimiter`.
    pub fn split_at(&self, delimiter: ClassId) -> AmbiguousText {
        let mut out = AmbiguousText::new();
        for doc in self.documents() {
            let mut current = Vec::new();
            for token in doc {
                current.push(token.clone());
                if token.class == delimiter {
                    out.push_document(std::mem::take(&mut current));
                }
            }
            out.push_document(current);
        }
        out
    }
}

/// Map raw tokens onto ambiguity classes.
///
/// Known surfaces take their lexicon class, unknown ones the open class.
/// Annotated tokens are interned as annotated, but for known surfaces the
/// annotation must be a subset of the lexicon class.
pub fn analyze(
    docs: &[Vec<RawToken>],
    lexicon: &Lexicon,
    tags: &TagInventory,
    classes: &mut AmbiguityInventory,
) -> Result<AmbiguousText> {
    let mut text = AmbiguousText::new();
    for doc in docs {
        let mut out = Vec::with_capacity(doc.len());
        for raw in doc {
            let located = |e: Error| Error::parse(raw.line, format!("token `{}`: {e}", raw.surface));
            let class = match (&raw.annotation, lexicon.get(&raw.surface)) {
                (Some(names), known) => {
                    let subset = parse_tag_list(&names.join(","), tags).map_err(located)?;
                    if let Some(known) = known {
                        let allowed: BTreeSet<TagId> = classes.tags(known).iter().copied().collect();
                        if !subset.is_subset(&allowed) {
                            return Err(located(Error::Invalid(format!(
                                "annotation {{{}}} is not a subset of the lexicon class",
                                names.join(",")
                            ))));
                        }
                    }
                    classes.intern(subset).map_err(located)?
                }
                (None, Some(class)) => class,
                (None, None) if tags.open_class().is_empty() => {
                    return Err(located(Error::Invalid(
                        "unknown word and the tagset declares no open-class tags".into(),
                    )))
                }
                (None, None) => classes.intern(tags.open_class().iter().copied())?,
            };
            let gold = match &raw.gold {
                Some(name) => {
                    let g = tags.id(name).map_err(located)?;
                    if !classes.tags(class).contains(&g) {
                        return Err(located(Error::Invalid(format!(
                            "gold tag `{name}` is not in the token's ambiguity class"
                        ))));
                    }
                    Some(g)
                }
                None => None,
            };
            out.push(Token {
                surface: raw.surface.clone(),
                class,
                gold,
            });
        }
        text.push_document(out);
    }
    Ok(text)
}

/// Observed window counts `n(C₋ σ C₊)`. Keys are the full class window with
/// the centre at offset `spec.n_minus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowCountTable {
    spec: WindowSpec,
    counts: BTreeMap<ClassSeq, u64>,
}

impl WindowCountTable {
    pub fn new(spec: WindowSpec) -> Self {
        WindowCountTable {
            spec,
            counts: BTreeMap::new(),
        }
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn add(&mut self, window: ClassSeq, n: u64) {
        debug_assert_eq!(window.len(), self.spec.width());
        *self.counts.entry(window).or_insert(0) += n;
    }

    pub fn get(&self, window: &[ClassId]) -> u64 {
        self.counts.get(window).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClassSeq, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Number of distinct windows.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total mass, i.e. the number of tokens counted.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn merge(&mut self, other: &WindowCountTable) -> Result<()> {
        if other.spec != self.spec {
            return Err(Error::SpecMismatch {
                model: self.spec.label(),
                counts: other.spec.label(),
            });
        }
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += v;
        }
        Ok(())
    }
}

/// Class sequence of one document with `EOS` padding on both sides.
pub(crate) fn padded_classes(doc: &[Token], spec: WindowSpec) -> Vec<ClassId> {
    let mut padded = Vec::with_capacity(doc.len() + spec.n_minus + spec.n_plus);
    padded.extend(std::iter::repeat_n(ClassId::EOS, spec.n_minus));
    padded.extend(doc.iter().map(|t| t.class));
    padded.extend(std::iter::repeat_n(ClassId::EOS, spec.n_plus));
    padded
}

fn count_document(doc: &[Token], spec: WindowSpec, table: &mut WindowCountTable) {
    let padded = padded_classes(doc, spec);
    for window in padded.windows(spec.width()) {
        table.add(ClassSeq::from_slice(window), 1);
    }
}

/// Count every token's window, padding each document with `EOS`.
pub fn count_windows(text: &AmbiguousText, spec: WindowSpec) -> WindowCountTable {
    let mut table = WindowCountTable::new(spec);
    for doc in text.documents() {
        count_document(doc, spec, &mut table);
    }
    table
}

/// Like [`count_windows`], sharding documents across threads. The result
/// is identical to the sequential count.
pub fn count_windows_parallel(text: &AmbiguousText, spec: WindowSpec) -> WindowCountTable {
    let docs: Vec<&[Token]> = text.documents().collect();
    docs.par_iter()
        .fold(
            || WindowCountTable::new(spec),
            |mut table, doc| {
                count_document(doc, spec, &mut table);
                table
            },
        )
        .reduce(
            || WindowCountTable::new(spec),
            |mut a, b| {
                a.merge(&b).expect("shards share one spec");
                a
            },
        )
}

/// Corpus statistics with the same field set as the usual corpus table:
/// words, ambiguity classes, ambiguity rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusStats {
    pub words: usize,
    pub ambiguity_classes: usize,
    pub ambiguous_tokens: usize,
    pub ambiguity_rate: f64,
}

pub fn corpus_stats(text: &AmbiguousText, classes: &AmbiguityInventory) -> CorpusStats {
    let words = text.len();
    let observed: BTreeSet<ClassId> = text.tokens().iter().map(|t| t.class).collect();
    let ambiguous_tokens = text
        .tokens()
        .iter()
        .filter(|t| classes.is_ambiguous(t.class))
        .count();
    CorpusStats {
        words,
        ambiguity_classes: observed.len(),
        ambiguous_tokens,
        ambiguity_rate: if words == 0 {
            0.0
        } else {
            ambiguous_tokens as f64 / words as f64
        },
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Words: {}", self.words)?;
        writeln!(f, "Amb. classes: {}", self.ambiguity_classes)?;
        write!(
            f,
            "Amb. rate: {:.2}% ({}/{})",
            self.ambiguity_rate * 100.0,
            self.ambiguous_tokens,
            self.words
        )
    }
}
