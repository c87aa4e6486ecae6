//! Tagger configurations, trained models, and the versioned model files.
//!
//! All three model kinds share one text layout: a version line, a few
//! header lines, the ambiguity-class inventory the model was trained
//! against, then the parameters. Floats are written in hexadecimal so a
//! save/load cycle is bit-exact, and entries are sorted by key so saving
//! the same model twice gives identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::{count_windows, AmbiguousText};
use crate::decide::TrainOptions;
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::hmm::HmmModel;
use crate::inventory::{AmbiguityInventory, ClassId, TagId, TagInventory, TagSeq, WindowSpec};
use crate::lsw::LswModel;
use crate::rules::RuleSet;
use crate::sw::{SwKey, SwModel};

pub const SW_HEADER: &str = "swmodel v1";
pub const LSW_HEADER: &str = "lswmodel v1";
pub const HMM_HEADER: &str = "hmmmodel v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaggerKind {
    Sw,
    Lsw,
    Hmm,
}

/// One tagger setting in an experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum TaggerConfig {
    Sw { spec: WindowSpec },
    Lsw { spec: WindowSpec, rules: Option<RuleSet> },
    Hmm { rules: Option<RuleSet> },
}

impl TaggerConfig {
    pub fn kind(&self) -> TaggerKind {
        match self {
            TaggerConfig::Sw { .. } => TaggerKind::Sw,
            TaggerConfig::Lsw { .. } => TaggerKind::Lsw,
            TaggerConfig::Hmm { .. } => TaggerKind::Hmm,
        }
    }

    /// Label used in reports, e.g. `LSW(-1, +1)-No-Rules`.
    pub fn label(&self) -> String {
        match self {
            TaggerConfig::Sw { spec } => format!("SW{spec}"),
            TaggerConfig::Lsw { spec, rules: Some(_) } => format!("LSW{spec}"),
            TaggerConfig::Lsw { spec, rules: None } => format!("LSW{spec}-No-Rules"),
            TaggerConfig::Hmm { rules: Some(_) } => "HMM".to_string(),
            TaggerConfig::Hmm { rules: None } => "HMM-No-Rules".to_string(),
        }
    }

    pub fn train(
        &self,
        text: &AmbiguousText,
        tags: &TagInventory,
        classes: &AmbiguityInventory,
        opts: &TrainOptions,
    ) -> Result<Model> {
        Ok(match self {
            TaggerConfig::Sw { spec } => Model::Sw(SwModel::train(&count_windows(text, *spec), classes, opts)),
            TaggerConfig::Lsw { spec, rules } => {
                Model::Lsw(LswModel::train(&count_windows(text, *spec), classes, rules.as_ref(), opts))
            }
            TaggerConfig::Hmm { rules } => {
                let init = HmmModel::init(tags, classes, rules.as_ref())?;
                Model::Hmm(init.train(text, classes, opts)?.0)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Sw(SwModel),
    Lsw(LswModel),
    Hmm(HmmModel),
}

impl Model {
    pub fn kind(&self) -> TaggerKind {
        match self {
            Model::Sw(_) => TaggerKind::Sw,
            Model::Lsw(_) => TaggerKind::Lsw,
            Model::Hmm(_) => TaggerKind::Hmm,
        }
    }

    pub fn tag(&self, text: &AmbiguousText, classes: &AmbiguityInventory) -> Vec<TagId> {
        match self {
            Model::Sw(m) => m.tag(text, classes),
            Model::Lsw(m) => m.tag(text, classes),
            Model::Hmm(m) => m.tag(text, classes),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Model::Sw(m) => m.parameter_count(),
            Model::Lsw(m) => m.parameter_count(),
            Model::Hmm(m) => m.parameter_count(),
        }
    }

    /// Serialize together with the class inventory the model refers to.
    pub fn to_text(&self, tags: &TagInventory, classes: &AmbiguityInventory) -> String {
        let mut out = String::new();
        match self {
            Model::Sw(m) => {
                let spec = m.spec();
                let _ = writeln!(out, "{SW_HEADER}");
                let _ = writeln!(out, "window {} {}", spec.n_minus, spec.n_plus);
                let _ = writeln!(out, "tagset {}", tags.fingerprint());
                write_classes(&mut out, classes);
                let _ = writeln!(out, "entries {}", m.table().len());
                for (key, value) in m.table() {
                    let _ = writeln!(
                        out,
                        "{};{};{}\t{}",
                        join_ids(key.left.iter().map(|c| c.0)),
                        key.tag.0,
                        join_ids(key.right.iter().map(|c| c.0)),
                        hexfloat::format(*value)
                    );
                }
            }
            Model::Lsw(m) => {
                let spec = m.spec();
                let _ = writeln!(out, "{LSW_HEADER}");
                let _ = writeln!(out, "window {} {}", spec.n_minus, spec.n_plus);
                let _ = writeln!(out, "tagset {}", tags.fingerprint());
                let _ = writeln!(out, "rules_applied {}", m.rules_applied());
                let _ = writeln!(out, "rules {}", m.rules_fingerprint().unwrap_or("none"));
                write_classes(&mut out, classes);
                let _ = writeln!(out, "entries {}", m.table().len());
                for (key, value) in m.table() {
                    let _ = writeln!(
                        out,
                        "{};{};{}\t{}",
                        join_ids(key[..spec.n_minus].iter().map(|t| t.0)),
                        key[spec.n_minus].0,
                        join_ids(key[spec.n_minus + 1..].iter().map(|t| t.0)),
                        hexfloat::format(*value)
                    );
                }
            }
            Model::Hmm(m) => {
                let _ = writeln!(out, "{HMM_HEADER}");
                let _ = writeln!(out, "tagset {}", tags.fingerprint());
                write_classes(&mut out, classes);
                let _ = writeln!(out, "transitions {} {}", m.tag_count(), m.tag_count());
                write_rows(&mut out, m.transitions(), m.tag_count());
                let _ = writeln!(out, "emissions {} {}", m.tag_count(), m.class_count());
                write_rows(&mut out, m.emissions(), m.class_count());
            }
        }
        out
    }

    /// Parse a model file, checking the version line and the tagset digest.
    /// Returns the model and the class inventory it was trained with.
    pub fn from_text(text: &str, tags: &TagInventory) -> Result<(Model, AmbiguityInventory)> {
        let mut lines = Lines::new(text);
        let (_, header) = lines.next_line()?;
        match header {
            SW_HEADER => {
                let spec = lines.window()?;
                lines.tagset(tags)?;
                let classes = lines.classes(tags)?;
                let count = lines.count("entries")?;
                let mut table = BTreeMap::new();
                for _ in 0..count {
                    let (ln, line) = lines.next_line()?;
                    let (left, tag, right, value) = parse_entry(ln, line)?;
                    let key = SwKey {
                        left: left.into_iter().map(ClassId).collect(),
                        tag: TagId(tag),
                        right: right.into_iter().map(ClassId).collect(),
                    };
                    check_sw_key(ln, &key, spec, &classes)?;
                    if table.insert(key, value).is_some() {
                        return Err(Error::parse(ln, "duplicate entry"));
                    }
                }
                lines.finish()?;
                Ok((Model::Sw(SwModel::from_table(spec, table, classes.tag_count())), classes))
            }
            LSW_HEADER => {
                let spec = lines.window()?;
                lines.tagset(tags)?;
                let (ln, applied) = lines.field("rules_applied")?;
                let applied: bool = applied
                    .parse()
                    .map_err(|_| Error::parse(ln, "rules_applied must be true or false"))?;
                let (ln, rules) = lines.field("rules")?;
                let fingerprint = match (applied, rules) {
                    (false, "none") => None,
                    (true, hash) if hash != "none" => Some(hash.to_string()),
                    _ => return Err(Error::parse(ln, "rules digest inconsistent with rules_applied")),
                };
                let classes = lines.classes(tags)?;
                let count = lines.count("entries")?;
                let mut table = BTreeMap::new();
                for _ in 0..count {
                    let (ln, line) = lines.next_line()?;
                    let (left, tag, right, value) = parse_entry(ln, line)?;
                    if left.len() != spec.n_minus || right.len() != spec.n_plus {
                        return Err(Error::parse(ln, "key length does not match the window"));
                    }
                    let key: TagSeq = left
                        .into_iter()
                        .chain(std::iter::once(tag))
                        .chain(right)
                        .map(TagId)
                        .collect();
                    if key.iter().any(|t| t.index() >= tags.len()) {
                        return Err(Error::parse(ln, "unknown tag id"));
                    }
                    if table.insert(key, value).is_some() {
                        return Err(Error::parse(ln, "duplicate entry"));
                    }
                }
                lines.finish()?;
                let model = LswModel::from_table(spec, table, fingerprint, classes.tag_count());
                Ok((Model::Lsw(model), classes))
            }
            HMM_HEADER => {
                lines.tagset(tags)?;
                let classes = lines.classes(tags)?;
                let (rows, cols) = lines.dims("transitions")?;
                if rows != tags.len() || cols != tags.len() {
                    return Err(Error::parse(lines.line, "transition matrix size does not match the tagset"));
                }
                let transitions = lines.rows(rows, cols)?;
                let (erows, ecols) = lines.dims("emissions")?;
                if erows != tags.len() || ecols != classes.len() {
                    return Err(Error::parse(lines.line, "emission matrix size does not match the inventories"));
                }
                let emissions = lines.rows(erows, ecols)?;
                lines.finish()?;
                let model = HmmModel::from_parts(rows, ecols, transitions, emissions)?;
                Ok((Model::Hmm(model), classes))
            }
            other => Err(Error::VersionMismatch {
                expected: format!("{SW_HEADER}, {LSW_HEADER} or {HMM_HEADER}"),
                found: other.to_string(),
            }),
        }
    }
}

fn join_ids<I: Iterator<Item = u32>>(ids: I) -> String {
    ids.map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn write_classes(out: &mut String, classes: &AmbiguityInventory) {
    let _ = writeln!(out, "classes {}", classes.len());
    for (id, set) in classes.classes() {
        let _ = writeln!(out, "{}\t{}", id.0, join_ids(set.iter().map(|t| t.0)));
    }
}

fn write_rows(out: &mut String, values: &[f64], width: usize) {
    for row in values.chunks(width.max(1)) {
        let cells: Vec<String> = row.iter().map(|v| hexfloat::format(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
}

fn parse_ids(ln: usize, text: &str) -> Result<Vec<u32>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| s.parse::<u32>().map_err(|_| Error::parse(ln, format!("bad id `{s}`"))))
        .collect()
}

fn parse_entry(ln: usize, line: &str) -> Result<(Vec<u32>, u32, Vec<u32>, f64)> {
    let (key, value) = line
        .split_once('\t')
        .ok_or_else(|| Error::parse(ln, "expected `key<TAB>value`"))?;
    let parts: Vec<&str> = key.split(';').collect();
    if parts.len() != 3 {
        return Err(Error::parse(ln, "expected `left;tag;right` key"));
    }
    let tag = parts[1]
        .parse::<u32>()
        .map_err(|_| Error::parse(ln, format!("bad tag id `{}`", parts[1])))?;
    let value = hexfloat::parse(value).map_err(|e| Error::parse(ln, e.to_string()))?;
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::parse(ln, "effective counts must be finite and non-negative"));
    }
    Ok((parse_ids(ln, parts[0])?, tag, parse_ids(ln, parts[2])?, value))
}

fn check_sw_key(ln: usize, key: &SwKey, spec: WindowSpec, classes: &AmbiguityInventory) -> Result<()> {
    if key.left.len() != spec.n_minus || key.right.len() != spec.n_plus {
        return Err(Error::parse(ln, "key length does not match the window"));
    }
    if key.tag.index() >= classes.tag_count() {
        return Err(Error::parse(ln, "unknown tag id"));
    }
    if key.left.iter().chain(&key.right).any(|c| c.index() >= classes.len()) {
        return Err(Error::parse(ln, "unknown class id"));
    }
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok((i + 1, l))
            }
            None => Err(Error::parse(self.line + 1, "unexpected end of model file")),
        }
    }

    fn field(&mut self, name: &str) -> Result<(usize, &'a str)> {
        let (ln, line) = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == name => Ok((ln, v)),
            _ => Err(Error::parse(ln, format!("expected `{name} ...`"))),
        }
    }

    fn count(&mut self, name: &str) -> Result<usize> {
        let (ln, v) = self.field(name)?;
        v.parse().map_err(|_| Error::parse(ln, format!("bad {name} count")))
    }

    fn dims(&mut self, name: &str) -> Result<(usize, usize)> {
        let (ln, v) = self.field(name)?;
        let mut it = v.split(' ').map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
            _ => Err(Error::parse(ln, format!("bad {name} dimensions"))),
        }
    }

    fn window(&mut self) -> Result<WindowSpec> {
        let (ln, a, b) = {
            let (ln, v) = self.field("window")?;
            let mut it = v.split(' ').map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => (ln, a, b),
                _ => return Err(Error::parse(ln, "bad window line")),
            }
        };
        WindowSpec::new(a, b).map_err(|e| Error::parse(ln, e.to_string()))
    }

    fn tagset(&mut self, tags: &TagInventory) -> Result<()> {
        let (_, hash) = self.field("tagset")?;
        let loaded = tags.fingerprint();
        if hash != loaded {
            return Err(Error::TagsetMismatch {
                model: hash.to_string(),
                loaded,
            });
        }
        Ok(())
    }

    fn classes(&mut self, tags: &TagInventory) -> Result<AmbiguityInventory> {
        let count = self.count("classes")?;
        let mut classes = AmbiguityInventory::new(tags);
        for expected in 0..count {
            let (ln, line) = self.next_line()?;
            let (id, set) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(ln, "expected `id<TAB>tags`"))?;
            let ids = parse_ids(ln, set)?;
            let interned = classes
                .intern(ids.into_iter().map(TagId))
                .map_err(|e| Error::parse(ln, e.to_string()))?;
            if id != expected.to_string() || interned.index() != expected {
                return Err(Error::parse(ln, "class ids must be dense and in order"));
            }
        }
        Ok(classes)
    }

    fn rows(&mut self, rows: usize, cols: usize) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, line) = self.next_line()?;
            let row: Vec<f64> = if cols == 0 {
                Vec::new()
            } else {
                line.split(' ')
                    .map(|c| hexfloat::parse(c).map_err(|e| Error::parse(ln, e.to_string())))
                    .collect::<Result<_>>()?
            };
            if row.len() != cols {
                return Err(Error::parse(ln, format!("expected {cols} values")));
            }
            values.extend(row);
        }
        Ok(values)
    }

    fn finish(&mut self) -> Result<()> {
        match self.inner.next() {
            Some((i, l)) if !l.trim().is_empty() => Err(Error::parse(i + 1, "trailing content")),
            _ => Ok(()),
        }
    }
}
