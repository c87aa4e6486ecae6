//! Tag and ambiguity-class inventories, the lexicon, and window configuration.
//!
//! Every count table in the crate keys on the dense integer ids handed out
//! here. Inventories are built once (tagset file, lexicon, corpus
//! annotations) and then shared read-only by the taggers.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Name of the reserved boundary tag.
pub const EOS_NAME: &str = "EOS";

/// Upper bound on either side of a window.
pub const MAX_CONTEXT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TagId(pub u32);

impl TagId {
    pub const EOS: TagId = TagId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ClassId {
    /// The singleton `{EOS}` class used for padding.
    pub const EOS: ClassId = ClassId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A sequence of tags, e.g. one LSW parameter key.
pub type TagSeq = SmallVec<[TagId; 8]>;
/// A sequence of ambiguity classes, e.g. one observed window.
pub type ClassSeq = SmallVec<[ClassId; 8]>;

/// The tag set, with `EOS` always at id 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagInventory {
    names: Vec<String>,
    by_name: HashMap<String, TagId>,
    open_class: BTreeSet<TagId>,
}

impl Default for TagInventory {
    fn default() -> Self {
        Self::new()
    }
}

impl TagInventory {
    pub fn new() -> Self {
        let mut by_name = HashMap::new();
        by_name.insert(EOS_NAME.to_string(), TagId::EOS);
        TagInventory {
            names: vec![EOS_NAME.to_string()],
            by_name,
            open_class: BTreeSet::new(),
        }
    }

    pub fn add(&mut self, name: &str) -> Result<TagId> {
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',' || c == ':') {
            return Err(Error::InvalidTagName(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateTag(name.to_string()));
        }
        let id = TagId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn mark_open(&mut self, tag: TagId) -> Result<()> {
        if tag == TagId::EOS {
            return Err(Error::Invalid("EOS cannot be an open-class tag".into()));
        }
        self.check(tag)?;
        self.open_class.insert(tag);
        Ok(())
    }

    /// Parse a tagset file: one tag per line, `open:` prefix marks open-class
    /// tags, `#` starts a comment. A literal `EOS` line is accepted and ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut inv = TagInventory::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (open, name) = match line.strip_prefix("open:") {
                Some(rest) => (true, rest.trim()),
                None => (false, line),
            };
            if name == EOS_NAME {
                if open {
                    return Err(Error::parse(i + 1, "EOS cannot be an open-class tag"));
                }
                continue;
            }
            let id = inv.add(name).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            if open {
                inv.open_class.insert(id);
            }
        }
        Ok(inv)
    }

    /// Serialize in the tagset file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.names.iter().enumerate().skip(1) {
            if self.open_class.contains(&TagId(i as u32)) {
                out.push_str("open:");
            }
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, name: &str) -> Result<TagId> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownTag(name.to_string()))
    }

    pub fn name(&self, tag: TagId) -> &str {
        &self.names[tag.index()]
    }

    pub fn check(&self, tag: TagId) -> Result<()> {
        if tag.index() < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownTagId(tag.0))
        }
    }

    pub fn open_class(&self) -> &BTreeSet<TagId> {
        &self.open_class
    }

    pub fn ids(&self) -> impl Iterator<Item = TagId> {
        (0..self.names.len() as u32).map(TagId)
    }

    /// Short digest of the tag names, stored in model files.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for name in &self.names {
            hasher.update(name.as_bytes());
            hasher.update(b"\n");
        }
        hex16(&hasher.finalize())
    }
}

pub(crate) fn hex16(digest: &[u8]) -> String {
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// The interned set of ambiguity classes. Class 0 is always `{EOS}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbiguityInventory {
    n_tags: usize,
    classes: Vec<Vec<TagId>>,
    lookup: HashMap<Vec<TagId>, ClassId>,
}

impl AmbiguityInventory {
    pub fn new(tags: &TagInventory) -> Self {
        Self::with_tag_count(tags.len())
    }

    pub fn with_tag_count(n_tags: usize) -> Self {
        let eos = vec![TagId::EOS];
        let mut lookup = HashMap::new();
        lookup.insert(eos.clone(), ClassId::EOS);
        AmbiguityInventory {
            n_tags: n_tags.max(1),
            classes: vec![eos],
            lookup,
        }
    }

    /// Return the id of the class holding exactly `tags`, creating it if needed.
    pub fn intern<I: IntoIterator<Item = TagId>>(&mut self, tags: I) -> Result<ClassId> {
        let mut set: Vec<TagId> = tags.into_iter().collect();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            return Err(Error::EmptyClass);
        }
        if let Some(bad) = set.iter().find(|t| t.index() >= self.n_tags) {
            return Err(Error::UnknownTagId(bad.0));
        }
        if let Some(&id) = self.lookup.get(&set) {
            return Ok(id);
        }
        let id = ClassId(self.classes.len() as u32);
        self.classes.push(set.clone());
        self.lookup.insert(set, id);
        Ok(id)
    }

    /// Look up a class without interning.
    pub fn find(&self, tags: &[TagId]) -> Option<ClassId> {
        let mut set = tags.to_vec();
        set.sort_unstable();
        set.dedup();
        self.lookup.get(&set).copied()
    }

    /// `T(σ)`: the tags of a class, ascending.
    pub fn tags_of(&self, class: ClassId) -> Result<&[TagId]> {
        self.classes
            .get(class.index())
            .map(Vec::as_slice)
            .ok_or(Error::UnknownClassId(class.0))
    }

    /// Unchecked variant of [`tags_of`](Self::tags_of) for ids already validated.
    pub(crate) fn tags(&self, class: ClassId) -> &[TagId] {
        &self.classes[class.index()]
    }

    pub fn is_ambiguous(&self, class: ClassId) -> bool {
        self.tags(class).len() > 1
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tag_count(&self) -> usize {
        self.n_tags
    }

    pub fn classes(&self) -> impl Iterator<Item = (ClassId, &[TagId])> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, c)| (ClassId(i as u32), c.as_slice()))
    }

    /// `T′`: every tag sequence compatible with a class sequence, in
    /// lexicographic order. The empty sequence yields one empty sequence.
    pub fn tag_sequences(&self, classes: &[ClassId]) -> Result<Vec<TagSeq>> {
        for c in classes {
            self.tags_of(*c)?;
        }
        let mut out = Vec::new();
        self.for_each_sequence(classes, |seq| out.push(TagSeq::from_slice(seq)));
        Ok(out)
    }

    /// Number of sequences `tag_sequences` would return.
    pub fn sequence_count(&self, classes: &[ClassId]) -> usize {
        classes.iter().map(|c| self.tags(*c).len()).product()
    }

    /// Visit `T′(classes)` without allocating the result set.
    pub(crate) fn for_each_sequence<F: FnMut(&[TagId])>(&self, classes: &[ClassId], mut f: F) {
        let sets: SmallVec<[&[TagId]; 8]> = classes.iter().map(|c| self.tags(*c)).collect();
        let mut cursor: SmallVec<[usize; 8]> = SmallVec::from_elem(0, sets.len());
        let mut seq: TagSeq = sets.iter().map(|s| s[0]).collect();
        loop {
            f(&seq);
            // odometer increment, rightmost position fastest
            let mut pos = sets.len();
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                cursor[pos] += 1;
                if cursor[pos] < sets[pos].len() {
                    seq[pos] = sets[pos][cursor[pos]];
                    break;
                }
                cursor[pos] = 0;
                seq[pos] = sets[pos][0];
            }
        }
    }
}

/// Exact-match table from surface form to ambiguity class.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: HashMap<String, ClassId>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: &str, class: ClassId) {
        self.entries.insert(surface.to_string(), class);
    }

    pub fn get(&self, surface: &str) -> Option<ClassId> {
        self.entries.get(surface).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse `surface<TAB>tag1,tag2,...` lines. Repeated surfaces merge their tags.
    pub fn parse(text: &str, tags: &TagInventory, classes: &mut AmbiguityInventory) -> Result<Self> {
        let mut merged: Vec<(String, BTreeSet<TagId>)> = Vec::new();
        let mut position: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, list) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected `surface<TAB>tags`"))?;
            let set = parse_tag_list(list, tags).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            match position.get(surface) {
                Some(&p) => merged[p].1.extend(set),
                None => {
                    position.insert(surface.to_string(), merged.len());
                    merged.push((surface.to_string(), set));
                }
            }
        }
        let mut lexicon = Lexicon::new();
        for (surface, set) in merged {
            let class = classes.intern(set)?;
            lexicon.insert(&surface, class);
        }
        Ok(lexicon)
    }

    /// Serialize in the lexicon file format, sorted by surface.
    pub fn to_text(&self, tags: &TagInventory, classes: &AmbiguityInventory) -> String {
        let mut entries: Vec<_> = self.entries.iter().collect();
        entries.sort();
        let mut out = String::new();
        for (surface, class) in entries {
            let names: Vec<&str> = classes.tags(*class).iter().map(|t| tags.name(*t)).collect();
            out.push_str(surface);
            out.push('\t');
            out.push_str(&names.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parse a comma-separated list of tag names.
pub fn parse_tag_list(list: &str, tags: &TagInventory) -> Result<BTreeSet<TagId>> {
    let set = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| tags.id(name))
        .collect::<Result<BTreeSet<_>>>()?;
    if set.is_empty() {
        return Err(Error::EmptyClass);
    }
    Ok(set)
}

/// Left and right context lengths of a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    pub n_minus: usize,
    pub n_plus: usize,
}

impl WindowSpec {
    pub fn new(n_minus: usize, n_plus: usize) -> Result<Self> {
        if n_minus + n_plus == 0 {
            return Err(Error::InvalidWindow("window needs at least one context position".into()));
        }
        if n_minus > MAX_CONTEXT || n_plus > MAX_CONTEXT {
            return Err(Error::InvalidWindow(format!(
                "context length above {MAX_CONTEXT} ({n_minus}, {n_plus})"
            )));
        }
        Ok(WindowSpec { n_minus, n_plus })
    }

    /// Total positions in a window including the centre.
    pub fn width(&self) -> usize {
        self.n_minus + 1 + self.n_plus
    }

    /// Label body, e.g. `(-1, +1)` or `(-2, -1)`.
    pub fn label(&self) -> String {
        let offsets: Vec<String> = (1..=self.n_minus)
            .rev()
            .map(|k| format!("-{k}"))
            .chain((1..=self.n_plus).map(|k| format!("+{k}")))
            .collect();
        format!("({})", offsets.join(", "))
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses offset lists such as `-1,+1`, `-2,-1`, `+1` or `(-1, +1)`.
impl FromStr for WindowSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let value: i64 = part
                .trim_start_matches('+')
                .parse()
                .map_err(|_| Error::InvalidWindow(format!("bad offset `{part}` in `{s}`")))?;
            match value {
                v if v < 0 => left.insert(v.unsigned_abs() as usize),
                v if v > 0 => right.insert(v as usize),
                _ => return Err(Error::InvalidWindow(format!("offset 0 in `{s}`"))),
            };
        }
        let contiguous = |set: &BTreeSet<usize>| set.iter().copied().eq(1..=set.len());
        if !contiguous(&left) || !contiguous(&right) {
            return Err(Error::InvalidWindow(format!("offsets in `{s}` must be contiguous around 0")));
        }
        WindowSpec::new(left.len(), right.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags() -> (TagInventory, TagId, TagId, TagId) {
        let mut inv = TagInventory::new();
        let d = inv.add("D").unwrap();
        let n = inv.add("N").unwrap();
        let v = inv.add("V").unwrap();
        (inv, d, n, v)
    }

    #[test]
    fn eos_is_reserved() {
        let (tags, ..) = tags();
        assert_eq!(tags.id("EOS").unwrap(), TagId::EOS);
        let classes = AmbiguityInventory::new(&tags);
        assert_eq!(classes.tags_of(ClassId::EOS).unwrap(), &[TagId::EOS]);
    }

    #[test]
    fn interning_is_idempotent_and_order_insensitive() {
        let (tags, d, n, v) = tags();
        let mut classes = AmbiguityInventory::new(&tags);
        let first = classes.intern([n]).unwrap();
        assert_eq!(first, ClassId(1));
        assert_eq!(classes.intern([n]).unwrap(), first);
        let nv = classes.intern([n, v]).unwrap();
        assert_eq!(classes.intern([v, n]).unwrap(), nv);
        classes.intern([d]).unwrap();
        // {EOS} plus three distinct sets
        assert_eq!(classes.len(), 4);
    }

    #[test]
    fn intern_rejects_bad_input() {
        let (tags, ..) = tags();
        let mut classes = AmbiguityInventory::new(&tags);
        assert!(matches!(classes.intern([]), Err(Error::EmptyClass)));
        assert!(matches!(classes.intern([TagId(99)]), Err(Error::UnknownTagId(99))));
        assert!(matches!(classes.tags_of(ClassId(42)), Err(Error::UnknownClassId(42))));
    }

    #[test]
    fn tags_of_is_sorted() {
        let (tags, _d, n, v) = tags();
        let mut classes = AmbiguityInventory::new(&tags);
        let nv = classes.intern([v, n]).unwrap();
        assert_eq!(classes.tags_of(nv).unwrap(), &[n, v]);
        let single = classes.intern([n]).unwrap();
        assert_eq!(classes.tags_of(single).unwrap(), &[n]);
    }

    #[test]
    fn tag_sequences_product() {
        let (tags, d, n, v) = tags();
        let mut classes = AmbiguityInventory::new(&tags);
        let cd = classes.intern([d]).unwrap();
        let cnv = classes.intern([n, v]).unwrap();
        let seqs = classes.tag_sequences(&[cd]).unwrap();
        assert_eq!(seqs, vec![TagSeq::from_slice(&[d])]);
        let seqs = classes.tag_sequences(&[cd, cnv]).unwrap();
        assert_eq!(seqs, vec![TagSeq::from_slice(&[d, n]), TagSeq::from_slice(&[d, v])]);
        let seqs = classes.tag_sequences(&[]).unwrap();
        assert_eq!(seqs, vec![TagSeq::new()]);
        assert!(classes.tag_sequences(&[ClassId(77)]).is_err());
    }

    #[test]
    fn tagset_and_lexicon_files() {
        let tags = TagInventory::parse("# tags\ndet\nopen:noun\nopen:vblex\nEOS\n").unwrap();
        assert_eq!(tags.len(), 4);
        assert_eq!(tags.open_class().len(), 2);
        assert_eq!(TagInventory::parse(&tags.to_text()).unwrap(), tags);
        assert!(TagInventory::parse("det\ndet\n").is_err());

        let mut classes = AmbiguityInventory::new(&tags);
        let lex = Lexicon::parse("# lexicon\nthe\tdet\nrun\tvblex,noun\nrun\tnoun\n", &tags, &mut classes).unwrap();
        let run = lex.get("run").unwrap();
        assert_eq!(classes.tags_of(run).unwrap().len(), 2);
        assert!(lex.get("dog").is_none());
        let err = Lexicon::parse("a\tdet\nb\tadverb\n", &tags, &mut classes).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn window_spec_parsing_and_labels() {
        let w: WindowSpec = "-1,+1".parse().unwrap();
        assert_eq!((w.n_minus, w.n_plus), (1, 1));
        assert_eq!(w.label(), "(-1, +1)");
        let w: WindowSpec = "-2,-1".parse().unwrap();
        assert_eq!((w.n_minus, w.n_plus), (2, 0));
        assert_eq!(w.label(), "(-2, -1)");
        let w: WindowSpec = "(+1)".parse().unwrap();
        assert_eq!((w.n_minus, w.n_plus), (0, 1));
        assert!("-2".parse::<WindowSpec>().is_err());
        assert!("".parse::<WindowSpec>().is_err());
        assert!("-4,-3,-2,-1".parse::<WindowSpec>().is_err());
        assert!(WindowSpec::new(0, 0).is_err());
    }
}
