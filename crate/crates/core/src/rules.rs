//! Forbid/enforce constraints over tag bigrams.
//!
//! `FORBID a b` makes the bigram `a b` invalid. `ENFORCE a: b,c` makes every
//! bigram `a x` with `x ∉ {b, c}` invalid. Bigrams touching `EOS` are only
//! checked when some rule names `EOS` explicitly; otherwise they always pass.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inventory::{hex16, AmbiguityInventory, ClassId, TagId, TagInventory, TagSeq};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    forbid: BTreeSet<(TagId, TagId)>,
    enforce: BTreeMap<TagId, BTreeSet<TagId>>,
    mentions_eos: bool,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.forbid.is_empty() && self.enforce.is_empty()
    }

    /// Whether any rule names `EOS`, which switches on checking of boundary bigrams.
    pub fn mentions_eos(&self) -> bool {
        self.mentions_eos
    }

    pub fn forbidden(&self) -> &BTreeSet<(TagId, TagId)> {
        &self.forbid
    }

    pub fn enforced(&self) -> &BTreeMap<TagId, BTreeSet<TagId>> {
        &self.enforce
    }

    pub fn add_forbid(&mut self, a: TagId, b: TagId) -> Result<()> {
        if self.enforce.get(&a).is_some_and(|s| s.contains(&b)) {
            return Err(Error::RuleConflict(format!(
                "bigram ({}, {}) is both forbidden and enforced",
                a.0, b.0
            )));
        }
        self.mentions_eos |= a == TagId::EOS || b == TagId::EOS;
        self.forbid.insert((a, b));
        Ok(())
    }

    /// Add allowed successors of `a`. Repeated calls extend the set.
    pub fn add_enforce<I: IntoIterator<Item = TagId>>(&mut self, a: TagId, successors: I) -> Result<()> {
        let successors: BTreeSet<TagId> = successors.into_iter().collect();
        if successors.is_empty() {
            return Err(Error::RuleConflict(format!("enforce rule for tag {} has no successors", a.0)));
        }
        if let Some(b) = successors.iter().find(|b| self.forbid.contains(&(a, **b))) {
            return Err(Error::RuleConflict(format!(
                "bigram ({}, {}) is both forbidden and enforced",
                a.0, b.0
            )));
        }
        self.mentions_eos |= a == TagId::EOS || successors.contains(&TagId::EOS);
        self.enforce.entry(a).or_default().extend(successors);
        Ok(())
    }

    /// Parse `FORBID a b` and `ENFORCE a: b,c` lines; `#` starts a comment.
    pub fn parse(text: &str, tags: &TagInventory) -> Result<Self> {
        let mut rules = RuleSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::parse(i + 1, e.to_string());
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match keyword.to_ascii_uppercase().as_str() {
                "FORBID" => {
                    let names: Vec<&str> = rest.split_whitespace().collect();
                    if names.len() != 2 {
                        return Err(Error::parse(i + 1, "expected `FORBID <tagA> <tagB>`"));
                    }
                    let a = tags.id(names[0]).map_err(at)?;
                    let b = tags.id(names[1]).map_err(at)?;
                    rules.add_forbid(a, b).map_err(at)?;
                }
                "ENFORCE" => {
                    let (head, list) = rest
                        .split_once(':')
                        .ok_or_else(|| Error::parse(i + 1, "expected `ENFORCE <tagA>: <tagB>[,...]`"))?;
                    let a = tags.id(head.trim()).map_err(at)?;
                    let successors = list
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|name| tags.id(name))
                        .collect::<Result<BTreeSet<_>>>()
                        .map_err(at)?;
                    if successors.is_empty() {
                        return Err(Error::parse(i + 1, "enforce rule with empty successor list"));
                    }
                    rules.add_enforce(a, successors).map_err(at)?;
                }
                other => return Err(Error::parse(i + 1, format!("unknown rule keyword `{other}`"))),
            }
        }
        Ok(rules)
    }

    /// Canonical rules-file text (sorted, deduplicated).
    pub fn to_text(&self, tags: &TagInventory) -> String {
        let mut out = String::new();
        for (a, b) in &self.forbid {
            out.push_str(&format!("FORBID {} {}\n", tags.name(*a), tags.name(*b)));
        }
        for (a, succ) in &self.enforce {
            let names: Vec<&str> = succ.iter().map(|t| tags.name(*t)).collect();
            out.push_str(&format!("ENFORCE {}: {}\n", tags.name(*a), names.join(",")));
        }
        out
    }

    /// Short digest identifying the rule set, stored in LSW model files.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (a, b) in &self.forbid {
            hasher.update(format!("F {} {}\n", a.0, b.0));
        }
        for (a, succ) in &self.enforce {
            let ids: Vec<String> = succ.iter().map(|t| t.0.to_string()).collect();
            hasher.update(format!("E {} {}\n", a.0, ids.join(",")));
        }
        hex16(&hasher.finalize())
    }

    pub fn bigram_valid(&self, a: TagId, b: TagId) -> bool {
        if !self.mentions_eos && (a == TagId::EOS || b == TagId::EOS) {
            return true;
        }
        if self.forbid.contains(&(a, b)) {
            return false;
        }
        self.enforce.get(&a).is_none_or(|allowed| allowed.contains(&b))
    }

    /// True iff no adjacent pair is forbidden or violates an enforce rule.
    pub fn is_valid(&self, seq: &[TagId]) -> bool {
        seq.windows(2).all(|w| self.bigram_valid(w[0], w[1]))
    }

    /// `V′`: the sequences of `T′(window)` that satisfy every rule.
    pub fn valid_sequences(&self, window: &[ClassId], classes: &AmbiguityInventory) -> Result<Vec<TagSeq>> {
        let mut all = classes.tag_sequences(window)?;
        all.retain(|s| self.is_valid(s));
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (TagInventory, TagId, TagId, TagId, TagId) {
        let tags = TagInventory::parse("det\nnoun\nadj\nvblex\n").unwrap();
        let ids = ["det", "noun", "adj", "vblex"].map(|n| tags.id(n).unwrap());
        (tags, ids[0], ids[1], ids[2], ids[3])
    }

    #[test]
    fn parse_forbid_and_enforce() {
        let (tags, d, n, a, _) = setup();
        let rules = RuleSet::parse("# rules\nFORBID det det\nFORBID det det\nENFORCE det: noun,adj\n", &tags).unwrap();
        assert_eq!(rules.forbidden().len(), 1);
        assert!(rules.forbidden().contains(&(d, d)));
        assert_eq!(rules.enforced()[&d], BTreeSet::from([n, a]));
        assert_eq!(RuleSet::parse(&rules.to_text(&tags), &tags).unwrap(), rules);
    }

    #[test]
    fn parse_errors() {
        let (tags, ..) = setup();
        let unknown = RuleSet::parse("FORBID det adverb\n", &tags).unwrap_err();
        assert!(matches!(unknown, Error::Parse { line: 1, .. }));
        assert!(RuleSet::parse("ENFORCE det:\n", &tags).is_err());
        assert!(RuleSet::parse("ENFORCE det: , \n", &tags).is_err());
        assert!(RuleSet::parse("FORBID det\n", &tags).is_err());
        assert!(RuleSet::parse("ALLOW det noun\n", &tags).is_err());
        let conflict = RuleSet::parse("FORBID det noun\nENFORCE det: noun\n", &tags).unwrap_err();
        assert!(conflict.to_string().contains("both forbidden and enforced"));
    }

    #[test]
    fn validity_semantics() {
        let (_, d, n, _, v) = setup();
        let mut forbid = RuleSet::new();
        forbid.add_forbid(d, d).unwrap();
        assert!(forbid.is_valid(&[d, n]));
        assert!(!forbid.is_valid(&[d, d, n]));
        assert!(forbid.is_valid(&[d]));

        let mut enforce = RuleSet::new();
        enforce.add_enforce(d, [n]).unwrap();
        assert!(!enforce.is_valid(&[d, v]));
        assert!(enforce.is_valid(&[d, n]));
    }

    #[test]
    fn eos_is_permissive_unless_named() {
        let (tags, d, n, ..) = setup();
        let rules = RuleSet::parse("ENFORCE det: noun\n", &tags).unwrap();
        assert!(rules.is_valid(&[d, TagId::EOS]));
        assert!(rules.is_valid(&[TagId::EOS, d]));
        let rules = RuleSet::parse("ENFORCE det: noun\nFORBID EOS noun\n", &tags).unwrap();
        assert!(!rules.is_valid(&[d, TagId::EOS]));
        assert!(!rules.is_valid(&[TagId::EOS, n]));
    }

    #[test]
    fn valid_sequences_filters_product() {
        let (tags, d, n, _, v) = setup();
        let mut classes = AmbiguityInventory::new(&tags);
        let cd = classes.intern([d]).unwrap();
        let cnv = classes.intern([n, v]).unwrap();
        let mut rules = RuleSet::new();
        rules.add_forbid(d, v).unwrap();
        assert_eq!(
            rules.valid_sequences(&[cd, cnv], &classes).unwrap(),
            vec![TagSeq::from_slice(&[d, n])]
        );
        assert_eq!(
            RuleSet::new().valid_sequences(&[cd, cnv], &classes).unwrap(),
            classes.tag_sequences(&[cd, cnv]).unwrap()
        );
        let mut dd = RuleSet::new();
        dd.add_forbid(d, d).unwrap();
        assert!(dd.valid_sequences(&[cd, cd], &classes).unwrap().is_empty());
    }

    #[test]
    fn handles_hundreds_of_rules() {
        let names: Vec<String> = (0..40).map(|i| format!("t{i}")).collect();
        let tags = TagInventory::parse(&names.join("\n")).unwrap();
        let mut text = String::new();
        for i in 0..40 {
            for j in 0..15 {
                text.push_str(&format!("FORBID t{i} t{}\n", (i + j) % 40));
            }
        }
        for i in 0..20 {
            text.push_str(&format!("ENFORCE t{i}: t{},t{}\n", (i + 20) % 40, (i + 21) % 40));
        }
        let rules = RuleSet::parse(&text, &tags).unwrap();
        assert_eq!(rules.forbidden().len(), 600);
        assert_eq!(rules.enforced().len(), 20);
    }
}
