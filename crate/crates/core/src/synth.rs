//! Seeded synthetic corpora from a first-order Markov tag source.
//!
//! A synthetic language is described in a small key-value text file:
//!
//! ```text
//! # tags, in id order (EOS is implicit and is id 0)
//! tags D N V ADJ
//! length 50000
//! seed 7
//! # transitions: trans <from> <to>:<p> ...; EOS starts and ends documents
//! trans EOS D:0.6 N:0.4
//! trans D N:0.7 ADJ:0.3
//! # emissions: emit <tag> <class>:<p> ...; a class is a comma-separated tag set
//! emit N N:0.5 N,V:0.5
//! # optional lines copied into the rules file the CLI writes
//! rule FORBID D V
//! ```
//!
//! Rows must be stochastic, `EOS → EOS` must be zero, and every emitted
//! class must contain the emitting tag.

use std::collections::{BTreeSet, VecDeque};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AmbiguousText, Token};
use crate::error::{Error, Result};
use crate::inventory::{AmbiguityInventory, ClassId, Lexicon, TagId, TagInventory, EOS_NAME};

const STOCHASTIC_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Tag names without `EOS`; tag `i` gets id `i + 1`.
    pub tags: Vec<String>,
    /// Square matrix over `EOS` plus `tags`, row = from.
    pub transitions: Vec<Vec<f64>>,
    /// Per tag id (index 0 unused): class tag-sets with probabilities.
    pub emissions: Vec<Vec<(Vec<TagId>, f64)>>,
    pub length: usize,
    pub seed: u64,
    /// Raw rule lines for the generated language.
    pub rules: Vec<String>,
}

impl SyntheticSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut tags: Option<TagInventory> = None;
        let mut length = None;
        let mut seed = None;
        let mut rules = Vec::new();
        let mut trans_lines = Vec::new();
        let mut emit_lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "tags" => {
                    let mut inv = TagInventory::new();
                    for name in rest.split_whitespace() {
                        inv.add(name).map_err(|e| Error::parse(ln, e.to_string()))?;
                    }
                    tags = Some(inv);
                }
                "length" => length = Some(rest.parse().map_err(|_| Error::parse(ln, "bad length"))?),
                "seed" => seed = Some(rest.parse().map_err(|_| Error::parse(ln, "bad seed"))?),
                "rule" => rules.push(rest.to_string()),
                "trans" => trans_lines.push((ln, rest.to_string())),
                "emit" => emit_lines.push((ln, rest.to_string())),
                other => return Err(Error::parse(ln, format!("unknown key `{other}`"))),
            }
        }
        let tags = tags.ok_or_else(|| Error::InvalidSynthetic("missing `tags` line".into()))?;
        let n = tags.len();
        let mut transitions = vec![vec![0.0; n]; n];
        for (ln, line) in trans_lines {
            let (from, cells) = split_row(ln, &line)?;
            let from = tags.id(from).map_err(|e| Error::parse(ln, e.to_string()))?;
            for (to, p) in cells {
                let to = tags.id(&to).map_err(|e| Error::parse(ln, e.to_string()))?;
                transitions[from.index()][to.index()] += p;
            }
        }
        let mut emissions = vec![Vec::new(); n];
        for (ln, line) in emit_lines {
            let (tag, cells) = split_row(ln, &line)?;
            let tag = tags.id(tag).map_err(|e| Error::parse(ln, e.to_string()))?;
            for (set, p) in cells {
                let ids = set
                    .split(',')
                    .map(|name| tags.id(name.trim()))
                    .collect::<Result<BTreeSet<_>>>()
                    .map_err(|e| Error::parse(ln, e.to_string()))?;
                emissions[tag.index()].push((ids.into_iter().collect(), p));
            }
        }
        Ok(SyntheticSpec {
            tags: tags.ids().skip(1).map(|t| tags.name(t).to_string()).collect(),
            transitions,
            emissions,
            length: length.unwrap_or(10_000),
            seed: seed.unwrap_or(0),
            rules,
        })
    }
}

fn split_row(ln: usize, line: &str) -> Result<(&str, Vec<(String, f64)>)> {
    let mut parts = line.split_whitespace();
    let head = parts.next().ok_or_else(|| Error::parse(ln, "empty row"))?;
    let cells = parts
        .map(|cell| {
            let (name, p) = cell
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(ln, format!("expected `name:p`, got `{cell}`")))?;
            let p: f64 = p.parse().map_err(|_| Error::parse(ln, format!("bad probability `{p}`")))?;
            Ok((name.to_string(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((head, cells))
}

/// A validated synthetic language with its inventories and lexicon.
#[derive(Clone, Debug)]
pub struct SyntheticLanguage {
    pub tags: TagInventory,
    pub classes: AmbiguityInventory,
    pub lexicon: Lexicon,
    transitions: Vec<Option<WeightedIndex<f64>>>,
    emissions: Vec<Option<(Vec<ClassId>, WeightedIndex<f64>)>>,
    surfaces: Vec<String>,
}

impl SyntheticLanguage {
    pub fn new(spec: &SyntheticSpec) -> Result<Self> {
        let invalid = |m: String| Error::InvalidSynthetic(m);
        let mut tags = TagInventory::new();
        for name in &spec.tags {
            tags.add(name)?;
        }
        let n = tags.len();
        if spec.transitions.len() != n || spec.transitions.iter().any(|r| r.len() != n) {
            return Err(invalid(format!("transition matrix must be {n}×{n}")));
        }
        if spec.emissions.len() != n {
            return Err(invalid(format!("emission table must have {n} rows")));
        }
        if spec.transitions[0][0] != 0.0 {
            return Err(invalid("EOS → EOS must have probability 0".into()));
        }
        let mut transitions = Vec::with_capacity(n);
        for (i, row) in spec.transitions.iter().enumerate() {
            check_row(row.iter().copied(), tags.name(TagId(i as u32)), "transition")?;
            transitions.push(Some(WeightedIndex::new(row).map_err(|e| invalid(e.to_string()))?));
        }

        let mut classes = AmbiguityInventory::new(&tags);
        let mut lexicon = Lexicon::new();
        let mut surfaces = vec![EOS_NAME.to_string()];
        let mut emissions = vec![None];
        let mut emitted = vec![false; 1];
        for (i, row) in spec.emissions.iter().enumerate().skip(1) {
            let tag = TagId(i as u32);
            check_row(row.iter().map(|c| c.1), tags.name(tag), "emission")?;
            let mut ids = Vec::with_capacity(row.len());
            for (set, p) in row {
                if !set.contains(&tag) {
                    return Err(invalid(format!(
                        "tag {} emits a class that does not contain it",
                        tags.name(tag)
                    )));
                }
                let class = classes.intern(set.iter().copied())?;
                if class.index() >= surfaces.len() {
                    let names: Vec<&str> = set.iter().map(|t| tags.name(*t)).collect();
                    let surface = names.join("+").to_lowercase();
                    lexicon.insert(&surface, class);
                    surfaces.push(surface);
                    emitted.push(false);
                }
                if *p > 0.0 {
                    emitted[class.index()] = true;
                }
                ids.push(class);
            }
            let weights: Vec<f64> = row.iter().map(|c| c.1).collect();
            emissions.push(Some((ids, WeightedIndex::new(&weights).map_err(|e| invalid(e.to_string()))?)));
        }
        if let Some(c) = emitted.iter().skip(1).position(|e| !e) {
            return Err(invalid(format!("class `{}` is never emitted", surfaces[c + 1])));
        }
        check_reachable(&spec.transitions, &tags)?;
        Ok(SyntheticLanguage {
            tags,
            classes,
            lexicon,
            transitions,
            emissions,
            surfaces,
        })
    }

    pub fn surface(&self, class: ClassId) -> &str {
        &self.surfaces[class.index()]
    }

    /// Sample `length` tokens. Returns the gold-tagged text and an untagged
    /// copy. The same seed always yields the same corpus.
    pub fn generate(&self, length: usize, seed: u64) -> (AmbiguousText, AmbiguousText) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gold = AmbiguousText::new();
        let mut doc = Vec::new();
        let mut state = TagId::EOS;
        let mut produced = 0;
        while produced < length {
            let next = match &self.transitions[state.index()] {
                Some(dist) => TagId(dist.sample(&mut rng) as u32),
                None => TagId::EOS,
            };
            if next == TagId::EOS {
                gold.push_document(std::mem::take(&mut doc));
                state = TagId::EOS;
                continue;
            }
            let (ids, dist) = self.emissions[next.index()]
                .as_ref()
                .expect("validated: every tag has an emission row");
            let class = ids[dist.sample(&mut rng)];
            doc.push(Token {
                surface: self.surfaces[class.index()].clone(),
                class,
                gold: Some(next),
            });
            produced += 1;
            state = next;
        }
        gold.push_document(doc);
        let untagged = gold.without_gold();
        (gold, untagged)
    }
}

fn check_row<I: Iterator<Item = f64>>(row: I, name: &str, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for p in row {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidSynthetic(format!("{what} row of {name} has a bad probability")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::InvalidSynthetic(format!(
            "{what} row of {name} sums to {sum}, not 1"
        )));
    }
    Ok(())
}

fn check_reachable(transitions: &[Vec<f64>], tags: &TagInventory) -> Result<()> {
    let n = transitions.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for (j, &p) in transitions[i].iter().enumerate() {
            if p > 0.0 && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(j) => Err(Error::InvalidSynthetic(format!(
            "tag {} is unreachable from EOS",
            tags.name(TagId(j as u32))
        ))),
        None => Ok(()),
    }
}

/// Convenience wrapper: build the language and sample with the spec's own
/// length and seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SyntheticLanguage, AmbiguousText, AmbiguousText)> {
    let lang = SyntheticLanguage::new(spec)?;
    let (gold, untagged) = lang.generate(spec.length, spec.seed);
    Ok((lang, gold, untagged))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = "
tags D N V
length 2000
seed 11
trans EOS D:0.7 N:0.3
trans D N:1.0
trans N V:0.6 EOS:0.4
trans V D:0.5 N:0.2 EOS:0.3
emit D D:1.0
emit N N:0.6 N,V:0.4
emit V V:0.5 N,V:0.5
rule FORBID D V
";

    #[test]
    fn parses_and_generates_deterministically() {
        let spec = SyntheticSpec::parse(SPEC).unwrap();
        assert_eq!(spec.tags, vec!["D", "N", "V"]);
        assert_eq!(spec.rules, vec!["FORBID D V"]);
        let (lang, gold, untagged) = generate_synthetic(&spec).unwrap();
        assert_eq!(gold.len(), 2000);
        assert!(untagged.tokens().iter().all(|t| t.gold.is_none()));
        assert!(gold.tokens().iter().all(|t| lang.classes.tags(t.class).contains(&t.gold.unwrap())));
        let (again, _) = lang.generate(2000, 11);
        assert_eq!(again, gold);
        let (other, _) = lang.generate(2000, 12);
        assert_ne!(other, gold);
        assert_eq!(lang.lexicon.get("n+v"), lang.classes.find(&[TagId(2), TagId(3)]));
    }

    #[test]
    fn deterministic_chain_gives_constant_tags() {
        let spec = SyntheticSpec::parse(
            "tags A B\ntrans EOS A:1\ntrans A A:1\ntrans B EOS:1\nemit A A:1\nemit B B:1\n",
        );
        // B is unreachable here
        assert!(SyntheticLanguage::new(&spec.unwrap()).is_err());
        let spec = SyntheticSpec::parse("tags A\ntrans EOS A:1\ntrans A A:1\nemit A A:1\n").unwrap();
        let lang = SyntheticLanguage::new(&spec).unwrap();
        let (gold, _) = lang.generate(500, 3);
        assert!(gold.tokens().iter().all(|t| t.gold == Some(TagId(1))));
        assert_eq!(gold.document_count(), 1);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let bad = SyntheticSpec::parse(&SPEC.replace("trans D N:1.0", "trans D N:0.9")).unwrap();
        assert!(matches!(SyntheticLanguage::new(&bad), Err(Error::InvalidSynthetic(_))));
        let bad = SyntheticSpec::parse(&SPEC.replace("emit D D:1.0", "emit D N:1.0")).unwrap();
        assert!(SyntheticLanguage::new(&bad).is_err());
        let bad = SyntheticSpec::parse(&SPEC.replace("trans EOS D:0.7 N:0.3", "trans EOS EOS:1")).unwrap();
        assert!(SyntheticLanguage::new(&bad).is_err());
        assert!(SyntheticSpec::parse("tags A\nbogus 1\n").is_err());
    }

    #[test]
    fn bigram_frequencies_follow_the_matrix() {
        let spec = SyntheticSpec::parse(SPEC).unwrap();
        let lang = SyntheticLanguage::new(&spec).unwrap();
        let (gold, _) = lang.generate(100_000, 5);
        let n = lang.tags.len();
        let mut counts = vec![vec![0usize; n]; n];
        for doc in gold.documents() {
            let mut prev = 0;
            for t in doc {
                let g = t.gold.unwrap().index();
                counts[prev][g] += 1;
                prev = g;
            }
            counts[prev][0] += 1;
        }
        for (i, row) in counts.iter().enumerate() {
            let total: usize = row.iter().sum();
            for (j, &c) in row.iter().enumerate() {
                let freq = c as f64 / total as f64;
                let diff = (freq - spec.transitions[i][j]).abs();
                assert!(diff < 0.02, "{i}->{j}: {freq} vs {}", spec.transitions[i][j]);
            }
        }
    }
}
