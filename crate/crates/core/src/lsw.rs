//! The light sliding-window (LSW) tagger.
//!
//! Parameters are effective counts `ñ(E₋ γ E₊)` keyed by tag sequences, so
//! the parameter space grows with `|Γ|` rather than with the number of
//! ambiguity classes. Each observed class window `C₋ σ C₊` is expanded into
//! the tag sequences it admits (`T′`, or `V′` when forbid/enforce rules are
//! given) and the counts are re-estimated by expectation-maximization.

use std::collections::BTreeMap;

use crate::corpus::{padded_classes, AmbiguousText, WindowCountTable};
use crate::decide::{decide, Decision, TrainOptions};
use crate::error::{Error, Result};
use crate::estimate::Expansion;
use crate::inventory::{AmbiguityInventory, TagId, TagSeq, WindowSpec};
use crate::rules::RuleSet;

#[derive(Clone, Debug, PartialEq)]
pub struct LswModel {
    spec: WindowSpec,
    /// Keys are full tag windows `E₋ · γ · E₊`.
    table: BTreeMap<TagSeq, f64>,
    rules_applied: bool,
    rules_fingerprint: Option<String>,
    global_tag_mass: Vec<f64>,
}

impl LswModel {
    pub fn from_table(
        spec: WindowSpec,
        table: BTreeMap<TagSeq, f64>,
        rules_fingerprint: Option<String>,
        n_tags: usize,
    ) -> Self {
        let mut model = LswModel {
            spec,
            table,
            rules_applied: rules_fingerprint.is_some(),
            rules_fingerprint,
            global_tag_mass: Vec::new(),
        };
        model.refresh_global_mass(n_tags);
        model
    }

    /// Spread each window's count evenly over its valid tag sequences.
    ///
    /// Invalid sequences get an explicit zero entry. A window whose every
    /// sequence is invalid keeps its mass, spread over all of `T′`.
    pub fn init(counts: &WindowCountTable, classes: &AmbiguityInventory, rules: Option<&RuleSet>) -> Self {
        let spec = counts.spec();
        let mut table: BTreeMap<TagSeq, f64> = BTreeMap::new();
        let mut seqs: Vec<TagSeq> = Vec::new();
        let mut valid: Vec<bool> = Vec::new();
        let mut empty_windows = 0usize;
        for (window, n) in counts.iter() {
            seqs.clear();
            classes.for_each_sequence(window, |s| seqs.push(TagSeq::from_slice(s)));
            valid.clear();
            valid.extend(seqs.iter().map(|s| rules.is_none_or(|r| r.is_valid(s))));
            let mut n_valid = valid.iter().filter(|v| **v).count();
            if n_valid == 0 {
                empty_windows += 1;
                valid.iter_mut().for_each(|v| *v = true);
                n_valid = seqs.len();
            }
            let share = n as f64 / n_valid as f64;
            for (seq, ok) in seqs.drain(..).zip(&valid) {
                let entry = table.entry(seq).or_insert(0.0);
                if *ok {
                    *entry += share;
                }
            }
        }
        if empty_windows > 0 {
            log::warn!(
                "{empty_windows} window(s) admit no rule-valid tag sequence; their mass was spread over all sequences"
            );
        }
        Self::from_table(spec, table, rules.map(RuleSet::fingerprint), classes.tag_count())
    }

    fn expansion(&self, counts: &WindowCountTable, classes: &AmbiguityInventory) -> (Vec<TagSeq>, Expansion) {
        let keys: Vec<TagSeq> = self.table.keys().cloned().collect();
        let mut exp = Expansion::new(keys.len());
        let mut idx = Vec::new();
        for (window, n) in counts.iter() {
            idx.clear();
            classes.for_each_sequence(window, |s| {
                if let Ok(i) = keys.binary_search_by(|k| k.as_slice().cmp(s)) {
                    idx.push(i as u32);
                }
            });
            exp.push_window(n as f64, idx.iter().copied());
        }
        (keys, exp)
    }

    fn with_values(&self, keys: Vec<TagSeq>, values: Vec<f64>, n_tags: usize) -> Self {
        let mut model = LswModel {
            spec: self.spec,
            table: keys.into_iter().zip(values).collect(),
            rules_applied: self.rules_applied,
            rules_fingerprint: self.rules_fingerprint.clone(),
            global_tag_mass: Vec::new(),
        };
        model.refresh_global_mass(n_tags);
        model
    }

    /// One re-estimation step.
    pub fn iterate(&self, counts: &WindowCountTable, classes: &AmbiguityInventory) -> Result<Self> {
        if counts.spec() != self.spec {
            return Err(Error::SpecMismatch {
                model: self.spec.label(),
                counts: counts.spec().label(),
            });
        }
        let (keys, exp) = self.expansion(counts, classes);
        let values: Vec<f64> = self.table.values().copied().collect();
        Ok(self.with_values(keys, exp.step(&values), classes.tag_count()))
    }

    pub fn train(
        counts: &WindowCountTable,
        classes: &AmbiguityInventory,
        rules: Option<&RuleSet>,
        opts: &TrainOptions,
    ) -> Self {
        let init = Self::init(counts, classes, rules);
        if opts.iterations == 0 {
            return init;
        }
        let (keys, exp) = init.expansion(counts, classes);
        let mut values: Vec<f64> = init.table.values().copied().collect();
        let ran = exp.run(&mut values, opts.iterations, opts.epsilon);
        log::debug!("LSW{} trained for {ran} iterations", init.spec);
        init.with_values(keys, values, classes.tag_count())
    }

    fn refresh_global_mass(&mut self, n_tags: usize) {
        let centre = self.spec.n_minus;
        let max_tag = self.table.keys().map(|k| k[centre].index() + 1).max().unwrap_or(0);
        let mut mass = vec![0.0; n_tags.max(max_tag)];
        for (k, v) in &self.table {
            mass[k[centre].index()] += v;
        }
        self.global_tag_mass = mass;
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn table(&self) -> &BTreeMap<TagSeq, f64> {
        &self.table
    }

    pub fn get(&self, key: &[TagId]) -> f64 {
        self.table.get(key).copied().unwrap_or(0.0)
    }

    pub fn rules_applied(&self) -> bool {
        self.rules_applied
    }

    pub fn rules_fingerprint(&self) -> Option<&str> {
        self.rules_fingerprint.as_deref()
    }

    pub fn global_tag_mass(&self) -> &[f64] {
        &self.global_tag_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.table.values().sum()
    }

    pub fn parameter_count(&self) -> usize {
        self.table.len()
    }

    /// Upper bound on the key space, `|Γ|^(N₋ + N₊ + 1)`.
    pub fn key_space_bound(&self, n_tags: usize) -> u128 {
        (n_tags as u128).pow(self.spec.width() as u32)
    }

    /// Score of `tag` at a position: the sum of `ñ(E₋ tag E₊)` over every
    /// tag sequence compatible with the surrounding classes.
    pub fn score(&self, window: &[crate::inventory::ClassId], tag: TagId, classes: &AmbiguityInventory) -> f64 {
        let centre = self.spec.n_minus;
        let mut key: TagSeq = TagSeq::new();
        let mut total = 0.0;
        let mut context: crate::inventory::ClassSeq = window.iter().copied().collect();
        context.remove(centre);
        classes.for_each_sequence(&context, |ctx| {
            key.clear();
            key.extend_from_slice(&ctx[..centre]);
            key.push(tag);
            key.extend_from_slice(&ctx[centre..]);
            total += self.get(&key);
        });
        total
    }

    pub fn tag(&self, text: &AmbiguousText, classes: &AmbiguityInventory) -> Vec<TagId> {
        self.decisions(text, classes).into_iter().map(|d| d.tag).collect()
    }

    pub fn decisions(&self, text: &AmbiguousText, classes: &AmbiguityInventory) -> Vec<Decision> {
        let spec = self.spec;
        let mut out = Vec::with_capacity(text.len());
        for doc in text.documents() {
            let padded = padded_classes(doc, spec);
            for window in padded.windows(spec.width()) {
                let candidates = classes.tags(window[spec.n_minus]);
                out.push(decide(
                    candidates,
                    |tag| self.score(window, tag, classes),
                    &self.global_tag_mass,
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{count_windows, Token};
    use crate::inventory::{ClassId, ClassSeq, TagInventory};

    struct Fx {
        classes: AmbiguityInventory,
        d: TagId,
        n: TagId,
        v: TagId,
        adj: TagId,
        cd: ClassId,
        cnv: ClassId,
        cdadj: ClassId,
    }

    fn fx() -> Fx {
        let tags = TagInventory::parse("D\nN\nV\nADJ\n").unwrap();
        let [d, n, v, adj] = ["D", "N", "V", "ADJ"].map(|s| tags.id(s).unwrap());
        let mut classes = AmbiguityInventory::new(&tags);
        let cd = classes.intern([d]).unwrap();
        let cnv = classes.intern([n, v]).unwrap();
        let cdadj = classes.intern([d, adj]).unwrap();
        Fx { classes, d, n, v, adj, cd, cnv, cdadj }
    }

    fn spec() -> WindowSpec {
        WindowSpec::new(1, 1).unwrap()
    }

    fn seq(t: &[TagId]) -> TagSeq {
        TagSeq::from_slice(t)
    }

    fn one_window(f: &Fx, n: u64) -> WindowCountTable {
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cnv, ClassId::EOS]), n);
        counts
    }

    #[test]
    fn uniform_init() {
        let f = fx();
        let m = LswModel::init(&one_window(&f, 4), &f.classes, None);
        assert_eq!(m.get(&[f.d, f.n, TagId::EOS]), 2.0);
        assert_eq!(m.get(&[f.d, f.v, TagId::EOS]), 2.0);
        assert!(!m.rules_applied());
    }

    #[test]
    fn rule_constrained_init() {
        let f = fx();
        let mut rules = RuleSet::new();
        rules.add_forbid(f.d, f.v).unwrap();
        let m = LswModel::init(&one_window(&f, 4), &f.classes, Some(&rules));
        assert_eq!(m.get(&[f.d, f.n, TagId::EOS]), 4.0);
        assert_eq!(m.get(&[f.d, f.v, TagId::EOS]), 0.0);
        assert!(m.table().contains_key(&seq(&[f.d, f.v, TagId::EOS])));
        assert!(m.rules_applied());
    }

    #[test]
    fn empty_rule_set_matches_no_rules() {
        let f = fx();
        let counts = one_window(&f, 4);
        let none = LswModel::init(&counts, &f.classes, None);
        let empty = LswModel::init(&counts, &f.classes, Some(&RuleSet::new()));
        assert_eq!(none.table(), empty.table());
    }

    #[test]
    fn contradictory_window_keeps_its_mass() {
        let f = fx();
        let mut rules = RuleSet::new();
        rules.add_forbid(f.d, f.n).unwrap();
        rules.add_forbid(f.d, f.v).unwrap();
        let m = LswModel::init(&one_window(&f, 4), &f.classes, Some(&rules));
        assert_eq!(m.total_mass(), 4.0);
        assert_eq!(m.get(&[f.d, f.n, TagId::EOS]), 2.0);
    }

    #[test]
    fn singleton_window_gets_all_mass() {
        let f = fx();
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cd, ClassId::EOS]), 3);
        let m = LswModel::init(&counts, &f.classes, None);
        assert_eq!(m.table().len(), 1);
        assert_eq!(m.get(&[f.d, f.d, TagId::EOS]), 3.0);
    }

    #[test]
    fn iteration_by_hand() {
        // windows: (D, {N,V}, EOS) x2 and ({D,ADJ}, {N,V}, EOS) x2
        // init: DN=1+0.5, DV=1+0.5, AN=0.5, AV=0.5 (each followed by EOS)
        // step: window 1 denom 3, window 2 denom 4
        //   DN = 1.5 * (2/3 + 2/4) = 1.75
        //   AN = 0.5 * (2/4) = 0.25
        let f = fx();
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cnv, ClassId::EOS]), 2);
        counts.add(ClassSeq::from_slice(&[f.cdadj, f.cnv, ClassId::EOS]), 2);
        let m = LswModel::init(&counts, &f.classes, None);
        assert_eq!(m.get(&[f.d, f.n, TagId::EOS]), 1.5);
        let next = m.iterate(&counts, &f.classes).unwrap();
        assert!((next.get(&[f.d, f.n, TagId::EOS]) - 1.75).abs() < 1e-12);
        assert!((next.get(&[f.adj, f.n, TagId::EOS]) - 0.25).abs() < 1e-12);
        assert!((next.total_mass() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn score_sums_over_context_expansion() {
        let f = fx();
        let mut table = BTreeMap::new();
        table.insert(seq(&[f.d, f.n, TagId::EOS]), 4.0);
        table.insert(seq(&[f.adj, f.n, TagId::EOS]), 2.0);
        table.insert(seq(&[f.d, f.v, TagId::EOS]), 1.0);
        table.insert(seq(&[f.adj, f.v, TagId::EOS]), 1.0);
        let m = LswModel::from_table(spec(), table, None, f.classes.tag_count());
        let window = [f.cdadj, f.cnv, ClassId::EOS];
        assert_eq!(m.score(&window, f.n, &f.classes), 6.0);
        assert_eq!(m.score(&window, f.v, &f.classes), 2.0);
        let text = AmbiguousText::from_documents([vec![
            Token { surface: "a".into(), class: f.cdadj, gold: None },
            Token { surface: "b".into(), class: f.cnv, gold: None },
        ]]);
        assert_eq!(m.tag(&text, &f.classes)[1], f.n);
    }

    #[test]
    fn zero_iterations_equal_init() {
        let f = fx();
        let text = AmbiguousText::from_documents([vec![
            Token { surface: "a".into(), class: f.cd, gold: None },
            Token { surface: "b".into(), class: f.cnv, gold: None },
        ]]);
        let counts = count_windows(&text, spec());
        assert_eq!(
            LswModel::train(&counts, &f.classes, None, &TrainOptions::exact(0)),
            LswModel::init(&counts, &f.classes, None)
        );
    }
}
