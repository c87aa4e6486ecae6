//! The sliding-window (SW) tagger.
//!
//! Parameters are effective counts `ñ(C₋, γ, C₊)` keyed by the ambiguity
//! classes around a position and the tag chosen there. Training spreads
//! every observed window `C₋ σ C₊` over the tags of `σ` and re-estimates
//! by expectation-maximization.

use std::collections::BTreeMap;

use crate::corpus::{padded_classes, AmbiguousText, WindowCountTable};
use crate::decide::{decide, Decision, TrainOptions};
use crate::error::{Error, Result};
use crate::estimate::Expansion;
use crate::inventory::{AmbiguityInventory, ClassSeq, TagId, WindowSpec};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwKey {
    pub left: ClassSeq,
    pub tag: TagId,
    pub right: ClassSeq,
}

impl SwKey {
    fn of_window(window: &[crate::inventory::ClassId], spec: WindowSpec, tag: TagId) -> Self {
        SwKey {
            left: ClassSeq::from_slice(&window[..spec.n_minus]),
            tag,
            right: ClassSeq::from_slice(&window[spec.n_minus + 1..]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwModel {
    spec: WindowSpec,
    table: BTreeMap<SwKey, f64>,
    global_tag_mass: Vec<f64>,
}

impl SwModel {
    /// Build a model from raw entries; the global tag mass is recomputed.
    pub fn from_table(spec: WindowSpec, table: BTreeMap<SwKey, f64>, n_tags: usize) -> Self {
        let mut model = SwModel {
            spec,
            table,
            global_tag_mass: Vec::new(),
        };
        model.refresh_global_mass(n_tags);
        model
    }

    /// Uniform start: each window's count is split evenly over `T(σ)`.
    pub fn init(counts: &WindowCountTable, classes: &AmbiguityInventory) -> Self {
        let spec = counts.spec();
        let mut table = BTreeMap::new();
        for (window, n) in counts.iter() {
            let sigma = classes.tags(window[spec.n_minus]);
            let share = n as f64 / sigma.len() as f64;
            for &tag in sigma {
                *table.entry(SwKey::of_window(window, spec, tag)).or_insert(0.0) += share;
            }
        }
        Self::from_table(spec, table, classes.tag_count())
    }

    fn expansion(&self, counts: &WindowCountTable, classes: &AmbiguityInventory) -> (Vec<SwKey>, Expansion) {
        let keys: Vec<SwKey> = self.table.keys().cloned().collect();
        let mut exp = Expansion::new(keys.len());
        let spec = self.spec;
        for (window, n) in counts.iter() {
            let idx = classes.tags(window[spec.n_minus]).iter().filter_map(|&tag| {
                keys.binary_search(&SwKey::of_window(window, spec, tag))
                    .ok()
                    .map(|i| i as u32)
            });
            exp.push_window(n as f64, idx.collect::<Vec<_>>());
        }
        (keys, exp)
    }

    fn check_spec(&self, counts: &WindowCountTable) -> Result<()> {
        if counts.spec() != self.spec {
            return Err(Error::SpecMismatch {
                model: self.spec.label(),
                counts: counts.spec().label(),
            });
        }
        Ok(())
    }

    fn with_values(&self, keys: Vec<SwKey>, values: Vec<f64>, n_tags: usize) -> Self {
        Self::from_table(self.spec, keys.into_iter().zip(values).collect(), n_tags)
    }

    /// One re-estimation step over the observed windows.
    pub fn iterate(&self, counts: &WindowCountTable, classes: &AmbiguityInventory) -> Result<Self> {
        self.check_spec(counts)?;
        let (keys, exp) = self.expansion(counts, classes);
        let values: Vec<f64> = self.table.values().copied().collect();
        Ok(self.with_values(keys, exp.step(&values), classes.tag_count()))
    }

    /// Uniform start followed by re-estimation until the iteration cap or
    /// convergence.
    pub fn train(counts: &WindowCountTable, classes: &AmbiguityInventory, opts: &TrainOptions) -> Self {
        let init = Self::init(counts, classes);
        if opts.iterations == 0 {
            return init;
        }
        let (keys, exp) = init.expansion(counts, classes);
        let mut values: Vec<f64> = init.table.values().copied().collect();
        let ran = exp.run(&mut values, opts.iterations, opts.epsilon);
        log::debug!("SW{} trained for {ran} iterations", init.spec);
        init.with_values(keys, values, classes.tag_count())
    }

    fn refresh_global_mass(&mut self, n_tags: usize) {
        let max_tag = self.table.keys().map(|k| k.tag.index() + 1).max().unwrap_or(0);
        let mut mass = vec![0.0; n_tags.max(max_tag)];
        for (k, v) in &self.table {
            mass[k.tag.index()] += v;
        }
        self.global_tag_mass = mass;
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn table(&self) -> &BTreeMap<SwKey, f64> {
        &self.table
    }

    pub fn get(&self, key: &SwKey) -> f64 {
        self.table.get(key).copied().unwrap_or(0.0)
    }

    pub fn global_tag_mass(&self) -> &[f64] {
        &self.global_tag_mass
    }

    /// Number of stored parameters.
    pub fn parameter_count(&self) -> usize {
        self.table.len()
    }

    /// Tag every token by local argmax over `T(σ)`.
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
                    |tag| self.get(&SwKey::of_window(window, spec, tag)),
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
    use crate::corpus::Token;
    use crate::inventory::{ClassId, TagInventory};

    struct Fx {
        classes: AmbiguityInventory,
        d: TagId,
        n: TagId,
        v: TagId,
        cd: ClassId,
        cn: ClassId,
        cnv: ClassId,
    }

    fn fx() -> Fx {
        let tags = TagInventory::parse("D\nN\nV\n").unwrap();
        let [d, n, v] = ["D", "N", "V"].map(|s| tags.id(s).unwrap());
        let mut classes = AmbiguityInventory::new(&tags);
        let cd = classes.intern([d]).unwrap();
        let cn = classes.intern([n]).unwrap();
        let cnv = classes.intern([n, v]).unwrap();
        Fx { classes, d, n, v, cd, cn, cnv }
    }

    fn spec() -> WindowSpec {
        WindowSpec::new(1, 1).unwrap()
    }

    fn key(l: ClassId, t: TagId, r: ClassId) -> SwKey {
        SwKey {
            left: ClassSeq::from_slice(&[l]),
            tag: t,
            right: ClassSeq::from_slice(&[r]),
        }
    }

    fn doc(classes: &[ClassId]) -> Vec<Token> {
        classes
            .iter()
            .map(|&class| Token { surface: "w".into(), class, gold: None })
            .collect()
    }

    #[test]
    fn init_splits_uniformly() {
        let f = fx();
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cnv, ClassId::EOS]), 4);
        counts.add(ClassSeq::from_slice(&[f.cd, f.cn, ClassId::EOS]), 7);
        let m = SwModel::init(&counts, &f.classes);
        assert_eq!(m.get(&key(f.cd, f.n, ClassId::EOS)), 2.0 + 7.0);
        assert_eq!(m.get(&key(f.cd, f.v, ClassId::EOS)), 2.0);
    }

    #[test]
    fn single_class_context_is_already_fixed() {
        let f = fx();
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cnv, ClassId::EOS]), 4);
        let mut table = BTreeMap::new();
        table.insert(key(f.cd, f.n, ClassId::EOS), 3.0);
        table.insert(key(f.cd, f.v, ClassId::EOS), 1.0);
        let m = SwModel::from_table(spec(), table, f.classes.tag_count());
        let next = m.iterate(&counts, &f.classes).unwrap();
        assert_eq!(next.get(&key(f.cd, f.n, ClassId::EOS)), 3.0);
        assert_eq!(next.get(&key(f.cd, f.v, ClassId::EOS)), 1.0);
    }

    #[test]
    fn two_classes_sharing_a_context() {
        // context (D, EOS) holds σ={N} x2 and σ={N,V} x2.
        // init: ñ(N)=2+1=3, ñ(V)=1
        // step: ñ(N)=3*(2/3 + 2/4)=3.5, ñ(V)=1*(2/4)=0.5
        let f = fx();
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cn, ClassId::EOS]), 2);
        counts.add(ClassSeq::from_slice(&[f.cd, f.cnv, ClassId::EOS]), 2);
        let m = SwModel::init(&counts, &f.classes);
        assert_eq!(m.get(&key(f.cd, f.n, ClassId::EOS)), 3.0);
        let next = m.iterate(&counts, &f.classes).unwrap();
        assert!((next.get(&key(f.cd, f.n, ClassId::EOS)) - 3.5).abs() < 1e-12);
        assert!((next.get(&key(f.cd, f.v, ClassId::EOS)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let f = fx();
        let mut counts = WindowCountTable::new(spec());
        counts.add(ClassSeq::from_slice(&[f.cd, f.cn, ClassId::EOS]), 1);
        let m = SwModel::init(&counts, &f.classes);
        let other = WindowCountTable::new(WindowSpec::new(1, 0).unwrap());
        assert!(matches!(m.iterate(&other, &f.classes), Err(Error::SpecMismatch { .. })));
    }

    #[test]
    fn zero_iterations_equal_init() {
        let f = fx();
        let text = AmbiguousText::from_documents([doc(&[f.cd, f.cnv, f.cn, f.cnv])]);
        let counts = crate::corpus::count_windows(&text, spec());
        let init = SwModel::init(&counts, &f.classes);
        assert_eq!(SwModel::train(&counts, &f.classes, &TrainOptions::exact(0)), init);
    }

    #[test]
    fn tagging_argmax_and_fallback() {
        let f = fx();
        let mut table = BTreeMap::new();
        table.insert(key(f.cd, f.n, ClassId::EOS), 5.0);
        table.insert(key(f.cd, f.v, ClassId::EOS), 1.0);
        table.insert(key(ClassId::EOS, f.d, f.cnv), 1.0);
        // unseen context elsewhere: V dominates global mass
        table.insert(key(f.cn, f.v, f.cn), 10.0);
        let m = SwModel::from_table(spec(), table, f.classes.tag_count());
        let text = AmbiguousText::from_documents([doc(&[f.cd, f.cnv]), doc(&[f.cnv]), doc(&[f.cn])]);
        let tags = m.tag(&text, &f.classes);
        assert_eq!(tags, vec![f.d, f.n, f.v, f.n]);
        let kinds: Vec<_> = m.decisions(&text, &f.classes).iter().map(|d| d.kind).collect();
        use crate::decide::DecisionKind::*;
        assert_eq!(kinds, vec![Unambiguous, Scored, Fallback, Unambiguous]);
    }
}
