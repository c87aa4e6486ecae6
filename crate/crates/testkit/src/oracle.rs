//! Brute-force reference estimators.

use std::collections::BTreeMap;

use swtag::{AmbiguityInventory, AmbiguousText, ClassId, HmmModel, RuleSet, TagId, Token, WindowSpec};

/// Window counts, computed from scratch with per-document padding.
pub fn windows(text: &AmbiguousText, spec: WindowSpec) -> BTreeMap<Vec<ClassId>, u64> {
    let mut counts = BTreeMap::new();
    for doc in text.documents() {
        for i in 0..doc.len() {
            let window: Vec<ClassId> = (0..spec.width())
                .map(|k| {
                    let pos = i as isize + k as isize - spec.n_minus as isize;
                    if pos < 0 || pos >= doc.len() as isize {
                        ClassId::EOS
                    } else {
                        doc[pos as usize].class
                    }
                })
                .collect();
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

fn member(classes: &AmbiguityInventory, class: ClassId, tag: TagId) -> bool {
    classes.tags_of(class).unwrap().contains(&tag)
}

/// `(left context, tag, right context)` keys of the SW table.
pub type SwEntry = (Vec<ClassId>, TagId, Vec<ClassId>);

/// SW counts after the uniform start and `k` re-estimation steps. Every
/// combination of observed left context, observed right context and tag
/// is a key; combinations never seen stay at zero.
pub fn sw(
    text: &AmbiguousText,
    spec: WindowSpec,
    classes: &AmbiguityInventory,
    k: usize,
) -> BTreeMap<SwEntry, f64> {
    let counts = windows(text, spec);
    let split = |w: &Vec<ClassId>| (w[..spec.n_minus].to_vec(), w[spec.n_minus], w[spec.n_minus + 1..].to_vec());
    let mut contexts: Vec<(Vec<ClassId>, Vec<ClassId>)> = counts
        .keys()
        .map(|w| {
            let (l, _, r) = split(w);
            (l, r)
        })
        .collect();
    contexts.sort();
    contexts.dedup();
    let n_of = |l: &[ClassId], sigma: ClassId, r: &[ClassId]| -> f64 {
        let mut w = l.to_vec();
        w.push(sigma);
        w.extend_from_slice(r);
        counts.get(&w).copied().unwrap_or(0) as f64
    };
    let all_classes: Vec<ClassId> = classes.classes().map(|(c, _)| c).collect();

    let mut table = BTreeMap::new();
    for (l, r) in &contexts {
        for t in 0..classes.tag_count() {
            let gamma = TagId(t as u32);
            let mut v = 0.0;
            for &sigma in &all_classes {
                if member(classes, sigma, gamma) {
                    v += n_of(l, sigma, r) / classes.tags_of(sigma).unwrap().len() as f64;
                }
            }
            table.insert((l.clone(), gamma, r.clone()), v);
        }
    }
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for ((l, gamma, r), old) in &table {
            let mut factor = 0.0;
            for &sigma in &all_classes {
                if !member(classes, sigma, *gamma) {
                    continue;
                }
                let n = n_of(l, sigma, r);
                if n == 0.0 {
                    continue;
                }
                let denom: f64 = classes
                    .tags_of(sigma)
                    .unwrap()
                    .iter()
                    .map(|g| table[&(l.clone(), *g, r.clone())])
                    .sum();
                if denom > 0.0 {
                    factor += n / denom;
                }
            }
            next.insert((l.clone(), *gamma, r.clone()), old * factor);
        }
        table = next;
    }
    table
}

/// Rule validity written directly from the rule definitions.
pub fn valid(rules: &RuleSet, seq: &[TagId]) -> bool {
    seq.windows(2).all(|pair| {
        let (a, b) = (pair[0], pair[1]);
        if (a == TagId::EOS || b == TagId::EOS) && !rules.mentions_eos() {
            return true;
        }
        if rules.forbidden().contains(&(a, b)) {
            return false;
        }
        match rules.enforced().get(&a) {
            Some(allowed) => allowed.contains(&b),
            None => true,
        }
    })
}

fn compatible(classes: &AmbiguityInventory, seq: &[TagId], window: &[ClassId]) -> bool {
    seq.iter().zip(window).all(|(t, c)| member(classes, *c, *t))
}

fn all_sequences(n_tags: usize, width: usize) -> Vec<Vec<TagId>> {
    let mut out = vec![Vec::new()];
    for _ in 0..width {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n_tags).map(move |t| {
                    let mut s = prefix.clone();
                    s.push(TagId(t as u32));
                    s
                })
            })
            .collect();
    }
    out
}

/// LSW counts over the full key space `Γ^width` after the rule-aware
/// start and `k` re-estimation steps.
pub fn lsw(
    text: &AmbiguousText,
    spec: WindowSpec,
    classes: &AmbiguityInventory,
    rules: Option<&RuleSet>,
    k: usize,
) -> BTreeMap<Vec<TagId>, f64> {
    let counts = windows(text, spec);
    let keys = all_sequences(classes.tag_count(), spec.width());
    let is_valid = |s: &[TagId]| rules.is_none_or(|r| valid(r, s));

    let mut table: BTreeMap<Vec<TagId>, f64> = keys.iter().map(|s| (s.clone(), 0.0)).collect();
    for (window, &n) in &counts {
        let compat: Vec<&Vec<TagId>> = keys.iter().filter(|s| compatible(classes, s, window)).collect();
        let n_valid = compat.iter().filter(|s| is_valid(s)).count();
        for s in &compat {
            if n_valid == 0 {
                *table.get_mut(*s).unwrap() += n as f64 / compat.len() as f64;
            } else if is_valid(s) {
                *table.get_mut(*s).unwrap() += n as f64 / n_valid as f64;
            }
        }
    }
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for (e, old) in &table {
            let mut factor = 0.0;
            for (window, &n) in &counts {
                if !compatible(classes, e, window) {
                    continue;
                }
                let denom: f64 = table
                    .iter()
                    .filter(|(s, _)| compatible(classes, s, window))
                    .map(|(_, v)| v)
                    .sum();
                if denom > 0.0 {
                    factor += n as f64 / denom;
                }
            }
            next.insert(e.clone(), old * factor);
        }
        table = next;
    }
    table
}

/// Every tag path through a document with its joint probability, in
/// lexicographic order of tag ids.
pub fn paths(model: &HmmModel, doc: &[Token], classes: &AmbiguityInventory) -> Vec<(Vec<TagId>, f64)> {
    let mut out: Vec<(Vec<TagId>, f64)> = vec![(Vec::new(), 1.0)];
    for tok in doc {
        let tags = classes.tags_of(tok.class).unwrap();
        out = out
            .into_iter()
            .flat_map(|(path, _)| {
                tags.iter().map(move |&t| {
                    let mut p = path.clone();
                    p.push(t);
                    (p, 0.0)
                })
            })
            .collect();
    }
    for (path, p) in out.iter_mut() {
        let mut prob = 1.0;
        let mut prev = TagId::EOS;
        for (tok, &t) in doc.iter().zip(path.iter()) {
            prob *= model.transition(prev, t) * model.emission(t, tok.class, classes);
            prev = t;
        }
        *p = prob * model.transition(prev, TagId::EOS);
    }
    out
}

pub fn likelihood(model: &HmmModel, doc: &[Token], classes: &AmbiguityInventory) -> f64 {
    paths(model, doc, classes).iter().map(|(_, p)| p).sum()
}

/// `P(tag at position i | document)`, keyed by position and tag.
pub fn marginals(model: &HmmModel, doc: &[Token], classes: &AmbiguityInventory) -> Vec<BTreeMap<TagId, f64>> {
    let all = paths(model, doc, classes);
    let z: f64 = all.iter().map(|(_, p)| p).sum();
    let mut out = vec![BTreeMap::new(); doc.len()];
    for (path, p) in &all {
        for (i, t) in path.iter().enumerate() {
            *out[i].entry(*t).or_insert(0.0) += p / z;
        }
    }
    out
}

/// The highest-probability path and its probability.
pub fn best_path(model: &HmmModel, doc: &[Token], classes: &AmbiguityInventory) -> (Vec<TagId>, f64) {
    paths(model, doc, classes)
        .into_iter()
        .fold((Vec::new(), -1.0), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// One Baum-Welch update computed from enumerated paths. Rows without
/// expected counts and the `EOS` emission row keep their old values.
pub fn baum_welch_step(model: &HmmModel, text: &AmbiguousText, classes: &AmbiguityInventory) -> (Vec<f64>, Vec<f64>) {
    let n = model.tag_count();
    let m = model.class_count();
    let mut trans = vec![0.0; n * n];
    let mut emit = vec![0.0; n * m];
    for doc in text.documents() {
        let all = paths(model, doc, classes);
        let z: f64 = all.iter().map(|(_, p)| p).sum();
        if z <= 0.0 {
            continue;
        }
        for (path, p) in &all {
            let w = p / z;
            let mut prev = TagId::EOS;
            for (tok, &t) in doc.iter().zip(path.iter()) {
                trans[prev.index() * n + t.index()] += w;
                if tok.class.index() < m {
                    emit[t.index() * m + tok.class.index()] += w;
                }
                prev = t;
            }
            trans[prev.index() * n] += w;
        }
    }
    let mut new_trans = model.transitions().to_vec();
    for i in 0..n {
        let sum: f64 = trans[i * n..(i + 1) * n].iter().sum();
        if sum > 0.0 {
            for j in 0..n {
                new_trans[i * n + j] = trans[i * n + j] / sum;
            }
        }
    }
    let mut new_emit = model.emissions().to_vec();
    for t in 1..n {
        let sum: f64 = emit[t * m..(t + 1) * m].iter().sum();
        if sum > 0.0 {
            for c in 0..m {
                new_emit[t * m + c] = emit[t * m + c] / sum;
            }
        }
    }
    (new_trans, new_emit)
}
