//! First-order HMM baseline.
//!
//! States are tags and observations are ambiguity classes; a state can only
//! emit classes that contain it. Each document is observed as
//! `EOS c₁ … cₙ EOS`, so the initial distribution is the `EOS` row of the
//! transition matrix. Training is Baum-Welch with per-position scaling: the
//! forward variables at position `t` are normalized by `c_t = Σ_j α_t(j)` and
//! the document log-likelihood is `Σ_t ln c_t`.

use rayon::prelude::*;

use crate::corpus::{AmbiguousText, Token};
use crate::decide::TrainOptions;
use crate::error::{Error, Result};
use crate::estimate::max_relative_change;
use crate::inventory::{AmbiguityInventory, ClassId, TagId, TagInventory};
use crate::rules::RuleSet;

#[derive(Clone, Debug, PartialEq)]
pub struct HmmModel {
    n_tags: usize,
    n_classes: usize,
    /// Row-major `n_tags × n_tags`, `a(from → to)`.
    transitions: Vec<f64>,
    /// Row-major `n_tags × n_classes`, `b(tag, class)`.
    emissions: Vec<f64>,
}

/// Log-likelihood trace of a training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HmmTrainReport {
    /// Corpus log-likelihood before the first update and after each update.
    pub log_likelihoods: Vec<f64>,
    /// Documents with zero probability under the initial model; they are
    /// left out of estimation.
    pub impossible_documents: usize,
}

struct Stats {
    transitions: Vec<f64>,
    emissions: Vec<f64>,
    log_likelihood: f64,
    impossible: usize,
}

impl Stats {
    fn new(n_tags: usize, n_classes: usize) -> Self {
        Stats {
            transitions: vec![0.0; n_tags * n_tags],
            emissions: vec![0.0; n_tags * n_classes],
            log_likelihood: 0.0,
            impossible: 0,
        }
    }

    fn add(&mut self, other: &Stats) {
        for (a, b) in self.transitions.iter_mut().zip(&other.transitions) {
            *a += b;
        }
        for (a, b) in self.emissions.iter_mut().zip(&other.emissions) {
            *a += b;
        }
        self.log_likelihood += other.log_likelihood;
        self.impossible += other.impossible;
    }
}

/// Scaled forward pass over one observation sequence.
struct Forward {
    obs: Vec<ClassId>,
    alpha: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

const CHUNK: usize = 64;

impl HmmModel {
    /// Uniform transitions over legal successors and uniform emissions over
    /// the classes containing each tag.
    pub fn init(tags: &TagInventory, classes: &AmbiguityInventory, rules: Option<&RuleSet>) -> Result<Self> {
        let n_tags = classes.tag_count();
        let n_classes = classes.len();
        let mut transitions = vec![0.0; n_tags * n_tags];
        for from in 0..n_tags {
            let legal: Vec<usize> = (0..n_tags)
                .filter(|&to| rules.is_none_or(|r| r.bigram_valid(TagId(from as u32), TagId(to as u32))))
                .collect();
            if legal.is_empty() {
                let name = if from < tags.len() {
                    tags.name(TagId(from as u32)).to_string()
                } else {
                    format!("#{from}")
                };
                return Err(Error::NoLegalSuccessor(name));
            }
            let p = 1.0 / legal.len() as f64;
            for to in legal {
                transitions[from * n_tags + to] = p;
            }
        }
        let mut emissions = vec![0.0; n_tags * n_classes];
        let mut per_tag = vec![0usize; n_tags];
        for (_, set) in classes.classes() {
            for t in set {
                per_tag[t.index()] += 1;
            }
        }
        for (c, set) in classes.classes() {
            for t in set {
                emissions[t.index() * n_classes + c.index()] = 1.0 / per_tag[t.index()] as f64;
            }
        }
        Ok(HmmModel {
            n_tags,
            n_classes,
            transitions,
            emissions,
        })
    }

    /// Rebuild from stored matrices.
    pub fn from_parts(n_tags: usize, n_classes: usize, transitions: Vec<f64>, emissions: Vec<f64>) -> Result<Self> {
        if transitions.len() != n_tags * n_tags || emissions.len() != n_tags * n_classes {
            return Err(Error::Invalid(format!(
                "HMM matrices do not match {n_tags} tags × {n_classes} classes"
            )));
        }
        Ok(HmmModel {
            n_tags,
            n_classes,
            transitions,
            emissions,
        })
    }

    pub fn tag_count(&self) -> usize {
        self.n_tags
    }

    pub fn class_count(&self) -> usize {
        self.n_classes
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn emissions(&self) -> &[f64] {
        &self.emissions
    }

    pub fn transition(&self, from: TagId, to: TagId) -> f64 {
        self.transitions[from.index() * self.n_tags + to.index()]
    }

    /// `b(tag, class)`. Classes unseen by the model emit uniformly from
    /// their own tags.
    pub fn emission(&self, tag: TagId, class: ClassId, classes: &AmbiguityInventory) -> f64 {
        if class.index() < self.n_classes {
            self.emissions[tag.index() * self.n_classes + class.index()]
        } else if classes.tags(class).contains(&tag) {
            1.0
        } else {
            0.0
        }
    }

    /// Count of non-zero parameters.
    pub fn parameter_count(&self) -> usize {
        self.transitions.iter().chain(&self.emissions).filter(|v| **v > 0.0).count()
    }

    fn observations(doc: &[Token]) -> Vec<ClassId> {
        let mut obs = Vec::with_capacity(doc.len() + 2);
        obs.push(ClassId::EOS);
        obs.extend(doc.iter().map(|t| t.class));
        obs.push(ClassId::EOS);
        obs
    }

    fn forward(&self, doc: &[Token], classes: &AmbiguityInventory) -> Option<Forward> {
        let obs = Self::observations(doc);
        let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(obs.len());
        let mut scale = Vec::with_capacity(obs.len());
        alpha.push(vec![1.0]);
        scale.push(1.0);
        for t in 1..obs.len() {
            let prev_states = classes.tags(obs[t - 1]);
            let states = classes.tags(obs[t]);
            let prev = &alpha[t - 1];
            let mut cur: Vec<f64> = states
                .iter()
                .map(|&j| {
                    let into: f64 = prev_states
                        .iter()
                        .zip(prev)
                        .map(|(&i, &a)| a * self.transition(i, j))
                        .sum();
                    into * self.emission(j, obs[t], classes)
                })
                .collect();
            let c: f64 = cur.iter().sum();
            if c <= 0.0 || !c.is_finite() {
                return None;
            }
            cur.iter_mut().for_each(|v| *v /= c);
            alpha.push(cur);
            scale.push(c);
        }
        Some(Forward { obs, alpha, scale })
    }

    /// Log-probability of one document, `None` if it is impossible.
    pub fn document_log_likelihood(&self, doc: &[Token], classes: &AmbiguityInventory) -> Option<f64> {
        self.forward(doc, classes)
            .map(|f| f.scale.iter().map(|c| c.ln()).sum())
    }

    /// Corpus log-likelihood over the documents that have positive probability.
    pub fn log_likelihood(&self, text: &AmbiguousText, classes: &AmbiguityInventory) -> f64 {
        text.documents()
            .filter_map(|d| self.document_log_likelihood(d, classes))
            .sum()
    }

    fn backward(&self, fwd: &Forward, classes: &AmbiguityInventory) -> Vec<Vec<f64>> {
        let obs = &fwd.obs;
        let last = obs.len() - 1;
        let mut beta: Vec<Vec<f64>> = vec![Vec::new(); obs.len()];
        beta[last] = vec![1.0; classes.tags(obs[last]).len()];
        for t in (0..last).rev() {
            let next_states = classes.tags(obs[t + 1]);
            let weighted: Vec<f64> = next_states
                .iter()
                .zip(&beta[t + 1])
                .map(|(&j, &b)| self.emission(j, obs[t + 1], classes) * b / fwd.scale[t + 1])
                .collect();
            beta[t] = classes
                .tags(obs[t])
                .iter()
                .map(|&i| {
                    next_states
                        .iter()
                        .zip(&weighted)
                        .map(|(&j, &w)| self.transition(i, j) * w)
                        .sum()
                })
                .collect();
        }
        beta
    }

    /// Posterior `P(tag at t | document)` for every token, restricted to the
    /// token's class. `None` if the document has zero probability.
    pub fn posteriors(&self, doc: &[Token], classes: &AmbiguityInventory) -> Option<Vec<Vec<(TagId, f64)>>> {
        let fwd = self.forward(doc, classes)?;
        let beta = self.backward(&fwd, classes);
        Some(
            (1..fwd.obs.len() - 1)
                .map(|t| {
                    classes
                        .tags(fwd.obs[t])
                        .iter()
                        .enumerate()
                        .map(|(k, &tag)| (tag, fwd.alpha[t][k] * beta[t][k]))
                        .collect()
                })
                .collect(),
        )
    }

    fn accumulate(&self, doc: &[Token], classes: &AmbiguityInventory, stats: &mut Stats) {
        let Some(fwd) = self.forward(doc, classes) else {
            stats.impossible += 1;
            return;
        };
        let beta = self.backward(&fwd, classes);
        let obs = &fwd.obs;
        let n = self.n_tags;
        for t in 1..obs.len() {
            let prev_states = classes.tags(obs[t - 1]);
            let states = classes.tags(obs[t]);
            for (jk, &j) in states.iter().enumerate() {
                let tail = self.emission(j, obs[t], classes) * beta[t][jk] / fwd.scale[t];
                if tail == 0.0 {
                    continue;
                }
                for (ik, &i) in prev_states.iter().enumerate() {
                    stats.transitions[i.index() * n + j.index()] += fwd.alpha[t - 1][ik] * self.transition(i, j) * tail;
                }
            }
            if t < obs.len() - 1 && obs[t].index() < self.n_classes {
                for (jk, &j) in states.iter().enumerate() {
                    stats.emissions[j.index() * self.n_classes + obs[t].index()] += fwd.alpha[t][jk] * beta[t][jk];
                }
            }
        }
        stats.log_likelihood += fwd.scale.iter().map(|c| c.ln()).sum::<f64>();
    }

    fn expectation(&self, text: &AmbiguousText, classes: &AmbiguityInventory) -> Result<Stats> {
        let docs: Vec<&[Token]> = text.documents().collect();
        let partial: Vec<Stats> = docs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut stats = Stats::new(self.n_tags, self.n_classes);
                for doc in chunk {
                    self.accumulate(doc, classes, &mut stats);
                }
                stats
            })
            .collect();
        let mut total = Stats::new(self.n_tags, self.n_classes);
        for p in &partial {
            total.add(p);
        }
        if total.log_likelihood.is_nan()
            || total.transitions.iter().chain(&total.emissions).any(|v| v.is_nan())
        {
            return Err(Error::Numerical("NaN in forward-backward statistics".into()));
        }
        Ok(total)
    }

    fn maximization(&self, stats: &Stats) -> HmmModel {
        let mut next = self.clone();
        let n = self.n_tags;
        for i in 0..n {
            let row = &stats.transitions[i * n..(i + 1) * n];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                for (dst, v) in next.transitions[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *dst = v / sum;
                }
            }
        }
        let m = self.n_classes;
        for tag in 1..n {
            let row = &stats.emissions[tag * m..(tag + 1) * m];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                for (dst, v) in next.emissions[tag * m..(tag + 1) * m].iter_mut().zip(row) {
                    *dst = v / sum;
                }
            }
        }
        next
    }

    /// Baum-Welch re-estimation until the iteration cap or until the largest
    /// relative parameter change drops below `opts.epsilon`.
    pub fn train(
        &self,
        text: &AmbiguousText,
        classes: &AmbiguityInventory,
        opts: &TrainOptions,
    ) -> Result<(HmmModel, HmmTrainReport)> {
        if text.is_empty() {
            return Err(Error::Invalid("cannot train an HMM on an empty corpus".into()));
        }
        let mut model = self.clone();
        let mut report = HmmTrainReport::default();
        for _ in 0..opts.iterations {
            let stats = model.expectation(text, classes)?;
            report.log_likelihoods.push(stats.log_likelihood);
            report.impossible_documents = stats.impossible;
            let next = model.maximization(&stats);
            let old: Vec<f64> = model.transitions.iter().chain(&model.emissions).copied().collect();
            let new: Vec<f64> = next.transitions.iter().chain(&next.emissions).copied().collect();
            model = next;
            if max_relative_change(&old, &new) < opts.epsilon {
                break;
            }
        }
        let last = model.log_likelihood(text, classes);
        if last.is_nan() {
            return Err(Error::Numerical("NaN log-likelihood".into()));
        }
        report.log_likelihoods.push(last);
        if report.impossible_documents > 0 {
            log::warn!(
                "{} document(s) have zero probability under the HMM and were skipped",
                report.impossible_documents
            );
        }
        Ok((model, report))
    }

    /// Most likely tag path for one document, or `None` when every path has
    /// zero probability.
    pub fn viterbi(&self, doc: &[Token], classes: &AmbiguityInventory) -> Option<Vec<TagId>> {
        let obs = Self::observations(doc);
        let mut delta: Vec<Vec<f64>> = vec![vec![0.0]];
        let mut back: Vec<Vec<usize>> = vec![vec![0]];
        for t in 1..obs.len() {
            let prev_states = classes.tags(obs[t - 1]);
            let states = classes.tags(obs[t]);
            let mut d = Vec::with_capacity(states.len());
            let mut b = Vec::with_capacity(states.len());
            for &j in states {
                let mut best = (0usize, f64::NEG_INFINITY);
                for (ik, &i) in prev_states.iter().enumerate() {
                    let s = delta[t - 1][ik] + self.transition(i, j).ln();
                    if s > best.1 {
                        best = (ik, s);
                    }
                }
                d.push(best.1 + self.emission(j, obs[t], classes).ln());
                b.push(best.0);
            }
            delta.push(d);
            back.push(b);
        }
        let last = obs.len() - 1;
        if delta[last][0] == f64::NEG_INFINITY {
            return None;
        }
        let mut path = Vec::with_capacity(doc.len());
        let mut k = back[last][0];
        for t in (1..last).rev() {
            path.push(classes.tags(obs[t])[k]);
            k = back[t][k];
        }
        path.reverse();
        Some(path)
    }

    /// Best path per document; documents with no possible path fall back to
    /// the per-token argmax of the emission probabilities.
    pub fn tag(&self, text: &AmbiguousText, classes: &AmbiguityInventory) -> Vec<TagId> {
        let mut out = Vec::with_capacity(text.len());
        for doc in text.documents() {
            match self.viterbi(doc, classes) {
                Some(path) => out.extend(path),
                None => {
                    log::warn!("no tag path has positive probability; using per-token emission argmax");
                    out.extend(doc.iter().map(|tok| {
                        crate::decide::argmax(classes.tags(tok.class), |t| self.emission(t, tok.class, classes)).0
                    }));
                }
            }
        }
        out
    }
}
