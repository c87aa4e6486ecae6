//! Per-token decisions shared by the window taggers.

use crate::inventory::TagId;

/// How a token's tag was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionKind {
    /// The class has a single tag.
    Unambiguous,
    /// The winner had a positive score from the parameter table.
    Scored,
    /// Every candidate scored zero; the global tag mass decided.
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub tag: TagId,
    pub kind: DecisionKind,
    pub score: f64,
}

/// Iteration and convergence limits for unsupervised training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub iterations: usize,
    /// Stop once the largest relative parameter change drops below this.
    pub epsilon: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            iterations: 8,
            epsilon: 1e-6,
        }
    }
}

impl TrainOptions {
    /// Exactly `iterations` updates, no early stop.
    pub fn exact(iterations: usize) -> Self {
        TrainOptions {
            iterations,
            epsilon: 0.0,
        }
    }
}

/// Argmax over ascending candidates; the lowest id wins ties.
pub(crate) fn argmax<F: Fn(TagId) -> f64>(candidates: &[TagId], score: F) -> (TagId, f64) {
    let mut best = (candidates[0], score(candidates[0]));
    for &c in &candidates[1..] {
        let s = score(c);
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

/// Decide among `candidates` from table scores, falling back to the global
/// tag mass when no candidate has a positive score.
pub(crate) fn decide<F: Fn(TagId) -> f64>(candidates: &[TagId], score: F, global_mass: &[f64]) -> Decision {
    if candidates.len() == 1 {
        return Decision {
            tag: candidates[0],
            kind: DecisionKind::Unambiguous,
            score: 0.0,
        };
    }
    let (tag, best) = argmax(candidates, score);
    if best > 0.0 {
        return Decision {
            tag,
            kind: DecisionKind::Scored,
            score: best,
        };
    }
    let (tag, _) = argmax(candidates, |t| global_mass.get(t.index()).copied().unwrap_or(0.0));
    Decision {
        tag,
        kind: DecisionKind::Fallback,
        score: 0.0,
    }
}
