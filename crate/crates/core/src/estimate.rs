//! Shared re-estimation kernel for the sliding-window taggers.
//!
//! Both taggers have the same shape: every observed window spreads its count
//! over a set of parameter keys compatible with it, in proportion to the
//! current effective counts. An [`Expansion`] stores, per observed window,
//! its count and the indices of its compatible keys, so one update costs a
//! single pass over the observed windows.

/// Observed windows expanded into parameter-key indices (CSR layout).
#[derive(Clone, Debug, Default)]
pub(crate) struct Expansion {
    mass: Vec<f64>,
    offsets: Vec<usize>,
    keys: Vec<u32>,
    n_keys: usize,
}

impl Expansion {
    pub(crate) fn new(n_keys: usize) -> Self {
        Expansion {
            mass: Vec::new(),
            offsets: vec![0],
            keys: Vec::new(),
            n_keys,
        }
    }

    pub(crate) fn push_window<I: IntoIterator<Item = u32>>(&mut self, n: f64, keys: I) {
        self.keys.extend(keys);
        self.offsets.push(self.keys.len());
        self.mass.push(n);
    }

    fn window(&self, w: usize) -> &[u32] {
        &self.keys[self.offsets[w]..self.offsets[w + 1]]
    }

    /// One multiplicative update:
    /// `new[k] = old[k] * Σ_{windows w ∋ k} n_w / Σ_{k' ∈ w} old[k']`.
    /// Windows whose compatible keys all hold zero contribute nothing.
    pub(crate) fn step(&self, old: &[f64]) -> Vec<f64> {
        debug_assert_eq!(old.len(), self.n_keys);
        let mut factor = vec![0.0; self.n_keys];
        for (w, &n) in self.mass.iter().enumerate() {
            let keys = self.window(w);
            let denom: f64 = keys.iter().map(|&k| old[k as usize]).sum();
            if denom <= 0.0 {
                continue;
            }
            let share = n / denom;
            for &k in keys {
                factor[k as usize] += share;
            }
        }
        old.iter().zip(factor).map(|(v, f)| v * f).collect()
    }

    /// Run up to `iterations` updates, stopping early once the largest
    /// relative change falls below `epsilon`. Returns the iterations run.
    pub(crate) fn run(&self, values: &mut Vec<f64>, iterations: usize, epsilon: f64) -> usize {
        for done in 0..iterations {
            let next = self.step(values);
            let change = max_relative_change(values, &next);
            *values = next;
            if change < epsilon {
                return done + 1;
            }
        }
        iterations
    }
}

/// Largest `|new - old| / old` over entries with a positive old value.
pub(crate) fn max_relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .filter(|(o, _)| **o > 0.0)
        .map(|(o, n)| (n - o).abs() / o)
        .fold(0.0, f64::max)
}
