//! Deterministic parallel accumulation of per-trial observations.

use rayon::prelude::*;

use crate::rng::{substream, SimRng};

/// Trials per work unit. Fixed so that the reduction tree, and therefore the
/// floating-point result, never depends on the thread count.
pub const CHUNK: u64 = 1024;

/// Running sums of a fixed-length vector of real observations.
#[derive(Debug, Clone, PartialEq)]
pub struct VecMoments {
    pub n: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl VecMoments {
    pub fn new(len: usize) -> VecMoments {
        VecMoments {
            n: 0,
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
        }
    }

    pub fn push(&mut self, obs: &[f64]) {
        self.n += 1;
        for ((s, q), &x) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(obs) {
            *s += x;
            *q += x * x;
        }
    }

    pub fn merge(mut self, other: &VecMoments) -> VecMoments {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n as f64
    }

    /// Standard error of `mean(i)`.
    pub fn std_err(&self, i: usize) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return f64::INFINITY;
        }
        let mean = self.sum[i] / n;
        let var = ((self.sum_sq[i] / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Runs trials `0..n_trials`, each on its own substream of `master_seed`,
/// and sums the `len` observations that `observe` writes per trial.
pub fn run_observations<F>(n_trials: u64, master_seed: u64, len: usize, observe: F) -> VecMoments
where
    F: Fn(&mut SimRng, &mut [f64]) + Sync,
{
    let chunks = n_trials.div_ceil(CHUNK);
    let partials: Vec<VecMoments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = VecMoments::new(len);
            let mut obs = vec![0.0; len];
            for t in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                let mut rng = substream(master_seed, t);
                obs.iter_mut().for_each(|x| *x = 0.0);
                observe(&mut rng, &mut obs);
                acc.push(&obs);
            }
            acc
        })
        .collect();
    tree_reduce(partials).unwrap_or_else(|| VecMoments::new(len))
}

/// Pairwise reduction in a fixed order.
fn tree_reduce(mut level: Vec<VecMoments>) -> Option<VecMoments> {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(&b)),
                None => next.push(a),
            }
        }
        level = next;
    }
    level.pop()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniform_moments(n: u64) -> VecMoments {
        run_observations(n, 42, 2, |rng, obs| {
            let u: f64 = rng.random();
            obs[0] = u;
            obs[1] = u * u;
        })
    }

    #[test]
    fn independent_of_thread_count() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| uniform_moments(10_000));
        let b = four.install(|| uniform_moments(10_000));
        assert_eq!(a, b);
        assert_eq!(a.n, 10_000);
        assert!((a.mean(0) - 0.5).abs() < 4.0 * a.std_err(0));
    }

    #[test]
    fn std_err_scales_like_inverse_sqrt() {
        let a = uniform_moments(20_000);
        let b = uniform_moments(80_000);
        let ratio = a.std_err(0) / b.std_err(0);
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }
}
