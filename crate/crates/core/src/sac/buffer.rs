use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// One environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// A minibatch laid out column-wise, one transition per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub rewards: DVector<f64>,
    pub next_states: DMatrix<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(items: &[&Transition]) -> Batch {
        let s = items[0].state.len();
        let a = items[0].action.len();
        let n = items.len();
        Batch {
            states: DMatrix::from_fn(s, n, |i, j| items[j].state[i]),
            actions: DMatrix::from_fn(a, n, |i, j| items[j].action[i]),
            rewards: DVector::from_fn(n, |j, _| items[j].reward),
            next_states: DMatrix::from_fn(s, n, |i, j| items[j].next_state[i]),
        }
    }
}

/// Fixed-capacity FIFO store of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0, "capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform indices, distinct within the batch.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        assert!(batch <= self.items.len(), "batch larger than buffer");
        rand::seq::index::sample(rng, self.items.len(), batch).into_vec()
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Batch {
        let idx = self.sample_indices(batch, rng);
        let picked: Vec<&Transition> = idx.iter().map(|&i| &self.items[i]).collect();
        Batch::from_transitions(&picked)
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use std::collections::HashSet;

    fn tr(x: f64) -> Transition {
        Transition {
            state: vec![x],
            action: vec![x],
            reward: x,
            next_state: vec![x],
        }
    }

    #[test]
    fn fifo_eviction_and_capacity() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(tr(i as f64));
            assert!(b.len() <= 3);
        }
        let mut rewards: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn no_repeats_within_batch() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(tr(i as f64));
        }
        let mut rng = substream(0, 0);
        for _ in 0..100 {
            let idx = b.sample_indices(10, &mut rng);
            assert_eq!(idx.iter().collect::<HashSet<_>>().len(), 10);
        }
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(100);
        for i in 0..100 {
            b.push(tr(i as f64));
        }
        let mut rng = substream(11, 0);
        let mut counts = [0u64; 100];
        let draws = 100_000;
        for _ in 0..draws / 10 {
            for i in b.sample_indices(10, &mut rng) {
                counts[i] += 1;
            }
        }
        let expected = draws as f64 / 100.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // Upper 0.001 quantile of chi-square with 99 degrees of freedom.
        assert!(chi2 < 148.23, "chi2 = {chi2}");
    }

    #[test]
    fn batch_layout() {
        let items = [tr(1.0), tr(2.0)];
        let refs: Vec<&Transition> = items.iter().collect();
        let batch = Batch::from_transitions(&refs);
        assert_eq!(batch.states.shape(), (1, 2));
        assert_eq!(batch.rewards[1], 2.0);
    }
}
