use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DdpgError;

/// One environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    /// The episode ended in failure at `s_next`; no bootstrapping past it.
    pub terminal: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.s.iter().chain(&self.a).chain(&self.s_next).all(|x| x.is_finite())
    }
}

/// Fixed-capacity FIFO store with uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    head: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) -> Result<(), DdpgError> {
        if !t.is_finite() {
            return Err(DdpgError::NonFinite("transition"));
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
        Ok(())
    }

    pub fn sample(&mut self, n: usize) -> Result<Vec<&Transition>, DdpgError> {
        if self.items.is_empty() {
            return Err(DdpgError::EmptyBuffer);
        }
        let len = self.items.len();
        let picks: Vec<usize> = (0..n).map(|_| self.rng.random_range(0..len)).collect();
        Ok(picks.into_iter().map(|i| &self.items[i]).collect())
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }
}
