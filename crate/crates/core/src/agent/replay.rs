//! Fixed-capacity experience replay with FIFO eviction and uniform
//! sampling with replacement.

use rand::Rng;

use crate::env::Transition;

pub struct ReplayBuffer {
    entries: Vec<Transition>,
    capacity: usize,
    write_index: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer needs positive capacity");
        ReplayBuffer {
            entries: Vec::with_capacity(capacity),
            capacity,
            write_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends a transition, overwriting the oldest entry once full.
    pub fn push(&mut self, transition: Transition) {
        if self.entries.len() < self.capacity {
            self.entries.push(transition);
        } else {
            self.entries[self.write_index] = transition;
        }
        self.write_index = (self.write_index + 1) % self.capacity;
    }

    /// Uniform sample with replacement, or None while the buffer holds
    /// fewer than `batch_size` transitions (the trainer waits).
    pub fn sample(&self, batch_size: usize, rng: &mut impl Rng) -> Option<Vec<&Transition>> {
        if self.entries.len() < batch_size {
            return None;
        }
        Some(
            (0..batch_size)
                .map(|_| &self.entries[rng.random_range(0..self.entries.len())])
                .collect(),
        )
    }

    /// All stored transitions in insertion-slot order (not age order).
    pub fn entries(&self) -> &[Transition] {
        &self.entries
    }
}
