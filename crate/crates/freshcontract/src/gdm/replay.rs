//! Fixed-capacity ring buffer of transitions.

use rand::Rng;

use crate::error::{structure, Result};

/// One stored interaction: the raw action is the squashed `[-1, 1]` vector
/// the policy produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Ring buffer over transitions: once full, the oldest record is overwritten.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    records: Vec<Transition>,
    capacity: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(structure("replay capacity must be positive"));
        }
        Ok(Self { records: Vec::new(), capacity, head: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, transition: Transition) {
        if self.records.len() < self.capacity {
            self.records.push(transition);
        } else {
            self.records[self.head] = transition;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.records[index]
    }

    /// Uniformly samples `n` distinct record indices.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n == 0 || n > self.records.len() {
            return Err(structure(format!(
                "cannot sample {n} records from a buffer holding {}",
                self.records.len()
            )));
        }
        Ok(rand::seq::index::sample(rng, self.records.len(), n).into_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sentinel(tag: f64) -> Transition {
        Transition { state: vec![tag], action: vec![tag], reward: tag, next_state: vec![tag] }
    }

    #[test]
    fn never_exceeds_capacity_and_overwrites_oldest() {
        let mut buffer = ReplayBuffer::new(3).unwrap();
        for tag in 0..5 {
            buffer.push(sentinel(tag as f64));
            assert!(buffer.len() <= 3);
        }
        // Records 0 and 1 were overwritten by 3 and 4.
        let tags: Vec<f64> = (0..buffer.len()).map(|i| buffer.get(i).reward).collect();
        assert_eq!(tags, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_without_replacement() {
        let mut buffer = ReplayBuffer::new(16).unwrap();
        for tag in 0..10 {
            buffer.push(sentinel(tag as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let mut idx = buffer.sample_indices(6, &mut rng).unwrap();
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 6);
        }
        assert!(buffer.sample_indices(11, &mut rng).is_err());
        assert!(buffer.sample_indices(0, &mut rng).is_err());
    }
}
