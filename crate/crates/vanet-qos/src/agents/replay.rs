//! Fixed-capacity FIFO replay buffer with uniform sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AgentError, Transition};

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    write_pos: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0);
        ReplayBuffer {
            items: Vec::with_capacity(capacity),
            capacity,
            write_pos: 0,
        }
    }

    /// Appends a transition, evicting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.write_pos] = t;
        }
        self.write_pos = (self.write_pos + 1) % self.capacity;
    }

    /// Uniform sample of `k` transitions, with replacement.
    pub fn sample(&self, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Transition>, AgentError> {
        if self.items.is_empty() {
            return Err(AgentError::EmptyBuffer);
        }
        Ok((0..k)
            .map(|_| self.items[rng.gen_range(0..self.items.len())])
            .collect())
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

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{Action, StateObs};
    use crate::domain::ServiceCategory;
    use crate::rng::{stream, StreamPurpose};

    fn transition(reward: f64) -> Transition {
        let s = StateObs {
            sojourn_level: 0,
            total_vehicles: 0,
            category: ServiceCategory::Voice,
            category_vehicles: 0,
        };
        Transition {
            state: s,
            action: Action::new(1).unwrap(),
            reward,
            next_state: s,
            terminal: false,
        }
    }

    #[test]
    fn eviction_is_fifo() {
        let mut buf = ReplayBuffer::new(500);
        for i in 0..501 {
            buf.push(transition(i as f64));
        }
        assert_eq!(buf.len(), 500);
        assert!(buf.iter().all(|t| t.reward != 0.0), "oldest item evicted");
        assert!(buf.iter().any(|t| t.reward == 500.0));

        // One more push evicts reward 1.
        buf.push(transition(501.0));
        assert!(buf.iter().all(|t| t.reward != 1.0));
    }

    #[test]
    fn sample_returns_members() {
        let mut buf = ReplayBuffer::new(500);
        for i in 0..500 {
            buf.push(transition(i as f64));
        }
        let mut rng = stream(2, StreamPurpose::Exploration, 0);
        let batch = buf.sample(32, &mut rng).unwrap();
        assert_eq!(batch.len(), 32);
        for t in batch {
            assert!((0.0..500.0).contains(&t.reward));
        }
    }

    #[test]
    fn sample_from_empty_errors() {
        let buf = ReplayBuffer::new(10);
        let mut rng = stream(2, StreamPurpose::Exploration, 0);
        assert!(matches!(
            buf.sample(4, &mut rng),
            Err(AgentError::EmptyBuffer)
        ));
    }
}
