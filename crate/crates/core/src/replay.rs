//! Replay memory of environment transitions.
//!
//! Transitions are appended in the order they happen, so the successor of a
//! transition within its episode is always the next entry. Eviction removes
//! the oldest entry, which can only ever cut the *start* of an episode and
//! never separates a transition from its successor.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::{ActionVec, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: Point,
    pub a: ActionVec,
    pub s_next: Point,
    /// Unnormalized reward at collection time.
    pub raw_ig: f64,
    pub done: bool,
    pub episode_id: u64,
    pub step_index: u32,
}

/// A drawn transition plus the action taken right after it, when the buffer
/// holds it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampled {
    pub transition: Transition,
    pub next_action: Option<ActionVec>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
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

    pub fn store(&mut self, transition: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(transition);
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Transition> {
        self.items.iter()
    }

    pub fn raw_values(&self) -> impl ExactSizeIterator<Item = f64> + Clone + '_ {
        self.items.iter().map(|t| t.raw_ig)
    }

    /// Action executed right after entry `index` in the same episode.
    pub fn next_action(&self, index: usize) -> Option<ActionVec> {
        let t = self.items.get(index)?;
        if t.done {
            return None;
        }
        self.items
            .get(index + 1)
            .filter(|n| n.episode_id == t.episode_id && n.step_index == t.step_index + 1)
            .map(|n| n.a)
    }

    /// `n` uniform draws with replacement, written into `out`. Returns
    /// `false` and leaves `out` empty while the buffer holds fewer than `n`
    /// transitions.
    pub fn sample_into<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<Sampled>) -> bool {
        out.clear();
        if n == 0 || self.items.len() < n {
            return false;
        }
        let len = self.items.len();
        out.extend((0..n).map(|_| {
            let i = rng.gen_range(0..len);
            Sampled {
                transition: self.items[i],
                next_action: self.next_action(i),
            }
        }));
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<Sampled>> {
        let mut out = Vec::with_capacity(n);
        self.sample_into(n, rng, &mut out).then_some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn transition(episode_id: u64, step_index: u32, k: u32) -> Transition {
        Transition {
            s: Point::new(step_index as f64, episode_id as f64),
            a: ActionVec::new(episode_id as f64, step_index as f64),
            s_next: Point::new(step_index as f64 + 1.0, episode_id as f64),
            raw_ig: (episode_id * 100 + step_index as u64) as f64,
            done: step_index + 1 == k,
            episode_id,
            step_index,
        }
    }

    fn filled(capacity: usize, episodes: u64, k: u32) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(capacity);
        for e in 0..episodes {
            for t in 0..k {
                buf.store(transition(e, t, k));
            }
        }
        buf
    }

    #[test]
    fn evicts_oldest_at_capacity() {
        let mut buf = ReplayBuffer::new(3);
        for t in 0..4 {
            buf.store(transition(0, t, 10));
        }
        assert_eq!(buf.len(), 3);
        assert_eq!(buf.get(0).unwrap().step_index, 1);
        assert_eq!(buf.get(2), Some(&transition(0, 3, 10)));
    }

    #[test]
    fn successor_actions_respect_episode_boundaries() {
        let buf = filled(25, 3, 10);
        // Oldest five entries of episode 0 were evicted.
        assert_eq!(buf.get(0).unwrap().step_index, 5);
        for i in 0..buf.len() {
            let t = buf.get(i).unwrap();
            match buf.next_action(i) {
                Some(a) => {
                    let n = buf.get(i + 1).unwrap();
                    assert_eq!((n.episode_id, n.step_index, n.a), (t.episode_id, t.step_index + 1, a));
                }
                None => assert!(t.done),
            }
        }
    }

    #[test]
    fn in_progress_episode_has_no_successor_yet() {
        let mut buf = filled(100, 1, 10);
        buf.store(transition(1, 0, 10));
        assert_eq!(buf.next_action(buf.len() - 1), None);
    }

    #[test]
    fn draws_with_replacement() {
        let buf = filled(10, 1, 1);
        let mut rng = stream(1, Stream::Replay);
        let batch = buf.sample(1, &mut rng).unwrap();
        assert_eq!(batch[0].transition, transition(0, 0, 1));
        assert_eq!(batch[0].next_action, None);

        // Two distinct entries drawn two at a time repeat sometimes.
        let buf = filled(10, 2, 1);
        let batch = buf.sample(2, &mut rng).unwrap();
        assert_eq!(batch.len(), 2);
        let mut out = Vec::new();
        let repeats = (0..100)
            .filter(|_| {
                buf.sample_into(2, &mut rng, &mut out);
                out[0].transition == out[1].transition
            })
            .count();
        assert!(repeats > 0);
    }

    #[test]
    fn sampling_waits_for_enough_data() {
        let buf = filled(10, 1, 3);
        assert!(buf.sample(4, &mut stream(1, Stream::Replay)).is_none());
    }

    #[test]
    fn sampling_is_seeded() {
        let buf = filled(1000, 20, 10);
        let a = buf.sample(64, &mut stream(2, Stream::Replay));
        let b = buf.sample(64, &mut stream(2, Stream::Replay));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_uniform() {
        let buf = filled(100, 10, 10);
        let mut rng = stream(3, Stream::Replay);
        let mut counts = [0u32; 100];
        let mut out = Vec::new();
        let draws = 100_000;
        for _ in 0..draws / 100 {
            assert!(buf.sample_into(100, &mut rng, &mut out));
            for s in &out {
                let i = (s.transition.episode_id * 10 + s.transition.step_index as u64) as usize;
                counts[i] += 1;
            }
        }
        let p = 0.01f64;
        let mean = draws as f64 * p;
        let sigma = libm::sqrt(draws as f64 * p * (1.0 - p));
        for c in counts {
            assert!((c as f64 - mean).abs() < 5.0 * sigma, "{c}");
        }
    }
}
