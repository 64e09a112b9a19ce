//! Fixed-capacity FIFO experience replay.

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// A sampled minibatch, one row per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub s: Array2<f64>,
    pub a: Array2<f64>,
    pub r: Array1<f64>,
    pub s_next: Array2<f64>,
    pub done: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Ring buffer storing transitions in flat arrays.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    s: Vec<f64>,
    a: Vec<f64>,
    r: Vec<f64>,
    s_next: Vec<f64>,
    done: Vec<f64>,
    len: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            state_dim,
            action_dim,
            s: vec![0.0; capacity * state_dim],
            a: vec![0.0; capacity * action_dim],
            r: vec![0.0; capacity],
            s_next: vec![0.0; capacity * state_dim],
            done: vec![0.0; capacity],
            len: 0,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Store one transition, overwriting the oldest when full.
    pub fn push(&mut self, s: &[f64], a: &[f64], r: f64, s_next: &[f64], done: bool) -> Result<()> {
        for (got, expected) in [(s.len(), self.state_dim), (a.len(), self.action_dim), (s_next.len(), self.state_dim)] {
            if got != expected {
                return Err(Error::Dimension { expected, got });
            }
        }
        let i = self.cursor;
        let (sd, ad) = (self.state_dim, self.action_dim);
        self.s[i * sd..(i + 1) * sd].copy_from_slice(s);
        self.a[i * ad..(i + 1) * ad].copy_from_slice(a);
        self.s_next[i * sd..(i + 1) * sd].copy_from_slice(s_next);
        self.r[i] = r;
        self.done[i] = if done { 1.0 } else { 0.0 };
        self.cursor = (self.cursor + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        Ok(())
    }

    /// The stored transition at slot `i` (slot order, not insertion order).
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let (sd, ad) = (self.state_dim, self.action_dim);
        Some(Transition {
            s: self.s[i * sd..(i + 1) * sd].to_vec(),
            a: self.a[i * ad..(i + 1) * ad].to_vec(),
            r: self.r[i],
            s_next: self.s_next[i * sd..(i + 1) * sd].to_vec(),
            done: self.done[i] != 0.0,
        })
    }

    /// Uniform minibatch, distinct slots within the batch.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Result<Batch> {
        if batch == 0 || batch > self.len {
            return Err(Error::Training(format!("cannot sample {batch} transitions from {}", self.len)));
        }
        let idx = index::sample(rng, self.len, batch);
        let (sd, ad) = (self.state_dim, self.action_dim);
        let mut out = Batch {
            s: Array2::zeros((batch, sd)),
            a: Array2::zeros((batch, ad)),
            r: Array1::zeros(batch),
            s_next: Array2::zeros((batch, sd)),
            done: Array1::zeros(batch),
        };
        for (row, i) in idx.iter().enumerate() {
            out.s.row_mut(row).assign(&ndarray::ArrayView1::from(&self.s[i * sd..(i + 1) * sd]));
            out.a.row_mut(row).assign(&ndarray::ArrayView1::from(&self.a[i * ad..(i + 1) * ad]));
            out.s_next
                .row_mut(row)
                .assign(&ndarray::ArrayView1::from(&self.s_next[i * sd..(i + 1) * sd]));
            out.r[row] = self.r[i];
            out.done[row] = self.done[i];
        }
        Ok(out)
    }
}
