use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BsumError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    Full,
    FixedSize(usize),
    /// `B_k = min(k, N)` at iteration `k`.
    Increasing,
}

/// Draws mini-batches without replacement from a seeded per-epoch shuffle.
///
/// A new shuffle starts whenever the current one has fewer unused indices
/// than the next batch needs. Batches are returned in ascending index order.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    mode: BatchMode,
    n: usize,
    rng: ChaCha8Rng,
    perm: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub fn new(mode: BatchMode, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(BsumError::Spec("sampler needs N >= 1".into()));
        }
        if let BatchMode::FixedSize(b) = mode {
            if b == 0 || b > n {
                return Err(BsumError::Spec(format!("batch size {b} outside 1..={n}")));
            }
        }
        Ok(Self {
            mode,
            n,
            rng: ChaCha8Rng::seed_from_u64(seed),
            perm: (0..n).collect(),
            cursor: n,
        })
    }

    pub fn mode(&self) -> BatchMode {
        self.mode
    }

    pub fn batch_size(&self, k: usize) -> usize {
        match self.mode {
            BatchMode::Full => self.n,
            BatchMode::FixedSize(b) => b,
            BatchMode::Increasing => k.clamp(1, self.n),
        }
    }

    /// Batch for iteration `k` (1-based).
    pub fn next_batch(&mut self, k: usize) -> Vec<usize> {
        let b = self.batch_size(k);
        if b == self.n {
            return (0..self.n).collect();
        }
        if self.cursor + b > self.n {
            self.perm.sort_unstable();
            self.perm.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let mut batch = self.perm[self.cursor..self.cursor + b].to_vec();
        self.cursor += b;
        batch.sort_unstable();
        batch
    }
}
