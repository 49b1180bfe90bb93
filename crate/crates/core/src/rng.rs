//! Seeded random streams.
//!
//! Every consumer of randomness takes a ChaCha8 generator keyed by the master
//! seed and switched to a stream derived from a `(run, purpose)` label, so two
//! runs never share a stream and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::matcore::DenseMatrix;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for `(run, purpose)` under `master`.
pub fn stream(master: u64, run: u64, purpose: &str) -> Rng {
    let mut h = Sha256::new();
    h.update(run.to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(u64::from_le_bytes(word));
    rng
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn normal_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| normal(rng))
}
