//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from a [`ChaCha8Rng`] built by
//! [`rng_stream`]: the key is expanded from `base_seed` with
//! `SeedableRng::seed_from_u64` (PCG32 expansion, fixed by `rand_core`) and
//! `stream_index` selects the ChaCha stream. ChaCha output is defined
//! byte-for-byte, so a `(base_seed, stream_index)` pair yields the same
//! sequence on every platform and independent of thread scheduling.
//!
//! Standard normal deviates come from `rand_distr::StandardNormal`, which uses
//! the 256-layer ziggurat of Marsaglia & Tsang over that stream. Matrices are
//! always filled row by row.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type RngStream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        Self { base_seed, stream_index }
    }

    /// Child seed for a labelled sub-task (grid point, repetition, role...).
    ///
    /// The base seed is remixed with the label so different sub-tasks never
    /// share a ChaCha key/stream pair.
    pub fn derive(self, label: u64) -> Self {
        Self {
            base_seed: mix64(self.base_seed ^ mix64(label.wrapping_add(0x9E37_79B9_7F4A_7C15))),
            stream_index: self.stream_index,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_stream(seed: SeedSpec) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.base_seed);
    rng.set_stream(seed.stream_index);
    rng
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `rows × cols` matrix of i.i.d. N(0, 1) deviates, filled row-major.
pub fn std_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols).map(|_| std_normal(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}
