//! Deterministic random number plumbing.
//!
//! Every rollout owns one 64-bit seed and draws from named ChaCha12
//! substreams, so adding a consumer to one stream never shifts the draws of
//! another. Rollout seeds are derived from the root seed by index, which
//! keeps seed-parallel execution independent of scheduling order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Substream drawing the initial state x0.
pub const STREAM_INITIAL_STATE: u64 = 0;
/// Substream drawing process noise w_t.
pub const STREAM_PROCESS_NOISE: u64 = 1;
/// Substream drawing observation noise v_t.
pub const STREAM_OBSERVATION_NOISE: u64 = 2;

/// SplitMix64 finalizer; bijective on u64.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the rollout at position `index` in a sweep rooted at `root_seed`.
pub fn rollout_seed(root_seed: u64, index: u64) -> u64 {
    splitmix64(root_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// ChaCha12 generator for one named substream of a rollout seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Vector of independent standard normal draws.
pub fn standard_normal_vector(rng: &mut ChaCha12Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Draw from N(mean, factor factor^T) as mean + factor z with z standard
/// normal. `factor` is any square root of the covariance.
pub fn sample_gaussian(
    rng: &mut ChaCha12Rng,
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
) -> DVector<f64> {
    mean + factor * standard_normal_vector(rng, factor.ncols())
}
