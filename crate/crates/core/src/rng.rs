//! Seeded randomness.
//!
//! Everything stochastic in the crate is driven by ChaCha12, a counter-based
//! stream cipher RNG with a published specification, so identical seeds give
//! identical draws on every platform. Derived seeds (per timestep, per
//! tensor) come from SplitMix64 so independent streams never overlap.

use crate::field::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// SplitMix64 step, used to derive independent sub-seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// H x W x C field of iid standard normals, drawn in flat index order.
pub fn standard_normal_field(
    height: usize,
    width: usize,
    channels: usize,
    rng: &mut SeededRng,
) -> Field {
    let mut f = Field::zeros(height, width, channels);
    for v in f.data_mut() {
        *v = rng.sample(StandardNormal);
    }
    f
}

/// Uniform draws in [-0.5, 0.5), matching the quantization-noise model.
pub fn uniform_noise_field(
    height: usize,
    width: usize,
    channels: usize,
    rng: &mut SeededRng,
) -> Field {
    let mut f = Field::zeros(height, width, channels);
    for v in f.data_mut() {
        *v = rng.gen::<f64>() - 0.5;
    }
    f
}
