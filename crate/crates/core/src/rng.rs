//! Deterministic RNG substreams.
//!
//! Every Monte Carlo path derives its own counter-indexed ChaCha stream from
//! the master seed, so parallel and serial runs consume identical randomness
//! per path regardless of scheduling.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SubRng = ChaCha8Rng;

/// The RNG for substream `index` of `master_seed`.
pub fn substream(master_seed: u64, index: u64) -> SubRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.into());
    rng
}

/// A standard normal vector of dimension d.
pub fn standard_normal_vector(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}
