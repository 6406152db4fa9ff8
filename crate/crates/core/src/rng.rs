//! Seeded random streams.
//!
//! Every stochastic routine takes a `(seed, stream)` pair. The stream id
//! selects one of ChaCha8's 2⁶⁴ independent streams, so replicate `r` of
//! truth `t` always draws the same numbers however many replicates run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replicate `replicate` under true model `truth`.
pub fn replicate_stream(truth: usize, replicate: usize) -> u64 {
    ((truth as u64) << 32) | replicate as u64
}

pub fn standard_normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}
