//! Counter-based seed derivation.
//!
//! Every random stream is keyed by `(master seed, stage, a, b)` so results do
//! not depend on the order in which parallel workers run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Scan = 1,
    Calibration = 2,
    Trial = 3,
    Bootstrap = 4,
    IdealHomodyne = 5,
    Campaign = 6,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, stage: Stage, a: u64, b: u64) -> u64 {
    let mut h = splitmix(master);
    for word in [stage as u64, a, b] {
        h = splitmix(h ^ word);
    }
    h
}

pub fn stream_rng(master: u64, stage: Stage, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, stage, a, b))
}
