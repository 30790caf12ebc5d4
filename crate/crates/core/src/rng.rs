//! Project-wide random number generation.
//!
//! Every experiment draws from [`Xoshiro256PlusPlus`], seeded through
//! SplitMix64. Trial `t` of an experiment with seed `s` uses the stream
//! `splitmix64(s ^ t)`, so results depend only on `(seed, trial)` and never on
//! how trials are scheduled across threads.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus;

pub type ProjectRng = Xoshiro256PlusPlus;

/// One step of the SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for a top-level seed (e.g. instance sampling).
pub fn rng_from_seed(seed: u64) -> ProjectRng {
    ProjectRng::seed_from_u64(seed)
}

/// Generator for trial `trial` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ProjectRng {
    ProjectRng::seed_from_u64(splitmix64(seed ^ trial))
}
