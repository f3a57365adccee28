//! Stable seed derivation.
//!
//! Every stochastic unit of work (a synthetic day, a window fit, a tree) gets
//! its own generator whose seed is a pure function of the master seed and the
//! unit's coordinates, so results never depend on scheduling order.

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type TaskRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `value` into `seed`; order of folding matters.
pub fn combine(seed: u64, value: u64) -> u64 {
    mix64(seed ^ mix64(value))
}

/// FNV-1a, used to hash model identifiers into seed material.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn day_key(day: NaiveDate) -> u64 {
    // Days since 0001-01-01; always positive for supported dates.
    day.num_days_from_ce() as u64
}

/// Seed for one (day, minute, model) window fit.
pub fn task_seed(master: u64, day: NaiveDate, minute: u16, model_key: &str) -> u64 {
    let s = combine(master, day_key(day));
    let s = combine(s, u64::from(minute));
    combine(s, hash_str(model_key))
}

pub fn rng_from(seed: u64) -> TaskRng {
    TaskRng::seed_from_u64(seed)
}
