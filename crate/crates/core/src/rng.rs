//! Seed splitting and sampling helpers.
//!
//! Every random stream in a run is keyed by `(master_seed, trial, player,
//! purpose)` through a chain of SplitMix64 finalizers, so streams do not
//! depend on how trials are scheduled across threads:
//!
//! ```text
//! s0 = mix(master_seed ^ 0x6177_6573_6f6d_6531)
//! s1 = mix(s0 ^ trial)
//! s2 = mix(s1 ^ player)
//! seed = mix(s2 ^ purpose)
//! ```
//!
//! The seed feeds a ChaCha8 generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Action sampling and random action picks of a learning agent.
    Agent = 1,
    /// Action sampling of a fixed or scripted opponent.
    Opponent = 2,
}

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master_seed: u64, trial: u64, player: u64, purpose: Purpose) -> u64 {
    let s = mix(master_seed ^ 0x6177_6573_6f6d_6531);
    let s = mix(s ^ trial);
    let s = mix(s ^ player);
    mix(s ^ purpose as u64)
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an index from the distribution `probs` by inverting its CDF.
pub fn sample_index<S: Scalar>(rng: &mut Stream, probs: &[S]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (a, p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            acc += p;
            last_positive = a;
            if u < acc {
                return a;
            }
        }
    }
    // Only reachable when the probabilities sum to slightly less than one.
    last_positive
}
