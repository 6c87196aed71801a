//! Scalar abstraction shared by the game, equilibrium, schedule and agent code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar the algorithm can run on.
///
/// The tolerances are per-type because `f32` cannot hold the `1e-12`
/// probability-sum tolerance that `f64` uses.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Allowed deviation of a probability vector's sum from one.
    const SUM_TOL: f64;
    /// Allowed negative slack on probabilities produced by linear solves.
    const CLIP_TOL: f64;
    /// Maximum regret accepted for an equilibrium certificate.
    const REGRET_TOL: f64;
    /// Pivot magnitude below which a linear system is treated as singular.
    const PIVOT_TOL: f64;

    /// Lossy conversion from `f64`; panics only on NaN-free inputs that
    /// `FromPrimitive` rejects, which never happens for float scalars.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("float scalar accepts every f64")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("float scalar accepts every usize")
    }

    #[inline]
    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("float scalar accepts every u64")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float scalar converts to f64")
    }

    #[inline]
    fn sum_tol() -> Self {
        Self::of(Self::SUM_TOL)
    }

    #[inline]
    fn clip_tol() -> Self {
        Self::of(Self::CLIP_TOL)
    }

    #[inline]
    fn regret_tol() -> Self {
        Self::of(Self::REGRET_TOL)
    }

    #[inline]
    fn pivot_tol() -> Self {
        Self::of(Self::PIVOT_TOL)
    }
}

impl Scalar for f64 {
    const SUM_TOL: f64 = 1e-12;
    const CLIP_TOL: f64 = 1e-12;
    const REGRET_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const SUM_TOL: f64 = 1e-5;
    const CLIP_TOL: f64 = 1e-6;
    const REGRET_TOL: f64 = 1e-4;
    const PIVOT_TOL: f64 = 1e-6;
}
