//! Repeated normal-form games played by the AWESOME learner.
//!
//! The game, equilibrium, schedule, agent and opponent modules are generic
//! over a [`Scalar`] (`f32` or `f64`). The harness, trace formats and CLI
//! work in `f64`; the aliases below name those concrete types.

pub mod agent;
pub mod cli;
pub mod equilibrium;
pub mod game;
pub mod games;
pub mod harness;
pub mod opponents;
pub mod rng;
pub mod scalar;
pub mod schedule;
mod wide;

pub use agent::{AgentEpoch, AwesomeAgent, FlagTuple};
pub use equilibrium::{compute_equilibrium, EquilibriumProfile};
pub use game::{ActionHistogram, JointProfile, MixedStrategy, StageGame};
pub use opponents::{Opponent, OpponentPolicy};
pub use scalar::Scalar;
pub use schedule::{EpochParams, Schedule};

pub type Game = StageGame<f64>;
pub type Strategy = MixedStrategy<f64>;
pub type Equilibrium = EquilibriumProfile<f64>;
pub type EpochSchedule = Schedule<f64>;
pub type Agent = AwesomeAgent<f64>;
pub type Policy = OpponentPolicy<f64>;

pub type Game32 = StageGame<f32>;
pub type Agent32 = AwesomeAgent<f32>;
