//! Epoch schedules `(eps_e^t, eps_s^t, N^t)`.
//!
//! The built-in families couple the thresholds as `eps_s^{t+1} = eps_e^t`
//! (with `eps_s^0 = eps_e^0`) and size epochs as
//!
//! ```text
//! N^t = ceil(|A|_sum / ((1 - 2^(-1/k^2)) * (eps_e^t)^2)),   k = max(t, 1)
//! ```
//!
//! so every Chebyshev factor `1 - |A|_sum / (N^t eps^2)` at `t >= 1` is at
//! least `2^(-1/t^2)`, and the infinite product is bounded below by
//! `2^(-pi^2/6)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("epsilon base must lie in (0, 1], got {0}")]
    EpsilonBase(f64),
    #[error("geometric ratio must lie in (0, 1), got {0}")]
    Ratio(f64),
    #[error("total action count must be positive")]
    ActionsTotal,
    #[error("epoch length must be positive")]
    ZeroRounds,
    #[error("validity check needs a horizon of at least 2, got {0}")]
    HorizonTooShort(usize),
    #[error("{which} factor is not positive at t = {t}")]
    NonPositiveFactor { t: usize, which: FactorKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Stationarity,
    Equilibrium,
}

impl std::fmt::Display for FactorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FactorKind::Stationarity => "stationarity",
            FactorKind::Equilibrium => "equilibrium",
        })
    }
}

/// Base sequence for `eps_e^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", bound = "S: Scalar")]
pub enum Decay<S> {
    /// `eps_base / (t + 1)`
    Harmonic,
    /// `eps_base * ratio^t`
    Geometric { ratio: S },
    /// `eps_base` for every epoch; never valid, kept for validation tests.
    Constant,
}

/// How epoch lengths are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RoundsRule {
    /// The ceiling formula in the module docs.
    Reconstructed,
    /// Same length every epoch.
    Fixed {
        #[serde(with = "crate::wide")]
        rounds: u128,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EpochParams<S> {
    pub t: usize,
    pub eps_e: S,
    pub eps_s: S,
    #[serde(with = "crate::wide")]
    pub rounds: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Schedule<S> {
    epsilon_base: S,
    decay: Decay<S>,
    actions_total: usize,
    #[serde(default = "reconstructed")]
    rounds: RoundsRule,
    /// Replaces `N^0`, which validity places no constraint on.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::wide::option"
    )]
    initial_rounds: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap: Option<usize>,
}

fn reconstructed() -> RoundsRule {
    RoundsRule::Reconstructed
}

impl<S: Scalar> Schedule<S> {
    pub fn new(
        epsilon_base: S,
        decay: Decay<S>,
        actions_total: usize,
    ) -> Result<Self, ScheduleError> {
        let schedule = Self {
            epsilon_base,
            decay,
            actions_total,
            rounds: RoundsRule::Reconstructed,
            initial_rounds: None,
            cap: None,
        };
        schedule.check()?;
        Ok(schedule)
    }

    /// Re-checks the constructor invariants, for schedules that arrived
    /// through deserialization.
    pub fn check(&self) -> Result<(), ScheduleError> {
        if !(self.epsilon_base > S::zero() && self.epsilon_base <= S::one()) {
            return Err(ScheduleError::EpsilonBase(self.epsilon_base.as_f64()));
        }
        if let Decay::Geometric { ratio } = self.decay {
            if !(ratio > S::zero() && ratio < S::one()) {
                return Err(ScheduleError::Ratio(ratio.as_f64()));
            }
        }
        if self.actions_total == 0 {
            return Err(ScheduleError::ActionsTotal);
        }
        if self.rounds == (RoundsRule::Fixed { rounds: 0 }) || self.initial_rounds == Some(0) {
            return Err(ScheduleError::ZeroRounds);
        }
        Ok(())
    }

    pub fn harmonic(epsilon_base: S, actions_total: usize) -> Result<Self, ScheduleError> {
        Self::new(epsilon_base, Decay::Harmonic, actions_total)
    }

    pub fn geometric(
        epsilon_base: S,
        ratio: S,
        actions_total: usize,
    ) -> Result<Self, ScheduleError> {
        Self::new(epsilon_base, Decay::Geometric { ratio }, actions_total)
    }

    pub fn with_rounds(mut self, rule: RoundsRule) -> Result<Self, ScheduleError> {
        if rule == (RoundsRule::Fixed { rounds: 0 }) {
            return Err(ScheduleError::ZeroRounds);
        }
        self.rounds = rule;
        Ok(self)
    }

    pub fn with_initial_rounds(mut self, rounds: u128) -> Result<Self, ScheduleError> {
        if rounds == 0 {
            return Err(ScheduleError::ZeroRounds);
        }
        self.initial_rounds = Some(rounds);
        Ok(self)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn epsilon_base(&self) -> S {
        self.epsilon_base
    }

    pub fn decay(&self) -> Decay<S> {
        self.decay
    }

    pub fn actions_total(&self) -> usize {
        self.actions_total
    }

    pub fn rounds_rule(&self) -> RoundsRule {
        self.rounds
    }

    pub fn initial_rounds(&self) -> Option<u128> {
        self.initial_rounds
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// True for the harmonic and geometric families with reconstructed
    /// epoch lengths, whose validity holds analytically.
    pub fn is_builtin_family(&self) -> bool {
        !matches!(self.decay, Decay::Constant) && self.rounds == RoundsRule::Reconstructed
    }

    pub fn eps_e(&self, t: usize) -> S {
        match self.decay {
            Decay::Harmonic => self.epsilon_base / S::of_usize(t + 1),
            Decay::Geometric { ratio } => self.epsilon_base * ratio.powf(S::of_usize(t)),
            Decay::Constant => self.epsilon_base,
        }
    }

    pub fn eps_s(&self, t: usize) -> S {
        self.eps_e(t.saturating_sub(1))
    }

    pub fn rounds(&self, t: usize) -> u128 {
        if let (0, Some(n)) = (t, self.initial_rounds) {
            return n;
        }
        match self.rounds {
            RoundsRule::Fixed { rounds } => rounds,
            RoundsRule::Reconstructed => {
                let k = S::of_usize(t.max(1));
                // 1 - 2^(-1/k^2), without cancellation for large k.
                let slack = -(-S::of(std::f64::consts::LN_2) / (k * k)).exp_m1();
                let eps = self.eps_e(t);
                let n = (S::of_usize(self.actions_total) / (slack * eps * eps)).ceil();
                n.to_u128().unwrap_or(u128::MAX).max(1)
            }
        }
    }

    pub fn epoch_params(&self, t: usize) -> EpochParams<S> {
        EpochParams {
            t,
            eps_e: self.eps_e(t),
            eps_s: self.eps_s(t),
            rounds: self.rounds(t),
        }
    }

    /// Parameters for epochs `0..=cap`, when a cap is set.
    pub fn precompute(&self) -> Option<Vec<EpochParams<S>>> {
        self.cap
            .map(|cap| (0..=cap).map(|t| self.epoch_params(t)).collect())
    }

    fn rounds_scalar(&self, t: usize) -> S {
        S::from_u128(self.rounds(t)).unwrap_or(S::infinity())
    }

    /// `1 - |A|_sum / (N^t (eps_e^t)^2)`
    pub fn equilibrium_factor(&self, t: usize) -> S {
        let eps = self.eps_e(t);
        S::one() - S::of_usize(self.actions_total) / (self.rounds_scalar(t) * eps * eps)
    }

    /// `1 - |A|_sum / (N^t (eps_s^{t+1})^2)`
    pub fn stationarity_factor(&self, t: usize) -> S {
        let eps = self.eps_s(t + 1);
        S::one() - S::of_usize(self.actions_total) / (self.rounds_scalar(t) * eps * eps)
    }

    /// Checks the validity conditions on epochs `0..=horizon`.
    pub fn check_valid_prefix(&self, horizon: usize) -> Result<ValidityReport<S>, ScheduleError> {
        if horizon < 2 {
            return Err(ScheduleError::HorizonTooShort(horizon));
        }
        let first_failure = |bad: &dyn Fn(usize) -> bool, from: usize| {
            (from..=horizon)
                .find(|&t| bad(t))
                .map_or(Condition::Pass, |t| Condition::Fail { t })
        };
        let eps_e_decreasing = first_failure(&|t| self.eps_e(t) >= self.eps_e(t - 1), 1);
        // eps_s^0 == eps_s^1 by construction; strict decrease from t = 2.
        let eps_s_decreasing = match first_failure(&|t| self.eps_s(t) >= self.eps_s(t - 1), 2) {
            Condition::Pass if self.eps_s(1) > self.eps_s(0) => Condition::Fail { t: 1 },
            c => c,
        };
        let rounds_nondecreasing = first_failure(&|t| self.rounds(t) < self.rounds(t - 1), 1);
        let equilibrium_factors = first_failure(&|t| !(self.equilibrium_factor(t) > S::zero()), 1);
        let stationarity_factors =
            first_failure(&|t| !(self.stationarity_factor(t) > S::zero()), 1);
        let products = match (equilibrium_factors, stationarity_factors) {
            (Condition::Pass, Condition::Pass) => Some(self.partial_products(horizon)),
            _ => None,
        };
        Ok(ValidityReport {
            horizon,
            eps_e_decreasing,
            eps_s_decreasing,
            rounds_nondecreasing,
            stationarity_factors,
            equilibrium_factors,
            products,
            analytic: self.is_builtin_family(),
        })
    }

    fn partial_products(&self, horizon: usize) -> (S, S) {
        (1..=horizon).fold((S::one(), S::one()), |(s, e), t| {
            (
                s * self.stationarity_factor(t),
                e * self.equilibrium_factor(t),
            )
        })
    }

    /// Lower bounds on the probability that a true stationarity hypothesis
    /// (first) and a true equilibrium hypothesis (second) survive epochs
    /// `1..=horizon`: the partial Chebyshev products.
    pub fn never_restart_lower_bound(&self, horizon: usize) -> Result<(S, S), ScheduleError> {
        let mut stat = S::one();
        let mut eq = S::one();
        for t in 1..=horizon {
            let fs = self.stationarity_factor(t);
            if !(fs > S::zero()) {
                return Err(ScheduleError::NonPositiveFactor {
                    t,
                    which: FactorKind::Stationarity,
                });
            }
            let fe = self.equilibrium_factor(t);
            if !(fe > S::zero()) {
                return Err(ScheduleError::NonPositiveFactor {
                    t,
                    which: FactorKind::Equilibrium,
                });
            }
            stat = stat * fs;
            eq = eq * fe;
        }
        Ok((stat, eq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Condition {
    Pass,
    Fail { t: usize },
}

impl Condition {
    pub fn passed(self) -> bool {
        self == Condition::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ValidityReport<S> {
    pub horizon: usize,
    pub eps_e_decreasing: Condition,
    pub eps_s_decreasing: Condition,
    pub rounds_nondecreasing: Condition,
    pub stationarity_factors: Condition,
    pub equilibrium_factors: Condition,
    /// (stationarity, equilibrium) partial products; absent when a factor
    /// is not positive.
    pub products: Option<(S, S)>,
    /// Whether full validity (the limits) is known analytically rather than
    /// only checked on this prefix.
    pub analytic: bool,
}

impl<S> ValidityReport<S> {
    pub fn passed(&self) -> bool {
        [
            self.eps_e_decreasing,
            self.eps_s_decreasing,
            self.rounds_nondecreasing,
            self.stationarity_factors,
            self.equilibrium_factors,
        ]
        .iter()
        .all(|c| c.passed())
    }

    /// First failing condition and its epoch, if any.
    pub fn first_failure(&self) -> Option<(&'static str, usize)> {
        [
            ("eps_e decreasing", self.eps_e_decreasing),
            ("eps_s decreasing", self.eps_s_decreasing),
            ("N nondecreasing", self.rounds_nondecreasing),
            ("stationarity factor positive", self.stationarity_factors),
            ("equilibrium factor positive", self.equilibrium_factors),
        ]
        .into_iter()
        .find_map(|(name, c)| match c {
            Condition::Fail { t } => Some((name, t)),
            Condition::Pass => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default4() -> Schedule<f64> {
        Schedule::harmonic(0.5, 4).unwrap()
    }

    #[test]
    fn epoch_params_examples() {
        let s = default4();
        let p0 = s.epoch_params(0);
        assert_eq!((p0.eps_e, p0.eps_s, p0.rounds), (0.5, 0.5, 32));
        let p1 = s.epoch_params(1);
        assert_eq!((p1.eps_e, p1.eps_s, p1.rounds), (0.25, 0.5, 128));
        let p2 = s.epoch_params(2);
        assert_eq!(p2.eps_e, 0.5 / 3.0);
        assert_eq!(p2.eps_s, 0.25);
        assert_eq!(p2.rounds, 906);
    }

    #[test]
    fn single_factor() {
        let (stat, eq) = default4().never_restart_lower_bound(1).unwrap();
        assert_eq!(eq, 0.5);
        assert_eq!(stat, 0.5);
    }

    #[test]
    fn coupling_holds() {
        let s = Schedule::geometric(0.8, 0.7, 5).unwrap();
        for t in 0..50 {
            assert_eq!(s.eps_s(t + 1), s.eps_e(t));
        }
        assert_eq!(s.eps_s(0), s.eps_e(0));
    }

    #[test]
    fn default_prefix_is_valid() {
        let r = default4().check_valid_prefix(1000).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.analytic);
    }

    #[test]
    fn forced_single_round_fails() {
        let s = default4()
            .with_rounds(RoundsRule::Fixed { rounds: 1 })
            .unwrap();
        let r = s.check_valid_prefix(10).unwrap();
        assert_eq!(r.equilibrium_factors, Condition::Fail { t: 1 });
        assert_eq!(r.stationarity_factors, Condition::Fail { t: 1 });
        assert!(!r.passed());
        assert!(r.products.is_none());
        assert_eq!(
            s.never_restart_lower_bound(3),
            Err(ScheduleError::NonPositiveFactor {
                t: 1,
                which: FactorKind::Stationarity
            })
        );
    }

    #[test]
    fn constant_epsilon_fails_monotonicity() {
        let s = Schedule::new(0.5, Decay::Constant, 4).unwrap();
        let r = s.check_valid_prefix(10).unwrap();
        assert_eq!(r.eps_e_decreasing, Condition::Fail { t: 1 });
        assert_eq!(r.eps_s_decreasing, Condition::Fail { t: 2 });
        assert!(!r.analytic);
    }

    #[test]
    fn short_horizon_rejected() {
        assert_eq!(
            default4().check_valid_prefix(1),
            Err(ScheduleError::HorizonTooShort(1))
        );
    }

    #[test]
    fn initial_rounds_override() {
        let s = default4().with_initial_rounds(2).unwrap();
        assert_eq!(s.rounds(0), 2);
        assert_eq!(s.rounds(1), 128);
        assert!(s.check_valid_prefix(50).unwrap().passed());
        assert!(default4().with_initial_rounds(0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(Schedule::<f64>::harmonic(0.0, 4).is_err());
        assert!(Schedule::<f64>::harmonic(1.5, 4).is_err());
        assert!(Schedule::<f64>::harmonic(0.5, 0).is_err());
        assert!(Schedule::<f64>::geometric(0.5, 1.0, 4).is_err());
    }

    #[test]
    fn cap_precomputes_table() {
        let table = default4().with_cap(3).precompute().unwrap();
        assert_eq!(
            table.iter().map(|p| p.rounds).collect::<Vec<_>>(),
            vec![32, 128, 906, 3454]
        );
        assert!(default4().precompute().is_none());
    }

    #[test]
    fn serde_round_trip() {
        let s = Schedule::geometric(0.5, 0.5, 6)
            .unwrap()
            .with_initial_rounds(3)
            .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Schedule<f64>>(&text).unwrap(), s);
    }
}
