//! The AWESOME learner: epoch-batched play under two null hypotheses.
//!
//! While the equilibrium hypothesis (`appe`) holds the agent plays its
//! precomputed equilibrium strategy. Once that hypothesis is rejected it
//! plays a pure action and keeps re-checking that everyone looks
//! stationary; a stationarity rejection triggers a complete restart. All
//! tests run over every player including the agent itself, so agents in
//! self-play reach identical verdicts from the same public observations.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::EquilibriumProfile;
use crate::game::{
    action_values, argmax_lowest, linf_distance, payoff_range, ActionHistogram, GameError,
    JointProfile, MixedStrategy, StageGame,
};
use crate::rng::{sample_index, stream, Stream};
use crate::scalar::Scalar;
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("equilibrium has {actual} strategies, game has {expected} players")]
    EquilibriumShape { expected: usize, actual: usize },
}

/// Flags and strategy at one point of the epoch-end processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FlagState<S> {
    pub appe: bool,
    pub aps: bool,
    pub delta: bool,
    pub phi: MixedStrategy<S>,
}

/// One hypothesis test: per-player distances against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct HypothesisCheck<S> {
    pub distances: Vec<S>,
    pub threshold: S,
    pub rejected: bool,
}

/// The best-response comparison made while the equilibrium hypothesis is off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BestResponseCheck<S> {
    pub action: usize,
    pub best_value: S,
    pub current_value: S,
    pub margin: S,
    pub switched: bool,
}

/// Everything the agent decided at the end of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AgentEpoch<S> {
    pub player: usize,
    /// Epoch index within the current restart cycle.
    pub t: usize,
    #[serde(with = "crate::wide")]
    pub rounds: u128,
    pub eps_e: S,
    pub eps_s: S,
    pub eps_s_next: S,
    pub entry: FlagState<S>,
    pub stationarity: Option<HypothesisCheck<S>>,
    pub best_response: Option<BestResponseCheck<S>>,
    pub equilibrium: Option<HypothesisCheck<S>>,
    /// Actions drawn by the random pick after an equilibrium rejection, in
    /// draw order; the last one is kept.
    pub random_actions: Vec<usize>,
    pub exit: FlagState<S>,
    pub restarted: bool,
    /// Restart count after this epoch.
    pub restarts: u64,
}

/// An epoch report together with the histograms it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochClose<S> {
    pub report: AgentEpoch<S>,
    pub histograms: Vec<ActionHistogram>,
}

/// Synchronization-relevant part of an agent's state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlagTuple {
    pub t: usize,
    pub appe: bool,
    pub aps: bool,
    pub delta: bool,
    pub restarts: u64,
}

#[derive(Debug, Clone)]
pub struct AwesomeAgent<S: Scalar> {
    game: Arc<StageGame<S>>,
    schedule: Arc<Schedule<S>>,
    eq: Arc<EquilibriumProfile<S>>,
    me: usize,
    phi: MixedStrategy<S>,
    h_prev: Vec<ActionHistogram>,
    h_curr: Vec<ActionHistogram>,
    t: usize,
    round_in_epoch: u64,
    epoch_rounds: u128,
    appe: bool,
    aps: bool,
    delta: bool,
    restarts: u64,
    mu: S,
    rng: Stream,
}

impl<S: Scalar> AwesomeAgent<S> {
    pub fn new(
        game: Arc<StageGame<S>>,
        me: usize,
        schedule: Arc<Schedule<S>>,
        eq: Arc<EquilibriumProfile<S>>,
        seed: u64,
    ) -> Result<Self, AgentError> {
        game.check_player(me)?;
        if eq.strategies.len() != game.num_players() {
            return Err(AgentError::EquilibriumShape {
                expected: game.num_players(),
                actual: eq.strategies.len(),
            });
        }
        for (p, s) in eq.strategies.iter().enumerate() {
            if s.len() != game.action_count(p) {
                return Err(GameError::DimensionMismatch {
                    what: "equilibrium strategy",
                    expected: game.action_count(p),
                    actual: s.len(),
                }
                .into());
            }
        }
        let mu = payoff_range(&game, me)?;
        let empty: Vec<_> = game
            .action_counts()
            .iter()
            .map(|&c| ActionHistogram::empty(c))
            .collect();
        Ok(Self {
            phi: eq.strategy(me).clone(),
            h_prev: empty.clone(),
            h_curr: empty,
            t: 0,
            round_in_epoch: 0,
            epoch_rounds: schedule.rounds(0),
            appe: true,
            aps: true,
            delta: false,
            restarts: 0,
            mu,
            rng: stream(seed),
            game,
            schedule,
            eq,
            me,
        })
    }

    pub fn me(&self) -> usize {
        self.me
    }

    pub fn phi(&self) -> &MixedStrategy<S> {
        &self.phi
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn appe(&self) -> bool {
        self.appe
    }

    pub fn aps(&self) -> bool {
        self.aps
    }

    pub fn delta(&self) -> bool {
        self.delta
    }

    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    pub fn round_in_epoch(&self) -> u64 {
        self.round_in_epoch
    }

    pub fn epoch_rounds(&self) -> u128 {
        self.epoch_rounds
    }

    pub fn mu(&self) -> S {
        self.mu
    }

    pub fn h_prev(&self) -> &[ActionHistogram] {
        &self.h_prev
    }

    pub fn h_curr(&self) -> &[ActionHistogram] {
        &self.h_curr
    }

    pub fn equilibrium(&self) -> &EquilibriumProfile<S> {
        &self.eq
    }

    pub fn flags(&self) -> FlagTuple {
        FlagTuple {
            t: self.t,
            appe: self.appe,
            aps: self.aps,
            delta: self.delta,
            restarts: self.restarts,
        }
    }

    /// State with the random stream and restart counter left out, for
    /// comparing against a fresh agent.
    pub fn learning_state(
        &self,
    ) -> (
        FlagTuple,
        &MixedStrategy<S>,
        &[ActionHistogram],
        &[ActionHistogram],
        u64,
    ) {
        let mut flags = self.flags();
        flags.restarts = 0;
        (
            flags,
            &self.phi,
            &self.h_prev,
            &self.h_curr,
            self.round_in_epoch,
        )
    }

    /// `n * |A| * eps_s^{t+1} * mu` for the current epoch.
    pub fn margin(&self) -> S {
        S::of_usize(self.game.num_players())
            * S::of_usize(self.game.max_actions())
            * self.schedule.eps_s(self.t + 1)
            * self.mu
    }

    /// Samples this round's action from `phi`.
    pub fn act(&mut self) -> usize {
        match self.phi.pure_action() {
            Some(a) => a,
            None => sample_index(&mut self.rng, self.phi.probs()),
        }
    }

    /// Records the round's joint profile; closes the epoch after `N^t`
    /// observations and restarts when stationarity was rejected.
    pub fn observe(&mut self, joint: &JointProfile) -> Result<Option<EpochClose<S>>, AgentError> {
        self.game.check_profile(joint.actions())?;
        for (h, &a) in self.h_curr.iter_mut().zip(joint.actions()) {
            h.record(a);
        }
        self.round_in_epoch += 1;
        if u128::from(self.round_in_epoch) < self.epoch_rounds {
            return Ok(None);
        }
        let histograms = self.h_curr.clone();
        let report = self.epoch_end();
        if report.restarted {
            self.restart();
        }
        Ok(Some(EpochClose { report, histograms }))
    }

    fn flag_state(&self) -> FlagState<S> {
        FlagState {
            appe: self.appe,
            aps: self.aps,
            delta: self.delta,
            phi: self.phi.clone(),
        }
    }

    /// Whether some player's epoch histogram is farther than `eps_e^t` from
    /// its equilibrium strategy.
    pub fn equilibrium_test(&self) -> HypothesisCheck<S> {
        let threshold = self.schedule.eps_e(self.t);
        let distances: Vec<S> = self
            .h_curr
            .iter()
            .zip(&self.eq.strategies)
            .map(|(h, pi)| {
                linf_distance(&h.frequencies::<S>(), pi.probs()).expect("shapes checked")
            })
            .collect();
        let rejected = distances.iter().any(|&d| d > threshold);
        HypothesisCheck {
            distances,
            threshold,
            rejected,
        }
    }

    /// Whether some player's histogram moved more than `eps_s^t` since the
    /// previous epoch.
    pub fn stationarity_test(&self) -> HypothesisCheck<S> {
        let threshold = self.schedule.eps_s(self.t);
        let distances: Vec<S> = self
            .h_curr
            .iter()
            .zip(&self.h_prev)
            .map(|(c, p)| {
                linf_distance(&c.frequencies::<S>(), &p.frequencies::<S>()).expect("same player")
            })
            .collect();
        let rejected = distances.iter().any(|&d| d > threshold);
        HypothesisCheck {
            distances,
            threshold,
            rejected,
        }
    }

    /// Switches `phi` to the best response against the opponents' epoch
    /// frequencies when it beats the current action by more than the margin.
    pub fn best_response_update(&mut self) -> BestResponseCheck<S> {
        let others: Vec<MixedStrategy<S>> = self
            .h_curr
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != self.me)
            .map(|(_, h)| h.to_strategy().expect("epoch histograms are nonempty"))
            .collect();
        let values = action_values(&self.game, self.me, &others).expect("shapes checked");
        let (action, best_value) = argmax_lowest(&values);
        let current = self.phi.pure_action().expect("phi is pure off-equilibrium");
        let current_value = values[current];
        let margin = self.margin();
        let switched = best_value > current_value + margin;
        if switched {
            self.phi = MixedStrategy::pure(self.game.action_count(self.me), action);
        }
        BestResponseCheck {
            action,
            best_value,
            current_value,
            margin,
            switched,
        }
    }

    fn epoch_end(&mut self) -> AgentEpoch<S> {
        let entry = self.flag_state();
        let params = self.schedule.epoch_params(self.t);
        let eps_s_next = self.schedule.eps_s(self.t + 1);

        let mut stationarity = None;
        let mut best_response = None;
        if !self.appe {
            if !self.delta {
                let check = self.stationarity_test();
                if check.rejected {
                    self.aps = false;
                }
                stationarity = Some(check);
            }
            self.delta = false;
            best_response = Some(self.best_response_update());
        }

        let mut equilibrium = None;
        let mut random_actions = Vec::new();
        if self.appe {
            let check = self.equilibrium_test();
            // One random pick per offending player, as in the loop it mirrors.
            for &d in &check.distances {
                if d > check.threshold {
                    self.appe = false;
                    let own = self.game.action_count(self.me);
                    let a = self.rng.gen_range(0..own);
                    random_actions.push(a);
                    self.phi = MixedStrategy::pure(own, a);
                    self.delta = true;
                }
            }
            equilibrium = Some(check);
        }

        std::mem::swap(&mut self.h_prev, &mut self.h_curr);
        self.h_curr.iter_mut().for_each(ActionHistogram::clear);
        self.t += 1;
        self.round_in_epoch = 0;
        self.epoch_rounds = self.schedule.rounds(self.t);

        AgentEpoch {
            player: self.me,
            t: params.t,
            rounds: params.rounds,
            eps_e: params.eps_e,
            eps_s: params.eps_s,
            eps_s_next,
            entry,
            stationarity,
            best_response,
            equilibrium,
            random_actions,
            exit: self.flag_state(),
            restarted: !self.aps,
            restarts: self.restarts + u64::from(!self.aps),
        }
    }

    /// Forgets histories and flags; the equilibrium and random stream stay.
    fn restart(&mut self) {
        self.h_prev.iter_mut().for_each(ActionHistogram::clear);
        self.h_curr.iter_mut().for_each(ActionHistogram::clear);
        self.appe = true;
        self.aps = true;
        self.delta = false;
        self.t = 0;
        self.round_in_epoch = 0;
        self.epoch_rounds = self.schedule.rounds(0);
        self.phi = self.eq.strategy(self.me).clone();
        self.restarts += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::compute_equilibrium;
    use crate::games::{self, DEFECT, PAPER, ROCK};

    fn agent_for(game: StageGame<f64>, me: usize, actions_total: usize) -> AwesomeAgent<f64> {
        let eq = compute_equilibrium(&game, None).unwrap();
        let schedule = Schedule::harmonic(0.5, actions_total).unwrap();
        AwesomeAgent::new(Arc::new(game), me, Arc::new(schedule), Arc::new(eq), 11).unwrap()
    }

    fn load(agent: &mut AwesomeAgent<f64>, curr: &[&[u64]], prev: &[&[u64]]) {
        agent.h_curr = curr
            .iter()
            .map(|c| ActionHistogram::from_counts(c.to_vec()))
            .collect();
        agent.h_prev = prev
            .iter()
            .map(|c| ActionHistogram::from_counts(c.to_vec()))
            .collect();
    }

    #[test]
    fn init_matching_pennies() {
        let a = agent_for(games::matching_pennies(), 0, 4);
        assert_eq!(a.phi().probs(), &[0.5, 0.5]);
        assert_eq!(a.t(), 0);
        assert!(a.appe() && a.aps() && !a.delta());
        assert_eq!(a.restarts(), 0);
        assert_eq!(a.epoch_rounds(), 32);
    }

    #[test]
    fn init_prisoners_dilemma_plays_defect() {
        let mut a = agent_for(games::prisoners_dilemma(), 1, 4);
        assert_eq!(a.phi().pure_action(), Some(DEFECT));
        assert!((0..50).all(|_| a.act() == DEFECT));
    }

    #[test]
    fn init_is_deterministic() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        let mut b = agent_for(games::matching_pennies(), 0, 4);
        let xs: Vec<_> = (0..200).map(|_| a.act()).collect();
        let ys: Vec<_> = (0..200).map(|_| b.act()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn uniform_action_frequency() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        let heads = (0..100_000).filter(|_| a.act() == 0).count();
        let f = heads as f64 / 1e5;
        assert!((0.494..=0.506).contains(&f), "{f}");
    }

    #[test]
    fn equilibrium_test_thresholds() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        // Pin the threshold at 0.15 by loading a custom schedule.
        a.schedule = Arc::new(Schedule::new(0.15, crate::schedule::Decay::Constant, 4).unwrap());
        load(&mut a, &[&[50, 50], &[60, 40]], &[&[0, 0], &[0, 0]]);
        let c = a.equilibrium_test();
        assert!(!c.rejected);
        assert!((c.distances[1] - 0.1).abs() < 1e-15);
        load(&mut a, &[&[50, 50], &[70, 30]], &[&[0, 0], &[0, 0]]);
        assert!(a.equilibrium_test().rejected);
        // The agent's own histogram counts too.
        load(&mut a, &[&[70, 30], &[50, 50]], &[&[0, 0], &[0, 0]]);
        assert!(a.equilibrium_test().rejected);
    }

    #[test]
    fn stationarity_test_boundaries() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        a.schedule = Arc::new(Schedule::new(0.25, crate::schedule::Decay::Constant, 4).unwrap());
        load(&mut a, &[&[3, 1], &[2, 2]], &[&[3, 1], &[2, 2]]);
        assert!(!a.stationarity_test().rejected);
        load(&mut a, &[&[4, 0], &[0, 4]], &[&[4, 0], &[4, 0]]);
        assert!(a.stationarity_test().rejected);
        // Drift of exactly the threshold is not a rejection.
        load(&mut a, &[&[4, 0], &[3, 1]], &[&[4, 0], &[4, 0]]);
        let c = a.stationarity_test();
        assert_eq!(c.distances[1], 0.25);
        assert!(!c.rejected);
    }

    fn rps_off_equilibrium(t: usize) -> AwesomeAgent<f64> {
        let mut a = agent_for(games::rock_paper_scissors(), 0, 6);
        a.appe = false;
        a.t = t;
        a.phi = MixedStrategy::pure(3, ROCK);
        load(
            &mut a,
            &[&[0, 0, 10], &[50, 30, 20]],
            &[&[0, 0, 10], &[50, 30, 20]],
        );
        a
    }

    #[test]
    fn best_response_switch_needs_margin() {
        // margin = 2 * 3 * eps_s^{t+1} * 2 = 6 / (t + 1); below 0.4 from t = 15.
        let mut late = rps_off_equilibrium(15);
        assert!(late.margin() < 0.4);
        let check = late.best_response_update();
        assert!(check.switched);
        assert_eq!(check.action, PAPER);
        assert!((check.best_value - check.current_value - 0.4).abs() < 1e-12);
        assert_eq!(late.phi().pure_action(), Some(PAPER));

        let mut early = rps_off_equilibrium(3);
        assert!(early.margin() > 0.4);
        assert!(!early.best_response_update().switched);
        assert_eq!(early.phi().pure_action(), Some(ROCK));
    }

    #[test]
    fn best_response_no_switch_when_already_best() {
        let mut a = rps_off_equilibrium(1000);
        a.phi = MixedStrategy::pure(3, PAPER);
        let check = a.best_response_update();
        assert!(!check.switched);
        assert_eq!(check.best_value, check.current_value);
    }

    #[test]
    fn rejection_picks_pure_action_and_sets_grace() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        // Epoch 0: both players always Heads, distance 0.5 is not > 0.5.
        for _ in 0..32 {
            a.observe(&JointProfile(vec![0, 0])).unwrap();
        }
        assert!(a.appe());
        // Epoch 1 (threshold 0.25): rejected.
        let mut close = None;
        for _ in 0..128 {
            close = a.observe(&JointProfile(vec![0, 0])).unwrap().or(close);
        }
        let close = close.unwrap();
        assert!(close.report.equilibrium.as_ref().unwrap().rejected);
        assert!(!a.appe() && a.delta());
        assert!(a.phi().pure_action().is_some());
        assert_eq!(close.report.random_actions.len(), 2);
        assert_eq!(a.t(), 2);

        // Epoch 2: grace, stationarity skipped exactly once.
        let mut report = None;
        for _ in 0..906 {
            report = a.observe(&JointProfile(vec![0, 1])).unwrap().or(report);
        }
        let report = report.unwrap().report;
        assert!(report.stationarity.is_none());
        assert!(report.best_response.is_some());
        assert!(!a.delta());

        // Epoch 3: the opponent switched from Heads to Tails -> restart.
        let n3 = a.epoch_rounds();
        let mut report = None;
        for _ in 0..n3 {
            let own = a.act();
            report = a.observe(&JointProfile(vec![own, 0])).unwrap().or(report);
        }
        let report = report.unwrap().report;
        assert!(report.stationarity.as_ref().unwrap().rejected);
        assert!(report.restarted);
        assert_eq!(a.restarts(), 1);
        let fresh = agent_for(games::matching_pennies(), 0, 4);
        assert_eq!(a.learning_state(), fresh.learning_state());
    }

    #[test]
    fn bookkeeping_after_first_epoch() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        let mut own = [0u64; 2];
        for _ in 0..31 {
            let x = a.act();
            own[x] += 1;
            assert!(a.observe(&JointProfile(vec![x, 1])).unwrap().is_none());
        }
        assert_eq!(a.h_curr()[0].counts(), &own);
        assert_eq!(a.h_curr()[0].total(), a.round_in_epoch());
        let x = a.act();
        own[x] += 1;
        let close = a.observe(&JointProfile(vec![x, 1])).unwrap().unwrap();
        assert_eq!(a.t(), 1);
        assert_eq!(a.h_prev()[0].counts(), &own);
        assert_eq!(a.h_prev()[1].counts(), &[0, 32]);
        assert_eq!(close.histograms, a.h_prev());
        assert!(a.h_curr().iter().all(ActionHistogram::is_empty));
    }

    #[test]
    fn rejects_bad_profile() {
        let mut a = agent_for(games::matching_pennies(), 0, 4);
        assert!(a.observe(&JointProfile(vec![0])).is_err());
        assert!(a.observe(&JointProfile(vec![0, 2])).is_err());
    }
}
