//! Finite n-player normal-form games and the arithmetic on them: expected
//! utilities, best responses, distances between action distributions, and
//! regret.
//!
//! Payoffs live in a dense tensor. Joint profiles are enumerated in
//! lexicographic order with player 0 varying slowest; the payoff of player
//! `i` at profile index `k` sits at `payoffs[k * n + i]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("game needs at least one player")]
    NoPlayers,
    #[error("player {player} has no actions")]
    NoActions { player: usize },
    #[error("expected {expected} payoff entries, got {actual}")]
    PayoffCount { expected: usize, actual: usize },
    #[error("payoff entry {index} is not finite")]
    NonFinitePayoff { index: usize },
    #[error("player index {player} out of range for a {players}-player game")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("action {action} out of range for player {player} ({count} actions)")]
    ActionOutOfRange {
        player: usize,
        action: usize,
        count: usize,
    },
    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
    #[error("action names for player {player}: expected {expected}, got {actual}")]
    ActionNames {
        player: usize,
        expected: usize,
        actual: usize,
    },
}

/// Probability distribution over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>", bound = "S: Scalar")]
pub struct MixedStrategy<S> {
    probs: Vec<S>,
}

impl<S: Scalar> MixedStrategy<S> {
    pub fn new(probs: Vec<S>) -> Result<Self, GameError> {
        if probs.is_empty() {
            return Err(GameError::InvalidStrategy(
                "empty probability vector".into(),
            ));
        }
        for (a, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < S::zero() {
                return Err(GameError::InvalidStrategy(format!(
                    "probability of action {a} is {p}"
                )));
            }
        }
        let total: S = probs.iter().copied().sum();
        if (total - S::one()).abs() > S::sum_tol() {
            return Err(GameError::InvalidStrategy(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn pure(count: usize, action: usize) -> Self {
        assert!(action < count, "pure action {action} out of range {count}");
        let mut probs = vec![S::zero(); count];
        probs[action] = S::one();
        Self { probs }
    }

    pub fn uniform(count: usize) -> Self {
        assert!(count > 0);
        Self {
            probs: vec![S::one() / S::of_usize(count); count],
        }
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The action played with certainty, if the strategy is pure.
    pub fn pure_action(&self) -> Option<usize> {
        let mut found = None;
        for (a, &p) in self.probs.iter().enumerate() {
            if p == S::one() {
                found = Some(a);
            } else if p != S::zero() {
                return None;
            }
        }
        found
    }

    pub fn prob(&self, action: usize) -> S {
        self.probs[action]
    }
}

impl<S: Scalar> TryFrom<Vec<S>> for MixedStrategy<S> {
    type Error = GameError;

    fn try_from(probs: Vec<S>) -> Result<Self, Self::Error> {
        Self::new(probs)
    }
}

impl<S> From<MixedStrategy<S>> for Vec<S> {
    fn from(s: MixedStrategy<S>) -> Self {
        s.probs
    }
}

/// Empirical action counts for one player over one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl ActionHistogram {
    pub fn empty(actions: usize) -> Self {
        Self {
            counts: vec![0; actions],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    #[inline]
    pub fn record(&mut self, action: usize) {
        self.counts[action] += 1;
        self.total += 1;
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.total = 0;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Whether `total` agrees with the sum of `counts`. Always true for
    /// histograms built through this API; deserialized ones may disagree.
    pub fn is_consistent(&self) -> bool {
        self.counts.iter().sum::<u64>() == self.total
    }

    /// Relative frequencies `counts / total`; all zeros for an empty histogram.
    pub fn frequencies<S: Scalar>(&self) -> Vec<S> {
        if self.total == 0 {
            return vec![S::zero(); self.counts.len()];
        }
        let total = S::of_u64(self.total);
        self.counts.iter().map(|&c| S::of_u64(c) / total).collect()
    }

    pub fn to_strategy<S: Scalar>(&self) -> Option<MixedStrategy<S>> {
        if self.total == 0 {
            return None;
        }
        // Frequencies sum to one up to a few ulps; skip re-validation.
        Some(MixedStrategy {
            probs: self.frequencies(),
        })
    }

    /// The single action played, if every count falls on one action.
    pub fn pure_action(&self) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        self.counts.iter().position(|&c| c == self.total)
    }
}

/// One action index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointProfile(pub Vec<usize>);

impl JointProfile {
    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Serialized form of a game: action names per player and one payoff row
/// per joint profile, in lexicographic profile order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(deny_unknown_fields)]
pub struct GameDoc<S> {
    pub num_players: usize,
    pub actions: Vec<Vec<String>>,
    pub payoffs: Vec<Vec<S>>,
}

/// An n-player finite stage game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameDoc<S>", into = "GameDoc<S>", bound = "S: Scalar")]
pub struct StageGame<S> {
    action_counts: Vec<usize>,
    action_names: Vec<Vec<String>>,
    payoffs: Vec<S>,
    strides: Vec<usize>,
}

impl<S: Scalar> StageGame<S> {
    /// Builds a game from a flat payoff tensor (`payoffs[k * n + i]`).
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<S>) -> Result<Self, GameError> {
        let n = action_counts.len();
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if let Some(player) = action_counts.iter().position(|&c| c == 0) {
            return Err(GameError::NoActions { player });
        }
        let profiles: usize = action_counts.iter().product();
        if payoffs.len() != profiles * n {
            return Err(GameError::PayoffCount {
                expected: profiles * n,
                actual: payoffs.len(),
            });
        }
        if let Some(index) = payoffs.iter().position(|u| !u.is_finite()) {
            return Err(GameError::NonFinitePayoff { index });
        }
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * action_counts[i + 1];
        }
        let action_names = action_counts
            .iter()
            .map(|&c| (0..c).map(|a| format!("a{a}")).collect())
            .collect();
        Ok(Self {
            action_counts,
            action_names,
            payoffs,
            strides,
        })
    }

    /// Builds a game from one payoff row per profile (lexicographic order).
    pub fn from_rows(action_counts: Vec<usize>, rows: Vec<Vec<S>>) -> Result<Self, GameError> {
        let n = action_counts.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(GameError::DimensionMismatch {
                what: "payoff row",
                expected: n,
                actual: bad.len(),
            });
        }
        Self::new(action_counts, rows.into_iter().flatten().collect())
    }

    /// Builds a game by evaluating `f(profile)` for every joint profile.
    pub fn from_fn(
        action_counts: Vec<usize>,
        mut f: impl FnMut(&[usize]) -> Vec<S>,
    ) -> Result<Self, GameError> {
        let profiles: usize = action_counts.iter().product();
        let mut rows = Vec::with_capacity(profiles);
        let mut profile = vec![0; action_counts.len()];
        for _ in 0..profiles {
            rows.push(f(&profile));
            advance(&mut profile, &action_counts);
        }
        Self::from_rows(action_counts, rows)
    }

    /// Two-player game from row and column payoff matrices.
    pub fn bimatrix(row: &[Vec<S>], col: &[Vec<S>]) -> Result<Self, GameError> {
        let m = row.len();
        let k = row.first().map_or(0, Vec::len);
        if col.len() != m || row.iter().chain(col).any(|r| r.len() != k) {
            return Err(GameError::DimensionMismatch {
                what: "bimatrix shape",
                expected: m * k,
                actual: col.iter().map(Vec::len).sum(),
            });
        }
        Self::from_fn(vec![m, k], |p| vec![row[p[0]][p[1]], col[p[0]][p[1]]])
    }

    pub fn with_action_names(mut self, names: Vec<Vec<String>>) -> Result<Self, GameError> {
        if names.len() != self.num_players() {
            return Err(GameError::DimensionMismatch {
                what: "action name lists",
                expected: self.num_players(),
                actual: names.len(),
            });
        }
        for (player, (list, &count)) in names.iter().zip(&self.action_counts).enumerate() {
            if list.len() != count {
                return Err(GameError::ActionNames {
                    player,
                    expected: count,
                    actual: list.len(),
                });
            }
        }
        self.action_names = names;
        Ok(self)
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn action_count(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    /// Largest action set over all players.
    pub fn max_actions(&self) -> usize {
        self.action_counts.iter().copied().max().unwrap_or(0)
    }

    /// Number of actions summed over all players.
    pub fn total_actions(&self) -> usize {
        self.action_counts.iter().sum()
    }

    pub fn num_profiles(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn action_names(&self) -> &[Vec<String>] {
        &self.action_names
    }

    pub fn action_name(&self, player: usize, action: usize) -> &str {
        &self.action_names[player][action]
    }

    pub fn check_player(&self, player: usize) -> Result<(), GameError> {
        if player < self.num_players() {
            Ok(())
        } else {
            Err(GameError::PlayerOutOfRange {
                player,
                players: self.num_players(),
            })
        }
    }

    pub fn check_profile(&self, profile: &[usize]) -> Result<(), GameError> {
        if profile.len() != self.num_players() {
            return Err(GameError::DimensionMismatch {
                what: "joint profile",
                expected: self.num_players(),
                actual: profile.len(),
            });
        }
        for (player, (&action, &count)) in profile.iter().zip(&self.action_counts).enumerate() {
            if action >= count {
                return Err(GameError::ActionOutOfRange {
                    player,
                    action,
                    count,
                });
            }
        }
        Ok(())
    }

    pub fn profile_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn profile_at(&self, mut index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let a = index / s;
                index %= s;
                a
            })
            .collect()
    }

    #[inline]
    pub fn payoff(&self, profile: &[usize], player: usize) -> S {
        self.payoffs[self.profile_index(profile) * self.num_players() + player]
    }

    /// Payoff of `player` at the profile with lexicographic index `index`.
    #[inline]
    pub fn payoff_at(&self, index: usize, player: usize) -> S {
        self.payoffs[index * self.num_players() + player]
    }

    /// All joint profiles in lexicographic order.
    pub fn profiles(&self) -> impl Iterator<Item = JointProfile> + '_ {
        (0..self.num_profiles()).map(|k| JointProfile(self.profile_at(k)))
    }

    fn check_strategy(&self, player: usize, s: &MixedStrategy<S>) -> Result<(), GameError> {
        if s.len() != self.action_count(player) {
            return Err(GameError::DimensionMismatch {
                what: "strategy length",
                expected: self.action_count(player),
                actual: s.len(),
            });
        }
        Ok(())
    }

    fn check_full_profile(&self, profile: &[MixedStrategy<S>]) -> Result<(), GameError> {
        if profile.len() != self.num_players() {
            return Err(GameError::DimensionMismatch {
                what: "strategy profile",
                expected: self.num_players(),
                actual: profile.len(),
            });
        }
        for (player, s) in profile.iter().enumerate() {
            self.check_strategy(player, s)?;
        }
        Ok(())
    }

    /// Interleaves `own` into `others` at position `player`.
    fn assemble<'a>(
        &self,
        player: usize,
        own: Option<&'a MixedStrategy<S>>,
        others: &'a [MixedStrategy<S>],
    ) -> Result<Vec<Option<&'a MixedStrategy<S>>>, GameError> {
        self.check_player(player)?;
        if others.len() + 1 != self.num_players() {
            return Err(GameError::DimensionMismatch {
                what: "opponent strategies",
                expected: self.num_players() - 1,
                actual: others.len(),
            });
        }
        let mut out = Vec::with_capacity(self.num_players());
        let mut rest = others.iter();
        for p in 0..self.num_players() {
            if p == player {
                if let Some(s) = own {
                    self.check_strategy(p, s)?;
                }
                out.push(own);
            } else {
                let s = rest.next().expect("length checked");
                self.check_strategy(p, s)?;
                out.push(Some(s));
            }
        }
        Ok(out)
    }
}

/// Odometer step over a lexicographic profile; last player varies fastest.
#[inline]
fn advance(profile: &mut [usize], counts: &[usize]) {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < counts[i] {
            return;
        }
        profile[i] = 0;
    }
}

/// Sum over all joint profiles of the product of every player's probability
/// times `player`'s payoff. `strategies[p] == None` is not allowed here.
fn enumerate_utility<S: Scalar>(
    game: &StageGame<S>,
    player: usize,
    strategies: &[Option<&MixedStrategy<S>>],
) -> S {
    let counts = game.action_counts();
    let mut profile = vec![0; counts.len()];
    let mut total = S::zero();
    for k in 0..game.num_profiles() {
        let mut weight = S::one();
        for (p, &a) in profile.iter().enumerate() {
            weight = weight * strategies[p].expect("complete profile").prob(a);
        }
        total = total + weight * game.payoff_at(k, player);
        advance(&mut profile, counts);
    }
    total
}

/// Expected utility of `player` playing `own` while the others play the
/// independent strategies `others` (listed in player order, skipping
/// `player`).
pub fn expected_utility<S: Scalar>(
    game: &StageGame<S>,
    player: usize,
    own: &MixedStrategy<S>,
    others: &[MixedStrategy<S>],
) -> Result<S, GameError> {
    let strategies = game.assemble(player, Some(own), others)?;
    Ok(enumerate_utility(game, player, &strategies))
}

/// Expected utility of `player` under a full strategy profile.
pub fn profile_utility<S: Scalar>(
    game: &StageGame<S>,
    player: usize,
    profile: &[MixedStrategy<S>],
) -> Result<S, GameError> {
    game.check_player(player)?;
    game.check_full_profile(profile)?;
    let strategies: Vec<_> = profile.iter().map(Some).collect();
    Ok(enumerate_utility(game, player, &strategies))
}

/// Expected utility of each pure action of `player` against `others`.
pub fn action_values<S: Scalar>(
    game: &StageGame<S>,
    player: usize,
    others: &[MixedStrategy<S>],
) -> Result<Vec<S>, GameError> {
    let strategies = game.assemble(player, None, others)?;
    let counts = game.action_counts();
    let mut values = vec![S::zero(); counts[player]];
    let mut profile = vec![0; counts.len()];
    for k in 0..game.num_profiles() {
        let mut weight = S::one();
        for (p, &a) in profile.iter().enumerate() {
            if p != player {
                weight = weight * strategies[p].expect("opponent present").prob(a);
            }
        }
        let own = profile[player];
        values[own] = values[own] + weight * game.payoff_at(k, player);
        advance(&mut profile, counts);
    }
    Ok(values)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest<S: Scalar>(values: &[S]) -> (usize, S) {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    (best, values[best])
}

/// Pure best response of `player` against `others` and its value.
pub fn best_response<S: Scalar>(
    game: &StageGame<S>,
    player: usize,
    others: &[MixedStrategy<S>],
) -> Result<(usize, S), GameError> {
    Ok(argmax_lowest(&action_values(game, player, others)?))
}

/// Max over actions of `|p(a) - q(a)|`.
pub fn linf_distance<S: Scalar>(p: &[S], q: &[S]) -> Result<S, GameError> {
    if p.len() != q.len() {
        return Err(GameError::DimensionMismatch {
            what: "distance operands",
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(p.iter()
        .zip(q)
        .map(|(&a, &b)| (a - b).abs())
        .fold(S::zero(), S::max))
}

/// Difference between `player`'s best and worst payoff anywhere in the game.
pub fn payoff_range<S: Scalar>(game: &StageGame<S>, player: usize) -> Result<S, GameError> {
    game.check_player(player)?;
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for k in 0..game.num_profiles() {
        let u = game.payoff_at(k, player);
        lo = lo.min(u);
        hi = hi.max(u);
    }
    Ok(hi - lo)
}

/// Gain `player` could get by deviating to a pure best response.
pub fn regret<S: Scalar>(
    game: &StageGame<S>,
    profile: &[MixedStrategy<S>],
    player: usize,
) -> Result<S, GameError> {
    game.check_player(player)?;
    game.check_full_profile(profile)?;
    let others: Vec<_> = profile
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != player)
        .map(|(_, s)| s.clone())
        .collect();
    let (_, best) = best_response(game, player, &others)?;
    let current = profile_utility(game, player, profile)?;
    Ok(best - current)
}

impl<S: Scalar> TryFrom<GameDoc<S>> for StageGame<S> {
    type Error = GameError;

    fn try_from(doc: GameDoc<S>) -> Result<Self, Self::Error> {
        if doc.actions.len() != doc.num_players {
            return Err(GameError::DimensionMismatch {
                what: "action name lists",
                expected: doc.num_players,
                actual: doc.actions.len(),
            });
        }
        let counts = doc.actions.iter().map(Vec::len).collect();
        StageGame::from_rows(counts, doc.payoffs)?.with_action_names(doc.actions)
    }
}

impl<S: Scalar> From<StageGame<S>> for GameDoc<S> {
    fn from(game: StageGame<S>) -> Self {
        let n = game.num_players();
        GameDoc {
            num_players: n,
            payoffs: game.payoffs.chunks(n).map(<[S]>::to_vec).collect(),
            actions: game.action_names,
        }
    }
}
