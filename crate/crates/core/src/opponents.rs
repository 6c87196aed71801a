//! Non-learning (or simply-learning) opponents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{best_response, GameError, JointProfile, MixedStrategy, StageGame};
use crate::rng::{sample_index, stream, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("scripted policy needs at least one action")]
    EmptyScript,
    #[error("fictitious-play prior: {0}")]
    Prior(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar")]
pub enum OpponentPolicy<S> {
    /// Samples the same mixed strategy every round.
    Stationary { strategy: MixedStrategy<S> },
    /// Follows `pre` for rounds `< switch_round`, then samples `strategy`.
    EventuallyStationary {
        pre: Box<OpponentPolicy<S>>,
        switch_round: u64,
        strategy: MixedStrategy<S>,
    },
    /// Plays `actions[round]`, repeating the last entry once exhausted.
    Scripted { actions: Vec<usize> },
    /// Pure best response (lowest-index ties) to the others' empirical
    /// frequencies, seeded with `initial_counts` per player.
    FictitiousPlay { initial_counts: Vec<Vec<u64>> },
}

impl<S: Scalar> OpponentPolicy<S> {
    /// Checks the policy against `player`'s slot in `game`.
    pub fn validate(&self, game: &StageGame<S>, player: usize) -> Result<(), PolicyError> {
        game.check_player(player)?;
        let count = game.action_count(player);
        let check_len = |s: &MixedStrategy<S>| {
            if s.len() == count {
                Ok(())
            } else {
                Err(GameError::DimensionMismatch {
                    what: "opponent strategy",
                    expected: count,
                    actual: s.len(),
                })
            }
        };
        match self {
            OpponentPolicy::Stationary { strategy } => check_len(strategy)?,
            OpponentPolicy::EventuallyStationary { pre, strategy, .. } => {
                check_len(strategy)?;
                pre.validate(game, player)?;
            }
            OpponentPolicy::Scripted { actions } => {
                if actions.is_empty() {
                    return Err(PolicyError::EmptyScript);
                }
                if let Some(&action) = actions.iter().find(|&&a| a >= count) {
                    return Err(GameError::ActionOutOfRange {
                        player,
                        action,
                        count,
                    }
                    .into());
                }
            }
            OpponentPolicy::FictitiousPlay { initial_counts } => {
                if initial_counts.len() != game.num_players() {
                    return Err(PolicyError::Prior(format!(
                        "expected {} count vectors, got {}",
                        game.num_players(),
                        initial_counts.len()
                    )));
                }
                for (p, c) in initial_counts.iter().enumerate() {
                    if c.len() != game.action_count(p) {
                        return Err(PolicyError::Prior(format!(
                            "player {p}: expected {} counts, got {}",
                            game.action_count(p),
                            c.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the policy plays one fixed strategy from round `round` on.
    pub fn stationary_from(&self, round: u64) -> bool {
        match self {
            OpponentPolicy::Stationary { .. } => true,
            OpponentPolicy::EventuallyStationary { switch_round, .. } => round >= *switch_round,
            OpponentPolicy::Scripted { actions } => round + 1 >= actions.len() as u64,
            OpponentPolicy::FictitiousPlay { .. } => false,
        }
    }

    /// The strategy the policy settles on, when it settles.
    pub fn limit_strategy(&self, count: usize) -> Option<MixedStrategy<S>> {
        match self {
            OpponentPolicy::Stationary { strategy }
            | OpponentPolicy::EventuallyStationary { strategy, .. } => Some(strategy.clone()),
            OpponentPolicy::Scripted { actions } => {
                actions.last().map(|&a| MixedStrategy::pure(count, a))
            }
            OpponentPolicy::FictitiousPlay { .. } => None,
        }
    }
}

/// A policy bound to a seat in a game, with its own random stream and the
/// observation counts fictitious play needs.
#[derive(Debug, Clone)]
pub struct Opponent<S: Scalar> {
    policy: OpponentPolicy<S>,
    player: usize,
    counts: Vec<Vec<u64>>,
    rng: Stream,
}

impl<S: Scalar> Opponent<S> {
    pub fn new(
        game: &StageGame<S>,
        player: usize,
        policy: OpponentPolicy<S>,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        policy.validate(game, player)?;
        let counts = fictitious_prior(&policy)
            .cloned()
            .unwrap_or_else(|| game.action_counts().iter().map(|&c| vec![0; c]).collect());
        Ok(Self {
            policy,
            player,
            counts,
            rng: stream(seed),
        })
    }

    pub fn policy(&self) -> &OpponentPolicy<S> {
        &self.policy
    }

    pub fn player(&self) -> usize {
        self.player
    }

    /// Empirical counts of every player's observed actions, prior included.
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Action for round `round` (the number of rounds observed so far).
    pub fn act(&mut self, game: &StageGame<S>, round: u64) -> usize {
        let policy = &self.policy;
        act_with(
            policy,
            game,
            self.player,
            round,
            &self.counts,
            &mut self.rng,
        )
    }

    pub fn observe(&mut self, joint: &JointProfile) {
        for (c, &a) in self.counts.iter_mut().zip(joint.actions()) {
            c[a] += 1;
        }
    }
}

fn fictitious_prior<S>(policy: &OpponentPolicy<S>) -> Option<&Vec<Vec<u64>>> {
    match policy {
        OpponentPolicy::FictitiousPlay { initial_counts } => Some(initial_counts),
        OpponentPolicy::EventuallyStationary { pre, .. } => fictitious_prior(pre),
        _ => None,
    }
}

fn act_with<S: Scalar>(
    policy: &OpponentPolicy<S>,
    game: &StageGame<S>,
    player: usize,
    round: u64,
    counts: &[Vec<u64>],
    rng: &mut Stream,
) -> usize {
    match policy {
        OpponentPolicy::Stationary { strategy } => sample(strategy, rng),
        OpponentPolicy::EventuallyStationary {
            pre,
            switch_round,
            strategy,
        } => {
            if round < *switch_round {
                act_with(pre, game, player, round, counts, rng)
            } else {
                sample(strategy, rng)
            }
        }
        OpponentPolicy::Scripted { actions } => {
            let i = usize::try_from(round)
                .unwrap_or(usize::MAX)
                .min(actions.len() - 1);
            actions[i]
        }
        OpponentPolicy::FictitiousPlay { .. } => {
            fictitious_response(game, player, counts).expect("validated policy")
        }
    }
}

fn sample<S: Scalar>(strategy: &MixedStrategy<S>, rng: &mut Stream) -> usize {
    match strategy.pure_action() {
        Some(a) => a,
        None => sample_index(rng, strategy.probs()),
    }
}

/// Best response to the empirical frequencies in `counts`; players with no
/// recorded actions are treated as uniform.
pub fn fictitious_response<S: Scalar>(
    game: &StageGame<S>,
    player: usize,
    counts: &[Vec<u64>],
) -> Result<usize, GameError> {
    let others: Vec<MixedStrategy<S>> = counts
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != player)
        .map(|(p, c)| {
            let total: u64 = c.iter().sum();
            if total == 0 {
                MixedStrategy::uniform(game.action_count(p))
            } else {
                let t = S::of_u64(total);
                MixedStrategy::new(c.iter().map(|&x| S::of_u64(x) / t).collect())
                    .unwrap_or_else(|_| MixedStrategy::uniform(game.action_count(p)))
            }
        })
        .collect();
    Ok(best_response(game, player, &others)?.0)
}
