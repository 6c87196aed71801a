use serde::{Deserialize, Serialize};

use crate::equilibrium::{compute_equilibrium, user_override, EquilibriumError};
use crate::opponents::PolicyError;
use crate::{EpochSchedule, Equilibrium, Game, Policy};

use super::HarnessError;

/// One seat at the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Awesome,
    #[serde(untagged)]
    Opponent(Policy),
}

impl AgentSpec {
    pub fn is_awesome(&self) -> bool {
        matches!(self, AgentSpec::Awesome)
    }
}

/// Fully resolved description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub game: Game,
    pub roster: Vec<AgentSpec>,
    pub schedule: EpochSchedule,
    /// Override equilibrium, one probability vector per player.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<Vec<f64>>>,
    pub round_budget: u64,
    pub epoch_budget: u64,
    pub master_seed: u64,
    pub trial_count: u64,
    /// Convergence window K, in epochs.
    #[serde(default = "default_window")]
    pub window: usize,
}

pub const DEFAULT_WINDOW: usize = 3;

fn default_window() -> usize {
    DEFAULT_WINDOW
}

impl RunConfig {
    /// A single-trial config with generous budgets and the default window.
    pub fn new(game: Game, roster: Vec<AgentSpec>, schedule: EpochSchedule) -> Self {
        Self {
            game,
            roster,
            schedule,
            equilibrium: None,
            round_budget: u64::MAX,
            epoch_budget: 100,
            master_seed: 0,
            trial_count: 1,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.game.num_players();
        if self.roster.len() != n {
            return Err(HarnessError::Config(format!(
                "roster has {} entries, game has {n} players",
                self.roster.len()
            )));
        }
        for (field, v) in [
            ("round_budget", self.round_budget),
            ("epoch_budget", self.epoch_budget),
            ("trial_count", self.trial_count),
        ] {
            if v == 0 {
                return Err(HarnessError::Config(format!("{field} must be at least 1")));
            }
        }
        self.schedule
            .check()
            .map_err(|e| HarnessError::Config(format!("schedule: {e}")))?;
        if self.window == 0 {
            return Err(HarnessError::Config("window must be at least 1".into()));
        }
        for (p, spec) in self.roster.iter().enumerate() {
            if let AgentSpec::Opponent(policy) = spec {
                policy
                    .validate(&self.game, p)
                    .map_err(|e: PolicyError| HarnessError::Config(format!("roster[{p}]: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn awesome_players(&self) -> Vec<usize> {
        (0..self.roster.len())
            .filter(|&p| self.roster[p].is_awesome())
            .collect()
    }

    /// The equilibrium AWESOME agents precompute for this game.
    pub fn resolve_equilibrium(&self) -> Result<Equilibrium, EquilibriumError> {
        let ov = self
            .equilibrium
            .clone()
            .map(|s| user_override(&self.game, s))
            .transpose()?;
        compute_equilibrium(&self.game, ov)
    }
}
