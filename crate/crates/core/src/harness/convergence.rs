//! Finite-window convergence labels for a trace.
//!
//! A trace counts as converged when no AWESOME agent restarted and no
//! agent's strategy changed during its last `K` complete epochs. The label
//! then says what it converged to.

use serde::{Deserialize, Serialize};

use super::config::AgentSpec;
use super::trace::{EpochRecord, RunTrace};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergedKind {
    /// Equilibrium hypothesis still held at the end; everyone plays the
    /// precomputed equilibrium.
    EquilibriumHypothesisHeld,
    /// Every player's histogram was the same pure action throughout.
    PureProfileLock,
    /// The only AWESOME agent kept one pure action against opponents that
    /// were stationary over the whole window.
    BestResponseLock,
    None,
}

impl std::fmt::Display for ConvergedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConvergedKind::EquilibriumHypothesisHeld => "equilibrium-hypothesis-held",
            ConvergedKind::PureProfileLock => "pure-profile-lock",
            ConvergedKind::BestResponseLock => "best-response-lock",
            ConvergedKind::None => "none",
        })
    }
}

impl std::str::FromStr for ConvergedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "equilibrium-hypothesis-held" => ConvergedKind::EquilibriumHypothesisHeld,
            "pure-profile-lock" => ConvergedKind::PureProfileLock,
            "best-response-lock" => ConvergedKind::BestResponseLock,
            "none" => ConvergedKind::None,
            other => return Err(format!("unknown convergence kind {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trial: u64,
    pub converged: bool,
    pub kind: ConvergedKind,
    /// Final strategy of every AWESOME agent, as (player, probabilities).
    pub final_phi: Vec<(usize, Vec<f64>)>,
    /// Largest restart count over the AWESOME agents.
    pub restarts: u64,
    pub rounds_used: u64,
    pub epochs: u64,
    /// Complete epochs before the final stable stretch began.
    pub epochs_to_convergence: Option<u64>,
    /// Locked joint action for `PureProfileLock`.
    pub locked_profile: Option<Vec<usize>>,
    pub truncated: bool,
}

/// Whether the record shows no restart and no strategy change for any agent.
fn quiet(record: &EpochRecord) -> bool {
    record
        .agents
        .iter()
        .all(|a| !a.restarted && a.entry.phi == a.exit.phi)
}

fn same_phis(a: &EpochRecord, b: &EpochRecord) -> bool {
    a.agents.len() == b.agents.len()
        && a.agents
            .iter()
            .zip(&b.agents)
            .all(|(x, y)| x.player == y.player && x.exit.phi == y.exit.phi)
}

pub fn detect_convergence(trace: &RunTrace, window: usize) -> Result<RunSummary, HarnessError> {
    let records = &trace.records;
    if window == 0 || records.len() < window {
        return Err(HarnessError::InsufficientData {
            epochs: records.len(),
            window,
        });
    }
    let last = records.last().expect("window >= 1");
    let tail = &records[records.len() - window..];

    let converged = tail.iter().all(quiet) && tail.windows(2).all(|w| same_phis(&w[0], &w[1]));

    let roster = &trace.header.config.roster;
    let mut locked_profile = None;
    let kind = if !converged {
        ConvergedKind::None
    } else if !last.agents.is_empty() && last.agents.iter().all(|a| a.exit.appe) {
        ConvergedKind::EquilibriumHypothesisHeld
    } else if let Some(profile) = pure_constant_profile(tail) {
        locked_profile = Some(profile);
        ConvergedKind::PureProfileLock
    } else {
        let awesome: Vec<usize> = (0..roster.len())
            .filter(|&p| roster[p].is_awesome())
            .collect();
        let start = tail[0].round_start;
        let opponents_stationary = roster.iter().all(|spec| match spec {
            AgentSpec::Awesome => true,
            AgentSpec::Opponent(policy) => policy.stationary_from(start),
        });
        let single_pure = awesome.len() == 1
            && last.agents.len() == 1
            && last.agents[0].exit.phi.pure_action().is_some();
        if single_pure && opponents_stationary {
            ConvergedKind::BestResponseLock
        } else {
            ConvergedKind::None
        }
    };

    let epochs_to_convergence = converged.then(|| {
        let mut start = records.len() - 1;
        while start > 0
            && quiet(&records[start - 1])
            && same_phis(&records[start - 1], &records[start])
        {
            start -= 1;
        }
        start as u64
    });

    Ok(RunSummary {
        trial: trace.header.trial,
        converged,
        kind,
        final_phi: last
            .agents
            .iter()
            .map(|a| (a.player, a.exit.phi.probs().to_vec()))
            .collect(),
        restarts: records
            .iter()
            .flat_map(|r| r.agents.iter().map(|a| a.restarts))
            .max()
            .unwrap_or(0),
        rounds_used: trace.end.rounds_used,
        epochs: records.len() as u64,
        epochs_to_convergence,
        locked_profile,
        truncated: trace.end.truncated_rounds.is_some(),
    })
}

/// The joint action every histogram in `tail` is concentrated on, if any.
fn pure_constant_profile(tail: &[EpochRecord]) -> Option<Vec<usize>> {
    let first: Vec<usize> = tail[0]
        .histograms
        .iter()
        .map(|h| h.pure_action())
        .collect::<Option<_>>()?;
    tail.iter()
        .all(|r| {
            r.histograms
                .iter()
                .zip(&first)
                .all(|(h, &a)| h.pure_action() == Some(a))
        })
        .then_some(first)
}
