use std::sync::Arc;

use crate::agent::EpochClose;
use crate::game::{ActionHistogram, JointProfile};
use crate::rng::{derive_seed, Purpose};
use crate::{Agent, Opponent};

use super::config::{AgentSpec, RunConfig};
use super::trace::{EpochRecord, RunTrace, StopReason, TraceEnd, TraceHeader, TRACE_SCHEMA};
use super::HarnessError;

enum Seat {
    Awesome(Agent),
    Opponent(Opponent<f64>),
}

/// Epoch boundaries for rosters without any AWESOME agent: the schedule's
/// lengths with a never-resetting epoch index.
struct Clock {
    t: usize,
    rounds_in: u128,
    histograms: Vec<ActionHistogram>,
}

pub fn seat_seed(config: &RunConfig, trial: u64, player: usize) -> u64 {
    let purpose = if config.roster[player].is_awesome() {
        Purpose::Agent
    } else {
        Purpose::Opponent
    };
    derive_seed(config.master_seed, trial, player as u64, purpose)
}

/// Plays one trial to its budget. Deterministic in `(config, trial)`.
pub fn run_trial(config: &RunConfig, trial: u64) -> Result<RunTrace, HarnessError> {
    let order: Vec<usize> = (0..config.game.num_players()).collect();
    run_trial_with_order(config, trial, &order)
}

/// As [`run_trial`], but asks seats for actions and delivers observations
/// in `order`. Any permutation yields the same trace.
pub fn run_trial_with_order(
    config: &RunConfig,
    trial: u64,
    order: &[usize],
) -> Result<RunTrace, HarnessError> {
    config.validate()?;
    let n = config.game.num_players();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(HarnessError::Config(format!(
            "evaluation order {order:?} is not a permutation of the players"
        )));
    }

    let game = Arc::new(config.game.clone());
    let schedule = Arc::new(config.schedule.clone());
    let has_awesome = config.roster.iter().any(AgentSpec::is_awesome);
    let equilibrium = if has_awesome {
        Some(config.resolve_equilibrium()?)
    } else {
        None
    };
    let shared_eq = equilibrium.clone().map(Arc::new);
    let seeds: Vec<u64> = (0..n).map(|p| seat_seed(config, trial, p)).collect();

    let mut seats = Vec::with_capacity(n);
    for (p, spec) in config.roster.iter().enumerate() {
        seats.push(match spec {
            AgentSpec::Awesome => Seat::Awesome(Agent::new(
                game.clone(),
                p,
                schedule.clone(),
                shared_eq.clone().expect("resolved above"),
                seeds[p],
            )?),
            AgentSpec::Opponent(policy) => {
                Seat::Opponent(Opponent::new(&game, p, policy.clone(), seeds[p])?)
            }
        });
    }

    let mut clock = (!has_awesome).then(|| Clock {
        t: 0,
        rounds_in: 0,
        histograms: game
            .action_counts()
            .iter()
            .map(|&c| ActionHistogram::empty(c))
            .collect(),
    });

    let mut records = Vec::new();
    let mut round = 0u64;
    let mut epoch_start = 0u64;
    let mut joint = JointProfile(vec![0; n]);
    let mut closes: Vec<EpochClose<f64>> = Vec::new();
    while round < config.round_budget && (records.len() as u64) < config.epoch_budget {
        // Every seat commits before anyone observes the round.
        for &p in order {
            joint.0[p] = match &mut seats[p] {
                Seat::Awesome(a) => a.act(),
                Seat::Opponent(o) => o.act(&game, round),
            };
        }
        for &p in order {
            match &mut seats[p] {
                Seat::Awesome(a) => {
                    if let Some(close) = a.observe(&joint)? {
                        closes.push(close);
                    }
                }
                Seat::Opponent(o) => o.observe(&joint),
            }
        }
        round += 1;

        let mut histograms = None;
        if let Some(c) = clock.as_mut() {
            for (h, &a) in c.histograms.iter_mut().zip(joint.actions()) {
                h.record(a);
            }
            c.rounds_in += 1;
            if c.rounds_in == schedule.rounds(c.t) {
                histograms = Some(c.histograms.clone());
                c.histograms.iter_mut().for_each(ActionHistogram::clear);
                c.rounds_in = 0;
                c.t += 1;
            }
        } else if !closes.is_empty() {
            closes.sort_by_key(|c| c.report.player);
            histograms = Some(closes[0].histograms.clone());
        }
        if let Some(histograms) = histograms {
            records.push(EpochRecord {
                index: records.len() as u64,
                trial,
                round_start: epoch_start,
                round_end: round,
                histograms,
                agents: closes.drain(..).map(|c| c.report).collect(),
                digest: String::new(),
            });
            epoch_start = round;
        }
    }

    let stop = if (records.len() as u64) >= config.epoch_budget {
        StopReason::EpochBudget
    } else {
        StopReason::RoundBudget
    };
    let mut trace = RunTrace {
        header: TraceHeader {
            schema: TRACE_SCHEMA.to_string(),
            trial,
            seeds,
            config: config.clone(),
            equilibrium,
            digest: String::new(),
        },
        end: TraceEnd {
            rounds_used: round,
            epochs: records.len() as u64,
            stop,
            truncated_rounds: (round > epoch_start).then_some(round - epoch_start),
            digest: String::new(),
        },
        records,
    };
    trace.seal();
    Ok(trace)
}
