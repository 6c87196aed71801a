//! Replay validation: re-derives every recorded decision from the recorded
//! histograms and compares.
//!
//! Floating-point values are compared exactly. They are recomputed with the
//! same operations the agent used and JSON round-trips `f64` losslessly, so
//! any difference means the record was not produced by this code path.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentEpoch, FlagState, FlagTuple, HypothesisCheck};
use crate::game::{action_values, argmax_lowest, linf_distance, payoff_range, ActionHistogram};
use crate::{EpochSchedule, Equilibrium, Game, Scalar, Strategy};

use super::config::AgentSpec;
use super::run::seat_seed;
use super::trace::{EpochRecord, RunTrace, StopReason};
use super::TraceError;

/// The rule a divergence breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Stored line digest does not match the chain.
    Digest,
    /// Header seeds differ from the seed derivation.
    Seeds,
    /// Header equilibrium differs from the one the config resolves to.
    HeaderEquilibrium,
    /// Record index, trial or round range out of sequence.
    Continuity,
    /// Histogram counts disagree with their total or with `N^t`.
    HistogramTotal,
    /// Reports missing for some AWESOME agent, or present for a non-agent.
    AgentSet,
    /// Entry flags or strategy differ from the previous epoch's outcome.
    EntryState,
    /// Recorded `t`, `N^t` or thresholds differ from the schedule.
    Threshold,
    /// Equilibrium-hypothesis distances or verdict differ.
    EquilibriumTest,
    /// Stationarity distances or verdict differ, or the test ran (or was
    /// skipped) when the flags say otherwise.
    StationarityTest,
    /// The one-epoch grace flag was not set or cleared as required.
    GraceFlag,
    /// A strategy switch without the strict margin, a missed switch, or a
    /// wrong best-response value.
    BestResponseMargin,
    /// Random picks inconsistent with the number of rejections.
    RandomAction,
    /// Restart marker or counter inconsistent with the stationarity flag.
    Restart,
    /// End line disagrees with the records or the budgets.
    End,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Digest => "digest chain",
            Rule::Seeds => "seed derivation",
            Rule::HeaderEquilibrium => "header equilibrium",
            Rule::Continuity => "record continuity",
            Rule::HistogramTotal => "histogram total",
            Rule::AgentSet => "agent set",
            Rule::EntryState => "entry state",
            Rule::Threshold => "schedule threshold",
            Rule::EquilibriumTest => "equilibrium test",
            Rule::StationarityTest => "stationarity test",
            Rule::GraceFlag => "grace flag",
            Rule::BestResponseMargin => "best-response strict margin",
            Rule::RandomAction => "random action",
            Rule::Restart => "restart",
            Rule::End => "end marker",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Trace line: 0 is the header, `i + 1` is record `i`.
    pub line: usize,
    /// Record index, when the divergence is inside a record.
    pub epoch: Option<u64>,
    pub player: Option<usize>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(e) = self.epoch {
            write!(f, " epoch {e}")?;
        }
        if let Some(p) = self.player {
            write!(f, " player {p}")?;
        }
        write!(f, ": {} rule: {}", self.rule, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub epochs_checked: usize,
    pub divergences: Vec<Divergence>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.divergences.is_empty()
    }

    pub fn first(&self) -> Option<&Divergence> {
        self.divergences.first()
    }
}

/// What the replay expects an agent to hold at the start of the next epoch.
#[derive(Debug, Clone)]
struct Expected {
    player: usize,
    t: usize,
    appe: bool,
    aps: bool,
    delta: bool,
    phi: Strategy,
    h_prev: Vec<ActionHistogram>,
    restarts: u64,
    mu: f64,
}

impl Expected {
    fn fresh(game: &Game, eq: &Equilibrium, player: usize, restarts: u64, mu: f64) -> Self {
        Self {
            player,
            t: 0,
            appe: true,
            aps: true,
            delta: false,
            phi: eq.strategy(player).clone(),
            h_prev: empty_histograms(game),
            restarts,
            mu,
        }
    }

    fn entry(&self) -> FlagState<f64> {
        FlagState {
            appe: self.appe,
            aps: self.aps,
            delta: self.delta,
            phi: self.phi.clone(),
        }
    }
}

fn empty_histograms(game: &Game) -> Vec<ActionHistogram> {
    game.action_counts()
        .iter()
        .map(|&c| ActionHistogram::empty(c))
        .collect()
}

struct Ctx<'a> {
    game: &'a Game,
    schedule: &'a EpochSchedule,
    eq: Option<&'a Equilibrium>,
    out: Vec<Divergence>,
}

impl Ctx<'_> {
    fn push(
        &mut self,
        line: usize,
        epoch: Option<u64>,
        player: Option<usize>,
        rule: Rule,
        detail: String,
    ) {
        self.out.push(Divergence {
            line,
            epoch,
            player,
            rule,
            detail,
        });
    }

    fn structural_shapes(&self, line: usize, record: &EpochRecord) -> Result<(), TraceError> {
        let counts = self.game.action_counts();
        let bad = |message: String| TraceError::Structural { line, message };
        if record.histograms.len() != counts.len() {
            return Err(bad(format!(
                "record {} has {} histograms, game has {} players",
                record.index,
                record.histograms.len(),
                counts.len()
            )));
        }
        for (p, (h, &c)) in record.histograms.iter().zip(counts).enumerate() {
            if h.len() != c {
                return Err(bad(format!(
                    "record {} histogram {p} has {} counts, player has {c} actions",
                    record.index,
                    h.len()
                )));
            }
        }
        for a in &record.agents {
            if a.player >= counts.len() {
                return Err(bad(format!(
                    "record {} reports player {}",
                    record.index, a.player
                )));
            }
            let own = counts[a.player];
            if a.entry.phi.len() != own || a.exit.phi.len() != own {
                return Err(bad(format!(
                    "record {} player {} strategy length differs from {own}",
                    record.index, a.player
                )));
            }
        }
        Ok(())
    }

    fn check_test(
        &mut self,
        line: usize,
        epoch: u64,
        player: usize,
        rule: Rule,
        recorded: &HypothesisCheck<f64>,
        distances: Vec<f64>,
        threshold: f64,
    ) -> bool {
        let rejected = distances.iter().any(|&d| d > threshold);
        if recorded.threshold != threshold {
            self.push(
                line,
                Some(epoch),
                Some(player),
                rule,
                format!(
                    "threshold {} recorded, {} expected",
                    recorded.threshold, threshold
                ),
            );
        }
        if recorded.distances != distances {
            self.push(
                line,
                Some(epoch),
                Some(player),
                rule,
                format!(
                    "distances {:?} recorded, {:?} recomputed",
                    recorded.distances, distances
                ),
            );
        }
        if recorded.rejected != rejected {
            self.push(
                line,
                Some(epoch),
                Some(player),
                rule,
                format!(
                    "verdict rejected={} recorded, rejected={} recomputed",
                    recorded.rejected, rejected
                ),
            );
        }
        rejected
    }

    /// Replays one agent's epoch end. Returns the state to expect next.
    fn agent_epoch(
        &mut self,
        line: usize,
        record: &EpochRecord,
        a: &AgentEpoch<f64>,
        mut exp: Expected,
    ) -> Expected {
        let epoch = record.index;
        let p = Some(a.player);
        let game = self.game;
        let schedule = self.schedule;
        let histograms = &record.histograms;

        if a.t != exp.t {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::Threshold,
                format!("t={} recorded, {} expected", a.t, exp.t),
            );
        }
        let t = exp.t;
        let expected_rounds = schedule.rounds(t);
        if a.rounds != expected_rounds {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::Threshold,
                format!("N={} recorded, {} expected", a.rounds, expected_rounds),
            );
        }
        if u128::from(record.round_end - record.round_start) != expected_rounds {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::HistogramTotal,
                format!(
                    "epoch spans {} rounds, N={expected_rounds}",
                    record.round_end - record.round_start
                ),
            );
        }
        for (q, h) in histograms.iter().enumerate() {
            if u128::from(h.total()) != expected_rounds {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::HistogramTotal,
                    format!("histogram {q} totals {}, N={expected_rounds}", h.total()),
                );
            }
        }
        for (name, recorded, expected) in [
            ("eps_e", a.eps_e, schedule.eps_e(t)),
            ("eps_s", a.eps_s, schedule.eps_s(t)),
            ("eps_s_next", a.eps_s_next, schedule.eps_s(t + 1)),
        ] {
            if recorded != expected {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::Threshold,
                    format!("{name}={recorded} recorded, {expected} expected"),
                );
            }
        }
        if a.entry != exp.entry() {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::EntryState,
                format!("entry {:?} recorded, {:?} expected", a.entry, exp.entry()),
            );
        }

        let freqs: Vec<Vec<f64>> = histograms.iter().map(|h| h.frequencies()).collect();
        let mut appe = exp.appe;
        let mut aps = exp.aps;
        let mut delta = exp.delta;
        let mut phi = exp.phi.clone();

        if !appe {
            if !delta {
                match &a.stationarity {
                    Some(check) => {
                        let distances = freqs
                            .iter()
                            .zip(&exp.h_prev)
                            .map(|(c, h)| linf_distance(c, &h.frequencies()).unwrap_or(f64::NAN))
                            .collect();
                        if self.check_test(
                            line,
                            epoch,
                            a.player,
                            Rule::StationarityTest,
                            check,
                            distances,
                            schedule.eps_s(t),
                        ) {
                            aps = false;
                        }
                    }
                    None => self.push(
                        line,
                        Some(epoch),
                        p,
                        Rule::StationarityTest,
                        "test skipped outside the grace epoch".into(),
                    ),
                }
            } else if a.stationarity.is_some() {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::StationarityTest,
                    "test ran during the grace epoch".into(),
                );
            }
            delta = false;
            match &a.best_response {
                Some(br) => {
                    let others: Vec<Strategy> = histograms
                        .iter()
                        .enumerate()
                        .filter(|&(q, _)| q != a.player)
                        .filter_map(|(_, h)| h.to_strategy())
                        .collect();
                    let current = phi.pure_action();
                    match (action_values(game, a.player, &others), current) {
                        (Ok(values), Some(current)) => {
                            let (action, best_value) = argmax_lowest(&values);
                            let current_value = values[current];
                            let margin = f64::of_usize(game.num_players())
                                * f64::of_usize(game.max_actions())
                                * schedule.eps_s(t + 1)
                                * exp.mu;
                            let switched = best_value > current_value + margin;
                            if br.switched && !(br.best_value > br.current_value + br.margin) {
                                self.push(
                                    line,
                                    Some(epoch),
                                    p,
                                    Rule::BestResponseMargin,
                                    format!(
                                        "switch recorded without {} > {} + {}",
                                        br.best_value, br.current_value, br.margin
                                    ),
                                );
                            }
                            if (
                                br.action,
                                br.best_value,
                                br.current_value,
                                br.margin,
                                br.switched,
                            ) != (action, best_value, current_value, margin, switched)
                            {
                                self.push(line, Some(epoch), p, Rule::BestResponseMargin, format!(
                                    "recorded (action {}, V {}, V(phi) {}, margin {}, switched {}) vs \
                                     recomputed (action {action}, V {best_value}, V(phi) {current_value}, \
                                     margin {margin}, switched {switched})",
                                    br.action, br.best_value, br.current_value, br.margin, br.switched
                                ));
                            }
                            if switched {
                                phi = Strategy::pure(game.action_count(a.player), action);
                            }
                        }
                        _ => self.push(
                            line,
                            Some(epoch),
                            p,
                            Rule::BestResponseMargin,
                            "values not computable from the record".into(),
                        ),
                    }
                }
                None => self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::BestResponseMargin,
                    "best-response update missing while the equilibrium hypothesis is off".into(),
                ),
            }
        } else {
            if a.stationarity.is_some() {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::StationarityTest,
                    "test ran while the equilibrium hypothesis held".into(),
                );
            }
            if a.best_response.is_some() {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::BestResponseMargin,
                    "best-response update ran while the equilibrium hypothesis held".into(),
                );
            }
        }

        if appe {
            match (&a.equilibrium, self.eq) {
                (Some(check), Some(eq)) => {
                    let distances: Vec<f64> = freqs
                        .iter()
                        .zip(&eq.strategies)
                        .map(|(f, s)| linf_distance(f, s.probs()).unwrap_or(f64::NAN))
                        .collect();
                    let threshold = schedule.eps_e(t);
                    let offenders = distances.iter().filter(|&&d| d > threshold).count();
                    self.check_test(
                        line,
                        epoch,
                        a.player,
                        Rule::EquilibriumTest,
                        check,
                        distances,
                        threshold,
                    );
                    let own = game.action_count(a.player);
                    if a.random_actions.len() != offenders {
                        self.push(
                            line,
                            Some(epoch),
                            p,
                            Rule::RandomAction,
                            format!(
                                "{} random picks recorded for {offenders} rejections",
                                a.random_actions.len()
                            ),
                        );
                    }
                    if let Some(&bad) = a.random_actions.iter().find(|&&x| x >= own) {
                        self.push(
                            line,
                            Some(epoch),
                            p,
                            Rule::RandomAction,
                            format!("random action {bad} outside 0..{own}"),
                        );
                    }
                    if offenders > 0 {
                        appe = false;
                        delta = true;
                        if let Some(&last) = a.random_actions.last().filter(|&&x| x < own) {
                            phi = Strategy::pure(own, last);
                        }
                    }
                }
                (None, _) => self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::EquilibriumTest,
                    "test missing while the equilibrium hypothesis held".into(),
                ),
                (Some(_), None) => self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::EquilibriumTest,
                    "no equilibrium to test against".into(),
                ),
            }
        } else {
            if a.equilibrium.is_some() {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::EquilibriumTest,
                    "test ran after the hypothesis was dropped".into(),
                );
            }
            if !a.random_actions.is_empty() {
                self.push(
                    line,
                    Some(epoch),
                    p,
                    Rule::RandomAction,
                    "random picks without an equilibrium test".into(),
                );
            }
        }

        let exit = FlagState {
            appe,
            aps,
            delta,
            phi,
        };
        if a.exit.delta != exit.delta {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::GraceFlag,
                format!("delta={} recorded, {} expected", a.exit.delta, exit.delta),
            );
        }
        if (a.exit.appe, a.exit.aps, &a.exit.phi) != (exit.appe, exit.aps, &exit.phi) {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::EntryState,
                format!("exit {:?} recorded, {:?} expected", a.exit, exit),
            );
        }
        let restarted = !exit.aps;
        let restarts = exp.restarts + u64::from(restarted);
        if a.restarted != restarted || a.restarts != restarts {
            self.push(
                line,
                Some(epoch),
                p,
                Rule::Restart,
                format!(
                    "restarted={} restarts={} recorded, {restarted} {restarts} expected",
                    a.restarted, a.restarts
                ),
            );
        }

        if restarted {
            match self.eq {
                Some(eq) => Expected::fresh(game, eq, exp.player, restarts, exp.mu),
                None => exp,
            }
        } else {
            exp.t += 1;
            exp.appe = exit.appe;
            exp.aps = exit.aps;
            exp.delta = exit.delta;
            exp.phi = exit.phi;
            exp.h_prev = histograms.clone();
            exp.restarts = restarts;
            exp
        }
    }
}

/// Recomputes every digest, threshold comparison, flag transition and
/// strategy switch in `trace` against the given game, schedule and
/// precomputed equilibrium (needed when the roster has AWESOME agents).
pub fn validate_trace(
    game: &Game,
    schedule: &EpochSchedule,
    eq: Option<&Equilibrium>,
    trace: &RunTrace,
) -> Result<ValidationReport, TraceError> {
    let roster = &trace.header.config.roster;
    if roster.len() != game.num_players() {
        return Err(TraceError::Structural {
            line: 1,
            message: format!(
                "header roster has {} seats, game has {} players",
                roster.len(),
                game.num_players()
            ),
        });
    }
    let mut ctx = Ctx {
        game,
        schedule,
        eq,
        out: Vec::new(),
    };

    for line in trace.digest_mismatches() {
        ctx.push(
            line,
            line.checked_sub(1)
                .filter(|&i| i < trace.records.len())
                .map(|i| i as u64),
            None,
            Rule::Digest,
            "stored digest does not match the chain".into(),
        );
    }

    let awesome: Vec<usize> = (0..roster.len())
        .filter(|&p| roster[p].is_awesome())
        .collect();
    if !awesome.is_empty() && eq.is_none() {
        return Err(TraceError::Structural {
            line: 1,
            message: "roster has AWESOME agents but no equilibrium was supplied".into(),
        });
    }
    let mut expected: Vec<Expected> = Vec::new();
    if let Some(eq) = eq {
        for &p in &awesome {
            let mu = payoff_range(game, p).map_err(|e| TraceError::Structural {
                line: 1,
                message: e.to_string(),
            })?;
            expected.push(Expected::fresh(game, eq, p, 0, mu));
        }
    }

    let mut prev_end = 0u64;
    for (i, record) in trace.records.iter().enumerate() {
        let line = i + 1;
        let epoch = Some(record.index);
        ctx.structural_shapes(line, record)?;
        if record.index != i as u64 || record.trial != trace.header.trial {
            ctx.push(
                line,
                epoch,
                None,
                Rule::Continuity,
                format!(
                    "index {} trial {} at position {i} of trial {}",
                    record.index, record.trial, trace.header.trial
                ),
            );
        }
        if record.round_start != prev_end || record.round_end <= record.round_start {
            ctx.push(
                line,
                epoch,
                None,
                Rule::Continuity,
                format!(
                    "rounds {}..{} after an epoch ending at {prev_end}",
                    record.round_start, record.round_end
                ),
            );
        }
        prev_end = record.round_end;
        for (q, h) in record.histograms.iter().enumerate() {
            if !h.is_consistent() {
                ctx.push(
                    line,
                    epoch,
                    Some(q),
                    Rule::HistogramTotal,
                    format!("counts {:?} do not sum to total {}", h.counts(), h.total()),
                );
            }
        }

        let players: Vec<usize> = record.agents.iter().map(|a| a.player).collect();
        if awesome.is_empty() {
            let n_t = schedule.rounds(i);
            if !players.is_empty() {
                ctx.push(
                    line,
                    epoch,
                    None,
                    Rule::AgentSet,
                    format!("reports for {players:?} in a roster without AWESOME agents"),
                );
            }
            if u128::from(record.round_end - record.round_start) != n_t
                || record
                    .histograms
                    .iter()
                    .any(|h| u128::from(h.total()) != n_t)
            {
                ctx.push(
                    line,
                    epoch,
                    None,
                    Rule::HistogramTotal,
                    format!("epoch {i} should hold N={n_t} rounds"),
                );
            }
            continue;
        }
        if players != awesome {
            ctx.push(
                line,
                epoch,
                None,
                Rule::AgentSet,
                format!("reports for {players:?}, AWESOME seats are {awesome:?}"),
            );
        }
        for a in &record.agents {
            let Some(slot) = awesome.iter().position(|&p| p == a.player) else {
                continue;
            };
            let exp = expected[slot].clone();
            expected[slot] = ctx.agent_epoch(line, record, a, exp);
        }
    }

    let end_line = trace.records.len() + 1;
    let end = &trace.end;
    let config = &trace.header.config;
    let records = trace.records.len() as u64;
    let mut end_issue = |detail: String| ctx.push(end_line, None, None, Rule::End, detail);
    if end.epochs != records {
        end_issue(format!("{} epochs claimed, {records} recorded", end.epochs));
    }
    if end.rounds_used != prev_end + end.truncated_rounds.unwrap_or(0) {
        end_issue(format!(
            "{} rounds used, records end at {prev_end} with {:?} truncated",
            end.rounds_used, end.truncated_rounds
        ));
    }
    if end.truncated_rounds == Some(0) {
        end_issue("empty truncation marker".into());
    }
    if end.rounds_used > config.round_budget || records > config.epoch_budget {
        end_issue("budget exceeded".into());
    }
    let stop_ok = match end.stop {
        StopReason::EpochBudget => records == config.epoch_budget,
        StopReason::RoundBudget => {
            end.rounds_used == config.round_budget && records < config.epoch_budget
        }
    };
    if !stop_ok {
        end_issue(format!(
            "stop reason {:?} does not fit the budgets",
            end.stop
        ));
    }

    Ok(ValidationReport {
        epochs_checked: trace.records.len(),
        divergences: ctx.out,
    })
}

/// Validates a trace against the config embedded in its own header, and
/// checks the header's seeds and equilibrium against that config.
pub fn validate_self_described(trace: &RunTrace) -> Result<ValidationReport, TraceError> {
    let config = &trace.header.config;
    let has_awesome = config.roster.iter().any(AgentSpec::is_awesome);
    let resolved = if has_awesome {
        Some(
            config
                .resolve_equilibrium()
                .map_err(|e| TraceError::Structural {
                    line: 1,
                    message: format!("header config: {e}"),
                })?,
        )
    } else {
        None
    };
    let mut report = validate_trace(&config.game, &config.schedule, resolved.as_ref(), trace)?;
    let mut header_issues = Vec::new();
    let seeds: Vec<u64> = (0..config.roster.len())
        .map(|p| seat_seed(config, trace.header.trial, p))
        .collect();
    if seeds != trace.header.seeds {
        header_issues.push(Divergence {
            line: 0,
            epoch: None,
            player: None,
            rule: Rule::Seeds,
            detail: format!("seeds {:?} recorded, {seeds:?} derived", trace.header.seeds),
        });
    }
    if trace.header.equilibrium != resolved {
        header_issues.push(Divergence {
            line: 0,
            epoch: None,
            player: None,
            rule: Rule::HeaderEquilibrium,
            detail: "recorded equilibrium differs from the resolved one".into(),
        });
    }
    header_issues.append(&mut report.divergences);
    report.divergences = header_issues;
    report.divergences.sort_by_key(|d| d.line);
    Ok(report)
}

/// An epoch where AWESOME agents disagree on their flags or boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncViolation {
    pub epoch: u64,
    pub tuples: Vec<(usize, FlagTuple)>,
}

fn exit_tuple(a: &AgentEpoch<f64>) -> FlagTuple {
    FlagTuple {
        t: a.t,
        appe: a.exit.appe,
        aps: a.exit.aps,
        delta: a.exit.delta,
        restarts: a.restarts,
    }
}

/// Epochs in which the AWESOME agents' flag tuples `(t, appe, aps, delta,
/// restarts)` differ, or where some agent did not close an epoch with the
/// others.
pub fn check_synchronization(trace: &RunTrace) -> Vec<SyncViolation> {
    let seats = trace.header.config.awesome_players().len();
    trace
        .records
        .iter()
        .filter_map(|r| {
            let tuples: Vec<(usize, FlagTuple)> =
                r.agents.iter().map(|a| (a.player, exit_tuple(a))).collect();
            let agree = tuples.windows(2).all(|w| w[0].1 == w[1].1);
            (tuples.len() != seats || !agree).then(|| SyncViolation {
                epoch: r.index,
                tuples,
            })
        })
        .collect()
}
