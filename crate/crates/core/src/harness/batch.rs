//! Many trials of one config, their aggregate statistics and the summary
//! CSV.
//!
//! The summary file starts with `#` comment lines holding the schema name
//! and the full resolved config as JSON, followed by a header row and one
//! row per trial.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::convergence::{detect_convergence, ConvergedKind, RunSummary};
use super::run::run_trial;
use super::trace::RunTrace;
use super::HarnessError;

pub const SUMMARY_SCHEMA: &str = "awesome-summary/1";

/// One trial's result. A failed trial keeps its error instead of a summary.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub trace: Option<RunTrace>,
    pub summary: Result<RunSummary, String>,
}

/// Aggregates that merge commutatively, so any trial order gives the same
/// result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub trials: u64,
    pub errors: u64,
    pub converged: u64,
    /// Trials by restart count.
    pub restart_histogram: BTreeMap<u64, u64>,
    pub kinds: BTreeMap<ConvergedKind, u64>,
    /// Sum of epochs-to-convergence over converged trials.
    pub epochs_to_convergence_sum: u64,
}

impl BatchStats {
    pub fn record(&mut self, summary: &Result<RunSummary, String>) {
        self.trials += 1;
        match summary {
            Ok(s) => {
                *self.restart_histogram.entry(s.restarts).or_default() += 1;
                *self.kinds.entry(s.kind).or_default() += 1;
                if s.converged {
                    self.converged += 1;
                    self.epochs_to_convergence_sum += s.epochs_to_convergence.unwrap_or(0);
                }
            }
            Err(_) => self.errors += 1,
        }
    }

    pub fn merge(&mut self, other: &BatchStats) {
        self.trials += other.trials;
        self.errors += other.errors;
        self.converged += other.converged;
        self.epochs_to_convergence_sum += other.epochs_to_convergence_sum;
        for (&k, &v) in &other.restart_histogram {
            *self.restart_histogram.entry(k).or_default() += v;
        }
        for (&k, &v) in &other.kinds {
            *self.kinds.entry(k).or_default() += v;
        }
    }

    pub fn from_summaries<'a>(
        summaries: impl IntoIterator<Item = &'a Result<RunSummary, String>>,
    ) -> Self {
        let mut stats = Self::default();
        for s in summaries {
            stats.record(s);
        }
        stats
    }

    /// Recomputes the aggregates from persisted traces.
    pub fn from_traces<'a>(traces: impl IntoIterator<Item = &'a RunTrace>, window: usize) -> Self {
        let summaries: Vec<_> = traces
            .into_iter()
            .map(|t| detect_convergence(t, window).map_err(|e| e.to_string()))
            .collect();
        Self::from_summaries(&summaries)
    }

    /// Converged trials over all trials.
    pub fn convergence_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.converged as f64 / self.trials as f64
        }
    }

    pub fn mean_epochs_to_convergence(&self) -> Option<f64> {
        (self.converged > 0).then(|| self.epochs_to_convergence_sum as f64 / self.converged as f64)
    }

    pub fn kind_count(&self, kind: ConvergedKind) -> u64 {
        self.kinds.get(&kind).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub outcomes: Vec<TrialOutcome>,
    pub stats: BatchStats,
}

impl BatchResult {
    pub fn summaries(&self) -> impl Iterator<Item = &RunSummary> {
        self.outcomes.iter().filter_map(|o| o.summary.as_ref().ok())
    }

    pub fn traces(&self) -> impl Iterator<Item = &RunTrace> {
        self.outcomes.iter().filter_map(|o| o.trace.as_ref())
    }
}

fn one_trial(config: &RunConfig, trial: u64) -> TrialOutcome {
    match run_trial(config, trial) {
        Ok(trace) => {
            let summary = detect_convergence(&trace, config.window).map_err(|e| e.to_string());
            TrialOutcome {
                trial,
                trace: Some(trace),
                summary,
            }
        }
        Err(e) => TrialOutcome {
            trial,
            trace: None,
            summary: Err(e.to_string()),
        },
    }
}

/// Runs trials `0..trial_count` on the global thread pool. Outcomes come
/// back in trial order whatever the scheduling.
pub fn run_batch(config: &RunConfig) -> Result<BatchResult, HarnessError> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..config.trial_count)
        .into_par_iter()
        .map(|trial| one_trial(config, trial))
        .collect();
    let stats = BatchStats::from_summaries(outcomes.iter().map(|o| &o.summary));
    Ok(BatchResult { outcomes, stats })
}

/// As [`run_batch`] on a pool of `jobs` threads; `jobs = 1` runs inline.
pub fn run_batch_with_jobs(config: &RunConfig, jobs: usize) -> Result<BatchResult, HarnessError> {
    if jobs <= 1 {
        config.validate()?;
        let outcomes: Vec<TrialOutcome> = (0..config.trial_count)
            .map(|trial| one_trial(config, trial))
            .collect();
        let stats = BatchStats::from_summaries(outcomes.iter().map(|o| &o.summary));
        return Ok(BatchResult { outcomes, stats });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_batch(config))
}

/// One CSV row. Vectors are space-separated; `final_phi` lists
/// `player:p0 p1 ...` groups separated by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub trial: u64,
    pub converged: bool,
    pub kind: String,
    pub restarts: u64,
    pub rounds_used: u64,
    pub epochs: u64,
    pub epochs_to_convergence: Option<u64>,
    pub truncated: bool,
    pub final_phi: String,
    pub locked_profile: String,
    pub error: String,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

impl SummaryRow {
    pub fn from_outcome(trial: u64, summary: &Result<RunSummary, String>) -> Self {
        match summary {
            Ok(s) => Self {
                trial,
                converged: s.converged,
                kind: s.kind.to_string(),
                restarts: s.restarts,
                rounds_used: s.rounds_used,
                epochs: s.epochs,
                epochs_to_convergence: s.epochs_to_convergence,
                truncated: s.truncated,
                final_phi: s
                    .final_phi
                    .iter()
                    .map(|(p, phi)| format!("{p}:{}", join(phi)))
                    .collect::<Vec<_>>()
                    .join(";"),
                locked_profile: s.locked_profile.as_deref().map(join).unwrap_or_default(),
                error: String::new(),
            },
            Err(e) => Self {
                trial,
                converged: false,
                kind: ConvergedKind::None.to_string(),
                restarts: 0,
                rounds_used: 0,
                epochs: 0,
                epochs_to_convergence: None,
                truncated: false,
                final_phi: String::new(),
                locked_profile: String::new(),
                error: e.clone(),
            },
        }
    }
}

pub fn write_summary_csv<W: Write>(
    mut w: W,
    config: &RunConfig,
    outcomes: &[TrialOutcome],
) -> Result<(), HarnessError> {
    writeln!(w, "# {SUMMARY_SCHEMA}")?;
    let json = serde_json::to_string(config).expect("configs serialize");
    writeln!(w, "# config: {json}")?;
    let mut out = csv::Writer::from_writer(w);
    for o in outcomes {
        out.serialize(SummaryRow::from_outcome(o.trial, &o.summary))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a summary file back: the embedded config (if present) and its rows.
pub fn read_summary_csv<R: BufRead>(
    r: R,
) -> Result<(Option<RunConfig>, Vec<SummaryRow>), HarnessError> {
    let mut config = None;
    let mut body = Vec::new();
    for line in r.lines() {
        let line = line?;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(json) = comment.trim_start().strip_prefix("config:") {
                config = Some(
                    serde_json::from_str(json.trim())
                        .map_err(|e| HarnessError::Config(format!("embedded config: {e}")))?,
                );
            }
            continue;
        }
        body.extend_from_slice(line.as_bytes());
        body.push(b'\n');
    }
    let rows = csv::Reader::from_reader(body.as_slice())
        .deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()?;
    Ok((config, rows))
}
