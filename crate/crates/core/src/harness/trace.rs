//! Trace records and their line-delimited JSON persistence.
//!
//! A trace file holds one JSON object per line: a `header`, one `epoch`
//! line per closed epoch, and an `end` line. Each line carries a `digest`:
//! the hex SHA-256 of the previous line's digest followed by the line's own
//! JSON with an empty digest. The header chains from the empty string.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::AgentEpoch;
use crate::game::ActionHistogram;
use crate::Equilibrium;

use super::config::RunConfig;
use super::TraceError;

pub const TRACE_SCHEMA: &str = "awesome-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub trial: u64,
    /// Derived stream seed per player.
    pub seeds: Vec<u64>,
    pub config: RunConfig,
    /// Equilibrium the AWESOME agents precomputed, if any play.
    pub equilibrium: Option<Equilibrium>,
    #[serde(default)]
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Position of the record in the trace.
    pub index: u64,
    pub trial: u64,
    /// Rounds `round_start..round_end` make up this epoch.
    pub round_start: u64,
    pub round_end: u64,
    pub histograms: Vec<ActionHistogram>,
    /// Reports of the AWESOME agents that closed an epoch here, by player.
    pub agents: Vec<AgentEpoch<f64>>,
    #[serde(default)]
    pub digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpochBudget,
    RoundBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEnd {
    pub rounds_used: u64,
    pub epochs: u64,
    pub stop: StopReason,
    /// Rounds of an unfinished final epoch, discarded from every statistic.
    pub truncated_rounds: Option<u64>,
    #[serde(default)]
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine {
    Header(TraceHeader),
    Epoch(EpochRecord),
    End(TraceEnd),
}

impl TraceLine {
    fn digest_mut(&mut self) -> &mut String {
        match self {
            TraceLine::Header(h) => &mut h.digest,
            TraceLine::Epoch(r) => &mut r.digest,
            TraceLine::End(e) => &mut e.digest,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub records: Vec<EpochRecord>,
    pub end: TraceEnd,
}

/// Digest of a line given the previous digest; ignores the line's own.
fn line_digest(prev: &str, line: &TraceLine) -> String {
    let mut blank = line.clone();
    blank.digest_mut().clear();
    let json = serde_json::to_string(&blank).expect("trace lines serialize");
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(json.as_bytes());
    hex::encode(h.finalize())
}

impl RunTrace {
    fn lines(&self) -> impl Iterator<Item = TraceLine> + '_ {
        std::iter::once(TraceLine::Header(self.header.clone()))
            .chain(self.records.iter().cloned().map(TraceLine::Epoch))
            .chain(std::iter::once(TraceLine::End(self.end.clone())))
    }

    /// Recomputes every digest in order.
    pub fn seal(&mut self) {
        self.header.digest = line_digest("", &TraceLine::Header(self.header.clone()));
        let mut prev = self.header.digest.clone();
        for r in &mut self.records {
            r.digest = line_digest(&prev, &TraceLine::Epoch(r.clone()));
            prev = r.digest.clone();
        }
        self.end.digest = line_digest(&prev, &TraceLine::End(self.end.clone()));
    }

    /// Indices (0 = header, `i + 1` = record `i`, last = end) of lines whose
    /// stored digest does not match the chain.
    pub fn digest_mismatches(&self) -> Vec<usize> {
        let mut prev = String::new();
        let mut bad = Vec::new();
        for (i, mut line) in self.lines().enumerate() {
            let expected = line_digest(&prev, &line);
            if *line.digest_mut() != expected {
                bad.push(i);
            }
            prev = std::mem::take(line.digest_mut());
        }
        bad
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in self.lines() {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut header = None;
        let mut records = Vec::new();
        let mut end = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine =
                serde_json::from_str(&line).map_err(|source| TraceError::Json {
                    line: i + 1,
                    source,
                })?;
            match (parsed, &header, &end) {
                (TraceLine::Header(h), None, None) => {
                    if h.schema != TRACE_SCHEMA {
                        return Err(TraceError::Schema(h.schema));
                    }
                    header = Some(h);
                }
                (TraceLine::Epoch(rec), Some(_), None) => records.push(rec),
                (TraceLine::End(e), Some(_), None) => end = Some(e),
                _ => {
                    return Err(TraceError::Structural {
                        line: i + 1,
                        message: "expected header, epochs, end in that order".into(),
                    })
                }
            }
        }
        match (header, end) {
            (Some(header), Some(end)) => Ok(Self {
                header,
                records,
                end,
            }),
            _ => Err(TraceError::Structural {
                line: 0,
                message: "trace lacks a header or end line".into(),
            }),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TraceError> {
        Self::read_from(bytes)
    }

    pub fn complete_epochs(&self) -> usize {
        self.records.len()
    }
}
