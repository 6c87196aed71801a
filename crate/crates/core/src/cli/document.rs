//! TOML experiment documents and game files.
//!
//! Relative paths inside a document (game file, outputs) resolve against
//! the document's own directory. Every failure carries the file, the line
//! when one is known, and the offending field.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::harness::{AgentSpec, RunConfig, DEFAULT_WINDOW};
use crate::schedule::{Decay, RoundsRule};
use crate::{EpochSchedule, Game};

pub const DEFAULT_EPSILON_BASE: f64 = 0.5;
pub const DEFAULT_EPOCH_BUDGET: u64 = 100;

#[derive(Debug)]
pub enum DocumentError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    Invalid {
        path: PathBuf,
        line: Option<usize>,
        field: String,
        message: String,
    },
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocumentError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            DocumentError::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "{}:{line}:{column}: {message}", path.display()),
            DocumentError::Invalid {
                path,
                line,
                field,
                message,
            } => {
                write!(f, "{}", path.display())?;
                if let Some(line) = line {
                    write!(f, ":{line}")?;
                }
                write!(f, ": `{field}`: {message}")
            }
        }
    }
}

impl std::error::Error for DocumentError {}

/// 1-based line and column of byte `offset` in `text`.
fn locate(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_error(path: &Path, text: &str, err: toml::de::Error) -> DocumentError {
    let (line, column) = err.span().map_or((1, 1), |s| locate(text, s.start));
    DocumentError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

fn read(path: &Path) -> Result<String, DocumentError> {
    std::fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a game file: `num_players`, `actions` (names per player) and
/// `payoffs` (one row of `num_players` values per joint profile, player 0's
/// action varying slowest).
pub fn parse_game(path: &Path, text: &str) -> Result<Game, DocumentError> {
    toml::from_str(text).map_err(|e| parse_error(path, text, e))
}

pub fn load_game(path: &Path) -> Result<Game, DocumentError> {
    parse_game(path, &read(path)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    master_seed: Option<u64>,
    trials: Option<u64>,
    round_budget: Option<u64>,
    epoch_budget: Option<u64>,
    window: Option<usize>,
    jobs: Option<usize>,
    game: Spanned<toml::Table>,
    schedule: Option<Spanned<RawSchedule>>,
    equilibrium: Option<Spanned<RawEquilibrium>>,
    #[serde(default)]
    roster: Vec<Spanned<toml::Table>>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawSchedule {
    pub epsilon_base: Option<f64>,
    pub decay: Option<String>,
    pub ratio: Option<f64>,
    pub actions_total: Option<usize>,
    pub initial_rounds: Option<u64>,
    pub fixed_rounds: Option<u64>,
    pub cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquilibrium {
    strategies: Vec<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    trace_dir: Option<String>,
    summary: Option<String>,
    #[serde(default)]
    create_dirs: bool,
}

/// Where a run writes its files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputPaths {
    /// One `trial-NNNN.jsonl` per trial goes here.
    pub trace_dir: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Create missing output directories instead of failing.
    pub create_dirs: bool,
}

/// A parsed and validated experiment document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub run: RunConfig,
    pub output: OutputPaths,
    pub jobs: Option<usize>,
    pub source: PathBuf,
}

const ROSTER_KINDS: [&str; 5] = [
    "awesome",
    "stationary",
    "eventually_stationary",
    "scripted",
    "fictitious_play",
];

impl RawSchedule {
    pub(crate) fn build(&self, default_actions: usize) -> Result<EpochSchedule, (String, String)> {
        let err = |field: &str, e: &dyn fmt::Display| (format!("schedule.{field}"), e.to_string());
        let base = self.epsilon_base.unwrap_or(DEFAULT_EPSILON_BASE);
        let actions = self.actions_total.unwrap_or(default_actions);
        let decay = match self.decay.as_deref().unwrap_or("harmonic") {
            "harmonic" => Decay::Harmonic,
            "geometric" => Decay::Geometric {
                ratio: self
                    .ratio
                    .ok_or_else(|| err("ratio", &"required for geometric decay"))?,
            },
            "constant" => Decay::Constant,
            other => {
                return Err(err(
                    "decay",
                    &format!("unknown family {other:?}; expected harmonic, geometric or constant"),
                ))
            }
        };
        if self.ratio.is_some() && !matches!(decay, Decay::Geometric { .. }) {
            return Err(err("ratio", &"only meaningful with geometric decay"));
        }
        let mut schedule = EpochSchedule::new(base, decay, actions).map_err(|e| {
            let field = match e {
                crate::schedule::ScheduleError::Ratio(_) => "ratio",
                crate::schedule::ScheduleError::ActionsTotal => "actions_total",
                _ => "epsilon_base",
            };
            err(field, &e)
        })?;
        if let Some(n) = self.fixed_rounds {
            schedule = schedule
                .with_rounds(RoundsRule::Fixed { rounds: n.into() })
                .map_err(|e| err("fixed_rounds", &e))?;
        }
        if let Some(n) = self.initial_rounds {
            schedule = schedule
                .with_initial_rounds(n.into())
                .map_err(|e| err("initial_rounds", &e))?;
        }
        if let Some(cap) = self.cap {
            schedule = schedule.with_cap(cap);
        }
        Ok(schedule)
    }
}

struct Ctx<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Ctx<'_> {
    fn invalid(
        &self,
        span: Option<Range<usize>>,
        field: impl Into<String>,
        message: impl fmt::Display,
    ) -> DocumentError {
        DocumentError::Invalid {
            path: self.path.to_path_buf(),
            line: span.map(|s| locate(self.text, s.start).0),
            field: field.into(),
            message: message.to_string(),
        }
    }

    fn resolve(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new("")).join(p)
        }
    }

    fn game(&self, section: &Spanned<toml::Table>) -> Result<Game, DocumentError> {
        let table = section.get_ref();
        match table.get("file") {
            Some(file) => {
                let Some(file) = file.as_str() else {
                    return Err(self.invalid(
                        Some(section.span()),
                        "game.file",
                        "must be a string path",
                    ));
                };
                if let Some(extra) = table.keys().find(|k| *k != "file") {
                    return Err(self.invalid(
                        Some(section.span()),
                        format!("game.{extra}"),
                        "a game given by file takes no inline fields",
                    ));
                }
                load_game(&self.resolve(file))
            }
            None => table
                .clone()
                .try_into::<Game>()
                .map_err(|e| self.invalid(Some(section.span()), "game", e.message().trim())),
        }
    }

    fn roster_entry(
        &self,
        i: usize,
        entry: &Spanned<toml::Table>,
    ) -> Result<AgentSpec, DocumentError> {
        let span = Some(entry.span());
        let field = format!("roster[{i}]");
        let kind = entry.get_ref().get("kind").and_then(|k| k.as_str());
        match kind {
            None => Err(self.invalid(span, format!("{field}.kind"), "missing; expected one of awesome, stationary, eventually_stationary, scripted, fictitious_play")),
            Some(k) if !ROSTER_KINDS.contains(&k) => Err(self.invalid(
                span,
                format!("{field}.kind"),
                format!("unknown kind {k:?}; expected one of {}", ROSTER_KINDS.join(", ")),
            )),
            Some("awesome") if entry.get_ref().len() > 1 => {
                Err(self.invalid(span, field, "an awesome seat takes no other fields"))
            }
            Some(_) => entry
                .get_ref()
                .clone()
                .try_into::<AgentSpec>()
                .map_err(|e| self.invalid(span, field, e.message().trim())),
        }
    }
}

impl ConfigDocument {
    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::parse(path, &read(path)?)
    }

    /// Parses `text` as if read from `path`.
    pub fn parse(path: &Path, text: &str) -> Result<Self, DocumentError> {
        let raw: RawDocument = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
        let ctx = Ctx { path, text };

        let game = ctx.game(&raw.game)?;
        let schedule = match &raw.schedule {
            Some(s) => s
                .get_ref()
                .build(game.total_actions())
                .map_err(|(field, msg)| ctx.invalid(Some(s.span()), field, msg))?,
            None => RawSchedule::default()
                .build(game.total_actions())
                .map_err(|(field, msg)| ctx.invalid(None, field, msg))?,
        };

        if raw.roster.len() != game.num_players() {
            let span = raw.roster.first().map(Spanned::span);
            return Err(ctx.invalid(
                span,
                "roster",
                format!(
                    "{} entries for a {}-player game",
                    raw.roster.len(),
                    game.num_players()
                ),
            ));
        }
        let roster = raw
            .roster
            .iter()
            .enumerate()
            .map(|(i, e)| ctx.roster_entry(i, e))
            .collect::<Result<Vec<_>, _>>()?;

        let mut run = RunConfig::new(game, roster, schedule);
        run.master_seed = raw.master_seed.unwrap_or(0);
        run.trial_count = raw.trials.unwrap_or(1);
        run.round_budget = raw.round_budget.unwrap_or(u64::MAX);
        run.epoch_budget = raw.epoch_budget.unwrap_or(DEFAULT_EPOCH_BUDGET);
        run.window = raw.window.unwrap_or(DEFAULT_WINDOW);
        for (field, value) in [
            ("trials", run.trial_count),
            ("round_budget", run.round_budget),
            ("epoch_budget", run.epoch_budget),
            ("window", run.window as u64),
        ] {
            if value == 0 {
                return Err(ctx.invalid(None, field, "must be at least 1"));
            }
        }
        if raw.jobs == Some(0) {
            return Err(ctx.invalid(None, "jobs", "must be at least 1"));
        }

        if let Some(eq) = &raw.equilibrium {
            let strategies = eq.get_ref().strategies.clone();
            crate::equilibrium::user_override(&run.game, strategies.clone())
                .map_err(|e| ctx.invalid(Some(eq.span()), "equilibrium.strategies", e))?;
            run.equilibrium = Some(strategies);
        }
        for (p, spec) in run.roster.iter().enumerate() {
            if let AgentSpec::Opponent(policy) = spec {
                policy.validate(&run.game, p).map_err(|e| {
                    ctx.invalid(Some(raw.roster[p].span()), format!("roster[{p}]"), e)
                })?;
            }
        }
        run.validate().map_err(|e| ctx.invalid(None, "config", e))?;

        Ok(Self {
            run,
            output: OutputPaths {
                trace_dir: raw.output.trace_dir.as_deref().map(|p| ctx.resolve(p)),
                summary: raw.output.summary.as_deref().map(|p| ctx.resolve(p)),
                create_dirs: raw.output.create_dirs,
            },
            jobs: raw.jobs,
            source: path.to_path_buf(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENNIES: &str = r#"
num_players = 2
actions = [["Heads", "Tails"], ["Heads", "Tails"]]
payoffs = [[1, -1], [-1, 1], [-1, 1], [1, -1]]
"#;

    fn doc(body: &str) -> Result<ConfigDocument, DocumentError> {
        ConfigDocument::parse(Path::new("/tmp/exp/config.toml"), body)
    }

    #[test]
    fn game_file_matches_builtin() {
        let g = parse_game(Path::new("g.toml"), PENNIES).unwrap();
        assert_eq!(
            g,
            crate::games::matching_pennies::<f64>()
                .with_action_names(vec![
                    vec!["Heads".into(), "Tails".into()],
                    vec!["Heads".into(), "Tails".into()],
                ])
                .unwrap()
        );
    }

    #[test]
    fn game_syntax_error_is_located() {
        let err =
            parse_game(Path::new("g.toml"), "num_players = 2\nactions = [[\"a\"\n").unwrap_err();
        match err {
            DocumentError::Parse { line, .. } => assert!(line >= 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn inline_document_resolves_to_run_config() {
        let text = format!(
            "master_seed = 9\ntrials = 4\nepoch_budget = 12\n[output]\ntrace_dir = \"traces\"\n[game]\n{PENNIES}\n\
             [[roster]]\nkind = \"awesome\"\n[[roster]]\nkind = \"stationary\"\nstrategy = [0.5, 0.5]\n"
        );
        let d = doc(&text).unwrap();
        assert_eq!(d.run.master_seed, 9);
        assert_eq!(d.run.trial_count, 4);
        assert_eq!(d.run.epoch_budget, 12);
        assert_eq!(d.run.schedule.actions_total(), 4);
        assert_eq!(d.run.schedule.rounds(0), 32);
        assert_eq!(d.output.trace_dir, Some(PathBuf::from("/tmp/exp/traces")));
        assert!(d.run.roster[0].is_awesome());
    }

    #[test]
    fn unknown_roster_kind_names_field_and_line() {
        let text = format!(
            "[game]\n{PENNIES}\n[[roster]]\nkind = \"awesome\"\n[[roster]]\nkind = \"random\"\n"
        );
        let err = doc(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("roster[1].kind"), "{msg}");
        match err {
            DocumentError::Invalid {
                line: Some(line), ..
            } => assert!(line >= 9, "{line}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bad_schedule_value_names_field() {
        let text = format!(
            "[game]\n{PENNIES}\n[schedule]\nepsilon_base = 1.5\n[[roster]]\nkind = \"awesome\"\n[[roster]]\nkind = \"awesome\"\n"
        );
        let msg = doc(&text).unwrap_err().to_string();
        assert!(msg.contains("schedule.epsilon_base"), "{msg}");
    }

    #[test]
    fn unknown_top_level_key_is_a_parse_error() {
        let text = format!("seed = 3\n[game]\n{PENNIES}\n");
        match doc(&text).unwrap_err() {
            DocumentError::Parse {
                line: 1, message, ..
            } => assert!(message.contains("seed")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn override_must_be_an_equilibrium() {
        let text = format!(
            "[game]\n{PENNIES}\n[equilibrium]\nstrategies = [[1.0, 0.0], [1.0, 0.0]]\n\
             [[roster]]\nkind = \"awesome\"\n[[roster]]\nkind = \"awesome\"\n"
        );
        let msg = doc(&text).unwrap_err().to_string();
        assert!(msg.contains("equilibrium.strategies"), "{msg}");
    }
}
