use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use awesome::harness::{read_summary_csv, RunTrace};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn awesome(args: &[&str]) -> Output {
    awesome_with_env(args, None)
}

fn awesome_with_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_awesome"));
    cmd.args(args).env_remove("AWESOME_SEED");
    if let Some(seed) = seed {
        cmd.env("AWESOME_SEED", seed);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn game(name: &str) -> String {
    scenarios().join("games").join(name).display().to_string()
}

/// A short pennies self-play experiment writing under `dir`.
fn pennies_config(dir: &Path, trials: u64) -> PathBuf {
    let path = dir.join("pennies.toml");
    let text = format!(
        "master_seed = 5\ntrials = {trials}\nepoch_budget = 4\nwindow = 2\n\n\
         [output]\ntrace_dir = \"traces\"\nsummary = \"summary.csv\"\n\n\
         [game]\nfile = {:?}\n\n[[roster]]\nkind = \"awesome\"\n\n[[roster]]\nkind = \"awesome\"\n",
        game("matching_pennies.toml")
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_prints_the_selected_equilibrium() {
    let o = awesome(&["solve", &game("matching_pennies.toml")]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("((0.5, 0.5), (0.5, 0.5)) [mixed, support-enumeration-2p]"));

    let o = awesome(&["solve", &game("prisoners_dilemma.toml")]);
    assert!(stdout(&o).starts_with("(Defect, Defect) [pure"));

    let o = awesome(&["solve", "--all", &game("battle_of_the_sexes.toml")]);
    let heads: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with(' '))
        .map(|l| l.split(" [").next().unwrap().to_owned())
        .collect();
    assert_eq!(heads[..2], ["(Opera, Opera)", "(Football, Football)"]);
    assert_eq!(heads.len(), 3);
}

#[test]
fn solve_without_pure_equilibrium_exits_4_unless_overridden() {
    let cycle = game("three_player_cycle.toml");
    let o = awesome(&["solve", &cycle]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("override"));
    let o = awesome(&["solve", &cycle, "--equilibrium", "0.5,0.5;0.5,0.5;0.5,0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("[mixed, user-supplied]"));
    let o = awesome(&["solve", &cycle, "--equilibrium", "1,0;0.5,0.5;0.5,0.5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn schedule_table_rows_and_verdicts() {
    let o = awesome(&["schedule", "-T", "3"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    let n: Vec<&str> = lines[1..4]
        .iter()
        .map(|l| l.split_whitespace().nth(3).unwrap())
        .collect();
    assert_eq!(n, ["32", "128", "906"]);
    assert!(lines[4].starts_with("verdict: valid"));

    let o = awesome(&["schedule", "-T", "0"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().next().unwrap().trim_start().starts_with("t "));
    assert!(text.contains("verdict deferred"));

    let o = awesome(&["schedule", "--fixed-rounds", "1", "-T", "5"]);
    assert!(o.status.success());
    assert!(stdout(&o)
        .lines()
        .last()
        .unwrap()
        .ends_with("fails at t = 1"));

    let o = awesome(&["schedule", "--decay", "constant", "-T", "4"]);
    assert!(stdout(&o).contains("verdict: invalid: eps_e decreasing fails at t = 1"));
}

#[test]
fn schedule_reads_an_experiment_config() {
    let config = scenarios().join("experiments/rps_vs_stationary.toml");
    let o = awesome(&["schedule", "--config", config.to_str().unwrap(), "-T", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // Six actions in total for rock-paper-scissors.
    let row = stdout(&o).lines().nth(1).unwrap().to_owned();
    assert_eq!(row.split_whitespace().nth(3), Some("48"));
}

#[test]
fn usage_config_and_io_failures_have_distinct_codes() {
    assert_eq!(awesome(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        awesome(&["schedule", "--decay", "sideways"]).status.code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "trials = 2\nbogus = 1\n").unwrap();
    let o = awesome(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bad.toml:2:1"), "{}", stderr(&o));

    let missing = dir.path().join("missing.toml");
    assert_eq!(
        awesome(&["run", missing.to_str().unwrap()]).status.code(),
        Some(5)
    );

    // Output directory absent and not requested.
    let config = pennies_config(dir.path(), 1);
    let o = awesome(&["run", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert!(!dir.path().join("traces").exists());
    let o = awesome(&["run", config.to_str().unwrap(), "--mkdir"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("traces/trial-0000.jsonl").is_file());
}

#[test]
fn run_is_reproducible_and_the_seed_variable_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = pennies_config(dir.path(), 1);
    let config = config.to_str().unwrap();
    let trace = dir.path().join("traces/trial-0000.jsonl");
    let read = || fs::read(&trace).unwrap();

    assert!(awesome(&["run", config, "--mkdir"]).status.success());
    let first = read();
    assert!(awesome(&["run", config]).status.success());
    assert_eq!(read(), first);

    assert!(awesome_with_env(&["run", config], Some("99"))
        .status
        .success());
    let from_env = read();
    assert_ne!(from_env, first);
    assert_eq!(
        RunTrace::from_bytes(&from_env)
            .unwrap()
            .header
            .config
            .master_seed,
        99
    );
    assert!(awesome(&["run", config, "--seed", "99"]).status.success());
    assert_eq!(read(), from_env);
    // The flag wins over the variable.
    assert!(
        awesome_with_env(&["run", config, "--seed", "5"], Some("99"))
            .status
            .success()
    );
    assert_eq!(read(), first);

    assert_eq!(
        awesome_with_env(&["run", config], Some("abc"))
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn batch_writes_every_trial_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = pennies_config(dir.path(), 50);
    let o = awesome(&["batch", config.to_str().unwrap(), "--mkdir", "--jobs", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("trial ")).count(), 50);
    assert!(text.contains("restarts:"));
    let traces = fs::read_dir(dir.path().join("traces")).unwrap().count();
    assert_eq!(traces, 50);
    let csv = fs::read(dir.path().join("summary.csv")).unwrap();
    let (embedded, rows) = read_summary_csv(csv.as_slice()).unwrap();
    assert_eq!(rows.len(), 50);
    assert_eq!(embedded.unwrap().trial_count, 50);
    assert!(rows.iter().enumerate().all(|(i, r)| r.trial == i as u64));

    // Serial and parallel batches write the same bytes.
    let serial = tempfile::tempdir().unwrap();
    let out = serial.path().join("t");
    let o = awesome(&[
        "batch",
        config.to_str().unwrap(),
        "--jobs",
        "1",
        "--mkdir",
        "--trace-dir",
        out.to_str().unwrap(),
        "--summary",
        serial.path().join("s.csv").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for i in [0, 17, 49] {
        let name = format!("trial-{i:04}.jsonl");
        assert_eq!(
            fs::read(out.join(&name)).unwrap(),
            fs::read(dir.path().join("traces").join(&name)).unwrap()
        );
    }
}

#[test]
fn validate_accepts_produced_traces_and_flags_edits() {
    let dir = tempfile::tempdir().unwrap();
    let config = pennies_config(dir.path(), 2);
    assert!(awesome(&["batch", config.to_str().unwrap(), "--mkdir"])
        .status
        .success());
    let t0 = dir.path().join("traces/trial-0000.jsonl");
    let t1 = dir.path().join("traces/trial-0001.jsonl");
    let o = awesome(&["validate", t0.to_str().unwrap(), t1.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches(": ok (").count(), 2);
    let o = awesome(&[
        "validate",
        "--config",
        config.to_str().unwrap(),
        t0.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));

    let text = fs::read_to_string(&t1).unwrap();
    let edited = text.replacen("\"appe\":true", "\"appe\":false", 1);
    assert_ne!(edited, text);
    fs::write(&t1, edited).unwrap();
    let o = awesome(&["validate", t0.to_str().unwrap(), t1.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stdout(&o).contains("digest"), "{}", stdout(&o));

    fs::write(&t1, "not json\n").unwrap();
    assert_eq!(
        awesome(&["validate", t1.to_str().unwrap()]).status.code(),
        Some(3)
    );
}
