use std::path::Path;
use std::process::{Command, Output};

use nopress::analysis::{gold_orders, PowerOrders};
use nopress::record::GameRecord;

fn nopress(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nopress"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = nopress(dir, args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn all_hold_scenario_reports_no_changes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.txt"),
        "case quiet\nunit FRANCE A PAR\nunit GERMANY A MUN\norder FRANCE A PAR H\nend\n",
    )
    .unwrap();
    let out = ok(dir.path(), &["adjudicate", "s.txt"]);
    assert!(out.contains("no changes"), "{out}");
    assert!(out.contains("next phase: F1901M"));
}

#[test]
fn malformed_scenario_exits_nonzero_with_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.txt"),
        "case bad\nunit FRANCE X PAR\nend\n",
    )
    .unwrap();
    let o = nopress(dir.path(), &["adjudicate", "s.txt"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn corpus_passes_through_the_cli() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/conformance.txt");
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["adjudicate", corpus.to_str().unwrap()]);
    assert!(!out.contains("check failed"));
    assert!(out.matches("checks: pass").count() > 100);
}

#[test]
fn failed_expectation_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.txt"),
        "case wrong\nunit FRANCE A PAR\nunit GERMANY A MUN\norder FRANCE A PAR - BUR\n\
         order GERMANY A MUN - BUR\nexpect A PAR - BUR : succeeds\nend\n",
    )
    .unwrap();
    let o = nopress(dir.path(), &["adjudicate", "s.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("check failed"));
}

#[test]
fn play_is_reproducible_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, seed: &'static str| {
        vec![
            "play",
            "--agent",
            "random",
            "-n",
            "3",
            "--seed",
            seed,
            "--out",
            out,
            "--year-cap",
            "1906",
        ]
    };
    ok(dir.path(), &args("a", "1"));
    ok(dir.path(), &args("b", "1"));
    ok(dir.path(), &args("c", "2"));
    for g in 0..3 {
        let name = format!("game-{g:04}.json");
        assert_eq!(
            read(dir.path().join("a").join(&name)),
            read(dir.path().join("b").join(&name))
        );
    }
    assert_ne!(
        read(dir.path().join("a/game-0000.json")),
        read(dir.path().join("c/game-0000.json"))
    );
}

#[test]
fn mixed_bot_records_ingest_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "play",
        "-n",
        "2",
        "--seed",
        "4",
        "--out",
        "g",
        "--year-cap",
        "1908",
    ];
    for a in [
        "random", "greedy", "dumbbot", "hold", "dumbbot", "greedy", "random",
    ] {
        args.extend(["--agent", a]);
    }
    ok(dir.path(), &args);
    let out = ok(dir.path(), &["ingest", "g"]);
    assert_eq!(out.matches(": ok,").count(), 2, "{out}");
    assert_eq!(out.matches("0 divergences").count(), 2);
}

#[test]
fn unreachable_agent_plays_in_civil_disorder() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["play", "--out", "g", "--year-cap", "1901"];
    args.extend(["--agent", "tcp:127.0.0.1:1"]);
    for _ in 0..6 {
        args.extend(["--agent", "random"]);
    }
    let o = nopress(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("fell back to defaults"),
        "{}",
        stderr(&o)
    );
    let record = GameRecord::from_json(&read(dir.path().join("g/game-0000.json"))).unwrap();
    let austria = &record.phases[0].orders[&nopress::Power::Austria];
    assert_eq!(austria.len(), 3);
    assert!(austria.iter().all(|o| o.ends_with(" H")), "{austria:?}");
}

#[test]
fn protocol_agent_process_plays_without_substitutions() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = format!("cmd:{} agent --bot dumbbot", env!("CARGO_BIN_EXE_nopress"));
    let mut args = vec!["play", "--out", "g", "--year-cap", "1903"];
    for _ in 0..7 {
        args.extend(["--agent", cmd.as_str()]);
    }
    let o = nopress(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stderr(&o).contains("fell back"), "{}", stderr(&o));
    assert!(ok(dir.path(), &["ingest", "g"]).contains("0 divergences"));
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "seed = 9\ngames = 2\nagents = [\"greedy\"]\nout = \"from-config\"\nyear_cap = 1902\n",
    )
    .unwrap();
    ok(dir.path(), &["--config", "c.toml", "play"]);
    assert!(dir.path().join("from-config/game-0001.json").exists());
    assert!(!dir.path().join("from-config/game-0002.json").exists());
    ok(
        dir.path(),
        &["play", "--config", "c.toml", "-n", "1", "--out", "flag"],
    );
    assert!(dir.path().join("flag/game-0000.json").exists());
    assert!(!dir.path().join("flag/game-0001.json").exists());
    let r = GameRecord::from_json(&read(dir.path().join("flag/game-0000.json"))).unwrap();
    assert_eq!(r.rules.year_cap, 1902);
    std::fs::write(dir.path().join("bad.toml"), "sed = 1\n").unwrap();
    assert!(!nopress(dir.path(), &["--config", "bad.toml", "play"])
        .status
        .success());
}

#[test]
fn one_vs_six_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "tournament",
        "1v6",
        "-a",
        "dumbbot",
        "-a",
        "random",
        "-n",
        "7",
        "--seed",
        "3",
        "--year-cap",
        "1903",
    ];
    let csv = ok(dir.path(), &base);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "agent,opponent,% Win,% Most SC,% Survived,% Defeated,# Games"
    );
    assert!(lines[1].starts_with("dumbbot,random,"));
    assert!(lines[1].ends_with(",7"));
    let mut json_args = base.to_vec();
    json_args.extend(["--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&ok(dir.path(), &json_args)).unwrap();
    assert_eq!(v["games"].as_array().unwrap().len(), 7);
    assert!(v["p_value"].as_f64().unwrap() <= 1.0);
    assert_eq!(ok(dir.path(), &base), csv);
}

#[test]
fn pool_writes_ratings_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "tournament",
            "pool",
            "-a",
            "random",
            "-a",
            "greedy",
            "-a",
            "hold",
            "-n",
            "5",
            "--seed",
            "1",
            "--year-cap",
            "1902",
            "--trace",
            "trace.csv",
        ],
    );
    assert!(out.starts_with("agent,mu,sigma,exposure,seats\n"));
    assert_eq!(out.lines().count(), 4);
    let trace = read(dir.path().join("trace.csv"));
    assert_eq!(trace.lines().next(), Some("game,random,greedy,hold"));
    assert_eq!(trace.lines().count(), 6);
}

#[test]
fn analyze_reports_and_rejects_empty_globs() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "play",
            "-a",
            "dumbbot",
            "-n",
            "2",
            "--out",
            "g",
            "--year-cap",
            "1905",
        ],
    );
    let coalition = ok(
        dir.path(),
        &["analyze", "coalition", "g/*.json", "--variant", "dumb"],
    );
    let lines: Vec<&str> = coalition.lines().collect();
    assert_eq!(lines[0], "variant,x_support_ratio,eff_x_support_ratio");
    assert!(lines[1].starts_with("dumb,"));
    let stats = ok(dir.path(), &["analyze", "stats", "g/game-0000.json"]);
    assert!(stats.starts_with("1 finished games (0 skipped)"), "{stats}");
    let o = nopress(dir.path(), &["analyze", "stats", "nothing/*.json"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no records"), "{}", stderr(&o));
}

#[test]
fn accuracy_of_gold_against_itself_is_full() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["play", "-a", "greedy", "--out", "g", "--year-cap", "1902"],
    );
    let record = GameRecord::from_json(&read(dir.path().join("g/game-0000.json"))).unwrap();
    let gold: Vec<PowerOrders> = gold_orders(&record);
    std::fs::write(
        dir.path().join("p.json"),
        serde_json::to_string(&gold).unwrap(),
    )
    .unwrap();
    let out = ok(
        dir.path(),
        &["analyze", "accuracy", "g", "--predictions", "p.json"],
    );
    assert!(out.contains("unit accuracy 100.00 %"), "{out}");
    assert!(out.contains("all-orders accuracy 100.00 %"), "{out}");
}

#[test]
fn ingest_notes_illegal_orders_and_rejects_truncated_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["play", "-a", "hold", "--out", "g", "--year-cap", "1901"],
    );
    let mut record = GameRecord::from_json(&read(dir.path().join("g/game-0000.json"))).unwrap();
    let france = record.phases[0]
        .orders
        .get_mut(&nopress::Power::France)
        .unwrap();
    let slot = france.iter().position(|o| o == "A PAR H").unwrap();
    france[slot] = "A PAR - MUN".into();
    std::fs::create_dir(dir.path().join("in")).unwrap();
    std::fs::write(dir.path().join("in/edited.json"), record.to_json()).unwrap();
    let out = ok(dir.path(), &["ingest", "in/edited.json"]);
    assert!(out.contains(": ok, "), "{out}");
    assert!(out.contains("1 divergences"), "{out}");
    assert!(out.contains("A PAR - MUN"), "{out}");
    let full = record.to_json();
    std::fs::write(dir.path().join("in/cut.json"), &full[..full.len() / 2]).unwrap();
    let o = nopress(dir.path(), &["ingest", "in/cut.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("rejected"));
}

#[test]
fn encode_writes_one_line_per_phase_with_layout() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["play", "-a", "random", "--out", "g", "--year-cap", "1902"],
    );
    ok(
        dir.path(),
        &[
            "encode",
            "g/game-0000.json",
            "--out",
            "t.ndjson",
            "--vocab",
            "v.json",
        ],
    );
    let record = GameRecord::from_json(&read(dir.path().join("g/game-0000.json"))).unwrap();
    let lines: Vec<serde_json::Value> = read(dir.path().join("t.ndjson"))
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), record.phases.len());
    assert_eq!(lines[0]["phase"], "S1901M");
    assert_eq!(lines[0]["board"]["layout"], 1);
    assert_eq!(lines[0]["board"]["shape"], serde_json::json!([81, 35]));
    assert_eq!(
        lines[0]["prev_orders"]["shape"],
        serde_json::json!([81, 40])
    );
    let vocab: serde_json::Value = serde_json::from_str(&read(dir.path().join("v.json"))).unwrap();
    let texts = vocab["orders"].as_array().unwrap();
    let austria = lines[0]["orders"]["AUSTRIA"].as_array().unwrap();
    assert_eq!(austria.len(), 3);
    let named: Vec<&str> = austria
        .iter()
        .map(|i| texts[i.as_u64().unwrap() as usize].as_str().unwrap())
        .collect();
    let mut recorded: Vec<&str> = record.phases[0].orders[&nopress::Power::Austria]
        .iter()
        .map(|s| s.as_str())
        .collect();
    let mut decoded = named.clone();
    recorded.sort();
    decoded.sort();
    assert_eq!(decoded, recorded);
}
