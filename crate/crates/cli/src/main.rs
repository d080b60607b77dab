//! `nopress`: adjudicate scenarios, play and rate bots, analyse and export records.

mod config;
mod records;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nopress::analysis::{
    accuracy_metrics, coalition_metrics, dataset_stats, gold_orders, CoalitionReport, PowerOrders,
};
use nopress::bots::{play_game, Agent, AgentSpec};
use nopress::features::{encode_record, OrderVocabulary, LAYOUT_VERSION};
use nopress::game::{Outcome, Rules};
use nopress::record::{ingest, ResultEntry, StateSnapshot};
use nopress::scenario::{parse_scenarios, resolve, run_scenario};
use nopress::tournament::{run_1v6, run_pool, seat_seed};
use nopress::{standard_map, Power};

use config::Config;

#[derive(Parser)]
#[command(
    name = "nopress",
    version,
    about = "No Press Diplomacy engine, bots and evaluation tools"
)]
struct Cli {
    /// TOML file with option defaults; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve the phase of every case in a scenario file
    Adjudicate(AdjudicateArgs),
    /// Play games between bots or external agents and write their records
    Play(PlayArgs),
    /// Run a 1-vs-6 comparison or a rated pool tournament
    Tournament(TournamentArgs),
    /// Compute coalition, accuracy or dataset metrics over records
    Analyze(AnalyzeArgs),
    /// Re-validate records and report divergences
    Ingest(IngestArgs),
    /// Export board and previous-order tensors of a record
    Encode(EncodeArgs),
    /// Serve a built-in bot over the agent protocol
    #[command(hide = true)]
    Agent(AgentArgs),
}

#[derive(Args)]
struct AdjudicateArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct RuleArgs {
    /// Last game year before the game is drawn
    #[arg(long)]
    year_cap: Option<u16>,
    /// Centers needed for a solo victory
    #[arg(long)]
    solo_centers: Option<usize>,
}

impl RuleArgs {
    fn rules(&self, cfg: &Config) -> Rules {
        let d = Rules::default();
        Rules {
            year_cap: self.year_cap.or(cfg.year_cap).unwrap_or(d.year_cap),
            solo_centers: self
                .solo_centers
                .or(cfg.solo_centers)
                .unwrap_or(d.solo_centers),
        }
    }
}

#[derive(Args)]
struct PlayArgs {
    /// Agent spec (random, greedy, dumbbot, hold, cmd:PROGRAM, tcp:HOST:PORT);
    /// give one for all seats or seven in power order
    #[arg(short, long = "agent")]
    agents: Vec<String>,
    /// Number of games
    #[arg(short = 'n', long)]
    games: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the records
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    rules: RuleArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "1v6")]
    OneVsSix,
    Pool,
}

#[derive(Args)]
struct TournamentArgs {
    #[arg(value_enum)]
    mode: Mode,
    /// Agent specs: the single agent and its opponent for 1v6, the pool otherwise
    #[arg(short, long = "agent")]
    agents: Vec<String>,
    #[arg(short = 'n', long)]
    games: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the table here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pool mode: write every agent's sigma after each game to this CSV file
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    rules: RuleArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Coalition,
    Stats,
    Accuracy,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    metric: Metric,
    /// Record files, directories or glob patterns
    #[arg(required = true)]
    records: Vec<String>,
    /// Accuracy: JSON list of predicted orders aligned with the records' orders
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Coalition: label of the CSV row
    #[arg(long, default_value = "records")]
    variant: String,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(required = true)]
    records: Vec<String>,
    /// Write the regenerated records to this directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    record: PathBuf,
    /// Write one JSON line per phase here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the order vocabulary to this JSON file
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct AgentArgs {
    #[arg(long, default_value = "dumbbot")]
    bot: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Listen on this TCP address instead of standard streams
    #[arg(long)]
    listen: Option<String>,
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => std::process::ExitCode::SUCCESS,
        Ok(false) => std::process::ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::from(2)
        }
    }
}

/// Runs a command; `Ok(false)` means it completed but found failures.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Adjudicate(a) => adjudicate(a),
        Command::Play(a) => play(a, &cfg).map(|_| true),
        Command::Tournament(a) => tournament(a, &cfg).map(|_| true),
        Command::Analyze(a) => analyze(a, &cfg).map(|_| true),
        Command::Ingest(a) => ingest_records(a),
        Command::Encode(a) => encode(a).map(|_| true),
        Command::Agent(a) => agent(a).map(|_| true),
    }
}

fn parse_specs(list: &[String]) -> anyhow::Result<Vec<AgentSpec>> {
    list.iter()
        .map(|s| s.parse::<AgentSpec>().map_err(anyhow::Error::msg))
        .collect()
}

fn agents_or_config(flags: &[String], cfg: &Config) -> anyhow::Result<Vec<AgentSpec>> {
    let list = if flags.is_empty() {
        cfg.agents.clone().unwrap_or_default()
    } else {
        flags.to_vec()
    };
    parse_specs(&list)
}

fn format_or_config(flag: Option<Format>, cfg: &Config, default: Format) -> anyhow::Result<Format> {
    match (flag, &cfg.format) {
        (Some(f), _) => Ok(f),
        (None, Some(s)) => {
            Format::from_str(s, true).map_err(|e| anyhow::anyhow!("config format: {e}"))
        }
        (None, None) => Ok(default),
    }
}

fn adjudicate(args: AdjudicateArgs) -> anyhow::Result<bool> {
    let map = standard_map();
    let text = records::read(&args.file)?;
    let scenarios =
        parse_scenarios(map, &text).with_context(|| format!("{}", args.file.display()))?;
    let mut ok = true;
    let mut reports = Vec::new();
    for sc in &scenarios {
        let resolved = resolve(map, sc).with_context(|| format!("case `{}`", sc.name))?;
        let failures = if sc.has_checks() {
            run_scenario(map, sc).failures
        } else {
            Vec::new()
        };
        ok &= failures.is_empty();
        let results: Vec<ResultEntry> = resolved
            .resolution
            .verdicts
            .iter()
            .map(|v| ResultEntry::from_verdict(map, v))
            .collect();
        let rejected: Vec<ResultEntry> = resolved
            .rejected
            .iter()
            .map(|(p, o, r)| ResultEntry::invalid(map, *p, o, *r))
            .collect();
        let next = StateSnapshot::of(map, &resolved.resolution.next);
        let no_changes = resolved.no_changes(&sc.state);
        if args.format == Format::Json {
            reports.push(serde_json::json!({
                "case": sc.name,
                "phase": sc.state.phase().code(),
                "results": results,
                "rejected": rejected,
                "no_changes": no_changes,
                "next": next,
                "failures": failures,
            }));
            continue;
        }
        println!("case {} ({})", sc.name, sc.state.phase().code());
        for r in results.iter().chain(&rejected) {
            let mut line = format!("  {} {}: {}", r.power, r.order, r.result);
            if r.defaulted {
                line.push_str(" (default)");
            }
            if r.dislodged && r.result != "dislodged" {
                line.push_str(", unit dislodged");
            }
            println!("{line}");
        }
        if no_changes {
            println!("  no changes");
        }
        for d in &next.dislodged {
            let from = d.from.as_deref().unwrap_or("a convoy");
            println!("  dislodged: {} {} (attacked from {from})", d.power, d.unit);
        }
        if !next.standoffs.is_empty() {
            println!("  standoffs: {}", next.standoffs.join(" "));
        }
        println!("  next phase: {}", next.phase);
        if sc.has_checks() {
            if failures.is_empty() {
                println!("  checks: pass");
            } else {
                for f in &failures {
                    println!("  check failed: {f}");
                }
            }
        }
    }
    if args.format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    }
    Ok(ok)
}

fn seat_specs(specs: Vec<AgentSpec>) -> anyhow::Result<Vec<AgentSpec>> {
    match specs.len() {
        1 => Ok(vec![specs[0].clone(); 7]),
        7 => Ok(specs),
        0 => bail!("no agents given (use --agent or `agents` in the config)"),
        n => bail!("{n} agents given; need one for all seats or seven"),
    }
}

fn describe(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Ongoing => "unfinished".into(),
        Outcome::Solo { winner } => format!("solo by {winner}"),
        Outcome::Draw { survivors } => {
            let names: Vec<String> = survivors.iter().map(|p| p.to_string()).collect();
            format!("draw among {}", names.join(" "))
        }
    }
}

fn play(args: PlayArgs, cfg: &Config) -> anyhow::Result<()> {
    let map = standard_map();
    let specs = seat_specs(agents_or_config(&args.agents, cfg)?)?;
    let games = args.games.or(cfg.games).unwrap_or(1);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = args
        .out
        .or(cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("games"));
    let rules = args.rules.rules(cfg);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for g in 0..games {
        let mut agents: Vec<Box<dyn Agent>> = specs
            .iter()
            .enumerate()
            .map(|(s, spec)| spec.build(seat_seed(seed, g, s)))
            .collect();
        let record = play_game(map, rules, &mut agents);
        for (power, a) in Power::ALL.iter().zip(&agents) {
            if a.substitutions() > 0 {
                log::warn!(
                    "game {g}: {power} ({}) fell back to defaults {} times",
                    a.name(),
                    a.substitutions()
                );
            }
        }
        let path = out.join(format!("game-{g:04}.json"));
        std::fs::write(&path, record.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
        println!(
            "{}: {} phases, {}",
            path.display(),
            record.phases.len(),
            describe(&record.outcome)
        );
    }
    Ok(())
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tournament(args: TournamentArgs, cfg: &Config) -> anyhow::Result<()> {
    let map = standard_map();
    let specs = agents_or_config(&args.agents, cfg)?;
    let games = args.games.or(cfg.games).unwrap_or(100);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let rules = args.rules.rules(cfg);
    let format = format_or_config(args.format, cfg, Format::Csv)?;
    let text = match args.mode {
        Mode::OneVsSix => {
            let [a, b] = specs.as_slice() else {
                bail!("1v6 needs exactly two agents: the single agent and its opponent");
            };
            let t = run_1v6(map, rules, a, b, games, seed);
            eprintln!(
                "chi-square {:.3} on {} df, p = {:.4}",
                t.chi_square, t.degrees_of_freedom, t.p_value
            );
            match format {
                Format::Json => serde_json::to_string_pretty(&t)? + "\n",
                _ => t.to_csv(),
            }
        }
        Mode::Pool => {
            if specs.len() < 2 {
                bail!("a pool needs at least two agents");
            }
            let report = run_pool(map, rules, &specs, games, seed);
            if let Some(p) = &args.trace {
                std::fs::write(p, report.trace_csv())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            match format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                _ => report.ratings_csv(),
            }
        }
    };
    write_output(args.out.as_deref(), &text)
}

fn analyze(args: AnalyzeArgs, cfg: &Config) -> anyhow::Result<()> {
    let map = standard_map();
    let paths = records::expand(&args.records)?;
    let loaded = records::load_all(&paths)?;
    if loaded.is_empty() {
        bail!("no records could be read");
    }
    match args.metric {
        Metric::Coalition => {
            let report = coalition_metrics(map, &loaded);
            match format_or_config(args.format, cfg, Format::Csv)? {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                _ => {
                    println!("{}", CoalitionReport::CSV_HEADER);
                    println!("{}", report.csv_row(&args.variant));
                }
            }
            if report.rejected > 0 {
                log::warn!(
                    "{} records did not replay and were left out",
                    report.rejected
                );
            }
        }
        Metric::Stats => {
            let stats = dataset_stats(map, &loaded);
            if format_or_config(args.format, cfg, Format::Text)? == Format::Json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
                return Ok(());
            }
            println!("{} finished games ({} skipped)", stats.games, stats.skipped);
            println!(
                "{:<8} {:>7} {:>7} {:>9} {:>7}",
                "power", "win %", "draw %", "defeat %", "lost %"
            );
            for s in &stats.per_power {
                println!(
                    "{:<8} {:>7.1} {:>7.1} {:>9.1} {:>7.1}",
                    s.power.to_string(),
                    s.win,
                    s.draw,
                    s.defeated,
                    s.lost
                );
            }
            println!("survival % of each column power in games the row power won or drew");
            let head: Vec<String> = Power::ALL
                .iter()
                .map(|p| format!("{:>8}", p.to_string()))
                .collect();
            println!("{:<8}{}", "", head.join(""));
            for (p, row) in Power::ALL.iter().zip(&stats.survival) {
                let cells: Vec<String> = row
                    .iter()
                    .map(|c| c.map_or_else(|| format!("{:>8}", "-"), |v| format!("{v:>8.1}")))
                    .collect();
                println!("{:<8}{}", p.to_string(), cells.join(""));
            }
        }
        Metric::Accuracy => {
            let Some(pred_path) = &args.predictions else {
                bail!("accuracy needs --predictions");
            };
            let predictions: Vec<PowerOrders> = serde_json::from_str(&records::read(pred_path)?)
                .with_context(|| format!("parsing {}", pred_path.display()))?;
            let gold: Vec<PowerOrders> = loaded.iter().flat_map(gold_orders).collect();
            let report = accuracy_metrics(map, &predictions, &gold)?;
            if format_or_config(args.format, cfg, Format::Text)? == Format::Json {
                println!("{}", serde_json::to_string_pretty(&report)?);
                return Ok(());
            }
            let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.2}", 100.0 * x));
            println!(
                "unit accuracy {} % ({}/{})",
                pct(report.unit_accuracy),
                report.unit_correct,
                report.unit_orders
            );
            println!(
                "all-orders accuracy {} % ({}/{})",
                pct(report.all_orders_accuracy),
                report.sets_correct,
                report.order_sets
            );
            for b in &report.support_by_position {
                let acc = (b.total > 0).then(|| b.correct as f64 / b.total as f64);
                println!(
                    "support at position {}: {} % of {}",
                    b.position,
                    pct(acc),
                    b.total
                );
            }
        }
    }
    Ok(())
}

fn ingest_records(args: IngestArgs) -> anyhow::Result<bool> {
    let map = standard_map();
    let paths = records::expand(&args.records)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut all_ok = true;
    for path in &paths {
        match ingest(map, &records::read(path)?) {
            Ok(report) => {
                println!(
                    "{}: ok, {} phases, {} divergences",
                    path.display(),
                    report.record.phases.len(),
                    report.notes.len()
                );
                for n in &report.notes {
                    println!("  {} {} `{}`: {}", n.phase, n.power, n.order, n.reason);
                }
                if let Some(dir) = &args.out {
                    let name = path.file_name().context("record path has no file name")?;
                    std::fs::write(dir.join(name), report.record.to_json())?;
                }
            }
            Err(e) => {
                all_ok = false;
                println!("{}: rejected: {e}", path.display());
            }
        }
    }
    Ok(all_ok)
}

fn encode(args: EncodeArgs) -> anyhow::Result<()> {
    let map = standard_map();
    let record = nopress::record::GameRecord::from_json(&records::read(&args.record)?)
        .with_context(|| format!("{}", args.record.display()))?;
    let vocab = OrderVocabulary::new(map);
    let phases = encode_record(map, &vocab, &record)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => {
            Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for ph in &phases {
        serde_json::to_writer(&mut w, ph)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    if let Some(p) = &args.vocab {
        let doc = serde_json::json!({ "layout": LAYOUT_VERSION, "orders": vocab.texts(map) });
        std::fs::write(p, serde_json::to_string(&doc)?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn agent(args: AgentArgs) -> anyhow::Result<()> {
    let map = standard_map();
    let spec: AgentSpec = args.bot.parse().map_err(anyhow::Error::msg)?;
    if matches!(spec, AgentSpec::Command(_) | AgentSpec::Connect(_)) {
        bail!("only built-in bots can be served");
    }
    let Some(addr) = args.listen else {
        let mut bot = spec.build(args.seed);
        let stdin = std::io::stdin().lock();
        return Ok(nopress::protocol::serve(
            map,
            bot.as_mut(),
            stdin,
            std::io::stdout().lock(),
        )?);
    };
    let listener = std::net::TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    for (i, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let mut bot = spec.build(args.seed.wrapping_add(i as u64));
        let reader = std::io::BufReader::new(stream.try_clone()?);
        std::thread::spawn(move || {
            if let Err(e) = nopress::protocol::serve(map, bot.as_mut(), reader, stream) {
                log::warn!("session ended: {e}");
            }
        });
    }
    Ok(())
}
