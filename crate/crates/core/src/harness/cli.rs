//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::ScenarioError;
use crate::harness::dump::StateDump;
use crate::harness::legality::check_legal;
use crate::harness::metrics::{LegalWindow, MetricsDoc};
use crate::harness::runner::{run_closure, run_until_legal, RunConfig};
use crate::harness::scenario::{
    generate_initial_state, parse_keys, random_keys, CorruptionLevel, CorruptionScript,
};
use crate::label::BitLabel;
use crate::protocol::Shpt;
use crate::search::prefix_search_counted;
use crate::trie::ideal::IdealHpt;

#[derive(Debug, Parser)]
#[command(name = "shpt", version, about = "Self-stabilizing hashed Patricia trie simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corrupt one scenario and let the protocol repair it.
    Run(RunArgs),
    /// Run many seeds and summarize convergence.
    Sweep(SweepArgs),
    /// Stabilize, then answer prefix queries from a file.
    Query(QueryArgs),
    /// Check a saved state for legality.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct KeySource {
    /// File with one binary key per line.
    #[arg(long, conflicts_with_all = ["random_keys", "key_len"])]
    keys_file: Option<PathBuf>,
    /// Number of random keys.
    #[arg(long, requires = "key_len")]
    random_keys: Option<usize>,
    /// Maximum random key length in bits.
    #[arg(long)]
    key_len: Option<usize>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[command(flatten)]
    keys: KeySource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none, low, medium, high or strip.
    #[arg(long, default_value = "medium", conflicts_with = "script")]
    corruption: String,
    /// JSON corruption script.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    max_rounds: u64,
    #[arg(long, default_value_t = 8)]
    peers: usize,
    /// Require quiet channels in the legality check.
    #[arg(long)]
    strict_quiescence: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the metrics JSON here.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Write the final state here.
    #[arg(long)]
    dump_out: Option<PathBuf>,
    /// Extra rounds to run after convergence, checking legality each round.
    #[arg(long, default_value_t = 0)]
    closure_rounds: u64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long, default_value_t = 20)]
    runs: u64,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// File with one query bit string per line.
    #[arg(long)]
    queries: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// State dump written by `run --dump-out`.
    #[arg(long)]
    state: PathBuf,
    /// Also flag messages other than parent/child presentations.
    #[arg(long)]
    strict_quiescence: bool,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(ScenarioError::from)
}

fn load_keys(src: &KeySource, seed: u64) -> Result<Vec<BitLabel>, ScenarioError> {
    match (&src.keys_file, src.random_keys, src.key_len) {
        (Some(path), _, _) => parse_keys(&read(path)?),
        (None, Some(n), Some(len)) => random_keys(n, len, seed),
        _ => Err(ScenarioError::Malformed(
            "give --keys-file or --random-keys with --key-len".into(),
        )),
    }
}

fn load_script(args: &ScenarioArgs, seed: u64) -> Result<CorruptionScript, ScenarioError> {
    match &args.script {
        Some(path) => CorruptionScript::from_json(&read(path)?),
        None => Ok(CorruptionScript::from_level(args.corruption.parse::<CorruptionLevel>()?, seed)),
    }
}

fn config(args: &ScenarioArgs) -> RunConfig {
    RunConfig {
        max_rounds: args.max_rounds,
        strict: args.strict_quiescence,
        record_series: true,
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32, ScenarioError> {
    let sc = &args.scenario;
    let keys = load_keys(&sc.keys, sc.seed)?;
    let script = load_script(sc, sc.seed)?;
    let (mut sys, ideal) = generate_initial_state(&keys, &script, sc.peers, sc.seed)?;
    let mut protocol = Shpt::new();
    let stats = run_until_legal(&mut sys, &ideal, &mut protocol, config(sc));
    let mut doc = MetricsDoc::new(sc.seed, keys.len(), &sys, &stats);
    let mut ok = stats.converged;
    if ok && args.closure_rounds > 0 {
        let c = run_closure(&mut sys, &ideal, &mut protocol, args.closure_rounds, sc.strict_quiescence);
        ok = c.illegal_rounds == 0;
        doc.legal_window = Some(LegalWindow {
            rounds: c.rounds,
            max_reads_per_timeout: c.max_reads_per_timeout,
            max_msgs_per_timeout: c.max_msgs_per_timeout,
            stayed_legal: ok,
        });
    }
    println!(
        "converged: {} rounds_to_legal: {} nodes: {} (patricia {}, msd {})",
        stats.converged,
        stats.rounds_to_legal.map_or("-".to_string(), |r| r.to_string()),
        doc.total_nodes,
        doc.patricia_nodes,
        doc.msd_nodes
    );
    if let Some(path) = &args.metrics_out {
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    if let Some(path) = &args.dump_out {
        fs::write(path, StateDump::capture(&sys, &keys).to_json() + "\n")?;
    }
    if !stats.converged {
        eprintln!("not legal after {} rounds", stats.rounds_run);
        for v in stats.final_report.violations.iter().take(10) {
            eprintln!("  {} {:?}: {}", v.rule, v.label, v.description);
        }
    } else if !ok {
        eprintln!("state left the legal set during the closure window");
    }
    Ok(if ok { 0 } else { 1 })
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, ScenarioError> {
    let sc = &args.scenario;
    let seeds: Vec<u64> = (0..args.runs).map(|i| sc.seed + i).collect();
    let results: Vec<Result<(u64, Option<u64>), ScenarioError>> = seeds
        .par_iter()
        .map(|&seed| {
            let keys = load_keys(&sc.keys, seed)?;
            let script = load_script(sc, seed)?;
            let (mut sys, ideal) = generate_initial_state(&keys, &script, sc.peers, seed)?;
            let mut cfg = config(sc);
            cfg.record_series = false;
            let stats = run_until_legal(&mut sys, &ideal, &mut Shpt::new(), cfg);
            Ok((seed, stats.rounds_to_legal))
        })
        .collect();
    let mut rounds = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r? {
            (_, Some(n)) => rounds.push(n),
            (seed, None) => failed.push(seed),
        }
    }
    rounds.sort_unstable();
    let mean = rounds.iter().sum::<u64>() as f64 / rounds.len().max(1) as f64;
    println!(
        "runs: {} converged: {} failed: {}",
        args.runs,
        rounds.len(),
        failed.len()
    );
    if !rounds.is_empty() {
        println!(
            "rounds_to_legal min: {} median: {} mean: {:.1} max: {}",
            rounds[0],
            rounds[rounds.len() / 2],
            mean,
            rounds[rounds.len() - 1]
        );
    }
    if !failed.is_empty() {
        eprintln!("failed seeds: {failed:?}");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_query(args: &QueryArgs) -> Result<i32, ScenarioError> {
    let sc = &args.scenario;
    let keys = load_keys(&sc.keys, sc.seed)?;
    let script = load_script(sc, sc.seed)?;
    let mut queries: Vec<BitLabel> = Vec::new();
    for (i, line) in read(&args.queries)?.lines().enumerate() {
        let line = line.trim();
        // ε is written out; blank lines are skipped
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x = line.parse().map_err(|_| ScenarioError::KeysFile {
            line: i + 1,
            message: format!("{line:?} is not a binary string"),
        })?;
        queries.push(x);
    }
    let (mut sys, ideal) = generate_initial_state(&keys, &script, sc.peers, sc.seed)?;
    let mut cfg = config(sc);
    cfg.strict = true;
    let stats = run_until_legal(&mut sys, &ideal, &mut Shpt::new(), cfg);
    if !stats.converged {
        eprintln!("not legal after {} rounds; refusing to answer queries", stats.rounds_run);
        return Ok(1);
    }
    let mut mismatches = 0;
    for x in &queries {
        let best = best_lcp(&ideal, x);
        match prefix_search_counted(&mut sys, x) {
            (Ok(k), reads) => {
                println!("{x} {k} {reads}");
                if k.lcp_len(x) != best {
                    eprintln!("mismatch for {x}: {k} shares {} bits, best is {best}", k.lcp_len(x));
                    mismatches += 1;
                }
            }
            (Err(e), _) => {
                eprintln!("query {x} failed: {e}");
                mismatches += 1;
            }
        }
    }
    Ok(if mismatches == 0 { 0 } else { 1 })
}

fn best_lcp(ideal: &IdealHpt, x: &BitLabel) -> usize {
    ideal.keys().iter().map(|k| k.lcp_len(x)).max().unwrap_or(0)
}

fn cmd_check(args: &CheckArgs) -> Result<i32, ScenarioError> {
    let dump = StateDump::from_json(&read(&args.state)?)?;
    let ideal = IdealHpt::build(&dump.keys)?;
    let sys = dump.restore();
    let report = check_legal(&sys, &ideal, args.strict_quiescence);
    println!("legal: {}", report.legal);
    for v in &report.violations {
        let label = v.label.as_ref().map_or("-".to_string(), |l| l.to_string());
        println!("violation {} {}: {}", v.rule, label, v.description);
    }
    Ok(if report.legal { 0 } else { 1 })
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Query(a) => cmd_query(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
