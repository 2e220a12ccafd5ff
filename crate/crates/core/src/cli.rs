//! Command-line front end: `bench`, `optimize`, `inspect` and `verify`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::agent::{encode_2pl, encode_asocc, encode_ic3, encode_occ, AgentFunction, DetectionMode};
use crate::engine::Mode;
use crate::executor::{evaluate_score, run, Engine, RunConfig, RunReport};
use crate::features::{default_selector, Feature, FeatureSelector, FeatureSpec, FEATURE_COUNT};
use crate::optimizer::{run_drift_demo, run_pipeline, DriftDemoConfig, PipelineConfig};
use crate::oracle::{check_commit_dag_acyclic, check_serializable, RecordLevel};
use crate::workload::{parse_config, StaticWorkload, TpccConfig, WorkloadConfig, YcsbConfig};

#[derive(Parser, Debug)]
#[command(name = "learned-cc", version, about = "Learned concurrency control engine and optimizer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one agent function and write its throughput timeline.
    Bench(BenchArgs),
    /// Search for an agent function within a time budget.
    Optimize(OptimizeArgs),
    /// Print a saved table.
    Inspect(InspectArgs),
    /// Run a fixed number of transactions with full recording and check
    /// the history.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Occ,
    #[value(name = "2pl")]
    TwoPl,
    Ic3,
    Asocc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Stored,
    Interactive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Stored => Mode::StoredProcedure,
            ModeArg::Interactive => Mode::Interactive,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct WorkloadArgs {
    /// Config file, or one of the presets ycsb1..ycsb4 and tpcc.
    #[arg(long, short)]
    pub workload: String,
    #[arg(long, value_enum, default_value = "stored")]
    pub mode: ModeArg,
    /// Worker threads; defaults to the config's value.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct FunctionArgs {
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Table written by `optimize`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, default_value_t = 5.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 1.0)]
    pub warmup: f64,
    /// Record the run and check it; failure exits nonzero.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// Starting function; IC3 for stored procedures, 2PL for interactive.
    #[arg(long, value_enum)]
    pub init: Option<Baseline>,
    /// Total optimization budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    pub budget: f64,
    /// Measurement length of one candidate evaluation, in milliseconds.
    #[arg(long, default_value_t = 500)]
    pub eval_ms: u64,
    /// Three load phases (1, 16, 4 threads) with drift-triggered restarts.
    #[arg(long)]
    pub drift_demo: bool,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    pub table: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub function: FunctionArgs,
    #[arg(long, default_value_t = 10_000)]
    pub txns: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("oracle failure: {0}")]
    Oracle(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn preset(name: &str) -> Option<WorkloadConfig> {
    match name {
        "ycsb1" | "ycsb2" | "ycsb3" | "ycsb4" => {
            let p = name[4..].parse().ok()?;
            Some(WorkloadConfig::ycsb(YcsbConfig::pattern(p), 16))
        }
        "tpcc" => Some(WorkloadConfig::tpcc(TpccConfig::default(), 8)),
        _ => None,
    }
}

pub fn load_workload(spec: &str) -> Result<WorkloadConfig, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        return parse_config(&text).map_err(|e| CliError::Config(format!("{spec}: {e}")));
    }
    preset(spec).ok_or_else(|| CliError::Config(format!("{spec}: no such file or preset")))
}

/// Selector used for baselines: type, position and relative age, plus key
/// hotness for the hotness-adaptive encoding.
pub fn baseline_selector(statics: &StaticWorkload, b: Baseline) -> FeatureSelector {
    let mut sel = default_selector(statics.n_types() as u16, statics.max_ops());
    if b == Baseline::Asocc {
        let mut features = [FeatureSpec::excluded(); FEATURE_COUNT];
        features[Feature::KeyHotness.index()] = FeatureSpec::linear(4, 0.0, 64.0);
        sel = FeatureSelector::new(9, features).expect("four states");
    }
    sel
}

pub fn baseline_function(statics: &StaticWorkload, b: Baseline) -> AgentFunction {
    let sel = Arc::new(baseline_selector(statics, b));
    let n = statics.n_types();
    match b {
        Baseline::Occ => encode_occ(sel, n),
        Baseline::TwoPl => encode_2pl(sel, n).expect("selector has relative age"),
        Baseline::Ic3 => encode_ic3(sel, statics),
        Baseline::Asocc => encode_asocc(sel, n, 0, 3).expect("selector has key hotness"),
    }
}

/// A table file holds the selector it is keyed by, then the table.
pub fn table_file_text(f: &AgentFunction) -> String {
    f.selector().to_text() + &f.to_text()
}

pub fn parse_table_file(text: &str) -> Result<AgentFunction, String> {
    let at = text
        .find("ccaalf-table")
        .ok_or("missing `ccaalf-table` header")?;
    let sel = FeatureSelector::from_text(&text[..at]).map_err(|e| e.to_string())?;
    AgentFunction::from_text(&text[at..], Arc::new(sel)).map_err(|e| e.to_string())
}

pub fn read_table(path: &Path) -> Result<AgentFunction, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_table_file(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn resolve_function(f: &FunctionArgs, statics: &StaticWorkload) -> Result<AgentFunction, CliError> {
    match (&f.baseline, &f.table) {
        (Some(b), None) => Ok(baseline_function(statics, *b)),
        (None, Some(p)) => {
            let func = read_table(p)?;
            if func.n_types() != statics.n_types() {
                return Err(CliError::Config(format!(
                    "table has {} types, workload has {}",
                    func.n_types(),
                    statics.n_types()
                )));
            }
            Ok(func)
        }
        _ => Err(CliError::Config("give exactly one of --baseline and --table".into())),
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let p = dir.join(name);
    fs::write(&p, text).map_err(io_err(&p))?;
    Ok(p)
}

/// `ts,throughput` per sampling period.
pub fn timeline_csv(r: &RunReport) -> String {
    let mut s = String::from("ts,throughput\n");
    for (t, v) in &r.timeline {
        let _ = writeln!(s, "{t:.3},{v:.1}");
    }
    s
}

/// Action histogram and per-row listing of a table.
pub fn render_table(f: &AgentFunction) -> String {
    let mut s = String::new();
    let sel = f.selector();
    let names: Vec<&str> = sel.included().map(|x| x.name()).collect();
    let _ = writeln!(
        s,
        "selector {} over [{}], {} states, {} explicit rows, {} types",
        sel.id,
        names.join(", "),
        f.key_count(),
        f.row_count(),
        f.n_types()
    );
    let mut hist = [0usize; 3];
    let mut expose = 0;
    let mut blocking = 0;
    let mut rows: Vec<(String, &crate::agent::Action)> = vec![("*".into(), f.default_action())];
    rows.extend(f.rows().map(|(k, a)| {
        let b: Vec<String> = sel.decompose(k).iter().map(u32::to_string).collect();
        (b.join(","), a)
    }));
    for (_, a) in &rows {
        hist[DetectionMode::ALL.iter().position(|m| *m == a.detection).unwrap_or(0)] += 1;
        expose += a.expose as usize;
        blocking += a.timeout_us.is_infinite() as usize;
    }
    let _ = writeln!(s, "rows by detection:");
    for (m, n) in DetectionMode::ALL.iter().zip(hist) {
        let _ = writeln!(s, "  {m:?}: {n}");
    }
    let _ = writeln!(s, "expose: {expose}, blocking timeouts: {blocking}");
    let _ = writeln!(s, "backoff us: {:?}", f.backoffs());
    let _ = writeln!(s, "{:>14}  {:<15} {:>10} {:>8} {:>6}  waits", names.join(","), "detection", "timeout", "priority", "expose");
    for (k, a) in rows {
        let t = if a.timeout_us.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.0}", a.timeout_us)
        };
        let _ = writeln!(
            s,
            "{k:>14}  {:<15} {t:>10} {:>8.3} {:>6}  {:?}",
            format!("{:?}", a.detection),
            a.priority,
            a.expose,
            a.waits
        );
    }
    s
}

fn check_history(engine: &Engine, out: &Path) -> Result<(), CliError> {
    let h = engine.take_history();
    let res = check_serializable(&h).and_then(|_| check_commit_dag_acyclic(&h));
    match res {
        Ok(()) => {
            println!("oracle: {} committed transactions serializable", h.txns.len());
            Ok(())
        }
        Err(e) => {
            let p = write_out(out, "history.txt", &h.dump())?;
            Err(CliError::Oracle(format!("{e} (history in {})", p.display())))
        }
    }
}

fn threads(w: &WorkloadArgs, cfg: &WorkloadConfig) -> usize {
    w.threads.unwrap_or(cfg.threads).max(1)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let wc = load_workload(&a.workload.workload)?;
    let w = wc.build();
    let f = resolve_function(&a.function, &w.static_ops())?;
    let mut engine = Engine::for_workload(w.as_ref(), f);
    if a.verify {
        engine = engine.with_recording(RecordLevel::Full);
    }
    let engine = Arc::new(engine);
    let rc = RunConfig {
        mode: a.workload.mode.into(),
        seed: a.workload.seed,
        sample_every: Some(Duration::from_millis(100)),
        ..RunConfig::timed(
            threads(&a.workload, &wc),
            Duration::from_secs_f64(a.warmup),
            Duration::from_secs_f64(a.seconds),
        )
    };
    let r = run(&engine, &w, &rc);
    write_out(&a.workload.out, "throughput.csv", &timeline_csv(&r))?;
    let summary = format!("{}\n{}\n", r.score.csv_header(), r.score.csv_row(r.score.duration));
    write_out(&a.workload.out, "summary.csv", &summary)?;
    println!(
        "throughput {:.1} txn/s, abort rate {:.3}, {} commits{}",
        r.score.throughput,
        r.score.abort_rate,
        r.score.commits,
        if r.stalled { " (stalled)" } else { "" }
    );
    for t in &r.score.per_type {
        println!("  {:<12} {:>10.1} txn/s {:>8} aborts", t.name, t.throughput, t.aborts);
    }
    if a.verify {
        check_history(&engine, &a.workload.out)?;
    }
    Ok(())
}

pub fn cmd_optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let wc = load_workload(&a.workload.workload)?;
    let w = wc.build();
    let statics = w.static_ops();
    let mode: Mode = a.workload.mode.into();
    let init = a.init.unwrap_or(match mode {
        Mode::StoredProcedure => Baseline::Ic3,
        Mode::Interactive => Baseline::TwoPl,
    });
    let initial = baseline_function(&statics, init);
    let eval = RunConfig {
        mode,
        seed: a.workload.seed,
        ..RunConfig::timed(
            threads(&a.workload, &wc),
            Duration::from_millis(a.eval_ms / 4),
            Duration::from_millis(a.eval_ms),
        )
    };
    let pcfg = PipelineConfig {
        seed: a.workload.seed,
        ..PipelineConfig::with_budget(Duration::from_secs_f64(a.budget))
    };
    if a.drift_demo {
        let cfg = DriftDemoConfig {
            pipeline: pcfg,
            eval,
            ..Default::default()
        };
        let report = run_drift_demo(&w, initial, &cfg);
        for l in &report.log {
            println!("{l}");
        }
        let mut s = String::from("phase,window,throughput\n");
        for (p, i, t) in &report.windows {
            let _ = writeln!(s, "{p},{i},{t:.1}");
        }
        write_out(&a.workload.out, "throughput.csv", &s)?;
        return Ok(());
    }
    let engine = Arc::new(Engine::for_workload(w.as_ref(), initial.clone()));
    let started = Instant::now();
    let res = run_pipeline(&statics, initial, &pcfg, &mut |f| {
        evaluate_score(&engine, &w, f.clone(), &eval).throughput
    });
    write_out(&a.workload.out, "optlog.csv", &res.log.to_csv())?;
    let p = write_out(&a.workload.out, "table.ccaalf", &table_file_text(&res.best))?;
    println!(
        "initial {:.1} txn/s, best {:.1} txn/s after {} evaluations; time to best {:.1}s of {:.1}s; stages completed {:?}",
        res.initial_score,
        res.best_score,
        res.records.len(),
        res.time_to_best,
        started.elapsed().as_secs_f64(),
        res.stages_completed
    );
    println!("table written to {}", p.display());
    Ok(())
}

pub fn cmd_inspect(a: &InspectArgs) -> Result<(), CliError> {
    let f = read_table(&a.table)?;
    print!("{}", render_table(&f));
    Ok(())
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let wc = load_workload(&a.workload.workload)?;
    let w = wc.build();
    let f = resolve_function(&a.function, &w.static_ops())?;
    let engine = Arc::new(Engine::for_workload(w.as_ref(), f).with_recording(RecordLevel::Full));
    let rc = RunConfig {
        mode: a.workload.mode.into(),
        ..RunConfig::counted(threads(&a.workload, &wc), a.txns, a.workload.seed)
    };
    let r = run(&engine, &w, &rc);
    if r.stalled {
        log::warn!("run stalled at least once");
    }
    check_history(&engine, &a.workload.out)
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Bench(a) => cmd_bench(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Entry point of the binary; log verbosity comes from `RUST_LOG`.
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn table_file_round_trips() {
        let w = preset("tpcc").unwrap().build();
        let f = baseline_function(&w.static_ops(), Baseline::Ic3);
        let back = parse_table_file(&table_file_text(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn occ_table_has_only_the_default_row() {
        let w = preset("ycsb1").unwrap().build();
        let f = baseline_function(&w.static_ops(), Baseline::Occ);
        let s = render_table(&f);
        assert!(s.contains("0 explicit rows"), "{s}");
        assert!(s.contains("NoDetection: 1"), "{s}");
    }

    #[test]
    fn baseline_and_table_are_exclusive() {
        let r = Cli::try_parse_from(["learned-cc", "bench", "-w", "ycsb1", "--baseline", "occ", "--table", "x"]);
        assert!(r.is_err());
        let r = Cli::try_parse_from(["learned-cc", "bench", "-w", "ycsb1"]);
        assert!(r.is_err());
    }
}
