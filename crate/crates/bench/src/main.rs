use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flate2::write::GzEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde::Serialize;

use subopt_bench::instance::{parse_constraint, parse_objective};
use subopt_bench::record::{write_csv, write_jsonl};
use subopt_bench::runner::{run_algorithm, run_bench, AlgoSpec, BenchPlan, Preset, RunOptions};
use subopt_bench::{BenchError, BenchRecord, InstanceSpec, Result};
use subopt_core::exhaustive::{brute_force_opt, BRUTE_FORCE_LIMIT};
use subopt_core::sampling::TraceEvent;
use subopt_core::ElementId;

#[derive(Parser)]
#[command(
    name = "subopt",
    version,
    about = "Low-adaptivity submodular maximization benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one instance for a range of seeds.
    Run(RunArgs),
    /// Run a JSON plan of cells.
    Bench(BenchArgs),
    /// Exhaustive optimum of a small instance.
    Brute(InstanceArgs),
    /// Write the JSON spec of an instance and summarize it.
    Gen(GenArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// JSON instance spec; replaces the other instance flags.
    #[arg(long, conflicts_with_all = ["objective", "constraint", "n"])]
    instance: Option<PathBuf>,
    /// e.g. `coverage`, `cut:0.3`, `logdet`, `entropy:4`, `stations:PATH`.
    #[arg(long)]
    objective: Option<String>,
    /// e.g. `uniform:5`, `partition:4:2`, `intersection:2:4:2`, `group-cap:3:8:2`.
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[arg(long)]
    id: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    RepSampling,
    Greedy,
    RepeatedGreedy,
    SampleGreedy,
}

#[derive(Args)]
struct OutputArgs {
    /// Results CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines mirror; defaults to the CSV path with a `.jsonl` extension.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Write 0 for every wall time, for byte-identical reruns.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "rep-sampling")]
    algo: Algo,
    #[arg(long, value_enum, default_value = "p-system")]
    preset: Preset,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    phi1: Option<f64>,
    #[arg(long)]
    phi2: Option<f64>,
    /// Overrides the constraint's declared p.
    #[arg(long)]
    p: Option<usize>,
    /// Passes of repeated greedy.
    #[arg(long)]
    iterations: Option<usize>,
    /// Keep probability of sample greedy.
    #[arg(long)]
    probability: Option<f64>,
    /// First algorithm seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Maximum number of value queries per run.
    #[arg(long)]
    budget: Option<u64>,
    /// Trace of every run as JSON lines (gzip when the path ends in `.gz`).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON plan: `{"cells": [{"instance": ..., "algorithm": ..., "seeds": [...]}]}`.
    #[arg(long)]
    plan: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Spec destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BenchError::io(path, e))
}

impl InstanceArgs {
    fn spec(&self) -> Result<InstanceSpec> {
        if let Some(path) = &self.instance {
            return InstanceSpec::from_json(&read_text(path)?);
        }
        let objective = self
            .objective
            .as_deref()
            .ok_or_else(|| BenchError::config("--objective", "required without --instance"))?;
        let constraint = self
            .constraint
            .as_deref()
            .ok_or_else(|| BenchError::config("--constraint", "required without --instance"))?;
        let spec = InstanceSpec {
            id: self.id.clone(),
            n: self.n,
            seed: self.instance_seed,
            objective: parse_objective(objective)?,
            constraint: parse_constraint(constraint)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RunArgs {
    fn algo(&self) -> AlgoSpec {
        match self.algo {
            Algo::RepSampling => AlgoSpec::RepSampling {
                preset: self.preset,
                epsilon: self.epsilon,
                m: self.m,
                phi1: self.phi1,
                phi2: self.phi2,
                p: self.p,
            },
            Algo::Greedy => AlgoSpec::Greedy,
            Algo::RepeatedGreedy => AlgoSpec::RepeatedGreedy {
                iterations: self.iterations,
            },
            Algo::SampleGreedy => AlgoSpec::SampleGreedy {
                probability: self.probability,
            },
        }
    }
}

fn emit(output: &OutputArgs, records: &[BenchRecord]) -> Result<()> {
    match &output.out {
        Some(path) => {
            let mut w = create(path)?;
            write_csv(&mut w, records)?;
            w.flush().map_err(|e| BenchError::io(path, e))?;
        }
        None => write_csv(io::stdout().lock(), records)?,
    }
    let jsonl = output
        .jsonl
        .clone()
        .or_else(|| output.out.as_ref().map(|p| p.with_extension("jsonl")));
    if let Some(path) = jsonl {
        let mut w = create(&path)?;
        write_jsonl(&mut w, records)?;
        w.flush().map_err(|e| BenchError::io(&path, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    seed: u64,
    #[serde(flatten)]
    event: &'a TraceEvent,
}

fn trace_writer(path: &Path) -> Result<Box<dyn Write>> {
    let file = create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzEncoder::new(file, Compression::default())))
    } else {
        Ok(Box::new(file))
    }
}

/// Exit status of a finished command.
enum Status {
    Ok,
    Partial,
}

fn cmd_run(args: &RunArgs) -> Result<Status> {
    let instance = args.instance.spec()?.build()?;
    for note in &instance.notes {
        eprintln!("note: {note}");
    }
    let algo = args.algo();
    let params = algo.params_string(instance.system.p(), args.budget)?;
    let seeds: Vec<u64> = (0..args.trials).map(|i| args.seed.wrapping_add(i)).collect();
    let tracing = args.trace.is_some();
    let outputs: Vec<_> = seeds
        .par_iter()
        .map(|&seed| (seed, run_algorithm(&instance, &algo, seed, args.budget, tracing)))
        .collect();

    let mut trace = args.trace.as_deref().map(trace_writer).transpose()?;
    let mut records = Vec::new();
    let mut failed = false;
    for (seed, out) in outputs {
        let out = match out {
            Ok(out) => out,
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                failed = true;
                continue;
            }
        };
        if let (Some(w), Some(path)) = (trace.as_mut(), args.trace.as_deref()) {
            for event in &out.trace {
                let line = serde_json::to_string(&TraceLine { seed, event })?;
                writeln!(w, "{line}").map_err(|e| BenchError::io(path, e))?;
            }
        }
        records.push(BenchRecord {
            instance_id: instance.id.clone(),
            algorithm: algo.id().to_string(),
            params: params.clone(),
            seed,
            value: out.value,
            value_queries: out.ledger.value_queries,
            value_rounds: out.ledger.value_rounds,
            indep_queries: out.ledger.indep_queries,
            indep_rounds: out.ledger.indep_rounds,
            wall_time_ms: if args.output.no_timing { 0.0 } else { out.wall_time_ms },
        });
    }
    if let (Some(mut w), Some(path)) = (trace, args.trace.as_deref()) {
        w.flush().map_err(|e| BenchError::io(path, e))?;
    }
    emit(&args.output, &records)?;
    Ok(if failed { Status::Partial } else { Status::Ok })
}

fn finish_plan(plan: &BenchPlan, output: &OutputArgs) -> Result<Status> {
    let outcome = run_bench(
        plan,
        RunOptions {
            timing: !output.no_timing,
        },
    )?;
    emit(output, &outcome.records)?;
    for f in &outcome.failures {
        match f.seed {
            Some(seed) => eprintln!(
                "cell {} ({}, {}, seed {seed}): {}",
                f.cell, f.instance_id, f.algorithm, f.message
            ),
            None => eprintln!("cell {} ({}, {}): {}", f.cell, f.instance_id, f.algorithm, f.message),
        }
    }
    Ok(if outcome.failures.is_empty() {
        Status::Ok
    } else {
        Status::Partial
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<Status> {
    let plan = BenchPlan::from_json(&read_text(&args.plan)?)?;
    finish_plan(&plan, &args.output)
}

#[derive(Serialize)]
struct BruteReport {
    instance_id: String,
    n: usize,
    opt_set: Vec<ElementId>,
    opt_value: f64,
    feasible_count: u64,
}

fn cmd_brute(args: &InstanceArgs) -> Result<Status> {
    let instance = args.spec()?.build()?;
    if instance.n > BRUTE_FORCE_LIMIT {
        return Err(BenchError::config(
            "n",
            format!("{} exceeds the exhaustive limit {BRUTE_FORCE_LIMIT}", instance.n),
        ));
    }
    let pool: Vec<ElementId> = (0..instance.n).map(ElementId::from).collect();
    let r = brute_force_opt(instance.objective.as_ref(), instance.system.as_ref(), &pool)?;
    let report = BruteReport {
        instance_id: instance.id,
        n: instance.n,
        opt_set: r.opt_set.sorted(),
        opt_value: r.opt_value,
        feasible_count: r.feasible_count,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Status::Ok)
}

fn cmd_gen(args: &GenArgs) -> Result<Status> {
    let spec = args.instance.spec()?;
    let instance = spec.build()?;
    eprintln!(
        "{}: n = {}, p = {}, rank bound = {}",
        instance.id,
        instance.n,
        instance.system.p(),
        instance.system.rank_bound()
    );
    for note in &instance.notes {
        eprintln!("note: {note}");
    }
    let json = spec.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| BenchError::io(path, e))?,
        None => println!("{json}"),
    }
    Ok(Status::Ok)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SUBOPT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| BenchError::config("SUBOPT_THREADS", format!("`{value}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| BenchError::config("SUBOPT_THREADS", e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Brute(a) => cmd_brute(a),
        Command::Gen(a) => cmd_gen(a),
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
