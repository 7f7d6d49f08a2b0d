//! Benchmark plans and their execution.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use subopt_core::baselines::{repeated_greedy, run_greedy, sample_greedy, GreedyConfig};
use subopt_core::sampling::TraceEvent;
use subopt_core::{rep_sampling, Error as CoreError, RunLedger, SamplingParams, Session, SolutionSet, Tracer};

use crate::error::{BenchError, Result};
use crate::instance::{Instance, InstanceSpec};
use crate::record::BenchRecord;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    PSystem,
    PExtendible,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PSystem => "p-system",
            Preset::PExtendible => "p-extendible",
        }
    }
}

/// An algorithm with its parameters. Unset fields take defaults derived from
/// the instance's `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgoSpec {
    RepSampling {
        #[serde(default)]
        preset: Preset,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi2: Option<f64>,
        /// Overrides the constraint's declared `p`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<usize>,
    },
    Greedy,
    RepeatedGreedy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iterations: Option<usize>,
    },
    SampleGreedy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probability: Option<f64>,
    },
}

fn default_epsilon() -> f64 {
    0.1
}

impl AlgoSpec {
    pub fn rep_sampling(preset: Preset, epsilon: f64) -> Self {
        AlgoSpec::RepSampling {
            preset,
            epsilon,
            m: None,
            phi1: None,
            phi2: None,
            p: None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            AlgoSpec::RepSampling { .. } => "rep-sampling",
            AlgoSpec::Greedy => "greedy",
            AlgoSpec::RepeatedGreedy { .. } => "repeated-greedy",
            AlgoSpec::SampleGreedy { .. } => "sample-greedy",
        }
    }

    /// Sampling parameters for a system with parameter `system_p`.
    pub fn sampling_params(&self, system_p: usize) -> Result<Option<(SamplingParams, usize)>> {
        let AlgoSpec::RepSampling {
            preset,
            epsilon,
            m,
            phi1,
            phi2,
            p,
        } = self
        else {
            return Ok(None);
        };
        let p = p.unwrap_or(system_p);
        let base = match preset {
            Preset::PSystem => SamplingParams::p_system(p, *epsilon)?,
            Preset::PExtendible => SamplingParams::p_extendible(p, *epsilon)?,
        };
        let params = SamplingParams::new(
            *epsilon,
            m.unwrap_or(base.m),
            phi1.unwrap_or(base.phi1),
            phi2.unwrap_or(base.phi2),
            p,
        )?;
        Ok(Some((params, p)))
    }

    /// Canonical parameter string for records, with defaults resolved.
    pub fn params_string(&self, system_p: usize, budget: Option<u64>) -> Result<String> {
        let mut s = match self {
            AlgoSpec::RepSampling { preset, .. } => {
                let (sp, p) = self.sampling_params(system_p)?.expect("rep-sampling has parameters");
                format!(
                    "preset={};epsilon={};m={};phi1={};phi2={};p={};lambda={}",
                    preset.name(),
                    sp.epsilon,
                    sp.m,
                    sp.phi1,
                    sp.phi2,
                    p,
                    sp.lambda
                )
            }
            AlgoSpec::Greedy => String::new(),
            AlgoSpec::RepeatedGreedy { iterations } => {
                format!(
                    "iterations={}",
                    iterations.unwrap_or(GreedyConfig::for_p(system_p).iterations)
                )
            }
            AlgoSpec::SampleGreedy { probability } => format!(
                "probability={}",
                probability.unwrap_or(GreedyConfig::for_p(system_p).sample_probability)
            ),
        };
        if let Some(q) = budget {
            if !s.is_empty() {
                s.push(';');
            }
            let _ = write!(s, "budget={q}");
        }
        Ok(s)
    }
}

/// Outcome of one run, before it becomes a record.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub solution: SolutionSet,
    pub value: f64,
    pub ledger: RunLedger,
    pub wall_time_ms: f64,
    pub trace: Vec<TraceEvent>,
}

/// Runs one algorithm once.
///
/// With a budget, the run stops at the first value batch that would exceed
/// it and reports the best feasible set seen so far (at worst `∅`, whose
/// value is computed outside the budget).
pub fn run_algorithm(
    instance: &Instance,
    algo: &AlgoSpec,
    seed: u64,
    budget: Option<u64>,
    trace: bool,
) -> Result<RunOutput> {
    let objective = instance.objective.as_ref();
    let system = instance.system.as_ref();
    let mut session = Session::new(objective, system);
    if let Some(q) = budget {
        session = session.with_budget(q);
        session.offer(&SolutionSet::new(), objective.value(&[]));
    }
    let mut tracer = if trace { Tracer::enabled() } else { Tracer::disabled() };
    let p = system.p();
    let start = Instant::now();
    let outcome = match algo {
        AlgoSpec::RepSampling { .. } => {
            let (params, _) = algo.sampling_params(p)?.expect("rep-sampling has parameters");
            rep_sampling(&mut session, &params.with_seed(seed), &mut tracer)
        }
        AlgoSpec::Greedy => run_greedy(&mut session),
        AlgoSpec::RepeatedGreedy { iterations } => {
            repeated_greedy(&mut session, iterations.unwrap_or(GreedyConfig::for_p(p).iterations))
        }
        AlgoSpec::SampleGreedy { probability } => {
            let prob = probability.unwrap_or(GreedyConfig::for_p(p).sample_probability);
            sample_greedy(&mut session, prob, &mut ChaCha8Rng::seed_from_u64(seed))
        }
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let (solution, value) = match (outcome, budget) {
        (Ok(_), Some(_)) | (Err(CoreError::BudgetExhausted { .. }), Some(_)) => {
            let inc = session.incumbent().expect("budget runs start with an incumbent");
            (inc.set.clone(), inc.value)
        }
        (Ok(r), None) => (r.solution, r.value),
        (Err(e), _) => return Err(e.into()),
    };
    Ok(RunOutput {
        solution,
        value,
        ledger: session.ledger(),
        wall_time_ms,
        trace: tracer.into_events(),
    })
}

/// One row of a plan: an instance, an algorithm and the seeds to run it with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCell {
    pub instance: InstanceSpec,
    pub algorithm: AlgoSpec,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchPlan {
    pub cells: Vec<BenchCell>,
}

impl BenchPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| BenchError::config(e.path().to_string(), e.inner().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(BenchError::config("cells", "plan has no cells"));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.seeds.is_empty() {
                return Err(BenchError::config(format!("cells[{i}].seeds"), "no seeds"));
            }
            cell.instance.validate().map_err(|e| match e {
                BenchError::Config { path, message } => {
                    BenchError::config(format!("cells[{i}].instance.{path}"), message)
                }
                other => other,
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Record measured wall time; when false every record has 0 ms.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { timing: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub cell: usize,
    pub instance_id: String,
    pub algorithm: String,
    pub seed: Option<u64>,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct BenchOutcome {
    /// In plan order, then seed order.
    pub records: Vec<BenchRecord>,
    pub failures: Vec<CellFailure>,
}

/// Executes every cell of `plan` in parallel. Failures are collected and the
/// remaining cells still run. Output order does not depend on scheduling.
pub fn run_bench(plan: &BenchPlan, options: RunOptions) -> Result<BenchOutcome> {
    plan.validate()?;
    let built: Vec<std::result::Result<Instance, String>> = plan
        .cells
        .par_iter()
        .map(|c| c.instance.build().map_err(|e| e.to_string()))
        .collect();

    let jobs: Vec<(usize, u64)> = plan
        .cells
        .iter()
        .enumerate()
        .filter(|(i, _)| built[*i].is_ok())
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<std::result::Result<BenchRecord, CellFailure>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let cell = &plan.cells[i];
            let instance = built[i].as_ref().expect("filtered to built instances");
            let fail = |message: String| CellFailure {
                cell: i,
                instance_id: instance.id.clone(),
                algorithm: cell.algorithm.id().to_string(),
                seed: Some(seed),
                message,
            };
            let params = cell
                .algorithm
                .params_string(instance.system.p(), cell.budget)
                .map_err(|e| fail(e.to_string()))?;
            let out =
                run_algorithm(instance, &cell.algorithm, seed, cell.budget, false).map_err(|e| fail(e.to_string()))?;
            Ok(BenchRecord {
                instance_id: instance.id.clone(),
                algorithm: cell.algorithm.id().to_string(),
                params,
                seed,
                value: out.value,
                value_queries: out.ledger.value_queries,
                value_rounds: out.ledger.value_rounds,
                indep_queries: out.ledger.indep_queries,
                indep_rounds: out.ledger.indep_rounds,
                wall_time_ms: if options.timing { out.wall_time_ms } else { 0.0 },
            })
        })
        .collect();

    let mut outcome = BenchOutcome::default();
    for (i, b) in built.iter().enumerate() {
        if let Err(message) = b {
            outcome.failures.push(CellFailure {
                cell: i,
                instance_id: plan.cells[i].instance.instance_id(),
                algorithm: plan.cells[i].algorithm.id().to_string(),
                seed: None,
                message: message.clone(),
            });
        }
    }
    for r in results {
        match r {
            Ok(rec) => outcome.records.push(rec),
            Err(f) => outcome.failures.push(f),
        }
    }
    outcome.failures.sort_by_key(|f| f.cell);
    Ok(outcome)
}
