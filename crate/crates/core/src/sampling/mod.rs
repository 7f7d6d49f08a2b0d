//! Randomized threshold sampling and its repeated variant.

mod params;
mod sequence;
mod threshold;
mod trace;

use serde::{Deserialize, Serialize};

pub use params::SamplingParams;
pub use sequence::{prefix_feasible_max, rand_sequence, unif_sampling};
pub use threshold::{
    binary_search_eta, rand_sampling, search_first_shrunk, threshold_candidates, threshold_slack, ThresholdConfig,
};
pub use trace::{TraceEvent, Tracer};

use crate::error::Result;
use crate::oracle::{ElementId, RunLedger, Session, SolutionSet};
use crate::rng::StreamSeed;

/// Stream step reserved for the second sampling stage of each iteration.
const LAMBDA_STEP: u32 = u32::MAX;

/// Sets produced by one outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub omega: SolutionSet,
    pub omega_value: f64,
    pub lambda: SolutionSet,
    pub lambda_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solution: SolutionSet,
    pub value: f64,
    pub ledger: RunLedger,
    pub per_iteration: Vec<IterationOutcome>,
}

/// Runs `params.m` sampling passes over shrinking pools and returns the best
/// of all `Ω_j` and `Λ_j`. All sets are evaluated in one final value round.
pub fn rep_sampling(session: &mut Session<'_>, params: &SamplingParams, tracer: &mut Tracer) -> Result<RunResult> {
    params.validate()?;
    let config = ThresholdConfig {
        lambda: params.lambda,
        epsilon: params.epsilon,
        phi1: params.phi1,
    };
    let seed = StreamSeed(params.seed);
    let mut pool: Vec<ElementId> = session.ground().elements().collect();
    let mut sets: Vec<(SolutionSet, SolutionSet)> = Vec::with_capacity(params.m);

    for j in 0..params.m {
        let iteration = j as u32;
        let omega = rand_sampling(session, &pool, &config, seed, iteration, tracer)?;
        let mut rng = seed.stream(iteration, LAMBDA_STEP);
        let lambda: SolutionSet = unif_sampling(omega.members(), params.phi2, &mut rng)
            .into_iter()
            .collect();
        pool.retain(|&e| !omega.contains(e));
        tracer.record(|| TraceEvent::Iteration {
            iteration: j,
            omega: omega.members().to_vec(),
            lambda: lambda.members().to_vec(),
            ledger: session.ledger(),
        });
        sets.push((omega, lambda));
    }

    let mut distinct: Vec<SolutionSet> = Vec::new();
    let mut slot = |s: &SolutionSet| match distinct.iter().position(|d| d == s) {
        Some(i) => i,
        None => {
            distinct.push(s.clone());
            distinct.len() - 1
        }
    };
    let slots: Vec<(usize, usize)> = sets.iter().map(|(o, l)| (slot(o), slot(l))).collect();
    if distinct.is_empty() {
        distinct.push(SolutionSet::new());
    }
    let values = session.value_batch(&distinct)?;

    let mut best: Option<(SolutionSet, f64)> = None;
    let mut per_iteration = Vec::with_capacity(sets.len());
    for ((omega, lambda), (oi, li)) in sets.into_iter().zip(slots) {
        let (ov, lv) = (values[oi], values[li]);
        for (set, v) in [(&omega, ov), (&lambda, lv)] {
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((set.clone(), v));
            }
        }
        per_iteration.push(IterationOutcome {
            omega,
            omega_value: ov,
            lambda,
            lambda_value: lv,
        });
    }
    let (solution, value) = best.unwrap_or_else(|| (SolutionSet::new(), values[0]));
    session.offer(&solution, value);
    Ok(RunResult {
        solution,
        value,
        ledger: session.ledger(),
        per_iteration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{PartitionMatroid, Unconstrained, UniformMatroid};
    use crate::objectives::{ConstantObjective, CoverageInstance, ModularWeights};

    #[test]
    fn single_iteration_full_keep_equals_one_pass() {
        let sets: Vec<Vec<usize>> = (0..16).map(|i| vec![i % 7, (i * 3) % 11, (i * 5) % 13 + 11]).collect();
        let f = CoverageInstance::new(sets, vec![1.0; 24]).unwrap();
        let u = UniformMatroid::new(16, 4).unwrap();
        let params = SamplingParams::new(0.2, 1, 1.0, 1.0, 1).unwrap().with_seed(11);
        let mut s = Session::new(&f, &u);
        let res = rep_sampling(&mut s, &params, &mut Tracer::disabled()).unwrap();

        let mut s2 = Session::new(&f, &u);
        let pool: Vec<ElementId> = (0..16).map(ElementId::from).collect();
        let cfg = ThresholdConfig {
            lambda: params.lambda,
            epsilon: 0.2,
            phi1: 1.0,
        };
        let omega = rand_sampling(&mut s2, &pool, &cfg, StreamSeed(11), 0, &mut Tracer::disabled()).unwrap();
        assert_eq!(res.solution, omega);
        assert_eq!(res.per_iteration[0].omega, res.per_iteration[0].lambda);
    }

    #[test]
    fn zero_objective_gives_empty_solution() {
        let f = ConstantObjective::new(6, 0.0).unwrap();
        let u = Unconstrained::new(6);
        let params = SamplingParams::p_system(1, 0.1).unwrap();
        let mut s = Session::new(&f, &u);
        let res = rep_sampling(&mut s, &params, &mut Tracer::disabled()).unwrap();
        assert!(res.solution.is_empty());
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn iterations_are_disjoint_and_feasible() {
        let w: Vec<f64> = (0..40).map(|i| ((i * 37) % 17) as f64 + 0.5).collect();
        let f = ModularWeights::new(w).unwrap();
        let blocks: Vec<Vec<usize>> = (0..4).map(|b| (b * 10..b * 10 + 10).collect()).collect();
        let pm = PartitionMatroid::from_blocks(40, &blocks, vec![2, 3, 1, 2]).unwrap();
        let params = SamplingParams::new(0.1, 4, 1.0, 0.5, 1).unwrap().with_seed(5);
        let mut s = Session::new(&f, &pm);
        let res = rep_sampling(&mut s, &params, &mut Tracer::disabled()).unwrap();
        use crate::oracle::IndependenceSystem;
        for (i, a) in res.per_iteration.iter().enumerate() {
            assert!(pm.is_feasible(a.omega.members()));
            assert!(a.lambda.is_subset(&a.omega));
            for b in &res.per_iteration[i + 1..] {
                assert!(a.omega.iter().all(|e| !b.omega.contains(e)));
            }
        }
        assert!(pm.is_feasible(res.solution.members()));
        assert_eq!(res.ledger, s.ledger());
    }

    #[test]
    fn same_seed_same_run() {
        let w: Vec<f64> = (0..25).map(|i| ((i * 13) % 7) as f64 + 1.0).collect();
        let f = ModularWeights::new(w).unwrap();
        let u = UniformMatroid::new(25, 6).unwrap();
        let params = SamplingParams::p_system(1, 0.2).unwrap().with_seed(99);
        let run = || {
            let mut s = Session::new(&f, &u);
            rep_sampling(&mut s, &params, &mut Tracer::disabled()).unwrap()
        };
        assert_eq!(run(), run());
    }
}
