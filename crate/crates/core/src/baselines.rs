//! Greedy comparators: plain greedy, repeated greedy, and sample greedy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ElementId, Session, SolutionSet};
use crate::sampling::RunResult;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub sample_probability: f64,
    pub iterations: usize,
}

impl GreedyConfig {
    /// Defaults for a system with parameter `p`: probability `1/(p+1)` and
    /// `⌈√p⌉ + 1` iterations.
    pub fn for_p(p: usize) -> Self {
        let p = p.max(1);
        GreedyConfig {
            sample_probability: 1.0 / (p as f64 + 1.0),
            iterations: (p as f64).sqrt().ceil() as usize + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sample_probability) {
            return Err(Error::param(
                "sample_probability",
                format!("{} not in [0, 1]", self.sample_probability),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// Greedy restricted to `pool`. Returns the solution and its value.
///
/// Each step checks feasibility of every remaining candidate, then evaluates
/// the marginals of the feasible ones and the current solution in one value
/// round. The largest positive marginal is taken, ties to the lowest id.
pub fn greedy(session: &mut Session<'_>, pool: &[ElementId]) -> Result<(SolutionSet, f64)> {
    let mut s = SolutionSet::new();
    let mut remaining: Vec<ElementId> = pool.to_vec();
    loop {
        let feasible: Vec<ElementId> = if remaining.is_empty() {
            Vec::new()
        } else {
            let fits = session.extension_batch(&s, &remaining)?;
            remaining
                .iter()
                .copied()
                .zip(fits)
                .filter_map(|(e, ok)| ok.then_some(e))
                .collect()
        };
        let marg = session.marginal_batch(&s, &feasible)?;
        session.offer(&s, marg.base_value);
        let mut pick: Option<(ElementId, f64)> = None;
        for (&e, &g) in feasible.iter().zip(&marg.gains) {
            if g > 0.0 && pick.is_none_or(|(b, bg)| g > bg || (g == bg && e < b)) {
                pick = Some((e, g));
            }
        }
        let Some((e, _)) = pick else {
            return Ok((s, marg.base_value));
        };
        s.insert(e);
        remaining = feasible.into_iter().filter(|&c| c != e).collect();
    }
}

fn finish(session: &Session<'_>, solution: SolutionSet, value: f64) -> RunResult {
    RunResult {
        solution,
        value,
        ledger: session.ledger(),
        per_iteration: Vec::new(),
    }
}

/// Greedy over the whole ground set.
pub fn run_greedy(session: &mut Session<'_>) -> Result<RunResult> {
    let pool: Vec<ElementId> = session.ground().elements().collect();
    let (s, v) = greedy(session, &pool)?;
    Ok(finish(session, s, v))
}

/// Runs greedy `iterations` times, removing each solution from the pool,
/// and keeps the best (earliest on ties).
pub fn repeated_greedy(session: &mut Session<'_>, iterations: usize) -> Result<RunResult> {
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    let mut pool: Vec<ElementId> = session.ground().elements().collect();
    let mut best: Option<(SolutionSet, f64)> = None;
    for _ in 0..iterations {
        let (s, v) = greedy(session, &pool)?;
        pool.retain(|&e| !s.contains(e));
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((s, v));
        }
    }
    let (s, v) = best.unwrap_or_default();
    Ok(finish(session, s, v))
}

/// Keeps each element with probability `probability`, then runs greedy on
/// the sample.
pub fn sample_greedy<R: Rng + ?Sized>(session: &mut Session<'_>, probability: f64, rng: &mut R) -> Result<RunResult> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::param(
            "sample_probability",
            format!("{probability} not in [0, 1]"),
        ));
    }
    let pool: Vec<ElementId> = session
        .ground()
        .elements()
        .filter(|_| rng.random::<f64>() < probability)
        .collect();
    let (s, v) = greedy(session, &pool)?;
    Ok(finish(session, s, v))
}
