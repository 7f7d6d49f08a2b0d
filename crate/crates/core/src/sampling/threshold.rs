use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::oracle::{ElementId, Session, SolutionSet};
use crate::rng::StreamSeed;

use super::sequence::{rand_sequence, unif_sampling};
use super::trace::{TraceEvent, Tracer};

/// Parameters of one threshold-sampling pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub phi1: f64,
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{} not in (0, 1)", self.epsilon)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("{} must be positive", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.phi1) {
            return Err(Error::param("phi1", format!("{} not in [0, 1]", self.phi1)));
        }
        Ok(())
    }
}

/// Absolute slack used when comparing a marginal against a threshold.
pub fn threshold_slack(delta: f64) -> f64 {
    1e-9 * delta.abs().max(1.0)
}

/// Candidates of `pool ∖ base` that are feasible with `base` and whose
/// marginal on `base` is at least `delta`.
///
/// Feasibility is checked first (one independence round) and only the
/// feasible candidates are evaluated (one value round, skipped when none
/// remain). The feasible `base` is offered to the session incumbent.
pub fn threshold_candidates(
    session: &mut Session<'_>,
    base: &SolutionSet,
    delta: f64,
    pool: &[ElementId],
) -> Result<Vec<ElementId>> {
    let cands: Vec<ElementId> = pool.iter().copied().filter(|&e| !base.contains(e)).collect();
    if cands.is_empty() {
        return Ok(Vec::new());
    }
    let fits = session.extension_batch(base, &cands)?;
    let feasible: Vec<ElementId> = cands
        .into_iter()
        .zip(fits)
        .filter_map(|(e, ok)| ok.then_some(e))
        .collect();
    if feasible.is_empty() {
        return Ok(Vec::new());
    }
    let marg = session.marginal_batch(base, &feasible)?;
    session.offer(base, marg.base_value);
    let cut = delta - threshold_slack(delta);
    Ok(feasible
        .into_iter()
        .zip(marg.gains)
        .filter_map(|(e, g)| (g >= cut).then_some(e))
        .collect())
}

/// Smallest `j ∈ 1..=t` with `size_at(j) < target`, or `t + 1` if none.
///
/// Binary search valid for a non-increasing profile. Every probed size is
/// kept and checked against the others; a probe that breaks monotonicity
/// yields [`Error::NonMonotoneCandidates`].
pub fn search_first_shrunk<F>(t: usize, target: f64, mut size_at: F) -> Result<usize>
where
    F: FnMut(usize) -> Result<usize>,
{
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut lo, mut hi) = (1, t + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let size = size_at(mid)?;
        if let Some((&j, &s)) = seen.range(..mid).next_back() {
            if s < size {
                return Err(Error::NonMonotoneCandidates {
                    lo: j,
                    lo_size: s,
                    hi: mid,
                    hi_size: size,
                });
            }
        }
        if let Some((&j, &s)) = seen.range(mid + 1..).next() {
            if size < s {
                return Err(Error::NonMonotoneCandidates {
                    lo: mid,
                    lo_size: size,
                    hi: j,
                    hi_size: s,
                });
            }
        }
        seen.insert(mid, size);
        if (size as f64) < target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// `X_j` for a 1-based prefix index `j`: members of `x` feasible with and
/// having marginal at least `delta` on `s ∪ {a₁..a_{j−1}}`.
fn candidates_after_prefix(
    session: &mut Session<'_>,
    s: &SolutionSet,
    sequence: &[ElementId],
    x: &[ElementId],
    delta: f64,
    j: usize,
) -> Result<Vec<ElementId>> {
    let mut base = s.clone();
    base.extend(sequence[..j - 1].iter().copied());
    threshold_candidates(session, &base, delta, x)
}

/// Minimal `η` with `|X_η| < (1−ε)|X|` over the prefixes of `sequence`,
/// together with `X_η`. Returns `t + 1` when no prefix shrinks `X` enough.
pub fn binary_search_eta(
    session: &mut Session<'_>,
    s: &SolutionSet,
    sequence: &[ElementId],
    x: &[ElementId],
    delta: f64,
    epsilon: f64,
) -> Result<(usize, Vec<ElementId>)> {
    let t = sequence.len();
    let target = (1.0 - epsilon) * x.len() as f64;
    let mut cache: BTreeMap<usize, Vec<ElementId>> = BTreeMap::new();
    let eta = search_first_shrunk(t, target, |j| {
        let xj = candidates_after_prefix(session, s, sequence, x, delta, j)?;
        let len = xj.len();
        cache.insert(j, xj);
        Ok(len)
    })?;
    let x_eta = match cache.remove(&eta) {
        Some(xj) => xj,
        None => candidates_after_prefix(session, s, sequence, x, delta, eta)?,
    };
    Ok((eta, x_eta))
}

/// One threshold-sampling pass over `pool` for outer iteration `iteration`.
///
/// Each inner step draws from its own sub-stream of `seed`, so the result is
/// a function of `(pool, config, seed, iteration)` alone.
pub fn rand_sampling(
    session: &mut Session<'_>,
    pool: &[ElementId],
    config: &ThresholdConfig,
    seed: StreamSeed,
    iteration: u32,
    tracer: &mut Tracer,
) -> Result<SolutionSet> {
    config.validate()?;
    let mut s = SolutionSet::new();
    if pool.is_empty() {
        return Ok(s);
    }

    let fits = session.extension_batch(&s, pool)?;
    let singletons: Vec<ElementId> = pool
        .iter()
        .copied()
        .zip(fits)
        .filter_map(|(e, ok)| ok.then_some(e))
        .collect();
    if singletons.is_empty() {
        return Ok(s);
    }
    let first = session.marginal_batch(&s, &singletons)?;
    session.offer(&s, first.base_value);

    let mut best: Option<(ElementId, f64)> = None;
    for (&e, &g) in singletons.iter().zip(&first.gains) {
        let v = first.base_value + g;
        if best.is_none_or(|(b, bv)| v > bv || (v == bv && e < b)) {
            best = Some((e, v));
        }
    }
    let Some((best_e, best_v)) = best else {
        return Ok(s);
    };
    session.offer(&SolutionSet::from_iter([best_e]), best_v);
    if best_v <= 0.0 {
        return Ok(s);
    }

    let mut delta = best_v;
    let floor = config.lambda.min(1.0) * delta;
    let cut = delta - threshold_slack(delta);
    let mut x: Vec<ElementId> = singletons
        .iter()
        .copied()
        .zip(&first.gains)
        .filter_map(|(e, &g)| (g >= cut).then_some(e))
        .collect();

    let mut step: u32 = 0;
    loop {
        tracer.record(|| TraceEvent::Level {
            iteration: iteration as usize,
            delta,
            floor,
            candidates: x.len(),
            ledger: session.ledger(),
        });
        while !x.is_empty() {
            let mut rng = seed.stream(iteration, step);
            step = step.wrapping_add(1);
            let sequence = rand_sequence(session, &x, &s, &mut rng)?;
            let (eta, x_eta) = binary_search_eta(session, &s, &sequence, &x, delta, config.epsilon)?;
            let added = unif_sampling(&sequence[..eta - 1], config.phi1, &mut rng);
            s.extend(added.iter().copied());
            debug_assert!(
                session.system().is_feasible(s.members()),
                "sampled solution left the system"
            );
            let head = std::mem::replace(&mut x, x_eta);
            tracer.record(|| TraceEvent::Inner {
                iteration: iteration as usize,
                delta,
                candidates: head,
                sequence_len: sequence.len(),
                eta,
                added,
                ledger: session.ledger(),
            });
        }
        delta *= 1.0 - config.epsilon;
        if delta < floor {
            break;
        }
        x = threshold_candidates(session, &s, delta, pool)?;
    }
    Ok(s)
}
