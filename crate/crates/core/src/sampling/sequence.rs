use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::oracle::{ElementId, Session, SolutionSet};

/// Random maximal feasible extension of `s` inside `x`.
///
/// Repeatedly shuffles the remaining candidates, takes the longest feasible
/// prefix, and drops candidates that no longer fit. The returned sequence is
/// in the order elements were taken. Issues independence queries only.
pub fn rand_sequence<R: Rng + ?Sized>(
    session: &mut Session<'_>,
    x: &[ElementId],
    s: &SolutionSet,
    rng: &mut R,
) -> Result<Vec<ElementId>> {
    let mut taken = Vec::new();
    let mut combined = s.clone();
    let mut remaining: Vec<ElementId> = x.iter().copied().filter(|&e| !s.contains(e)).collect();
    remaining.dedup();

    while !remaining.is_empty() {
        remaining.shuffle(rng);
        let eta = prefix_feasible_max(session, &remaining, &combined)?;
        for &e in &remaining[..eta] {
            combined.insert(e);
            taken.push(e);
        }
        let rest: Vec<ElementId> = remaining[eta..].to_vec();
        if rest.is_empty() {
            break;
        }
        let fits = session.extension_batch(&combined, &rest)?;
        remaining = rest
            .into_iter()
            .zip(fits)
            .filter_map(|(e, ok)| ok.then_some(e))
            .collect();
    }
    Ok(taken)
}

/// Largest `j` such that `base ∪ sequence[..j]` is feasible.
///
/// Prefix feasibility is monotone (downward closure), so this is a binary
/// search with one single-query independence round per probe.
pub fn prefix_feasible_max(session: &mut Session<'_>, sequence: &[ElementId], base: &SolutionSet) -> Result<usize> {
    let (mut lo, mut hi) = (0, sequence.len());
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        let mut probe = base.clone();
        probe.extend(sequence[..mid].iter().copied());
        if session.feasible_batch(std::slice::from_ref(&probe))?[0] {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

/// Keeps each element independently with probability `phi`.
pub fn unif_sampling<R: Rng + ?Sized>(set: &[ElementId], phi: f64, rng: &mut R) -> Vec<ElementId> {
    set.iter().copied().filter(|_| rng.random::<f64>() < phi).collect()
}
