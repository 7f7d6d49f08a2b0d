//! Ground-set types, the two oracle interfaces, and the metered [`Session`]
//! through which every algorithm talks to them.
//!
//! Adaptivity is charged per batch: each call to [`Session::value_batch`],
//! [`Session::marginal_batch`], [`Session::feasible_batch`] or
//! [`Session::extension_batch`] is one round of the corresponding oracle,
//! however many queries it carries. A batch receives all of its inputs before
//! any output is produced, so no query in a round can depend on another
//! query of the same round.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values below this are reported as a violation of non-negativity in debug builds.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

/// Batches at least this wide are evaluated on the rayon pool.
const PARALLEL_MIN_BATCH: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ElementId {
    fn from(i: usize) -> Self {
        ElementId(u32::try_from(i).expect("element index exceeds u32"))
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
}

impl GroundSet {
    pub fn new(n: usize) -> Self {
        GroundSet { n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn contains(&self, e: ElementId) -> bool {
        e.index() < self.n
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementId> {
        (0..self.n).map(ElementId::from)
    }

    pub fn all(&self) -> SolutionSet {
        self.elements().collect()
    }
}

/// An insertion-ordered set of elements with O(1) membership.
#[derive(Clone, Default)]
pub struct SolutionSet {
    members: Vec<ElementId>,
    mask: Vec<u64>,
}

impl SolutionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(cap: usize) -> Self {
        SolutionSet {
            members: Vec::with_capacity(cap),
            mask: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, e: ElementId) -> bool {
        let i = e.index();
        self.mask.get(i / 64).is_some_and(|w| w & (1u64 << (i % 64)) != 0)
    }

    /// Adds `e`; returns false if it was already present.
    pub fn insert(&mut self, e: ElementId) -> bool {
        if self.contains(e) {
            return false;
        }
        let i = e.index();
        if self.mask.len() <= i / 64 {
            self.mask.resize(i / 64 + 1, 0);
        }
        self.mask[i / 64] |= 1u64 << (i % 64);
        self.members.push(e);
        true
    }

    pub fn remove(&mut self, e: ElementId) -> bool {
        if !self.contains(e) {
            return false;
        }
        let i = e.index();
        self.mask[i / 64] &= !(1u64 << (i % 64));
        self.members.retain(|&m| m != e);
        true
    }

    pub fn extend<I: IntoIterator<Item = ElementId>>(&mut self, iter: I) {
        for e in iter {
            self.insert(e);
        }
    }

    /// Members in insertion order.
    pub fn members(&self) -> &[ElementId] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.members.iter().copied()
    }

    pub fn sorted(&self) -> Vec<ElementId> {
        let mut v = self.members.clone();
        v.sort_unstable();
        v
    }

    pub fn union(&self, other: &SolutionSet) -> SolutionSet {
        let mut out = self.clone();
        out.extend(other.iter());
        out
    }

    pub fn difference(&self, other: &SolutionSet) -> SolutionSet {
        self.iter().filter(|&e| !other.contains(e)).collect()
    }

    pub fn is_subset(&self, other: &SolutionSet) -> bool {
        self.iter().all(|e| other.contains(e))
    }

    /// Copy of `self` with `e` appended (no-op if present).
    pub fn with(&self, e: ElementId) -> SolutionSet {
        let mut out = self.clone();
        out.insert(e);
        out
    }

    pub fn validate(&self, ground: GroundSet) -> Result<()> {
        match self.members.iter().find(|&&e| !ground.contains(e)) {
            Some(&element) => Err(Error::OutOfGround {
                element,
                n: ground.len(),
            }),
            None => Ok(()),
        }
    }
}

impl PartialEq for SolutionSet {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.is_subset(other)
    }
}

impl Eq for SolutionSet {}

impl fmt::Debug for SolutionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter().map(|e| e.0)).finish()
    }
}

impl FromIterator<ElementId> for SolutionSet {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        let mut s = SolutionSet::new();
        s.extend(iter);
        s
    }
}

impl<'a> FromIterator<&'a ElementId> for SolutionSet {
    fn from_iter<I: IntoIterator<Item = &'a ElementId>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl FromIterator<usize> for SolutionSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().map(ElementId::from).collect()
    }
}

impl Serialize for SolutionSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.members.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SolutionSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<ElementId>::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// Query and round counters for one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLedger {
    pub value_queries: u64,
    pub value_rounds: u64,
    pub indep_queries: u64,
    pub indep_rounds: u64,
}

/// A non-negative submodular set function over `0..ground_size()`.
///
/// Implementations must be deterministic and must not mutate observable
/// state while evaluating: a batch may be split across threads.
pub trait SubmodularFn: Send + Sync {
    fn ground_size(&self) -> usize;

    fn value(&self, set: &[ElementId]) -> f64;

    /// `f(base)` together with `f(e | base)` for each candidate. Candidates are
    /// never members of `base`. Override when marginals can share work.
    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        let base_value = self.value(base.members());
        let mut buf = base.members().to_vec();
        let gains = candidates
            .iter()
            .map(|&e| {
                buf.push(e);
                let v = self.value(&buf);
                buf.pop();
                v - base_value
            })
            .collect();
        (base_value, gains)
    }
}

/// A downward-closed family of feasible sets, accessed by membership queries.
pub trait IndependenceSystem: Send + Sync {
    fn ground_size(&self) -> usize;

    fn is_feasible(&self, set: &[ElementId]) -> bool;

    /// Declared system parameter (bases of any restriction differ in size by at most this factor).
    fn p(&self) -> usize;

    /// Upper bound on the size of every feasible set.
    fn rank_bound(&self) -> usize;

    /// Whether the system is declared p-extendible (not only a p-system).
    fn is_extendible(&self) -> bool {
        false
    }

    /// Feasibility of `base ∪ {e}` for each candidate.
    fn extensions(&self, base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        let mut buf = base.members().to_vec();
        candidates
            .iter()
            .map(|&e| {
                if base.contains(e) {
                    return self.is_feasible(&buf);
                }
                buf.push(e);
                let ok = self.is_feasible(&buf);
                buf.pop();
                ok
            })
            .collect()
    }
}

impl<T: SubmodularFn + ?Sized> SubmodularFn for &T {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, set: &[ElementId]) -> f64 {
        (**self).value(set)
    }
    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        (**self).gains(base, candidates)
    }
}

impl<T: SubmodularFn + ?Sized> SubmodularFn for Box<T> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn value(&self, set: &[ElementId]) -> f64 {
        (**self).value(set)
    }
    fn gains(&self, base: &SolutionSet, candidates: &[ElementId]) -> (f64, Vec<f64>) {
        (**self).gains(base, candidates)
    }
}

impl<T: IndependenceSystem + ?Sized> IndependenceSystem for Box<T> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        (**self).is_feasible(set)
    }
    fn p(&self) -> usize {
        (**self).p()
    }
    fn rank_bound(&self) -> usize {
        (**self).rank_bound()
    }
    fn is_extendible(&self) -> bool {
        (**self).is_extendible()
    }
    fn extensions(&self, base: &SolutionSet, candidates: &[ElementId]) -> Vec<bool> {
        (**self).extensions(base, candidates)
    }
}

/// Result of a marginal batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub base_value: f64,
    pub gains: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Incumbent {
    pub set: SolutionSet,
    pub value: f64,
}

/// Metered access to one objective and one independence system.
///
/// `f(∅)` is evaluated at most once per session and cached; a cache hit costs
/// no query. A batch that ends up issuing no query at all is not charged a round.
pub struct Session<'a> {
    objective: &'a dyn SubmodularFn,
    system: &'a dyn IndependenceSystem,
    ground: GroundSet,
    ledger: RunLedger,
    empty_value: Option<f64>,
    budget: Option<u64>,
    incumbent: Option<Incumbent>,
}

impl<'a> Session<'a> {
    pub fn new(objective: &'a dyn SubmodularFn, system: &'a dyn IndependenceSystem) -> Self {
        debug_assert_eq!(objective.ground_size(), system.ground_size());
        Session {
            objective,
            system,
            ground: GroundSet::new(objective.ground_size()),
            ledger: RunLedger::default(),
            empty_value: None,
            budget: None,
            incumbent: None,
        }
    }

    /// Caps the total number of value queries; a batch that would exceed the
    /// cap is refused with [`Error::BudgetExhausted`] and nothing is charged.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn objective(&self) -> &'a dyn SubmodularFn {
        self.objective
    }

    pub fn system(&self) -> &'a dyn IndependenceSystem {
        self.system
    }

    pub fn ledger(&self) -> RunLedger {
        self.ledger
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// Best feasible set reported through [`Session::offer`] so far.
    pub fn incumbent(&self) -> Option<&Incumbent> {
        self.incumbent.as_ref()
    }

    /// Records a feasible set whose value is already known. Keeps the first
    /// set seen among equal values.
    pub fn offer(&mut self, set: &SolutionSet, value: f64) {
        let better = self.incumbent.as_ref().is_none_or(|inc| value > inc.value);
        if better {
            self.incumbent = Some(Incumbent {
                set: set.clone(),
                value,
            });
        }
    }

    fn charge_values(&mut self, requested: u64) -> Result<()> {
        if let Some(budget) = self.budget {
            if self.ledger.value_queries + requested > budget {
                return Err(Error::BudgetExhausted {
                    budget,
                    used: self.ledger.value_queries,
                    requested,
                });
            }
        }
        if requested > 0 {
            self.ledger.value_queries += requested;
            self.ledger.value_rounds += 1;
        }
        Ok(())
    }

    fn charge_indep(&mut self, requested: u64) {
        if requested > 0 {
            self.ledger.indep_queries += requested;
            self.ledger.indep_rounds += 1;
        }
    }

    fn check_elements(&self, elements: &[ElementId]) -> Result<()> {
        match elements.iter().find(|&&e| !self.ground.contains(e)) {
            Some(&element) => Err(Error::OutOfGround {
                element,
                n: self.ground.len(),
            }),
            None => Ok(()),
        }
    }

    /// `f(S)` for every set, one round.
    pub fn value_batch(&mut self, sets: &[SolutionSet]) -> Result<Vec<f64>> {
        if sets.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for s in sets {
            s.validate(self.ground)?;
        }
        let needs_empty = self.empty_value.is_none() && sets.iter().any(|s| s.is_empty());
        let fresh: Vec<&SolutionSet> = sets.iter().filter(|s| !s.is_empty()).collect();
        self.charge_values(fresh.len() as u64 + needs_empty as u64)?;

        let objective = self.objective;
        let eval = |s: &&SolutionSet| objective.value(s.members());
        let fresh_values: Vec<f64> = if fresh.len() >= PARALLEL_MIN_BATCH {
            fresh.par_iter().map(eval).collect()
        } else {
            fresh.iter().map(eval).collect()
        };
        if needs_empty {
            self.empty_value = Some(objective.value(&[]));
        }

        let mut fresh_values = fresh_values.into_iter();
        let out: Vec<f64> = sets
            .iter()
            .map(|s| {
                if s.is_empty() {
                    self.empty_value.unwrap_or_default()
                } else {
                    fresh_values.next().unwrap_or_default()
                }
            })
            .collect();
        for &v in &out {
            debug_assert!(v >= -NEGATIVE_TOLERANCE, "objective returned negative value {v}");
        }
        Ok(out)
    }

    /// `f(e | base)` for every candidate, one round. Candidates already in
    /// `base` get 0 without a query; `f(base)` costs one query unless `base`
    /// is empty and `f(∅)` is cached.
    pub fn marginal_batch(&mut self, base: &SolutionSet, candidates: &[ElementId]) -> Result<Marginals> {
        base.validate(self.ground)?;
        self.check_elements(candidates)?;

        let fresh: Vec<ElementId> = candidates.iter().copied().filter(|&e| !base.contains(e)).collect();
        let cached_base = if base.is_empty() { self.empty_value } else { None };
        let requested = fresh.len() as u64 + cached_base.is_none() as u64;
        self.charge_values(requested)?;

        let (base_value, fresh_gains) = match cached_base {
            Some(empty) => (empty, self.singleton_gains(empty, &fresh)),
            None => self.gains_chunked(base, &fresh),
        };
        let base_value = cached_base.unwrap_or(base_value);
        if base.is_empty() {
            self.empty_value = Some(base_value);
        }
        debug_assert!(
            base_value >= -NEGATIVE_TOLERANCE,
            "objective returned negative value {base_value}"
        );

        let mut fresh_gains = fresh_gains.into_iter();
        let gains: Vec<f64> = candidates
            .iter()
            .map(|&e| {
                if base.contains(e) {
                    0.0
                } else {
                    fresh_gains.next().unwrap_or_default()
                }
            })
            .collect();
        for &g in &gains {
            debug_assert!(
                base_value + g >= -NEGATIVE_TOLERANCE,
                "objective returned negative value {}",
                base_value + g
            );
        }
        Ok(Marginals { base_value, gains })
    }

    /// `f({e}) − f(∅)` against a cached `f(∅)`, one evaluation per candidate.
    fn singleton_gains(&self, empty: f64, fresh: &[ElementId]) -> Vec<f64> {
        let eval = |e: &ElementId| self.objective.value(std::slice::from_ref(e)) - empty;
        if fresh.len() >= PARALLEL_MIN_BATCH {
            fresh.par_iter().map(eval).collect()
        } else {
            fresh.iter().map(eval).collect()
        }
    }

    /// Splits large batches across threads. Each chunk derives `f(base)` on
    /// its own; the ledger charges it once.
    fn gains_chunked(&self, base: &SolutionSet, fresh: &[ElementId]) -> (f64, Vec<f64>) {
        if fresh.len() < PARALLEL_MIN_BATCH {
            return self.objective.gains(base, fresh);
        }
        let chunk = fresh
            .len()
            .div_ceil(rayon::current_num_threads().max(1))
            .max(PARALLEL_MIN_BATCH / 2);
        let parts: Vec<(f64, Vec<f64>)> = fresh.par_chunks(chunk).map(|c| self.objective.gains(base, c)).collect();
        let base_value = parts.first().map(|p| p.0).unwrap_or_default();
        (base_value, parts.into_iter().flat_map(|p| p.1).collect())
    }

    /// Membership verdict for each set, one independence round.
    pub fn feasible_batch(&mut self, sets: &[SolutionSet]) -> Result<Vec<bool>> {
        if sets.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for s in sets {
            s.validate(self.ground)?;
        }
        self.charge_indep(sets.len() as u64);
        let system = self.system;
        let eval = |s: &SolutionSet| system.is_feasible(s.members());
        Ok(if sets.len() >= PARALLEL_MIN_BATCH {
            sets.par_iter().map(eval).collect()
        } else {
            sets.iter().map(eval).collect()
        })
    }

    /// Feasibility of `base ∪ {e}` for each candidate, one independence round
    /// (no round when `candidates` is empty).
    pub fn extension_batch(&mut self, base: &SolutionSet, candidates: &[ElementId]) -> Result<Vec<bool>> {
        base.validate(self.ground)?;
        self.check_elements(candidates)?;
        self.charge_indep(candidates.len() as u64);
        if candidates.len() < PARALLEL_MIN_BATCH {
            return Ok(self.system.extensions(base, candidates));
        }
        let chunk = candidates
            .len()
            .div_ceil(rayon::current_num_threads().max(1))
            .max(PARALLEL_MIN_BATCH / 2);
        let parts: Vec<Vec<bool>> = candidates
            .par_chunks(chunk)
            .map(|c| self.system.extensions(base, c))
            .collect();
        Ok(parts.into_iter().flatten().collect())
    }
}
