use std::sync::atomic::{AtomicU64, Ordering};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subopt_core::baselines::{repeated_greedy, run_greedy};
use subopt_core::constraints::{Matroid, MatroidIntersection, PartitionMatroid, UniformMatroid};
use subopt_core::objectives::{CoverageInstance, CutGraph, ModularWeights};
use subopt_core::sampling::{
    prefix_feasible_max, rand_sampling, rand_sequence, search_first_shrunk, threshold_slack, ThresholdConfig,
    TraceEvent,
};
use subopt_core::{
    rep_sampling, ElementId, Error, IndependenceSystem, SamplingParams, Session, SolutionSet, StreamSeed, SubmodularFn,
    Tracer,
};

/// Counts every call that reaches the wrapped objective.
struct CountingFn<F> {
    inner: F,
    calls: AtomicU64,
}

impl<F: SubmodularFn> SubmodularFn for CountingFn<F> {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }
    fn value(&self, set: &[ElementId]) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(set)
    }
}

struct CountingSystem<S> {
    inner: S,
    calls: AtomicU64,
}

impl<S: IndependenceSystem> IndependenceSystem for CountingSystem<S> {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }
    fn is_feasible(&self, set: &[ElementId]) -> bool {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.is_feasible(set)
    }
    fn p(&self) -> usize {
        self.inner.p()
    }
    fn rank_bound(&self) -> usize {
        self.inner.rank_bound()
    }
    fn is_extendible(&self) -> bool {
        self.inner.is_extendible()
    }
}

fn cut_instance(n: usize, seed: u64) -> CutGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < 0.3 {
                edges.push((u, v, rng.random_range(0.5..2.0)));
            }
        }
    }
    CutGraph::new(n, &edges).unwrap()
}

fn coverage_instance(n: usize, seed: u64) -> CoverageInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = 4 * n;
    let sets = (0..n)
        .map(|_| (0..6).map(|_| rng.random_range(0..u)).collect())
        .collect();
    CoverageInstance::new(sets, vec![1.0; u]).unwrap()
}

fn random_partition(n: usize, blocks: usize, seed: u64) -> PartitionMatroid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block_of = (0..n).map(|_| Some(rng.random_range(0..blocks))).collect();
    let caps = (0..blocks).map(|_| rng.random_range(1..4)).collect();
    PartitionMatroid::new(n, block_of, caps).unwrap()
}

fn ids(r: std::ops::Range<usize>) -> Vec<ElementId> {
    r.map(ElementId::from).collect()
}

fn linear_scan(sizes: &[usize], target: f64) -> usize {
    sizes
        .iter()
        .position(|&s| (s as f64) < target)
        .map_or(sizes.len() + 1, |i| i + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eta_search_equals_linear_scan(
        steps in prop::collection::vec(0usize..4, 0..60),
        start in 0usize..200,
        eps in 0.01f64..0.99,
    ) {
        let mut sizes = Vec::with_capacity(steps.len());
        let mut cur = start;
        for d in steps {
            cur = cur.saturating_sub(d);
            sizes.push(cur);
        }
        let target = (1.0 - eps) * start as f64;
        let got = search_first_shrunk(sizes.len(), target, |j| Ok(sizes[j - 1])).unwrap();
        prop_assert_eq!(got, linear_scan(&sizes, target));
    }

    #[test]
    fn prefix_search_equals_linear_scan(n in 1usize..=10, seed in any::<u64>(), base_mask in 0u32..1024) {
        let pm = random_partition(n, 3, seed);
        let f = ModularWeights::new(vec![1.0; n]).unwrap();
        let mut base = SolutionSet::new();
        for i in 0..n {
            if base_mask >> i & 1 == 1 && pm.is_feasible(base.with(ElementId::from(i)).members()) {
                base.insert(ElementId::from(i));
            }
        }
        let seq: Vec<ElementId> = ids(0..n).into_iter().filter(|&e| !base.contains(e)).collect();
        let expect = (0..=seq.len())
            .take_while(|&j| {
                let mut s = base.clone();
                s.extend(seq[..j].iter().copied());
                pm.is_feasible(s.members())
            })
            .last()
            .unwrap();
        let mut session = Session::new(&f, &pm);
        prop_assert_eq!(prefix_feasible_max(&mut session, &seq, &base).unwrap(), expect);
    }

    /// `S ∪ A` is feasible and no remaining element of `X` extends it.
    #[test]
    fn rand_sequence_is_maximal(n in 1usize..=10, seed in any::<u64>(), base_mask in 0u32..1024, x_mask in 0u32..1024) {
        let a = random_partition(n, 3, seed);
        let b = random_partition(n, 2, seed.wrapping_add(1));
        let mi = MatroidIntersection::new(vec![Matroid::from(a), Matroid::from(b)]).unwrap();
        let f = ModularWeights::new(vec![1.0; n]).unwrap();
        let mut s = SolutionSet::new();
        for i in 0..n {
            if base_mask >> i & 1 == 1 && mi.is_feasible(s.with(ElementId::from(i)).members()) {
                s.insert(ElementId::from(i));
            }
        }
        let x: Vec<ElementId> = (0..n).filter(|i| x_mask >> i & 1 == 1).map(ElementId::from).filter(|&e| !s.contains(e)).collect();
        let mut session = Session::new(&f, &mi);
        let seq = rand_sequence(&mut session, &x, &s, &mut StreamSeed(seed).stream(0, 0)).unwrap();
        let mut all = s.clone();
        for &e in &seq {
            prop_assert!(x.contains(&e) && all.insert(e));
        }
        prop_assert!(mi.is_feasible(all.members()));
        for &e in &x {
            if !all.contains(e) {
                prop_assert!(!mi.is_feasible(all.with(e).members()));
            }
        }
        prop_assert_eq!(session.ledger().value_queries, 0);
    }

    /// Every returned set is feasible, and the ledger counts exactly the
    /// calls that reached the oracles.
    #[test]
    fn ledger_matches_oracle_calls(n in 4usize..=24, seed in any::<u64>(), eps in 0.05f64..0.5) {
        let f = CountingFn { inner: cut_instance(n, seed), calls: AtomicU64::new(0) };
        let sys = CountingSystem { inner: random_partition(n, 3, seed), calls: AtomicU64::new(0) };
        let params = SamplingParams::p_system(1, eps).unwrap().with_seed(seed);
        let mut session = Session::new(&f, &sys);
        let mut tr = Tracer::enabled();
        let res = rep_sampling(&mut session, &params, &mut tr).unwrap();
        let l = res.ledger;
        prop_assert_eq!(l.value_queries, f.calls.load(Ordering::Relaxed));
        // debug builds re-check feasibility after every inner step, off the ledger
        let inner_steps = tr.events().iter().filter(|e| matches!(e, TraceEvent::Inner { .. })).count() as u64;
        let unmetered = if cfg!(debug_assertions) { inner_steps } else { 0 };
        prop_assert_eq!(l.indep_queries + unmetered, sys.calls.load(Ordering::Relaxed));
        prop_assert!(sys.inner.is_feasible(res.solution.members()));
        prop_assert!(l.value_queries >= l.value_rounds);
        prop_assert!(l.indep_queries >= l.indep_rounds);
        prop_assert!((res.value - f.inner.value(res.solution.members())).abs() < 1e-9);
    }

    #[test]
    fn greedy_ledger_matches_oracle_calls(n in 1usize..=20, seed in any::<u64>()) {
        let f = CountingFn { inner: coverage_instance(n, seed), calls: AtomicU64::new(0) };
        let sys = CountingSystem { inner: UniformMatroid::new(n, n / 3 + 1).unwrap(), calls: AtomicU64::new(0) };
        let mut session = Session::new(&f, &sys);
        let res = run_greedy(&mut session).unwrap();
        prop_assert_eq!(res.ledger.value_queries, f.calls.load(Ordering::Relaxed));
        prop_assert_eq!(res.ledger.indep_queries, sys.calls.load(Ordering::Relaxed));
        prop_assert_eq!(res.ledger.value_rounds, res.solution.len() as u64 + 1);
    }

    /// Pairwise disjoint passes, each feasible, and `Λ_j ⊆ Ω_j`.
    #[test]
    fn passes_are_disjoint(n in 4usize..=30, seed in any::<u64>(), m in 1usize..=4) {
        let f = coverage_instance(n, seed);
        let pm = random_partition(n, 4, seed);
        let params = SamplingParams::new(0.2, m, 1.0, 0.5, 1).unwrap().with_seed(seed);
        let mut session = Session::new(&f, &pm);
        let res = rep_sampling(&mut session, &params, &mut Tracer::disabled()).unwrap();
        prop_assert_eq!(res.per_iteration.len(), m);
        for (i, a) in res.per_iteration.iter().enumerate() {
            prop_assert!(pm.is_feasible(a.omega.members()));
            prop_assert!(a.lambda.is_subset(&a.omega));
            for b in &res.per_iteration[i + 1..] {
                prop_assert!(a.omega.iter().all(|e| !b.omega.contains(e)));
            }
        }
        let best = res.per_iteration.iter().flat_map(|it| [it.omega_value, it.lambda_value]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(res.value, best);
    }

    #[test]
    fn same_seed_same_result(n in 4usize..=30, seed in any::<u64>()) {
        let f = cut_instance(n, seed);
        let pm = random_partition(n, 3, seed);
        let params = SamplingParams::p_extendible(1, 0.1).unwrap().with_seed(seed);
        let run = || {
            let mut session = Session::new(&f, &pm);
            let mut tr = Tracer::enabled();
            let res = rep_sampling(&mut session, &params, &mut tr).unwrap();
            (res, tr.into_events())
        };
        prop_assert_eq!(run(), run());
    }

    /// Replays the trace: each admitted element was a candidate at the head
    /// of its inner step and had marginal at least δ on the solution then.
    #[test]
    fn trace_replay_threshold_discipline(n in 5usize..=40, k in 1usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let f = ModularWeights::new(w).unwrap();
        let u = UniformMatroid::new(n, k).unwrap();
        let cfg = ThresholdConfig { lambda: 0.2, epsilon: 0.1, phi1: 1.0 };
        let mut session = Session::new(&f, &u);
        let mut tr = Tracer::enabled();
        let out = rand_sampling(&mut session, &ids(0..n), &cfg, StreamSeed(seed), 0, &mut tr).unwrap();
        prop_assert!(out.len() <= k);
        let mut s = SolutionSet::new();
        let mut floor = 0.0;
        for ev in tr.events() {
            match ev {
                TraceEvent::Level { delta, floor: fl, .. } => {
                    prop_assert!(*delta >= *fl);
                    floor = *fl;
                }
                TraceEvent::Inner { delta, candidates, added, eta, sequence_len, .. } => {
                    prop_assert!(*delta >= floor);
                    prop_assert!(*eta >= 1 && *eta <= sequence_len + 1);
                    prop_assert_eq!(added.len(), eta - 1);
                    for &e in added {
                        prop_assert!(candidates.contains(&e));
                        let gain = f.value(s.with(e).members()) - f.value(s.members());
                        prop_assert!(gain >= delta - threshold_slack(*delta), "{gain} < {delta}");
                    }
                    s.extend(added.iter().copied());
                }
                TraceEvent::Iteration { .. } => {}
            }
        }
        prop_assert_eq!(s, out);
    }
}

#[test]
fn budget_refuses_batches_and_keeps_a_feasible_incumbent() {
    let f = coverage_instance(60, 3);
    let pm = random_partition(60, 5, 3);
    let params = SamplingParams::p_system(1, 0.1).unwrap().with_seed(1);
    let mut last = f64::NEG_INFINITY;
    for budget in [1u64, 20, 80, 200, 800, 5000] {
        let mut session = Session::new(&f, &pm).with_budget(budget);
        match rep_sampling(&mut session, &params, &mut Tracer::disabled()) {
            Ok(_) => {}
            Err(Error::BudgetExhausted {
                budget: b,
                used,
                requested,
            }) => {
                assert_eq!(b, budget);
                assert!(used + requested > budget);
            }
            Err(e) => panic!("{e}"),
        }
        assert!(session.ledger().value_queries <= budget);
        if let Some(inc) = session.incumbent() {
            assert!(pm.is_feasible(inc.set.members()));
            assert!((inc.value - f.value(inc.set.members())).abs() < 1e-9);
            assert!(inc.value >= last);
            last = inc.value;
        }
    }
}

#[test]
fn repeated_greedy_beats_or_ties_single_greedy() {
    for seed in 0..20 {
        let f = cut_instance(15, seed);
        let u = UniformMatroid::new(15, 5).unwrap();
        let one = run_greedy(&mut Session::new(&f, &u)).unwrap();
        let three = repeated_greedy(&mut Session::new(&f, &u), 3).unwrap();
        assert!(three.value >= one.value);
    }
}
