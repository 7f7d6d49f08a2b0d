//! Brute-force optimum and Monte Carlo estimates, outside the query ledger.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ElementId, IndependenceSystem, SolutionSet, SubmodularFn};
use crate::rng::StreamSeed;

/// Largest pool accepted by [`brute_force_opt`].
pub const BRUTE_FORCE_LIMIT: usize = 22;

/// Largest ground set accepted by [`quarter_sampling_check`].
pub const QUARTER_CHECK_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub opt_set: SolutionSet,
    pub opt_value: f64,
    pub feasible_count: u64,
}

fn subset(pool: &[ElementId], mask: u64) -> Vec<ElementId> {
    pool.iter()
        .enumerate()
        .filter_map(|(i, &e)| (mask >> i & 1 == 1).then_some(e))
        .collect()
}

/// Best feasible subset of `pool`. Ties go to the subset with the smallest
/// bitmask over pool positions, so `∅` wins when everything is equal.
pub fn brute_force_opt(
    objective: &dyn SubmodularFn,
    system: &dyn IndependenceSystem,
    pool: &[ElementId],
) -> Result<BruteForceResult> {
    if pool.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::PoolTooLarge {
            size: pool.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let better = |a: (u64, f64, u64), b: (u64, f64, u64)| {
        let count = a.2 + b.2;
        let pick_b = b.1 > a.1 || (b.1 == a.1 && b.0 < a.0);
        if pick_b {
            (b.0, b.1, count)
        } else {
            (a.0, a.1, count)
        }
    };
    let none = (u64::MAX, f64::NEG_INFINITY, 0u64);
    let (mask, value, count) = (0..1u64 << pool.len())
        .into_par_iter()
        .fold(
            || none,
            |acc, mask| {
                let set = subset(pool, mask);
                if !system.is_feasible(&set) {
                    return acc;
                }
                better(acc, (mask, objective.value(&set), 1))
            },
        )
        .reduce(|| none, better);
    if count == 0 {
        return Err(Error::InvalidConstraint(
            "no feasible subset, not even the empty set".into(),
        ));
    }
    Ok(BruteForceResult {
        opt_set: subset(pool, mask).into_iter().collect(),
        opt_value: value,
        feasible_count: count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed_base: u64,
}

impl MonteCarloEstimate {
    /// Mean and standard error (sample standard deviation over `√trials`).
    pub fn from_samples(samples: &[f64], seed_base: u64) -> Result<Self> {
        let trials = samples.len();
        if trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let stderr = if trials < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
            (var / trials as f64).sqrt()
        };
        Ok(MonteCarloEstimate {
            mean,
            stderr,
            trials,
            seed_base,
        })
    }
}

/// Runs `runner(seed)` for `seed_base .. seed_base + trials` in parallel and
/// aggregates the returned values.
pub fn estimate_expected_value<F>(runner: F, trials: usize, seed_base: u64) -> Result<MonteCarloEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| runner(seed_base.wrapping_add(i)))
        .collect::<Result<_>>()?;
    MonteCarloEstimate::from_samples(&samples, seed_base)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarterCheck {
    pub estimate: MonteCarloEstimate,
    pub opt_value: f64,
}

impl QuarterCheck {
    /// `mean ≥ OPT/4 − 3·stderr`.
    pub fn holds(&self) -> bool {
        self.estimate.mean >= self.opt_value / 4.0 - 3.0 * self.estimate.stderr
    }
}

/// Estimates `E[f(U)]` for `U` keeping each element with probability 1/2
/// and compares it with the unconstrained optimum.
pub fn quarter_sampling_check(objective: &dyn SubmodularFn, trials: usize, seed_base: u64) -> Result<QuarterCheck> {
    let n = objective.ground_size();
    if n > QUARTER_CHECK_LIMIT {
        return Err(Error::PoolTooLarge {
            size: n,
            limit: QUARTER_CHECK_LIMIT,
        });
    }
    let pool: Vec<ElementId> = (0..n).map(ElementId::from).collect();
    let free = crate::constraints::Unconstrained::new(n);
    let opt = brute_force_opt(objective, &free, &pool)?;
    let estimate = estimate_expected_value(
        |seed| {
            let mut rng = StreamSeed(seed).stream(0, 0);
            let u: Vec<ElementId> = pool.iter().copied().filter(|_| rng.random::<f64>() < 0.5).collect();
            Ok(objective.value(&u))
        },
        trials,
        seed_base,
    )?;
    Ok(QuarterCheck {
        estimate,
        opt_value: opt.opt_value,
    })
}

/// Largest ground set accepted by [`axiom_report`].
pub const AXIOM_LIMIT: usize = 10;

/// Exhaustive check of the independence-system axioms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub empty_feasible: bool,
    pub downward_closed: bool,
    /// Largest ratio of base sizes over all restrictions (`1.0` if every base is empty).
    pub base_ratio: f64,
    /// Augmentation, checked when the system declares `p = 1` and extendibility.
    pub augmentation: Option<bool>,
    /// Exchange with at most `p` removals, checked when the system declares extendibility.
    pub exchange: Option<bool>,
}

impl AxiomReport {
    pub fn passes(&self, p: usize) -> bool {
        self.empty_feasible
            && self.downward_closed
            && self.base_ratio <= p as f64 + 1e-12
            && self.augmentation != Some(false)
            && self.exchange != Some(false)
    }
}

fn subsets_of(mask: u32) -> impl Iterator<Item = u32> {
    // all submasks of `mask`, including 0 and `mask`
    let mut sub = mask;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = sub;
        if sub == 0 {
            done = true;
        } else {
            sub = (sub - 1) & mask;
        }
        Some(out)
    })
}

/// Enumerates every subset of the ground set and checks the axioms.
pub fn axiom_report(system: &dyn IndependenceSystem) -> Result<AxiomReport> {
    let n = system.ground_size();
    if n > AXIOM_LIMIT {
        return Err(Error::PoolTooLarge {
            size: n,
            limit: AXIOM_LIMIT,
        });
    }
    let full: u32 = (1u32 << n) - 1;
    let members =
        |mask: u32| -> Vec<ElementId> { (0..n).filter(|i| mask >> i & 1 == 1).map(ElementId::from).collect() };
    let feasible: Vec<bool> = (0..=full).map(|m| system.is_feasible(&members(m))).collect();

    let downward_closed = (0..=full)
        .filter(|&m| feasible[m as usize])
        .all(|m| (0..n).all(|i| m >> i & 1 == 0 || feasible[(m & !(1 << i)) as usize]));

    let mut base_ratio: f64 = 1.0;
    for restriction in 0..=full {
        let (mut lo, mut hi) = (u32::MAX, 0u32);
        for b in subsets_of(restriction) {
            if !feasible[b as usize] {
                continue;
            }
            let rest = restriction & !b;
            let maximal = (0..n).all(|i| rest >> i & 1 == 0 || !feasible[(b | 1 << i) as usize]);
            if maximal {
                lo = lo.min(b.count_ones());
                hi = hi.max(b.count_ones());
            }
        }
        if hi > 0 {
            base_ratio = base_ratio.max(if lo == 0 { f64::INFINITY } else { hi as f64 / lo as f64 });
        }
    }

    let p = system.p();
    let extendible = system.is_extendible();
    let augmentation = (extendible && p == 1).then(|| {
        (0..=full).filter(|&a| feasible[a as usize]).all(|a| {
            (0..=full)
                .filter(|&b| feasible[b as usize] && b.count_ones() > a.count_ones())
                .all(|b| (0..n).any(|i| (b & !a) >> i & 1 == 1 && feasible[(a | 1 << i) as usize]))
        })
    });
    let exchange = extendible.then(|| {
        (0..=full).filter(|&b| feasible[b as usize]).all(|b| {
            subsets_of(b).all(|a| {
                (0..n)
                    .filter(|i| b >> i & 1 == 0 && feasible[(a | 1 << i) as usize])
                    .all(|i| {
                        subsets_of(b & !a)
                            .any(|z| z.count_ones() as usize <= p && feasible[((b & !z) | 1 << i) as usize])
                    })
            })
        })
    });

    Ok(AxiomReport {
        empty_feasible: feasible[0],
        downward_closed,
        base_ratio,
        augmentation,
        exchange,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Unconstrained, UniformMatroid};
    use crate::objectives::{ConstantObjective, CutGraph, ModularWeights};

    fn pool(n: usize) -> Vec<ElementId> {
        (0..n).map(ElementId::from).collect()
    }

    #[test]
    fn modular_uniform_example() {
        let f = ModularWeights::new(vec![3.0, 1.0, 2.0]).unwrap();
        let u = UniformMatroid::new(3, 2).unwrap();
        let r = brute_force_opt(&f, &u, &pool(3)).unwrap();
        assert_eq!(r.opt_set.sorted(), vec![ElementId(0), ElementId(2)]);
        assert_eq!(r.opt_value, 5.0);
        assert_eq!(r.feasible_count, 7);
    }

    #[test]
    fn zero_objective_prefers_empty() {
        let f = ConstantObjective::new(5, 0.0).unwrap();
        let r = brute_force_opt(&f, &Unconstrained::new(5), &pool(5)).unwrap();
        assert!(r.opt_set.is_empty());
        assert_eq!(r.opt_value, 0.0);
    }

    #[test]
    fn unit_triangle_cut() {
        let g = CutGraph::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let r = brute_force_opt(&g, &Unconstrained::new(3), &pool(3)).unwrap();
        assert_eq!(r.opt_value, 2.0);
        assert_eq!(r.opt_set.sorted(), vec![ElementId(0)]);
        assert_eq!(r.feasible_count, 8);
    }

    #[test]
    fn refuses_large_pool() {
        let f = ConstantObjective::new(23, 1.0).unwrap();
        assert!(matches!(
            brute_force_opt(&f, &Unconstrained::new(23), &pool(23)),
            Err(Error::PoolTooLarge { .. })
        ));
    }

    #[test]
    fn axioms_of_small_systems() {
        use crate::constraints::{GroupCapSystem, MatroidIntersection, PartitionMatroid};
        let u = UniformMatroid::new(5, 2).unwrap();
        let r = axiom_report(&u).unwrap();
        assert!(r.passes(1), "{r:?}");
        assert_eq!(r.augmentation, Some(true));

        let a = PartitionMatroid::from_blocks(6, &[vec![0, 1, 2], vec![3, 4, 5]], vec![1, 1]).unwrap();
        let b = PartitionMatroid::from_blocks(6, &[vec![0, 3], vec![1, 4], vec![2, 5]], vec![1, 1, 1]).unwrap();
        let mi = MatroidIntersection::new(vec![a.into(), b.into()]).unwrap();
        let r = axiom_report(&mi).unwrap();
        assert!(r.passes(2), "{r:?}");
        assert_eq!(r.augmentation, None);

        let g = GroupCapSystem::new(4, vec![vec![0, 1], vec![1, 2, 3]], vec![1, 1]).unwrap();
        let r = axiom_report(&g).unwrap();
        assert!(r.passes(2), "{r:?}");
        assert_eq!(r.exchange, None);
    }

    #[test]
    fn axioms_detect_broken_system() {
        // feasible iff size is not exactly 1: not downward closed
        struct Odd;
        impl IndependenceSystem for Odd {
            fn ground_size(&self) -> usize {
                3
            }
            fn is_feasible(&self, set: &[ElementId]) -> bool {
                set.len() != 1
            }
            fn p(&self) -> usize {
                1
            }
            fn rank_bound(&self) -> usize {
                3
            }
        }
        let r = axiom_report(&Odd).unwrap();
        assert!(!r.downward_closed);
        assert!(!r.passes(1));
    }

    #[test]
    fn deterministic_runner_has_zero_stderr() {
        let est = estimate_expected_value(|_| Ok(4.0), 40, 7).unwrap();
        assert_eq!((est.mean, est.stderr, est.trials), (4.0, 0.0, 40));
    }

    #[test]
    fn fair_coin_mean() {
        let est = estimate_expected_value(
            |seed| {
                Ok(if StreamSeed(seed).stream(0, 0).random::<bool>() {
                    1.0
                } else {
                    0.0
                })
            },
            2000,
            0,
        )
        .unwrap();
        assert!((est.mean - 0.5).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn stderr_matches_hand_computation() {
        let est = MonteCarloEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 0).unwrap();
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((est.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quarter_check_modular_and_constant() {
        let w = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let f = ModularWeights::new(w).unwrap();
        let q = quarter_sampling_check(&f, 3000, 11).unwrap();
        assert!((q.estimate.mean - 10.5).abs() <= 3.0 * q.estimate.stderr, "{q:?}");
        assert!(q.holds());

        let c = ConstantObjective::new(4, 2.5).unwrap();
        let q = quarter_sampling_check(&c, 50, 0).unwrap();
        assert_eq!(q.estimate.mean, 2.5);
        assert!(q.holds());
    }
}
