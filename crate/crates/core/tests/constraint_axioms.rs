use proptest::prelude::*;

use subopt_core::constraints::{
    GroupCapSystem, Matroid, MatroidIntersection, PartitionMatroid, Unconstrained, UniformMatroid,
};
use subopt_core::exhaustive::axiom_report;
use subopt_core::{ElementId, IndependenceSystem, SolutionSet};

fn partition_strategy(n: usize) -> impl Strategy<Value = PartitionMatroid> {
    (1usize..=3)
        .prop_flat_map(move |blocks| {
            (
                prop::collection::vec(prop::option::weighted(0.85, 0..blocks), n),
                prop::collection::vec(0usize..=3, blocks),
            )
        })
        .prop_map(move |(block_of, caps)| PartitionMatroid::new(n, block_of, caps).unwrap())
}

fn group_strategy(n: usize) -> impl Strategy<Value = GroupCapSystem> {
    prop::collection::vec((prop::collection::vec(0..n, 1..=n), 0usize..=3), 1..=3).prop_map(move |groups| {
        let (g, c): (Vec<_>, Vec<_>) = groups.into_iter().unzip();
        GroupCapSystem::new(n, g, c).unwrap()
    })
}

fn check(system: &dyn IndependenceSystem) -> Result<(), TestCaseError> {
    let report = axiom_report(system).unwrap();
    prop_assert!(report.passes(system.p()), "{report:?} with declared p = {}", system.p());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uniform_matroid_axioms(n in 1usize..=8, k in 0usize..=9) {
        let u = UniformMatroid::new(n, k).unwrap();
        check(&u)?;
        prop_assert_eq!(axiom_report(&u).unwrap().augmentation, Some(true));
    }

    #[test]
    fn partition_matroid_axioms(pm in (1usize..=8).prop_flat_map(partition_strategy)) {
        check(&pm)?;
        prop_assert_eq!(axiom_report(&pm).unwrap().augmentation, Some(true));
    }

    #[test]
    fn intersection_axioms(parts in (1usize..=7).prop_flat_map(|n| prop::collection::vec(partition_strategy(n), 1..=3))) {
        let mi = MatroidIntersection::new(parts.into_iter().map(Matroid::from).collect()).unwrap();
        check(&mi)?;
        prop_assert!(axiom_report(&mi).unwrap().exchange.is_some());
    }

    #[test]
    fn group_cap_axioms(g in (1usize..=8).prop_flat_map(group_strategy)) {
        check(&g)?;
    }

    /// The batched one-element extension query agrees with membership.
    #[test]
    fn extensions_agree_with_membership(
        pm in partition_strategy(8),
        g in group_strategy(8),
        base_mask in 0u32..256,
    ) {
        let systems: Vec<Box<dyn IndependenceSystem>> = vec![
            Box::new(pm),
            Box::new(g),
            Box::new(UniformMatroid::new(8, 3).unwrap()),
            Box::new(Unconstrained::new(8)),
        ];
        for sys in &systems {
            let base: SolutionSet = (0..8usize).filter(|i| base_mask >> i & 1 == 1).collect();
            let cands: Vec<ElementId> = (0..8usize).map(ElementId::from).collect();
            let got = sys.extensions(&base, &cands);
            for (e, ok) in cands.iter().zip(got) {
                let mut s = base.clone();
                s.insert(*e);
                prop_assert_eq!(ok, sys.is_feasible(s.members()));
            }
        }
    }
}

#[test]
fn unconstrained_axioms() {
    let r = axiom_report(&Unconstrained::new(6)).unwrap();
    assert!(r.passes(1));
    assert_eq!(r.base_ratio, 1.0);
}

#[test]
fn two_matroid_fixture_has_ratio_two() {
    let a = PartitionMatroid::from_blocks(4, &[vec![0, 1], vec![2, 3]], vec![1, 1]).unwrap();
    let b = PartitionMatroid::from_blocks(4, &[vec![0, 2], vec![1], vec![3]], vec![1, 1, 1]).unwrap();
    let mi = MatroidIntersection::new(vec![a.into(), b.into()]).unwrap();
    let r = axiom_report(&mi).unwrap();
    assert!(r.passes(2));
    assert_eq!(mi.p(), 2);
}
