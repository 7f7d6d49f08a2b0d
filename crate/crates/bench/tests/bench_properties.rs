use proptest::prelude::*;

use subopt_bench::instance::{parse_constraint, parse_objective};
use subopt_bench::record::{read_csv, read_jsonl, write_csv, write_jsonl};
use subopt_bench::runner::{run_algorithm, run_bench, AlgoSpec, BenchCell, BenchPlan, Preset, RunOptions};
use subopt_bench::{BenchRecord, InstanceSpec};

fn spec(objective: &str, constraint: &str, n: usize, seed: u64) -> InstanceSpec {
    InstanceSpec {
        id: None,
        n: Some(n),
        seed,
        objective: parse_objective(objective).unwrap(),
        constraint: parse_constraint(constraint).unwrap(),
    }
}

fn record() -> impl Strategy<Value = BenchRecord> {
    (
        ".{0,12}",
        "[a-z-]{1,16}",
        ".{0,30}",
        any::<u64>(),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        any::<[u64; 4]>(),
        0.0f64..1e6,
    )
        .prop_map(
            |(instance_id, algorithm, params, seed, value, c, wall_time_ms)| BenchRecord {
                instance_id,
                algorithm,
                params,
                seed,
                value,
                value_queries: c[0],
                value_rounds: c[1],
                indep_queries: c[2],
                indep_rounds: c[3],
                wall_time_ms,
            },
        )
}

proptest! {
    #[test]
    fn records_round_trip(records in prop::collection::vec(record(), 0..6)) {
        let mut csv = Vec::new();
        write_csv(&mut csv, &records).unwrap();
        prop_assert_eq!(read_csv(csv.as_slice()).unwrap(), records.clone());
        let mut jsonl = Vec::new();
        write_jsonl(&mut jsonl, &records).unwrap();
        prop_assert_eq!(read_jsonl(jsonl.as_slice()).unwrap(), records);
    }
}

fn mixed_plan() -> BenchPlan {
    let cells = vec![
        BenchCell {
            instance: spec("cut", "group-cap:3:6:2", 24, 1),
            algorithm: AlgoSpec::rep_sampling(Preset::PSystem, 0.2),
            seeds: (0..6).collect(),
            budget: None,
        },
        BenchCell {
            instance: spec("logdet", "intersection:2:4:2", 20, 2),
            algorithm: AlgoSpec::rep_sampling(Preset::PExtendible, 0.2),
            seeds: (0..6).collect(),
            budget: Some(150),
        },
        BenchCell {
            instance: spec("entropy:3", "uniform:5", 18, 3),
            algorithm: AlgoSpec::SampleGreedy { probability: None },
            seeds: (0..4).collect(),
            budget: None,
        },
        BenchCell {
            instance: spec("coverage", "partition:4:2", 32, 4),
            algorithm: AlgoSpec::RepeatedGreedy { iterations: Some(3) },
            seeds: vec![0],
            budget: None,
        },
    ];
    BenchPlan { cells }
}

#[test]
fn plan_output_is_deterministic() {
    let plan = mixed_plan();
    let opts = RunOptions { timing: false };
    let a = run_bench(&plan, opts).unwrap();
    let b = run_bench(&plan, opts).unwrap();
    assert!(a.failures.is_empty(), "{:?}", a.failures);
    assert_eq!(a.records.len(), 17);
    let encode = |r: &[BenchRecord]| {
        let mut csv = Vec::new();
        write_csv(&mut csv, r).unwrap();
        let mut jsonl = Vec::new();
        write_jsonl(&mut jsonl, r).unwrap();
        (csv, jsonl)
    };
    assert_eq!(encode(&a.records), encode(&b.records));
    // one record per (cell, seed), in plan order
    let seeds: Vec<u64> = a.records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 0]);
}

#[test]
fn records_copy_the_ledger() {
    let inst = spec("cut", "uniform:4", 16, 0).build().unwrap();
    let algo = AlgoSpec::Greedy;
    let out = run_algorithm(&inst, &algo, 0, None, false).unwrap();
    let plan = BenchPlan {
        cells: vec![BenchCell {
            instance: spec("cut", "uniform:4", 16, 0),
            algorithm: algo,
            seeds: vec![0],
            budget: None,
        }],
    };
    let rec = &run_bench(&plan, RunOptions::default()).unwrap().records[0];
    assert_eq!(rec.value, out.value);
    assert_eq!(
        (rec.value_queries, rec.value_rounds, rec.indep_queries, rec.indep_rounds),
        (
            out.ledger.value_queries,
            out.ledger.value_rounds,
            out.ledger.indep_queries,
            out.ledger.indep_rounds
        )
    );
}

#[test]
fn sampling_uses_fewer_rounds_than_greedy_at_scale() {
    let n = 2048;
    let inst = spec("coverage", &format!("uniform:{}", n / 4), n, 1).build().unwrap();
    let rep = run_algorithm(&inst, &AlgoSpec::rep_sampling(Preset::PSystem, 0.3), 1, None, false).unwrap();
    let greedy = run_algorithm(&inst, &AlgoSpec::Greedy, 1, None, false).unwrap();
    assert!(
        rep.ledger.value_rounds < greedy.ledger.value_rounds,
        "{} vs {}",
        rep.ledger.value_rounds,
        greedy.ledger.value_rounds
    );
}
