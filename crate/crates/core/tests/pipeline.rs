use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;

use splitword::coupling::{change_innovations, restore_innovations, CouplingKind, PlanRule};
use splitword::experiments::Sampling;
use splitword::process::{simulate_pair, simulate_path, Levels, PairConfig, PairMode};
use splitword::reconstruct::{theorem_b_chain, theorem_c_run, ReconstructionPlan};
use splitword::rng::replica_seed;
use splitword::schedule::build_schedule;
use splitword::Execution;

fn levels(spec: &str) -> Arc<Levels> {
    let s = build_schedule(&spec.parse().unwrap()).unwrap();
    Arc::new(Levels::new(&s, 1 << 24).unwrap())
}

fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum()
}

#[test]
fn changed_innovations_round_trip() {
    let lv = levels("ratios:[16,8,4],N=2");
    let rule = PlanRule::new()
        .with(-2, CouplingKind::Full)
        .with(-1, CouplingKind::Partial { prefix: 2 })
        .with(0, CouplingKind::Full);
    for i in 0..500 {
        let p = simulate_path(&lv, 5, i);
        let changed = change_innovations(&p, &rule).unwrap();
        assert_eq!(restore_innovations(&p, &changed, &rule).unwrap(), p.innovations());
    }
}

#[test]
fn coupled_innovations_are_uniform() {
    // 64 blocks of 8 letters: canonical coupling over 256 block letters
    let lv = levels("ratios:[64,8],N=2");
    let rule = PlanRule::new().with(-1, CouplingKind::Full);
    let mut counts = vec![0u64; 64];
    let samples = 20_000u64;
    for i in 0..samples {
        let p = simulate_path(&lv, 17, i);
        counts[change_innovations(&p, &rule).unwrap()[0] - 1] += 1;
    }
    let stat = chi_square(&counts, &vec![samples as f64 / 64.0; 64]);
    // 99.9% point of chi-square with 63 degrees of freedom is about 103.4
    assert!(stat < 103.4, "chi-square {stat}");
}

#[test]
fn coupled_innovation_is_independent_of_the_parent() {
    let lv = levels("ratios:[64,8],N=2");
    let rule = PlanRule::new().with(-1, CouplingKind::Full);
    let mut table = [[0u64; 2]; 4];
    let samples = 20_000u64;
    for i in 0..samples {
        let p = simulate_path(&lv, 23, i);
        let v = change_innovations(&p, &rule).unwrap()[0];
        let first = p.word(-2)[0] as usize - 1;
        table[(v - 1) / 16][first] += 1;
    }
    let rows: Vec<f64> = table.iter().map(|r| (r[0] + r[1]) as f64).collect();
    let cols: Vec<f64> = (0..2).map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64).collect();
    let n = samples as f64;
    let observed: Vec<u64> = table.iter().flatten().copied().collect();
    let expected: Vec<f64> = rows.iter().flat_map(|r| cols.iter().map(move |c| r * c / n)).collect();
    // 3 degrees of freedom, 99.9% point 16.27
    assert!(chi_square(&observed, &expected) < 16.27);
}

#[test]
fn pairs_follow_the_splitting_rule() {
    let lv = levels("const:r=2,depth=5,N=2");
    for mode in [PairMode::IndependentProduct, PairMode::Mirror, PairMode::GreedyMatch { depth: 2 }] {
        let config = PairConfig { mode, split: -3, table_cap: 1 << 20 };
        for i in 0..50 {
            let (x, y) = simulate_pair(&lv, &config, 9, i).unwrap();
            assert!(x.splitting_holds() && y.splitting_holds());
            if mode == PairMode::Mirror {
                assert_eq!(x.innovations()[3..], y.innovations()[3..]);
            }
        }
    }
}

#[test]
fn results_do_not_depend_on_execution_mode() {
    let s = build_schedule(&"ratios:[256,4],N=2".parse().unwrap()).unwrap();
    let half = BigRational::new(1.into(), 2.into());
    let plan = ReconstructionPlan::new(vec![-1, 0], vec![half, BigRational::one()], 1).unwrap();
    let par = Sampling::new(3_000, 4).with_exec(Execution::Parallel);
    let seq = par.with_exec(Execution::Sequential);
    let a = theorem_c_run(&s, &plan, 0, &par).unwrap();
    let b = theorem_c_run(&s, &plan, 0, &seq).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let a = theorem_b_chain(&s, true, &par).unwrap();
    let b = theorem_b_chain(&s, true, &seq).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn replica_seeds_are_distinct_and_reproducible() {
    let seeds: std::collections::HashSet<u64> = (0..100_000).map(|i| replica_seed(1, i)).collect();
    assert_eq!(seeds.len(), 100_000);
    assert_eq!(replica_seed(1, 77), replica_seed(1, 77));
}
