//! The self-check suite behind `verify`: exact checks plus Monte Carlo bound
//! comparisons, at sample counts scaled from one master setting.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::coupling::{canonical_coupling, lemma12_all};
use crate::error::Result;
use crate::experiments::{
    bound_report, hoeffding_check, inequality_chain, step_bound_check, tail_bound_experiment, theorem_c_checks,
    BoundCheck, BoundReport, Direction, Estimate, Sampling,
};
use crate::metric::{aut_count, e_bruteforce, e_exact, enumerate_aut, Shape, DEFAULT_ENUMERATION_CAP};
use crate::process::PairMode;
use crate::reconstruct::{theorem_b_chain, theorem_c_run, ReconstructionPlan};
use crate::rng::{stream, Role};
use crate::schedule::{build_schedule, condition_report, lemma21_extract, Schedule, Verdict};
use crate::words::block_decode;

#[derive(Clone, Debug, Serialize)]
pub struct ExactCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn exact(name: &str, pass: bool, detail: impl Into<String>) -> ExactCheck {
    ExactCheck { name: name.into(), pass, detail: detail.into() }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub samples: u64,
    pub exact: Vec<ExactCheck>,
    pub bounds: BoundReport,
    pub success: bool,
    /// Wall-clock time of the run; the only field that differs between runs.
    pub generated_at: String,
}

impl VerifyReport {
    /// JSON with the timestamp blanked, identical for identical inputs.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.generated_at.clear();
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

fn sched(text: &str) -> Schedule {
    build_schedule(&text.parse().expect("built-in spec parses")).expect("built-in spec builds")
}

fn coupling_cases(seed: u64) -> ExactCheck {
    let mut rng = stream(seed, 0, 0, Role::Custom(100));
    let mut bad = 0usize;
    let cases = 2_000;
    for _ in 0..cases {
        use rand::Rng;
        let size = rng.random_range(2..=8u64);
        let r = rng.random_range(1..=256usize);
        let w: Vec<u64> = (0..r).map(|_| rng.random_range(1..=size)).collect();
        let ok = canonical_coupling(&w, size).is_ok()
            && lemma12_all(&w, size).map(|v| v.iter().all(|p| p.canonical_matches == p.formula_holds)).unwrap_or(false);
        bad += usize::from(!ok);
    }
    exact("canonical coupling equivalence", bad == 0, format!("{cases} random words, {bad} failures"))
}

fn metric_oracle() -> ExactCheck {
    let s = sched("ratios:[2,2],N=2");
    let mut bad = 0;
    for x in 0..16u64 {
        for y in 0..16u64 {
            let xw = block_decode(x + 1, 4, 2).expect("fits");
            let yw = block_decode(y + 1, 4, 2).expect("fits");
            let fast = e_exact(&s, -2, 0, &xw, &yw);
            let slow = e_bruteforce(&s, -2, 0, &xw, &yw, DEFAULT_ENUMERATION_CAP);
            bad += usize::from(!matches!((fast, slow), (Ok(a), Ok(b)) if a == b));
        }
    }
    exact("orbit distance recursion vs enumeration", bad == 0, format!("256 pairs, {bad} differences"))
}

fn aut_counts() -> ExactCheck {
    let cases: [(&[usize], u64); 4] = [(&[2], 2), (&[2, 2], 8), (&[2, 2, 2], 128), (&[3, 2], 48)];
    let mut detail = Vec::new();
    let mut pass = true;
    for (ratios, expected) in cases {
        let shape = Shape::new(ratios.to_vec(), 1).expect("valid shape");
        let listed = enumerate_aut(&shape, DEFAULT_ENUMERATION_CAP).map(|v| v.len() as u64).unwrap_or(0);
        let spec = format!(
            "ratios:[{}],N=2",
            ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
        );
        let formula = aut_count(&sched(&spec), -(ratios.len() as i64), 0).ok().and_then(|c| c.count);
        pass &= listed == expected && formula == Some(BigUint::from(expected));
        detail.push(format!("{ratios:?}: {listed}"));
    }
    exact("automorphism counts", pass, detail.join(", "))
}

fn classifier() -> ExactCheck {
    let cases = [
        ("tower2:depth=4,N=2", Verdict::NotDelta),
        ("ex2:depth=4,N=2", Verdict::Delta),
        ("extract:base=(ex2:depth=4,N=2),keep=[-4,-2,0]", Verdict::NotDelta),
    ];
    let got: Vec<Verdict> = cases.iter().map(|(s, _)| condition_report(&sched(s), 256).verdict).collect();
    let pass = cases.iter().zip(&got).all(|((_, want), got)| want == got);
    exact("classifier verdicts", pass, format!("{got:?}"))
}

fn extraction() -> ExactCheck {
    let a: Vec<f64> = (0..64).map(|n| 0.5f64.powi(n)).collect();
    let b = vec![1.0; 64];
    match lemma21_extract(&a, &b, 2.0) {
        Ok(e) => {
            let masses_ok = e.b_masses.iter().all(|&m| (2.0..4.0).contains(&m));
            exact(
                "interval extraction",
                e.a_mass <= 8.0 && masses_ok && !e.intervals.is_empty(),
                format!("{} intervals, a-mass {}", e.intervals.len(), e.a_mass),
            )
        }
        Err(err) => exact("interval extraction", false, err.to_string()),
    }
}

/// Runs the suite. `samples` sets the count for the cheap checks; heavier
/// ones use at most a tenth of it.
pub fn run_verify(seed: u64, samples: u64, exec: crate::Execution) -> Result<VerifyReport> {
    let base = Sampling::new(samples, seed).with_exec(exec);
    let heavy = Sampling { samples: (samples / 10).max(1_000), ..base };
    let exact = vec![coupling_cases(seed), metric_oracle(), aut_counts(), classifier(), extraction()];

    let mut checks: Vec<BoundCheck> = Vec::new();
    for k in 4..=12u32 {
        let (_, check) = step_bound_check(&sched(&format!("ratios:[2^{k}],N=2")), 0, &base)?;
        checks.push(check);
    }

    let chain = theorem_b_chain(&sched("ratios:[2^12,4,2],N=2"), true, &heavy)?;
    checks.push(BoundCheck::new(
        "coupled chain keeps its first step",
        Direction::AtLeast,
        Estimate::from_counts(chain.per_time.last().expect("nonempty").matches, chain.samples, seed),
        1.0 - chain.start_bound,
    ));

    let half = BigRational::new(1.into(), 2.into());
    let plan = ReconstructionPlan::new(vec![-1, 0], vec![half, BigRational::one()], 1)?;
    let run = theorem_c_run(&sched("ratios:[4096,4],N=2"), &plan, 0, &base)?;
    checks.extend(theorem_c_checks(&run));

    let const2 = sched("const:r=2,depth=6,N=2");
    for n in [-4, -5, -6] {
        checks.push(tail_bound_experiment(&const2, n, None, &base)?.check);
    }
    for mode in [PairMode::IndependentProduct, PairMode::GreedyMatch { depth: 2 }] {
        checks.extend(inequality_chain(&const2, -6, mode, &heavy)?.checks);
    }

    checks.push(hoeffding_check(0.5, 100, 0.2, base.samples, seed, exec)?);

    let bounds = bound_report(checks)?;
    let success = bounds.success() && exact.iter().all(|c| c.pass);
    Ok(VerifyReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        samples,
        exact,
        bounds,
        success,
        generated_at: timestamp(),
    })
}

fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_checks_pass() {
        for c in [coupling_cases(1), metric_oracle(), aut_counts(), classifier(), extraction()] {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
