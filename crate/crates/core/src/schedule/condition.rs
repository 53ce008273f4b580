use num_bigint::BigUint;
use serde::Serialize;

use super::{describe_big, Schedule, ScheduleSpec};
use crate::real::{ln_biguint, ln_factorial, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// `Σ ln(r_n)/ℓ_n` converges.
    Delta,
    /// The series diverges.
    NotDelta,
    /// No family rule applies; only the numeric window is reported.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionRow {
    pub time: i64,
    pub ratio: String,
    pub length: String,
    /// `ln(r_n) / ℓ_n`.
    pub term: Real,
    /// `Σ_{k=n}^{0} ln(r_k)/ℓ_k`.
    pub tail_sum: Real,
    /// `ln(r_n!) / ℓ_{n-1}`.
    pub laurent_term: Real,
    pub laurent_tail_sum: Real,
    /// The term does not change the later tail at the working precision.
    pub term_below_precision: bool,
    pub laurent_below_precision: bool,
    /// `½ r ln r ≤ ln r! ≤ r ln r`.
    pub factorial_bounds_hold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub spec: String,
    pub precision_bits: u32,
    pub rows: Vec<ConditionRow>,
    pub verdict: Verdict,
    pub verdict_basis: String,
}

impl ConditionReport {
    /// Times whose term or Laurent term was too small to register.
    pub fn flagged_times(&self) -> Vec<i64> {
        self.rows
            .iter()
            .filter(|r| r.term_below_precision || r.laurent_below_precision)
            .map(|r| r.time)
            .collect()
    }
}

/// Numeric terms of both forms of the series on the window, plus the
/// symbolic verdict when the schedule belongs to a recognised family.
pub fn condition_report(schedule: &Schedule, precision_bits: u32) -> ConditionReport {
    let prec = precision_bits.max(16);
    let slack = Real::from_u64(1, prec).mul_pow2(-(prec as i64) + 16);
    let one = Real::from_u64(1, prec);
    let mut rows = Vec::with_capacity(schedule.depth() as usize);
    let mut tail = Real::zero(prec);
    let mut laurent_tail = Real::zero(prec);
    for t in schedule.ratio_times().rev() {
        let r = schedule.ratio(t);
        let len = Real::from_biguint(schedule.length(t), prec);
        let prev_len = Real::from_biguint(schedule.length(t - 1), prec);
        let ln_r = ln_biguint(r, prec);
        let term = &ln_r / &len;
        let lf = ln_factorial(r, prec);
        let laurent = &lf / &prev_len;

        let r_real = Real::from_biguint(r, prec);
        let upper = &r_real * &ln_r;
        let lower = upper.mul_pow2(-1);
        let widen = &one + &slack;
        let factorial_bounds_hold = lower <= &lf * &widen && lf <= &upper * &widen;

        let term_below_precision = t < 0 && term.negligible_against(&tail);
        let laurent_below_precision = t < 0 && laurent.negligible_against(&laurent_tail);
        tail = &tail + &term;
        laurent_tail = &laurent_tail + &laurent;
        rows.push(ConditionRow {
            time: t,
            ratio: describe_big(r),
            length: describe_big(schedule.length(t)),
            term,
            tail_sum: tail.clone(),
            laurent_term: laurent,
            laurent_tail_sum: laurent_tail.clone(),
            term_below_precision,
            laurent_below_precision,
            factorial_bounds_hold,
        });
    }
    rows.reverse();
    let (verdict, verdict_basis) = classify(schedule.spec());
    ConditionReport {
        spec: schedule.spec().to_string(),
        precision_bits: prec,
        rows,
        verdict,
        verdict_basis,
    }
}

/// Resolves nested extractions to a root family plus kept root times.
fn flatten(spec: &ScheduleSpec) -> (&ScheduleSpec, Option<Vec<i64>>) {
    match spec {
        ScheduleSpec::Extracted { base, keep } => {
            let (root, inner) = flatten(base);
            let composed = match inner {
                None => keep.clone(),
                Some(outer) => {
                    let last = outer.len() as i64 - 1;
                    keep.iter().map(|t| outer[(last + t) as usize]).collect()
                }
            };
            (root, Some(composed))
        }
        other => (other, None),
    }
}

/// Symbolic family rules. Finite data never decides convergence, so every
/// schedule outside these rules is `Inconclusive`.
pub fn classify(spec: &ScheduleSpec) -> (Verdict, String) {
    let (root, keep) = flatten(spec);
    let max_gap = keep
        .as_ref()
        .map(|k| k.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(1))
        .unwrap_or(1);
    let extracted = keep.is_some();
    match root {
        ScheduleSpec::Tower2 { .. } => (
            Verdict::NotDelta,
            if extracted {
                "tower family is NotDelta and extraction only enlarges the terms".into()
            } else {
                "tower family: log2(r_n)/l_n = (l_n - log2 l_n)/l_n tends to 1, so terms do not vanish".into()
            },
        ),
        ScheduleSpec::Ex2 { .. } if max_gap >= 2 => (
            Verdict::NotDelta,
            format!(
                "square-root family extracted with gaps up to {max_gap}: at each skip log2(r')/l' >= 2*2^sqrt(l)/l - log2(l)/l, \
                 which grows without bound when skips recur"
            ),
        ),
        ScheduleSpec::Ex2 { .. } => (
            Verdict::Delta,
            "square-root family: log2(r_n)/l_n <= 2/sqrt(l_n), a convergent series".into(),
        ),
        ScheduleSpec::ConstRatio { ratio, .. } if max_gap == 1 => (
            Verdict::Delta,
            format!("constant ratio {ratio}: terms ln(r)/r^|n| form a convergent geometric series"),
        ),
        ScheduleSpec::ConstRatio { .. } => (
            Verdict::Inconclusive,
            "constant ratio extracted with gaps: no rule covers arbitrary gap patterns".into(),
        ),
        ScheduleSpec::ExplicitRatios { .. } => (
            Verdict::Inconclusive,
            "explicit ratio list: convergence is not decidable from a finite window".into(),
        ),
        ScheduleSpec::Extracted { .. } => unreachable!("flatten removes extraction layers"),
    }
}

/// `ln(r!)` is bracketed by `½ r ln r` and `r ln r`; exposed for tests.
pub fn factorial_bracket(r: &BigUint, prec: u32) -> (Real, Real, Real) {
    let ln_r = ln_biguint(r, prec);
    let upper = &Real::from_biguint(r, prec) * &ln_r;
    (upper.mul_pow2(-1), ln_factorial(r, prec), upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_schedule;

    fn report(text: &str) -> ConditionReport {
        condition_report(&build_schedule(&text.parse().unwrap()).unwrap(), 256)
    }

    #[test]
    fn family_verdicts() {
        assert_eq!(report("tower2:depth=4,N=2").verdict, Verdict::NotDelta);
        assert_eq!(report("ex2:depth=4,N=2").verdict, Verdict::Delta);
        assert_eq!(report("const:r=2,depth=10,N=2").verdict, Verdict::Delta);
        assert_eq!(report("ratios:[2,3,4],N=2").verdict, Verdict::Inconclusive);
        assert_eq!(report("extract:base=(ex2:depth=4,N=2),keep=[-4,-2,0]").verdict, Verdict::NotDelta);
        assert_eq!(report("extract:base=(ex2:depth=4,N=2),keep=[-3,-2,-1]").verdict, Verdict::Delta);
        assert_eq!(
            report("extract:base=(extract:base=(ex2:depth=4,N=2),keep=[-3,-2,-1,0]),keep=[-3,-1,0]").verdict,
            Verdict::NotDelta
        );
        assert_eq!(
            report("extract:base=(const:r=2,depth=6,N=2),keep=[-6,-4,-2,0]").verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn constant_ratio_terms_are_geometric() {
        let rep = report("const:r=2,depth=10,N=2");
        let ln2 = std::f64::consts::LN_2;
        for row in &rep.rows {
            let expected = ln2 / 2f64.powi(-row.time as i32);
            assert!((row.term.to_f64() - expected).abs() < 1e-15);
            // ln(2!)/l_{n-1} = ln2 / 2^{|n|+1}
            assert!((row.laurent_term.to_f64() - expected / 2.0).abs() < 1e-15);
        }
        let total = rep.rows[0].tail_sum.to_f64();
        assert!((total - ln2 * (2.0 - 2f64.powi(-9))).abs() < 1e-14);
    }

    #[test]
    fn tails_are_nonincreasing_and_bounds_hold() {
        for text in ["tower2:depth=5,N=2", "ex2:depth=5,N=2", "ratios:[7,2,9,3],N=3"] {
            let rep = report(text);
            for pair in rep.rows.windows(2) {
                assert!(pair[0].tail_sum >= pair[1].tail_sum);
                assert!(pair[0].laurent_tail_sum >= pair[1].laurent_tail_sum);
            }
            assert!(rep.rows.iter().all(|r| r.factorial_bounds_hold), "{text}");
        }
    }

    #[test]
    fn tiny_terms_are_flagged() {
        let s = build_schedule(&"ratios:[2^40,2^30,4],N=2".parse().unwrap()).unwrap();
        assert!(condition_report(&s, 256).flagged_times().is_empty());
        // ln(r)/l at the earliest time is about 6e-9 against a tail near 6.6
        let coarse = condition_report(&s, 16);
        assert_eq!(coarse.rows[0].time, -2);
        assert!(coarse.rows[0].term_below_precision);
        assert!(!coarse.rows[0].term.is_zero());
        assert!(!coarse.rows.last().unwrap().term_below_precision);
    }

    #[test]
    fn tower_terms_approach_one_in_base_two() {
        let rep = report("tower2:depth=5,N=2");
        let row = &rep.rows[0]; // time -4, l = 2^16
        let log2_term = row.term.to_f64() / std::f64::consts::LN_2;
        assert!((log2_term - (65536.0 - 16.0) / 65536.0).abs() < 1e-12);
    }

    #[test]
    fn factorial_bracket_small_values() {
        for r in [2u32, 3, 10, 5000] {
            let (lo, mid, hi) = factorial_bracket(&BigUint::from(r), 128);
            assert!(lo.to_f64() <= mid.to_f64() + 1e-12 && mid <= hi, "{r}");
        }
    }
}
