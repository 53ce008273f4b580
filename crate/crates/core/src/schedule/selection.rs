use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Serialize, Serializer};

use super::{exact_log, ilog, Schedule};
use crate::real::{ln_biguint, Real, DEFAULT_PRECISION};

fn ratio_text<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(value)
}

fn opt_ratio_text<S: Serializer>(value: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectedIndex {
    /// Position in the plan, `-(len-1)..=0`.
    pub plan_index: i64,
    /// The selected window time.
    pub time: i64,
    /// `¼ log_N(r_t) / ℓ_t`.
    pub beta: Real,
    #[serde(serialize_with = "opt_ratio_text")]
    pub beta_exact: Option<BigRational>,
    /// `min(β, 1)` before rounding.
    pub alpha: Real,
    /// Rate after rounding; `alpha_rounded · ℓ_t / ℓ_next` is an integer.
    #[serde(serialize_with = "ratio_text")]
    pub alpha_rounded: BigRational,
    /// Whether `β_t ≥ 2^t |t|`.
    pub meets_threshold: bool,
    /// `α ℓ_t / ℓ_next`; absent for the last index.
    pub rho: Option<Real>,
    pub rho_at_least_8: Option<bool>,
    /// `(8/9) α ≤ α'`; absent for the last index.
    pub eight_ninths_holds: Option<bool>,
    /// `r_t ≥ N^{2 α' ℓ_t}`, checked exactly.
    pub condition1_holds: bool,
    /// `α' ℓ_t / ℓ_next` is an integer (for the last index, `α' ℓ_t` is).
    pub integrality_holds: bool,
}

impl SelectedIndex {
    pub fn alpha_rounded_f64(&self) -> f64 {
        self.alpha_rounded.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionPlan {
    pub spec: String,
    pub indices: Vec<SelectedIndex>,
    /// The threshold `β_t ≥ 2^t|t|` admitted no chain and was dropped.
    pub threshold_relaxed: bool,
    /// Rounded rates summed over even and odd plan indices.
    pub even_mass: Real,
    pub odd_mass: Real,
    pub diagnostic: Option<String>,
}

impl SelectionPlan {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn times(&self) -> Vec<i64> {
        self.indices.iter().map(|i| i.time).collect()
    }
}

struct Candidate {
    time: i64,
    beta: Real,
    ilog_ratio: u64,
    meets_threshold: bool,
}

/// `⌊α_i ℓ_i / ℓ_j⌋ = min(⌊⌊log_N r_i⌋ / 4ℓ_j⌋, ℓ_i/ℓ_j)`, exact.
fn rounded_numerator(s: &Schedule, c: &Candidate, next: Option<i64>) -> BigUint {
    let li = s.length(c.time);
    let lj = next.map(|t| s.length(t).clone()).unwrap_or_else(BigUint::one);
    let by_beta = BigUint::from(c.ilog_ratio) / (&lj * 4u32);
    let by_one = li / &lj;
    by_beta.min(by_one)
}

/// Picks selected times and rates for the `¬Δ` rewording: a strictly
/// increasing chain of window times maximizing `Σ β`, each rate rounded so
/// that `α' ℓ_t / ℓ_next` is a positive integer.
///
/// Indices must satisfy `β_t ≥ 2^t |t|`; when that leaves no chain of two
/// the threshold is dropped and the plan says so.
pub fn proposition21_construct(schedule: &Schedule) -> SelectionPlan {
    let prec = DEFAULT_PRECISION;
    let n = schedule.alphabet();
    let ln_n = ln_biguint(&BigUint::from(n), prec);
    let candidates: Vec<Candidate> = schedule
        .ratio_times()
        .map(|t| {
            let r = schedule.ratio(t);
            let four_len = Real::from_biguint(schedule.length(t), prec).mul_pow2(2);
            let beta = &ln_biguint(r, prec) / &(&ln_n * &four_len);
            let threshold = Real::from_u64(t.unsigned_abs(), prec).mul_pow2(t);
            Candidate {
                time: t,
                meets_threshold: beta >= threshold,
                beta,
                ilog_ratio: ilog(r, n),
            }
        })
        .collect();

    let strict: Vec<&Candidate> = candidates.iter().filter(|c| c.meets_threshold).collect();
    let all: Vec<&Candidate> = candidates.iter().collect();
    let (chain, relaxed) = match best_chain(schedule, &strict) {
        Some(c) => (c, false),
        None => match best_chain(schedule, &all) {
            Some(c) => (c, true),
            None => {
                return SelectionPlan {
                    spec: schedule.spec().to_string(),
                    indices: Vec::new(),
                    threshold_relaxed: false,
                    even_mass: Real::zero(prec),
                    odd_mass: Real::zero(prec),
                    diagnostic: Some(
                        "no pair of window times admits a positive integer rate: r_t >= N^(2 alpha l_t) \
                         fails for every usable alpha, the window is too Delta-like"
                            .into(),
                    ),
                }
            }
        },
    };

    let len = chain.len() as i64;
    let one = Real::from_u64(1, prec);
    let mut indices = Vec::with_capacity(chain.len());
    for (pos, c) in chain.iter().enumerate() {
        let next = chain.get(pos + 1).map(|n| n.time);
        let li = schedule.length(c.time);
        let alpha = if c.beta > one { one.clone() } else { c.beta.clone() };
        let q = rounded_numerator(schedule, c, next);
        let (steps, exponent) = match next {
            Some(t) => {
                let ratio = li / schedule.length(t);
                (ratio, &q * schedule.length(t) * 2u32)
            }
            None => (li.clone(), &q * 2u32),
        };
        let alpha_rounded = BigRational::new(BigInt::from(q.clone()), BigInt::from(steps.clone()));
        let integrality_holds = (&alpha_rounded * BigRational::from_integer(BigInt::from(steps.clone()))).is_integer();
        let condition1_holds = BigUint::from(c.ilog_ratio) >= exponent;
        let (rho, rho_at_least_8, eight_ninths_holds) = if next.is_some() {
            let rho = &alpha * &Real::from_biguint(&steps, prec);
            let rho8 = rho >= Real::from_u64(8, prec);
            let rounded = Real::from_ratio(&q, &steps, prec);
            let ok = &rounded * &Real::from_u64(9, prec) >= &alpha * &Real::from_u64(8, prec);
            (Some(rho), Some(rho8), Some(ok))
        } else {
            (None, None, None)
        };
        let beta_exact = exact_log(schedule.ratio(c.time), n).map(|e| {
            BigRational::new(BigInt::from(e), BigInt::from(li * 4u32))
        });
        indices.push(SelectedIndex {
            plan_index: pos as i64 - (len - 1),
            time: c.time,
            beta: c.beta.clone(),
            beta_exact,
            alpha,
            alpha_rounded,
            meets_threshold: c.meets_threshold,
            rho,
            rho_at_least_8,
            eight_ninths_holds,
            condition1_holds,
            integrality_holds,
        });
    }
    let mut even_mass = Real::zero(prec);
    let mut odd_mass = Real::zero(prec);
    for idx in &indices {
        let v = Real::from_ratio(
            &idx.alpha_rounded.numer().to_biguint().unwrap_or_default(),
            &idx.alpha_rounded.denom().to_biguint().unwrap_or_else(BigUint::one),
            prec,
        );
        if idx.plan_index % 2 == 0 {
            even_mass = &even_mass + &v;
        } else {
            odd_mass = &odd_mass + &v;
        }
    }
    let diagnostic = relaxed.then(|| {
        "no chain of two times meets beta_t >= 2^t |t| in-window; the threshold was dropped".to_string()
    });
    SelectionPlan {
        spec: schedule.spec().to_string(),
        indices,
        threshold_relaxed: relaxed,
        even_mass,
        odd_mass,
        diagnostic,
    }
}

/// Best chain of length at least two among `cands` (ascending times).
/// Ties go to the earliest start, then the earliest successor.
fn best_chain<'a>(s: &Schedule, cands: &[&'a Candidate]) -> Option<Vec<&'a Candidate>> {
    let k = cands.len();
    let four = BigUint::from(4u32);
    let edge = |i: usize, j: usize| -> bool {
        let need = s.length(cands[j].time) * &four;
        BigUint::from(cands[i].ilog_ratio) >= need
    };
    // best[i]: best chain of length >= 1 starting at i
    let mut best: Vec<Option<(Real, Option<usize>)>> = vec![None; k];
    for i in (0..k).rev() {
        let mut cur: Option<(Real, Option<usize>)> = (cands[i].ilog_ratio >= 4).then(|| (cands[i].beta.clone(), None));
        for j in i + 1..k {
            if let (Some((sum_j, _)), true) = (&best[j], edge(i, j)) {
                let total = &cands[i].beta + sum_j;
                let better = match &cur {
                    None => true,
                    Some((s0, _)) => total.cmp_total(s0) == Ordering::Greater,
                };
                if better {
                    cur = Some((total, Some(j)));
                }
            }
        }
        best[i] = cur;
    }
    let mut top: Option<(Real, usize, usize)> = None;
    for i in 0..k {
        for j in i + 1..k {
            if let (Some((sum_j, _)), true) = (&best[j], edge(i, j)) {
                let total = &cands[i].beta + sum_j;
                if top.as_ref().is_none_or(|(t, _, _)| total.cmp_total(t) == Ordering::Greater) {
                    top = Some((total, i, j));
                }
            }
        }
    }
    let (_, start, second) = top?;
    let mut chain = vec![cands[start]];
    let mut at = Some(second);
    while let Some(i) = at {
        chain.push(cands[i]);
        at = best[i].as_ref().and_then(|(_, n)| *n);
    }
    if chain.iter().any(|c| c.ilog_ratio == 0) || chain.len() < 2 {
        return None;
    }
    Some(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_schedule;
    use num_traits::Zero;

    fn plan(text: &str) -> SelectionPlan {
        proposition21_construct(&build_schedule(&text.parse().unwrap()).unwrap())
    }

    #[test]
    fn tower_depth_four_beta() {
        let s = build_schedule(&"tower2:depth=4,N=2".parse().unwrap()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let beta = (s.ratio(-3).bits() - 1) as f64 * ln2 / (4.0 * 16.0 * ln2);
        assert!((beta - 3.0 / 16.0).abs() < 1e-15);
        assert!(plan("tower2:depth=4,N=2").is_empty());
    }

    #[test]
    fn constant_two_gives_empty_plan() {
        let p = plan("const:r=2,depth=10,N=2");
        assert!(p.is_empty());
        assert!(p.diagnostic.is_some());
    }

    #[test]
    fn tower_depth_five_plan() {
        let p = plan("tower2:depth=5,N=2");
        assert_eq!(p.times(), vec![-4, -3]);
        assert!(p.threshold_relaxed);
        let first = &p.indices[0];
        assert_eq!(first.alpha_rounded, BigRational::new(1023.into(), 4096.into()));
        assert_eq!(first.rho_at_least_8, Some(true));
        assert_eq!(first.eight_ninths_holds, Some(true));
        let last = &p.indices[1];
        assert_eq!(last.beta_exact, Some(BigRational::new(3.into(), 16.into())));
        assert_eq!(last.alpha_rounded, BigRational::new(3.into(), 16.into()));
    }

    #[test]
    fn returned_plans_satisfy_exact_conditions() {
        for text in [
            "tower2:depth=5,N=2",
            "ratios:[2^40,2^12,16,2],N=2",
            "ratios:[1000,50,3],N=3",
            "ratios:[2^64,2^20,2^9,2^5],N=2",
            "ex2:depth=5,N=2",
        ] {
            let p = plan(text);
            for w in p.indices.windows(2) {
                assert!(w[0].time < w[1].time);
            }
            for idx in &p.indices {
                assert!(idx.condition1_holds, "{text} {}", idx.time);
                assert!(idx.integrality_holds, "{text} {}", idx.time);
                assert!(idx.alpha_rounded > BigRational::zero());
                assert!(idx.alpha_rounded <= BigRational::one());
            }
        }
    }

    #[test]
    fn strict_threshold_used_when_possible() {
        let p = plan("ratios:[2^32,16],N=2");
        assert!(!p.threshold_relaxed, "{:?}", p.times());
        assert!(p.indices.iter().all(|i| i.meets_threshold));
        assert_eq!(p.times(), vec![-1, 0]);
        assert_eq!(p.indices[0].alpha_rounded, BigRational::new(1.into(), 2.into()));
        assert_eq!(p.indices[0].rho_at_least_8, Some(true));
        assert_eq!(p.indices[1].alpha_rounded, BigRational::one());
        let total = (&p.even_mass + &p.odd_mass).to_f64();
        let direct: f64 = p.indices.iter().map(|i| i.alpha_rounded_f64()).sum();
        assert!((total - direct).abs() < 1e-12);
    }
}
