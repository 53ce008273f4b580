use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::real::{ln_factorial, Real, DEFAULT_PRECISION};
use crate::schedule::{classify, log2_big, Schedule, Verdict};

/// Counts with more bits than this are reported in log form only.
const COUNT_BITS_LIMIT: f64 = (1u64 << 20) as f64;

#[derive(Clone, Debug, Serialize)]
pub struct AutTerm {
    pub time: i64,
    /// `ln(r_k!) / ℓ_{k-1}`.
    pub term: Real,
}

#[derive(Clone, Debug, Serialize)]
pub struct AutCount {
    pub n: i64,
    pub n0: i64,
    /// Exact group order, when it has at most about a million bits.
    #[serde(serialize_with = "decimal")]
    pub count: Option<BigUint>,
    /// `S_n`, with `#Aut_n = exp(ℓ_n S_n)`.
    pub s_n: Real,
    /// `ln #Aut_n`.
    pub log_count: Real,
    pub terms: Vec<AutTerm>,
}

fn decimal<S: Serializer>(v: &Option<BigUint>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(n) => s.collect_str(n),
        None => s.serialize_none(),
    }
}

/// `Σ_{k=from+1}^{to} ln(r_k!)/ℓ_{k-1}` on the window.
pub fn tail_sum(schedule: &Schedule, from: i64, to: i64, prec: u32) -> Result<Real> {
    Ok(terms(schedule, from, to, prec)?.iter().fold(Real::zero(prec), |acc, t| &acc + &t.term))
}

fn terms(schedule: &Schedule, from: i64, to: i64, prec: u32) -> Result<Vec<AutTerm>> {
    schedule.check_time(from)?;
    schedule.check_time(to)?;
    if from > to {
        return Err(Error::OutOfRange { what: "n", value: from.to_string(), range: format!("..={to}") });
    }
    Ok((from + 1..=to)
        .map(|k| {
            let len = Real::from_biguint(schedule.length(k - 1), prec);
            AutTerm { time: k, term: &ln_factorial(schedule.ratio(k), prec) / &len }
        })
        .collect())
}

/// `#Aut_n = Π_{k=n+1}^{n0} (r_k!)^(ℓ_n/ℓ_{k-1}) = exp(ℓ_n S_n)`.
pub fn aut_count(schedule: &Schedule, n: i64, n0: i64) -> Result<AutCount> {
    let prec = DEFAULT_PRECISION;
    let terms = terms(schedule, n, n0, prec)?;
    let s_n = terms.iter().fold(Real::zero(prec), |acc, t| &acc + &t.term);
    let log_count = &s_n * &Real::from_biguint(schedule.length(n), prec);
    let bits = log_count.to_f64() / std::f64::consts::LN_2;
    let count = (bits <= COUNT_BITS_LIMIT).then(|| {
        let mut count = BigUint::from(1u32);
        for k in n + 1..=n0 {
            let r = schedule.ratio(k).to_u64().expect("small count has small ratios");
            let fact: BigUint = (2..=r).product();
            let exponent = (schedule.length(n) / schedule.length(k - 1)).to_u32().expect("small count has small exponents");
            count *= fact.pow(exponent);
        }
        count
    });
    Ok(AutCount { n, n0, count, s_n, log_count, terms })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailBound {
    /// `1 - 1/N - α`.
    pub threshold: f64,
    /// `exp(ℓ_n (S_n - 2α²))`.
    pub bound: f64,
    pub log_bound: f64,
}

/// Upper bound on `P[e_n(X', X'') ≤ 1 - 1/N - α]` for independent uniform words.
pub fn lemma32_bound(alphabet: u32, alpha: f64, len: f64, s_n: f64) -> Result<TailBound> {
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange { what: "alpha", value: alpha.to_string(), range: "> 0".into() });
    }
    if alphabet < 2 {
        return Err(Error::OutOfRange { what: "alphabet", value: alphabet.to_string(), range: ">= 2".into() });
    }
    let log_bound = len * (s_n - 2.0 * alpha * alpha);
    Ok(TailBound { threshold: 1.0 - 1.0 / alphabet as f64 - alpha, bound: log_bound.exp(), log_bound })
}

/// Hoeffding: `P[mean of n uniform-letter mismatches ≤ 1 - 1/N - α] ≤ exp(-2nα²)`.
pub fn hoeffding_bound(samples: f64, alpha: f64) -> f64 {
    (-2.0 * samples * alpha * alpha).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct N0Choice {
    pub n0: i64,
    /// In-window `S = Σ_{k=m+1}^{n0} ln(r_k!)/ℓ_{k-1}`.
    pub tail_sum: f64,
    /// `2(1 - 1/N)²`.
    pub threshold: f64,
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub alpha: f64,
    /// `exp(ℓ_{n0}(S - 2α²))`.
    pub beta: f64,
    /// `(1 - β)(1 - 1/N - α)`, a lower bound on `E[e_n]` for `n ≤ n0`.
    pub lower_bound: f64,
    /// `(n0, S)` for every candidate, latest first.
    pub candidates: Vec<(i64, f64)>,
}

/// Latest `n0 > m` whose in-window tail sum is below `2(1 - 1/N)²`, with
/// the midpoint of the admissible `α` range.
pub fn choose_n0(schedule: &Schedule) -> Result<N0Choice> {
    let (verdict, basis) = classify(schedule.spec());
    if verdict == Verdict::NotDelta {
        return Err(Error::Precondition(format!("schedule fails the summability condition: {basis}")));
    }
    let prec = 128;
    let m = schedule.earliest();
    if m == 0 {
        return Err(Error::InvalidSchedule("window has no ratios".into()));
    }
    // 1/N for the letters of this schedule, which are blocks for extracted ones
    let block = schedule.letter_block().to_f64().unwrap_or(f64::INFINITY);
    let inv_alphabet = (1.0 / schedule.alphabet() as f64).powf(block);
    let threshold = 2.0 * (1.0 - inv_alphabet).powi(2);
    let all = terms(schedule, m, 0, prec)?;
    let mut running = Real::zero(prec);
    let mut partial = Vec::with_capacity(all.len());
    for t in &all {
        running = &running + &t.term;
        partial.push((t.time, running.to_f64()));
    }
    partial.reverse();
    let Some(&(n0, s)) = partial.iter().find(|(_, s)| *s < threshold) else {
        return Err(Error::Precondition(format!(
            "in-window tail sum is {:.6} already at time {}, not below {threshold:.6}",
            partial.last().map_or(0.0, |p| p.1),
            m + 1
        )));
    };
    let alpha_low = (s / 2.0).sqrt();
    let alpha_high = 1.0 - inv_alphabet;
    let alpha = (alpha_low + alpha_high) / 2.0;
    let len = log2_big(schedule.length(n0)).exp2();
    let beta = (len * (s - 2.0 * alpha * alpha)).exp();
    Ok(N0Choice {
        n0,
        tail_sum: s,
        threshold,
        alpha_low,
        alpha_high,
        alpha,
        beta,
        lower_bound: (1.0 - beta) * (alpha_high - alpha),
        candidates: partial,
    })
}
