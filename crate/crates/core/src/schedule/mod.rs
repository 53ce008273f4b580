//! Ratio and length schedules on a finite window of times `m..=0`.
//!
//! Lengths satisfy `ℓ_0 = 1` and `ℓ_{n-1} = r_n · ℓ_n`; both are exact big
//! integers because the interesting families grow as towers of exponentials.

mod condition;
mod extraction;
mod selection;
mod spec;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub use condition::{classify, condition_report, factorial_bracket, ConditionReport, ConditionRow, Verdict};
pub use extraction::{extract_schedule, lemma21_extract, Interval, Lemma21Extraction};
pub use selection::{proposition21_construct, SelectedIndex, SelectionPlan};
pub use spec::ScheduleSpec;

/// Largest bit length accepted for any ratio or length.
pub const MAX_LENGTH_BITS: u64 = 1 << 22;

#[derive(Clone, Debug)]
pub struct Schedule {
    spec: ScheduleSpec,
    earliest: i64,
    alphabet: u32,
    letter_block: BigUint,
    /// `ratios[i]` is `r_t` for `t = earliest + 1 + i`.
    ratios: Vec<BigUint>,
    /// `lengths[i]` is `ℓ_t` for `t = earliest + i`.
    lengths: Vec<BigUint>,
}

impl Schedule {
    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }

    /// Earliest time `m = -depth`.
    pub fn earliest(&self) -> i64 {
        self.earliest
    }

    pub fn depth(&self) -> u32 {
        (-self.earliest) as u32
    }

    /// Size `N` of the underlying letter alphabet.
    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    /// Number of base letters per letter of this schedule. It is 1 except for
    /// extracted schedules, whose letters are blocks of the base process.
    pub fn letter_block(&self) -> &BigUint {
        &self.letter_block
    }

    /// Alphabet size seen by this schedule's words, `N^letter_block`, when it
    /// fits in a `u32`.
    pub fn effective_alphabet(&self) -> Result<u32> {
        let block = self
            .letter_block
            .to_u32()
            .ok_or(Error::EncodingWidth { required_bits: u64::MAX })?;
        let bits = (self.alphabet as f64).log2() * block as f64;
        (self.alphabet as u64)
            .checked_pow(block)
            .and_then(|v| u32::try_from(v).ok())
            .ok_or(Error::EncodingWidth {
                required_bits: bits.ceil() as u64,
            })
    }

    pub fn contains(&self, time: i64) -> bool {
        (self.earliest..=0).contains(&time)
    }

    /// Times that carry a ratio, `m+1..=0`.
    pub fn ratio_times(&self) -> std::ops::RangeInclusive<i64> {
        self.earliest + 1..=0
    }

    pub fn check_time(&self, time: i64) -> Result<()> {
        if self.contains(time) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "time",
                value: time.to_string(),
                range: format!("{}..=0", self.earliest),
            })
        }
    }

    pub fn check_ratio_time(&self, time: i64) -> Result<()> {
        if time > self.earliest && time <= 0 {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "ratio time",
                value: time.to_string(),
                range: format!("{}..=0", self.earliest + 1),
            })
        }
    }

    /// `r_t`. Panics outside `m+1..=0`.
    pub fn ratio(&self, time: i64) -> &BigUint {
        assert!(time > self.earliest && time <= 0, "ratio time {time} outside window");
        &self.ratios[(time - self.earliest - 1) as usize]
    }

    /// `ℓ_t`. Panics outside `m..=0`.
    pub fn length(&self, time: i64) -> &BigUint {
        assert!(self.contains(time), "time {time} outside window");
        &self.lengths[(time - self.earliest) as usize]
    }

    pub fn ratio_usize(&self, time: i64) -> Option<usize> {
        self.ratio(time).to_usize()
    }

    pub fn length_usize(&self, time: i64) -> Option<usize> {
        self.length(time).to_usize()
    }

    /// Ratios earliest first.
    pub fn ratios(&self) -> &[BigUint] {
        &self.ratios
    }

    /// Lengths earliest first.
    pub fn lengths(&self) -> &[BigUint] {
        &self.lengths
    }

    /// JSON rows, one per time.
    pub fn rows(&self) -> Vec<ScheduleRow> {
        (self.earliest..=0)
            .map(|t| ScheduleRow {
                time: t,
                ratio: (t > self.earliest).then(|| describe_big(self.ratio(t))),
                length: describe_big(self.length(t)),
                length_log2: log2_big(self.length(t)),
            })
            .collect()
    }

    fn from_ratios(spec: ScheduleSpec, alphabet: u32, letter_block: BigUint, ratios: Vec<BigUint>) -> Result<Self> {
        let depth = ratios.len() as i64;
        let earliest = -depth;
        let mut lengths = vec![BigUint::one(); ratios.len() + 1];
        for (i, r) in ratios.iter().enumerate().rev() {
            let time = earliest + 1 + i as i64;
            if r < &BigUint::from(2u32) {
                return Err(Error::RatioTooSmall { time, ratio: r.to_string() });
            }
            let next = &lengths[i + 1] * r;
            if next.bits() > MAX_LENGTH_BITS {
                return Err(Error::TooLarge { time: time - 1, bits: next.bits(), limit: MAX_LENGTH_BITS });
            }
            lengths[i] = next;
        }
        Ok(Schedule { spec, earliest, alphabet, letter_block, ratios, lengths })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleRow {
    pub time: i64,
    pub ratio: Option<String>,
    pub length: String,
    pub length_log2: f64,
}

/// Decimal when small, otherwise `2^k` or `~2^x`.
pub fn describe_big(n: &BigUint) -> String {
    if n.bits() <= 64 {
        return n.to_string();
    }
    let k = n.bits() - 1;
    if n.trailing_zeros() == Some(k) {
        format!("2^{k}")
    } else {
        format!("~2^{:.3}", log2_big(n))
    }
}

pub fn log2_big(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let shift = n.bits().saturating_sub(64);
    let top = (n >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top.log2() + shift as f64
}

/// `⌊log_base n⌋` for `n ≥ 1`, exact.
pub fn ilog(n: &BigUint, base: u32) -> u64 {
    assert!(base >= 2 && !n.is_zero());
    let base_big = BigUint::from(base);
    let mut guess = (log2_big(n) / (base as f64).log2()).floor().max(0.0) as u64;
    guess = guess.saturating_sub(1);
    let mut p = base_big.pow(guess as u32);
    while &p * &base_big <= *n {
        p *= &base_big;
        guess += 1;
    }
    while p > *n {
        p /= &base_big;
        guess -= 1;
    }
    guess
}

/// Exact `log_base n` when `n` is a power of `base`.
pub fn exact_log(n: &BigUint, base: u32) -> Option<u64> {
    let k = ilog(n, base);
    (BigUint::from(base).pow(k as u32) == *n).then_some(k)
}

/// Builds the schedule described by `spec`.
pub fn build_schedule(spec: &ScheduleSpec) -> Result<Schedule> {
    spec.validate()?;
    match spec {
        ScheduleSpec::ConstRatio { ratio, depth, alphabet } => {
            let bits = ratio.bits() * *depth as u64;
            if bits > MAX_LENGTH_BITS + 64 {
                return Err(Error::TooLarge { time: -(*depth as i64), bits, limit: MAX_LENGTH_BITS });
            }
            Schedule::from_ratios(spec.clone(), *alphabet, BigUint::one(), vec![ratio.clone(); *depth as usize])
        }
        ScheduleSpec::ExplicitRatios { ratios, alphabet } => {
            Schedule::from_ratios(spec.clone(), *alphabet, BigUint::one(), ratios.clone())
        }
        ScheduleSpec::Tower2 { depth, alphabet } => {
            // ℓ_{n-1} = 2^{ℓ_n}, so r_n = 2^{ℓ_n - log2 ℓ_n}
            let mut exps: Vec<u64> = vec![0]; // log2 ℓ_t, latest first
            let mut ratios = Vec::new();
            for step in 0..*depth {
                let time = -(step as i64);
                let log_len = *exps.last().unwrap();
                if log_len >= 63 || (1u64 << log_len) > MAX_LENGTH_BITS {
                    return Err(Error::TooLarge { time: time - 1, bits: u64::MAX, limit: MAX_LENGTH_BITS });
                }
                let next = 1u64 << log_len;
                ratios.push(BigUint::one() << (next - log_len));
                exps.push(next);
            }
            ratios.reverse();
            Schedule::from_ratios(spec.clone(), *alphabet, BigUint::one(), ratios)
        }
        ScheduleSpec::Ex2 { depth, alphabet } => {
            // ℓ_n = 4^{j_n}; ℓ_{n-1} = 4^{2^{j_n}}, r_n = 4^{2^{j_n} - j_n}
            let mut j: u64 = 0;
            let mut ratios = Vec::new();
            for step in 0..*depth {
                let time = -(step as i64);
                if j >= 62 || 2 * (1u64 << j) > MAX_LENGTH_BITS {
                    return Err(Error::TooLarge { time: time - 1, bits: u64::MAX, limit: MAX_LENGTH_BITS });
                }
                let next = 1u64 << j;
                ratios.push(BigUint::one() << (2 * (next - j)));
                j = next;
            }
            ratios.reverse();
            Schedule::from_ratios(spec.clone(), *alphabet, BigUint::one(), ratios)
        }
        ScheduleSpec::Extracted { base, keep } => {
            let base = build_schedule(base)?;
            let mut s = extract_schedule(&base, keep)?;
            s.spec = spec.clone();
            Ok(s)
        }
    }
}
