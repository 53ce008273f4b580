//! The orbit semi-metric `e_n(x, x') = min_a d_H(a·x, x') / ℓ_n` over adapted
//! tree automorphisms, computed exactly by a bottom-up assignment recursion.

mod assignment;
mod aut;
mod bounds;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_collect, Execution};
use crate::schedule::Schedule;
use crate::words::hamming_unchecked;

pub(crate) use assignment::{assignment_lex_min_int, assignment_value};
pub use assignment::assignment_min;
pub use aut::{apply_aut, aut_count_shape, enumerate_aut, AutNode, DEFAULT_ENUMERATION_CAP};
pub use bounds::{
    aut_count, choose_n0, hoeffding_bound, lemma32_bound, tail_sum, AutCount, AutTerm, N0Choice, TailBound,
};

/// Default limit on the number of cells of the base pairwise table.
pub const DEFAULT_TABLE_CAP: usize = 1 << 24;

/// Block structure between two levels: ratios from the top level down, and
/// the length of the base blocks, which automorphisms never split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Shape {
    ratios: Vec<usize>,
    base_len: usize,
}

impl Shape {
    pub fn new(ratios: Vec<usize>, base_len: usize) -> Result<Self> {
        if base_len == 0 {
            return Err(Error::Precondition("base blocks must be nonempty".into()));
        }
        if let Some(&r) = ratios.iter().find(|&&r| r < 2) {
            return Err(Error::RatioTooSmall { time: 0, ratio: r.to_string() });
        }
        ratios
            .iter()
            .try_fold(base_len, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::MemoryCap { letters: "more than usize::MAX".into(), cap: usize::MAX })?;
        Ok(Shape { ratios, base_len })
    }

    /// Levels `n..=n0` of a schedule: ratios `r_{n+1}, …, r_{n0}` and base
    /// length `ℓ_{n0}`.
    pub fn from_schedule(schedule: &Schedule, n: i64, n0: i64) -> Result<Self> {
        schedule.check_time(n)?;
        schedule.check_time(n0)?;
        if n > n0 {
            return Err(Error::OutOfRange { what: "n", value: n.to_string(), range: format!("..={n0}") });
        }
        let too_big = |t: i64| Error::TooLarge {
            time: t,
            bits: schedule.length(t).bits(),
            limit: usize::BITS as u64,
        };
        let ratios = (n + 1..=n0)
            .map(|t| schedule.ratio_usize(t).ok_or_else(|| too_big(t)))
            .collect::<Result<Vec<_>>>()?;
        let base_len = schedule.length_usize(n0).ok_or_else(|| too_big(n0))?;
        schedule.length_usize(n).ok_or_else(|| too_big(n))?;
        Shape::new(ratios, base_len)
    }

    /// Ratios from the top level down.
    pub fn ratios(&self) -> &[usize] {
        &self.ratios
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    /// Number of block levels above the base.
    pub fn depth(&self) -> usize {
        self.ratios.len()
    }

    /// Length of the top-level words.
    pub fn length(&self) -> usize {
        self.level_len(0)
    }

    /// Length of the blocks at `level`, with the top at level 0.
    pub fn level_len(&self, level: usize) -> usize {
        self.ratios[level..].iter().product::<usize>() * self.base_len
    }

    /// Exact `e_n(x, y)`.
    pub fn distance(&self, x: &[u32], y: &[u32]) -> Result<SemiMetricValue> {
        self.distance_with(Execution::Sequential, DEFAULT_TABLE_CAP, x, y)
    }

    pub fn distance_with(&self, exec: Execution, cap: usize, x: &[u32], y: &[u32]) -> Result<SemiMetricValue> {
        let len = self.length();
        for w in [x, y] {
            if w.len() != len {
                return Err(Error::LengthMismatch { left: w.len(), right: len });
            }
        }
        let table = pairwise_table(exec, self, x, y, cap)?;
        Ok(SemiMetricValue::new(table[0], len as u64))
    }

    /// `e_n` by minimizing over every automorphism.
    pub fn distance_bruteforce(&self, x: &[u32], y: &[u32], cap: usize) -> Result<SemiMetricValue> {
        let len = self.length();
        for w in [x, y] {
            if w.len() != len {
                return Err(Error::LengthMismatch { left: w.len(), right: len });
            }
        }
        let mut best = len;
        for a in enumerate_aut(self, cap)? {
            best = best.min(hamming_unchecked(&apply_aut(&a, x, self)?, y));
        }
        Ok(SemiMetricValue::new(best as u64, len as u64))
    }
}

/// An exact value `numerator / denominator` with the denominator the word
/// length at the evaluation level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SemiMetricValue {
    pub numerator: u64,
    pub denominator: u64,
}

impl SemiMetricValue {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        debug_assert!(numerator <= denominator && denominator > 0);
        SemiMetricValue { numerator, denominator }
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn to_ratio(self) -> BigRational {
        BigRational::new(BigInt::from(self.numerator), BigInt::from(self.denominator))
    }
}

impl fmt::Display for SemiMetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl Serialize for SemiMetricValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("SemiMetricValue", 3)?;
        st.serialize_field("num", &self.numerator)?;
        st.serialize_field("den", &self.denominator)?;
        st.serialize_field("value", &self.to_f64())?;
        st.end()
    }
}

/// Integer form of the recursion: for every pair of top blocks `(i, j)` of
/// `x` and `y`, the minimum Hamming distance between block `i` of `x` and
/// the orbit of block `j` of `y`. Row-major, side `x.len() / shape.length()`.
pub fn pairwise_table(exec: Execution, shape: &Shape, x: &[u32], y: &[u32], cap: usize) -> Result<Vec<u64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() % shape.length() != 0 {
        return Err(Error::LengthMismatch { left: x.len(), right: shape.length() });
    }
    let base = shape.base_len();
    let mut side = x.len() / base;
    let cells = side.checked_mul(side).filter(|&c| c <= cap);
    if cells.is_none() {
        return Err(Error::ComputeCap { size: format!("{side}x{side} table"), cap });
    }
    let mut table: Vec<u64> = map_collect(exec, side, |i| {
        let xb = &x[i * base..(i + 1) * base];
        (0..side)
            .map(|j| hamming_unchecked(xb, &y[j * base..(j + 1) * base]) as u64)
            .collect::<Vec<_>>()
    })
    .concat();
    for &r in shape.ratios().iter().rev() {
        let next = side / r;
        let prev = std::mem::take(&mut table);
        table = map_collect(exec, next, |i| {
            let mut cost = vec![0u64; r * r];
            (0..next)
                .map(|j| {
                    for a in 0..r {
                        let row = &prev[(i * r + a) * side + j * r..(i * r + a) * side + j * r + r];
                        cost[a * r..(a + 1) * r].copy_from_slice(row);
                    }
                    assignment_value(&cost, r)
                })
                .collect::<Vec<_>>()
        })
        .concat();
        side = next;
    }
    Ok(table)
}

/// `e_n(x, x')` on levels `n..=n0` of a schedule.
pub fn e_exact(schedule: &Schedule, n: i64, n0: i64, x: &[u32], y: &[u32]) -> Result<SemiMetricValue> {
    Shape::from_schedule(schedule, n, n0)?.distance(x, y)
}

/// Brute-force `e_n` over the enumerated automorphism group.
pub fn e_bruteforce(schedule: &Schedule, n: i64, n0: i64, x: &[u32], y: &[u32], cap: usize) -> Result<SemiMetricValue> {
    Shape::from_schedule(schedule, n, n0)?.distance_bruteforce(x, y, cap)
}
