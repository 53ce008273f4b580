//! Binary floating point with configurable precision.
//!
//! Values are `±mant · 2^exp` with a `prec`-bit mantissa and an unbounded
//! (`i64`) exponent, rounded to nearest-even after every operation. The type
//! exists because schedule lengths such as `2^65536` are far outside `f64`
//! range while condition terms like `ln(r)/ℓ` must still be summed and
//! compared. Only the handful of operations the crate needs are provided.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// Guard bits used by the fixed-point series.
const GUARD: u32 = 40;

#[derive(Clone, Debug)]
pub struct Real {
    neg: bool,
    mant: BigUint,
    exp: i64,
    prec: u32,
}

impl Real {
    pub fn zero(prec: u32) -> Self {
        Real {
            neg: false,
            mant: BigUint::zero(),
            exp: 0,
            prec: prec.max(2),
        }
    }

    pub fn from_biguint(n: &BigUint, prec: u32) -> Self {
        Self::normalize(false, n.clone(), 0, prec)
    }

    pub fn from_u64(n: u64, prec: u32) -> Self {
        Self::normalize(false, BigUint::from(n), 0, prec)
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::normalize(n < 0, BigUint::from(n.unsigned_abs()), 0, prec)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "Real::from_f64 on non-finite value");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Self::normalize(neg, BigUint::from(m), e, prec)
    }

    /// `num / den` rounded to `prec` bits.
    pub fn from_ratio(num: &BigUint, den: &BigUint, prec: u32) -> Self {
        Self::from_biguint(num, prec + 2) / Self::from_biguint(den, prec + 2)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        Self::normalize(self.neg, self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.is_zero()
    }

    fn normalize(neg: bool, mant: BigUint, exp: i64, prec: u32) -> Self {
        let prec = prec.max(2);
        if mant.is_zero() {
            return Self::zero(prec);
        }
        let bits = mant.bits();
        let p = prec as u64;
        let (mant, exp) = match bits.cmp(&p) {
            Ordering::Equal => (mant, exp),
            Ordering::Less => (mant << (p - bits), exp - (p - bits) as i64),
            Ordering::Greater => {
                let shift = bits - p;
                let mut q = &mant >> shift;
                let rem = &mant - (&q << shift);
                let half = BigUint::one() << (shift - 1);
                let round_up = match rem.cmp(&half) {
                    Ordering::Greater => true,
                    Ordering::Equal => q.is_odd(),
                    Ordering::Less => false,
                };
                let mut exp = exp + shift as i64;
                if round_up {
                    q += 1u32;
                    if q.bits() > p {
                        q >>= 1;
                        exp += 1;
                    }
                }
                (q, exp)
            }
        };
        Real { neg, mant, exp, prec }
    }

    fn from_bigint(v: BigInt, exp: i64, prec: u32) -> Self {
        let (sign, mag) = v.into_parts();
        Self::normalize(sign == Sign::Minus, mag, exp, prec)
    }

    /// Exponent of the leading bit: `|x| ∈ [2^t, 2^(t+1))`.
    fn top_exp(&self) -> i64 {
        self.exp + self.mant.bits() as i64 - 1
    }

    /// `log2 |x|` as an `f64`; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.mant >> shift).to_u64().unwrap_or(u64::MAX) as f64;
        top.log2() + (self.exp + shift as i64) as f64
    }

    /// Nearest `f64`, flushing to zero below the subnormal range and to
    /// infinity above the finite range.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.mant >> shift).to_u64().unwrap_or(u64::MAX) as f64;
        let v = ldexp(top, self.exp + shift as i64);
        if self.neg {
            -v
        } else {
            v
        }
    }

    /// `self · 2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        let mut r = self.clone();
        if !r.is_zero() {
            r.exp += k;
        }
        r
    }

    pub fn abs(&self) -> Self {
        let mut r = self.clone();
        r.neg = false;
        r
    }

    /// True when the value is too small to change `reference` at this
    /// precision, i.e. `reference + self == reference`.
    pub fn negligible_against(&self, reference: &Real) -> bool {
        if self.is_zero() {
            return true;
        }
        if reference.is_zero() {
            return false;
        }
        (reference + self).cmp_total(reference) == Ordering::Equal
    }

    pub fn cmp_total(&self, other: &Real) -> Ordering {
        match (self.is_negative(), other.is_negative()) {
            (false, true) => return Ordering::Greater,
            (true, false) => return Ordering::Less,
            _ => {}
        }
        let mag = self.cmp_abs(other);
        if self.is_negative() {
            mag.reverse()
        } else {
            mag
        }
    }

    fn cmp_abs(&self, other: &Real) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.top_exp().cmp(&other.top_exp()) {
            Ordering::Equal => {}
            o => return o,
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        a.cmp(&b)
    }

    /// Natural logarithm. Panics on nonpositive input.
    pub fn ln(&self) -> Real {
        assert!(
            !self.is_zero() && !self.neg,
            "logarithm of a nonpositive value"
        );
        let prec = self.prec;
        let w = prec + GUARD;
        let one = BigInt::one() << w;
        // x = m · 2^k with m in [1, 2)
        let mut k = self.top_exp();
        let mut m = BigInt::from(self.mant.clone());
        let mbits = self.mant.bits() as i64 - 1;
        let shift = w as i64 - mbits;
        m = if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 };
        // bring m into [1/√2, √2) so the series converges faster
        if &m * &m > (&one * &one) << 1u32 {
            m >>= 1u32;
            k += 1;
        }
        let t = ((&m - &one) << w) / (&m + &one);
        let ln_m = atanh_fixed(&t, w) << 1u32;
        let total = BigInt::from(k) * ln2_fixed(w) + ln_m;
        Self::from_bigint(total, -(w as i64), prec)
    }

    /// `ln(2)` at the given precision.
    pub fn ln2(prec: u32) -> Real {
        let w = prec + GUARD;
        Self::from_bigint(ln2_fixed(w), -(w as i64), prec)
    }

    /// `π` at the given precision (Machin's formula).
    pub fn pi(prec: u32) -> Real {
        let w = prec + GUARD;
        let v = (atan_inv_fixed(5, w) << 4u32) - (atan_inv_fixed(239, w) << 2u32);
        Self::from_bigint(v, -(w as i64), prec)
    }

    /// `10^d` for any integer `d`.
    pub fn pow10(d: i64, prec: u32) -> Real {
        let p = BigUint::from(10u32).pow(d.unsigned_abs() as u32);
        let v = Self::from_biguint(&p, prec + 4);
        if d >= 0 {
            v.with_precision(prec)
        } else {
            (Self::from_u64(1, prec + 4) / v).with_precision(prec)
        }
    }

    /// Scientific rendering with `digits` significant digits, valid far
    /// outside the `f64` exponent range.
    pub fn to_scientific(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let mut d = (self.log2_abs() * std::f64::consts::LOG10_2).floor() as i64;
        // the estimate of the decimal exponent can be off by one either way
        loop {
            let q = self.scaled_digits(digits as i64 - 1 - d);
            let text = q.to_string();
            if text.len() > digits {
                d += 1;
                continue;
            }
            if text.len() < digits {
                d -= 1;
                continue;
            }
            let sign = if self.neg { "-" } else { "" };
            let (head, tail) = text.split_at(1);
            return if tail.is_empty() { format!("{sign}{head}e{d}") } else { format!("{sign}{head}.{tail}e{d}") };
        }
    }

    /// `round(|self| · 10^k)`.
    fn scaled_digits(&self, k: i64) -> BigUint {
        let ten = BigUint::from(10u32);
        let mut num = self.mant.clone();
        let mut den = BigUint::one();
        if k >= 0 {
            num *= ten.pow(k as u32);
        } else {
            den *= ten.pow((-k) as u32);
        }
        if self.exp >= 0 {
            num <<= self.exp as u64;
        } else {
            den <<= (-self.exp) as u64;
        }
        (num + (&den >> 1u32)) / den
    }
}

fn ldexp(x: f64, e: i64) -> f64 {
    let mut v = x;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e as i32)
}

/// `atanh(t / 2^w)` in `w`-bit fixed point, `|t| < 2^w / 2`.
fn atanh_fixed(t: &BigInt, w: u32) -> BigInt {
    let t2 = (t * t) >> w;
    let mut sum = t.clone();
    let mut p = t.clone();
    let mut k: u64 = 1;
    loop {
        p = (&p * &t2) >> w;
        let term = &p / BigInt::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        sum += term;
        k += 1;
    }
    sum
}

fn ln2_fixed(w: u32) -> BigInt {
    // ln 2 = 2 atanh(1/3)
    let t = (BigInt::one() << w) / BigInt::from(3);
    atanh_fixed(&t, w) << 1u32
}

/// `atan(1/x)` in fixed point.
fn atan_inv_fixed(x: u64, w: u32) -> BigInt {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut p = (BigInt::one() << w) / &x;
    let mut sum = p.clone();
    let mut k: u64 = 1;
    loop {
        p = &p / &x2;
        let term = &p / BigInt::from(2 * k + 1);
        if term.is_zero() {
            break;
        }
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        k += 1;
    }
    sum
}

fn add_impl(a: &Real, b: &Real, negate_b: bool) -> Real {
    let prec = a.prec.max(b.prec);
    let b_neg = b.neg ^ negate_b;
    if b.is_zero() {
        return a.with_precision(prec);
    }
    if a.is_zero() {
        return Real::normalize(b_neg, b.mant.clone(), b.exp, prec);
    }
    let (big, big_neg, small, small_neg) = if a.top_exp() >= b.top_exp() {
        (a, a.neg, b, b_neg)
    } else {
        (b, b_neg, a, a.neg)
    };
    // far below the rounding position: keep only a sticky bit
    let cutoff = big.top_exp() - prec as i64 - 3;
    let (small_mant, small_exp) = if small.top_exp() < cutoff {
        (BigUint::one(), cutoff - 1)
    } else {
        (small.mant.clone(), small.exp)
    };
    let e = big.exp.min(small_exp);
    let x = BigInt::from(&big.mant << (big.exp - e) as u64);
    let y = BigInt::from(small_mant << (small_exp - e) as u64);
    let x = if big_neg { -x } else { x };
    let y = if small_neg { -y } else { y };
    Real::from_bigint(x + y, e, prec)
}

impl Add for &Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        add_impl(self, rhs, false)
    }
}

impl Sub for &Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        add_impl(self, rhs, true)
    }
}

impl Mul for &Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        let prec = self.prec.max(rhs.prec);
        Real::normalize(
            self.neg ^ rhs.neg,
            &self.mant * &rhs.mant,
            self.exp + rhs.exp,
            prec,
        )
    }
}

impl Div for &Real {
    type Output = Real;
    fn div(self, rhs: &Real) -> Real {
        assert!(!rhs.is_zero(), "division by zero");
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return Real::zero(prec);
        }
        let shift = (prec as i64 + 3 + rhs.mant.bits() as i64 - self.mant.bits() as i64).max(0) as u64;
        let num = &self.mant << shift;
        let (mut q, r) = num.div_rem(&rhs.mant);
        let mut exp = self.exp - rhs.exp - shift as i64;
        if !r.is_zero() {
            q = (q << 1u32) | BigUint::one();
            exp -= 1;
        }
        Real::normalize(self.neg ^ rhs.neg, q, exp, prec)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        let mut r = self.clone();
        if !r.is_zero() {
            r.neg = !r.neg;
        }
        r
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_total(other) == Ordering::Equal
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_total(other))
    }
}

impl serde::Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_scientific(20))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_scientific(17))
    }
}

/// Bernoulli numbers `B_2, B_4, …, B_30` as (numerator, denominator).
const BERNOULLI: [(i128, i128); 15] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
];

/// `ln(r!)`.
///
/// Small `r` go through the exact factorial; larger `r` use Stirling's series
/// with fifteen Bernoulli corrections, whose truncation error is below
/// `r^-31`. Accuracy is about 300 bits for every `r`, so precisions beyond
/// that are not fully honoured.
pub fn ln_factorial(r: &BigUint, prec: u32) -> Real {
    let exact_limit: u64 = if prec <= 256 { 1 << 10 } else { 1 << 13 };
    if r.is_zero() || r.is_one() {
        return Real::zero(prec);
    }
    if let Some(small) = r.to_u64().filter(|&v| v <= exact_limit) {
        let f = (2..=small).fold(BigUint::one(), |acc, k| acc * k);
        return Real::from_biguint(&f, prec + 8).ln().with_precision(prec);
    }
    let wp = prec + 64;
    let x = Real::from_biguint(r, wp);
    let half = Real::from_f64(0.5, wp);
    let ln_x = x.ln();
    let two_pi = &Real::pi(wp) * &Real::from_u64(2, wp);
    let mut acc = &(&(&x + &half) * &ln_x) - &x;
    acc = &acc + &(&half * &two_pi.ln());
    let x2 = &x * &x;
    let mut pow = x.clone(); // r^(2k-1)
    for (k, &(num, den)) in BERNOULLI.iter().enumerate() {
        let k = k as i128 + 1;
        let scale = den * 2 * k * (2 * k - 1);
        let c = &Real::from_bigint(BigInt::from(num), 0, wp)
            / &Real::from_bigint(BigInt::from(scale), 0, wp);
        let term = &c / &pow;
        acc = &acc + &term;
        pow = &pow * &x2;
    }
    acc.with_precision(prec)
}

/// `ln` of a positive big integer.
pub fn ln_biguint(n: &BigUint, prec: u32) -> Real {
    Real::from_biguint(n, prec + 8).ln().with_precision(prec)
}
