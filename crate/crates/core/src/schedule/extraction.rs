use num_traits::One;
use serde::Serialize;

use super::Schedule;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    /// Level `k` of the construction; the interval's `a`-mass is below `2B/2^k`.
    pub level: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma21Extraction {
    pub intervals: Vec<Interval>,
    /// `Σ_Q a`.
    pub a_mass: f64,
    /// `Σ b` over each interval.
    pub b_masses: Vec<f64>,
    /// True when the construction stopped on a hypothesis failure rather than
    /// on the end of the window.
    pub flagged: bool,
    pub diagnostics: Vec<String>,
}

impl Lemma21Extraction {
    pub fn indices(&self) -> Vec<usize> {
        self.intervals.iter().flat_map(|iv| iv.start..=iv.end).collect()
    }
}

/// Greedy interval construction for sequences with `a ≪ b`, `0 ≤ b ≤ B`:
/// intervals `J_k = i_k..=j_k` with `i_k = max(j_{k-1}+1, N_k)`, where `N_k`
/// is the first index from which `a_n ≤ b_n 2^{-k}` holds to the end of the
/// window, and `j_k` the first index with `Σ_{J_k} b ≥ B`.
pub fn lemma21_extract(a: &[f64], b: &[f64], bound: f64) -> Result<Lemma21Extraction> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Precondition(format!("bound B must be positive, got {bound}")));
    }
    if let Some((i, v)) = a.iter().chain(b).enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Precondition(format!("entry {i} is {v}, sequences must be nonnegative")));
    }
    if let Some((i, v)) = b.iter().enumerate().find(|(_, v)| **v > bound) {
        return Err(Error::Precondition(format!("b[{i}] = {v} exceeds the bound {bound}")));
    }
    let len = a.len();
    let mut intervals = Vec::new();
    let mut b_masses = Vec::new();
    let mut a_mass = 0.0;
    let mut diagnostics = Vec::new();
    let mut flagged = false;
    let mut next_free = 0usize;
    for level in 0u32.. {
        let scale = 0.5f64.powi(level as i32);
        // N_k: the suffix on which a_n <= b_n 2^-k holds
        let mut n_k = len;
        while n_k > 0 && a[n_k - 1] <= b[n_k - 1] * scale {
            n_k -= 1;
        }
        if n_k == len {
            flagged = true;
            diagnostics.push(format!(
                "N_{level} not found: a_n <= b_n 2^-{level} fails at the last index, stopping with {} interval(s)",
                intervals.len()
            ));
            break;
        }
        let start = next_free.max(n_k);
        let mut sum = 0.0;
        let mut end = None;
        for (n, &bn) in b.iter().enumerate().skip(start) {
            sum += bn;
            if sum >= bound {
                end = Some(n);
                break;
            }
        }
        let Some(end) = end else {
            diagnostics.push(format!(
                "window exhausted while building interval {level}: b-mass {sum} from index {start} is below {bound}"
            ));
            break;
        };
        a_mass += a[start..=end].iter().sum::<f64>();
        b_masses.push(sum);
        intervals.push(Interval { level, start, end });
        next_free = end + 1;
    }
    if intervals.is_empty() {
        diagnostics.push("no complete interval fits in the window".into());
    }
    Ok(Lemma21Extraction { intervals, a_mass, b_masses, flagged, diagnostics })
}

/// The schedule seen at the kept times only. Kept times are reindexed so the
/// last one becomes time 0; lengths are divided by its length, which becomes
/// the new letter block, and ratios multiply across skipped times.
pub fn extract_schedule(schedule: &Schedule, keep: &[i64]) -> Result<Schedule> {
    if keep.len() < 2 {
        return Err(Error::InvalidSchedule("extraction needs at least two kept times".into()));
    }
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidSchedule(format!(
                "kept times must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    for &t in keep {
        schedule.check_time(t)?;
    }
    let last = *keep.last().unwrap();
    let unit = schedule.length(last).clone();
    let ratios = keep
        .windows(2)
        .map(|w| schedule.length(w[0]) / schedule.length(w[1]))
        .collect();
    let letter_block = schedule.letter_block() * &unit;
    let spec = super::ScheduleSpec::Extracted {
        base: Box::new(schedule.spec().clone()),
        keep: keep.to_vec(),
    };
    let s = Schedule::from_ratios(spec, schedule.alphabet(), letter_block, ratios)?;
    debug_assert!(s.length(0).is_one());
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{build_schedule, log2_big};
    use num_bigint::BigUint;

    #[test]
    fn zero_a_gives_singletons() {
        let a = vec![0.0; 10];
        let b = vec![1.0; 10];
        let ex = lemma21_extract(&a, &b, 1.0).unwrap();
        assert_eq!(ex.intervals.len(), 10);
        assert!(ex.intervals.iter().enumerate().all(|(i, iv)| iv.start == i && iv.end == i));
        assert_eq!(ex.a_mass, 0.0);
    }

    #[test]
    fn geometric_fixture() {
        let a: Vec<f64> = (0..64).map(|n| 0.5f64.powi(n)).collect();
        let b = vec![1.0; 64];
        let ex = lemma21_extract(&a, &b, 2.0).unwrap();
        assert_eq!(ex.intervals.len(), 32);
        assert!(ex.a_mass <= 8.0);
        assert!(ex.b_masses.iter().all(|&m| (2.0..4.0).contains(&m)));
        assert_eq!(ex.intervals[0], Interval { level: 0, start: 0, end: 1 });
        assert_eq!(ex.intervals[5], Interval { level: 5, start: 10, end: 11 });
    }

    #[test]
    fn equal_sequences_are_flagged() {
        let a = vec![1.0; 20];
        let ex = lemma21_extract(&a, &a, 1.0).unwrap();
        assert!(ex.flagged);
        assert_eq!(ex.intervals.len(), 1);
        assert!(ex.diagnostics[0].contains("N_1"));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(lemma21_extract(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(lemma21_extract(&[1.0], &[2.0], 1.0).is_err());
        assert!(lemma21_extract(&[-1.0], &[1.0], 1.0).is_err());
        assert!(lemma21_extract(&[1.0], &[1.0], 0.0).is_err());
        let short = lemma21_extract(&[0.0, 0.0], &[0.5, 0.4], 1.0).unwrap();
        assert!(short.intervals.is_empty());
        assert!(!short.diagnostics.is_empty());
    }

    #[test]
    fn identity_extraction() {
        let s = build_schedule(&"ratios:[3,5,2],N=2".parse().unwrap()).unwrap();
        let e = extract_schedule(&s, &[-3, -2, -1, 0]).unwrap();
        assert_eq!(e.ratios(), s.ratios());
        assert!(e.letter_block().is_one());
    }

    #[test]
    fn skipping_multiplies_ratios() {
        let s = build_schedule(&"const:r=2,depth=6,N=2".parse().unwrap()).unwrap();
        let e = extract_schedule(&s, &[0, -2, -4, -6].iter().rev().copied().collect::<Vec<_>>()).unwrap();
        assert!(e.ratios().iter().all(|r| r == &BigUint::from(4u32)));
        assert_eq!(e.earliest(), -3);
    }

    #[test]
    fn extracted_square_root_terms_grow() {
        let s = build_schedule(&"ex2:depth=5,N=2".parse().unwrap()).unwrap();
        let e = extract_schedule(&s, &[-5, -3, -1]).unwrap();
        // at time -1 of the extraction (base -3, skipping -4): log2 r'/l'
        let t = -1;
        let term = log2_big(e.ratio(t)) / log2_big(e.length(t)).exp2();
        let l = log2_big(s.length(-3)).exp2();
        let floor = 2.0 * l.sqrt().exp2() / l - l.log2() / l;
        assert!(term >= floor - 1e-9, "{term} < {floor}");
        assert!(term > 100.0);
    }

    #[test]
    fn extraction_composes() {
        let s = build_schedule(&"ratios:[2,3,5,7,11,13],N=2".parse().unwrap()).unwrap();
        let q1 = [-6, -5, -3, -2, 0];
        let e1 = extract_schedule(&s, &q1).unwrap();
        let q2 = [-4, -2, -1];
        let twice = extract_schedule(&e1, &q2).unwrap();
        let composed: Vec<i64> = q2.iter().map(|t| q1[(q1.len() as i64 - 1 + t) as usize]).collect();
        let once = extract_schedule(&s, &composed).unwrap();
        assert_eq!(twice.ratios(), once.ratios());
        assert_eq!(twice.lengths(), once.lengths());
        assert_eq!(twice.letter_block(), once.letter_block());
    }
}
