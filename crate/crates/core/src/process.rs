//! Split-word paths on a finite window and co-immersed pairs of them.
//!
//! A path is stored as its earliest word and its innovations; every later
//! word is a slice of the earliest one, since `X_t` is the `V_t`-th block of
//! `X_{t-1}`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{assignment_lex_min_int, pairwise_table, Shape};
use crate::par::Execution;
use crate::rng::{fill_letters, stream_for, uniform_index, Copy, Role};
use crate::schedule::{describe_big, Schedule};
use crate::words::{subword, to_literal};

/// Default cap on the letters of the earliest word.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 26;

/// Machine-sized ratios and lengths of a window `start..=0` of a schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Levels {
    earliest: i64,
    alphabet: u32,
    /// `r_t` for `t = earliest+1..=0`.
    ratios: Vec<usize>,
    /// `ℓ_t` for `t = earliest..=0`.
    lengths: Vec<usize>,
}

impl Levels {
    pub fn new(schedule: &Schedule, cap: usize) -> Result<Self> {
        Self::window(schedule, schedule.earliest(), cap)
    }

    /// The law of the process restricted to `start..=0`, which only needs
    /// `ℓ_start` letters.
    pub fn window(schedule: &Schedule, start: i64, cap: usize) -> Result<Self> {
        schedule.check_time(start)?;
        let longest = schedule.length(start);
        if longest.bits() > usize::BITS as u64 || schedule.length_usize(start).is_none_or(|l| l > cap) {
            return Err(Error::MemoryCap { letters: describe_big(longest), cap });
        }
        let alphabet = schedule.effective_alphabet()?;
        let ratios = (start + 1..=0).map(|t| schedule.ratio_usize(t).unwrap()).collect();
        let lengths = (start..=0).map(|t| schedule.length_usize(t).unwrap()).collect();
        Ok(Levels { earliest: start, alphabet, ratios, lengths })
    }

    /// Levels from explicit ratios (earliest first) over an alphabet.
    pub fn from_ratios(ratios: Vec<usize>, alphabet: u32, cap: usize) -> Result<Self> {
        if alphabet < 1 {
            return Err(Error::OutOfRange { what: "alphabet", value: "0".into(), range: ">= 1".into() });
        }
        let mut lengths = vec![1usize];
        for (i, &r) in ratios.iter().enumerate().rev() {
            if r < 2 {
                return Err(Error::RatioTooSmall { time: i as i64 - ratios.len() as i64 + 1, ratio: r.to_string() });
            }
            let next = lengths[0]
                .checked_mul(r)
                .filter(|&l| l <= cap)
                .ok_or_else(|| Error::MemoryCap { letters: format!("over {}", lengths[0]), cap })?;
            lengths.insert(0, next);
        }
        Ok(Levels { earliest: -(ratios.len() as i64), alphabet, ratios, lengths })
    }

    pub fn earliest(&self) -> i64 {
        self.earliest
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn contains(&self, time: i64) -> bool {
        (self.earliest..=0).contains(&time)
    }

    pub fn ratio_times(&self) -> std::ops::RangeInclusive<i64> {
        self.earliest + 1..=0
    }

    /// `r_t`; panics outside `earliest+1..=0`.
    pub fn ratio(&self, time: i64) -> usize {
        self.ratios[(time - self.earliest - 1) as usize]
    }

    /// `ℓ_t`; panics outside the window.
    pub fn length(&self, time: i64) -> usize {
        self.lengths[(time - self.earliest) as usize]
    }

    /// Block shape of levels `n..=n0`.
    pub fn shape(&self, n: i64, n0: i64) -> Result<Shape> {
        for t in [n, n0] {
            if !self.contains(t) {
                return Err(Error::OutOfRange {
                    what: "time",
                    value: t.to_string(),
                    range: format!("{}..=0", self.earliest),
                });
            }
        }
        if n > n0 {
            return Err(Error::OutOfRange { what: "n", value: n.to_string(), range: format!("..={n0}") });
        }
        Shape::new((n + 1..=n0).map(|t| self.ratio(t)).collect(), self.length(n0))
    }
}

#[derive(Clone, Debug)]
pub struct Path {
    levels: Arc<Levels>,
    root: Vec<u32>,
    /// `V_t` for `t = earliest+1..=0`.
    innovations: Vec<usize>,
    /// Start of `X_t` inside the root word.
    offsets: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathRecord {
    pub time: i64,
    pub word: String,
    pub innovation: Option<usize>,
}

impl Path {
    /// Path from its earliest word and its innovations, earliest first.
    pub fn from_parts(levels: Arc<Levels>, root: Vec<u32>, innovations: Vec<usize>) -> Result<Self> {
        let m = levels.earliest();
        if root.len() != levels.length(m) {
            return Err(Error::LengthMismatch { left: root.len(), right: levels.length(m) });
        }
        if let Some(&bad) = root.iter().find(|&&x| x == 0 || x > levels.alphabet()) {
            return Err(Error::OutOfRange {
                what: "letter",
                value: bad.to_string(),
                range: format!("1..={}", levels.alphabet()),
            });
        }
        if innovations.len() != levels.ratios.len() {
            return Err(Error::LengthMismatch { left: innovations.len(), right: levels.ratios.len() });
        }
        let mut offsets = Vec::with_capacity(innovations.len() + 1);
        offsets.push(0);
        for (t, &v) in levels.ratio_times().zip(&innovations) {
            let r = levels.ratio(t);
            if v == 0 || v > r {
                return Err(Error::OutOfRange { what: "innovation", value: v.to_string(), range: format!("1..={r}") });
            }
            offsets.push(offsets.last().unwrap() + (v - 1) * levels.length(t));
        }
        Ok(Path { levels, root, innovations, offsets })
    }

    pub fn levels(&self) -> &Arc<Levels> {
        &self.levels
    }

    pub fn earliest(&self) -> i64 {
        self.levels.earliest
    }

    pub fn alphabet(&self) -> u32 {
        self.levels.alphabet
    }

    pub fn ratio_times(&self) -> std::ops::RangeInclusive<i64> {
        self.levels.ratio_times()
    }

    pub fn ratio(&self, time: i64) -> usize {
        self.levels.ratio(time)
    }

    /// `ℓ_t`, the length of `X_t` and of the blocks of `X_{t-1}`.
    pub fn block_len(&self, time: i64) -> usize {
        self.levels.length(time)
    }

    /// `X_t`.
    pub fn word(&self, time: i64) -> &[u32] {
        let i = (time - self.levels.earliest) as usize;
        &self.root[self.offsets[i]..self.offsets[i] + self.levels.lengths[i]]
    }

    /// `V_t`.
    pub fn innovation(&self, time: i64) -> usize {
        self.innovations[(time - self.levels.earliest - 1) as usize]
    }

    pub fn innovations(&self) -> &[usize] {
        &self.innovations
    }

    /// Checks `X_t = subword(X_{t-1}, ℓ_t, V_t)` at every time.
    pub fn splitting_holds(&self) -> bool {
        self.ratio_times().all(|t| {
            subword(self.word(t - 1), self.block_len(t), self.innovation(t)).is_ok_and(|w| w == self.word(t))
        })
    }

    pub fn records(&self) -> Vec<PathRecord> {
        (self.earliest()..=0)
            .map(|t| PathRecord {
                time: t,
                word: to_literal(self.word(t), self.alphabet()),
                innovation: (t > self.earliest()).then(|| self.innovation(t)),
            })
            .collect()
    }
}

fn draw_root(levels: &Levels, seed: u64, replica: u64, copy: Copy) -> Vec<u32> {
    let mut root = vec![0; levels.length(levels.earliest)];
    let mut rng = stream_for(seed, replica, levels.earliest, Role::Root, copy);
    fill_letters(&mut rng, levels.alphabet, &mut root);
    root
}

fn draw_innovation(levels: &Levels, seed: u64, replica: u64, time: i64, copy: Copy) -> usize {
    uniform_index(&mut stream_for(seed, replica, time, Role::Innovation, copy), levels.ratio(time))
}

/// One path: a uniform earliest word and independent uniform innovations.
pub fn simulate_path(levels: &Arc<Levels>, seed: u64, replica: u64) -> Path {
    let root = draw_root(levels, seed, replica, Copy::Single);
    let innovations = levels.ratio_times().map(|t| draw_innovation(levels, seed, replica, t, Copy::Single)).collect();
    Path::from_parts(levels.clone(), root, innovations).expect("simulated parts are valid")
}

/// How the second copy's innovations follow the first after the split time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum PairMode {
    #[default]
    IndependentProduct,
    Mirror,
    /// `V'' = σ(V')` for the assignment `σ` matching the blocks of
    /// `X'_{t-1}` to those of `X''_{t-1}` at minimum truncated orbit distance.
    GreedyMatch { depth: usize },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairConfig {
    pub mode: PairMode,
    /// Copies are independent up to and including this time.
    pub split: i64,
    pub table_cap: usize,
}

/// Two copies, independent until the split time and co-immersed after it.
pub fn simulate_pair(levels: &Arc<Levels>, config: &PairConfig, seed: u64, replica: u64) -> Result<(Path, Path)> {
    let first = draw_root(levels, seed, replica, Copy::First);
    let second = draw_root(levels, seed, replica, Copy::Second);
    simulate_pair_from(levels, config, first, second, seed, replica)
}

/// As `simulate_pair`, with given earliest words.
pub fn simulate_pair_from(
    levels: &Arc<Levels>,
    config: &PairConfig,
    first_root: Vec<u32>,
    second_root: Vec<u32>,
    seed: u64,
    replica: u64,
) -> Result<(Path, Path)> {
    if !levels.contains(config.split) {
        return Err(Error::OutOfRange {
            what: "split time",
            value: config.split.to_string(),
            range: format!("{}..=0", levels.earliest),
        });
    }
    // grow both paths one time at a time, since greedy matching looks at the past
    let m = levels.earliest;
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    let (mut off1, mut off2) = (0usize, 0usize);
    for t in levels.ratio_times() {
        let a = draw_innovation(levels, seed, replica, t, Copy::First);
        let b = if t <= config.split {
            draw_innovation(levels, seed, replica, t, Copy::Second)
        } else {
            match config.mode {
                PairMode::IndependentProduct => draw_innovation(levels, seed, replica, t, Copy::Second),
                PairMode::Mirror => a,
                PairMode::GreedyMatch { depth } => {
                    let len = levels.length(t - 1);
                    let x = &first_root[off1..off1 + len];
                    let y = &second_root[off2..off2 + len];
                    greedy_sigma(levels, t, depth, x, y, config.table_cap)?[a - 1]
                }
            }
        };
        off1 += (a - 1) * levels.length(t);
        off2 += (b - 1) * levels.length(t);
        v1.push(a);
        v2.push(b);
    }
    debug_assert_eq!(m + v1.len() as i64, 0);
    Ok((
        Path::from_parts(levels.clone(), first_root, v1)?,
        Path::from_parts(levels.clone(), second_root, v2)?,
    ))
}

/// Lexicographically smallest optimal matching of the `r_t` blocks of `x`
/// to those of `y`, by orbit distance truncated `depth` levels below `t`.
pub fn greedy_sigma(levels: &Levels, time: i64, depth: usize, x: &[u32], y: &[u32], cap: usize) -> Result<Vec<usize>> {
    let base = (time + depth as i64).min(0);
    let shape = levels.shape(time, base)?;
    let table = pairwise_table(Execution::Sequential, &shape, x, y, cap)?;
    let r = levels.ratio(time);
    let cost: Vec<i128> = table.iter().map(|&c| c as i128).collect();
    let (cols, _) = assignment_lex_min_int(&cost, r);
    Ok(cols.into_iter().map(|j| j + 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_schedule;

    fn levels(text: &str) -> Arc<Levels> {
        Arc::new(Levels::new(&build_schedule(&text.parse().unwrap()).unwrap(), DEFAULT_MEMORY_CAP).unwrap())
    }

    #[test]
    fn deep_binary_path() {
        let lv = levels("const:r=2,depth=20,N=2");
        let p = simulate_path(&lv, 1, 0);
        assert_eq!(p.word(-20).len(), 1 << 20);
        assert!(p.splitting_holds());
        assert_eq!(p.records().len(), 21);
    }

    #[test]
    fn memory_cap() {
        let s = build_schedule(&"const:r=2,depth=20,N=2".parse().unwrap()).unwrap();
        assert!(matches!(Levels::new(&s, 1 << 10), Err(Error::MemoryCap { .. })));
        let w = Levels::window(&s, -10, 1 << 10).unwrap();
        assert_eq!(w.length(-10), 1024);
    }

    #[test]
    fn determinism() {
        let lv = levels("ratios:[3,5,2],N=3");
        let a = simulate_path(&lv, 9, 4);
        let b = simulate_path(&lv, 9, 4);
        assert_eq!(a.records().len(), b.records().len());
        assert_eq!(a.word(-3), b.word(-3));
        assert_eq!(a.innovations(), b.innovations());
        assert_ne!(simulate_path(&lv, 9, 5).word(-3), a.word(-3));
    }

    #[test]
    fn from_parts_validates() {
        let lv = levels("ratios:[2,2],N=2");
        assert!(Path::from_parts(lv.clone(), vec![1, 2, 1, 2], vec![2, 1]).is_ok());
        assert!(Path::from_parts(lv.clone(), vec![1, 2, 1], vec![2, 1]).is_err());
        assert!(Path::from_parts(lv.clone(), vec![1, 2, 1, 3], vec![2, 1]).is_err());
        assert!(Path::from_parts(lv.clone(), vec![1, 2, 1, 2], vec![3, 1]).is_err());
        let p = Path::from_parts(lv, vec![1, 2, 2, 1], vec![2, 1]).unwrap();
        assert_eq!(p.word(-1), &[2, 1]);
        assert_eq!(p.word(0), &[2]);
    }

    #[test]
    fn mirror_with_equal_roots_stays_equal() {
        let lv = levels("const:r=2,depth=6,N=2");
        let config = PairConfig { mode: PairMode::Mirror, split: -6, table_cap: 1 << 20 };
        let root = vec![1; 64].into_iter().enumerate().map(|(i, _)| (i % 2 + 1) as u32).collect::<Vec<_>>();
        let (a, b) = simulate_pair_from(&lv, &config, root.clone(), root, 3, 0).unwrap();
        for t in -6..=0 {
            assert_eq!(a.word(t), b.word(t));
        }
    }

    #[test]
    fn greedy_pairs_are_valid() {
        let lv = levels("const:r=3,depth=4,N=2");
        for mode in [PairMode::GreedyMatch { depth: 2 }, PairMode::IndependentProduct, PairMode::Mirror] {
            let config = PairConfig { mode, split: -3, table_cap: 1 << 20 };
            let (a, b) = simulate_pair(&lv, &config, 5, 1).unwrap();
            assert!(a.splitting_holds() && b.splitting_holds());
            assert_eq!(a.innovation(-3), simulate_pair(&lv, &config, 5, 1).unwrap().0.innovation(-3));
        }
    }

    #[test]
    fn greedy_sigma_prefers_matching_blocks() {
        let lv = Levels::from_ratios(vec![2, 2], 2, 1 << 10).unwrap();
        // blocks of y are those of x swapped
        let sigma = greedy_sigma(&lv, -1, 2, &[1, 1, 2, 2], &[2, 2, 1, 1], 100).unwrap();
        assert_eq!(sigma, vec![2, 1]);
        let sigma = greedy_sigma(&lv, -1, 2, &[1, 1, 2, 2], &[1, 1, 2, 2], 100).unwrap();
        assert_eq!(sigma, vec![1, 2]);
    }
}
