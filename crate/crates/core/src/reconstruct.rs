//! Recovering the words from changed innovations.
//!
//! The full pipeline couples every time and rebuilds each word from the
//! canonical word of the previous one. The partial pipeline couples only the
//! `λ`-prefixes at selected times and relies on the later word falling
//! inside that prefix.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::coupling::{change_innovations, lemma13_bound, CouplingKind, CouplingScratch, InnovationRule, PlanRule};
use crate::error::{Error, Result};
use crate::experiments::Sampling;
use crate::par::try_fold;
use crate::process::{simulate_path, Levels, Path};
use crate::schedule::{lemma21_extract, Lemma21Extraction, Schedule, SelectionPlan};
use crate::words::{block_alphabet, canonical_letter, decode_into, encode_unchecked, subword};

fn ratio_text<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanEntry {
    /// Position in the selection; even positions are coupled.
    pub index: i64,
    pub time: i64,
    #[serde(serialize_with = "ratio_text")]
    pub alpha: BigRational,
}

/// Selected times with their rates. Entry `2k` is coupled at rate `α` and
/// paired with entry `2k+1`, the time whose word should come from the
/// coupled prefix.
#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionPlan {
    entries: Vec<PlanEntry>,
    fill: u32,
}

/// On-disk form of a hand-written plan.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct PlanFile {
    pub times: Vec<i64>,
    /// Rationals such as `"1/2"`, or decimal numbers.
    pub alphas: Vec<serde_json::Value>,
    #[serde(default = "default_fill")]
    pub fill: u32,
}

fn default_fill() -> u32 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PlanPair {
    pub k: i64,
    pub first: i64,
    pub second: i64,
    /// `α ℓ_first`.
    pub prefix: usize,
}

fn parse_alpha(v: &serde_json::Value) -> Result<BigRational> {
    let bad = |reason: &str| Error::InvalidPlan(format!("alpha {v}: {reason}"));
    match v {
        serde_json::Value::String(s) => {
            let s = s.trim();
            match s.split_once('/') {
                Some((n, d)) => {
                    let n: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
                    let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
                    if d.is_zero() {
                        return Err(bad("zero denominator"));
                    }
                    Ok(BigRational::new(n, d))
                }
                None => s.parse::<BigInt>().map(BigRational::from_integer).map_err(|_| bad("not a rational")),
            }
        }
        serde_json::Value::Number(n) => {
            let f = n.as_f64().ok_or_else(|| bad("not a number"))?;
            BigRational::from_float(f).ok_or_else(|| bad("not finite"))
        }
        _ => Err(bad("expected a string or a number")),
    }
}

impl ReconstructionPlan {
    /// Hand plan: the earliest time gets an even index, so times pair up
    /// from the earliest on and a trailing odd one out is coupled alone.
    pub fn new(times: Vec<i64>, alphas: Vec<BigRational>, fill: u32) -> Result<Self> {
        if times.len() != alphas.len() {
            return Err(Error::InvalidPlan(format!("{} times but {} alphas", times.len(), alphas.len())));
        }
        if times.is_empty() {
            return Err(Error::InvalidPlan("no selected times".into()));
        }
        let len = times.len() as i64;
        let last = if len % 2 == 0 { -1 } else { 0 };
        let entries = times
            .into_iter()
            .zip(alphas)
            .enumerate()
            .map(|(i, (time, alpha))| PlanEntry { index: i as i64 - (len - 1) + last, time, alpha })
            .collect();
        Ok(ReconstructionPlan { entries, fill })
    }

    pub fn from_file(file: &PlanFile) -> Result<Self> {
        let alphas = file.alphas.iter().map(parse_alpha).collect::<Result<Vec<_>>>()?;
        Self::new(file.times.clone(), alphas, file.fill)
    }

    /// The plan built from an automatic selection, keeping its indices.
    pub fn from_selection(selection: &SelectionPlan, fill: u32) -> Result<Self> {
        if selection.is_empty() {
            return Err(Error::InvalidPlan(
                selection.diagnostic.clone().unwrap_or_else(|| "empty selection".into()),
            ));
        }
        let entries = selection
            .indices
            .iter()
            .map(|s| PlanEntry { index: s.plan_index, time: s.time, alpha: s.alpha_rounded.clone() })
            .collect();
        Ok(ReconstructionPlan { entries, fill })
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn fill(&self) -> u32 {
        self.fill
    }

    pub fn earliest_time(&self) -> i64 {
        self.entries[0].time
    }

    fn prefix_at(&self, levels: &Levels, e: &PlanEntry) -> Result<usize> {
        let scaled = &e.alpha * BigRational::from_integer(BigInt::from(levels.length(e.time)));
        if !scaled.is_integer() {
            return Err(Error::InvalidPlan(format!(
                "alpha {} times length {} at time {} is not an integer",
                e.alpha,
                levels.length(e.time),
                e.time
            )));
        }
        Ok(scaled.to_integer().to_usize().expect("prefix is at most the length"))
    }

    /// Coupled times with their prefix lengths.
    pub fn coupled(&self, levels: &Levels) -> Result<Vec<(i64, usize)>> {
        self.entries
            .iter()
            .filter(|e| e.index % 2 == 0)
            .map(|e| Ok((e.time, self.prefix_at(levels, e)?)))
            .collect()
    }

    pub fn pairs(&self, levels: &Levels) -> Result<Vec<PlanPair>> {
        self.entries
            .windows(2)
            .filter(|w| w[0].index % 2 == 0)
            .map(|w| {
                Ok(PlanPair { k: w[0].index / 2, first: w[0].time, second: w[1].time, prefix: self.prefix_at(levels, &w[0])? })
            })
            .collect()
    }

    pub fn validate(&self, levels: &Levels) -> Result<()> {
        for w in self.entries.windows(2) {
            if w[0].time >= w[1].time {
                return Err(Error::InvalidPlan(format!("times {} and {} are not increasing", w[0].time, w[1].time)));
            }
            if w[1].index != w[0].index + 1 {
                return Err(Error::InvalidPlan("indices must be consecutive".into()));
            }
        }
        if self.fill == 0 || self.fill > levels.alphabet() {
            return Err(Error::InvalidPlan(format!("fill letter {} is not in 1..={}", self.fill, levels.alphabet())));
        }
        for e in &self.entries {
            if !levels.ratio_times().contains(&e.time) {
                return Err(Error::InvalidPlan(format!(
                    "time {} is outside {}..=0",
                    e.time,
                    levels.earliest() + 1
                )));
            }
            if !e.alpha.is_positive() || e.alpha > BigRational::one() {
                return Err(Error::InvalidPlan(format!("alpha {} at time {} is not in (0, 1]", e.alpha, e.time)));
            }
        }
        for (time, prefix) in self.coupled(levels)? {
            if prefix == 0 {
                return Err(Error::InvalidPlan(format!("empty prefix at time {time}")));
            }
            block_alphabet(levels.alphabet(), prefix)
                .map_err(|e| Error::InvalidPlan(format!("time {time}: {e}")))?;
        }
        for p in self.pairs(levels)? {
            if p.prefix % levels.length(p.second) != 0 {
                return Err(Error::InvalidPlan(format!(
                    "prefix {} at time {} is not a multiple of the length {} at time {}",
                    p.prefix,
                    p.first,
                    levels.length(p.second),
                    p.second
                )));
            }
        }
        Ok(())
    }

    /// Partial couplings at the coupled times.
    pub fn rule(&self, levels: &Levels) -> Result<PlanRule> {
        Ok(self
            .coupled(levels)?
            .into_iter()
            .fold(PlanRule::new(), |rule, (t, prefix)| rule.with(t, CouplingKind::Partial { prefix })))
    }
}

/// A word of `r` blocks of length `ℓ` whose `λ`-prefixes spell the canonical
/// word over `A^λ`; the other letters are `fill`.
pub fn build_c_word(alphabet: u32, ratio: usize, block_len: usize, prefix: usize, fill: u32) -> Result<Vec<u32>> {
    if prefix == 0 || prefix > block_len {
        return Err(Error::OutOfRange {
            what: "prefix length",
            value: prefix.to_string(),
            range: format!("1..={block_len}"),
        });
    }
    if fill == 0 || fill > alphabet {
        return Err(Error::OutOfRange { what: "fill letter", value: fill.to_string(), range: format!("1..={alphabet}") });
    }
    let size = block_alphabet(alphabet, prefix)?;
    let mut out = vec![fill; ratio * block_len];
    for (j, block) in out.chunks_exact_mut(block_len).enumerate() {
        decode_into(canonical_letter(size, j as u64 + 1), alphabet as u64, &mut block[..prefix]);
    }
    Ok(out)
}

/// Whether `X_second` sits inside the first `prefix` letters of `X_first`.
pub fn a_event(path: &Path, first: i64, second: i64, prefix: usize) -> bool {
    let start: usize = (first + 1..=second).map(|t| (path.innovation(t) - 1) * path.block_len(t)).sum();
    start + path.block_len(second) <= prefix
}

/// Evolves `start_word` (a word at `start`) up to `target` with the changed
/// innovations, undoing the rule's coupling wherever it has one.
pub fn offspring(
    levels: &Levels,
    changed: &[usize],
    rule: &dyn InnovationRule,
    start: i64,
    start_word: Vec<u32>,
    target: i64,
) -> Result<Vec<u32>> {
    if start_word.len() != levels.length(start) {
        return Err(Error::LengthMismatch { left: start_word.len(), right: levels.length(start) });
    }
    let mut y = start_word;
    for t in start + 1..=target {
        let v = changed[(t - levels.earliest() - 1) as usize];
        let len = levels.length(t);
        let u = match rule.coupling(t, &y, len, levels.alphabet())? {
            Some(c) => c.apply_inverse(v),
            None => v,
        };
        y = subword(&y, len, u)?.to_vec();
    }
    Ok(y)
}

#[derive(Clone, Debug, Serialize)]
pub struct StepCheck {
    pub time: i64,
    pub ratio: usize,
    /// `N^{ℓ_t}`.
    pub block_alphabet: u64,
    pub samples: u64,
    pub mismatches: u64,
    pub frequency: f64,
    pub bound: f64,
}

/// One coupled step: how often the coupled innovation picks, in the
/// canonical word, a block different from the true one.
pub fn theorem_b_step(schedule: &Schedule, time: i64, sampling: &Sampling) -> Result<StepCheck> {
    schedule.check_ratio_time(time)?;
    let levels = Arc::new(Levels::window(schedule, time - 1, sampling.memory_cap)?);
    let len = levels.length(time);
    let size = block_alphabet(levels.alphabet(), len)?;
    let ratio = levels.ratio(time);
    let alphabet = levels.alphabet() as u64;
    let mismatches = try_fold(
        sampling.exec,
        sampling.samples,
        || 0u64,
        |a, b| a + b,
        |i| -> Result<u64> {
            let path = simulate_path(&levels, sampling.seed, i);
            let codes: Vec<u64> =
                path.word(time - 1).chunks_exact(len).map(|b| encode_unchecked(b, alphabet)).collect();
            let mut scratch = CouplingScratch::default();
            let (perm, _) = scratch.build(&codes, size);
            let v = path.innovation(time);
            Ok((codes[v - 1] != canonical_letter(size, perm[v - 1] as u64)) as u64)
        },
    )?;
    Ok(StepCheck {
        time,
        ratio,
        block_alphabet: size,
        samples: sampling.samples,
        mismatches,
        frequency: mismatches as f64 / sampling.samples as f64,
        bound: lemma13_bound(size as f64, ratio as f64),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainTime {
    pub time: i64,
    pub ratio: usize,
    pub block_alphabet: u64,
    pub matches: u64,
    pub match_frequency: f64,
    /// Single-step bound at this time.
    pub step_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainResult {
    pub spec: String,
    pub coupled: bool,
    pub samples: u64,
    pub seed: u64,
    pub per_time: Vec<ChainTime>,
    /// Bound at the first step, which is all the chain can lose.
    pub start_bound: f64,
    pub bound_sum: f64,
    pub final_match_frequency: f64,
}

/// The full chain: start from the canonical word at the first time and
/// rebuild every later word through the inverse couplings. With
/// `coupled = false` every coupling is the identity.
pub fn theorem_b_chain(schedule: &Schedule, coupled: bool, sampling: &Sampling) -> Result<ChainResult> {
    let levels = Arc::new(Levels::new(schedule, sampling.memory_cap)?);
    let m = levels.earliest();
    if m == 0 {
        return Err(Error::InvalidSchedule("window has no ratios".into()));
    }
    let sizes = levels
        .ratio_times()
        .map(|t| block_alphabet(levels.alphabet(), levels.length(t)).map_err(|e| Error::InvalidPlan(format!("time {t}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let rule = if coupled {
        levels.ratio_times().fold(PlanRule::new(), |r, t| r.with(t, CouplingKind::Full))
    } else {
        PlanRule::new()
    };
    let times = sizes.len();
    let first = m + 1;
    let counts = try_fold(
        sampling.exec,
        sampling.samples,
        || vec![0u64; times],
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
        |i| -> Result<Vec<u64>> {
            let path = simulate_path(&levels, sampling.seed, i);
            let changed = change_innovations(&path, &rule)?;
            let mut y = vec![0u32; levels.length(first)];
            decode_into(canonical_letter(sizes[0], changed[0] as u64), levels.alphabet() as u64, &mut y);
            let mut hits = vec![0u64; times];
            hits[0] = (y == path.word(first)) as u64;
            for (k, t) in (first + 1..=0).enumerate() {
                y = offspring(&levels, &changed, &rule, t - 1, y, t)?;
                hits[k + 1] = (y == path.word(t)) as u64;
            }
            Ok(hits)
        },
    )?;
    let per_time: Vec<ChainTime> = levels
        .ratio_times()
        .zip(&sizes)
        .zip(&counts)
        .map(|((t, &size), &matches)| ChainTime {
            time: t,
            ratio: levels.ratio(t),
            block_alphabet: size,
            matches,
            match_frequency: matches as f64 / sampling.samples as f64,
            step_bound: lemma13_bound(size as f64, levels.ratio(t) as f64),
        })
        .collect();
    Ok(ChainResult {
        spec: schedule.spec().to_string(),
        coupled,
        samples: sampling.samples,
        seed: sampling.seed,
        start_bound: per_time[0].step_bound,
        bound_sum: per_time.iter().map(|c| c.step_bound).sum(),
        final_match_frequency: per_time.last().unwrap().match_frequency,
        per_time,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PrefixStat {
    pub time: i64,
    pub prefix: usize,
    pub ratio: usize,
    pub block_alphabet: u64,
    pub samples: u64,
    pub mismatches: u64,
    pub mismatch_frequency: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairStat {
    pub k: i64,
    pub first: i64,
    pub second: i64,
    #[serde(serialize_with = "ratio_text")]
    pub alpha: BigRational,
    pub alpha_value: f64,
    pub samples: u64,
    pub a_count: u64,
    pub a_frequency: f64,
    pub prefix_matches: u64,
    pub a_and_prefix: u64,
    /// Offspring equals the true word at the target.
    pub successes: u64,
    pub a_and_success: u64,
    pub success_given_a: Option<f64>,
    pub prefix_match_given_a: Option<f64>,
    /// `P[X_target ≠ offspring; A_k]`.
    pub failure_and_a: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCResult {
    pub spec: String,
    pub target: i64,
    pub samples: u64,
    pub seed: u64,
    pub plan: ReconstructionPlan,
    pub prefixes: Vec<PrefixStat>,
    pub pairs: Vec<PairStat>,
    pub diagnostics: Vec<String>,
    /// Interval extraction on `(P[failure; A_k], P[A_k])`, latest pair first.
    pub extraction: Option<Lemma21Extraction>,
}

/// The partial pipeline up to `target`.
pub fn theorem_c_run(schedule: &Schedule, plan: &ReconstructionPlan, target: i64, sampling: &Sampling) -> Result<TheoremCResult> {
    let start = plan.earliest_time() - 1;
    schedule.check_time(start)?;
    let levels = Arc::new(Levels::window(schedule, start, sampling.memory_cap)?);
    plan.validate(&levels)?;
    if !levels.contains(target) || target < plan.earliest_time() {
        return Err(Error::OutOfRange {
            what: "target time",
            value: target.to_string(),
            range: format!("{}..=0", plan.earliest_time()),
        });
    }
    let rule = plan.rule(&levels)?;
    let coupled = plan.coupled(&levels)?;
    let mut diagnostics = Vec::new();
    let pairs: Vec<PlanPair> = plan
        .pairs(&levels)?
        .into_iter()
        .filter(|p| {
            let keep = p.second <= target;
            if !keep {
                diagnostics.push(format!("pair ({}, {}) ends after the target {target}, skipped", p.first, p.second));
            }
            keep
        })
        .collect();
    let c_words = coupled
        .iter()
        .map(|&(t, prefix)| build_c_word(levels.alphabet(), levels.ratio(t), levels.length(t), prefix, plan.fill()))
        .collect::<Result<Vec<_>>>()?;
    let width = coupled.len() + 5 * pairs.len();
    let fill = plan.fill();
    let counts = try_fold(
        sampling.exec,
        sampling.samples,
        || vec![0u64; width],
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
        |i| -> Result<Vec<u64>> {
            let path = simulate_path(&levels, sampling.seed, i);
            let changed = change_innovations(&path, &rule)?;
            let v_at = |t: i64| changed[(t - levels.earliest() - 1) as usize];
            let mut out = vec![0u64; width];
            let mut starts = Vec::with_capacity(coupled.len());
            for (slot, (&(t, prefix), c)) in coupled.iter().zip(&c_words).enumerate() {
                let len = levels.length(t);
                let guess = &subword(c, len, v_at(t))?[..prefix];
                out[slot] = (guess == &path.word(t)[..prefix]) as u64;
                let mut start = vec![fill; len];
                start[..prefix].copy_from_slice(guess);
                starts.push((t, start, out[slot]));
            }
            for (p_idx, p) in pairs.iter().enumerate() {
                let (_, start, matched) = starts.iter().find(|(t, _, _)| *t == p.first).expect("pair starts at a coupled time");
                let y = offspring(&levels, &changed, &rule, p.first, start.clone(), target)?;
                let a = a_event(&path, p.first, p.second, p.prefix) as u64;
                let success = (y == path.word(target)) as u64;
                let base = coupled.len() + 5 * p_idx;
                out[base] = a;
                out[base + 1] = *matched;
                out[base + 2] = a * matched;
                out[base + 3] = success;
                out[base + 4] = a * success;
            }
            Ok(out)
        },
    )?;
    let n = sampling.samples;
    let freq = |c: u64| c as f64 / n as f64;
    let prefixes = coupled
        .iter()
        .enumerate()
        .map(|(slot, &(t, prefix))| {
            let size = block_alphabet(levels.alphabet(), prefix).expect("validated width");
            let mismatches = n - counts[slot];
            PrefixStat {
                time: t,
                prefix,
                ratio: levels.ratio(t),
                block_alphabet: size,
                samples: n,
                mismatches,
                mismatch_frequency: freq(mismatches),
                bound: lemma13_bound(size as f64, levels.ratio(t) as f64),
            }
        })
        .collect();
    let alpha_of = |t: i64| plan.entries.iter().find(|e| e.time == t).unwrap().alpha.clone();
    let pair_stats: Vec<PairStat> = pairs
        .iter()
        .enumerate()
        .map(|(p_idx, p)| {
            let base = coupled.len() + 5 * p_idx;
            let (a, prefix_matches, a_and_prefix, successes, a_and_success) =
                (counts[base], counts[base + 1], counts[base + 2], counts[base + 3], counts[base + 4]);
            let alpha = alpha_of(p.first);
            PairStat {
                k: p.k,
                first: p.first,
                second: p.second,
                alpha_value: alpha.to_f64().unwrap_or(f64::NAN),
                alpha,
                samples: n,
                a_count: a,
                a_frequency: freq(a),
                prefix_matches,
                a_and_prefix,
                successes,
                a_and_success,
                success_given_a: (a > 0).then(|| a_and_success as f64 / a as f64),
                prefix_match_given_a: (a > 0).then(|| a_and_prefix as f64 / a as f64),
                failure_and_a: freq(a - a_and_success),
            }
        })
        .collect();
    let extraction = {
        let a: Vec<f64> = pair_stats.iter().rev().map(|p| p.failure_and_a).collect();
        let b: Vec<f64> = pair_stats.iter().rev().map(|p| p.a_frequency).collect();
        let bound = b.iter().copied().fold(0.0, f64::max);
        if bound > 0.0 {
            Some(lemma21_extract(&a, &b, bound)?)
        } else {
            None
        }
    };
    Ok(TheoremCResult {
        spec: schedule.spec().to_string(),
        target,
        samples: n,
        seed: sampling.seed,
        plan: plan.clone(),
        prefixes,
        pairs: pair_stats,
        diagnostics,
        extraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Execution;
    use crate::schedule::{build_schedule, proposition21_construct};
    use crate::words::tilde_extract;

    fn sched(text: &str) -> Schedule {
        build_schedule(&text.parse().unwrap()).unwrap()
    }

    fn sampling(samples: u64, seed: u64) -> Sampling {
        Sampling { samples, seed, exec: Execution::Parallel, memory_cap: 1 << 24 }
    }

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    #[test]
    fn c_word_examples() {
        let c = build_c_word(2, 4, 2, 1, 1).unwrap();
        assert_eq!(c, vec![1, 1, 2, 1, 1, 1, 2, 1]);
        let full = build_c_word(2, 5, 2, 2, 1).unwrap();
        assert_eq!(full, vec![1, 1, 1, 2, 2, 1, 2, 2, 1, 1]);
        let c = build_c_word(3, 20, 4, 2, 2).unwrap();
        let tilde = tilde_extract(&c, 4, 2).unwrap();
        for (j, b) in tilde.chunks(2).enumerate() {
            assert_eq!(encode_unchecked(b, 3), canonical_letter(9, j as u64 + 1));
        }
        assert!(build_c_word(2, 4, 70, 65, 1).is_err());
        assert!(build_c_word(2, 4, 2, 3, 1).is_err());
    }

    #[test]
    fn plan_indexing() {
        let lv = Levels::from_ratios(vec![4096, 4], 2, 1 << 20).unwrap();
        let plan = ReconstructionPlan::new(vec![-1, 0], vec![half(), BigRational::one()], 1).unwrap();
        assert_eq!(plan.entries()[0].index, -2);
        plan.validate(&lv).unwrap();
        assert_eq!(plan.coupled(&lv).unwrap(), vec![(-1, 2)]);
        assert_eq!(plan.pairs(&lv).unwrap(), vec![PlanPair { k: -1, first: -1, second: 0, prefix: 2 }]);
        let odd = ReconstructionPlan::new(vec![-1], vec![half()], 1).unwrap();
        assert_eq!(odd.entries()[0].index, 0);
        assert!(odd.pairs(&lv).unwrap().is_empty());
        let bad = ReconstructionPlan::new(vec![-1, 0], vec![BigRational::new(1.into(), 3.into()), half()], 1).unwrap();
        assert!(bad.validate(&lv).is_err());
        let bad = ReconstructionPlan::new(vec![0, -1], vec![half(), half()], 1).unwrap();
        assert!(bad.validate(&lv).is_err());
    }

    #[test]
    fn plan_file_parsing() {
        let file: PlanFile = serde_json::from_str(r#"{"times":[-1,0],"alphas":["1/2",1]}"#).unwrap();
        let plan = ReconstructionPlan::from_file(&file).unwrap();
        assert_eq!(plan.fill(), 1);
        assert_eq!(plan.entries()[0].alpha, half());
        let file: PlanFile = serde_json::from_str(r#"{"times":[-1],"alphas":[0.5],"fill":2}"#).unwrap();
        assert_eq!(ReconstructionPlan::from_file(&file).unwrap().entries()[0].alpha, half());
    }

    #[test]
    fn automatic_plan_converts() {
        let s = sched("ratios:[2^32,16],N=2");
        let plan = ReconstructionPlan::from_selection(&proposition21_construct(&s), 1).unwrap();
        assert_eq!(plan.entries().iter().map(|e| e.index).collect::<Vec<_>>(), vec![-1, 0]);
        assert!(ReconstructionPlan::from_selection(&proposition21_construct(&sched("const:r=2,depth=4,N=2")), 1).is_err());
    }

    #[test]
    fn step_check_bound_and_determinism() {
        let s = sched("ratios:[1024],N=2");
        let a = theorem_b_step(&s, 0, &sampling(20_000, 3)).unwrap();
        assert!((a.bound - 0.251953).abs() < 1e-6);
        assert!(a.frequency < a.bound);
        let b = theorem_b_step(&s, 0, &Sampling { exec: Execution::Sequential, ..sampling(20_000, 3) }).unwrap();
        assert_eq!(a.mismatches, b.mismatches);
    }

    #[test]
    fn single_step_chain_is_the_step_check() {
        let s = sched("ratios:[64],N=2");
        let step = theorem_b_step(&s, 0, &sampling(5_000, 8)).unwrap();
        let chain = theorem_b_chain(&s, true, &sampling(5_000, 8)).unwrap();
        assert_eq!(chain.per_time[0].matches, step.samples - step.mismatches);
    }

    #[test]
    fn identity_chain_matches_by_chance() {
        let s = sched("ratios:[64,4],N=2");
        let chain = theorem_b_chain(&s, false, &sampling(20_000, 1)).unwrap();
        // first word has 4 letters: a uniform guess succeeds with probability 1/16
        let f = chain.per_time[0].match_frequency;
        assert!((f - 1.0 / 16.0).abs() < 4.0 * (1.0f64 / 16.0 * 15.0 / 16.0 / 20_000.0).sqrt(), "{f}");
        // without coupling the chain only keeps what it had
        assert!(chain.per_time[1].match_frequency >= f);
    }

    #[test]
    fn coupled_chain_keeps_its_first_word() {
        let s = sched("ratios:[2^12,4,2],N=2");
        let chain = theorem_b_chain(&s, true, &sampling(2_000, 5)).unwrap();
        let first = chain.per_time[0].match_frequency;
        for t in &chain.per_time {
            assert!(t.match_frequency >= first);
        }
        assert!(first >= 1.0 - chain.start_bound - 0.05);
    }

    #[test]
    fn a_event_depends_only_on_inner_innovations() {
        let lv = Arc::new(Levels::from_ratios(vec![3, 4, 2], 2, 1 << 10).unwrap());
        for seed in 0..50 {
            let p = simulate_path(&lv, seed, 0);
            let a = a_event(&p, -2, 0, 4);
            let mut v = p.innovations().to_vec();
            v[0] = v[0] % 3 + 1;
            let q = Path::from_parts(lv.clone(), p.word(-3).to_vec(), v).unwrap();
            assert_eq!(a_event(&q, -2, 0, 4), a);
            assert!(a_event(&p, -2, 0, lv.length(-2)));
        }
    }

    #[test]
    fn offspring_of_the_true_word_is_exact() {
        let lv = Arc::new(Levels::from_ratios(vec![3, 4, 2, 2], 2, 1 << 10).unwrap());
        let rule = PlanRule::new();
        for seed in 0..20 {
            let p = simulate_path(&lv, seed, 0);
            let y = offspring(&lv, p.innovations(), &rule, -3, p.word(-3).to_vec(), 0).unwrap();
            assert_eq!(y, p.word(0));
        }
        let rule = PlanRule::new().with(-2, CouplingKind::Partial { prefix: 2 }).with(0, CouplingKind::Full);
        for seed in 0..20 {
            let p = simulate_path(&lv, seed, 0);
            let changed = change_innovations(&p, &rule).unwrap();
            let y = offspring(&lv, &changed, &rule, -4, p.word(-4).to_vec(), 0).unwrap();
            assert_eq!(y, p.word(0));
        }
    }

    #[test]
    fn theorem_c_small_plan() {
        let s = sched("ratios:[4096,4],N=2");
        let plan = ReconstructionPlan::new(vec![-1, 0], vec![half(), BigRational::one()], 1).unwrap();
        let r = theorem_c_run(&s, &plan, 0, &sampling(4_000, 2)).unwrap();
        let p = &r.pairs[0];
        let sigma = (0.25f64 / 4_000.0).sqrt();
        assert!((p.a_frequency - 0.5).abs() < 4.0 * sigma);
        assert!(r.prefixes[0].mismatch_frequency <= r.prefixes[0].bound);
        assert!(p.success_given_a.unwrap() + 1e-12 >= p.prefix_match_given_a.unwrap());
        assert!(r.extraction.is_some());
    }

    #[test]
    fn fill_letter_does_not_change_prefix_statistics() {
        let s = sched("ratios:[256,4],N=2");
        let one = ReconstructionPlan::new(vec![-1, 0], vec![half(), BigRational::one()], 1).unwrap();
        let two = ReconstructionPlan::new(vec![-1, 0], vec![half(), BigRational::one()], 2).unwrap();
        let a = theorem_c_run(&s, &one, 0, &sampling(2_000, 4)).unwrap();
        let b = theorem_c_run(&s, &two, 0, &sampling(2_000, 4)).unwrap();
        assert_eq!(a.prefixes[0].mismatches, b.prefixes[0].mismatches);
        assert_eq!(a.pairs[0].a_and_success, b.pairs[0].a_and_success);
    }
}
