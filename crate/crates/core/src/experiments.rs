//! Monte Carlo harness: estimates with confidence intervals and comparisons
//! of estimates against bounds.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{choose_n0, lemma32_bound, tail_sum, N0Choice, DEFAULT_TABLE_CAP};
use crate::par::{try_fold, Execution};
use crate::process::{simulate_pair, Levels, PairConfig, PairMode, DEFAULT_MEMORY_CAP};
use crate::real::DEFAULT_PRECISION;
use crate::reconstruct::{theorem_b_step, StepCheck, TheoremCResult};
use crate::rng::{replica_seed, stream, Role};
use crate::schedule::Schedule;

/// Sample count, master seed and execution mode of a Monte Carlo run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
    #[serde(skip)]
    pub memory_cap: usize,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64) -> Self {
        Sampling { samples, seed, exec: Execution::default(), memory_cap: DEFAULT_MEMORY_CAP }
    }

    pub fn with_exec(self, exec: Execution) -> Self {
        Sampling { exec, ..self }
    }
}

pub const MIN_SAMPLES: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub samples: u64,
    pub seed: u64,
}

impl Estimate {
    /// Bernoulli estimate with `stderr = √(p(1−p)/n)`.
    pub fn from_counts(successes: u64, samples: u64, seed: u64) -> Self {
        let n = samples.max(1) as f64;
        let p = successes as f64 / n;
        Self::with_stderr(p, (p * (1.0 - p) / n).sqrt(), samples, seed)
    }

    /// Sample mean of values given in replica order.
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self::with_stderr(mean, (var / n).sqrt(), values.len() as u64, seed)
    }

    fn with_stderr(mean: f64, stderr: f64, samples: u64, seed: u64) -> Self {
        let half = 1.959_963_984_540_054 * stderr;
        Estimate { mean, stderr, ci95: (mean - half, mean + half), samples, seed }
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::OutOfRange { what: "samples", value: samples.to_string(), range: format!(">= {MIN_SAMPLES}") });
    }
    Ok(())
}

fn tag(replica: u64) -> impl Fn(Error) -> Error {
    move |e| Error::Replica { replica, source: Box::new(e) }
}

/// Frequency of a Bernoulli kernel; replica `i` gets `replica_seed(seed, i)`.
pub fn mc_estimate<F>(kernel: F, samples: u64, seed: u64, exec: Execution) -> Result<Estimate>
where
    F: Fn(u64) -> Result<bool> + Sync + Send,
{
    check_samples(samples)?;
    let hits = try_fold(exec, samples, || 0u64, |a, b| a + b, |i| {
        kernel(replica_seed(seed, i)).map(u64::from).map_err(tag(i))
    })?;
    Ok(Estimate::from_counts(hits, samples, seed))
}

/// Mean of a real-valued kernel. Values are summed in replica order, so the
/// result does not depend on the thread count.
pub fn mean_estimate<F>(kernel: F, samples: u64, seed: u64, exec: Execution) -> Result<Estimate>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    check_samples(samples)?;
    let mut values = try_fold(
        exec,
        samples,
        Vec::new,
        |mut a: Vec<(u64, f64)>, b| {
            a.extend(b);
            a
        },
        |i| Ok(vec![(i, kernel(replica_seed(seed, i)).map_err(tag(i))?)]),
    )?;
    values.sort_unstable_by_key(|v| v.0);
    let values: Vec<f64> = values.into_iter().map(|v| v.1).collect();
    Ok(Estimate::from_values(&values, seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// The estimate should be at most the bound.
    AtMost,
    AtLeast,
    /// The estimate should equal the target up to noise.
    Near,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Pass,
    Fail,
    /// The bound says nothing about a probability.
    Vacuous,
}

pub const DEFAULT_SLACK_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub direction: Direction,
    pub estimate: Estimate,
    pub bound: f64,
    pub slack_sigmas: f64,
    /// Standard deviation the slack is measured in; the estimate's own
    /// unless the comparison involves a second estimate.
    pub sigma: f64,
    pub verdict: Outcome,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, direction: Direction, estimate: Estimate, bound: f64) -> Self {
        Self::with_sigma(name, direction, estimate, bound, estimate.stderr)
    }

    pub fn with_sigma(name: impl Into<String>, direction: Direction, estimate: Estimate, bound: f64, sigma: f64) -> Self {
        let slack = DEFAULT_SLACK_SIGMAS * sigma;
        let verdict = match direction {
            Direction::AtMost if bound >= 1.0 => Outcome::Vacuous,
            Direction::AtLeast if bound <= 0.0 => Outcome::Vacuous,
            Direction::AtMost if estimate.mean <= bound + slack => Outcome::Pass,
            Direction::AtLeast if estimate.mean >= bound - slack => Outcome::Pass,
            Direction::Near if (estimate.mean - bound).abs() <= slack => Outcome::Pass,
            _ => Outcome::Fail,
        };
        BoundCheck { name: name.into(), direction, estimate, bound, slack_sigmas: DEFAULT_SLACK_SIGMAS, sigma, verdict }
    }

    /// Whether the estimate meets the bound with no slack at all.
    pub fn strict(&self) -> bool {
        match self.direction {
            Direction::AtMost => self.estimate.mean <= self.bound,
            Direction::AtLeast => self.estimate.mean >= self.bound,
            Direction::Near => self.estimate.mean == self.bound,
        }
    }
}

/// `P[mean of n Bernoulli(q) ≤ q − α]` against `exp(−2nα²)`.
pub fn hoeffding_check(q: f64, n: u64, alpha: f64, samples: u64, seed: u64, exec: Execution) -> Result<BoundCheck> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::OutOfRange { what: "q", value: q.to_string(), range: "(0, 1)".into() });
    }
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange { what: "alpha", value: alpha.to_string(), range: "> 0".into() });
    }
    if n == 0 {
        return Err(Error::OutOfRange { what: "n", value: "0".into(), range: ">= 1".into() });
    }
    let threshold = q - alpha;
    let estimate = mc_estimate(
        |s| {
            let mut rng = stream(s, 0, 0, Role::Custom(1));
            let ones = (0..n).filter(|_| rng.random_bool(q)).count();
            Ok((ones as f64 / n as f64) <= threshold)
        },
        samples,
        seed,
        exec,
    )?;
    let bound = (-2.0 * n as f64 * alpha * alpha).exp();
    Ok(BoundCheck::new(format!("hoeffding q={q} n={n} alpha={alpha}"), Direction::AtMost, estimate, bound))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
    pub passed: usize,
    pub failed: usize,
    pub vacuous: usize,
}

impl BoundReport {
    pub fn success(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| c.verdict == Outcome::Fail).map(|c| c.name.as_str()).collect()
    }
}

pub fn bound_report(checks: Vec<BoundCheck>) -> Result<BoundReport> {
    if checks.is_empty() {
        return Err(Error::Precondition("bound report with no checks".into()));
    }
    let count = |o: Outcome| checks.iter().filter(|c| c.verdict == o).count();
    Ok(BoundReport { passed: count(Outcome::Pass), failed: count(Outcome::Fail), vacuous: count(Outcome::Vacuous), checks })
}

/// A coupled step compared with its bound.
pub fn step_bound_check(schedule: &Schedule, time: i64, sampling: &Sampling) -> Result<(StepCheck, BoundCheck)> {
    check_samples(sampling.samples)?;
    let step = theorem_b_step(schedule, time, sampling)?;
    let estimate = Estimate::from_counts(step.mismatches, step.samples, sampling.seed);
    let check = BoundCheck::new(
        format!("coupled step M={} r={}", step.block_alphabet, step.ratio),
        Direction::AtMost,
        estimate,
        step.bound,
    );
    Ok((step, check))
}

/// Checks on a partial reconstruction run: event frequency against its
/// rate, prefix mismatches against their bound, and success on the event
/// against prefix agreement on the event.
pub fn theorem_c_checks(run: &TheoremCResult) -> Vec<BoundCheck> {
    let mut checks = Vec::new();
    for p in &run.prefixes {
        checks.push(BoundCheck::new(
            format!("prefix mismatch at t={}", p.time),
            Direction::AtMost,
            Estimate::from_counts(p.mismatches, p.samples, run.seed),
            p.bound,
        ));
    }
    for p in &run.pairs {
        checks.push(BoundCheck::new(
            format!("event rate for pair ({}, {})", p.first, p.second),
            Direction::Near,
            Estimate::from_counts(p.a_count, p.samples, run.seed),
            p.alpha_value,
        ));
        if p.a_count > 0 {
            checks.push(BoundCheck::new(
                format!("success given event for pair ({}, {})", p.first, p.second),
                Direction::AtLeast,
                Estimate::from_counts(p.a_and_success, p.a_count, run.seed),
                p.a_and_prefix as f64 / p.a_count as f64,
            ));
        }
    }
    checks
}

#[derive(Clone, Debug, Serialize)]
pub struct TailExperiment {
    pub spec: String,
    pub n: i64,
    pub n0: i64,
    pub length: usize,
    pub s_n: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub bound: f64,
    pub mean_e: Estimate,
    pub check: BoundCheck,
}

/// `P[e_n(X', X'') ≤ 1 − 1/N − α]` for independent uniform words at time `n`,
/// with `n0` from the automatic choice and `α` from it unless given.
pub fn tail_bound_experiment(
    schedule: &Schedule,
    n: i64,
    alpha: Option<f64>,
    sampling: &Sampling,
) -> Result<TailExperiment> {
    check_samples(sampling.samples)?;
    let mut choice = choose_n0(schedule)?;
    if let Some(a) = alpha {
        choice.alpha = a;
    }
    if n > choice.n0 {
        return Err(Error::OutOfRange { what: "n", value: n.to_string(), range: format!("..={}", choice.n0) });
    }
    let levels = Arc::new(Levels::window(schedule, n, sampling.memory_cap)?);
    let shape = levels.shape(n, choice.n0)?;
    let s_n = tail_sum(schedule, n, choice.n0, DEFAULT_PRECISION)?.to_f64();
    let length = levels.length(n);
    let tail = lemma32_bound(levels.alphabet(), choice.alpha, length as f64, s_n)?;
    let config = PairConfig { mode: PairMode::IndependentProduct, split: 0, table_cap: DEFAULT_TABLE_CAP };
    let sample = |i: u64| -> Result<u64> {
        let (x, y) = simulate_pair(&levels, &config, sampling.seed, i)?;
        Ok(shape.distance(x.word(n), y.word(n))?.numerator)
    };
    // integer distances keep the sums exact and thread-independent
    let (hits, sum, sum_sq) = try_fold(
        sampling.exec,
        sampling.samples,
        || (0u64, 0u64, 0u128),
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        |i| {
            let d = sample(i).map_err(tag(i))?;
            let hit = (d as f64 / length as f64) <= tail.threshold;
            Ok((hit as u64, d, (d as u128) * (d as u128)))
        },
    )?;
    let estimate = Estimate::from_counts(hits, sampling.samples, sampling.seed);
    let mean_e = integer_mean(sum, sum_sq, sampling.samples, length as f64, sampling.seed);
    Ok(TailExperiment {
        spec: schedule.spec().to_string(),
        n,
        n0: choice.n0,
        length,
        s_n,
        alpha: choice.alpha,
        threshold: tail.threshold,
        bound: tail.bound,
        mean_e,
        check: BoundCheck::new(format!("orbit tail at n={n}"), Direction::AtMost, estimate, tail.bound),
    })
}

fn integer_mean(sum: u64, sum_sq: u128, samples: u64, scale: f64, seed: u64) -> Estimate {
    let n = samples as f64;
    let mean = sum as f64 / n;
    let var = if samples > 1 { ((sum_sq as f64) - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
    Estimate::with_stderr(mean / scale, (var / n).sqrt() / scale, samples, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainExperiment {
    pub spec: String,
    pub mode: PairMode,
    pub n: i64,
    pub choice: N0Choice,
    /// `P[X'_{n0} ≠ X''_{n0}]`.
    pub disagreement: Estimate,
    /// `E[e_n(X'_n, X''_n)]`.
    pub mean_e: Estimate,
    pub checks: Vec<BoundCheck>,
}

/// Pairs independent up to `n` and co-immersed after it: disagreement at
/// `n0` against the mean orbit distance at `n`, and that mean against
/// `(1−β)(1−1/N−α)`.
pub fn inequality_chain(schedule: &Schedule, n: i64, mode: PairMode, sampling: &Sampling) -> Result<ChainExperiment> {
    check_samples(sampling.samples)?;
    let choice = choose_n0(schedule)?;
    if n > choice.n0 {
        return Err(Error::OutOfRange { what: "n", value: n.to_string(), range: format!("..={}", choice.n0) });
    }
    let levels = Arc::new(Levels::window(schedule, n, sampling.memory_cap)?);
    let shape = levels.shape(n, choice.n0)?;
    let length = levels.length(n);
    let config = PairConfig { mode, split: n, table_cap: DEFAULT_TABLE_CAP };
    let n0 = choice.n0;
    let (differ, sum, sum_sq) = try_fold(
        sampling.exec,
        sampling.samples,
        || (0u64, 0u64, 0u128),
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        |i| {
            let run = || -> Result<(u64, u64, u128)> {
                let (x, y) = simulate_pair(&levels, &config, sampling.seed, i)?;
                let d = shape.distance(x.word(n), y.word(n))?.numerator;
                Ok(((x.word(n0) != y.word(n0)) as u64, d, (d as u128) * (d as u128)))
            };
            run().map_err(tag(i))
        },
    )?;
    let disagreement = Estimate::from_counts(differ, sampling.samples, sampling.seed);
    let mean_e = integer_mean(sum, sum_sq, sampling.samples, length as f64, sampling.seed);
    let joint = (disagreement.stderr.powi(2) + mean_e.stderr.powi(2)).sqrt();
    let checks = vec![
        BoundCheck::with_sigma(
            format!("disagreement at n0 vs mean distance ({mode:?}, n={n})"),
            Direction::AtLeast,
            disagreement,
            mean_e.mean,
            joint,
        ),
        BoundCheck::new(
            format!("mean distance vs lower bound ({mode:?}, n={n})"),
            Direction::AtLeast,
            mean_e,
            choice.lower_bound,
        ),
    ];
    Ok(ChainExperiment { spec: schedule.spec().to_string(), mode, n, choice, disagreement, mean_e, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_schedule;

    fn sched(text: &str) -> Schedule {
        build_schedule(&text.parse().unwrap()).unwrap()
    }

    #[test]
    fn constant_kernel() {
        let e = mc_estimate(|_| Ok(true), 100, 1, Execution::Parallel).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
        assert_eq!(e.ci95, (1.0, 1.0));
    }

    #[test]
    fn fair_coin() {
        let coin = |s: u64| Ok(stream(s, 0, 0, Role::Custom(7)).random_bool(0.5));
        let e = mc_estimate(coin, 100_000, 11, Execution::Parallel).unwrap();
        assert!((e.mean - 0.5).abs() < 0.005);
        assert!(e.ci95.0 <= e.mean && e.mean <= e.ci95.1);
        assert_eq!(e, mc_estimate(coin, 100_000, 11, Execution::Sequential).unwrap());
    }

    #[test]
    fn too_few_samples_and_kernel_errors() {
        assert!(mc_estimate(|_| Ok(true), 29, 0, Execution::Parallel).is_err());
        let err = mc_estimate(
            |s| if s == replica_seed(5, 40) { Err(Error::Precondition("boom".into())) } else { Ok(true) },
            100,
            5,
            Execution::Parallel,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Replica { replica: 40, .. }));
    }

    #[test]
    fn confidence_interval_coverage() {
        // 200 runs of a p = 0.3 kernel: about 95% of intervals contain p
        let covered = (0..200u64)
            .filter(|&run| {
                let e = mc_estimate(
                    |s| Ok(stream(s, 0, 0, Role::Custom(3)).random_bool(0.3)),
                    400,
                    1000 + run,
                    Execution::Parallel,
                )
                .unwrap();
                e.ci95.0 <= 0.3 && 0.3 <= e.ci95.1
            })
            .count();
        assert!((178..=200).contains(&covered), "{covered}");
    }

    #[test]
    fn mean_is_thread_independent() {
        let k = |s: u64| Ok(stream(s, 0, 0, Role::Custom(9)).random::<f64>());
        let a = mean_estimate(k, 5_000, 3, Execution::Parallel).unwrap();
        let b = mean_estimate(k, 5_000, 3, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 0.5).abs() < 4.0 * a.stderr);
    }

    #[test]
    fn verdicts() {
        let e = Estimate::from_counts(10, 100, 0);
        assert_eq!(BoundCheck::new("x", Direction::AtMost, e, 0.2).verdict, Outcome::Pass);
        assert_eq!(BoundCheck::new("x", Direction::AtMost, e, 0.0).verdict, Outcome::Fail);
        assert_eq!(BoundCheck::new("x", Direction::AtMost, e, 1.5).verdict, Outcome::Vacuous);
        assert_eq!(BoundCheck::new("x", Direction::Near, e, 0.12).verdict, Outcome::Pass);
        assert_eq!(BoundCheck::new("x", Direction::AtLeast, e, 0.5).verdict, Outcome::Fail);
    }

    #[test]
    fn hoeffding_examples() {
        let c = hoeffding_check(0.5, 100, 0.2, 20_000, 1, Execution::Parallel).unwrap();
        assert!((c.bound - (-8f64).exp()).abs() < 1e-12);
        assert_eq!(c.verdict, Outcome::Pass);
        let c = hoeffding_check(0.3, 50, 0.4, 1_000, 1, Execution::Parallel).unwrap();
        assert_eq!(c.estimate.mean, 0.0);
        let c = hoeffding_check(0.5, 1, 0.01, 1_000, 1, Execution::Parallel).unwrap();
        assert_eq!(c.verdict, Outcome::Pass);
        assert!(c.bound > 0.99);
        assert!(hoeffding_check(1.0, 1, 0.1, 100, 1, Execution::Parallel).is_err());
    }

    #[test]
    fn reports() {
        let e = Estimate::from_counts(0, 100, 0);
        let pass = BoundCheck::new("ok", Direction::AtMost, e, 0.5);
        let fail = BoundCheck::new("bad", Direction::AtLeast, e, 0.5);
        assert!(bound_report(vec![pass.clone()]).unwrap().success());
        let r = bound_report(vec![pass, fail]).unwrap();
        assert!(!r.success());
        assert_eq!(r.failures(), vec!["bad"]);
        assert!(bound_report(vec![]).is_err());
    }

    #[test]
    fn small_tail_experiment() {
        let s = sched("const:r=2,depth=6,N=2");
        let t = tail_bound_experiment(&s, -4, None, &Sampling::new(2_000, 4)).unwrap();
        assert_eq!(t.n0, -1);
        assert!(t.bound < 1.0);
        assert_ne!(t.check.verdict, Outcome::Fail);
    }

    #[test]
    fn mirror_pairs_never_separate_more() {
        let s = sched("const:r=2,depth=5,N=2");
        let c = inequality_chain(&s, -5, PairMode::Mirror, &Sampling::new(500, 2)).unwrap();
        // mirrored innovations pick the same position in both roots, so the
        // words at n0 differ at most as often as their parents
        assert!(c.disagreement.mean <= 1.0);
        assert!(c.checks.iter().all(|k| k.verdict != Outcome::Fail));
    }
}
