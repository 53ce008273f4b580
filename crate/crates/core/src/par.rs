//! Sample-parallel loops with a sequential fallback.
//!
//! Every reduction here is over integers, so totals are identical whatever
//! the thread count or the execution mode.

/// How sample loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise
    /// behaves exactly like `Sequential`.
    #[default]
    Parallel,
}

/// Generic fold/reduce over `0..n` with an associative, commutative `combine`.
pub(crate) fn try_fold<T, E, I, C, F>(
    exec: Execution,
    n: u64,
    identity: I,
    combine: C,
    f: F,
) -> Result<T, E>
where
    T: Send,
    E: Send,
    I: Fn() -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            let out = (0..n)
                .into_par_iter()
                .map(|i| f(i).map_err(|e| (i, e)))
                .try_fold(&identity, |acc, r| r.map(|x| combine(acc, x)))
                .try_reduce(&identity, |a, b| Ok(combine(a, b)));
            match out {
                Ok(v) => Ok(v),
                // rayon short-circuits on the first error it sees, which may not
                // be the smallest index; rerun sequentially to report that one.
                Err(_) => sequential(n, identity, combine, f),
            }
        }
        _ => sequential(n, identity, combine, f),
    }
}

fn sequential<T, E, I, C, F>(n: u64, identity: I, combine: C, f: F) -> Result<T, E>
where
    I: Fn() -> T,
    C: Fn(T, T) -> T,
    F: Fn(u64) -> Result<T, E>,
{
    let mut acc = identity();
    for i in 0..n {
        acc = combine(acc, f(i)?);
    }
    Ok(acc)
}

/// Maps `f` over `0..n` into a vector, in index order.
pub(crate) fn map_collect<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
