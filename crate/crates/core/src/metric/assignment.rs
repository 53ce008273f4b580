//! Exact minimum-cost perfect matching on square integer matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Hungarian algorithm with potentials, `O(r³)`. `cost` is row-major.
/// Returns the column of each row, the optimal total and the row and column
/// potentials (`u_i + v_j ≤ cost_ij`, with equality on every optimal edge).
pub(crate) fn hungarian(cost: &[i128], r: usize) -> (Vec<usize>, i128, Vec<i128>, Vec<i128>) {
    debug_assert_eq!(cost.len(), r * r);
    const INF: i128 = i128::MAX / 4;
    let at = |i: usize, j: usize| cost[(i - 1) * r + (j - 1)];
    let mut u = vec![0i128; r + 1];
    let mut v = vec![0i128; r + 1];
    let mut p = vec![0usize; r + 1];
    let mut way = vec![0usize; r + 1];
    for i in 1..=r {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; r + 1];
        let mut used = vec![false; r + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=r {
                if !used[j] {
                    let cur = at(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=r {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; r];
    for j in 1..=r {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = (0..r).map(|i| cost[i * r + assign[i]]).sum();
    (assign, total, u[1..].to_vec(), v[1..].to_vec())
}

/// Kuhn augmenting path search restricted to allowed edges.
fn augment(row: usize, allowed: &dyn Fn(usize, usize) -> bool, r: usize, seen: &mut [bool], col_owner: &mut [Option<usize>]) -> bool {
    for j in 0..r {
        if allowed(row, j) && !seen[j] {
            seen[j] = true;
            if col_owner[j].is_none_or(|other| augment(other, allowed, r, seen, col_owner)) {
                col_owner[j] = Some(row);
                return true;
            }
        }
    }
    false
}

fn has_perfect_matching(rows: &[usize], allowed: &dyn Fn(usize, usize) -> bool, r: usize) -> bool {
    let mut owner = vec![None; r];
    rows.iter().all(|&i| {
        let mut seen = vec![false; r];
        augment(i, allowed, r, &mut seen, &mut owner)
    })
}

/// Optimal assignment that is lexicographically smallest among all optimal
/// ones (0-based columns).
pub(crate) fn assignment_lex_min_int(cost: &[i128], r: usize) -> (Vec<usize>, i128) {
    if r == 0 {
        return (Vec::new(), 0);
    }
    let (_, total, u, v) = hungarian(cost, r);
    // every optimal assignment uses only tight edges of an optimal dual
    let tight = |i: usize, j: usize| cost[i * r + j] == u[i] + v[j];
    let mut chosen: Vec<usize> = Vec::with_capacity(r);
    let mut taken = vec![false; r];
    for i in 0..r {
        let rest: Vec<usize> = (i + 1..r).collect();
        let mut picked = None;
        for j in 0..r {
            if taken[j] || !tight(i, j) {
                continue;
            }
            taken[j] = true;
            let allowed = |a: usize, b: usize| !taken[b] && tight(a, b);
            if has_perfect_matching(&rest, &allowed, r) {
                picked = Some(j);
                break;
            }
            taken[j] = false;
        }
        chosen.push(picked.expect("tight graph of an optimal dual has a perfect matching"));
    }
    (chosen, total)
}

/// Minimum total only, with fast paths for tiny degrees.
pub(crate) fn assignment_value(cost: &[u64], r: usize) -> u64 {
    match r {
        1 => cost[0],
        2 => (cost[0] + cost[3]).min(cost[1] + cost[2]),
        3 => {
            let c = |i: usize, j: usize| cost[i * 3 + j];
            [
                c(0, 0) + c(1, 1) + c(2, 2),
                c(0, 0) + c(1, 2) + c(2, 1),
                c(0, 1) + c(1, 0) + c(2, 2),
                c(0, 1) + c(1, 2) + c(2, 0),
                c(0, 2) + c(1, 0) + c(2, 1),
                c(0, 2) + c(1, 1) + c(2, 0),
            ]
            .into_iter()
            .min()
            .unwrap()
        }
        _ => {
            let wide: Vec<i128> = cost.iter().map(|&c| c as i128).collect();
            hungarian(&wide, r).1 as u64
        }
    }
}

/// Minimum-cost assignment over a square matrix of nonnegative rationals.
/// Returns the lexicographically smallest optimal `σ` (1-based) and the
/// exact total.
pub fn assignment_min(cost: &[Vec<BigRational>]) -> Result<(Vec<usize>, BigRational)> {
    let r = cost.len();
    if let Some(row) = cost.iter().find(|row| row.len() != r) {
        return Err(Error::LengthMismatch { left: r, right: row.len() });
    }
    if cost.iter().flatten().any(|c| c < &BigRational::zero()) {
        return Err(Error::Precondition("assignment costs must be nonnegative".into()));
    }
    let den = cost
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut flat = Vec::with_capacity(r * r);
    for c in cost.iter().flatten() {
        let scaled = c.numer() * (&den / c.denom());
        let v = scaled
            .to_i128()
            .filter(|v| *v < i128::MAX / (4 * r.max(1) as i128))
            .ok_or_else(|| Error::OutOfRange {
                what: "scaled assignment cost",
                value: scaled.to_string(),
                range: "fits in 120 bits".into(),
            })?;
        flat.push(v);
    }
    let (cols, total) = assignment_lex_min_int(&flat, r);
    let sigma = cols.into_iter().map(|j| j + 1).collect();
    Ok((sigma, BigRational::new(BigInt::from(total), den)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(r: usize) -> Vec<Vec<usize>> {
        if r == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(r - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, r - 1);
                out.push(q);
            }
        }
        out.sort();
        out
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn identity_dominant() {
        let m: Vec<Vec<BigRational>> =
            (0..4).map(|i| (0..4).map(|j| if i == j { rat(0, 1) } else { rat(1, 1) }).collect()).collect();
        let (s, t) = assignment_min(&m).unwrap();
        assert_eq!(s, vec![1, 2, 3, 4]);
        assert!(t.is_zero());
    }

    #[test]
    fn constant_matrix_ties() {
        let m = vec![vec![rat(2, 3); 3]; 3];
        let (s, t) = assignment_min(&m).unwrap();
        assert_eq!(s, vec![1, 2, 3]);
        assert_eq!(t, rat(2, 1));
    }

    #[test]
    fn matches_brute_force_on_random_rationals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let perms = permutations(5);
        for _ in 0..300 {
            let m: Vec<Vec<BigRational>> = (0..5)
                .map(|_| (0..5).map(|_| rat(rng.random_range(0..6), rng.random_range(1..5))).collect())
                .collect();
            let (s, t) = assignment_min(&m).unwrap();
            let value = |p: &[usize]| -> BigRational { p.iter().enumerate().map(|(i, &j)| m[i][j].clone()).sum() };
            let best = perms.iter().map(|p| value(p)).min().unwrap();
            assert_eq!(t, best);
            let lex = perms.iter().find(|p| value(p) == best).unwrap();
            let s0: Vec<usize> = s.iter().map(|j| j - 1).collect();
            assert_eq!(&s0, lex);
        }
    }

    #[test]
    fn value_fast_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in 1..7 {
            for _ in 0..50 {
                let m: Vec<u64> = (0..r * r).map(|_| rng.random_range(0..20)).collect();
                let wide: Vec<i128> = m.iter().map(|&c| c as i128).collect();
                assert_eq!(assignment_value(&m, r) as i128, hungarian(&wide, r).1);
            }
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(assignment_min(&[vec![rat(1, 1)], vec![rat(1, 1)]]).is_err());
        assert!(assignment_min(&[vec![rat(-1, 1)]]).is_err());
    }
}
