//! Adapted tree automorphisms: a permutation of the top blocks together with
//! one automorphism per block, down to the base blocks, which move intact.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::Shape;
use crate::error::{Error, Result};

/// Default limit on the number of automorphisms `enumerate_aut` will list.
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AutNode {
    /// 1-based permutation of the child blocks; empty at a leaf.
    sigma: Vec<usize>,
    children: Vec<AutNode>,
}

impl AutNode {
    pub fn leaf() -> Self {
        AutNode { sigma: Vec::new(), children: Vec::new() }
    }

    pub fn new(sigma: Vec<usize>, children: Vec<AutNode>) -> Result<Self> {
        if sigma.len() != children.len() {
            return Err(Error::LengthMismatch { left: sigma.len(), right: children.len() });
        }
        let mut seen = vec![false; sigma.len()];
        for &s in &sigma {
            if s == 0 || s > sigma.len() || std::mem::replace(&mut seen[s - 1], true) {
                return Err(Error::Precondition(format!("{sigma:?} is not a permutation")));
            }
        }
        Ok(AutNode { sigma, children })
    }

    pub fn identity(shape: &Shape) -> Self {
        Self::identity_from(shape.ratios())
    }

    fn identity_from(ratios: &[usize]) -> Self {
        match ratios.split_first() {
            None => Self::leaf(),
            Some((&r, rest)) => {
                let child = Self::identity_from(rest);
                AutNode { sigma: (1..=r).collect(), children: vec![child; r] }
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn children(&self) -> &[AutNode] {
        &self.children
    }

    /// `self ∘ other`, acting as `other` first.
    pub fn compose(&self, other: &AutNode) -> AutNode {
        if self.is_leaf() {
            return other.clone();
        }
        let sigma = other.sigma.iter().map(|&j| self.sigma[j - 1]).collect();
        let children = other
            .sigma
            .iter()
            .zip(&other.children)
            .map(|(&j, b)| self.children[j - 1].compose(b))
            .collect();
        AutNode { sigma, children }
    }

    pub fn inverse(&self) -> AutNode {
        if self.is_leaf() {
            return self.clone();
        }
        let r = self.sigma.len();
        let mut sigma = vec![0; r];
        let mut children = vec![AutNode::leaf(); r];
        for (j, &s) in self.sigma.iter().enumerate() {
            sigma[s - 1] = j + 1;
            children[s - 1] = self.children[j].inverse();
        }
        AutNode { sigma, children }
    }

    pub fn check_shape(&self, shape: &Shape) -> Result<()> {
        self.check_from(shape.ratios())
    }

    fn check_from(&self, ratios: &[usize]) -> Result<()> {
        match ratios.split_first() {
            None if self.is_leaf() => Ok(()),
            None => Err(Error::Precondition("automorphism is deeper than the shape".into())),
            Some((&r, rest)) => {
                if self.sigma.len() != r {
                    return Err(Error::Precondition(format!(
                        "automorphism has degree {} where the shape has ratio {r}",
                        self.sigma.len()
                    )));
                }
                self.children.iter().try_for_each(|c| c.check_from(rest))
            }
        }
    }

    /// The position map `p ↦ a(p)` on `1..=ℓ_n`.
    pub fn position_map(&self, shape: &Shape) -> Vec<usize> {
        let mut out = vec![0; shape.length()];
        self.fill_positions(shape, 0, 0, &mut out);
        out
    }

    fn fill_positions(&self, shape: &Shape, level: usize, offset: usize, out: &mut [usize]) {
        if self.is_leaf() {
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = offset + k + 1;
            }
            return;
        }
        let child_len = shape.level_len(level + 1);
        for (j, (&s, child)) in self.sigma.iter().zip(&self.children).enumerate() {
            let chunk = &mut out[j * child_len..(j + 1) * child_len];
            child.fill_positions(shape, level + 1, offset + (s - 1) * child_len, chunk);
        }
    }

    fn apply_into(&self, shape: &Shape, level: usize, x: &[u32], out: &mut [u32]) {
        if self.is_leaf() {
            out.copy_from_slice(x);
            return;
        }
        let child_len = shape.level_len(level + 1);
        for (j, (&s, child)) in self.sigma.iter().zip(&self.children).enumerate() {
            let src = &x[j * child_len..(j + 1) * child_len];
            let dst = &mut out[(s - 1) * child_len..s * child_len];
            child.apply_into(shape, level + 1, src, dst);
        }
    }
}

/// `a · x = x ∘ a⁻¹`: block `σ(j)` of the result is `a_j · w_j`.
pub fn apply_aut(a: &AutNode, x: &[u32], shape: &Shape) -> Result<Vec<u32>> {
    a.check_shape(shape)?;
    if x.len() != shape.length() {
        return Err(Error::LengthMismatch { left: x.len(), right: shape.length() });
    }
    let mut out = vec![0; x.len()];
    a.apply_into(shape, 0, x, &mut out);
    Ok(out)
}

/// `Π_d (r_d!)^(number of blocks at level d)`, exactly.
pub fn aut_count_shape(shape: &Shape) -> BigUint {
    let mut count = BigUint::from(1u32);
    let mut blocks = 1usize;
    for &r in shape.ratios() {
        let fact: BigUint = (2..=r as u64).product();
        count *= fact.pow(blocks as u32);
        blocks *= r;
    }
    count
}

/// Every automorphism of the shape, in a fixed order.
pub fn enumerate_aut(shape: &Shape, cap: usize) -> Result<Vec<AutNode>> {
    // estimate the size before building anything
    let mut log2 = 0.0f64;
    let mut blocks = 1.0f64;
    for &r in shape.ratios() {
        log2 += blocks * (2..=r).map(|k| (k as f64).log2()).sum::<f64>();
        blocks *= r as f64;
    }
    if log2 > 64.0 {
        return Err(Error::ComputeCap { size: format!("~2^{log2:.1}"), cap });
    }
    let count = aut_count_shape(shape);
    if count.to_usize().is_none_or(|c| c > cap) {
        return Err(Error::ComputeCap { size: count.to_string(), cap });
    }
    let out = enumerate_from(shape.ratios());
    debug_assert_eq!(BigUint::from(out.len()), count);
    Ok(out)
}

fn enumerate_from(ratios: &[usize]) -> Vec<AutNode> {
    let Some((&r, rest)) = ratios.split_first() else {
        return vec![AutNode::leaf()];
    };
    let below = enumerate_from(rest);
    let mut out = Vec::new();
    for sigma in permutations(r) {
        // odometer over r-tuples of child automorphisms
        let mut digits = vec![0usize; r];
        loop {
            let children = digits.iter().map(|&d| below[d].clone()).collect();
            out.push(AutNode { sigma: sigma.clone(), children });
            let mut pos = r;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < below.len() {
                    break;
                }
                digits[pos] = 0;
            }
            if digits.iter().all(|&d| d == 0) {
                break;
            }
        }
    }
    out
}

/// All permutations of `1..=r` in lexicographic order.
pub(crate) fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (1..=r).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}
