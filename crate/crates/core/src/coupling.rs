//! Canonical coupling permutations and the change of innovations.
//!
//! For a word `w` of `r` letters in `{1..M}`, the canonical coupling sends
//! position `i` to `w(i) + H(w,i)·M` whenever that is at most `r`, where
//! `H(w,i)` counts earlier occurrences of `w(i)`. The remaining positions, in
//! increasing order, take the smallest values not yet used. Under this
//! permutation `w` agrees with the canonical word `c` exactly where the first
//! rule applied.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::Path;
use crate::words::{block_alphabet, canonical_letter, encode_unchecked, BlockView};

/// A permutation of `{1..r}` stored 1-based, with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl Coupling {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let r = perm.len();
        let mut inv = vec![0usize; r];
        for (i, &p) in perm.iter().enumerate() {
            if p == 0 || p > r || inv[p - 1] != 0 {
                return Err(Error::Precondition(format!("{perm:?} is not a permutation of 1..={r}")));
            }
            inv[p - 1] = i + 1;
        }
        Ok(Coupling { perm, inv })
    }

    pub fn identity(r: usize) -> Self {
        let perm: Vec<usize> = (1..=r).collect();
        Coupling { inv: perm.clone(), perm }
    }

    pub fn degree(&self) -> usize {
        self.perm.len()
    }

    /// `φ(i)`, 1-based.
    pub fn apply(&self, i: usize) -> usize {
        self.perm[i - 1]
    }

    /// `φ^{-1}(v)`, 1-based.
    pub fn apply_inverse(&self, v: usize) -> usize {
        self.inv[v - 1]
    }

    pub fn inverse(&self) -> Coupling {
        Coupling { perm: self.inv.clone(), inv: self.perm.clone() }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| p == i + 1)
    }
}

/// `H(w,i)`: occurrences of `w(i)` strictly before position `i` (1-based).
pub fn h_count(w: &[u64], i: usize) -> usize {
    let letter = w[i - 1];
    w[..i - 1].iter().filter(|&&x| x == letter).count()
}

/// Reusable buffers for building couplings in hot loops.
#[derive(Default)]
pub struct CouplingScratch {
    counts: Vec<u64>,
    used: Vec<bool>,
    perm: Vec<usize>,
    matched: Vec<bool>,
}

impl CouplingScratch {
    /// Builds the canonical coupling of `w` (letters in `1..=M`) into the
    /// scratch buffers and returns the permutation and, per position,
    /// whether the direct rule applied.
    pub fn build(&mut self, w: &[u64], alphabet: u64) -> (&[usize], &[bool]) {
        let r = w.len();
        let tracked = (alphabet.min(r as u64)) as usize;
        self.counts.clear();
        self.counts.resize(tracked + 1, 0);
        self.used.clear();
        self.used.resize(r + 1, false);
        self.perm.clear();
        self.perm.resize(r, 0);
        self.matched.clear();
        self.matched.resize(r, false);
        for (i, &letter) in w.iter().enumerate() {
            // letters above r can never land at a value <= r
            if letter as usize <= tracked && letter <= r as u64 {
                let h = self.counts[letter as usize];
                self.counts[letter as usize] += 1;
                let target = letter as u128 + h as u128 * alphabet as u128;
                if target <= r as u128 {
                    let t = target as usize;
                    self.perm[i] = t;
                    self.used[t] = true;
                    self.matched[i] = true;
                }
            }
        }
        let mut next = 1usize;
        for slot in self.perm.iter_mut() {
            if *slot == 0 {
                while self.used[next] {
                    next += 1;
                }
                *slot = next;
                self.used[next] = true;
            }
        }
        (&self.perm, &self.matched)
    }
}

fn check_letters(w: &[u64], alphabet: u64) -> Result<()> {
    if alphabet < 2 {
        return Err(Error::OutOfRange { what: "alphabet size", value: alphabet.to_string(), range: ">= 2".into() });
    }
    if let Some((i, &l)) = w.iter().enumerate().find(|(_, &l)| l == 0 || l > alphabet) {
        return Err(Error::OutOfRange {
            what: "block letter",
            value: format!("{l} at position {}", i + 1),
            range: format!("1..={alphabet}"),
        });
    }
    Ok(())
}

/// The canonical coupling `φ_w` of a word of block letters in `1..=M`.
pub fn canonical_coupling(w: &[u64], alphabet: u64) -> Result<Coupling> {
    check_letters(w, alphabet)?;
    let mut scratch = CouplingScratch::default();
    let (perm, _) = scratch.build(w, alphabet);
    let perm = perm.to_vec();
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p - 1] = i + 1;
    }
    Ok(Coupling { perm, inv })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Lemma12 {
    /// `c(φ_w(i)) = w(i)`.
    pub canonical_matches: bool,
    /// `w(i) + H(w,i)·M ≤ r`.
    pub formula_holds: bool,
}

/// Both sides of the equivalence at every position.
pub fn lemma12_all(w: &[u64], alphabet: u64) -> Result<Vec<Lemma12>> {
    check_letters(w, alphabet)?;
    let r = w.len() as u128;
    let mut scratch = CouplingScratch::default();
    let (perm, _) = scratch.build(w, alphabet);
    let mut seen = std::collections::HashMap::<u64, u64>::new();
    Ok(w.iter()
        .zip(perm)
        .map(|(&letter, &p)| {
            let h = seen.entry(letter).or_insert(0);
            let formula_holds = letter as u128 + *h as u128 * alphabet as u128 <= r;
            *h += 1;
            Lemma12 { canonical_matches: canonical_letter(alphabet, p as u64) == letter, formula_holds }
        })
        .collect())
}

/// Both sides of the equivalence at position `i` (1-based).
pub fn lemma12_predicate(w: &[u64], i: usize, alphabet: u64) -> Result<Lemma12> {
    if i == 0 || i > w.len() {
        return Err(Error::OutOfRange { what: "position", value: i.to_string(), range: format!("1..={}", w.len()) });
    }
    Ok(lemma12_all(w, alphabet)?[i - 1])
}

/// Encodes the `λ`-prefixes of the `ℓ`-blocks of `w` as block letters.
pub fn prefix_codes(w: &[u32], alphabet: u32, block_len: usize, prefix: usize) -> Result<(Vec<u64>, u64)> {
    let view = BlockView::new(w, block_len)?;
    if prefix == 0 || prefix > block_len {
        return Err(Error::OutOfRange {
            what: "prefix length",
            value: prefix.to_string(),
            range: format!("1..={block_len}"),
        });
    }
    let size = block_alphabet(alphabet, prefix)?;
    Ok((view.iter().map(|b| encode_unchecked(&b[..prefix], alphabet as u64)).collect(), size))
}

/// The partial canonical coupling of rate `λ/ℓ`: the canonical coupling of
/// the `λ`-prefixes of the `ℓ`-blocks, over the alphabet `A^λ`.
pub fn partial_canonical_coupling(w: &[u32], alphabet: u32, block_len: usize, prefix: usize) -> Result<Coupling> {
    let (codes, size) = prefix_codes(w, alphabet, block_len, prefix)?;
    canonical_coupling(&codes, size)
}

/// `M/r + 2 (M/r)^{1/3}`: bound on the probability that a uniform position
/// of a uniform word misses the canonical word under the coupling.
pub fn lemma13_bound(alphabet: f64, r: f64) -> f64 {
    let q = alphabet / r;
    q + 2.0 * q.cbrt()
}

/// How the innovation at one time is re-drawn from the previous word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CouplingKind {
    Identity,
    /// Canonical coupling of `X_{t-1}` over `A^{ℓ_t}`.
    Full,
    /// Partial coupling keeping `prefix` letters of each block.
    Partial { prefix: usize },
}

/// A map from times to permutations of `1..=r_t` computed from `X_{t-1}`.
pub trait InnovationRule {
    /// `None` means the identity.
    fn coupling(&self, time: i64, previous: &[u32], block_len: usize, alphabet: u32) -> Result<Option<Coupling>>;
}

/// Fixed coupling kind per time; unlisted times use the identity.
#[derive(Clone, Debug, Default)]
pub struct PlanRule {
    kinds: std::collections::BTreeMap<i64, CouplingKind>,
}

impl PlanRule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, time: i64, kind: CouplingKind) -> Self {
        self.kinds.insert(time, kind);
        self
    }

    pub fn kind(&self, time: i64) -> CouplingKind {
        self.kinds.get(&time).copied().unwrap_or(CouplingKind::Identity)
    }
}

impl InnovationRule for PlanRule {
    fn coupling(&self, time: i64, previous: &[u32], block_len: usize, alphabet: u32) -> Result<Option<Coupling>> {
        match self.kind(time) {
            CouplingKind::Identity => Ok(None),
            CouplingKind::Full => partial_canonical_coupling(previous, alphabet, block_len, block_len).map(Some),
            CouplingKind::Partial { prefix } => {
                partial_canonical_coupling(previous, alphabet, block_len, prefix).map(Some)
            }
        }
    }
}

impl<F> InnovationRule for F
where
    F: Fn(i64, &[u32]) -> Result<Option<Coupling>>,
{
    fn coupling(&self, time: i64, previous: &[u32], _block_len: usize, _alphabet: u32) -> Result<Option<Coupling>> {
        self(time, previous)
    }
}

fn rule_at(path: &Path, rule: &dyn InnovationRule, time: i64) -> Result<Option<Coupling>> {
    let coupling = rule.coupling(time, path.word(time - 1), path.block_len(time), path.alphabet())?;
    if let Some(c) = &coupling {
        let r = path.ratio(time);
        if c.degree() != r {
            return Err(Error::DegreeMismatch { time, expected: r, got: c.degree() });
        }
    }
    Ok(coupling)
}

/// `V'_t = rule(t)(X_{t-1})(V_t)` for `t = m+1..=0`, earliest first.
pub fn change_innovations(path: &Path, rule: &dyn InnovationRule) -> Result<Vec<usize>> {
    path.ratio_times()
        .map(|t| {
            let v = path.innovation(t);
            Ok(rule_at(path, rule, t)?.map_or(v, |c| c.apply(v)))
        })
        .collect()
}

/// Inverse direction: `V_t = rule(t)(X_{t-1})^{-1}(V'_t)`.
pub fn restore_innovations(path: &Path, changed: &[usize], rule: &dyn InnovationRule) -> Result<Vec<usize>> {
    let times: Vec<i64> = path.ratio_times().collect();
    if times.len() != changed.len() {
        return Err(Error::LengthMismatch { left: times.len(), right: changed.len() });
    }
    times
        .iter()
        .zip(changed)
        .map(|(&t, &v)| Ok(rule_at(path, rule, t)?.map_or(v, |c| c.apply_inverse(v))))
        .collect()
}
