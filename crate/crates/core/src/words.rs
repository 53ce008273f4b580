//! Words over `{1..N}`, block views, canonical words and prefix extraction.
//!
//! Letters are 1-based. Most operations work on plain `&[u32]` slices so that
//! words nested inside a longer word are never copied.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<u32>,
    alphabet: u32,
}

impl Word {
    pub fn new(letters: Vec<u32>, alphabet: u32) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::OutOfRange {
                what: "alphabet size",
                value: alphabet.to_string(),
                range: ">= 2".into(),
            });
        }
        if letters.is_empty() {
            return Err(Error::Precondition("a word has at least one letter".into()));
        }
        if let Some((i, &l)) = letters.iter().enumerate().find(|(_, &l)| l == 0 || l > alphabet) {
            return Err(Error::OutOfRange {
                what: "letter",
                value: format!("{l} at position {}", i + 1),
                range: format!("1..={alphabet}"),
            });
        }
        Ok(Word { letters, alphabet })
    }

    /// Parses a digit string (`12312`) or, for any alphabet, a comma list
    /// (`1,12,3`).
    pub fn parse(text: &str, alphabet: u32) -> Result<Self> {
        let t = text.trim();
        let err = |reason: String| Error::WordParse { input: text.to_string(), reason };
        let letters: Vec<u32> = if t.contains(',') {
            t.split(',')
                .map(|p| p.trim().parse::<u32>().map_err(|_| err(format!("bad letter `{}`", p.trim()))))
                .collect::<Result<_>>()?
        } else {
            t.chars()
                .map(|c| c.to_digit(10).ok_or_else(|| err(format!("bad letter `{c}`"))))
                .collect::<Result<_>>()?
        };
        Word::new(letters, alphabet).map_err(|e| err(e.to_string()))
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<u32> {
        self.letters
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn blocks(&self, block_len: usize) -> Result<BlockView<'_>> {
        BlockView::new(&self.letters, block_len)
    }

    pub fn subword(&self, block_len: usize, index: usize) -> Result<Word> {
        Ok(Word {
            letters: subword(&self.letters, block_len, index)?.to_vec(),
            alphabet: self.alphabet,
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_literal(&self.letters, self.alphabet))
    }
}

/// Literal form: digits when `N ≤ 9`, otherwise comma separated.
pub fn to_literal(letters: &[u32], alphabet: u32) -> String {
    if alphabet <= 9 {
        letters.iter().map(|l| char::from_digit(*l, 10).unwrap_or('?')).collect()
    } else {
        letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// A word of length `ℓ·r` seen as `r` letters of `A^ℓ`.
#[derive(Clone, Copy, Debug)]
pub struct BlockView<'a> {
    base: &'a [u32],
    block_len: usize,
}

impl<'a> BlockView<'a> {
    pub fn new(base: &'a [u32], block_len: usize) -> Result<Self> {
        if block_len == 0 || base.len() % block_len != 0 {
            return Err(Error::Precondition(format!(
                "block length {block_len} does not divide word length {}",
                base.len()
            )));
        }
        Ok(BlockView { base, block_len })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn count(&self) -> usize {
        self.base.len() / self.block_len
    }

    /// Block `index`, 1-based.
    pub fn block(&self, index: usize) -> &'a [u32] {
        let start = (index - 1) * self.block_len;
        &self.base[start..start + self.block_len]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'a, u32> {
        self.base.chunks_exact(self.block_len)
    }
}

/// Letters `(v-1)ℓ+1 ..= vℓ` of `x`.
pub fn subword(x: &[u32], block_len: usize, index: usize) -> Result<&[u32]> {
    let view = BlockView::new(x, block_len)?;
    let r = view.count();
    if index == 0 || index > r {
        return Err(Error::OutOfRange {
            what: "block index",
            value: index.to_string(),
            range: format!("1..={r} (r = {r})"),
        });
    }
    Ok(view.block(index))
}

/// The word of length `r` whose `i`-th letter is `((i-1) mod M) + 1`.
pub fn canonical_word(alphabet: u32, len: usize) -> Result<Word> {
    if alphabet < 2 || len == 0 {
        return Err(Error::Precondition(format!(
            "canonical word needs M >= 2 and r >= 1, got M = {alphabet}, r = {len}"
        )));
    }
    Word::new(canonical_letters(alphabet as u64, len), alphabet)
}

/// Letters of the canonical word as `u32`; `M` may exceed `u32` range, in
/// which case the letters are just `1..=len`.
pub fn canonical_letters(alphabet: u64, len: usize) -> Vec<u32> {
    (0..len as u64).map(|i| (i % alphabet + 1) as u32).collect()
}

/// Letter `i` (1-based) of the canonical word over `M` letters.
#[inline]
pub fn canonical_letter(alphabet: u64, i: u64) -> u64 {
    (i - 1) % alphabet + 1
}

/// Number of letters in `A^λ`, if it fits in 64 bits.
pub fn block_alphabet(alphabet: u32, block_len: usize) -> Result<u64> {
    u32::try_from(block_len)
        .ok()
        .and_then(|l| (alphabet as u64).checked_pow(l))
        .ok_or_else(|| Error::EncodingWidth {
            required_bits: ((alphabet as f64).log2() * block_len as f64).ceil() as u64,
        })
}

/// Lexicographic rank plus one of a block in `A^λ`.
pub fn block_encode(block: &[u32], alphabet: u32) -> Result<u64> {
    block_alphabet(alphabet, block.len())?;
    let n = alphabet as u64;
    let mut code = 0u64;
    for &l in block {
        if l == 0 || l > alphabet {
            return Err(Error::OutOfRange {
                what: "letter",
                value: l.to_string(),
                range: format!("1..={alphabet}"),
            });
        }
        code = code * n + (l as u64 - 1);
    }
    Ok(code + 1)
}

/// Encodes without checks; the caller guarantees the width and letters.
#[inline]
pub(crate) fn encode_unchecked(block: &[u32], alphabet: u64) -> u64 {
    block.iter().fold(0u64, |acc, &l| acc * alphabet + (l as u64 - 1)) + 1
}

/// Inverse of [`block_encode`].
pub fn block_decode(code: u64, block_len: usize, alphabet: u32) -> Result<Vec<u32>> {
    let size = block_alphabet(alphabet, block_len)?;
    if code == 0 || code > size {
        return Err(Error::OutOfRange {
            what: "block code",
            value: code.to_string(),
            range: format!("1..={size}"),
        });
    }
    let mut out = vec![0u32; block_len];
    decode_into(code, alphabet as u64, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn decode_into(code: u64, alphabet: u64, out: &mut [u32]) {
    let mut rest = code - 1;
    for slot in out.iter_mut().rev() {
        *slot = (rest % alphabet) as u32 + 1;
        rest /= alphabet;
    }
}

/// Number of positions where `x` and `y` differ.
pub fn hamming(x: &[u32], y: &[u32]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    Ok(hamming_unchecked(x, y))
}

#[inline]
pub(crate) fn hamming_unchecked(x: &[u32], y: &[u32]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

/// Keeps the first `λ` letters of every `ℓ`-block.
pub fn tilde_extract(w: &[u32], block_len: usize, prefix: usize) -> Result<Vec<u32>> {
    let view = BlockView::new(w, block_len)?;
    if prefix == 0 || prefix > block_len {
        return Err(Error::OutOfRange {
            what: "prefix length",
            value: prefix.to_string(),
            range: format!("1..={block_len}"),
        });
    }
    Ok(view.iter().flat_map(|b| &b[..prefix]).copied().collect())
}

impl FromStr for Word {
    type Err = Error;

    /// Parses with the smallest alphabet containing every letter (at least 2).
    fn from_str(s: &str) -> Result<Self> {
        let probe = Word::parse(s, u32::MAX)?;
        let alphabet = probe.letters.iter().copied().max().unwrap_or(2).max(2);
        Word::new(probe.letters, alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn subword_examples() {
        let x = [1, 2, 3, 4];
        assert_eq!(subword(&x, 2, 2).unwrap(), &[3, 4]);
        assert_eq!(subword(&x, 4, 1).unwrap(), &x);
        let c = canonical_word(3, 11).unwrap();
        assert_eq!(subword(c.letters(), 1, 5).unwrap(), &[2]);
        let err = subword(&x, 2, 3).unwrap_err().to_string();
        assert!(err.contains("r = 2"), "{err}");
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_word(3, 11).unwrap().to_string(), "12312312312");
        assert_eq!(canonical_word(2, 1).unwrap().letters(), &[1]);
        assert_eq!(canonical_word(5, 3).unwrap().letters(), &[1, 2, 3]);
    }

    #[test]
    fn encoding_examples() {
        assert_eq!(block_encode(&[1, 1], 2).unwrap(), 1);
        assert_eq!(block_encode(&[2, 2], 2).unwrap(), 4);
        assert_eq!(block_encode(&[1, 2], 2).unwrap(), 2);
        assert!(block_decode(5, 2, 2).is_err());
        assert!(block_decode(0, 2, 2).is_err());
        assert!(block_encode(&[1; 65], 2).is_err());
        assert!(block_encode(&[2; 64], 2).is_err());
        assert_eq!(block_encode(&[2; 63], 2).unwrap(), 1 << 63);
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&[1, 2], &[1, 2]).unwrap(), 0);
        assert_eq!(hamming(&[1, 2], &[2, 1]).unwrap(), 2);
        assert!(hamming(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn tilde_examples() {
        let w = [1, 2, 3, 4, 5, 6];
        assert_eq!(tilde_extract(&w, 3, 2).unwrap(), vec![1, 2, 4, 5]);
        assert_eq!(tilde_extract(&w, 3, 3).unwrap(), w.to_vec());
        assert_eq!(tilde_extract(&[1, 2, 1, 2], 2, 1).unwrap(), vec![1, 1]);
        assert!(tilde_extract(&w, 3, 4).is_err());
    }

    #[test]
    fn literals() {
        let w: Word = "1231".parse().unwrap();
        assert_eq!(w.alphabet(), 3);
        let big = Word::parse("1,12,3", 12).unwrap();
        assert_eq!(big.to_string(), "1,12,3");
        assert!(Word::parse("1203", 3).is_err());
        assert!(Word::parse("14", 3).is_err());
    }

    fn word(max_alphabet: u32, max_len: usize) -> impl Strategy<Value = (u32, Vec<u32>)> {
        (2..=max_alphabet).prop_flat_map(move |n| (Just(n), prop::collection::vec(1..=n, 1..=max_len)))
    }

    proptest! {
        #[test]
        fn round_trip((n, w) in word(5, 8)) {
            let code = block_encode(&w, n).unwrap();
            prop_assert_eq!(block_decode(code, w.len(), n).unwrap(), w);
        }

        #[test]
        fn encoding_is_monotone((n, a) in word(4, 6), seed in any::<u64>()) {
            let mut b = a.clone();
            let i = (seed as usize) % b.len();
            b[i] = (seed >> 32) as u32 % n + 1;
            let (ea, eb) = (block_encode(&a, n).unwrap(), block_encode(&b, n).unwrap());
            prop_assert_eq!(a.cmp(&b), ea.cmp(&eb));
        }

        #[test]
        fn subwords_partition((_, w) in word(3, 12), block in 1usize..4) {
            let len = w.len() - w.len() % block;
            prop_assume!(len > 0);
            let x = &w[..len];
            let joined: Vec<u32> = (1..=len / block).flat_map(|v| subword(x, block, v).unwrap().to_vec()).collect();
            prop_assert_eq!(joined, x.to_vec());
        }

        #[test]
        fn hamming_is_a_metric(
            n in 2u32..4,
            seeds in prop::collection::vec(any::<u32>(), 30),
        ) {
            let pick = |k: usize| -> Vec<u32> { seeds[k * 10..k * 10 + 10].iter().map(|s| s % n + 1).collect() };
            let (x, y, z) = (pick(0), pick(1), pick(2));
            let d = |a: &[u32], b: &[u32]| hamming(a, b).unwrap();
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert_eq!(d(&x, &x), 0);
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
            prop_assert_eq!(d(&x, &y) == 0, x == y);
        }

        #[test]
        fn canonical_periods_are_ranges(m in 2u32..9, periods in 1usize..20) {
            let c = canonical_word(m, m as usize * periods).unwrap();
            for block in c.letters().chunks(m as usize) {
                prop_assert_eq!(block.to_vec(), (1..=m).collect::<Vec<_>>());
            }
        }

        #[test]
        fn tilde_keeps_aligned_canonical_blocks(m in 2u32..6, reps in 1usize..5, prefix in 1usize..4) {
            // blocks of length m that are each a full canonical period keep
            // their leading letters 1..λ
            let block = m as usize;
            prop_assume!(prefix <= block);
            let w = canonical_letters(m as u64, block * reps);
            let t = tilde_extract(&w, block, prefix).unwrap();
            for chunk in t.chunks(prefix) {
                prop_assert_eq!(chunk.to_vec(), (1..=prefix as u32).collect::<Vec<_>>());
            }
        }
    }
}
