//! Canonical class assignments and their enumeration.
//!
//! A labeling is packed into a single `u64` with vertex 0 in the most
//! significant of the `n` used bits, so the numeric order of the packed word
//! is the lexicographic order of the bit sequence.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest vertex count representable by a packed labeling or graph row.
pub const MAX_VERTICES: usize = 64;

/// Default upper limit on `n` for exhaustive enumeration of `Θ_n`.
pub const DEFAULT_ENUMERATION_CAP: usize = 22;

/// Hard ceiling on the enumeration cap; `2^n` words are scanned.
pub const MAX_ENUMERATION_CAP: usize = 40;

#[inline]
pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Bit holding vertex `i` in an `n`-vertex packed word.
#[inline]
pub(crate) fn vertex_bit(n: usize, i: usize) -> u64 {
    1u64 << (n - 1 - i)
}

#[inline]
pub(crate) fn is_canonical_word(n: usize, word: u64) -> bool {
    let m = word.count_ones() as usize;
    if 2 * m < n {
        true
    } else if 2 * m == n {
        word & vertex_bit(n, 0) == 0
    } else {
        false
    }
}

#[inline]
pub(crate) fn canonical_word(n: usize, word: u64) -> u64 {
    if is_canonical_word(n, word) {
        word
    } else {
        !word & full_mask(n)
    }
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VERTICES {
        Err(Error::UnsupportedSize { n, max: MAX_VERTICES })
    } else {
        Ok(())
    }
}

/// A class assignment `θ ∈ Θ_n` in canonical form: label 1 marks the
/// smaller class and, when both classes have `n/2` vertices, vertex 0
/// carries label 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelVector {
    n: usize,
    word: u64,
}

impl LabelVector {
    /// Canonicalizes a packed raw word (vertex 0 in the high bit).
    pub fn from_raw_word(n: usize, word: u64) -> Result<Self> {
        check_size(n)?;
        let word = word & full_mask(n);
        Ok(Self {
            n,
            word: canonical_word(n, word),
        })
    }

    /// Wraps a word already known to be canonical.
    pub(crate) fn from_canonical_word(n: usize, word: u64) -> Self {
        debug_assert!(is_canonical_word(n, word));
        Self { n, word }
    }

    /// The labeling with vertices `n-m..n` in the smaller class.
    pub fn planted(n: usize, m: usize) -> Result<Self> {
        check_size(n)?;
        if 2 * m > n {
            return Err(Error::InvalidLabeling(format!(
                "class size {m} exceeds floor(n/2) for n = {n}"
            )));
        }
        Self::from_raw_word(n, full_mask(m))
    }

    /// The all-zero labeling (the Erdős–Rényi point `Θ_{n,0}`).
    pub fn zeros(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self { n, word: 0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    /// Size of the smaller class.
    pub fn class_size(&self) -> usize {
        self.word.count_ones() as usize
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.n, "vertex {i} out of range for n = {}", self.n);
        self.word & vertex_bit(self.n, i) != 0
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i)).collect()
    }

    /// Packed componentwise complement. Never canonical, so it is returned
    /// as a bare word.
    pub fn complement_word(&self) -> u64 {
        !self.word & full_mask(self.n)
    }

    pub fn hamming(&self, other: &LabelVector) -> Result<usize> {
        same_n(self.n, other.n)?;
        Ok((self.word ^ other.word).count_ones() as usize)
    }

    /// `min(k, n - k)` with `k` the Hamming distance.
    pub fn sym_distance(&self, other: &LabelVector) -> Result<usize> {
        let k = self.hamming(other)?;
        Ok(k.min(self.n - k))
    }
}

pub(crate) fn same_n(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

/// Returns `raw` if it is already canonical, its complement otherwise.
pub fn canonicalize(raw: &[bool]) -> Result<LabelVector> {
    let n = raw.len();
    check_size(n)?;
    let word = raw
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
    LabelVector::from_raw_word(n, word)
}

pub fn hamming(theta: &LabelVector, eta: &LabelVector) -> Result<usize> {
    theta.hamming(eta)
}

pub fn sym_distance(theta: &LabelVector, eta: &LabelVector) -> Result<usize> {
    theta.sym_distance(eta)
}

/// Hamming distance between two raw (not necessarily canonical) bit vectors.
pub fn hamming_bits(a: &[bool], b: &[bool]) -> Result<usize> {
    same_n(a.len(), b.len())?;
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// `min(k, n - k)` on raw bit vectors; invariant under complementing either side.
pub fn sym_distance_bits(a: &[bool], b: &[bool]) -> Result<usize> {
    let k = hamming_bits(a, b)?;
    Ok(k.min(a.len() - k))
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LabelVector({self})")
    }
}

/// Parses the `'0'/'1'` text format. The string must already be canonical.
impl FromStr for LabelVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut raw = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => raw.push(false),
                '1' => raw.push(true),
                other => {
                    return Err(Error::InvalidLabeling(format!(
                        "unexpected character {other:?} in {s:?}"
                    )))
                }
            }
        }
        let label = canonicalize(&raw)?;
        if label.bits() != raw {
            return Err(Error::InvalidLabeling(format!(
                "{s:?} is not canonical (expected {label})"
            )));
        }
        Ok(label)
    }
}

/// Lexicographically ordered stream over `Θ_n`, optionally restricted to a
/// single class size.
#[derive(Clone, Debug)]
pub struct Labelings {
    n: usize,
    next: u64,
    end: u64,
    class_size: Option<usize>,
}

impl Iterator for Labelings {
    type Item = LabelVector;

    fn next(&mut self) -> Option<LabelVector> {
        while self.next < self.end {
            let w = self.next;
            self.next += 1;
            if !is_canonical_word(self.n, w) {
                continue;
            }
            if let Some(m) = self.class_size {
                if w.count_ones() as usize != m {
                    continue;
                }
            }
            return Some(LabelVector::from_canonical_word(self.n, w));
        }
        None
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    check_size(n)?;
    let cap = cap.min(MAX_ENUMERATION_CAP);
    if n > cap {
        Err(Error::EnumerationCap { n, cap })
    } else {
        Ok(())
    }
}

/// All of `Θ_n` in lexicographic order, subject to the default cap.
pub fn enumerate_labelings(n: usize) -> Result<Labelings> {
    enumerate_labelings_with_cap(n, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_labelings_with_cap(n: usize, cap: usize) -> Result<Labelings> {
    check_cap(n, cap)?;
    Ok(Labelings {
        n,
        next: 0,
        end: 1u64 << n,
        class_size: None,
    })
}

/// `Θ_{n,m}` in lexicographic order.
pub fn enumerate_class(n: usize, m: usize) -> Result<Labelings> {
    check_cap(n, DEFAULT_ENUMERATION_CAP)?;
    Ok(Labelings {
        n,
        next: 0,
        end: 1u64 << n,
        class_size: Some(m),
    })
}

/// `|Θ_n| = 2^(n-1)`.
pub fn labeling_count(n: usize) -> u64 {
    1u64 << (n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(s: &str) -> LabelVector {
        s.parse().unwrap()
    }

    fn raw(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&raw("1110")).unwrap().to_string(), "0001");
        assert_eq!(canonicalize(&raw("0011")).unwrap().to_string(), "0011");
        assert_eq!(canonicalize(&raw("1001")).unwrap().to_string(), "0110");
        assert_eq!(canonicalize(&raw("1000")).unwrap().to_string(), "1000");
    }

    #[test]
    fn canonicalize_rejects_empty() {
        assert!(canonicalize(&[]).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let all: Vec<_> = enumerate_labelings(4).unwrap().collect();
        assert_eq!(all.len(), 8);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        let one: Vec<_> = enumerate_labelings(1).unwrap().collect();
        assert_eq!(one, vec![lv("0")]);
        let tie: Vec<String> = enumerate_class(4, 2).unwrap().map(|l| l.to_string()).collect();
        assert_eq!(tie, vec!["0011", "0101", "0110"]);
    }

    #[test]
    fn enumeration_respects_cap() {
        assert!(matches!(
            enumerate_labelings(23),
            Err(Error::EnumerationCap { n: 23, cap: 22 })
        ));
        assert!(enumerate_labelings_with_cap(23, 23).is_ok());
    }

    #[test]
    fn distances() {
        let a = lv("00011");
        let b = lv("00101");
        assert_eq!(hamming(&a, &b).unwrap(), 2);
        assert_eq!(sym_distance(&a, &b).unwrap(), 2);
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        let z = lv("0000");
        let c = LabelVector::from_raw_word(4, 0b0111).unwrap();
        assert_eq!(c.to_string(), "1000");
        // raw η = 0111 canonicalizes to 1000; compare on the raw form too
        assert_eq!(hamming(&z, &c).unwrap(), 1);
        assert_eq!(hamming_bits(&raw("0000"), &raw("0111")).unwrap(), 3);
        assert_eq!(sym_distance_bits(&raw("0000"), &raw("0111")).unwrap(), 1);
        assert!(matches!(
            hamming(&a, &z),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parse_rejects_non_canonical() {
        assert!("1110".parse::<LabelVector>().is_err());
        assert!("1001".parse::<LabelVector>().is_err());
        assert!("01x".parse::<LabelVector>().is_err());
    }

    #[test]
    fn planted_is_canonical() {
        assert_eq!(LabelVector::planted(10, 5).unwrap().to_string(), "0000011111");
        assert_eq!(LabelVector::planted(7, 0).unwrap().to_string(), "0000000");
        assert!(LabelVector::planted(7, 4).is_err());
    }
}
