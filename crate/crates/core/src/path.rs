//! Finite histories, eventually-periodic infinite paths and cylinder relations.
//!
//! A [`History`] is a finite outcome string `s_t`. A [`PathSpec`] is an
//! infinite outcome sequence of the form `prefix · period^∞`, kept in a
//! canonical form so that structural equality coincides with equality of the
//! infinite sequences.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Errors produced when parsing histories and paths from their text forms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("invalid bit {0:?}: expected '0' or '1'")]
    InvalidBit(char),
    #[error("path {0:?} is missing the '|' separating prefix and period")]
    MissingSeparator(String),
    #[error("path period must be nonempty")]
    EmptyPeriod,
}

fn parse_bits(s: &str) -> Result<Vec<u8>, PathError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(PathError::InvalidBit(other)),
        })
        .collect()
}

/// A finite outcome history. Bits are stored one per byte as `0` or `1`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History {
    bits: Vec<u8>,
}

impl History {
    pub fn empty() -> Self {
        Self { bits: Vec::new() }
    }

    /// Builds a history from bits; any nonzero byte is read as `1`.
    pub fn from_bits(bits: &[u8]) -> Self {
        Self {
            bits: bits.iter().map(|&b| u8::from(b != 0)).collect(),
        }
    }

    /// The `len` low bits of `value`, most significant first.
    pub fn from_index(value: u64, len: usize) -> Self {
        let bits = (0..len)
            .map(|j| ((value >> (len - 1 - j)) & 1) as u8)
            .collect();
        Self { bits }
    }

    /// The inverse of [`History::from_index`]; only meaningful for `len() <= 64`.
    pub fn to_index(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// All `2^len` histories of length `len` in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = History> {
        (0..(1u64 << len)).map(move |v| History::from_index(v, len))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The `t`-th outcome, counting from 1.
    pub fn bit(&self, t: usize) -> u8 {
        self.bits[t - 1]
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn push(&mut self, bit: u8) {
        self.bits.push(u8::from(bit != 0));
    }

    pub fn child(&self, bit: u8) -> History {
        let mut h = self.clone();
        h.push(bit);
        h
    }

    pub fn concat(&self, other: &History) -> History {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    /// The first `n` outcomes `h|n` (the whole history if shorter).
    pub fn truncate(&self, n: usize) -> History {
        Self {
            bits: self.bits[..n.min(self.bits.len())].to_vec(),
        }
    }

    /// True iff `self` extends `base`, i.e. `C(self) ⊆ C(base)`.
    pub fn extends(&self, base: &History) -> bool {
        self.bits.len() >= base.bits.len() && self.bits[..base.bits.len()] == base.bits[..]
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &History) -> usize {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "History(\"{self}\")")
    }
}

impl FromStr for History {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self {
            bits: parse_bits(s)?,
        })
    }
}

/// `extends(h, base)` as a free function.
pub fn extends(h: &History, base: &History) -> bool {
    h.extends(base)
}

/// The set of infinite extensions of a finite base.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cylinder {
    pub base: History,
}

impl Cylinder {
    pub fn new(base: History) -> Self {
        Self { base }
    }

    /// `C(self) ⊇ C(other)`.
    pub fn contains(&self, other: &Cylinder) -> bool {
        other.base.extends(&self.base)
    }

    /// Two cylinders are either nested or disjoint.
    pub fn is_disjoint(&self, other: &Cylinder) -> bool {
        !self.contains(other) && !other.contains(self)
    }
}

/// An eventually-periodic infinite path `prefix · period^∞` in canonical form.
///
/// Canonical form: the period is primitive (not a power of a shorter block)
/// and the prefix is as short as possible.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathSpec {
    prefix: Vec<u8>,
    period: Vec<u8>,
}

fn primitive_root(block: &[u8]) -> Vec<u8> {
    let n = block.len();
    for d in 1..=n {
        if n % d == 0 && (d..n).all(|j| block[j] == block[j - d]) {
            return block[..d].to_vec();
        }
    }
    block.to_vec()
}

impl PathSpec {
    /// Builds and canonicalizes `prefix · period^∞`.
    pub fn new(prefix: &[u8], period: &[u8]) -> Result<Self, PathError> {
        if period.is_empty() {
            return Err(PathError::EmptyPeriod);
        }
        let mut prefix: Vec<u8> = prefix.iter().map(|&b| u8::from(b != 0)).collect();
        let norm: Vec<u8> = period.iter().map(|&b| u8::from(b != 0)).collect();
        let mut period = primitive_root(&norm);
        // Roll the period backwards over matching prefix bits.
        while let (Some(&last), Some(&tail)) = (prefix.last(), period.last()) {
            if last != tail {
                break;
            }
            prefix.pop();
            period.rotate_right(1);
        }
        Ok(Self { prefix, period })
    }

    /// The constant path `bit^∞`.
    pub fn constant(bit: u8) -> Self {
        Self {
            prefix: Vec::new(),
            period: alloc::vec![u8::from(bit != 0)],
        }
    }

    /// `h · tail^∞` for a one-bit tail; used for eventually-constant paths.
    pub fn eventually(h: &History, bit: u8) -> Self {
        Self::new(h.bits(), &[bit]).expect("nonempty period")
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    /// The `t`-th bit, `t >= 1`.
    pub fn bit_at(&self, t: usize) -> u8 {
        assert!(t >= 1, "periods are counted from 1");
        if t <= self.prefix.len() {
            self.prefix[t - 1]
        } else {
            self.period[(t - self.prefix.len() - 1) % self.period.len()]
        }
    }

    /// The first `n` bits `s|n`.
    pub fn truncate(&self, n: usize) -> History {
        let bits: Vec<u8> = (1..=n).map(|t| self.bit_at(t)).collect();
        History { bits }
    }

    /// The path with its first `t` bits removed.
    pub fn tail_from(&self, t: usize) -> PathSpec {
        if t <= self.prefix.len() {
            Self::new(&self.prefix[t..], &self.period).expect("nonempty period")
        } else {
            let shift = (t - self.prefix.len()) % self.period.len();
            let mut period = self.period.clone();
            period.rotate_left(shift);
            Self::new(&[], &period).expect("nonempty period")
        }
    }

    /// `h · self`.
    pub fn prepend(&self, h: &History) -> PathSpec {
        let mut prefix = h.bits().to_vec();
        prefix.extend_from_slice(&self.prefix);
        Self::new(&prefix, &self.period).expect("nonempty period")
    }

    /// Positions needed to decide equality with another path.
    fn comparison_horizon(&self, other: &PathSpec) -> usize {
        let l = num_integer::lcm(self.period.len(), other.period.len());
        self.prefix.len().max(other.prefix.len()) + l
    }

    /// Smallest `t` where the paths differ, or `None` when they coincide.
    pub fn first_disagreement(&self, other: &PathSpec) -> Option<usize> {
        (1..=self.comparison_horizon(other)).find(|&t| self.bit_at(t) != other.bit_at(t))
    }

    /// True iff the path lies in the cylinder `C(h)`.
    pub fn in_cylinder(&self, h: &History) -> bool {
        h.bits().iter().enumerate().all(|(j, &b)| self.bit_at(j + 1) == b)
    }

    /// Length of agreement with `h`, capped at `h.len()`.
    pub fn agreement_with(&self, h: &History) -> usize {
        h.bits()
            .iter()
            .enumerate()
            .take_while(|(j, &b)| self.bit_at(j + 1) == b)
            .count()
    }
}

/// Result of [`first_disagreement`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disagreement {
    At(usize),
    Equal,
}

pub fn first_disagreement(a: &PathSpec, b: &PathSpec) -> Disagreement {
    match a.first_disagreement(b) {
        Some(t) => Disagreement::At(t),
        None => Disagreement::Equal,
    }
}

pub fn bit_at(p: &PathSpec, t: usize) -> u8 {
    p.bit_at(t)
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.prefix {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        f.write_str("|")?;
        for &b in &self.period {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PathSpec(\"{self}\")")
    }
}

impl FromStr for PathSpec {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (prefix, period) = s
            .split_once('|')
            .ok_or_else(|| PathError::MissingSeparator(s.into()))?;
        Self::new(&parse_bits(prefix)?, &parse_bits(period)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn p(s: &str) -> PathSpec {
        s.parse().unwrap()
    }

    fn h(s: &str) -> History {
        s.parse().unwrap()
    }

    #[test]
    fn bit_at_examples() {
        assert_eq!(p("|0").bit_at(5), 0);
        assert_eq!(p("1|0").bit_at(1), 1);
        // 0101…: positions 1..4 are 0,1,0,1
        assert_eq!(p("|01").bit_at(4), 1);
    }

    #[test]
    fn extends_examples() {
        assert!(h("010").extends(&h("01")));
        assert!(!h("01").extends(&h("010")));
        assert!(!h("110").extends(&h("10")));
    }

    #[test]
    fn first_disagreement_examples() {
        assert_eq!(first_disagreement(&p("|0"), &p("|0")), Disagreement::Equal);
        assert_eq!(first_disagreement(&p("|0"), &p("1|0")), Disagreement::At(1));
        // Built without canonicalization shortcuts: "0"·(10)^∞ is 0101…
        let b = PathSpec {
            prefix: alloc::vec![0],
            period: alloc::vec![1, 0],
        };
        assert_eq!(first_disagreement(&p("|01"), &b), Disagreement::Equal);
    }

    #[test]
    fn canonical_form_is_structural() {
        assert_eq!(p("0|10"), p("|01"));
        assert_eq!(p("000|0"), p("|0"));
        assert_eq!(p("1|0101"), p("1|01"));
        assert_eq!(p("10|0"), p("1|0"));
        assert_eq!(p("11|01").to_string(), "1|10");
        assert_ne!(p("1|0"), p("|0"));
    }

    #[test]
    fn display_round_trip() {
        for s in ["1|0", "|01", "0110|1", "|0"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(h("0110").to_string(), "0110");
    }

    #[test]
    fn parse_errors() {
        assert_eq!("012".parse::<History>(), Err(PathError::InvalidBit('2')));
        assert_eq!("01".parse::<PathSpec>(), Err(PathError::MissingSeparator("01".into())));
        assert_eq!("01|".parse::<PathSpec>(), Err(PathError::EmptyPeriod));
    }

    #[test]
    fn tail_and_prepend_invert() {
        let s = p("0110|101");
        for t in 0..12 {
            assert_eq!(s.tail_from(t).prepend(&s.truncate(t)), s);
        }
    }

    #[test]
    fn extends_is_a_partial_order() {
        let all: Vec<History> = (0..=6).flat_map(History::all_of_length).collect();
        for a in &all {
            assert!(a.extends(a));
            for b in &all {
                if a.extends(b) && b.extends(a) {
                    assert_eq!(a, b);
                }
            }
        }
        // transitivity on a sample (the full cube is 127^3)
        for a in all.iter().step_by(3) {
            for b in all.iter().filter(|b| a.extends(b)) {
                for c in all.iter().filter(|c| b.extends(c)) {
                    assert!(a.extends(c));
                }
            }
        }
    }

    #[test]
    fn cylinder_containment() {
        let a = Cylinder::new(h("01"));
        let b = Cylinder::new(h("010"));
        assert!(a.contains(&b));
        assert!(!b.contains(&a));
        assert!(Cylinder::new(h("00")).is_disjoint(&a));
    }
}
