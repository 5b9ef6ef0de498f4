//! Permutations as words on {1..n}, pattern containment and subpattern sets.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Bound, RangeBounds};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrd};

use crate::error::{Error, Result};

/// Default cap on permutation length. Values fit in a byte and small fixed
/// buffers; raising the cap is supported but containment checks and avoidance
/// set generation degrade quickly past this scale.
pub const DEFAULT_MAX_LEN: usize = 16;
/// Hard cap: values are stored as `u8`.
pub const HARD_MAX_LEN: usize = 255;

static MAX_LEN: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_LEN);

/// Current maximum permutation length accepted by constructors.
pub fn max_perm_len() -> usize {
    MAX_LEN.load(AtomicOrd::Relaxed)
}

/// Raise or lower the maximum permutation length (process-wide).
pub fn set_max_perm_len(n: usize) -> Result<()> {
    if n == 0 || n > HARD_MAX_LEN {
        return Err(Error::Msg(format!(
            "maximum permutation length must be in 1..={HARD_MAX_LEN}, got {n}"
        )));
    }
    MAX_LEN.store(n, AtomicOrd::Relaxed);
    Ok(())
}

fn check_len(len: usize) -> Result<()> {
    let max = max_perm_len();
    if len > max {
        Err(Error::LengthLimit { len, max })
    } else {
        Ok(())
    }
}

/// A permutation of {1..n}, the empty word being the unique length-0 one.
///
/// Ordered by length first, then lexicographically on the value word; this is
/// the canonical order used for bases, avoidance sets and serialization.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    vals: Vec<u8>,
}

impl Permutation {
    pub fn empty() -> Self {
        Permutation { vals: Vec::new() }
    }

    /// The single-point permutation 1.
    pub fn one() -> Self {
        Permutation { vals: vec![1] }
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_len(n)?;
        Ok(Permutation { vals: (1..=n as u8).collect() })
    }

    pub fn decreasing(n: usize) -> Result<Self> {
        check_len(n)?;
        Ok(Permutation { vals: (1..=n as u8).rev().collect() })
    }

    /// Construct from explicit values; must be a rearrangement of {1..n}.
    pub fn from_vals(vals: Vec<u8>) -> Result<Self> {
        check_len(vals.len())?;
        let n = vals.len();
        let mut seen = vec![false; n + 1];
        for &v in &vals {
            if v == 0 || v as usize > n || seen[v as usize] {
                return Err(Error::InvalidPermutation(format!(
                    "{vals:?} is not a rearrangement of 1..={n}"
                )));
            }
            seen[v as usize] = true;
        }
        Ok(Permutation { vals })
    }

    /// Internal constructor for values known to be valid.
    pub(crate) fn from_vals_unchecked(vals: Vec<u8>) -> Self {
        debug_assert!(Permutation::from_vals(vals.clone()).is_ok());
        Permutation { vals }
    }

    /// The unique permutation order-isomorphic to a word of distinct keys.
    pub fn standardize<T: Ord>(word: &[T]) -> Result<Self> {
        check_len(word.len())?;
        let mut idx: Vec<usize> = (0..word.len()).collect();
        idx.sort_by(|&a, &b| word[a].cmp(&word[b]));
        let mut vals = vec![0u8; word.len()];
        for (rank, &i) in idx.iter().enumerate() {
            if rank > 0 && word[idx[rank - 1]] == word[i] {
                return Err(Error::InvalidPermutation("duplicate keys".into()));
            }
            vals[i] = (rank + 1) as u8;
        }
        Ok(Permutation { vals })
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn vals(&self) -> &[u8] {
        &self.vals
    }

    /// True iff some subsequence of `self` is order-isomorphic to `patt`.
    pub fn contains(&self, patt: &Permutation) -> bool {
        let k = patt.len();
        if k == 0 {
            return true;
        }
        if k > self.len() {
            return false;
        }
        let mut chosen: Vec<u8> = Vec::with_capacity(k);
        self.occ_search(patt, 0, &mut chosen)
    }

    fn occ_search(&self, patt: &Permutation, start: usize, chosen: &mut Vec<u8>) -> bool {
        let j = chosen.len();
        if j == patt.len() {
            return true;
        }
        // Value window forced by the already-matched prefix.
        let mut lo = 0u16;
        let mut hi = u16::MAX;
        for (jj, &cv) in chosen.iter().enumerate() {
            if patt.vals[jj] < patt.vals[j] {
                lo = lo.max(cv as u16);
            } else {
                hi = hi.min(cv as u16);
            }
        }
        let remaining = patt.len() - j;
        for i in start..=(self.len() - remaining) {
            let v = self.vals[i] as u16;
            if v > lo && v < hi {
                chosen.push(self.vals[i]);
                if self.occ_search(patt, i + 1, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }

    pub fn avoids(&self, patt: &Permutation) -> bool {
        !self.contains(patt)
    }

    /// Standardization of the points with index in `x` and value in `y`
    /// (both 1-based, interpreted as ranges over 1..=n).
    pub fn subword_at<X, Y>(&self, x: X, y: Y) -> Permutation
    where
        X: RangeBounds<usize>,
        Y: RangeBounds<usize>,
    {
        fn within<B: RangeBounds<usize>>(b: &B, v: usize) -> bool {
            (match b.start_bound() {
                Bound::Included(&s) => v >= s,
                Bound::Excluded(&s) => v > s,
                Bound::Unbounded => true,
            }) && (match b.end_bound() {
                Bound::Included(&e) => v <= e,
                Bound::Excluded(&e) => v < e,
                Bound::Unbounded => true,
            })
        }
        let picked: Vec<u8> = self
            .vals
            .iter()
            .enumerate()
            .filter(|(i, &v)| within(&x, i + 1) && within(&y, v as usize))
            .map(|(_, &v)| v)
            .collect();
        Permutation::standardize(&picked).expect("distinct values")
    }

    /// Delete the point at index `i` (0-based) and standardize.
    pub fn delete_at(&self, i: usize) -> Permutation {
        let gone = self.vals[i];
        let vals: Vec<u8> = self
            .vals
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| if v > gone { v - 1 } else { v })
            .collect();
        Permutation { vals }
    }

    /// Insert a new maximum value at position `pos` (0-based, 0..=n).
    pub fn insert_max(&self, pos: usize) -> Result<Permutation> {
        check_len(self.len() + 1)?;
        let mut vals = self.vals.clone();
        vals.insert(pos, (self.len() + 1) as u8);
        Ok(Permutation { vals })
    }

    /// All patterns contained in `self`, including the empty one and `self`.
    pub fn subpatterns(&self) -> BTreeSet<Permutation> {
        let mut all = BTreeSet::new();
        let mut frontier = vec![self.clone()];
        all.insert(self.clone());
        while let Some(p) = frontier.pop() {
            for i in 0..p.len() {
                let q = p.delete_at(i);
                if all.insert(q.clone()) {
                    frontier.push(q);
                }
            }
            if p.is_empty() {
                all.insert(p);
            }
        }
        all.insert(Permutation::empty());
        all
    }

    pub fn reverse(&self) -> Permutation {
        Permutation { vals: self.vals.iter().rev().copied().collect() }
    }

    pub fn complement(&self) -> Permutation {
        let n = self.len() as u8;
        Permutation { vals: self.vals.iter().map(|&v| n + 1 - v).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut vals = vec![0u8; self.len()];
        for (i, &v) in self.vals.iter().enumerate() {
            vals[v as usize - 1] = (i + 1) as u8;
        }
        Permutation { vals }
    }

    /// `self` below-left of `other`.
    pub fn direct_sum(&self, other: &Permutation) -> Result<Permutation> {
        check_len(self.len() + other.len())?;
        let shift = self.len() as u8;
        let mut vals = self.vals.clone();
        vals.extend(other.vals.iter().map(|&v| v + shift));
        Ok(Permutation { vals })
    }

    /// `self` above-left of `other`.
    pub fn skew_sum(&self, other: &Permutation) -> Result<Permutation> {
        check_len(self.len() + other.len())?;
        let shift = other.len() as u8;
        let mut vals: Vec<u8> = self.vals.iter().map(|&v| v + shift).collect();
        vals.extend_from_slice(&other.vals);
        Ok(Permutation { vals })
    }
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Permutation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.vals.cmp(&other.vals))
    }
}

impl fmt::Display for Permutation {
    /// Digit string for length <= 9 ("231"), bracketed values otherwise
    /// ("[10,2,1,...]"); the empty permutation prints as "".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 9 {
            for &v in &self.vals {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            write!(f, "[")?;
            for (i, &v) in self.vals.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "eps")
        } else {
            write!(f, "{self}")
        }
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "eps" {
            return Ok(Permutation::empty());
        }
        let vals: Vec<u8> = if let Some(inner) = s.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| Error::InvalidPermutation(format!("unclosed bracket in {s:?}")))?;
            inner
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u8>()
                        .map_err(|_| Error::InvalidPermutation(format!("bad value {t:?} in {s:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .filter(|&d| d >= 1)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::InvalidPermutation(format!("bad digit {c:?} in {s:?}")))
                })
                .collect::<Result<_>>()?
        };
        Permutation::from_vals(vals)
    }
}

impl serde::Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse a permutation literal; see `Permutation::from_str`.
pub fn parse_perm(s: &str) -> Result<Permutation> {
    s.parse()
}
