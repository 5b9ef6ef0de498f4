//! Bases: canonical antichains of forbidden patterns.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::sym::Symmetry;

/// A nonempty antichain of nonempty patterns, stored sorted by the canonical
/// permutation order so structurally equal bases compare equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    patterns: Vec<Permutation>,
}

impl Basis {
    /// Build a basis, validating the antichain property. Exact duplicates are
    /// merged; comparable distinct patterns are an error.
    pub fn new<I: IntoIterator<Item = Permutation>>(patterns: I) -> Result<Self> {
        let set: BTreeSet<Permutation> = patterns.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidBasis("no patterns".into()));
        }
        if set.contains(&Permutation::empty()) {
            return Err(Error::InvalidBasis("the empty permutation cannot be forbidden".into()));
        }
        let patterns: Vec<Permutation> = set.into_iter().collect();
        for (i, a) in patterns.iter().enumerate() {
            for b in &patterns[i + 1..] {
                // Sorted by length: only the longer can contain the shorter.
                if b.contains(a) {
                    return Err(Error::NotAntichain {
                        outer: b.to_string(),
                        inner: a.to_string(),
                    });
                }
            }
        }
        Ok(Basis { patterns })
    }

    pub fn single(p: Permutation) -> Result<Self> {
        Basis::new([p])
    }

    pub fn patterns(&self) -> &[Permutation] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Length of the longest pattern.
    pub fn max_pattern_len(&self) -> usize {
        self.patterns.iter().map(|p| p.len()).max().unwrap_or(0)
    }

    /// True iff the single point avoids this basis, i.e. no pattern is "1".
    pub fn admits_point(&self) -> bool {
        self.patterns.iter().all(|p| p.len() >= 2)
    }

    /// Image under one symmetry, applied to every pattern.
    pub fn map(&self, sym: Symmetry) -> Basis {
        let patterns: BTreeSet<Permutation> =
            self.patterns.iter().map(|p| sym.apply(p)).collect();
        Basis { patterns: patterns.into_iter().collect() }
    }

    /// The minimum of the eight symmetry images; one representative per
    /// symmetry class of bases.
    pub fn canonical(&self) -> Basis {
        self.canonical_with().0
    }

    /// The canonical form together with a symmetry mapping this basis onto
    /// it (the first such in the fixed symmetry order, for determinism).
    pub fn canonical_with(&self) -> (Basis, Symmetry) {
        Symmetry::ALL
            .iter()
            .map(|&s| (self.map(s), s))
            .min_by(|a, b| a.0.cmp(&b.0))
            .expect("eight images")
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonical()
    }
}

impl PartialOrd for Basis {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Basis {
    fn cmp(&self, other: &Self) -> Ordering {
        self.patterns.cmp(&other.patterns)
    }
}

impl fmt::Display for Basis {
    /// Patterns joined by "_": "231", "321_2134".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                write!(f, "_")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Av({self})")
    }
}

impl FromStr for Basis {
    type Err = Error;

    /// Accepts patterns joined by "_" or by commas outside brackets:
    /// "231_4321" and "231,4321" are the same basis.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts: Vec<String> = Vec::new();
        let mut cur = String::new();
        let mut depth = 0usize;
        for c in s.trim().chars() {
            match c {
                '[' => {
                    depth += 1;
                    cur.push(c);
                }
                ']' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| Error::InvalidBasis(format!("unbalanced ']' in {s:?}")))?;
                    cur.push(c);
                }
                '_' | ',' if depth == 0 => {
                    parts.push(std::mem::take(&mut cur));
                }
                _ => cur.push(c),
            }
        }
        parts.push(cur);
        let patterns: Vec<Permutation> = parts
            .iter()
            .map(|t| t.trim().parse::<Permutation>())
            .collect::<Result<_>>()?;
        Basis::new(patterns)
    }
}

impl serde::Serialize for Basis {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Basis {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Drop every pattern that contains another pattern of the set, leaving the
/// minimal elements; the result is an antichain with the same avoidance class.
pub fn reduce_to_antichain<I: IntoIterator<Item = Permutation>>(patterns: I) -> Result<Basis> {
    let set: BTreeSet<Permutation> = patterns.into_iter().collect();
    let minimal: Vec<Permutation> = set
        .iter()
        .filter(|p| !set.iter().any(|q| *q != **p && p.contains(q)))
        .cloned()
        .collect();
    Basis::new(minimal)
}

/// Parse a basis literal; see `Basis::from_str`.
pub fn parse_basis(s: &str) -> Result<Basis> {
    s.parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Basis {
        s.parse().unwrap()
    }

    #[test]
    fn parsing_and_display() {
        assert_eq!(b("231").to_string(), "231");
        assert_eq!(b("4321_231").to_string(), "231_4321");
        assert_eq!(b("231,4321"), b("231_4321"));
        assert!("".parse::<Basis>().is_err());
        assert!("231_23".parse::<Basis>().is_err()); // 231 contains 23? no: 23 is not a permutation
        assert!("231_21".parse::<Basis>().is_err()); // comparable
    }

    #[test]
    fn antichain_validation() {
        assert!(Basis::new(["231".parse().unwrap(), "2314".parse().unwrap()]).is_err());
        assert!(Basis::new(["231".parse().unwrap(), "231".parse().unwrap()]).is_ok());
        assert!(Basis::new([Permutation::empty()]).is_err());
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(
            reduce_to_antichain(["231".parse().unwrap(), "2314".parse().unwrap()]).unwrap(),
            b("231")
        );
        assert_eq!(reduce_to_antichain(["123".parse().unwrap()]).unwrap(), b("123"));
        assert_eq!(
            reduce_to_antichain(["12".parse().unwrap(), "21".parse().unwrap(), "132".parse().unwrap()])
                .unwrap(),
            b("12_21")
        );
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(b("231").canonical(), b("132"));
        assert_eq!(b("123").canonical(), b("123"));
        assert_eq!(b("12_21").canonical(), b("12_21"));
    }

    #[test]
    fn canonical_is_idempotent_and_orbit_constant() {
        for s in ["231", "321_2134", "123_231", "2413"] {
            let base = b(s);
            let canon = base.canonical();
            assert_eq!(canon.canonical(), canon);
            for sym in Symmetry::ALL {
                assert_eq!(base.map(sym).canonical(), canon, "orbit of {s} under {sym:?}");
            }
        }
    }

    #[test]
    fn derived_quantities() {
        assert_eq!(b("321_2134").max_pattern_len(), 4);
        assert!(b("231").admits_point());
        assert!(!b("1").admits_point());
    }
}
