//! Peg permutations and their conversion to rules.
//!
//! A peg permutation decorates each letter with +, − or ∘; a filling vector
//! tells how long a run each letter becomes. A peg with a convex set of
//! vectors is one rule: the signed letters expand into lower-bound points
//! plus a monotone class cell (or into exactly that many points when the
//! bound is tight), laid along the letter's diagonal.
//!
//! The sign-to-class table published alongside the formalism maps + to the
//! decreasing class, but its own worked fill example sends 2⁺ to the
//! increasing run 45; we follow the example: + is increasing, − decreasing.

use std::fmt;
use std::str::FromStr;

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::block::Block;
use crate::cover::{verify_cover, Cover};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rule::Rule;

/// Largest point-run a capped letter may expand into.
pub const MAX_LETTER_CAP: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Decoration {
    Plus,
    Minus,
    Dot,
}

impl Decoration {
    fn glyph(self) -> char {
        match self {
            Decoration::Plus => '+',
            Decoration::Minus => '-',
            Decoration::Dot => 'o',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PegPermutation {
    underlying: Permutation,
    decorations: Vec<Decoration>,
}

impl PegPermutation {
    pub fn new(underlying: Permutation, decorations: Vec<Decoration>) -> Result<Self> {
        if underlying.len() != decorations.len() {
            return Err(Error::BadPeg(format!(
                "{} letters but {} decorations",
                underlying.len(),
                decorations.len()
            )));
        }
        Ok(PegPermutation { underlying, decorations })
    }

    pub fn len(&self) -> usize {
        self.decorations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decorations.is_empty()
    }

    pub fn underlying(&self) -> &Permutation {
        &self.underlying
    }

    pub fn decorations(&self) -> &[Decoration] {
        &self.decorations
    }
}

impl fmt::Display for PegPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, d) in self.underlying.vals().iter().zip(&self.decorations) {
            write!(f, "{v}{}", d.glyph())?;
        }
        Ok(())
    }
}

impl FromStr for PegPermutation {
    type Err = Error;

    /// Value then decoration per letter, e.g. `3o1-4o2+`. Values are single
    /// digits, as in permutation literals.
    fn from_str(s: &str) -> Result<Self> {
        let mut vals = Vec::new();
        let mut decorations = Vec::new();
        let mut chars = s.trim().chars();
        while let Some(c) = chars.next() {
            let v = c
                .to_digit(10)
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::BadPeg(format!("letter value {c:?} in {s:?}")))?;
            vals.push(v as u8);
            let d = match chars.next() {
                Some('+') => Decoration::Plus,
                Some('-') => Decoration::Minus,
                Some('o') | Some('.') => Decoration::Dot,
                other => {
                    return Err(Error::BadPeg(format!("decoration {other:?} in {s:?}")))
                }
            };
            decorations.push(d);
        }
        PegPermutation::new(Permutation::from_vals(vals)?, decorations)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FillingVector {
    components: Vec<usize>,
}

impl FillingVector {
    pub fn new(components: Vec<usize>) -> Self {
        FillingVector { components }
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn total(&self) -> usize {
        self.components.iter().sum()
    }

    /// 1 on dotted letters, at least 2 on signed ones.
    pub fn fills(&self, peg: &PegPermutation) -> bool {
        self.components.len() == peg.len()
            && self.components.iter().zip(peg.decorations()).all(|(&c, d)| match d {
                Decoration::Dot => c == 1,
                _ => c >= 2,
            })
    }
}

impl fmt::Display for FillingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ">")
    }
}

impl FromStr for FillingVector {
    type Err = Error;

    /// `<1,3,1,2>`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('<')
            .and_then(|t| t.strip_suffix('>'))
            .ok_or_else(|| Error::BadPeg(format!("vector literal {s:?}")))?;
        let mut components = Vec::new();
        if !inner.trim().is_empty() {
            for part in inner.split(',') {
                components.push(
                    part.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::BadPeg(format!("vector component {part:?}")))?,
                );
            }
        }
        Ok(FillingVector { components })
    }
}

/// Componentwise order on vectors of equal length.
pub fn vector_contained(v: &FillingVector, w: &FillingVector) -> Result<bool> {
    if v.components.len() != w.components.len() {
        return Err(Error::BadPeg(format!(
            "vector lengths differ: {} vs {}",
            v.components.len(),
            w.components.len()
        )));
    }
    Ok(v.components.iter().zip(&w.components).all(|(a, b)| a <= b))
}

/// Replace each letter by a run of the vector's length: increasing for +,
/// decreasing for −, with value blocks stacked in the order of the peg's
/// letter values.
pub fn fill(peg: &PegPermutation, v: &FillingVector) -> Result<Permutation> {
    if !v.fills(peg) {
        return Err(Error::BadPeg(format!("{v} does not fill {peg}")));
    }
    let m = peg.len();
    let mut offset = vec![0usize; m];
    let mut acc = 0usize;
    for rank in 1..=m {
        let i = peg
            .underlying
            .vals()
            .iter()
            .position(|&x| x as usize == rank)
            .expect("underlying is a permutation");
        offset[i] = acc;
        acc += v.components[i];
    }
    let mut vals: Vec<u8> = Vec::with_capacity(acc);
    for i in 0..m {
        let run = 1..=v.components[i];
        match peg.decorations[i] {
            Decoration::Minus => vals.extend(run.rev().map(|k| (offset[i] + k) as u8)),
            _ => vals.extend(run.map(|k| (offset[i] + k) as u8)),
        }
    }
    Permutation::from_vals(vals)
}

/// Per-letter bounds on run lengths: an intersection of an upset (the lower
/// bounds) and a downset (the upper bounds, None meaning unbounded).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConvexVectorSet {
    lower: Vec<usize>,
    upper: Vec<Option<usize>>,
}

impl ConvexVectorSet {
    pub fn new(lower: Vec<usize>, upper: Vec<Option<usize>>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::BadPeg("bound vectors of unequal length".to_string()));
        }
        for (i, (&lo, up)) in lower.iter().zip(&upper).enumerate() {
            if lo == 0 {
                return Err(Error::BadPeg(format!("zero lower bound at component {i}")));
            }
            if let Some(hi) = up {
                if *hi < lo {
                    return Err(Error::BadPeg(format!(
                        "empty range [{lo},{hi}] at component {i}"
                    )));
                }
            }
        }
        Ok(ConvexVectorSet { lower, upper })
    }

    /// All vectors filling the peg: exactly 1 on dots, at least 2 on signs.
    pub fn all_filling(peg: &PegPermutation) -> Self {
        let lower = peg
            .decorations()
            .iter()
            .map(|d| if *d == Decoration::Dot { 1 } else { 2 })
            .collect();
        let upper = peg
            .decorations()
            .iter()
            .map(|d| if *d == Decoration::Dot { Some(1) } else { None })
            .collect();
        ConvexVectorSet { lower, upper }
    }

    pub fn lower(&self) -> &[usize] {
        &self.lower
    }

    pub fn upper(&self) -> &[Option<usize>] {
        &self.upper
    }

    pub fn contains(&self, v: &FillingVector) -> bool {
        v.components.len() == self.lower.len()
            && v.components
                .iter()
                .enumerate()
                .all(|(i, &c)| c >= self.lower[i] && self.upper[i].map_or(true, |u| c <= u))
    }

    /// Bounds a single rule can realize: dots pinned to one point, signed
    /// letters either unbounded above or pinned to their lower bound.
    fn check_against(&self, peg: &PegPermutation) -> Result<()> {
        if self.lower.len() != peg.len() {
            return Err(Error::BadPeg(format!(
                "{} bounds for a {}-letter peg",
                self.lower.len(),
                peg.len()
            )));
        }
        for (i, d) in peg.decorations().iter().enumerate() {
            let (lo, up) = (self.lower[i], self.upper[i]);
            match d {
                Decoration::Dot => {
                    if lo != 1 || up != Some(1) {
                        return Err(Error::BadPeg(format!(
                            "dotted letter {i} must be pinned to one point"
                        )));
                    }
                }
                _ => {
                    if lo > MAX_LETTER_CAP || up.is_some_and(|u| u > MAX_LETTER_CAP) {
                        return Err(Error::BadPeg(format!(
                            "letter {i} expands past the cap of {MAX_LETTER_CAP} points"
                        )));
                    }
                    if up.is_some() && up != Some(lo) {
                        return Err(Error::BadPeg(format!(
                            "letter {i} has a finite range wider than a point; \
                             one rule can express a count of at least k, or exactly k"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The rule of a peg with a convex vector set: each letter becomes its
/// lower-bound run of points along the letter's diagonal, followed (for
/// unbounded letters) by the sign's monotone class cell.
pub fn peg_to_rule(peg: &PegPermutation, vs: &ConvexVectorSet) -> Result<Rule> {
    vs.check_against(peg)?;
    // Expanded pseudo-letters get value keys around letter_value * scale;
    // offsets stay below scale/2, so blocks of distinct letters never mix.
    let scale = 2 * (MAX_LETTER_CAP as i64) + 3;
    let mut entries: Vec<(i64, Block)> = Vec::new();
    for (i, d) in peg.decorations().iter().enumerate() {
        let base = peg.underlying.vals()[i] as i64 * scale;
        let pts = vs.lower[i] as i64;
        let capped = vs.upper[i].is_some();
        match d {
            Decoration::Dot => entries.push((base, Block::Point)),
            Decoration::Plus => {
                let shift = if capped { pts - 1 } else { pts };
                for k in 0..pts {
                    entries.push((base - shift + k, Block::Point));
                }
                if !capped {
                    entries.push((base, "Av(21)".parse()?));
                }
            }
            Decoration::Minus => {
                let shift = if capped { pts - 1 } else { pts };
                for k in 0..pts {
                    entries.push((base + shift - k, Block::Point));
                }
                if !capped {
                    entries.push((base, "Av(12)".parse()?));
                }
            }
        }
    }
    let m = entries.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| entries[i].0);
    let mut rank = vec![0usize; m];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    Rule::from_sparse(
        m.max(1),
        m.max(1),
        entries.into_iter().enumerate().map(|(i, (_, b))| (i, rank[i], b)),
    )
}

/// Assemble a cover from disjoint pegs of a class: the empty rule plus one
/// rule per peg, re-verified against the class before it is returned.
pub fn peg_cover_to_struct_cover(
    pegs: &[(PegPermutation, ConvexVectorSet)],
    basis: &Basis,
    cache: &mut ClassCache,
) -> Result<Cover> {
    let mut rules = vec![Rule::empty()];
    for (peg, vs) in pegs {
        rules.push(peg_to_rule(peg, vs)?);
    }
    let depth = basis.max_pattern_len() + 4;
    let cover = Cover::new(basis.clone(), rules, depth);
    let report = verify_cover(&cover, depth, cache)?;
    if !report.ok() {
        let witness = report
            .missing
            .first()
            .map(|p| format!("misses {p}"))
            .or_else(|| report.duplicated.first().map(|d| format!("duplicates {}", d.perm)))
            .or_else(|| report.foreign.first().map(|(_, p)| format!("generates {p}")))
            .unwrap_or_default();
        return Err(Error::Msg(format!(
            "peg rules do not cover Av({basis}) at depth {depth}: {witness}"
        )));
    }
    Ok(cover)
}
