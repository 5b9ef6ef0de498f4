//! The eight symmetries of the square acting on permutation plots, and
//! counting pattern sets up to symmetry.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Elements of the symmetry group generated by reverse, complement and
/// inverse. Composite names apply right to left: `InverseReverse` is
/// "reverse, then inverse".
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Symmetry {
    Identity,
    Reverse,
    Complement,
    ReverseComplement,
    Inverse,
    InverseReverse,
    InverseComplement,
    InverseReverseComplement,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::Identity,
        Symmetry::Reverse,
        Symmetry::Complement,
        Symmetry::ReverseComplement,
        Symmetry::Inverse,
        Symmetry::InverseReverse,
        Symmetry::InverseComplement,
        Symmetry::InverseReverseComplement,
    ];

    pub fn apply(&self, p: &Permutation) -> Permutation {
        match self {
            Symmetry::Identity => p.clone(),
            Symmetry::Reverse => p.reverse(),
            Symmetry::Complement => p.complement(),
            Symmetry::ReverseComplement => p.reverse().complement(),
            Symmetry::Inverse => p.inverse(),
            Symmetry::InverseReverse => p.reverse().inverse(),
            Symmetry::InverseComplement => p.complement().inverse(),
            Symmetry::InverseReverseComplement => p.reverse().complement().inverse(),
        }
    }

    /// The group inverse: undoes `apply`. Reflections and the half turn are
    /// involutions; the two quarter turns swap.
    pub fn inverse(&self) -> Symmetry {
        match self {
            Symmetry::InverseReverse => Symmetry::InverseComplement,
            Symmetry::InverseComplement => Symmetry::InverseReverse,
            other => *other,
        }
    }
}

/// Apply one symmetry to a permutation.
pub fn apply_symmetry(op: Symmetry, p: &Permutation) -> Permutation {
    op.apply(p)
}

/// The orbit of `p` under all eight symmetries.
pub fn orbit(p: &Permutation) -> std::collections::BTreeSet<Permutation> {
    Symmetry::ALL.iter().map(|s| s.apply(p)).collect()
}

fn all_perms(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut vals: Vec<u8> = (1..=n as u8).collect();
    permute_rec(&mut vals, 0, &mut out);
    out.sort();
    out
}

fn permute_rec(vals: &mut Vec<u8>, k: usize, out: &mut Vec<Permutation>) {
    if k == vals.len() {
        out.push(Permutation::from_vals(vals.clone()).expect("valid"));
        return;
    }
    for i in k..vals.len() {
        vals.swap(k, i);
        permute_rec(vals, k + 1, out);
        vals.swap(k, i);
    }
}

/// Default cap for `count_symmetry_classes`; the group action is computed
/// over all n! permutations.
pub const DEFAULT_SYMMETRY_COUNT_MAX: usize = 6;

/// Number of subsets of all length-n permutations, up to the eight
/// symmetries applied elementwise.
///
/// Computed by Burnside's lemma over the action on the set of length-n
/// permutations: a subset is fixed by g exactly when it is a union of cycles
/// of g, so the count is (1/8) * sum over g of 2^(cycles of g). No subset is
/// ever enumerated.
pub fn count_symmetry_classes(n: usize) -> Result<BigUint> {
    count_symmetry_classes_with_max(n, DEFAULT_SYMMETRY_COUNT_MAX)
}

pub fn count_symmetry_classes_with_max(n: usize, max: usize) -> Result<BigUint> {
    if n > max {
        return Err(Error::Msg(format!(
            "symmetry class counting capped at length {max}, got {n}"
        )));
    }
    let perms = all_perms(n);
    let index: HashMap<&Permutation, usize> =
        perms.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut total = BigUint::zero();
    for sym in Symmetry::ALL {
        let image: Vec<usize> = perms.iter().map(|p| index[&sym.apply(p)]).collect();
        let mut seen = vec![false; perms.len()];
        let mut cycles = 0usize;
        for start in 0..perms.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = image[i];
            }
        }
        total += BigUint::from(1u8) << cycles;
    }
    let (q, r) = num_integer::Integer::div_rem(&total, &BigUint::from(8u8));
    debug_assert!(r.is_zero(), "Burnside sum must be divisible by the group order");
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn generators_are_involutions() {
        for s in ["231", "2413", "35216748", "1", ""] {
            let q = p(s);
            assert_eq!(q.reverse().reverse(), q);
            assert_eq!(q.complement().complement(), q);
            assert_eq!(q.inverse().inverse(), q);
        }
    }

    #[test]
    fn group_has_eight_elements() {
        // The eight listed compositions act pairwise differently on some
        // permutation, and the set of induced maps is closed under the
        // generators; together that pins the dihedral group of the square.
        let probe = p("2413");
        let witness = p("31524");
        let images: BTreeSet<(Permutation, Permutation)> = Symmetry::ALL
            .iter()
            .map(|s| (s.apply(&probe), s.apply(&witness)))
            .collect();
        assert_eq!(images.len(), 8);
        let maps: BTreeSet<Vec<Permutation>> = Symmetry::ALL
            .iter()
            .map(|s| vec![s.apply(&probe), s.apply(&witness)])
            .collect();
        for s in Symmetry::ALL {
            for gen in [Symmetry::Reverse, Symmetry::Complement, Symmetry::Inverse] {
                let composed =
                    vec![gen.apply(&s.apply(&probe)), gen.apply(&s.apply(&witness))];
                assert!(maps.contains(&composed), "group not closed under {gen:?}");
            }
        }
    }

    #[test]
    fn orbit_sizes_divide_eight() {
        for s in ["1", "12", "231", "2413", "1234"] {
            let o = orbit(&p(s));
            assert!(8 % o.len() == 0, "orbit of {s} has size {}", o.len());
        }
        assert_eq!(orbit(&p("1")).len(), 1);
        assert_eq!(orbit(&p("231")).len(), 4);
    }

    /// Reference count by explicit orbit enumeration of all subsets.
    fn classes_by_enumeration(n: usize) -> u64 {
        let perms = all_perms(n);
        let index: HashMap<&Permutation, usize> =
            perms.iter().enumerate().map(|(i, q)| (q, i)).collect();
        let images: Vec<Vec<usize>> = Symmetry::ALL
            .iter()
            .map(|s| perms.iter().map(|q| index[&s.apply(q)]).collect())
            .collect();
        let mut seen = vec![false; 1usize << perms.len()];
        let mut classes = 0u64;
        for mask in 0..(1usize << perms.len()) {
            if seen[mask] {
                continue;
            }
            classes += 1;
            for img in &images {
                let mut m = 0usize;
                for (i, map) in img.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        m |= 1 << map;
                    }
                }
                seen[m] = true;
            }
        }
        classes
    }

    #[test]
    fn burnside_matches_enumeration_small() {
        for n in 0..=3 {
            let fast = count_symmetry_classes(n).unwrap();
            let slow = classes_by_enumeration(n);
            assert_eq!(fast, BigUint::from(slow), "mismatch at n={n}");
        }
        assert_eq!(count_symmetry_classes(1).unwrap(), BigUint::from(2u8));
        assert_eq!(count_symmetry_classes(2).unwrap(), BigUint::from(3u8));
        assert_eq!(count_symmetry_classes(3).unwrap(), BigUint::from(21u8));
    }

    #[test]
    #[ignore] // walks all 2^24 subsets; run manually with --release
    fn burnside_matches_enumeration_n4() {
        let fast = count_symmetry_classes(4).unwrap();
        let slow = classes_by_enumeration(4);
        assert_eq!(fast, BigUint::from(slow));
    }

    #[test]
    fn count_rejects_past_cap() {
        assert!(count_symmetry_classes(7).is_err());
        assert!(count_symmetry_classes_with_max(7, 7).is_ok());
    }
}
