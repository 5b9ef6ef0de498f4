//! Avoidance sets: all permutations of each length avoiding a basis.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::basis::Basis;
use crate::error::Result;
use crate::perm::Permutation;

/// Complete avoidance sets of a basis for lengths 0..=depth, sorted per
/// length in the canonical order.
///
/// Built incrementally: the length-m candidates are the length-(m-1) avoiders
/// with a new maximum inserted in every position, filtered by basis
/// containment. This is complete because deleting the maximum of an avoider
/// yields an avoider, and duplicate-free because deleting the maximum is the
/// unique inverse of the insertion.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PermSetByLength {
    basis: Basis,
    by_len: Vec<Vec<Permutation>>,
}

impl PermSetByLength {
    pub fn build(basis: &Basis, depth: usize) -> Result<Self> {
        let mut set = PermSetByLength { basis: basis.clone(), by_len: Vec::new() };
        set.extend_to(depth)?;
        Ok(set)
    }

    /// Resume from already stored sets, which must be complete for their
    /// lengths (used when loading a cached prefix).
    pub(crate) fn from_parts(basis: Basis, by_len: Vec<Vec<Permutation>>) -> Self {
        PermSetByLength { basis, by_len }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Largest length for which sets are stored.
    pub fn depth(&self) -> usize {
        self.by_len.len().saturating_sub(1)
    }

    pub fn extend_to(&mut self, depth: usize) -> Result<()> {
        if self.by_len.is_empty() {
            self.by_len.push(vec![Permutation::empty()]);
        }
        let relevant: Vec<&Permutation> = self.basis.patterns().iter().collect();
        while self.depth() < depth {
            let m = self.depth() + 1;
            let mut next: Vec<Permutation> = Vec::new();
            for p in &self.by_len[m - 1] {
                for pos in 0..m {
                    let q = p.insert_max(pos)?;
                    if relevant.iter().all(|patt| patt.len() > m || q.avoids(patt)) {
                        next.push(q);
                    }
                }
            }
            next.sort();
            debug_assert!(next.windows(2).all(|w| w[0] != w[1]));
            self.by_len.push(next);
        }
        Ok(())
    }

    /// The avoiders of one length; panics if beyond the built depth.
    pub fn at_len(&self, m: usize) -> &[Permutation] {
        &self.by_len[m]
    }

    pub fn count(&self, m: usize) -> usize {
        self.by_len[m].len()
    }

    pub fn counts(&self) -> Vec<BigUint> {
        self.by_len.iter().map(|v| BigUint::from(v.len())).collect()
    }

    /// Membership test; the permutation must not exceed the built depth.
    pub fn contains_perm(&self, p: &Permutation) -> bool {
        p.len() <= self.depth() && self.by_len[p.len()].binary_search(p).is_ok()
    }

    /// All stored permutations of length <= depth, shortest first.
    pub fn iter_up_to(&self, depth: usize) -> impl Iterator<Item = &Permutation> {
        self.by_len[..=depth.min(self.depth())].iter().flatten()
    }

    pub(crate) fn by_len(&self) -> &[Vec<Permutation>] {
        &self.by_len
    }
}

/// Avoidance sets for `basis` up to length `n`.
pub fn avoiders(basis: &Basis, n: usize) -> Result<PermSetByLength> {
    PermSetByLength::build(basis, n)
}

/// Memo of avoidance sets keyed by basis, grown on demand.
///
/// Callers that need several bases at once first `ensure` each, then read
/// through the immutable `get`/`perms` accessors.
#[derive(Default)]
pub struct ClassCache {
    map: BTreeMap<Basis, PermSetByLength>,
}

impl ClassCache {
    pub fn new() -> Self {
        ClassCache { map: BTreeMap::new() }
    }

    /// Make sure sets for `basis` exist up to length `n`.
    pub fn ensure(&mut self, basis: &Basis, n: usize) -> Result<()> {
        match self.map.get_mut(basis) {
            Some(s) => s.extend_to(n),
            None => {
                let s = PermSetByLength::build(basis, n)?;
                self.map.insert(basis.clone(), s);
                Ok(())
            }
        }
    }

    /// Sets previously ensured; panics if `ensure` was never called.
    pub fn get(&self, basis: &Basis) -> &PermSetByLength {
        self.map.get(basis).expect("ClassCache::ensure not called for this basis")
    }

    /// Convenience: ensure then return.
    pub fn sets(&mut self, basis: &Basis, n: usize) -> Result<&PermSetByLength> {
        self.ensure(basis, n)?;
        Ok(self.map.get(basis).expect("just inserted"))
    }

    /// Adopt precomputed sets (e.g. loaded from a disk cache) if deeper than
    /// what is stored.
    pub fn adopt(&mut self, sets: PermSetByLength) {
        match self.map.get(sets.basis()) {
            Some(old) if old.depth() >= sets.depth() => {}
            _ => {
                self.map.insert(sets.basis().clone(), sets);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Basis {
        s.parse().unwrap()
    }

    fn counts(basis: &str, n: usize) -> Vec<usize> {
        let sets = avoiders(&b(basis), n).unwrap();
        (0..=n).map(|m| sets.count(m)).collect()
    }

    #[test]
    fn catalan_counts() {
        assert_eq!(counts("231", 5), vec![1, 1, 2, 5, 14, 42]);
    }

    #[test]
    fn finite_class_counts() {
        assert_eq!(counts("12_21", 4), vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn fibonacci_counts() {
        assert_eq!(counts("123_132_213", 6), vec![1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn one_pattern_basis() {
        // Av(1) contains only the empty permutation.
        assert_eq!(counts("1", 3), vec![1, 0, 0, 0]);
    }

    /// Naive oracle: filter all m! permutations by containment.
    fn naive(basis: &Basis, m: usize) -> Vec<Permutation> {
        fn rec(vals: &mut Vec<u8>, k: usize, out: &mut Vec<Permutation>) {
            if k == vals.len() {
                out.push(Permutation::from_vals(vals.clone()).unwrap());
                return;
            }
            for i in k..vals.len() {
                vals.swap(k, i);
                rec(vals, k + 1, out);
                vals.swap(k, i);
            }
        }
        let mut all = Vec::new();
        let mut vals: Vec<u8> = (1..=m as u8).collect();
        rec(&mut vals, 0, &mut all);
        let mut keep: Vec<Permutation> = all
            .into_iter()
            .filter(|p| basis.patterns().iter().all(|q| p.avoids(q)))
            .collect();
        keep.sort();
        keep
    }

    #[test]
    fn completeness_against_naive_filter() {
        for basis in ["231", "123", "12", "321_2134", "123_231", "132_4231", "2413_3142"] {
            let basis = b(basis);
            let sets = avoiders(&basis, 6).unwrap();
            for m in 0..=6 {
                assert_eq!(sets.at_len(m), naive(&basis, m).as_slice(), "basis {basis} len {m}");
            }
        }
    }

    #[test]
    fn membership_queries() {
        let sets = avoiders(&b("231"), 4).unwrap();
        assert!(sets.contains_perm(&"1324".parse().unwrap()));
        assert!(!sets.contains_perm(&"2314".parse().unwrap()));
        assert_eq!(sets.iter_up_to(3).count(), 1 + 1 + 2 + 5);
    }

    #[test]
    fn cache_extends_in_place() {
        let mut cache = ClassCache::new();
        cache.ensure(&b("231"), 3).unwrap();
        cache.ensure(&b("231"), 5).unwrap();
        assert_eq!(cache.get(&b("231")).count(5), 42);
    }
}
