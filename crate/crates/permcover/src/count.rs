//! Exact counting of rules from per-block counting sequences.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::error::Result;
use crate::grid::{col_widths, row_heights, size_assignments};
use crate::rule::Rule;

/// Provider of class counting sequences, by exact length.
pub trait CellCounts {
    fn class_count(&mut self, basis: &Basis, n: usize) -> Result<BigUint>;
}

/// Brute-force provider: enumerate the avoiders.
impl CellCounts for ClassCache {
    fn class_count(&mut self, basis: &Basis, n: usize) -> Result<BigUint> {
        Ok(BigUint::from(self.sets(basis, n)?.count(n)))
    }
}

/// total! / (parts[0]! · parts[1]! · ...) where total = sum of parts.
pub fn multinomial(parts: &[usize]) -> BigUint {
    let mut acc = 0usize;
    let mut res = BigUint::one();
    for &p in parts {
        acc += p;
        res *= num_integer::binomial(BigUint::from(acc), BigUint::from(p));
    }
    res
}

/// Number of gridded objects of one size assignment: cell contents are free
/// within each block, and column/row interleavings are free multiset words.
pub(crate) fn assignment_weight(
    rule: &Rule,
    sizes: &[usize],
    counts: &mut dyn CellCounts,
) -> Result<BigUint> {
    let t = rule.width();
    let u = rule.height();
    let mut w = BigUint::one();
    for (x, y, basis) in rule.class_cells() {
        w *= counts.class_count(basis, sizes[y * t + x])?;
        if w.is_zero() {
            return Ok(w);
        }
    }
    for (x, &width) in col_widths(rule, sizes).iter().enumerate() {
        if width > 0 {
            let parts: Vec<usize> = (0..u).map(|y| sizes[y * t + x]).collect();
            w *= multinomial(&parts);
        }
    }
    for (y, &height) in row_heights(rule, sizes).iter().enumerate() {
        if height > 0 {
            let parts: Vec<usize> = (0..t).map(|x| sizes[y * t + x]).collect();
            w *= multinomial(&parts);
        }
    }
    Ok(w)
}

/// Number of gridded objects of exact length n. When the rule grids
/// uniquely this equals the number of member permutations of length n.
pub fn count_rule(rule: &Rule, n: usize, counts: &mut dyn CellCounts) -> Result<BigUint> {
    let mut total = BigUint::zero();
    for sizes in size_assignments(rule, n) {
        total += assignment_weight(rule, &sizes, counts)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Block;
    use crate::grid::grid_perms;

    fn fig_rule() -> Rule {
        Rule::from_sparse(
            3,
            3,
            [
                (0, 0, "Av(231)".parse().unwrap()),
                (1, 2, Block::Point),
                (2, 1, "Av(231)".parse().unwrap()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[]), BigUint::from(1u32));
        assert_eq!(multinomial(&[5]), BigUint::from(1u32));
        assert_eq!(multinomial(&[1, 1]), BigUint::from(2u32));
        assert_eq!(multinomial(&[2, 1]), BigUint::from(3u32));
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u32));
        assert_eq!(multinomial(&[1, 1, 1]), BigUint::from(6u32));
        assert_eq!(multinomial(&[0, 3, 0]), BigUint::from(1u32));
    }

    #[test]
    fn catalan_convolution() {
        let mut cache = ClassCache::new();
        let r = fig_rule();
        // One point plus two independent subclasses: Catalan convolution,
        // so the rule counts C_n at every positive length.
        let want = [0u64, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (n, &w) in want.iter().enumerate() {
            assert_eq!(count_rule(&r, n, &mut cache).unwrap(), BigUint::from(w));
        }
    }

    #[test]
    fn row_mixing_point_with_class() {
        let r = Rule::from_sparse(
            2,
            1,
            [(0, 0, Block::Point), (1, 0, "Av(132_213)".parse().unwrap())],
        )
        .unwrap();
        let mut cache = ClassCache::new();
        for n in 2..=8usize {
            let want = BigUint::from(n as u64 * (1u64 << (n - 2)));
            assert_eq!(count_rule(&r, n, &mut cache).unwrap(), want);
        }
        assert_eq!(count_rule(&r, 1, &mut cache).unwrap(), BigUint::from(1u32));
        assert_eq!(count_rule(&r, 0, &mut cache).unwrap(), BigUint::from(0u32));
    }

    #[test]
    fn column_mixing_two_monotone_classes() {
        // Point in its own column and row; a second column stacking Av(21)
        // over Av(12): their mixing doubles per element.
        let r = Rule::from_sparse(
            2,
            3,
            [
                (0, 0, Block::Point),
                (1, 1, "Av(21)".parse().unwrap()),
                (1, 2, "Av(12)".parse().unwrap()),
            ],
        )
        .unwrap();
        let mut cache = ClassCache::new();
        assert_eq!(count_rule(&r, 3, &mut cache).unwrap(), BigUint::from(4u32));
        assert_eq!(count_rule(&r, 4, &mut cache).unwrap(), BigUint::from(8u32));
    }

    #[test]
    fn formula_counts_gridded_objects_even_without_uniqueness() {
        let r = Rule::from_sparse(
            2,
            1,
            [(0, 0, "Av(12)".parse().unwrap()), (1, 0, "Av(12)".parse().unwrap())],
        )
        .unwrap();
        let mut cache = ClassCache::new();
        for n in 0..=6usize {
            let g = grid_perms(&r, n, &mut cache).unwrap();
            let gridded: u64 = g[n].values().sum();
            assert_eq!(count_rule(&r, n, &mut cache).unwrap(), BigUint::from(gridded));
        }
    }

    #[test]
    fn formula_matches_generation_for_unique_gridders() {
        let mut cache = ClassCache::new();
        let r = fig_rule();
        let g = grid_perms(&r, 6, &mut cache).unwrap();
        for n in 0..=6usize {
            assert_eq!(
                count_rule(&r, n, &mut cache).unwrap(),
                BigUint::from(g[n].len()),
            );
        }
    }
}
