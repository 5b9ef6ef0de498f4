//! Gridded semantics of rules: generation of all gridded objects, unique
//! gridding and avoidance checks, and the containment certificate.
//!
//! A gridded object of a rule is a choice of per-cell sizes, per-cell
//! contents drawn from each block, one multiset word per column assigning
//! its index slots to rows, and one word per row assigning its value slots
//! to columns. Gridded objects correspond bijectively to griddings, so the
//! multiplicity of a permutation in the generated stream is its number of
//! griddings.

use std::collections::{BTreeMap, HashSet};

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::block::Block;
use crate::error::Result;
use crate::perm::Permutation;
use crate::rule::Rule;

/// All per-cell size vectors for total length `m`: 1 on points, 0 on empty
/// cells, free on class cells.
pub(crate) fn size_assignments(rule: &Rule, m: usize) -> Vec<Vec<usize>> {
    size_assignments_floored(rule, m, None)
}

/// Like size_assignments, but a designated class cell takes at least one
/// point; used to enumerate only the objects a newly filled cell adds.
pub(crate) fn size_assignments_floored(
    rule: &Rule,
    m: usize,
    floor_cell: Option<usize>,
) -> Vec<Vec<usize>> {
    let points: Vec<usize> = (0..rule.cells().len())
        .filter(|&i| rule.cells()[i] == Block::Point)
        .collect();
    let classes: Vec<usize> = (0..rule.cells().len())
        .filter(|&i| rule.cells()[i].is_class())
        .collect();
    let floors: Vec<usize> = classes
        .iter()
        .map(|&i| usize::from(floor_cell == Some(i)))
        .collect();
    let need: usize = points.len() + floors.iter().sum::<usize>();
    if m < need {
        return Vec::new();
    }
    let mut base = vec![0usize; rule.cells().len()];
    for &i in &points {
        base[i] = 1;
    }
    let mut out = Vec::new();
    distribute(m - points.len(), &classes, &floors, 0, &mut base, &mut out);
    out
}

fn distribute(
    rest: usize,
    classes: &[usize],
    floors: &[usize],
    k: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if k == classes.len() {
        if rest == 0 {
            out.push(cur.clone());
        }
        return;
    }
    // Last class cell takes the remainder to avoid a wasted branch level.
    if k + 1 == classes.len() {
        if rest >= floors[k] {
            cur[classes[k]] = rest;
            out.push(cur.clone());
            cur[classes[k]] = 0;
        }
        return;
    }
    for take in floors[k]..=rest {
        cur[classes[k]] = take;
        distribute(rest - take, classes, floors, k + 1, cur, out);
    }
    cur[classes[k]] = 0;
}

/// All distinct arrangements of the multiset with `counts[i]` copies of i.
pub(crate) fn multiset_words(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().sum();
    let mut left = counts.to_vec();
    let mut cur = Vec::with_capacity(total);
    let mut out = Vec::new();
    fn rec(left: &mut [usize], cur: &mut Vec<usize>, total: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == total {
            out.push(cur.clone());
            return;
        }
        for i in 0..left.len() {
            if left[i] > 0 {
                left[i] -= 1;
                cur.push(i);
                rec(left, cur, total, out);
                cur.pop();
                left[i] += 1;
            }
        }
    }
    rec(&mut left, &mut cur, total, &mut out);
    out
}

/// Column widths (sum of cell sizes by column).
pub(crate) fn col_widths(rule: &Rule, sizes: &[usize]) -> Vec<usize> {
    (0..rule.width())
        .map(|x| (0..rule.height()).map(|y| sizes[y * rule.width() + x]).sum())
        .collect()
}

/// Row heights (sum of cell sizes by row).
pub(crate) fn row_heights(rule: &Rule, sizes: &[usize]) -> Vec<usize> {
    (0..rule.height())
        .map(|y| (0..rule.width()).map(|x| sizes[y * rule.width() + x]).sum())
        .collect()
}

/// Build the permutation determined by one gridded object. `colwords[x]`
/// assigns column x's slots to rows bottom-up by position; `rowwords[y]`
/// assigns row y's slots to columns bottom-up by value; each cell's content
/// is placed monotonically into its slots.
pub(crate) fn assemble(
    rule: &Rule,
    sizes: &[usize],
    contents: &[&Permutation],
    colwords: &[&[usize]],
    rowwords: &[&[usize]],
) -> Permutation {
    let t = rule.width();
    let u = rule.height();
    let m: usize = sizes.iter().sum();
    let widths = col_widths(rule, sizes);
    let heights = row_heights(rule, sizes);
    let mut pos_base = vec![0usize; t];
    for x in 1..t {
        pos_base[x] = pos_base[x - 1] + widths[x - 1];
    }
    let mut val_base = vec![0usize; u];
    for y in 1..u {
        val_base[y] = val_base[y - 1] + heights[y - 1];
    }
    let mut cell_pos: Vec<Vec<usize>> = vec![Vec::new(); t * u];
    let mut cell_val: Vec<Vec<usize>> = vec![Vec::new(); t * u];
    for x in 0..t {
        for (i, &y) in colwords[x].iter().enumerate() {
            cell_pos[y * t + x].push(pos_base[x] + i);
        }
    }
    for y in 0..u {
        for (j, &x) in rowwords[y].iter().enumerate() {
            cell_val[y * t + x].push(val_base[y] + j + 1);
        }
    }
    let mut vals = vec![0u8; m];
    for i in 0..t * u {
        let content = contents[i];
        debug_assert_eq!(content.len(), sizes[i]);
        debug_assert_eq!(cell_pos[i].len(), sizes[i]);
        for (j, &p) in cell_pos[i].iter().enumerate() {
            vals[p] = cell_val[i][content.vals()[j] as usize - 1] as u8;
        }
    }
    Permutation::from_vals_unchecked(vals)
}

/// Visit every gridded object of total length ≤ n in ascending length
/// order. The callback gets (length, permutation) once per gridded object
/// (so with multiplicity = gridding count) and returns false to stop;
/// the function then returns Ok(false).
pub(crate) fn for_each_gridded<F>(
    rule: &Rule,
    n: usize,
    cache: &mut ClassCache,
    f: &mut F,
) -> Result<bool>
where
    F: FnMut(usize, &Permutation) -> bool,
{
    for_each_gridded_floored(rule, n, None, cache, f)
}

/// for_each_gridded restricted to objects where `floor_cell` is nonempty.
pub(crate) fn for_each_gridded_floored<F>(
    rule: &Rule,
    n: usize,
    floor_cell: Option<usize>,
    cache: &mut ClassCache,
    f: &mut F,
) -> Result<bool>
where
    F: FnMut(usize, &Permutation) -> bool,
{
    for (_, _, b) in rule.class_cells() {
        cache.ensure(b, n)?;
    }
    let t = rule.width();
    let u = rule.height();
    let point = Permutation::one();
    let eps = Permutation::empty();
    for m in 0..=n {
        for sizes in size_assignments_floored(rule, m, floor_cell) {
            // Content options per cell.
            let mut options: Vec<&[Permutation]> = Vec::with_capacity(t * u);
            let mut feasible = true;
            for (i, b) in rule.cells().iter().enumerate() {
                let opts: &[Permutation] = match b {
                    Block::EmptyClass => std::slice::from_ref(&eps),
                    Block::Point => std::slice::from_ref(&point),
                    Block::Class(c) => cache.get(c).at_len(sizes[i]),
                };
                if opts.is_empty() {
                    feasible = false;
                    break;
                }
                options.push(opts);
            }
            if !feasible {
                continue;
            }
            let colword_sets: Vec<Vec<Vec<usize>>> = (0..t)
                .map(|x| {
                    let counts: Vec<usize> =
                        (0..u).map(|y| sizes[y * t + x]).collect();
                    multiset_words(&counts)
                })
                .collect();
            let rowword_sets: Vec<Vec<Vec<usize>>> = (0..u)
                .map(|y| {
                    let counts: Vec<usize> =
                        (0..t).map(|x| sizes[y * t + x]).collect();
                    multiset_words(&counts)
                })
                .collect();
            // Odometer over contents, column words, row words.
            let dims: Vec<usize> = options
                .iter()
                .map(|o| o.len())
                .chain(colword_sets.iter().map(|w| w.len()))
                .chain(rowword_sets.iter().map(|w| w.len()))
                .collect();
            let mut idx = vec![0usize; dims.len()];
            loop {
                let contents: Vec<&Permutation> =
                    (0..t * u).map(|i| &options[i][idx[i]]).collect();
                let colwords: Vec<&[usize]> = (0..t)
                    .map(|x| colword_sets[x][idx[t * u + x]].as_slice())
                    .collect();
                let rowwords: Vec<&[usize]> = (0..u)
                    .map(|y| rowword_sets[y][idx[t * u + t + y]].as_slice())
                    .collect();
                let perm = assemble(rule, &sizes, &contents, &colwords, &rowwords);
                if !f(m, &perm) {
                    return Ok(false);
                }
                // Advance the odometer.
                let mut k = 0;
                loop {
                    if k == dims.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < dims[k] {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == dims.len() {
                    break;
                }
            }
        }
    }
    Ok(true)
}

/// Every permutation of the rule's grid class up to length n, with its
/// number of distinct griddings, indexed by length.
pub fn grid_perms(
    rule: &Rule,
    n: usize,
    cache: &mut ClassCache,
) -> Result<Vec<BTreeMap<Permutation, u64>>> {
    let mut out: Vec<BTreeMap<Permutation, u64>> = vec![BTreeMap::new(); n + 1];
    for_each_gridded(rule, n, cache, &mut |m, p| {
        *out[m].entry(p.clone()).or_insert(0) += 1;
        true
    })?;
    Ok(out)
}

/// True iff no permutation up to `depth` has two griddings.
pub fn is_struct_rule(rule: &Rule, depth: usize, cache: &mut ClassCache) -> Result<bool> {
    let mut seen: HashSet<Permutation> = HashSet::new();
    let mut cur_len = 0usize;
    let mut ok = true;
    for_each_gridded(rule, depth, cache, &mut |m, p| {
        if m != cur_len {
            cur_len = m;
            seen.clear();
        }
        if !seen.insert(p.clone()) {
            ok = false;
            return false;
        }
        true
    })?;
    Ok(ok)
}

/// True iff every generated permutation up to `depth` avoids the basis.
pub fn rule_avoids(rule: &Rule, basis: &Basis, depth: usize, cache: &mut ClassCache) -> Result<bool> {
    let mut ok = true;
    for_each_gridded(rule, depth, cache, &mut |_, p| {
        if basis.patterns().iter().any(|q| p.contains(q)) {
            ok = false;
            return false;
        }
        true
    })?;
    Ok(ok)
}

/// Certified depth for full containment: with p point cells and longest
/// basis pattern k, any basis occurrence in a generated permutation reduces
/// (by deleting points outside the occurrence, legal because class cells
/// are closed under subpatterns) to one of length ≤ p + k.
pub fn certificate_depth(rule: &Rule, basis: &Basis) -> usize {
    rule.point_count() + basis.max_pattern_len()
}

/// Complete decision of R ⊆ Av(basis): checking avoidance up to
/// certificate_depth certifies it at every length.
pub fn rule_subset_certified(rule: &Rule, basis: &Basis, cache: &mut ClassCache) -> Result<bool> {
    rule_avoids(rule, basis, certificate_depth(rule, basis), cache)
}

/// Unique gridding and basis avoidance in one generation pass, stopping at
/// the first duplicate or basis hit.
pub(crate) fn rule_valid(
    rule: &Rule,
    basis: &Basis,
    depth: usize,
    cache: &mut ClassCache,
) -> Result<bool> {
    let mut seen: HashSet<Permutation> = HashSet::new();
    let mut cur_len = 0usize;
    let mut ok = true;
    for_each_gridded(rule, depth, cache, &mut |m, p| {
        if m != cur_len {
            cur_len = m;
            seen.clear();
        }
        if basis.patterns().iter().any(|q| p.contains(q)) || !seen.insert(p.clone()) {
            ok = false;
            return false;
        }
        true
    })?;
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn empty_rule_generates_only_eps() {
        let mut cache = ClassCache::new();
        let g = grid_perms(&Rule::empty(), 4, &mut cache).unwrap();
        assert_eq!(g[0].len(), 1);
        assert!(g[0].contains_key(&Permutation::empty()));
        for m in 1..=4 {
            assert!(g[m].is_empty());
        }
    }

    #[test]
    fn max_decomposition_rule_at_length_three() {
        let mut cache = ClassCache::new();
        let g = grid_perms(&fig_rule(), 3, &mut cache).unwrap();
        assert_eq!(g[3].len(), 5);
        assert!(g[3].values().all(|&c| c == 1));
        // Lengths 0..2 for cross-checking: the rule misses only eps.
        assert_eq!(g[0].len(), 0);
        assert_eq!(g[1].len(), 1);
        assert_eq!(g[2].len(), 2);
    }

    #[test]
    fn point_beside_class_row_mixing() {
        // One point then Av(132,213) sharing a row: n 2^(n-2) permutations.
        let r = Rule::from_sparse(
            2,
            1,
            [(0, 0, Block::Point), (1, 0, "Av(132_213)".parse().unwrap())],
        )
        .unwrap();
        let mut cache = ClassCache::new();
        let g = grid_perms(&r, 4, &mut cache).unwrap();
        assert_eq!(g[4].len(), 16);
        assert_eq!(g[3].len(), 6);
        assert_eq!(g[2].len(), 2);
    }

    #[test]
    fn gridding_counts_detect_ambiguity() {
        // Two decreasing cells in one row: 21 grids three ways
        // (2|1, 21|, |21), and the singleton grids two ways.
        let r = Rule::from_sparse(
            2,
            1,
            [(0, 0, "Av(12)".parse().unwrap()), (1, 0, "Av(12)".parse().unwrap())],
        )
        .unwrap();
        let mut cache = ClassCache::new();
        let g = grid_perms(&r, 2, &mut cache).unwrap();
        assert_eq!(g[1].get(&p("1")), Some(&2));
        assert_eq!(g[2].get(&p("21")), Some(&3));
        assert!(!is_struct_rule(&r, 2, &mut cache).unwrap());
    }

    #[test]
    fn struct_check_accepts_unique_gridders() {
        let mut cache = ClassCache::new();
        assert!(is_struct_rule(&fig_rule(), 5, &mut cache).unwrap());
        let single = Rule::from_sparse(1, 1, [(0, 0, "Av(231)".parse().unwrap())]).unwrap();
        assert!(is_struct_rule(&single, 5, &mut cache).unwrap());
        assert!(is_struct_rule(&Rule::empty(), 5, &mut cache).unwrap());
    }

    #[test]
    fn avoidance_check() {
        let mut cache = ClassCache::new();
        let b: Basis = "231".parse().unwrap();
        assert!(rule_avoids(&fig_rule(), &b, 5, &mut cache).unwrap());
        assert!(rule_avoids(&Rule::empty(), &b, 5, &mut cache).unwrap());
        // Two points stacked as a descent hit {21} at length 2.
        let r = Rule::from_sparse(2, 2, [(0, 1, Block::Point), (1, 0, Block::Point)]).unwrap();
        assert!(!rule_avoids(&r, &"21".parse().unwrap(), 2, &mut cache).unwrap());
        assert!(rule_avoids(&r, &"12".parse().unwrap(), 2, &mut cache).unwrap());
    }

    #[test]
    fn certification_depth_and_outcome() {
        let mut cache = ClassCache::new();
        let b: Basis = "231".parse().unwrap();
        assert_eq!(certificate_depth(&fig_rule(), &b), 4);
        assert!(rule_subset_certified(&fig_rule(), &b, &mut cache).unwrap());
        assert!(rule_subset_certified(&Rule::empty(), &b, &mut cache).unwrap());
    }

    #[test]
    fn interleavings_are_fully_free() {
        // A column of two increasing cells: each length-n permutation is a
        // shuffle of two increasing sequences stacked by value.
        let r = Rule::from_sparse(
            1,
            2,
            [(0, 0, "Av(21)".parse().unwrap()), (0, 1, "Av(21)".parse().unwrap())],
        )
        .unwrap();
        let mut cache = ClassCache::new();
        let g = grid_perms(&r, 3, &mut cache).unwrap();
        // Size pairs (a, b) with a+b = 3 give C(3, a) interleavings each;
        // as gridded objects that is 2 + 3 + 3 = 8 plus monotone overlaps.
        let total: u64 = g[3].values().sum();
        assert_eq!(total, 8);
        assert!(g[3].contains_key(&p("123")));
        assert!(g[3].contains_key(&p("132")));
        assert!(g[3].contains_key(&p("213")));
        assert!(!g[3].contains_key(&p("321")));
    }

    #[test]
    fn multiset_words_enumeration() {
        assert_eq!(multiset_words(&[0, 0]), vec![Vec::<usize>::new()]);
        assert_eq!(multiset_words(&[2, 1]).len(), 3);
        assert_eq!(multiset_words(&[2, 2]).len(), 6);
        let ws = multiset_words(&[1, 1, 1]);
        assert_eq!(ws.len(), 6);
        assert!(ws.contains(&vec![2, 0, 1]));
    }

    #[test]
    fn size_assignment_shapes() {
        let r = fig_rule();
        // One point fixed; remaining mass over the two class cells.
        assert_eq!(size_assignments(&r, 0).len(), 0);
        assert_eq!(size_assignments(&r, 1).len(), 1);
        assert_eq!(size_assignments(&r, 3).len(), 3);
        for sizes in size_assignments(&r, 3) {
            assert_eq!(sizes.iter().sum::<usize>(), 3);
            assert_eq!(sizes[2 * 3 + 1], 1);
        }
    }
}
