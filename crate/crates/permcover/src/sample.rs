//! Uniform random sampling of class members through a cover.
//!
//! A verified cover grids every member exactly once, so drawing a gridded
//! object with probability proportional to its weight draws a member
//! uniformly: pick a rule weighted by its count at length n, a size
//! assignment weighted by its term, cell contents uniformly (recursing
//! through registered covers), and the column and row interleavings
//! uniformly. Every choice is exact; nothing is approximated.

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::Basis;
use crate::block::Block;
use crate::count::{assignment_weight, count_rule};
use crate::cover::Cover;
use crate::error::{Error, Result};
use crate::grid::{assemble, size_assignments};
use crate::perm::Permutation;
use crate::registry::ClassRegistry;
use crate::rule::Rule;
use crate::sym::apply_symmetry;

/// Index i with probability weights[i] / Σ weights; None when all zero.
fn pick_weighted(weights: &[BigUint], rng: &mut dyn RngCore) -> Option<usize> {
    let total: BigUint = weights.iter().sum();
    if total.is_zero() {
        return None;
    }
    let mut r = rng.gen_biguint_below(&total);
    for (i, w) in weights.iter().enumerate() {
        if &r < w {
            return Some(i);
        }
        r -= w;
    }
    unreachable!("draw below the weight total")
}

/// A uniform arrangement of the multiset with counts[i] copies of i.
fn uniform_word(counts: impl Iterator<Item = usize>, rng: &mut dyn RngCore) -> Vec<usize> {
    let mut word = Vec::new();
    for (i, c) in counts.enumerate() {
        word.extend(std::iter::repeat(i).take(c));
    }
    word.shuffle(rng);
    word
}

/// Draw `count` members of length n, each uniform over the covered class,
/// from a generator seeded with `seed`. The same seed reproduces the same
/// list.
pub fn sample_uniform(
    cover: &Cover,
    n: usize,
    seed: u64,
    count: usize,
    reg: &mut ClassRegistry,
) -> Result<Vec<Permutation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_cover(cover, n, reg, &mut rng)).collect()
}

/// One uniform member of length n of the covered class.
pub fn sample_cover(
    cover: &Cover,
    n: usize,
    reg: &mut ClassRegistry,
    rng: &mut dyn RngCore,
) -> Result<Permutation> {
    let weights: Result<Vec<BigUint>> =
        cover.rules.iter().map(|r| count_rule(r, n, reg)).collect();
    match pick_weighted(&weights?, rng) {
        Some(i) => sample_rule(&cover.rules[i], n, reg, rng),
        None => Err(Error::EmptyClassAtLength { basis: cover.basis.to_string(), len: n }),
    }
}

/// One uniform gridded object of length n of a single rule, as a
/// permutation.
pub fn sample_rule(
    rule: &Rule,
    n: usize,
    reg: &mut ClassRegistry,
    rng: &mut dyn RngCore,
) -> Result<Permutation> {
    let assigns = size_assignments(rule, n);
    let weights: Result<Vec<BigUint>> =
        assigns.iter().map(|s| assignment_weight(rule, s, reg)).collect();
    let ai = pick_weighted(&weights?, rng).ok_or_else(|| Error::EmptyClassAtLength {
        basis: format!("rule {}", rule.encoding()),
        len: n,
    })?;
    let sizes = &assigns[ai];
    let mut contents = Vec::with_capacity(rule.cells().len());
    for (i, b) in rule.cells().iter().enumerate() {
        contents.push(match b {
            Block::EmptyClass => Permutation::empty(),
            Block::Point => Permutation::one(),
            Block::Class(c) => sample_class(c, sizes[i], reg, rng)?,
        });
    }
    let t = rule.width();
    let u = rule.height();
    let colwords: Vec<Vec<usize>> = (0..t)
        .map(|x| uniform_word((0..u).map(|y| sizes[y * t + x]), rng))
        .collect();
    let rowwords: Vec<Vec<usize>> = (0..u)
        .map(|y| uniform_word((0..t).map(|x| sizes[y * t + x]), rng))
        .collect();
    let content_refs: Vec<&Permutation> = contents.iter().collect();
    let colrefs: Vec<&[usize]> = colwords.iter().map(Vec::as_slice).collect();
    let rowrefs: Vec<&[usize]> = rowwords.iter().map(Vec::as_slice).collect();
    Ok(assemble(rule, sizes, &content_refs, &colrefs, &rowrefs))
}

/// One uniform member of Av(basis) at length n: through the registered
/// cover of the canonical form when there is one (mapping the draw back
/// through the symmetries), else uniformly from the enumerated avoiders.
pub fn sample_class(
    basis: &Basis,
    n: usize,
    reg: &mut ClassRegistry,
    rng: &mut dyn RngCore,
) -> Result<Permutation> {
    if n == 0 {
        return Ok(Permutation::empty());
    }
    let (canon, to_canon) = basis.canonical_with();
    let in_canon = match reg.cover_for(&canon).cloned() {
        Some(cover) => {
            // The stored cover samples its own basis, another symmetry
            // image of canon; push the draw up to the canonical class.
            let (_, cover_to_canon) = cover.basis.canonical_with();
            let raw = sample_cover(&cover, n, reg, rng)?;
            apply_symmetry(cover_to_canon, &raw)
        }
        None => {
            let members = reg.cache_mut().sets(&canon, n)?.at_len(n);
            if members.is_empty() {
                return Err(Error::EmptyClassAtLength { basis: canon.to_string(), len: n });
            }
            let i = rng.gen_biguint_below(&BigUint::from(members.len()));
            members[usize::try_from(i).expect("index fits")].clone()
        }
    };
    Ok(apply_symmetry(to_canon.inverse(), &in_canon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    use num_rational::Ratio;
    use num_traits::One;

    use crate::grid::multiset_words;
    use crate::perm::set_max_perm_len;

    fn b(s: &str) -> Basis {
        s.parse().unwrap()
    }

    fn fig_cover() -> Cover {
        let fig = Rule::from_sparse(
            3,
            3,
            [
                (0, 0, "Av(231)".parse().unwrap()),
                (1, 2, Block::Point),
                (2, 1, "Av(231)".parse().unwrap()),
            ],
        )
        .unwrap();
        Cover::new(b("231"), vec![Rule::empty(), fig], 5)
    }

    fn layered_cover() -> Cover {
        let split = Rule::from_sparse(
            3,
            3,
            [
                (0, 1, "Av(132_312)".parse().unwrap()),
                (1, 2, Block::Point),
                (2, 0, "Av(12)".parse().unwrap()),
            ],
        )
        .unwrap();
        Cover::new(b("132_312"), vec![Rule::empty(), split], 5)
    }

    fn decreasing_cover() -> Cover {
        let step = Rule::from_sparse(
            2,
            2,
            [(0, 1, Block::Point), (1, 0, "Av(12)".parse().unwrap())],
        )
        .unwrap();
        Cover::new(b("12"), vec![Rule::empty(), step], 4)
    }

    /// The published five-by-five-and-down cover of Av(321, 2134), with
    /// increasing cells mixing into point rows and columns.
    fn stacked_cover() -> Cover {
        let inc = || "Av(21)".parse::<Block>().unwrap();
        let pt = || Block::Point;
        let rules = vec![
            Rule::empty(),
            Rule::from_sparse(2, 2, [(0, 0, pt()), (1, 1, "Av(321_2134)".parse().unwrap())])
                .unwrap(),
            Rule::from_sparse(3, 3, [(0, 1, pt()), (1, 2, inc()), (2, 0, pt())]).unwrap(),
            Rule::from_sparse(
                5,
                4,
                [(0, 2, inc()), (1, 3, pt()), (2, 0, pt()), (3, 1, inc()), (4, 2, pt())],
            )
            .unwrap(),
            Rule::from_sparse(
                4,
                5,
                [(0, 2, pt()), (1, 3, inc()), (2, 0, pt()), (3, 1, inc()), (3, 4, pt())],
            )
            .unwrap(),
            Rule::from_sparse(
                5,
                5,
                [
                    (0, 2, pt()),
                    (1, 3, inc()),
                    (2, 0, pt()),
                    (3, 1, inc()),
                    (3, 4, pt()),
                    (4, 3, pt()),
                ],
            )
            .unwrap(),
        ];
        Cover::new(b("321_2134"), rules, 6)
    }

    #[test]
    fn stacked_cover_verifies_and_counts() {
        let mut reg = ClassRegistry::new();
        let report =
            crate::cover::verify_cover(&stacked_cover(), 7, reg.cache_mut()).unwrap();
        assert!(report.ok(), "{report:?}");
        let seq = crate::registry::counting_sequence(&stacked_cover(), 8, &mut reg).unwrap();
        assert_eq!(seq.comma_line(), "1,1,2,5,13,30,61,112,190");
    }

    #[test]
    fn seeded_draws_are_deterministic_and_cover_the_class() {
        let mut reg = ClassRegistry::new();
        let cover = fig_cover();
        let draws = sample_uniform(&cover, 4, 11, 5000, &mut reg).unwrap();
        assert_eq!(draws, sample_uniform(&cover, 4, 11, 5000, &mut reg).unwrap());
        let mut freq: HashMap<&Permutation, usize> = HashMap::new();
        for p in &draws {
            *freq.entry(p).or_default() += 1;
        }
        let avoiders = reg.cache_mut().sets(&b("231"), 4).unwrap().at_len(4).to_vec();
        assert_eq!(avoiders.len(), 14);
        for p in &avoiders {
            let got = freq.get(p).copied().unwrap_or(0);
            // Expect 5000/14 ≈ 357; six sigma is about 109.
            assert!((248..=466).contains(&got), "{p} drawn {got} times");
        }
        assert_eq!(freq.len(), 14);
    }

    #[test]
    fn forced_outcomes() {
        let mut reg = ClassRegistry::new();
        for p in sample_uniform(&fig_cover(), 0, 3, 4, &mut reg).unwrap() {
            assert!(p.is_empty());
        }
        for p in sample_uniform(&decreasing_cover(), 5, 9, 4, &mut reg).unwrap() {
            assert_eq!(p.to_string(), "54321");
        }
    }

    #[test]
    fn empty_length_is_an_error() {
        // Av(12, 21) has no members of length 2.
        let cover = Cover::new(b("12_21"), vec![Rule::empty()], 4);
        let mut reg = ClassRegistry::new();
        match sample_uniform(&cover, 2, 1, 1, &mut reg) {
            Err(Error::EmptyClassAtLength { len: 2, .. }) => {}
            other => panic!("expected empty-class error, got {other:?}"),
        }
    }

    #[test]
    fn class_draws_map_back_through_symmetries() {
        let mut reg = ClassRegistry::new();
        reg.register(decreasing_cover()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // canonical({21}) is {12}; the registered cover samples decreasing
        // permutations, so the draw must come back increasing.
        let p = sample_class(&b("21"), 6, &mut reg, &mut rng).unwrap();
        assert_eq!(p.to_string(), "123456");
        let q = sample_class(&b("12"), 6, &mut reg, &mut rng).unwrap();
        assert_eq!(q.to_string(), "654321");
    }

    #[test]
    fn interleavings_are_uniform_within_a_rule() {
        // A column stacking a point over a decreasing cell: at length 4 the
        // gridded objects are 4321, 3421, 3241 and 3214, one gridding each.
        let rule =
            Rule::from_sparse(1, 2, [(0, 0, "Av(12)".parse().unwrap()), (0, 1, Block::Point)])
                .unwrap();
        let mut reg = ClassRegistry::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut freq: HashMap<String, usize> = HashMap::new();
        for _ in 0..2000 {
            let p = sample_rule(&rule, 4, &mut reg, &mut rng).unwrap();
            *freq.entry(p.to_string()).or_default() += 1;
        }
        let mut keys: Vec<&str> = freq.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["3214", "3241", "3421", "4321"]);
        for (p, got) in &freq {
            // Expect 500 each; six sigma is about 116.
            assert!((384..=616).contains(got), "{p} drawn {got} times");
        }
    }

    #[test]
    fn deep_draws_stay_in_class() {
        set_max_perm_len(64).unwrap();
        let mut reg = ClassRegistry::new();
        reg.register(fig_cover()).unwrap();
        reg.register(stacked_cover()).unwrap();
        let p = sample_uniform(&fig_cover(), 40, 17, 1, &mut reg).unwrap().remove(0);
        assert_eq!(p.len(), 40);
        assert!(!p.contains(&"231".parse().unwrap()));
        let q = sample_uniform(&stacked_cover(), 30, 23, 1, &mut reg).unwrap().remove(0);
        assert_eq!(q.len(), 30);
        assert!(!q.contains(&"321".parse().unwrap()));
        assert!(!q.contains(&"2134".parse().unwrap()));
    }

    /// Walk the whole sampling tree of a cover at one length, multiplying
    /// the exact probability of every choice the sampler makes, and return
    /// the distribution over assembled permutations.
    fn tree_distribution(
        cover: &Cover,
        n: usize,
        reg: &mut ClassRegistry,
    ) -> HashMap<Permutation, Ratio<BigUint>> {
        let rule_weights: Vec<BigUint> =
            cover.rules.iter().map(|r| count_rule(r, n, reg).unwrap()).collect();
        let a_n: BigUint = rule_weights.iter().sum();
        let mut dist: HashMap<Permutation, Ratio<BigUint>> = HashMap::new();
        for (ri, rule) in cover.rules.iter().enumerate() {
            if rule_weights[ri].is_zero() {
                continue;
            }
            let p_rule = Ratio::new(rule_weights[ri].clone(), a_n.clone());
            let assigns = size_assignments(rule, n);
            let weights: Vec<BigUint> = assigns
                .iter()
                .map(|s| assignment_weight(rule, s, reg).unwrap())
                .collect();
            let total: BigUint = weights.iter().sum();
            for (ai, sizes) in assigns.iter().enumerate() {
                if weights[ai].is_zero() {
                    continue;
                }
                let p_assign = Ratio::new(weights[ai].clone(), total.clone());
                // Content options per cell, each uniform.
                let mut options: Vec<Vec<Permutation>> = Vec::new();
                for (i, blk) in rule.cells().iter().enumerate() {
                    options.push(match blk {
                        Block::EmptyClass => vec![Permutation::empty()],
                        Block::Point => vec![Permutation::one()],
                        Block::Class(c) => {
                            reg.cache_mut().sets(c, sizes[i]).unwrap().at_len(sizes[i]).to_vec()
                        }
                    });
                }
                let p_contents: Ratio<BigUint> = options
                    .iter()
                    .map(|o| Ratio::new(BigUint::one(), BigUint::from(o.len())))
                    .product();
                let t = rule.width();
                let u = rule.height();
                let colword_sets: Vec<Vec<Vec<usize>>> = (0..t)
                    .map(|x| {
                        multiset_words(&(0..u).map(|y| sizes[y * t + x]).collect::<Vec<_>>())
                    })
                    .collect();
                let rowword_sets: Vec<Vec<Vec<usize>>> = (0..u)
                    .map(|y| {
                        multiset_words(&(0..t).map(|x| sizes[y * t + x]).collect::<Vec<_>>())
                    })
                    .collect();
                let p_words: Ratio<BigUint> = colword_sets
                    .iter()
                    .chain(&rowword_sets)
                    .map(|ws| Ratio::new(BigUint::one(), BigUint::from(ws.len())))
                    .product();
                let leaf = &p_rule * &p_assign * &p_contents * &p_words;
                // Enumerate every joint choice of contents and words.
                let mut content_pick = vec![0usize; options.len()];
                loop {
                    let contents: Vec<&Permutation> =
                        content_pick.iter().enumerate().map(|(i, &j)| &options[i][j]).collect();
                    let mut col_pick = vec![0usize; t];
                    let mut row_pick = vec![0usize; u];
                    loop {
                        let colrefs: Vec<&[usize]> = (0..t)
                            .map(|x| colword_sets[x][col_pick[x]].as_slice())
                            .collect();
                        let rowrefs: Vec<&[usize]> = (0..u)
                            .map(|y| rowword_sets[y][row_pick[y]].as_slice())
                            .collect();
                        let perm = assemble(rule, sizes, &contents, &colrefs, &rowrefs);
                        *dist.entry(perm).or_insert_with(Ratio::zero) += &leaf;
                        if !bump(&mut col_pick, |x| colword_sets[x].len())
                            && !bump(&mut row_pick, |y| rowword_sets[y].len())
                        {
                            break;
                        }
                    }
                    if !bump(&mut content_pick, |i| options[i].len()) {
                        break;
                    }
                }
            }
        }
        dist
    }

    /// Odometer step over mixed radixes; false when the counter wraps.
    fn bump(picks: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
        for (i, p) in picks.iter_mut().enumerate() {
            *p += 1;
            if *p < radix(i) {
                return true;
            }
            *p = 0;
        }
        false
    }

    #[test]
    fn sampling_tree_is_exactly_uniform() {
        let mut reg = ClassRegistry::new();
        for cover in [fig_cover(), layered_cover(), stacked_cover()] {
            for n in 0..=5usize {
                let dist = tree_distribution(&cover, n, &mut reg);
                let members = reg.cache_mut().sets(&cover.basis, n).unwrap().at_len(n).to_vec();
                assert_eq!(dist.len(), members.len(), "{} at {n}", cover.basis);
                let uniform = Ratio::new(BigUint::one(), BigUint::from(members.len()));
                for p in &members {
                    assert_eq!(dist[p], uniform, "P({p}) in {} at {n}", cover.basis);
                }
            }
        }
    }
}
