//! Block sets: the building material for rules, and their containment poset.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// One block: the empty class {eps}, the single point {1}, or an infinite
/// class Av(B') cut out by a canonical antichain basis.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    EmptyClass,
    Point,
    Class(Basis),
}

impl Block {
    pub fn is_class(&self) -> bool {
        matches!(self, Block::Class(_))
    }

    pub fn class_basis(&self) -> Option<&Basis> {
        match self {
            Block::Class(b) => Some(b),
            _ => None,
        }
    }

    /// Label used in block-set listings: "eps", "point", "Av(...)".
    pub fn label(&self) -> String {
        match self {
            Block::EmptyClass => "eps".into(),
            Block::Point => "point".into(),
            Block::Class(b) => format!("Av({b})"),
        }
    }

    /// Label used inside rule cells: "pt" or "Av(...)"; empty cells are
    /// simply absent there.
    pub fn cell_label(&self) -> String {
        match self {
            Block::EmptyClass => "".into(),
            Block::Point => "pt".into(),
            Block::Class(b) => format!("Av({b})"),
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for Block {
    type Err = Error;

    /// Accepts "eps", "point", "pt", and "Av(<basis>)".
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "eps" | "" => Ok(Block::EmptyClass),
            "point" | "pt" => Ok(Block::Point),
            _ => {
                let inner = s
                    .strip_prefix("Av(")
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| Error::Msg(format!("unrecognized block literal {s:?}")))?;
                Ok(Block::Class(inner.parse()?))
            }
        }
    }
}

/// All blocks usable when conjecturing the structure of Av(root).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockSet {
    root: Basis,
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct BlockSetDto {
    root: String,
    blocks: Vec<String>,
}

impl BlockSet {
    pub fn root(&self) -> &Basis {
        &self.root
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn class_blocks(&self) -> impl Iterator<Item = &Basis> {
        self.blocks.iter().filter_map(|b| b.class_basis())
    }

    pub fn has_point(&self) -> bool {
        self.blocks.contains(&Block::Point)
    }

    pub fn to_json(&self) -> String {
        let dto = BlockSetDto {
            root: self.root.to_string(),
            blocks: self.blocks.iter().map(|b| b.label()).collect(),
        };
        serde_json::to_string(&dto).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dto: BlockSetDto = serde_json::from_str(s)?;
        let root: Basis = dto.root.parse()?;
        let mut blocks = Vec::new();
        for b in &dto.blocks {
            blocks.push(b.parse::<Block>()?);
        }
        blocks.sort();
        blocks.dedup();
        Ok(BlockSet { root, blocks })
    }
}

/// Default depth of the infiniteness heuristic: longest pattern length + 2.
pub fn default_heuristic_depth(basis: &Basis) -> usize {
    basis.max_pattern_len() + 2
}

/// Compute the block set of a basis.
///
/// Class blocks are the antichains B' of nonempty, non-point subpatterns of
/// the basis that meet the subpattern set of every basis pattern (which is
/// equivalent to Av(B') being a subclass of Av(basis)), kept when Av(B') is
/// still nonempty at the heuristic depth. The empty class is always present;
/// the point is present when the basis admits it. The root class itself
/// qualifies through B' = basis whenever it passes the heuristic.
pub fn block_set(basis: &Basis, cache: &mut ClassCache) -> Result<BlockSet> {
    block_set_with_depth(basis, default_heuristic_depth(basis), cache)
}

pub fn block_set_with_depth(
    basis: &Basis,
    heuristic_depth: usize,
    cache: &mut ClassCache,
) -> Result<BlockSet> {
    // Candidate patterns, in canonical order (shortest first).
    let mut cand_set: BTreeSet<Permutation> = BTreeSet::new();
    for p in basis.patterns() {
        for q in p.subpatterns() {
            if q.len() >= 2 {
                cand_set.insert(q);
            }
        }
    }
    let cands: Vec<Permutation> = cand_set.into_iter().collect();

    // cand_hits[j][i]: candidate j is a subpattern of basis pattern i.
    let cand_hits: Vec<Vec<bool>> = cands
        .iter()
        .map(|c| basis.patterns().iter().map(|p| p.contains(c)).collect())
        .collect();
    // cand_above[j][k]: candidate j contains candidate k (only possible for
    // k earlier in the shortest-first order).
    let cand_above: Vec<Vec<bool>> = cands
        .iter()
        .map(|c| cands.iter().map(|d| *d != *c && c.contains(d)).collect())
        .collect();

    let mut found: BTreeSet<Basis> = BTreeSet::new();
    let mut chosen: Vec<usize> = Vec::new();
    let mut hit: Vec<bool> = vec![false; basis.len()];
    enumerate_antichains(
        0,
        &mut chosen,
        &mut hit,
        &cands,
        &cand_hits,
        &cand_above,
        &mut found,
    );

    let mut blocks: Vec<Block> = vec![Block::EmptyClass];
    if basis.admits_point() {
        blocks.push(Block::Point);
    }
    for b in found {
        // Infiniteness heuristic: downward closure means one permutation at
        // the heuristic depth forces one at every smaller length.
        if cache.sets(&b, heuristic_depth)?.count(heuristic_depth) > 0 {
            blocks.push(Block::Class(b));
        }
    }
    blocks.sort();
    Ok(BlockSet { root: basis.clone(), blocks })
}

fn enumerate_antichains(
    i: usize,
    chosen: &mut Vec<usize>,
    hit: &mut Vec<bool>,
    cands: &[Permutation],
    cand_hits: &[Vec<bool>],
    cand_above: &[Vec<bool>],
    found: &mut BTreeSet<Basis>,
) {
    // Feasibility: every still-unhit basis pattern must be hittable by some
    // remaining candidate compatible with the chosen antichain.
    for (pi, h) in hit.iter().enumerate() {
        if !*h {
            let reachable = (i..cands.len()).any(|j| {
                cand_hits[j][pi] && chosen.iter().all(|&c| !cand_above[j][c])
            });
            if !reachable {
                return;
            }
        }
    }
    if hit.iter().all(|h| *h) {
        let b = Basis::new(chosen.iter().map(|&c| cands[c].clone()))
            .expect("antichain by construction");
        found.insert(b);
        // Larger antichains are still blocks; keep extending.
    }
    if i == cands.len() {
        return;
    }
    enumerate_antichains(i + 1, chosen, hit, cands, cand_hits, cand_above, found);
    // Candidates are shortest-first, so the only comparability with already
    // chosen patterns is the new one containing an old one.
    if chosen.iter().all(|&c| !cand_above[i][c]) {
        let newly: Vec<usize> = (0..hit.len())
            .filter(|&pi| !hit[pi] && cand_hits[i][pi])
            .collect();
        chosen.push(i);
        for &pi in &newly {
            hit[pi] = true;
        }
        enumerate_antichains(i + 1, chosen, hit, cands, cand_hits, cand_above, found);
        for &pi in &newly {
            hit[pi] = false;
        }
        chosen.pop();
    }
}

/// Containment of block contents as sets: true iff everything in block `b`
/// lies in block `a`.
///
/// For two classes this is exact without enumeration: Av(B_b) is a subclass
/// of Av(B_a) iff every pattern of B_a contains some pattern of B_b. The
/// point lies in every class block (their bases never contain 1); the empty
/// class lies below everything by convention.
pub fn class_contains(a: &Block, b: &Block) -> bool {
    match (a, b) {
        (_, Block::EmptyClass) => true,
        (Block::EmptyClass, _) => false,
        (Block::Point, Block::Point) => true,
        (Block::Point, Block::Class(_)) => false,
        (Block::Class(ba), Block::Point) => ba.admits_point(),
        (Block::Class(ba), Block::Class(bb)) => ba
            .patterns()
            .iter()
            .all(|p| bb.patterns().iter().any(|q| p.contains(q))),
    }
}

/// Containment poset over a block set, stored as a full relation matrix.
#[derive(Clone)]
pub struct BlockPoset {
    blocks: Vec<Block>,
    /// le[i][j]: the contents of block i are a subset of block j's.
    le: Vec<Vec<bool>>,
}

impl BlockPoset {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn index_of(&self, b: &Block) -> Option<usize> {
        self.blocks.iter().position(|x| x == b)
    }

    pub fn le(&self, i: usize, j: usize) -> bool {
        self.le[i][j]
    }

    /// Indices of blocks whose contents include block i's (including i).
    pub fn supersets_of(&self, i: usize) -> Vec<usize> {
        (0..self.blocks.len()).filter(|&j| self.le[i][j]).collect()
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&i| (0..self.blocks.len()).all(|j| j == i || !self.le[j][i]))
            .collect()
    }

    /// Upper covers of i: minimal blocks strictly above it.
    pub fn covers_of(&self, i: usize) -> Vec<usize> {
        let above: Vec<usize> =
            (0..self.blocks.len()).filter(|&j| j != i && self.le[i][j]).collect();
        above
            .iter()
            .copied()
            .filter(|&j| !above.iter().any(|&k| k != j && self.le[k][j]))
            .collect()
    }

    /// A linear extension, smallest blocks first.
    pub fn topo_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.blocks.len()).collect();
        // Sorting by the number of elements below is a valid linear
        // extension of any finite poset; ties broken by block order.
        idx.sort_by_key(|&i| ((0..self.blocks.len()).filter(|&j| self.le[j][i]).count(), i));
        idx
    }
}

/// Build the containment poset of a block set.
pub fn build_poset(bs: &BlockSet) -> BlockPoset {
    let blocks = bs.blocks().to_vec();
    let le = blocks
        .iter()
        .map(|i| blocks.iter().map(|j| class_contains(j, i)).collect())
        .collect();
    BlockPoset { blocks, le }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Basis {
        s.parse().unwrap()
    }

    fn labels(bs: &BlockSet) -> Vec<String> {
        bs.blocks().iter().map(|x| x.label()).collect()
    }

    #[test]
    fn block_set_of_231() {
        let mut cache = ClassCache::new();
        let bs = block_set(&b("231"), &mut cache).unwrap();
        assert_eq!(labels(&bs), vec!["eps", "point", "Av(12)", "Av(21)", "Av(231)"]);
    }

    #[test]
    fn block_set_of_12() {
        let mut cache = ClassCache::new();
        let bs = block_set(&b("12"), &mut cache).unwrap();
        assert_eq!(labels(&bs), vec!["eps", "point", "Av(12)"]);
    }

    #[test]
    fn finite_classes_are_rejected() {
        let mut cache = ClassCache::new();
        let bs = block_set(&b("12_21"), &mut cache).unwrap();
        // Av(12,21) is finite, so no class block survives; 1 still avoids.
        assert_eq!(labels(&bs), vec!["eps", "point"]);
    }

    #[test]
    fn nested_antichains_are_found() {
        // Both {132} and {213} hit every subpattern set of {1324}, and the
        // extension {132,213} is an infinite class in its own right.
        let mut cache = ClassCache::new();
        let bs = block_set(&b("1324"), &mut cache).unwrap();
        let want: Block = "Av(132_213)".parse().unwrap();
        assert!(bs.blocks().contains(&want), "{:?}", labels(&bs));
    }

    #[test]
    fn class_containment_examples() {
        let av231 = Block::Class(b("231"));
        let av12 = Block::Class(b("12"));
        let av21 = Block::Class(b("21"));
        assert!(class_contains(&av231, &av12));
        for x in [&av231, &av12, &Block::Point, &Block::EmptyClass] {
            assert!(class_contains(x, x));
        }
        assert!(!class_contains(&av12, &av21));
        assert!(!class_contains(&av21, &av12));
        assert!(class_contains(&av12, &Block::Point));
        assert!(!class_contains(&Block::Point, &av12));
    }

    #[test]
    fn poset_of_231_blocks() {
        let mut cache = ClassCache::new();
        let bs = block_set(&b("231"), &mut cache).unwrap();
        let poset = build_poset(&bs);
        let i12 = poset.index_of(&"Av(12)".parse().unwrap()).unwrap();
        let i21 = poset.index_of(&"Av(21)".parse().unwrap()).unwrap();
        let i231 = poset.index_of(&"Av(231)".parse().unwrap()).unwrap();
        let ieps = poset.index_of(&Block::EmptyClass).unwrap();
        // Av(231) is the unique maximum among class blocks.
        assert!(poset.le(i12, i231) && poset.le(i21, i231));
        assert!(!poset.le(i12, i21) && !poset.le(i21, i12));
        for j in 0..poset.blocks().len() {
            assert!(poset.le(ieps, j));
        }
        assert_eq!(poset.minimal_elements(), vec![ieps]);
        // Matrix is a partial order.
        let n = poset.blocks().len();
        for i in 0..n {
            assert!(poset.le(i, i));
            for j in 0..n {
                if i != j && poset.le(i, j) {
                    assert!(!poset.le(j, i), "antisymmetry {i} {j}");
                }
                for k in 0..n {
                    if poset.le(i, j) && poset.le(j, k) {
                        assert!(poset.le(i, k), "transitivity {i} {j} {k}");
                    }
                }
            }
        }
        // Linear extension respects the order.
        let topo = poset.topo_order();
        for (a, &i) in topo.iter().enumerate() {
            for &j in &topo[a + 1..] {
                assert!(!(poset.le(j, i) && i != j));
            }
        }
    }

    #[test]
    fn blockset_json_round_trip() {
        let mut cache = ClassCache::new();
        let bs = block_set(&b("231"), &mut cache).unwrap();
        let js = bs.to_json();
        assert!(js.contains("\"root\":\"231\""));
        assert!(js.contains("\"eps\""));
        let back = BlockSet::from_json(&js).unwrap();
        assert_eq!(back, bs);
    }

    #[test]
    fn no_duplicate_blocks() {
        let mut cache = ClassCache::new();
        for s in ["231", "321_2134", "123_231", "132"] {
            let bs = block_set(&b(s), &mut cache).unwrap();
            let set: BTreeSet<&Block> = bs.blocks().iter().collect();
            assert_eq!(set.len(), bs.blocks().len());
        }
    }
}
