//! Exact minimum disjoint covers of a class truncated at a solve depth,
//! deep re-verification of found covers, and a DIMACS export of the
//! exactly-one constraints for external solvers.

use std::collections::HashMap;
use std::time::Instant;

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::grid::{grid_perms, rule_subset_certified};
use crate::perm::Permutation;
use crate::rule::Rule;

/// Fixed-width bit set over a universe of known size.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Remove the members of `other`; used to undo a disjoint union.
    pub fn difference_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn is_full(&self) -> bool {
        self.count_ones() == self.len
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }
}

/// A cover-search problem: the class truncated at the solve depth, and one
/// candidate bit set per rule recording exactly which of those permutations
/// the rule generates.
#[derive(Clone, Debug)]
pub struct CoverInstance {
    basis: Basis,
    depth: usize,
    universe: Vec<Permutation>,
    rules: Vec<Rule>,
    candidates: Vec<BitSet>,
}

impl CoverInstance {
    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn universe(&self) -> &[Permutation] {
        &self.universe
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn candidates(&self) -> &[BitSet] {
        &self.candidates
    }

    /// Assemble an instance from pre-computed candidate sets. The rules must
    /// already be in canonical order and each bit set must equal the rule's
    /// coverage of the universe; the cover search relies on both.
    pub(crate) fn from_parts(
        basis: Basis,
        depth: usize,
        universe: Vec<Permutation>,
        rules: Vec<Rule>,
        candidates: Vec<BitSet>,
    ) -> Self {
        debug_assert!(rules.windows(2).all(|w| w[0] < w[1]));
        CoverInstance { basis, depth, universe, rules, candidates }
    }
}

/// The class's permutations up to `depth`, flattened over lengths starting
/// at the empty permutation, in a deterministic order.
pub(crate) fn universe_of(
    basis: &Basis,
    depth: usize,
    cache: &mut ClassCache,
) -> Result<Vec<Permutation>> {
    cache.ensure(basis, depth)?;
    let sets = cache.get(basis);
    let mut universe = Vec::new();
    for n in 0..=depth {
        universe.extend(sets.at_len(n).iter().cloned());
    }
    Ok(universe)
}

/// Build the search problem for a rule pool. Rules are sorted into canonical
/// order and exact duplicates dropped, so identical inputs yield identical
/// instances regardless of pool order. A rule that generates a permutation
/// twice or one outside the class violates the validity precondition and is
/// rejected.
pub fn build_instance(
    basis: &Basis,
    rules: &[Rule],
    depth: usize,
    cache: &mut ClassCache,
) -> Result<CoverInstance> {
    let universe = universe_of(basis, depth, cache)?;
    let index: HashMap<&Permutation, usize> =
        universe.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut sorted: Vec<Rule> = rules.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut candidates = Vec::with_capacity(sorted.len());
    for rule in &sorted {
        let mut bits = BitSet::new(universe.len());
        for by_len in grid_perms(rule, depth, cache)? {
            for (p, mult) in by_len {
                if mult > 1 {
                    return Err(Error::BadRule(format!(
                        "rule {rule} grids {p} in {mult} ways at depth {depth}"
                    )));
                }
                match index.get(&p) {
                    Some(&i) => bits.set(i),
                    None => {
                        return Err(Error::BadRule(format!(
                            "rule {rule} generates {p}, which is outside the class"
                        )))
                    }
                }
            }
        }
        candidates.push(bits);
    }
    Ok(CoverInstance { basis: basis.clone(), depth, universe, rules: sorted, candidates })
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub max_nodes: u64,
    /// Rule-index sets that must not all be selected together. Singletons
    /// ban a rule outright; pairs encode observed deep overlaps.
    pub forbidden: Vec<Vec<usize>>,
    /// Wall-clock stop, checked every few thousand nodes.
    pub deadline: Option<Instant>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { max_nodes: 20_000_000, forbidden: Vec::new(), deadline: None }
    }
}

/// Outcome of a cover search: a minimum cover, a proof of none at this
/// depth and pool, or a budget stop that decides neither.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SolveOutcome {
    /// Selected rule indices into the instance, ascending.
    Cover(Vec<usize>),
    NoCover,
    Unknown { explored: u64 },
}

struct Search<'a> {
    inst: &'a CoverInstance,
    cands_of: Vec<Vec<usize>>,
    forbidden: &'a [Vec<usize>],
    covered: BitSet,
    chosen: Vec<usize>,
    chosen_mask: Vec<bool>,
    limit: usize,
    nodes: u64,
    max_nodes: u64,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a CoverInstance, cfg: &'a SolveConfig) -> Self {
        let mut cands_of = vec![Vec::new(); inst.universe.len()];
        for (r, bits) in inst.candidates.iter().enumerate() {
            for e in bits.iter_ones() {
                cands_of[e].push(r);
            }
        }
        Search {
            inst,
            cands_of,
            forbidden: &cfg.forbidden,
            covered: BitSet::new(inst.universe.len()),
            chosen: Vec::new(),
            chosen_mask: vec![false; inst.rules.len()],
            limit: usize::MAX,
            nodes: 0,
            max_nodes: cfg.max_nodes,
            deadline: cfg.deadline,
        }
    }

    fn reset(&mut self) {
        self.covered = BitSet::new(self.inst.universe.len());
        self.chosen.clear();
        self.chosen_mask.iter_mut().for_each(|b| *b = false);
    }

    /// True iff selecting `r` would complete some forbidden set.
    fn blocked(&self, r: usize) -> bool {
        self.forbidden
            .iter()
            .any(|f| f.contains(&r) && f.iter().all(|&x| x == r || self.chosen_mask[x]))
    }

    /// Complete search for one exact cover within the size limit, branching
    /// on the uncovered element with the fewest viable candidates. On
    /// success the selection is left on the chosen stack.
    fn dfs(&mut self) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::Budget { what: "cover-search nodes", explored: self.nodes as usize });
        }
        if self.nodes & 0x1FFF == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Error::Budget { what: "deadline", explored: self.nodes as usize });
                }
            }
        }
        if self.covered.is_full() {
            return Ok(true);
        }
        if self.chosen.len() >= self.limit {
            return Ok(false);
        }
        let mut pick: Option<(usize, Vec<usize>)> = None;
        for e in 0..self.inst.universe.len() {
            if self.covered.get(e) {
                continue;
            }
            let viable: Vec<usize> = self.cands_of[e]
                .iter()
                .copied()
                .filter(|&r| {
                    self.inst.candidates[r].is_disjoint(&self.covered) && !self.blocked(r)
                })
                .collect();
            if viable.is_empty() {
                return Ok(false);
            }
            let better = pick.as_ref().is_none_or(|(_, v)| viable.len() < v.len());
            if better {
                let single = viable.len() == 1;
                pick = Some((e, viable));
                if single {
                    break;
                }
            }
        }
        let (_, viable) = pick.expect("some element is uncovered");
        for r in viable {
            self.chosen.push(r);
            self.chosen_mask[r] = true;
            self.covered.union_with(&self.inst.candidates[r]);
            if self.dfs()? {
                return Ok(true);
            }
            self.covered.difference_with(&self.inst.candidates[r]);
            self.chosen_mask[r] = false;
            self.chosen.pop();
        }
        Ok(false)
    }
}

/// Search for an exact partition of the truncated class by candidate sets,
/// minimizing the number of selected rules. Existence is decided first by a
/// complete depth-first search; a found cover is then improved by iterative
/// deepening on the cover size, so the first success is minimum. Ties break
/// toward canonically smaller rules. A budget stop before existence is
/// decided reports `Unknown`; after a cover is in hand it returns the best
/// cover found.
pub fn solve_min_cover(inst: &CoverInstance, cfg: &SolveConfig) -> SolveOutcome {
    let mut s = Search::new(inst, cfg);
    match s.dfs() {
        Err(_) => return SolveOutcome::Unknown { explored: s.nodes },
        Ok(false) => return SolveOutcome::NoCover,
        Ok(true) => {}
    }
    let mut best = s.chosen.clone();
    for k in 1..best.len() {
        s.reset();
        s.limit = k;
        match s.dfs() {
            Err(_) => break,
            Ok(true) => {
                best = s.chosen.clone();
                break;
            }
            Ok(false) => {}
        }
    }
    best.sort_unstable();
    SolveOutcome::Cover(best)
}

/// A conjectured structure: disjoint rules whose union matches the class on
/// every length up to the checked depths.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cover {
    pub basis: Basis,
    pub rules: Vec<Rule>,
    pub depth_solved: usize,
    pub depth_verified: usize,
}

impl Cover {
    pub fn new(basis: Basis, rules: Vec<Rule>, depth_solved: usize) -> Self {
        Cover { basis, rules, depth_solved, depth_verified: depth_solved }
    }

    pub fn to_json(&self) -> String {
        // Assembled by hand so the rule objects keep their field order.
        let rules: Vec<String> = self.rules.iter().map(|r| r.to_json()).collect();
        format!(
            "{{\"basis\":\"{}\",\"depth_solved\":{},\"depth_verified\":{},\"rules\":[{}]}}",
            self.basis,
            self.depth_solved,
            self.depth_verified,
            rules.join(",")
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let field = |k: &str| {
            v.get(k).ok_or_else(|| Error::Msg(format!("cover JSON is missing \"{k}\"")))
        };
        let basis: Basis = field("basis")?
            .as_str()
            .ok_or_else(|| Error::Msg("cover basis must be a string".into()))?
            .parse()?;
        let depth = |k: &str| -> Result<usize> {
            Ok(field(k)?
                .as_u64()
                .ok_or_else(|| Error::Msg(format!("cover {k} must be an integer")))?
                as usize)
        };
        let depth_solved = depth("depth_solved")?;
        let depth_verified = depth("depth_verified")?;
        let rules = field("rules")?
            .as_array()
            .ok_or_else(|| Error::Msg("cover rules must be an array".into()))?
            .iter()
            .map(|r| Rule::from_json(&r.to_string()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Cover { basis, rules, depth_solved, depth_verified })
    }
}

/// A permutation gridded by two selected rules, or twice by one (then both
/// indices are equal).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DupWitness {
    pub rules: (usize, usize),
    pub perm: Permutation,
}

/// Result of re-checking a cover at some depth. The check is length by
/// length; it never proves the conjecture, but `certified` upgrades the
/// containment direction: every rule's permutations provably lie in the
/// class at all lengths, leaving only completeness conjectural.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VerifyReport {
    pub depth: usize,
    /// Class members no selected rule generates, in length order.
    pub missing: Vec<Permutation>,
    /// Permutations generated more than once, with the offending rules.
    pub duplicated: Vec<DupWitness>,
    /// Permutations a rule generates outside the class.
    pub foreign: Vec<(usize, Permutation)>,
    pub certified: bool,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.missing.is_empty() && self.duplicated.is_empty() && self.foreign.is_empty()
    }
}

/// Regenerate every rule of the cover up to length `v` and compare the
/// union, with multiplicity, against the class itself.
pub fn verify_cover(cover: &Cover, v: usize, cache: &mut ClassCache) -> Result<VerifyReport> {
    cache.ensure(&cover.basis, v)?;
    let mut report = VerifyReport {
        depth: v,
        missing: Vec::new(),
        duplicated: Vec::new(),
        foreign: Vec::new(),
        certified: false,
    };
    let by_rule: Vec<_> = cover
        .rules
        .iter()
        .map(|r| grid_perms(r, v, cache))
        .collect::<Result<Vec<_>>>()?;
    for n in 0..=v {
        let mut generated: HashMap<&Permutation, Vec<usize>> = HashMap::new();
        for (i, maps) in by_rule.iter().enumerate() {
            for (p, &mult) in &maps[n] {
                let owners = generated.entry(p).or_default();
                for _ in 0..mult {
                    owners.push(i);
                }
            }
        }
        let class = cache.get(&cover.basis);
        for p in class.at_len(n) {
            if !generated.contains_key(p) {
                report.missing.push(p.clone());
            }
        }
        let mut seen: Vec<_> = generated.into_iter().collect();
        seen.sort_unstable_by(|a, b| a.0.cmp(b.0));
        for (p, owners) in seen {
            if owners.len() > 1 {
                report
                    .duplicated
                    .push(DupWitness { rules: (owners[0], owners[1]), perm: p.clone() });
            }
            if !class.contains_perm(p) {
                report.foreign.push((owners[0], p.clone()));
            }
        }
    }
    if report.ok() {
        report.certified = cover
            .rules
            .iter()
            .map(|r| rule_subset_certified(r, &cover.basis, cache))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .all(|c| c);
    }
    Ok(report)
}

/// Render the instance as DIMACS CNF: one variable per rule, and for every
/// universe element one at-least-one clause plus pairwise at-most-one
/// clauses over the rules covering it, so models are exactly the disjoint
/// covers. An uncoverable element yields an empty clause.
pub fn export_cnf(inst: &CoverInstance) -> String {
    let nrules = inst.rules.len();
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    for e in 0..inst.universe.len() {
        let cands: Vec<i64> = (0..nrules)
            .filter(|&r| inst.candidates[r].get(e))
            .map(|r| r as i64 + 1)
            .collect();
        for i in 0..cands.len() {
            for j in i + 1..cands.len() {
                clauses.push(vec![-cands[i], -cands[j]]);
            }
        }
        clauses.push(cands);
    }
    let mut out = String::new();
    out.push_str(&format!(
        "c exactly-one disjoint cover instance: Av({}) up to length {}, {} permutations\n",
        inst.basis,
        inst.depth,
        inst.universe.len()
    ));
    for (r, rule) in inst.rules.iter().enumerate() {
        out.push_str(&format!("c var {} = rule {}\n", r + 1, rule.encoding()));
    }
    out.push_str(&format!("p cnf {} {}\n", nrules, clauses.len()));
    for clause in &clauses {
        for lit in clause {
            out.push_str(&format!("{lit} "));
        }
        out.push_str("0\n");
    }
    out
}
