//! The end-to-end conjecture loop: build the block set, generate rule
//! pools of growing dimension, solve for a minimum disjoint cover of the
//! truncated class, and re-verify deeper before accepting.
//!
//! A cover that solves the truncated instance but fails deep verification
//! is not discarded wholesale: each witness is turned into the sharpest
//! constraint it supports (a rule that grids something twice or escapes
//! the class is banned outright, a deep overlap between two rules forbids
//! the pair, a missing permutation forbids only the failed selection) and
//! the solver runs again. A level is abandoned only when the constrained
//! search proves no selection from its pool verifies.
//!
//! When that loop stalls on a node or round budget, the level is settled
//! by one decisive solve of the instance built directly at the verify
//! depth: a cover found there is verified by construction, and
//! unsatisfiability is a proof that the level has no cover at all. The
//! shallow loop stays the primary path because the decisive pool costs a
//! deeper generation pass.

use std::collections::HashMap;
use std::time::Instant;

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::block::{block_set, build_poset, BlockPoset, BlockSet};
use crate::cover::{
    solve_min_cover, universe_of, verify_cover, BitSet, Cover, CoverInstance, SolveConfig,
    SolveOutcome,
};
use crate::error::{Error, Result};
use crate::gen::{generate_rules_with, GenConfig};
use crate::perm::Permutation;
use crate::rule::Rule;

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub max_width: usize,
    pub max_height: usize,
    /// Pool validity depth and cover-instance depth.
    pub solve_depth: usize,
    /// Depth a solved cover must survive before it is reported.
    pub verify_depth: usize,
    pub max_gen_nodes: u64,
    pub max_solve_nodes: u64,
    /// Solve-verify-block iterations allowed per dimension level.
    pub max_block_rounds: usize,
    /// Wall-clock stop for batch use.
    pub deadline: Option<Instant>,
}

impl PipelineConfig {
    /// Defaults scale with the longest basis pattern: rules up to
    /// (l+1)x(l+1), solved at depth l+2, verified at depth l+4.
    pub fn for_basis(basis: &Basis) -> Self {
        let l = basis.max_pattern_len();
        PipelineConfig {
            max_width: l + 1,
            max_height: l + 1,
            solve_depth: l + 2,
            verify_depth: l + 4,
            max_gen_nodes: 2_000_000_000,
            max_solve_nodes: 20_000_000,
            max_block_rounds: 1024,
            deadline: None,
        }
    }

    pub fn with_dims(mut self, w: usize, h: usize) -> Self {
        self.max_width = w;
        self.max_height = h;
        self
    }

    pub fn with_depths(mut self, solve: usize, verify: usize) -> Self {
        self.solve_depth = solve;
        self.verify_depth = verify;
        self
    }

    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }
}

/// Result of a conjecture run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ConjectureOutcome {
    Found(Cover),
    /// Every pool up to the configured dimensions was exhausted: no
    /// selection of valid rules covers the class to the verify depth.
    None { rules_seen: usize },
    /// A budget (nodes, rounds or deadline) stopped the search first.
    Unknown { what: &'static str, explored: usize },
}

pub(crate) enum LevelOutcome {
    Found(Cover),
    Exhausted,
    Budget { what: &'static str, explored: usize },
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Conjecture a cover of Av(basis), widening the rule dimensions one level
/// at a time so the first success has the smallest maximum dimension.
pub fn conjecture(
    basis: &Basis,
    cfg: &PipelineConfig,
    cache: &mut ClassCache,
) -> Result<ConjectureOutcome> {
    let blocks = block_set(basis, cache)?;
    let poset = build_poset(&blocks);
    let mut rules_seen = 0usize;
    for level in 1..=cfg.max_width.max(cfg.max_height) {
        let (w, h) = (level.min(cfg.max_width), level.min(cfg.max_height));
        let inst = match level_instance(basis, &blocks, &poset, w, h, cfg.solve_depth, cfg, cache)?
        {
            PoolBuild::Ready(inst) => inst,
            PoolBuild::Budget { what, explored } => {
                return Ok(ConjectureOutcome::Unknown { what, explored })
            }
        };
        rules_seen = inst.rules().len();
        match solve_verified(&inst, cfg, cache)? {
            LevelOutcome::Found(cover) => return Ok(ConjectureOutcome::Found(cover)),
            LevelOutcome::Exhausted => {}
            LevelOutcome::Budget { what, explored } if what == "deadline" => {
                return Ok(ConjectureOutcome::Unknown { what, explored })
            }
            LevelOutcome::Budget { .. } => {
                match decisive_level(basis, &blocks, &poset, w, h, cfg, cache)? {
                    LevelOutcome::Found(cover) => return Ok(ConjectureOutcome::Found(cover)),
                    LevelOutcome::Exhausted => {}
                    LevelOutcome::Budget { what, explored } => {
                        return Ok(ConjectureOutcome::Unknown { what, explored })
                    }
                }
            }
        }
    }
    Ok(ConjectureOutcome::None { rules_seen })
}

enum PoolBuild {
    Ready(CoverInstance),
    Budget { what: &'static str, explored: usize },
}

/// Generate the active rule pool for one dimension level and wrap it as a
/// cover instance at `depth`.
#[allow(clippy::too_many_arguments)]
fn level_instance(
    basis: &Basis,
    blocks: &BlockSet,
    poset: &BlockPoset,
    w: usize,
    h: usize,
    depth: usize,
    cfg: &PipelineConfig,
    cache: &mut ClassCache,
) -> Result<PoolBuild> {
    let universe = universe_of(basis, depth, cache)?;
    let index: HashMap<&Permutation, usize> =
        universe.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let gcfg = {
        let mut g = GenConfig::for_basis(basis).with_dims(w, h).with_depth(depth).active_only();
        g.max_nodes = cfg.max_gen_nodes;
        g
    };
    let mut pool: Vec<(Rule, BitSet)> = Vec::new();
    let deadline = cfg.deadline;
    let generated = generate_rules_with(blocks, poset, &gcfg, cache, |rule, coverage| {
        if expired(deadline) {
            return Err(Error::Budget { what: "deadline", explored: pool.len() });
        }
        let mut bits = BitSet::new(universe.len());
        for p in coverage {
            bits.set(index[p]);
        }
        pool.push((rule, bits));
        Ok(())
    });
    match generated {
        Ok(_) => {}
        Err(Error::Budget { what, explored }) => return Ok(PoolBuild::Budget { what, explored }),
        Err(e) => return Err(e),
    }
    pool.sort_by(|a, b| a.0.cmp(&b.0));
    drop(index);
    let (rules, candidates): (Vec<Rule>, Vec<BitSet>) = pool.into_iter().unzip();
    Ok(PoolBuild::Ready(CoverInstance::from_parts(
        basis.clone(),
        depth,
        universe,
        rules,
        candidates,
    )))
}

/// The stall breaker for one level: solve the instance built at the
/// verify depth, where the shallow loop's failure modes cannot occur. No
/// selection ban is carried over; every ban was justified by a witness at
/// or below the verify depth, which this instance rules out structurally.
fn decisive_level(
    basis: &Basis,
    blocks: &BlockSet,
    poset: &BlockPoset,
    w: usize,
    h: usize,
    cfg: &PipelineConfig,
    cache: &mut ClassCache,
) -> Result<LevelOutcome> {
    if expired(cfg.deadline) {
        return Ok(LevelOutcome::Budget { what: "deadline", explored: 0 });
    }
    let inst = match level_instance(basis, blocks, poset, w, h, cfg.verify_depth, cfg, cache)? {
        PoolBuild::Ready(inst) => inst,
        PoolBuild::Budget { what, explored } => {
            return Ok(LevelOutcome::Budget { what, explored })
        }
    };
    let scfg = SolveConfig {
        max_nodes: cfg.max_solve_nodes,
        forbidden: Vec::new(),
        deadline: cfg.deadline,
    };
    match solve_min_cover(&inst, &scfg) {
        SolveOutcome::NoCover => Ok(LevelOutcome::Exhausted),
        SolveOutcome::Unknown { explored } => {
            let what = if expired(cfg.deadline) { "deadline" } else { "cover-search nodes" };
            Ok(LevelOutcome::Budget { what, explored: explored as usize })
        }
        SolveOutcome::Cover(selected) => {
            let mut cover = Cover::new(
                basis.clone(),
                selected.iter().map(|&r| inst.rules()[r].clone()).collect(),
                inst.depth(),
            );
            let report = verify_cover(&cover, cfg.verify_depth, cache)?;
            if !report.ok() {
                return Err(Error::Msg(
                    "exact cover at the verify depth failed its own re-verification".into(),
                ));
            }
            cover.depth_verified = cfg.verify_depth;
            Ok(LevelOutcome::Found(cover))
        }
    }
}

/// Solve one instance to a deeply verified cover, blocking failed
/// selections as described on the module.
pub(crate) fn solve_verified(
    inst: &CoverInstance,
    cfg: &PipelineConfig,
    cache: &mut ClassCache,
) -> Result<LevelOutcome> {
    let mut scfg = SolveConfig {
        max_nodes: cfg.max_solve_nodes,
        forbidden: Vec::new(),
        deadline: cfg.deadline,
    };
    for round in 0..cfg.max_block_rounds {
        if expired(cfg.deadline) {
            return Ok(LevelOutcome::Budget { what: "deadline", explored: round });
        }
        let selected = match solve_min_cover(inst, &scfg) {
            SolveOutcome::NoCover => return Ok(LevelOutcome::Exhausted),
            SolveOutcome::Unknown { explored } => {
                let what = if expired(cfg.deadline) { "deadline" } else { "cover-search nodes" };
                return Ok(LevelOutcome::Budget { what, explored: explored as usize });
            }
            SolveOutcome::Cover(sel) => sel,
        };
        let mut cover = Cover::new(
            inst.basis().clone(),
            selected.iter().map(|&r| inst.rules()[r].clone()).collect(),
            inst.depth(),
        );
        let report = verify_cover(&cover, cfg.verify_depth, cache)?;
        if report.ok() {
            cover.depth_verified = cfg.verify_depth;
            return Ok(LevelOutcome::Found(cover));
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for d in &report.duplicated {
            let (i, j) = d.rules;
            if i == j {
                blocks.push(vec![selected[i]]);
            } else {
                let mut pair = vec![selected[i], selected[j]];
                pair.sort_unstable();
                blocks.push(pair);
            }
        }
        for (i, _) in &report.foreign {
            blocks.push(vec![selected[*i]]);
        }
        if blocks.is_empty() {
            // Only misses: nothing sharper than this exact selection.
            blocks.push(selected);
        }
        for b in blocks {
            if !scfg.forbidden.contains(&b) {
                scfg.forbidden.push(b);
            }
        }
    }
    Ok(LevelOutcome::Budget { what: "verification rounds", explored: cfg.max_block_rounds })
}
