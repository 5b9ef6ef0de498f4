//! Exhaustive search for valid rules over a block set, pruned by pairwise
//! block compatibility and by monotone failure propagation.
//!
//! The search runs in two stages per grid size. Stage one places the point
//! cells; a point count is fixed before any class block is considered,
//! because whether a pairwise incompatibility surfaces within the validity
//! depth depends on how many forced points pad every generated permutation.
//! Stage two fills the remaining cells with the empty block or class
//! blocks. Filling a cell only ever adds gridded objects, so a duplicate or
//! basis hit in a partial assignment condemns all of its completions, and
//! condemns the same cell filled with any containing class as well.

use std::collections::HashSet;

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::block::{class_contains, Block, BlockPoset, BlockSet};
use crate::error::{Error, Result};
use crate::grid::{for_each_gridded, for_each_gridded_floored, rule_valid};
use crate::perm::Permutation;
use crate::rule::Rule;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_width: usize,
    pub max_height: usize,
    /// Validity depth: generated rules have no duplicate gridding and no
    /// basis hit among permutations up to this length.
    pub depth: usize,
    pub max_rules: usize,
    pub max_nodes: u64,
    /// Emit only rules in which every class cell contributes at least one
    /// permutation within the validity depth. A class cell contributes iff
    /// the point count stays below the depth, so an inactive fill leaves the
    /// coverage identical to the variant with that cell empty, whose normal
    /// form appears at smaller dimensions. Skipping the fat variants loses
    /// no coverage sets and avoids a combinatorial blowup around saturated
    /// point skeletons.
    pub active_cells_only: bool,
}

impl GenConfig {
    pub fn for_basis(basis: &Basis) -> Self {
        let l = basis.max_pattern_len();
        GenConfig {
            max_width: l + 1,
            max_height: l + 1,
            depth: l + 2,
            max_rules: 500_000,
            max_nodes: 2_000_000_000,
            active_cells_only: false,
        }
    }

    pub fn with_dims(mut self, w: usize, h: usize) -> Self {
        self.max_width = w;
        self.max_height = h;
        self
    }

    pub fn with_depth(mut self, d: usize) -> Self {
        self.depth = d;
        self
    }

    pub fn active_only(mut self) -> Self {
        self.active_cells_only = true;
        self
    }
}

/// Relative placement of an ordered block pair (a, b) in a grid:
/// Row: a left of b in one row. Col: a above b in one column.
/// Up: a southwest of b. Down: a northwest of b.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orient {
    Row,
    Col,
    Up,
    Down,
}

pub const ORIENTS: [Orient; 4] = [Orient::Row, Orient::Col, Orient::Up, Orient::Down];

fn orient_index(o: Orient) -> usize {
    match o {
        Orient::Row => 0,
        Orient::Col => 1,
        Orient::Up => 2,
        Orient::Down => 3,
    }
}

/// The two-cell rule realizing an ordered pair in a given orientation.
fn pair_rule(a: &Block, b: &Block, o: Orient) -> Rule {
    let (dims, ca, cb) = match o {
        Orient::Row => ((2, 1), (0, 0), (1, 0)),
        Orient::Col => ((1, 2), (0, 1), (0, 0)),
        Orient::Up => ((2, 2), (0, 0), (1, 1)),
        Orient::Down => ((2, 2), (0, 1), (1, 0)),
    };
    Rule::from_sparse(dims.0, dims.1, [(ca.0, ca.1, a.clone()), (cb.0, cb.1, b.clone())])
        .expect("pair cells are distinct")
}

/// True iff every combined permutation of the pair up to `depth` avoids the
/// basis.
pub fn pairwise_compat(
    a: &Block,
    b: &Block,
    o: Orient,
    basis: &Basis,
    depth: usize,
    cache: &mut ClassCache,
) -> Result<bool> {
    Ok(min_bad_length(&pair_rule(a, b, o), basis, depth, cache)? > depth)
}

/// Smallest length ≤ depth at which the rule generates a basis-containing
/// permutation, or depth+1 if none.
fn min_bad_length(rule: &Rule, basis: &Basis, depth: usize, cache: &mut ClassCache) -> Result<usize> {
    let mut bad = depth + 1;
    for_each_gridded(rule, depth, cache, &mut |m, p| {
        if basis.patterns().iter().any(|q| p.contains(q)) {
            bad = m;
            return false;
        }
        true
    })?;
    Ok(bad)
}

/// Per ordered block pair and orientation, the smallest length at which the
/// pair alone forces a basis hit (depth+1 when compatible throughout).
pub struct CompatTable {
    nblocks: usize,
    depth: usize,
    minbad: Vec<usize>,
}

impl CompatTable {
    pub fn build(
        blocks: &[Block],
        basis: &Basis,
        depth: usize,
        cache: &mut ClassCache,
    ) -> Result<CompatTable> {
        let nblocks = blocks.len();
        let mut minbad = vec![depth + 1; nblocks * nblocks * 4];
        for (i, a) in blocks.iter().enumerate() {
            for (j, b) in blocks.iter().enumerate() {
                for &o in &ORIENTS {
                    let r = pair_rule(a, b, o);
                    minbad[(i * nblocks + j) * 4 + orient_index(o)] =
                        min_bad_length(&r, basis, depth, cache)?;
                }
            }
        }
        Ok(CompatTable { nblocks, depth, minbad })
    }

    pub fn min_bad(&self, i: usize, j: usize, o: Orient) -> usize {
        self.minbad[(i * self.nblocks + j) * 4 + orient_index(o)]
    }

    pub fn compatible(&self, i: usize, j: usize, o: Orient) -> bool {
        self.min_bad(i, j, o) > self.depth
    }
}

/// Ordered-pair view of two distinct cells: which table entry governs them.
fn cells_orient(xa: usize, ya: usize, xb: usize, yb: usize) -> (bool, Orient) {
    // Returns (swap, orient): swap means b plays the first role.
    if ya == yb {
        (xa > xb, Orient::Row)
    } else if xa == xb {
        (ya < yb, Orient::Col)
    } else if (xa < xb) == (ya < yb) {
        (xa > xb, Orient::Up)
    } else {
        (xa > xb, Orient::Down)
    }
}

struct Generator<'a> {
    basis: &'a Basis,
    root_block: Block,
    classes: Vec<Block>,
    /// For each class, the classes containing it (including itself), as
    /// indices into `classes`.
    containing: Vec<Vec<usize>>,
    has_point: bool,
    /// Table indices: class k at k, the point at classes.len().
    table: CompatTable,
    point_ti: usize,
    cfg: GenConfig,
    nodes: u64,
    emitted: usize,
    sink: &'a mut dyn FnMut(Rule, &HashSet<Permutation>) -> Result<()>,
}

/// Mutable per-grid search state for stage two.
struct Grid2 {
    t: usize,
    u: usize,
    cells: Vec<Block>,
    /// Table index of each nonempty placed cell.
    placed: Vec<(usize, usize, usize)>,
    npoints: usize,
    pending: Vec<usize>,
    row_nonempty: Vec<usize>,
    col_nonempty: Vec<usize>,
    row_pending: Vec<usize>,
    col_pending: Vec<usize>,
    seen: HashSet<Permutation>,
    journal: Vec<Permutation>,
}

/// All valid rules over the block set, in canonical order: no duplicate
/// griddings and no basis hit up to cfg.depth, at most cfg.depth points,
/// normal form (with the 1x1 empty rule as the one exception), excluding
/// the one-cell rule holding the root class itself.
pub fn generate_rules(
    blocks: &BlockSet,
    poset: &BlockPoset,
    cfg: &GenConfig,
    cache: &mut ClassCache,
) -> Result<Vec<Rule>> {
    let mut out = Vec::new();
    generate_rules_with(blocks, poset, cfg, cache, |rule, _| {
        out.push(rule);
        Ok(())
    })?;
    out.sort();
    Ok(out)
}

/// Streaming form of [`generate_rules`]: each valid rule is handed to the
/// sink together with the set of permutations it generates up to
/// `cfg.depth`, in search order rather than canonical order. Returns the
/// number of rules emitted. The coverage set is a byproduct of validation,
/// so large pools can be consumed without storing the rules themselves.
pub fn generate_rules_with(
    blocks: &BlockSet,
    poset: &BlockPoset,
    cfg: &GenConfig,
    cache: &mut ClassCache,
    mut sink: impl FnMut(Rule, &HashSet<Permutation>) -> Result<()>,
) -> Result<usize> {
    let basis = blocks.root();
    // Class blocks in a linear extension of containment, smallest first,
    // so that failure propagation to containing classes prunes untried
    // candidates rather than revisiting finished ones.
    let order = poset.topo_order();
    let classes: Vec<Block> = order
        .iter()
        .map(|&i| poset.blocks()[i].clone())
        .filter(|b| b.is_class())
        .collect();
    let containing: Vec<Vec<usize>> = classes
        .iter()
        .map(|a| {
            (0..classes.len())
                .filter(|&j| class_contains(&classes[j], a))
                .collect()
        })
        .collect();
    let has_point = blocks.has_point();
    let mut table_blocks = classes.clone();
    let point_ti = table_blocks.len();
    if has_point {
        table_blocks.push(Block::Point);
    }
    let table = CompatTable::build(&table_blocks, basis, cfg.depth, cache)?;
    let mut g = Generator {
        basis,
        root_block: Block::Class(basis.clone()),
        classes,
        containing,
        has_point,
        table,
        point_ti,
        cfg: cfg.clone(),
        nodes: 0,
        emitted: 0,
        sink: &mut sink,
    };
    for t in 1..=cfg.max_width {
        for u in 1..=cfg.max_height {
            let mut points = Vec::new();
            g.place_points(t, u, 0, &mut points, cache)?;
        }
    }
    Ok(g.emitted)
}

impl<'a> Generator<'a> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cfg.max_nodes {
            return Err(Error::Budget {
                what: "rule-search nodes",
                explored: self.nodes as usize,
            });
        }
        Ok(())
    }

    /// Stage one: choose the set of point cells.
    fn place_points(
        &mut self,
        t: usize,
        u: usize,
        i: usize,
        points: &mut Vec<usize>,
        cache: &mut ClassCache,
    ) -> Result<()> {
        self.tick()?;
        if i == t * u {
            return self.fill_classes(t, u, points, cache);
        }
        self.place_points(t, u, i + 1, points, cache)?;
        if points.len() < self.cfg.depth && self.has_point {
            let (x, y) = (i % t, i / t);
            // A clashing point pair dooms every completion: the pair's bad
            // pattern survives in some full-skeleton interleaving, whose
            // length is the final point count ≤ depth.
            let pair_ok = points.iter().all(|&c| {
                let (swap, o) = cells_orient(c % t, c / t, x, y);
                let _ = swap; // point-point pairs are order-symmetric per orientation
                self.table.compatible(self.point_ti, self.point_ti, o)
            });
            if pair_ok {
                points.push(i);
                // Full-skeleton check catches hits spanning 3+ points.
                let skel = self.skeleton_rule(t, u, points);
                let mut hit = false;
                let pats = self.basis.patterns().to_vec();
                for_each_gridded(&skel, points.len(), cache, &mut |_, p| {
                    if pats.iter().any(|q| p.contains(q)) {
                        hit = true;
                        return false;
                    }
                    true
                })?;
                if !hit {
                    self.place_points(t, u, i + 1, points, cache)?;
                }
                points.pop();
            }
        }
        Ok(())
    }

    fn skeleton_rule(&self, t: usize, u: usize, points: &[usize]) -> Rule {
        Rule::from_sparse(t, u, points.iter().map(|&c| (c % t, c / t, Block::Point)))
            .expect("distinct cells")
    }

    /// Stage two: assign empty or a class block to every non-point cell.
    fn fill_classes(
        &mut self,
        t: usize,
        u: usize,
        points: &[usize],
        cache: &mut ClassCache,
    ) -> Result<()> {
        let mut cells = vec![Block::EmptyClass; t * u];
        let mut row_nonempty = vec![0usize; u];
        let mut col_nonempty = vec![0usize; t];
        let mut placed = Vec::new();
        for &c in points {
            cells[c] = Block::Point;
            row_nonempty[c / t] += 1;
            col_nonempty[c % t] += 1;
            placed.push((c % t, c / t, self.point_ti));
        }
        let pending: Vec<usize> = (0..t * u).filter(|c| !points.contains(c)).collect();
        let mut row_pending = vec![0usize; u];
        let mut col_pending = vec![0usize; t];
        for &c in &pending {
            row_pending[c / t] += 1;
            col_pending[c % t] += 1;
        }
        // Seed the seen set with the skeleton's own permutations; they are
        // pairwise distinct because the cuts of a points-only rule are
        // forced, and they were checked basis-clean in stage one.
        let skel = self.skeleton_rule(t, u, points);
        let mut seen = HashSet::new();
        for_each_gridded(&skel, points.len(), cache, &mut |_, p| {
            seen.insert(p.clone());
            true
        })?;
        let mut st = Grid2 {
            t,
            u,
            cells,
            placed,
            npoints: points.len(),
            pending,
            row_nonempty,
            col_nonempty,
            row_pending,
            col_pending,
            seen,
            journal: Vec::new(),
        };
        self.assign(&mut st, 0, cache)
    }

    fn assign(&mut self, st: &mut Grid2, k: usize, cache: &mut ClassCache) -> Result<()> {
        self.tick()?;
        if k == st.pending.len() {
            return self.finish(st);
        }
        let c = st.pending[k];
        let (x, y) = (c % st.t, c / st.t);
        st.row_pending[y] -= 1;
        st.col_pending[x] -= 1;
        // Leave the cell empty, unless that strands its row or column
        // (the 1x1 grid is exempt: it may complete as the empty rule).
        let strands = (st.row_pending[y] == 0 && st.row_nonempty[y] == 0)
            || (st.col_pending[x] == 0 && st.col_nonempty[x] == 0);
        if !strands || (st.t == 1 && st.u == 1) {
            self.assign(st, k + 1, cache)?;
        }
        // Try each class block, smallest first; when one fails, every class
        // containing it fails the same way. A saturated skeleton admits no
        // contributing fill at all.
        let inactive = self.cfg.active_cells_only && st.npoints >= self.cfg.depth;
        let mut barren = vec![inactive; self.classes.len()];
        for ci in 0..self.classes.len() {
            if barren[ci] {
                continue;
            }
            let fatal = st.placed.iter().any(|&(px, py, ti)| {
                let (swap, o) = cells_orient(x, y, px, py);
                let mb = if swap {
                    self.table.min_bad(ti, ci, o)
                } else {
                    self.table.min_bad(ci, ti, o)
                };
                let pairpoints = usize::from(ti == self.point_ti);
                mb + st.npoints - pairpoints <= self.cfg.depth
            });
            if fatal {
                for &s in &self.containing[ci] {
                    barren[s] = true;
                }
                continue;
            }
            st.cells[c] = self.classes[ci].clone();
            st.placed.push((x, y, ci));
            st.row_nonempty[y] += 1;
            st.col_nonempty[x] += 1;
            let mark = st.journal.len();
            if self.delta_ok(st, c, cache)? {
                self.assign(st, k + 1, cache)?;
            } else {
                for &s in &self.containing[ci] {
                    barren[s] = true;
                }
            }
            for p in st.journal.drain(mark..) {
                st.seen.remove(&p);
            }
            st.row_nonempty[y] -= 1;
            st.col_nonempty[x] -= 1;
            st.placed.pop();
            st.cells[c] = Block::EmptyClass;
        }
        st.row_pending[y] += 1;
        st.col_pending[x] += 1;
        Ok(())
    }

    /// Check the gridded objects that filling cell `c` adds to the partial
    /// rule: none may hit the basis or duplicate an already-seen
    /// permutation. Survivors are recorded in the seen set and journal.
    fn delta_ok(&mut self, st: &mut Grid2, c: usize, cache: &mut ClassCache) -> Result<bool> {
        let partial = Rule::new(st.t, st.u, st.cells.clone()).expect("dims fixed");
        let pats = self.basis.patterns().to_vec();
        let seen = &mut st.seen;
        let journal = &mut st.journal;
        let mut ok = true;
        for_each_gridded_floored(&partial, self.cfg.depth, Some(c), cache, &mut |_, p| {
            if pats.iter().any(|q| p.contains(q)) || !seen.insert(p.clone()) {
                ok = false;
                return false;
            }
            journal.push(p.clone());
            true
        })?;
        Ok(ok)
    }

    fn finish(&mut self, st: &Grid2) -> Result<()> {
        let rule = Rule::new(st.t, st.u, st.cells.clone()).expect("dims fixed");
        if !rule.is_normal_form() {
            return Ok(());
        }
        if st.t == 1 && st.u == 1 && st.cells[0] == self.root_block {
            return Ok(());
        }
        if self.emitted >= self.cfg.max_rules {
            return Err(Error::Budget {
                what: "generated rules",
                explored: self.emitted,
            });
        }
        self.emitted += 1;
        (self.sink)(rule, &st.seen)
    }
}

/// Reference generator: enumerate every cell assignment and filter by the
/// validity contract directly. Exponential in the cell count; used as the
/// oracle the pruned search is checked against.
pub fn generate_rules_naive(
    blocks: &BlockSet,
    cfg: &GenConfig,
    cache: &mut ClassCache,
) -> Result<Vec<Rule>> {
    let basis = blocks.root();
    let mut options: Vec<Block> = vec![Block::EmptyClass];
    if blocks.has_point() {
        options.push(Block::Point);
    }
    options.extend(blocks.class_blocks().map(|b| Block::Class(b.clone())));
    let root_block = Block::Class(basis.clone());
    let mut out = Vec::new();
    for t in 1..=cfg.max_width {
        for u in 1..=cfg.max_height {
            let mut cells = vec![Block::EmptyClass; t * u];
            naive_fill(
                basis, &options, &root_block, cfg, cache, t, u, 0, 0, &mut cells, &mut out,
            )?;
        }
    }
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn naive_fill(
    basis: &Basis,
    options: &[Block],
    root_block: &Block,
    cfg: &GenConfig,
    cache: &mut ClassCache,
    t: usize,
    u: usize,
    i: usize,
    npoints: usize,
    cells: &mut Vec<Block>,
    out: &mut Vec<Rule>,
) -> Result<()> {
    if i == t * u {
        let rule = Rule::new(t, u, cells.clone()).expect("dims fixed");
        if !rule.is_normal_form() {
            return Ok(());
        }
        if t == 1 && u == 1 && cells[0] == *root_block {
            return Ok(());
        }
        if rule_valid(&rule, basis, cfg.depth, cache)? {
            if out.len() >= cfg.max_rules {
                return Err(Error::Budget { what: "generated rules", explored: out.len() });
            }
            out.push(rule);
        }
        return Ok(());
    }
    for b in options {
        let np = npoints + usize::from(*b == Block::Point);
        if np > cfg.depth {
            continue;
        }
        cells[i] = b.clone();
        naive_fill(basis, options, root_block, cfg, cache, t, u, i + 1, np, cells, out)?;
    }
    cells[i] = Block::EmptyClass;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{block_set, build_poset};

    fn b(s: &str) -> Basis {
        s.parse().unwrap()
    }

    fn blk(s: &str) -> Block {
        s.parse().unwrap()
    }

    fn generate(basis: &str, w: usize, h: usize, cache: &mut ClassCache) -> Vec<Rule> {
        let basis = b(basis);
        let bs = block_set(&basis, cache).unwrap();
        let poset = build_poset(&bs);
        let cfg = GenConfig::for_basis(&basis).with_dims(w, h);
        generate_rules(&bs, &poset, &cfg, cache).unwrap()
    }

    #[test]
    fn pairwise_compat_examples() {
        let mut cache = ClassCache::new();
        assert!(pairwise_compat(
            &blk("Av(231)"),
            &blk("Av(231)"),
            Orient::Up,
            &b("231"),
            5,
            &mut cache
        )
        .unwrap());
        assert!(!pairwise_compat(&Block::Point, &Block::Point, Orient::Row, &b("12"), 4, &mut cache)
            .unwrap());
        assert!(pairwise_compat(
            &blk("Av(21)"),
            &blk("Av(12)"),
            Orient::Col,
            &b("132_312"),
            5,
            &mut cache
        )
        .unwrap());
        // Order matters on a diagonal: two increasing runs stack into an
        // ascent either way up, but 12 is forced only northeast.
        assert!(!pairwise_compat(&Block::Point, &Block::Point, Orient::Up, &b("12"), 4, &mut cache)
            .unwrap());
        assert!(pairwise_compat(&Block::Point, &Block::Point, Orient::Down, &b("12"), 4, &mut cache)
            .unwrap());
    }

    #[test]
    fn generated_rules_for_12_include_known_cover_pieces() {
        let mut cache = ClassCache::new();
        let rules = generate("12", 2, 2, &mut cache);
        assert!(rules.contains(&Rule::empty()));
        assert!(rules.contains(&Rule::from_sparse(1, 1, [(0, 0, Block::Point)]).unwrap()));
        // The descent step: a point above, the rest of the class below-right.
        let step = Rule::from_sparse(2, 2, [(0, 1, Block::Point), (1, 0, blk("Av(12)"))]).unwrap();
        assert!(rules.contains(&step));
        // The trivial one-cell rule of the class itself is excluded.
        let root = Rule::from_sparse(1, 1, [(0, 0, blk("Av(12)"))]).unwrap();
        assert!(!rules.contains(&root));
        // No duplicates, canonical order.
        let mut sorted = rules.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, rules);
    }

    #[test]
    fn generated_rules_for_231_include_max_decomposition() {
        let mut cache = ClassCache::new();
        let rules = generate("231", 3, 3, &mut cache);
        let fig = Rule::from_sparse(
            3,
            3,
            [(0, 0, blk("Av(231)")), (1, 2, Block::Point), (2, 1, blk("Av(231)"))],
        )
        .unwrap();
        assert!(rules.contains(&fig));
        assert!(rules.contains(&Rule::empty()));
    }

    #[test]
    fn all_generated_rules_satisfy_the_contract() {
        let mut cache = ClassCache::new();
        let basis = b("21");
        let rules = generate("21", 2, 2, &mut cache);
        for r in &rules {
            assert!(r.is_normal_form(), "{r}");
            assert!(r.point_count() <= 4, "{r}");
            assert!(rule_valid(r, &basis, 4, &mut cache).unwrap(), "{r}");
        }
    }

    #[test]
    fn pruned_matches_naive_on_small_bases() {
        let mut cache = ClassCache::new();
        for basis_str in ["12", "12_21", "21_123"] {
            let basis = b(basis_str);
            let bs = block_set(&basis, &mut cache).unwrap();
            let poset = build_poset(&bs);
            let cfg = GenConfig::for_basis(&basis).with_dims(2, 2);
            let pruned = generate_rules(&bs, &poset, &cfg, &mut cache).unwrap();
            let naive = generate_rules_naive(&bs, &cfg, &mut cache).unwrap();
            assert_eq!(pruned, naive, "basis {basis_str}");
        }
    }

    #[test]
    fn point_budget_respected() {
        let mut cache = ClassCache::new();
        let basis = b("12_21");
        let bs = block_set(&basis, &mut cache).unwrap();
        let poset = build_poset(&bs);
        let cfg = GenConfig::for_basis(&basis).with_dims(3, 3).with_depth(2);
        let rules = generate_rules(&bs, &poset, &cfg, &mut cache).unwrap();
        assert!(rules.iter().all(|r| r.point_count() <= 2));
        assert!(!rules.is_empty());
    }

    #[test]
    fn rule_budget_errors_out() {
        let mut cache = ClassCache::new();
        let basis = b("231");
        let bs = block_set(&basis, &mut cache).unwrap();
        let poset = build_poset(&bs);
        let mut cfg = GenConfig::for_basis(&basis).with_dims(2, 2);
        cfg.max_rules = 3;
        match generate_rules(&bs, &poset, &cfg, &mut cache) {
            Err(Error::Budget { .. }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
