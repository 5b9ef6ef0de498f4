//! Scratch: size and solvability of the decisive Av(123) instance at 4x4.

use std::time::Instant;

use permcover::{
    block_set, build_instance, build_poset, generate_rules, solve_min_cover, Basis, ClassCache,
    GenConfig, SolveConfig, SolveOutcome,
};

fn main() {
    let basis: Basis = "123".parse().unwrap();
    let mut cc = ClassCache::new();
    let bs = block_set(&basis, &mut cc).unwrap();
    let poset = build_poset(&bs);
    for depth in [5usize, 6, 7] {
        let cfg = GenConfig::for_basis(&basis).with_dims(4, 4).with_depth(depth).active_only();
        let t = Instant::now();
        let rules = generate_rules(&bs, &poset, &cfg, &mut cc).unwrap();
        println!("gen depth {depth}: {} rules in {:?}", rules.len(), t.elapsed());
        let t = Instant::now();
        let inst = build_instance(&basis, &rules, depth, &mut cc).unwrap();
        println!("  instance: universe {} in {:?}", inst.universe().len(), t.elapsed());
        let t = Instant::now();
        let scfg = SolveConfig { max_nodes: 2_000_000_000, ..SolveConfig::default() };
        let out = solve_min_cover(&inst, &scfg);
        let label = match &out {
            SolveOutcome::Cover(sel) => format!("cover of {} rules", sel.len()),
            SolveOutcome::NoCover => "no cover".into(),
            SolveOutcome::Unknown { explored } => format!("unknown after {explored}"),
        };
        println!("  solve at {depth}: {label} in {:?}", t.elapsed());
    }
}
