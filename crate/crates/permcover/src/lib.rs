//! Conjecture the structure of a finitely based permutation class as a
//! disjoint cover of grid-class rules, then derive exact counting sequences,
//! functional equations and uniform random samplers from the cover.
//!
//! The pipeline has four steps: compute the block set of the basis, search
//! for valid rules over those blocks, solve an exact minimal disjoint cover
//! of the short avoiders, and re-verify the cover at a deeper length. Peg
//! permutations of polynomial classes convert directly to rules.

pub mod avoid;
pub mod basis;
pub mod block;
pub mod cache;
pub mod count;
pub mod cover;
pub mod error;
pub mod gen;
pub mod grid;
pub mod peg;
pub mod perm;
pub mod pipeline;
pub mod registry;
pub mod rule;
pub mod sample;
pub mod series;
pub mod sym;

pub use avoid::{avoiders, ClassCache, PermSetByLength};
pub use basis::{parse_basis, reduce_to_antichain, Basis};
pub use block::{block_set, build_poset, class_contains, Block, BlockPoset, BlockSet};
pub use cache::{DiskCache, CACHE_ENV};
pub use count::{count_rule, multinomial, CellCounts};
pub use cover::{
    build_instance, export_cnf, solve_min_cover, verify_cover, BitSet, Cover, CoverInstance,
    DupWitness, SolveConfig, SolveOutcome, VerifyReport,
};
pub use gen::{
    generate_rules, generate_rules_naive, generate_rules_with, pairwise_compat, CompatTable,
    GenConfig, Orient,
};
pub use grid::{grid_perms, is_struct_rule, rule_avoids, rule_subset_certified};
pub use peg::{
    fill, peg_cover_to_struct_cover, peg_to_rule, vector_contained, ConvexVectorSet, Decoration,
    FillingVector, PegPermutation,
};
pub use pipeline::{conjecture, ConjectureOutcome, PipelineConfig};
pub use registry::{counting_sequence, ClassRegistry, CountingSequence};
pub use rule::Rule;
pub use sample::{sample_class, sample_cover, sample_rule, sample_uniform};
pub use series::{
    evaluate_term_numeric, functional_equations, Equation, EquationSystem, GFFactor, GFTerm,
    SeriesSource,
};
pub use error::{Error, Result};
pub use perm::{max_perm_len, parse_perm, set_max_perm_len, Permutation};
pub use sym::{apply_symmetry, count_symmetry_classes, orbit, Symmetry};
