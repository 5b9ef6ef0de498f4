//! Command line front end for the cover library: conjecture disjoint grid
//! covers of permutation classes, re-verify and enumerate them, derive
//! functional equations, draw uniform samples, convert peg permutations,
//! and sweep whole files of bases.
//!
//! Exit codes: 0 success (a cover was found where one was asked for),
//! 1 error, 2 no cover within the configured bounds, 3 a budget ran out
//! before the search could conclude.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use permcover::block::block_set_with_depth;
use permcover::{
    block_set, build_instance, build_poset, conjecture, counting_sequence, export_cnf, fill,
    functional_equations, generate_rules, max_perm_len, peg_to_rule, sample_class,
    set_max_perm_len, verify_cover, Basis, ClassCache, ClassRegistry, ConjectureOutcome,
    ConvexVectorSet, Cover, CountingSequence, DiskCache, Error, FillingVector, GenConfig,
    PegPermutation, PipelineConfig, Result, CACHE_ENV,
};

const EXIT_ERROR: u8 = 1;
const EXIT_NONE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "permcover",
    version,
    about = "Disjoint grid covers of permutation classes: conjecture, verify, enumerate, sample"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Knobs shared by the cover-producing commands. Defaults scale with the
/// longest basis pattern l: rules up to (l+1)x(l+1), covers solved at
/// depth l+2 and verified at depth l+4.
#[derive(Args)]
struct RunArgs {
    /// Largest rule dimensions tried, as WxH.
    #[arg(long, value_name = "WxH")]
    max_dim: Option<String>,
    /// Length the cover instance is solved at.
    #[arg(long, value_name = "N")]
    solve_depth: Option<usize>,
    /// Length a solved cover must survive before it is accepted.
    #[arg(long, value_name = "N")]
    verify_depth: Option<usize>,
    /// Highest reported sequence index (terms a_0..a_N).
    #[arg(long, default_value_t = 10, value_name = "N")]
    terms: usize,
    /// Node budget for rule generation.
    #[arg(long, value_name = "N")]
    max_gen_nodes: Option<u64>,
    /// Node budget for the cover search.
    #[arg(long, value_name = "N")]
    max_solve_nodes: Option<u64>,
    /// Wall-clock budget in seconds (batch default: 60 per basis).
    #[arg(long, value_name = "SECS")]
    timeout: Option<u64>,
    /// Artifact cache directory; the PERMCOVER_CACHE variable is the
    /// fallback, and no cache is used when neither is set.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Seed for sampling; the cover search does not depend on it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical spelling of a basis under the eight plot
    /// symmetries, and the symmetry that maps the input there.
    Canon {
        /// Patterns joined by "_" or ",": "231", "123_3214".
        basis: String,
        #[arg(long)]
        json: bool,
    },
    /// List the cell blocks available to rules over a basis.
    Blocks {
        basis: String,
        /// Decide subclass membership on classes truncated at this length.
        #[arg(long, value_name = "N")]
        depth: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Generate the pool of valid rules for a basis.
    Rules {
        basis: String,
        /// Largest rule dimensions, as WxH.
        #[arg(long, value_name = "WxH")]
        max_dim: Option<String>,
        /// Validity depth for candidate rules.
        #[arg(long, value_name = "N")]
        depth: Option<usize>,
        /// Drop rules with a class cell that no gridding uses within the
        /// validity depth; the cover search runs on this pruned pool.
        #[arg(long)]
        active_only: bool,
        /// Print at most this many encodings.
        #[arg(long, value_name = "N")]
        limit: Option<usize>,
        #[arg(long, value_name = "DIR")]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Conjecture a verified disjoint cover of Av(basis).
    Conjecture {
        basis: String,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        json: bool,
    },
    /// Re-verify a stored cover, from the cache or from a file.
    Verify {
        basis: String,
        /// Read the cover from this JSON file instead of the cache.
        #[arg(long, value_name = "FILE")]
        file: Option<PathBuf>,
        /// Verify to this length (default: the cover's recorded depth).
        #[arg(long, value_name = "N")]
        depth: Option<usize>,
        #[arg(long, value_name = "DIR")]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print the counting sequence of Av(basis), through a stored cover
    /// when one exists and by direct enumeration otherwise.
    Enumerate {
        basis: String,
        /// Highest reported sequence index (terms a_0..a_N).
        #[arg(long, default_value_t = 10, value_name = "N")]
        terms: usize,
        #[arg(long, value_name = "DIR")]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print the functional equations of a cover of Av(basis),
    /// conjecturing one first when none is stored.
    Gf {
        basis: String,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        json: bool,
    },
    /// Draw uniform members of Av(basis) at a fixed length through a
    /// cover, conjecturing one first when none is stored.
    Sample {
        basis: String,
        /// Length of the sampled permutations.
        #[arg(short = 'n', long, value_name = "N")]
        length: usize,
        /// Number of samples.
        #[arg(long, default_value_t = 1, value_name = "K")]
        count: usize,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        json: bool,
    },
    /// Convert a peg permutation with bounds into a rule, or apply a
    /// filling vector to it.
    Peg {
        /// Peg literal: value then decoration per letter, "3o1-4o2+".
        peg: String,
        /// Componentwise lower bounds, "<1,3,1,2>".
        #[arg(long, value_name = "VEC")]
        lower: Option<String>,
        /// Componentwise upper bounds, "*" for unbounded: "<2,*,4,3>".
        #[arg(long, value_name = "VEC")]
        upper: Option<String>,
        /// Print the permutation this filling vector inflates the peg to.
        #[arg(long, value_name = "VEC")]
        fill: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Conjecture covers for every basis in a file, one line per basis,
    /// under per-basis budgets; symmetric spellings run once.
    Batch {
        /// File of basis strings; blank lines and #-comments are skipped.
        file: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        json: bool,
    },
    /// Write the disjoint-cover instance as DIMACS CNF: one variable per
    /// rule, exactly-one clauses per covered permutation.
    ExportCnf {
        basis: String,
        /// Largest rule dimensions, as WxH.
        #[arg(long, value_name = "WxH")]
        max_dim: Option<String>,
        /// Length the instance is built at.
        #[arg(long, value_name = "N")]
        depth: Option<usize>,
        /// Use the unpruned rule pool instead of the active-cell one.
        #[arg(long)]
        full: bool,
        /// Output file (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ERROR) };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Canon { basis, json } => cmd_canon(&basis, json),
        Command::Blocks { basis, depth, json } => cmd_blocks(&basis, depth, json),
        Command::Rules { basis, max_dim, depth, active_only, limit, cache_dir, json } => {
            cmd_rules(&basis, max_dim.as_deref(), depth, active_only, limit, cache_dir, json)
        }
        Command::Conjecture { basis, run, json } => {
            cmd_conjecture(&RunConfig::resolve(&basis, &run)?, json)
        }
        Command::Verify { basis, file, depth, cache_dir, json } => {
            cmd_verify(&basis, file, depth, cache_dir, json)
        }
        Command::Enumerate { basis, terms, cache_dir, json } => {
            cmd_enumerate(&basis, terms, cache_dir, json)
        }
        Command::Gf { basis, run, json } => cmd_gf(&RunConfig::resolve(&basis, &run)?, json),
        Command::Sample { basis, length, count, run, json } => {
            cmd_sample(&RunConfig::resolve(&basis, &run)?, length, count, json)
        }
        Command::Peg { peg, lower, upper, fill, json } => {
            cmd_peg(&peg, lower.as_deref(), upper.as_deref(), fill.as_deref(), json)
        }
        Command::Batch { file, jobs, run, json } => cmd_batch(&file, jobs, &run, json),
        Command::ExportCnf { basis, max_dim, depth, full, out, json } => {
            cmd_export_cnf(&basis, max_dim.as_deref(), depth, full, out, json)
        }
    }
}

/// A fully resolved run. Identical configs print identical bytes: nothing
/// time- or machine-dependent is ever emitted, and cache hits reproduce
/// recomputation exactly.
struct RunConfig {
    basis: Basis,
    pipe: PipelineConfig,
    terms: usize,
    cache: Option<DiskCache>,
    seed: u64,
}

impl RunConfig {
    fn resolve(basis: &str, a: &RunArgs) -> Result<RunConfig> {
        let basis: Basis = basis.parse()?;
        let mut pipe = PipelineConfig::for_basis(&basis);
        apply_run_args(&mut pipe, a)?;
        if let Some(secs) = a.timeout {
            pipe = pipe.with_deadline(Instant::now() + Duration::from_secs(secs));
        }
        ensure_cap(pipe.verify_depth.max(a.terms))?;
        Ok(RunConfig {
            basis,
            pipe,
            terms: a.terms,
            cache: disk_at(a.cache_dir.clone()),
            seed: a.seed,
        })
    }
}

/// Fold the explicit overrides into a default pipeline config. The
/// deadline is left to callers: batch mode restarts it per basis.
fn apply_run_args(pipe: &mut PipelineConfig, a: &RunArgs) -> Result<()> {
    if let Some(d) = &a.max_dim {
        let (w, h) = parse_dims(d)?;
        pipe.max_width = w;
        pipe.max_height = h;
    }
    if let Some(d) = a.solve_depth {
        pipe.solve_depth = d;
    }
    if let Some(d) = a.verify_depth {
        pipe.verify_depth = d;
    }
    if pipe.verify_depth < pipe.solve_depth {
        return Err(Error::Msg(format!(
            "verify depth {} is shallower than solve depth {}",
            pipe.verify_depth, pipe.solve_depth
        )));
    }
    if let Some(n) = a.max_gen_nodes {
        pipe.max_gen_nodes = n;
    }
    if let Some(n) = a.max_solve_nodes {
        pipe.max_solve_nodes = n;
    }
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Msg(format!("dimensions must look like 4x5, got {s:?}")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Msg(format!("bad dimension {t:?} in {s:?}")))
    };
    let (w, h) = (parse(w)?, parse(h)?);
    if w == 0 || h == 0 {
        return Err(Error::Msg(format!("dimensions must be positive, got {s:?}")));
    }
    Ok((w, h))
}

/// Grow the process-wide permutation length cap when a command needs
/// lengths past the default.
fn ensure_cap(n: usize) -> Result<()> {
    if n > max_perm_len() {
        set_max_perm_len(n)?;
    }
    Ok(())
}

fn disk_at(dir: Option<PathBuf>) -> Option<DiskCache> {
    dir.map(DiskCache::at).or_else(DiskCache::from_env)
}

/// A JSON string literal, quoted and escaped.
fn jstr(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn warm_avoiders(cache: &Option<DiskCache>, basis: &Basis, depth: usize, cc: &mut ClassCache) {
    if let Some(d) = cache {
        if let Some(sets) = d.load_avoiders(basis, depth) {
            cc.adopt(sets);
        }
    }
}

/// Persist what a successful conjecture produced. Failures only warn: the
/// result is already in hand and the cache is a convenience.
fn store_artifacts(cfg: &RunConfig, cover: &Cover, cc: &mut ClassCache) {
    let Some(d) = &cfg.cache else { return };
    if let Err(e) = d.store_cover(cover) {
        eprintln!("warning: cover not cached: {e}");
    }
    match cc.ensure(&cfg.basis, cfg.pipe.verify_depth) {
        Ok(()) => {
            if let Err(e) = d.store_avoiders(cc.get(&cfg.basis)) {
                eprintln!("warning: avoiders not cached: {e}");
            }
        }
        Err(e) => eprintln!("warning: avoiders not cached: {e}"),
    }
}

fn cover_max_dim(cover: &Cover) -> usize {
    cover.rules.iter().map(|r| r.width().max(r.height())).max().unwrap_or(1)
}

fn cmd_canon(basis: &str, json: bool) -> Result<ExitCode> {
    let basis: Basis = basis.parse()?;
    let (canon, sym) = basis.canonical_with();
    if json {
        println!(
            "{{\"basis\":{},\"canonical\":{},\"symmetry\":{}}}",
            jstr(&basis.to_string()),
            jstr(&canon.to_string()),
            jstr(&format!("{sym:?}"))
        );
    } else {
        println!("basis:     Av({basis})");
        println!("canonical: Av({canon})");
        println!("symmetry:  {sym:?}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_blocks(basis: &str, depth: Option<usize>, json: bool) -> Result<ExitCode> {
    let basis: Basis = basis.parse()?;
    let mut cc = ClassCache::new();
    let bs = match depth {
        Some(d) => {
            ensure_cap(d)?;
            block_set_with_depth(&basis, d, &mut cc)?
        }
        None => block_set(&basis, &mut cc)?,
    };
    if json {
        println!("{}", bs.to_json());
    } else {
        println!("{} blocks over Av({basis}):", bs.blocks().len());
        for b in bs.blocks() {
            println!("  {b}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_rules(
    basis: &str,
    max_dim: Option<&str>,
    depth: Option<usize>,
    active_only: bool,
    limit: Option<usize>,
    cache_dir: Option<PathBuf>,
    json: bool,
) -> Result<ExitCode> {
    let basis: Basis = basis.parse()?;
    let mut cfg = GenConfig::for_basis(&basis);
    if let Some(d) = max_dim {
        let (w, h) = parse_dims(d)?;
        cfg = cfg.with_dims(w, h);
    }
    if let Some(d) = depth {
        cfg = cfg.with_depth(d);
    }
    if active_only {
        cfg = cfg.active_only();
    }
    ensure_cap(cfg.depth)?;
    let dc = disk_at(cache_dir);
    let mut cc = ClassCache::new();
    warm_avoiders(&dc, &basis, cfg.depth, &mut cc);
    let stored = dc.as_ref().and_then(|d| {
        d.load_rules(&basis, cfg.max_width, cfg.max_height, cfg.depth, cfg.active_cells_only)
    });
    let rules = match stored {
        Some(rules) => rules,
        None => {
            let bs = block_set(&basis, &mut cc)?;
            let poset = build_poset(&bs);
            let rules = generate_rules(&bs, &poset, &cfg, &mut cc)?;
            if let Some(d) = &dc {
                if let Err(e) = d.store_rules(
                    &basis,
                    cfg.max_width,
                    cfg.max_height,
                    cfg.depth,
                    cfg.active_cells_only,
                    &rules,
                ) {
                    eprintln!("warning: rule pool not cached: {e}");
                }
            }
            rules
        }
    };
    let shown = limit.unwrap_or(rules.len()).min(rules.len());
    if json {
        let encs: Vec<String> =
            rules.iter().take(shown).map(|r| jstr(&r.encoding())).collect();
        println!(
            "{{\"basis\":{},\"width\":{},\"height\":{},\"depth\":{},\"active_only\":{},\"count\":{},\"rules\":[{}]}}",
            jstr(&basis.to_string()),
            cfg.max_width,
            cfg.max_height,
            cfg.depth,
            cfg.active_cells_only,
            rules.len(),
            encs.join(",")
        );
    } else {
        println!(
            "{} rules for Av({basis}) within {}x{} at depth {}{}",
            rules.len(),
            cfg.max_width,
            cfg.max_height,
            cfg.depth,
            if cfg.active_cells_only { ", active cells only" } else { "" }
        );
        for r in rules.iter().take(shown) {
            println!("{}", r.encoding());
        }
        if shown < rules.len() {
            println!("... {} more", rules.len() - shown);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report_no_cover(cfg: &RunConfig, out: &ConjectureOutcome, json: bool) -> ExitCode {
    match out {
        ConjectureOutcome::None { rules_seen } => {
            if json {
                println!(
                    "{{\"outcome\":\"none\",\"basis\":{},\"max_width\":{},\"max_height\":{},\"rules_seen\":{}}}",
                    jstr(&cfg.basis.to_string()),
                    cfg.pipe.max_width,
                    cfg.pipe.max_height,
                    rules_seen
                );
            } else {
                println!(
                    "no cover of Av({}) with rules within {}x{}: all {} candidates exhausted (solve depth {}, verify depth {})",
                    cfg.basis,
                    cfg.pipe.max_width,
                    cfg.pipe.max_height,
                    rules_seen,
                    cfg.pipe.solve_depth,
                    cfg.pipe.verify_depth
                );
            }
            ExitCode::from(EXIT_NONE)
        }
        ConjectureOutcome::Unknown { what, explored } => {
            if json {
                println!(
                    "{{\"outcome\":\"budget\",\"basis\":{},\"what\":{},\"explored\":{}}}",
                    jstr(&cfg.basis.to_string()),
                    jstr(what),
                    explored
                );
            } else {
                println!(
                    "search for Av({}) stopped by a budget ({what} after {explored} steps); no conclusion",
                    cfg.basis
                );
            }
            ExitCode::from(EXIT_BUDGET)
        }
        ConjectureOutcome::Found(_) => unreachable!("found covers are reported elsewhere"),
    }
}

fn cmd_conjecture(cfg: &RunConfig, json: bool) -> Result<ExitCode> {
    let mut cc = ClassCache::new();
    warm_avoiders(&cfg.cache, &cfg.basis, cfg.pipe.verify_depth, &mut cc);
    match conjecture(&cfg.basis, &cfg.pipe, &mut cc)? {
        ConjectureOutcome::Found(cover) => {
            store_artifacts(cfg, &cover, &mut cc);
            print_cover(cfg, &cover, cc, json)?;
            Ok(ExitCode::SUCCESS)
        }
        other => Ok(report_no_cover(cfg, &other, json)),
    }
}

fn print_cover(cfg: &RunConfig, cover: &Cover, cc: ClassCache, json: bool) -> Result<()> {
    let mut reg = ClassRegistry::with_cache(cc);
    reg.register(cover.clone())?;
    let seq = counting_sequence(cover, cfg.terms, &mut reg)?;
    let eqs = functional_equations(cover, &reg);
    if json {
        println!(
            "{{\"outcome\":\"found\",\"basis\":{},\"rules\":{},\"max_dim\":{},\"depth_solved\":{},\"depth_verified\":{},\"cover\":{},\"sequence\":{},\"equations\":{}}}",
            jstr(&cfg.basis.to_string()),
            cover.rules.len(),
            cover_max_dim(cover),
            cover.depth_solved,
            cover.depth_verified,
            cover.to_json(),
            seq.to_json(),
            jstr(&eqs.render()),
        );
    } else {
        println!(
            "cover of Av({}): {} rules, largest dimension {}, solved at depth {}, verified to depth {}",
            cfg.basis,
            cover.rules.len(),
            cover_max_dim(cover),
            cover.depth_solved,
            cover.depth_verified
        );
        for (i, r) in cover.rules.iter().enumerate() {
            println!();
            println!("rule {}/{}: {}", i + 1, cover.rules.len(), r.encoding());
            print!("{}", r.render_ascii());
        }
        println!();
        println!("sequence: {}", seq.comma_line());
        print!("{}", eqs.render());
    }
    Ok(())
}

enum Obtained {
    Cover(Box<Cover>, ClassCache),
    Failed(ConjectureOutcome),
}

/// A verified cover to work with: the deepest stored one when it still
/// verifies, else whatever a fresh conjecture run produces.
fn obtain_cover(cfg: &RunConfig) -> Result<Obtained> {
    let mut cc = ClassCache::new();
    if let Some(d) = &cfg.cache {
        if let Some(cover) = d.load_cover(&cfg.basis) {
            ensure_cap(cover.depth_verified)?;
            let report = verify_cover(&cover, cover.depth_verified, &mut cc)?;
            if report.ok() {
                return Ok(Obtained::Cover(Box::new(cover), cc));
            }
            eprintln!(
                "warning: stored cover of Av({}) fails verification at depth {}; recomputing",
                cover.basis, cover.depth_verified
            );
        }
    }
    warm_avoiders(&cfg.cache, &cfg.basis, cfg.pipe.verify_depth, &mut cc);
    match conjecture(&cfg.basis, &cfg.pipe, &mut cc)? {
        ConjectureOutcome::Found(cover) => {
            store_artifacts(cfg, &cover, &mut cc);
            Ok(Obtained::Cover(Box::new(cover), cc))
        }
        other => Ok(Obtained::Failed(other)),
    }
}

fn cmd_gf(cfg: &RunConfig, json: bool) -> Result<ExitCode> {
    match obtain_cover(cfg)? {
        Obtained::Cover(cover, cc) => {
            let mut reg = ClassRegistry::with_cache(cc);
            reg.register((*cover).clone())?;
            let eqs = functional_equations(&cover, &reg);
            if json {
                println!(
                    "{{\"basis\":{},\"cover_basis\":{},\"equations\":{}}}",
                    jstr(&cfg.basis.to_string()),
                    jstr(&cover.basis.to_string()),
                    jstr(&eqs.render())
                );
            } else {
                if cover.basis != cfg.basis {
                    println!(
                        "stored cover is for the symmetric spelling Av({}); the series is the same",
                        cover.basis
                    );
                }
                print!("{}", eqs.render());
            }
            Ok(ExitCode::SUCCESS)
        }
        Obtained::Failed(out) => Ok(report_no_cover(cfg, &out, json)),
    }
}

fn cmd_sample(cfg: &RunConfig, length: usize, count: usize, json: bool) -> Result<ExitCode> {
    ensure_cap(length)?;
    match obtain_cover(cfg)? {
        Obtained::Cover(cover, cc) => {
            let mut reg = ClassRegistry::with_cache(cc);
            reg.register((*cover).clone())?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut samples = Vec::with_capacity(count);
            for _ in 0..count {
                samples.push(sample_class(&cfg.basis, length, &mut reg, &mut rng)?);
            }
            if json {
                let list: Vec<String> =
                    samples.iter().map(|p| jstr(&p.to_string())).collect();
                println!(
                    "{{\"basis\":{},\"length\":{},\"count\":{},\"seed\":{},\"samples\":[{}]}}",
                    jstr(&cfg.basis.to_string()),
                    length,
                    count,
                    cfg.seed,
                    list.join(",")
                );
            } else {
                for p in &samples {
                    println!("{p}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Obtained::Failed(out) => Ok(report_no_cover(cfg, &out, json)),
    }
}

fn cmd_verify(
    basis: &str,
    file: Option<PathBuf>,
    depth: Option<usize>,
    cache_dir: Option<PathBuf>,
    json: bool,
) -> Result<ExitCode> {
    let basis: Basis = basis.parse()?;
    let cover = match &file {
        Some(path) => {
            let cover = Cover::from_json(&fs::read_to_string(path)?)?;
            if cover.basis.canonical() != basis.canonical() {
                return Err(Error::Msg(format!(
                    "cover in {} is for Av({}), not Av({basis})",
                    path.display(),
                    cover.basis
                )));
            }
            cover
        }
        None => {
            let dc = disk_at(cache_dir).ok_or_else(|| {
                Error::Msg(format!(
                    "no cover file given and no cache configured (use --file, --cache-dir or {CACHE_ENV})"
                ))
            })?;
            dc.load_cover(&basis)
                .ok_or_else(|| Error::Msg(format!("no stored cover of Av({basis})")))?
        }
    };
    let depth = depth.unwrap_or(cover.depth_verified);
    ensure_cap(depth)?;
    let mut cc = ClassCache::new();
    let report = verify_cover(&cover, depth, &mut cc)?;
    let ok = report.ok();
    if json {
        let missing: Vec<String> =
            report.missing.iter().take(5).map(|p| jstr(&p.to_string())).collect();
        let duplicated: Vec<String> = report
            .duplicated
            .iter()
            .take(5)
            .map(|d| {
                format!(
                    "{{\"rules\":[{},{}],\"perm\":{}}}",
                    d.rules.0,
                    d.rules.1,
                    jstr(&d.perm.to_string())
                )
            })
            .collect();
        let foreign: Vec<String> = report
            .foreign
            .iter()
            .take(5)
            .map(|(i, p)| format!("{{\"rule\":{},\"perm\":{}}}", i, jstr(&p.to_string())))
            .collect();
        println!(
            "{{\"basis\":{},\"cover_basis\":{},\"rules\":{},\"depth\":{},\"ok\":{},\"certified\":{},\"missing\":{},\"duplicated\":{},\"foreign\":{},\"witnesses\":{{\"missing\":[{}],\"duplicated\":[{}],\"foreign\":[{}]}}}}",
            jstr(&basis.to_string()),
            jstr(&cover.basis.to_string()),
            cover.rules.len(),
            depth,
            ok,
            report.certified,
            report.missing.len(),
            report.duplicated.len(),
            report.foreign.len(),
            missing.join(","),
            duplicated.join(","),
            foreign.join(",")
        );
    } else if ok {
        println!(
            "cover of Av({}) ({} rules) verifies to depth {}{}",
            cover.basis,
            cover.rules.len(),
            depth,
            if report.certified { "; every rule is certified at all lengths" } else { "" }
        );
    } else {
        println!(
            "cover of Av({}) FAILS at depth {}: {} missing, {} gridded twice, {} outside the class",
            cover.basis,
            depth,
            report.missing.len(),
            report.duplicated.len(),
            report.foreign.len()
        );
        for p in report.missing.iter().take(5) {
            println!("  missing: {p}");
        }
        for d in report.duplicated.iter().take(5) {
            println!("  gridded twice (rules {} and {}): {}", d.rules.0 + 1, d.rules.1 + 1, d.perm);
        }
        for (i, p) in report.foreign.iter().take(5) {
            println!("  outside the class (rule {}): {}", i + 1, p);
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ERROR) })
}

fn cmd_enumerate(
    basis: &str,
    terms: usize,
    cache_dir: Option<PathBuf>,
    json: bool,
) -> Result<ExitCode> {
    let basis: Basis = basis.parse()?;
    ensure_cap(terms)?;
    let dc = disk_at(cache_dir);
    let mut reg = ClassRegistry::new();
    if let Some(d) = &dc {
        if let Some(sets) = d.load_avoiders(&basis, terms) {
            reg.cache_mut().adopt(sets);
        }
        if let Some(cover) = d.load_cover(&basis) {
            ensure_cap(cover.depth_verified)?;
            let report = verify_cover(&cover, cover.depth_verified, reg.cache_mut())?;
            if report.ok() {
                reg.register(cover)?;
            } else {
                eprintln!(
                    "warning: stored cover of Av({}) fails verification; enumerating directly",
                    cover.basis
                );
            }
        }
    }
    let seq = CountingSequence { terms: reg.counts_to(&basis, terms)? };
    if json {
        println!("{{\"basis\":{},\"sequence\":{}}}", jstr(&basis.to_string()), seq.to_json());
    } else {
        println!("{}", seq.comma_line());
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_bound_vector(s: &str) -> Result<Vec<Option<usize>>> {
    let t = s.trim().trim_start_matches('<').trim_end_matches('>');
    if t.trim().is_empty() {
        return Ok(Vec::new());
    }
    t.split(',')
        .map(|c| {
            let c = c.trim();
            if c == "*" {
                Ok(None)
            } else {
                c.parse::<usize>().map(Some).map_err(|_| {
                    Error::Msg(format!("vector component must be a number or *, got {c:?}"))
                })
            }
        })
        .collect()
}

fn cmd_peg(
    peg: &str,
    lower: Option<&str>,
    upper: Option<&str>,
    fill_with: Option<&str>,
    json: bool,
) -> Result<ExitCode> {
    let peg: PegPermutation = peg.parse()?;
    if let Some(vs) = fill_with {
        let v: FillingVector = vs.parse()?;
        let filled = fill(&peg, &v)?;
        if json {
            println!(
                "{{\"peg\":{},\"vector\":{},\"fill\":{}}}",
                jstr(&peg.to_string()),
                jstr(&v.to_string()),
                jstr(&filled.to_string())
            );
        } else {
            println!("{filled}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let defaults = ConvexVectorSet::all_filling(&peg);
    let lower = match lower {
        Some(s) => parse_bound_vector(s)?
            .into_iter()
            .map(|c| c.ok_or_else(|| Error::Msg("lower bounds must be numbers".into())))
            .collect::<Result<Vec<usize>>>()?,
        None => defaults.lower().to_vec(),
    };
    let upper = match upper {
        Some(s) => parse_bound_vector(s)?,
        None => defaults.upper().to_vec(),
    };
    let vs = ConvexVectorSet::new(lower, upper)?;
    let rule = peg_to_rule(&peg, &vs)?;
    if json {
        let lo: Vec<String> = vs.lower().iter().map(|v| v.to_string()).collect();
        let up: Vec<String> = vs
            .upper()
            .iter()
            .map(|u| u.map(|v| v.to_string()).unwrap_or_else(|| "null".into()))
            .collect();
        println!(
            "{{\"peg\":{},\"lower\":[{}],\"upper\":[{}],\"rule\":{},\"width\":{},\"height\":{}}}",
            jstr(&peg.to_string()),
            lo.join(","),
            up.join(","),
            jstr(&rule.encoding()),
            rule.width(),
            rule.height()
        );
    } else {
        println!("peg:  {peg}");
        println!("rule: {}", rule.encoding());
        print!("{}", rule.render_ascii());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export_cnf(
    basis: &str,
    max_dim: Option<&str>,
    depth: Option<usize>,
    full: bool,
    out: Option<PathBuf>,
    json: bool,
) -> Result<ExitCode> {
    let basis: Basis = basis.parse()?;
    let mut cfg = GenConfig::for_basis(&basis);
    if let Some(d) = max_dim {
        let (w, h) = parse_dims(d)?;
        cfg = cfg.with_dims(w, h);
    }
    if let Some(d) = depth {
        cfg = cfg.with_depth(d);
    }
    if !full {
        cfg = cfg.active_only();
    }
    ensure_cap(cfg.depth)?;
    let mut cc = ClassCache::new();
    let bs = block_set(&basis, &mut cc)?;
    let poset = build_poset(&bs);
    let rules = generate_rules(&bs, &poset, &cfg, &mut cc)?;
    let inst = build_instance(&basis, &rules, cfg.depth, &mut cc)?;
    let cnf = export_cnf(&inst);
    if let Some(path) = &out {
        fs::write(path, &cnf)?;
    }
    if json {
        println!(
            "{{\"basis\":{},\"rules\":{},\"universe\":{},\"cnf\":{}}}",
            jstr(&basis.to_string()),
            inst.rules().len(),
            inst.universe().len(),
            jstr(&cnf)
        );
    } else if let Some(path) = &out {
        println!(
            "wrote {} rule variables over a universe of {} to {}",
            inst.rules().len(),
            inst.universe().len(),
            path.display()
        );
    } else {
        print!("{cnf}");
    }
    Ok(ExitCode::SUCCESS)
}

struct BatchTask {
    input: String,
    /// Canonical spelling; one task per symmetry class.
    basis: Basis,
}

enum BatchOutcome {
    Found { max_dim: usize, rules: usize, sequence: CountingSequence },
    NoCover,
    Budget { what: &'static str },
    Error { msg: String },
}

struct BatchRow {
    input: String,
    canonical: Option<Basis>,
    /// Number of basis patterns; 0 for unparseable lines.
    size: usize,
    outcome: BatchOutcome,
}

#[derive(Default)]
struct AggRow {
    found: BTreeMap<usize, usize>,
    none: usize,
    budget: usize,
    error: usize,
    total: usize,
}

fn run_batch_task(
    task: &BatchTask,
    a: &RunArgs,
    timeout: Duration,
    dc: Option<&DiskCache>,
) -> BatchRow {
    let attempt = || -> Result<BatchOutcome> {
        let mut pipe = PipelineConfig::for_basis(&task.basis);
        apply_run_args(&mut pipe, a)?;
        pipe = pipe.with_deadline(Instant::now() + timeout);
        let mut cc = ClassCache::new();
        if let Some(d) = dc {
            if let Some(sets) = d.load_avoiders(&task.basis, pipe.verify_depth) {
                cc.adopt(sets);
            }
        }
        match conjecture(&task.basis, &pipe, &mut cc)? {
            ConjectureOutcome::Found(cover) => {
                if let Some(d) = dc {
                    if let Err(e) = d.store_cover(&cover) {
                        eprintln!("warning: cover not cached: {e}");
                    }
                }
                let mut reg = ClassRegistry::with_cache(cc);
                reg.register(cover.clone())?;
                let sequence = counting_sequence(&cover, a.terms, &mut reg)?;
                Ok(BatchOutcome::Found {
                    max_dim: cover_max_dim(&cover),
                    rules: cover.rules.len(),
                    sequence,
                })
            }
            ConjectureOutcome::None { .. } => Ok(BatchOutcome::NoCover),
            ConjectureOutcome::Unknown { what, .. } => Ok(BatchOutcome::Budget { what }),
        }
    };
    BatchRow {
        input: task.input.clone(),
        canonical: Some(task.basis.clone()),
        size: task.basis.len(),
        outcome: attempt().unwrap_or_else(|e| BatchOutcome::Error { msg: e.to_string() }),
    }
}

fn cmd_batch(file: &Path, jobs: Option<usize>, a: &RunArgs, json: bool) -> Result<ExitCode> {
    let text = fs::read_to_string(file)?;
    let dc = disk_at(a.cache_dir.clone());
    let timeout = Duration::from_secs(a.timeout.unwrap_or(60));
    let mut rows: Vec<Mutex<Option<BatchRow>>> = Vec::new();
    let mut tasks: Vec<(usize, BatchTask)> = Vec::new();
    let mut seen: BTreeSet<Basis> = BTreeSet::new();
    let mut cap_needed = a.terms;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<Basis>() {
            Ok(b) => {
                let canon = b.canonical();
                if !seen.insert(canon.clone()) {
                    continue;
                }
                let mut pipe = PipelineConfig::for_basis(&canon);
                apply_run_args(&mut pipe, a)?;
                cap_needed = cap_needed.max(pipe.verify_depth);
                let idx = rows.len();
                rows.push(Mutex::new(None));
                tasks.push((idx, BatchTask { input: line.to_string(), basis: canon }));
            }
            Err(e) => {
                rows.push(Mutex::new(Some(BatchRow {
                    input: line.to_string(),
                    canonical: None,
                    size: 0,
                    outcome: BatchOutcome::Error { msg: e.to_string() },
                })));
            }
        }
    }
    ensure_cap(cap_needed)?;
    let workers = jobs
        .unwrap_or_else(|| thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, tasks.len().max(1));
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= tasks.len() {
                    break;
                }
                let (idx, task) = &tasks[t];
                let row = run_batch_task(task, a, timeout, dc.as_ref());
                *rows[*idx].lock().expect("no panics while holding the slot") = Some(row);
            });
        }
    });
    let rows: Vec<BatchRow> = rows
        .into_iter()
        .map(|m| m.into_inner().expect("worker panicked").expect("every slot is filled"))
        .collect();

    let mut agg: BTreeMap<usize, AggRow> = BTreeMap::new();
    for r in &rows {
        let row = agg.entry(r.size).or_default();
        row.total += 1;
        match &r.outcome {
            BatchOutcome::Found { max_dim, .. } => *row.found.entry(*max_dim).or_default() += 1,
            BatchOutcome::NoCover => row.none += 1,
            BatchOutcome::Budget { .. } => row.budget += 1,
            BatchOutcome::Error { .. } => row.error += 1,
        }
    }

    if json {
        let base_rows: Vec<String> = rows.iter().map(batch_row_json).collect();
        let agg_rows: Vec<String> = agg
            .iter()
            .map(|(size, r)| {
                let found: Vec<String> =
                    r.found.iter().map(|(k, c)| format!("\"{k}\":{c}")).collect();
                format!(
                    "{{\"size\":{},\"found\":{{{}}},\"none\":{},\"budget\":{},\"error\":{},\"total\":{}}}",
                    size,
                    found.join(","),
                    r.none,
                    r.budget,
                    r.error,
                    r.total
                )
            })
            .collect();
        println!("{{\"bases\":[{}],\"aggregate\":[{}]}}", base_rows.join(","), agg_rows.join(","));
    } else {
        for r in &rows {
            let name = match &r.canonical {
                Some(c) if c.to_string() != r.input => format!("{} (Av({c}))", r.input),
                _ => r.input.clone(),
            };
            match &r.outcome {
                BatchOutcome::Found { max_dim, rules, sequence } => println!(
                    "{name}: cover, largest dimension {max_dim}, {rules} rules; {}",
                    sequence.comma_line()
                ),
                BatchOutcome::NoCover => println!("{name}: no cover within bounds"),
                BatchOutcome::Budget { what } => println!("{name}: budget ({what})"),
                BatchOutcome::Error { msg } => println!("{name}: error: {msg}"),
            }
        }
        println!();
        println!("outcomes by basis size and largest rule dimension");
        let dims: BTreeSet<usize> =
            agg.values().flat_map(|r| r.found.keys().copied()).collect();
        let mut header = String::from("size");
        for k in &dims {
            header.push_str(&format!("  {k}x{k}"));
        }
        header.push_str("  none  budget  error  total");
        println!("{header}");
        for (size, r) in &agg {
            let mut line = format!("{size:<4}");
            for k in &dims {
                line.push_str(&format!("  {:>3}", r.found.get(k).copied().unwrap_or(0)));
            }
            line.push_str(&format!(
                "  {:>4}  {:>6}  {:>5}  {:>5}",
                r.none, r.budget, r.error, r.total
            ));
            println!("{line}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn batch_row_json(r: &BatchRow) -> String {
    let canonical = match &r.canonical {
        Some(c) => jstr(&c.to_string()),
        None => "null".into(),
    };
    match &r.outcome {
        BatchOutcome::Found { max_dim, rules, sequence } => format!(
            "{{\"input\":{},\"canonical\":{},\"size\":{},\"outcome\":\"found\",\"max_dim\":{},\"rules\":{},\"sequence\":{}}}",
            jstr(&r.input),
            canonical,
            r.size,
            max_dim,
            rules,
            sequence.to_json()
        ),
        BatchOutcome::NoCover => format!(
            "{{\"input\":{},\"canonical\":{},\"size\":{},\"outcome\":\"none\"}}",
            jstr(&r.input),
            canonical,
            r.size
        ),
        BatchOutcome::Budget { what } => format!(
            "{{\"input\":{},\"canonical\":{},\"size\":{},\"outcome\":\"budget\",\"what\":{}}}",
            jstr(&r.input),
            canonical,
            r.size,
            jstr(what)
        ),
        BatchOutcome::Error { msg } => format!(
            "{{\"input\":{},\"canonical\":{},\"size\":{},\"outcome\":\"error\",\"error\":{}}}",
            jstr(&r.input),
            canonical,
            r.size,
            jstr(msg)
        ),
    }
}
