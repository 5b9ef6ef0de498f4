//! Counting through covers: a registry resolving any class, by canonical
//! basis, to either a registered cover or brute-force enumeration, and the
//! per-length dynamic program that turns a cover into its exact counting
//! sequence.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::avoid::ClassCache;
use crate::basis::Basis;
use crate::count::{count_rule, CellCounts};
use crate::cover::Cover;
use crate::error::{Error, Result};

/// Exact class counts a₀..a_N.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CountingSequence {
    pub terms: Vec<BigUint>,
}

impl CountingSequence {
    /// A plain comma line, ready for sequence-database lookups.
    pub fn comma_line(&self) -> String {
        self.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
    }

    /// A JSON array; written by hand because the terms may outgrow the
    /// fixed-width integers of off-the-shelf serializers.
    pub fn to_json(&self) -> String {
        format!("[{}]", self.comma_line())
    }
}

/// Count provider keyed by canonical basis. Classes with a registered cover
/// are counted through it; everything else falls back to enumerating
/// avoiders directly.
pub struct ClassRegistry {
    covers: HashMap<Basis, Cover>,
    tables: HashMap<Basis, Vec<BigUint>>,
    cache: ClassCache,
    in_progress: HashSet<Basis>,
}

impl ClassRegistry {
    pub fn new() -> Self {
        ClassRegistry {
            covers: HashMap::new(),
            tables: HashMap::new(),
            cache: ClassCache::new(),
            in_progress: HashSet::new(),
        }
    }

    pub fn with_cache(cache: ClassCache) -> Self {
        ClassRegistry { cache, ..ClassRegistry::new() }
    }

    pub fn cache_mut(&mut self) -> &mut ClassCache {
        &mut self.cache
    }

    /// Register a cover under its basis's canonical form, replacing any
    /// previous entry (and its memoized counts).
    pub fn register(&mut self, cover: Cover) -> Result<()> {
        well_founded(&cover)?;
        let key = cover.basis.canonical();
        self.tables.remove(&key);
        self.covers.insert(key, cover);
        Ok(())
    }

    pub fn cover_for(&self, basis: &Basis) -> Option<&Cover> {
        self.covers.get(&basis.canonical())
    }

    /// Exact counts a₀..a_n for the class, through its registered cover if
    /// any. Covers reachable from this one are evaluated first; mutual
    /// recursion between distinct classes is rejected.
    pub fn counts_to(&mut self, basis: &Basis, n: usize) -> Result<Vec<BigUint>> {
        let key = basis.canonical();
        if let Some(t) = self.tables.get(&key) {
            if t.len() > n {
                return Ok(t[..=n].to_vec());
            }
        }
        if self.in_progress.contains(&key) {
            return Err(Error::CyclicCovers { basis: key.to_string() });
        }
        let table = match self.covers.get(&key).cloned() {
            None => {
                self.cache.ensure(&key, n)?;
                self.cache.get(&key).counts()
            }
            Some(cover) => {
                self.in_progress.insert(key.clone());
                let result = self.table_for_cover(&cover, n);
                self.in_progress.remove(&key);
                result?
            }
        };
        let out = table[..=n].to_vec();
        self.tables.insert(key, table);
        Ok(out)
    }

    pub fn count(&mut self, basis: &Basis, n: usize) -> Result<BigUint> {
        Ok(self.counts_to(basis, n)?[n].clone())
    }

    /// The counting dynamic program for one cover, independent of whether
    /// the cover is registered: a_m = Σ over rules of count_rule(rule, m),
    /// for m ascending, with cells of the cover's own class read from the
    /// partial table. Well-foundedness makes every such read strictly
    /// shorter than m.
    pub fn table_for_cover(&mut self, cover: &Cover, n: usize) -> Result<Vec<BigUint>> {
        well_founded(cover)?;
        let key = cover.basis.canonical();
        let mut deps = BTreeSet::new();
        for rule in &cover.rules {
            for (_, _, cell) in rule.class_cells() {
                let canon = cell.canonical();
                if canon != key {
                    deps.insert(canon);
                }
            }
        }
        for dep in deps {
            self.counts_to(&dep, n)?;
        }
        let mut table: Vec<BigUint> = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let mut a = BigUint::zero();
            {
                let mut provider =
                    TableCounts { key: &key, partial: &table, tables: &self.tables };
                for rule in &cover.rules {
                    a += count_rule(rule, m, &mut provider)?;
                }
            }
            table.push(a);
        }
        Ok(table)
    }
}

impl Default for ClassRegistry {
    fn default() -> Self {
        ClassRegistry::new()
    }
}

/// A registry is itself a counting provider, so rules can be counted with
/// registered covers standing in for brute-force enumeration.
impl CellCounts for ClassRegistry {
    fn class_count(&mut self, basis: &Basis, n: usize) -> Result<BigUint> {
        self.count(basis, n)
    }
}

/// Counting through a cover terminates iff every rule mentioning the
/// cover's own class also has a point cell: the point makes every content
/// strictly shorter than the permutation being counted.
fn well_founded(cover: &Cover) -> Result<()> {
    let key = cover.basis.canonical();
    for rule in &cover.rules {
        let self_ref = rule.class_cells().iter().any(|(_, _, b)| b.canonical() == key);
        if self_ref && rule.point_count() == 0 {
            return Err(Error::IllFoundedCover {
                basis: cover.basis.to_string(),
                rule: rule.encoding(),
            });
        }
    }
    Ok(())
}

struct TableCounts<'a> {
    key: &'a Basis,
    partial: &'a [BigUint],
    tables: &'a HashMap<Basis, Vec<BigUint>>,
}

impl CellCounts for TableCounts<'_> {
    fn class_count(&mut self, basis: &Basis, n: usize) -> Result<BigUint> {
        let canon = basis.canonical();
        let table = if &canon == self.key {
            self.partial
        } else {
            self.tables.get(&canon).map(Vec::as_slice).unwrap_or(&[])
        };
        table.get(n).cloned().ok_or_else(|| Error::MissingCounts {
            basis: canon.to_string(),
            size: n,
        })
    }
}

/// The cover's counting sequence a₀..a_N, with cell classes resolved
/// through the registry.
pub fn counting_sequence(
    cover: &Cover,
    n: usize,
    reg: &mut ClassRegistry,
) -> Result<CountingSequence> {
    Ok(CountingSequence { terms: reg.table_for_cover(cover, n)? })
}
