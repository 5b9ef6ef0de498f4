//! Disk persistence for the expensive artifacts: avoidance sets, rule
//! pools, and covers.
//!
//! Everything is keyed by the canonical basis, so symmetric spellings of
//! one class share a single directory; avoidance sets are mapped through
//! the symmetry on store and load, which keeps hits identical to
//! recomputation. Files are placed atomically (write-then-rename) and
//! never edited afterwards; an entry that fails to parse or validate is
//! deleted and recomputed by the caller.

use std::fs;
use std::path::{Path, PathBuf};

use crate::avoid::PermSetByLength;
use crate::basis::Basis;
use crate::cover::Cover;
use crate::error::Result;
use crate::perm::Permutation;
use crate::rule::Rule;
use crate::sym::apply_symmetry;

/// Environment variable naming the cache root directory.
pub const CACHE_ENV: &str = "PERMCOVER_CACHE";

pub struct DiskCache {
    root: PathBuf,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct AvoidersDto {
    basis: String,
    depth: usize,
    perms: Vec<Vec<Permutation>>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct RulePoolDto {
    basis: String,
    width: usize,
    height: usize,
    depth: usize,
    active_only: bool,
    rules: Vec<String>,
}

impl DiskCache {
    pub fn at(root: impl Into<PathBuf>) -> Self {
        DiskCache { root: root.into() }
    }

    /// The cache named by [`CACHE_ENV`], if set and nonempty.
    pub fn from_env() -> Option<Self> {
        std::env::var(CACHE_ENV).ok().filter(|v| !v.is_empty()).map(DiskCache::at)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn class_dir(&self, canon: &Basis) -> PathBuf {
        self.root.join(canon.to_string())
    }

    fn write_atomic(&self, path: &Path, data: &str) -> Result<()> {
        fs::create_dir_all(path.parent().expect("cache files live under the root"))?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, data)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Cache entries of one kind in a class directory, as (numeric tag,
    /// path) pairs, ascending by tag.
    fn entries(&self, canon: &Basis, prefix: &str) -> Vec<(usize, PathBuf)> {
        let mut out = Vec::new();
        let Ok(dir) = fs::read_dir(self.class_dir(canon)) else {
            return out;
        };
        for entry in dir.flatten() {
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if let Some(tag) = name
                .strip_prefix(prefix)
                .and_then(|t| t.strip_suffix(".json"))
                .and_then(|t| t.parse::<usize>().ok())
            {
                out.push((tag, entry.path()));
            }
        }
        out.sort();
        out
    }

    pub fn store_avoiders(&self, sets: &PermSetByLength) -> Result<()> {
        let (canon, s) = sets.basis().canonical_with();
        let perms: Vec<Vec<Permutation>> = sets
            .by_len()
            .iter()
            .map(|level| {
                let mut mapped: Vec<Permutation> =
                    level.iter().map(|p| apply_symmetry(s, p)).collect();
                mapped.sort();
                mapped
            })
            .collect();
        let dto =
            AvoidersDto { basis: canon.to_string(), depth: sets.depth(), perms };
        let path = self.class_dir(&canon).join(format!("avoiders-{}.json", sets.depth()));
        self.write_atomic(&path, &serde_json::to_string(&dto)?)
    }

    /// Avoidance sets for `basis` up to `depth`, if some entry of the
    /// canonical class is at least that deep. The result equals
    /// recomputation exactly.
    pub fn load_avoiders(&self, basis: &Basis, depth: usize) -> Option<PermSetByLength> {
        let (canon, s) = basis.canonical_with();
        for (stored_depth, path) in self.entries(&canon, "avoiders-") {
            if stored_depth < depth {
                continue;
            }
            let Some(dto) = self.parse_or_discard::<AvoidersDto>(&path) else { continue };
            let plausible = dto.basis == canon.to_string()
                && dto.depth == stored_depth
                && dto.perms.len() == stored_depth + 1
                && dto.perms.iter().enumerate().all(|(n, ps)| ps.iter().all(|p| p.len() == n));
            if !plausible {
                let _ = fs::remove_file(&path);
                continue;
            }
            let inv = s.inverse();
            let by_len: Vec<Vec<Permutation>> = dto.perms[..=depth]
                .iter()
                .map(|level| {
                    let mut mapped: Vec<Permutation> =
                        level.iter().map(|p| apply_symmetry(inv, p)).collect();
                    mapped.sort();
                    mapped
                })
                .collect();
            return Some(PermSetByLength::from_parts(basis.clone(), by_len));
        }
        None
    }

    pub fn store_cover(&self, cover: &Cover) -> Result<()> {
        let canon = cover.basis.canonical();
        let path =
            self.class_dir(&canon).join(format!("cover-{}.json", cover.depth_verified));
        self.write_atomic(&path, &cover.to_json())
    }

    /// The deepest-verified stored cover of the class, in whatever
    /// symmetric spelling it was stored under.
    pub fn load_cover(&self, basis: &Basis) -> Option<Cover> {
        let canon = basis.canonical();
        for (_, path) in self.entries(&canon, "cover-").into_iter().rev() {
            let Ok(text) = fs::read_to_string(&path) else { continue };
            match Cover::from_json(&text) {
                Ok(cover) if cover.basis.canonical() == canon => return Some(cover),
                _ => {
                    let _ = fs::remove_file(&path);
                }
            }
        }
        None
    }

    pub fn store_rules(
        &self,
        basis: &Basis,
        width: usize,
        height: usize,
        depth: usize,
        active_only: bool,
        rules: &[Rule],
    ) -> Result<()> {
        let canon = basis.canonical();
        let dto = RulePoolDto {
            basis: canon.to_string(),
            width,
            height,
            depth,
            active_only,
            rules: rules.iter().map(|r| r.to_json()).collect(),
        };
        let path = self.class_dir(&canon).join(rule_file(width, height, depth, active_only));
        self.write_atomic(&path, &serde_json::to_string(&dto)?)
    }

    /// A rule pool stored for exactly these generation parameters. Pools are
    /// in canonical-basis terms, so this is only meaningful when `basis` is
    /// canonical itself.
    pub fn load_rules(
        &self,
        basis: &Basis,
        width: usize,
        height: usize,
        depth: usize,
        active_only: bool,
    ) -> Option<Vec<Rule>> {
        let canon = basis.canonical();
        if canon != *basis {
            return None;
        }
        let path = self.class_dir(&canon).join(rule_file(width, height, depth, active_only));
        if !path.exists() {
            return None;
        }
        let dto = self.parse_or_discard::<RulePoolDto>(&path)?;
        if dto.basis != canon.to_string()
            || (dto.width, dto.height, dto.depth, dto.active_only)
                != (width, height, depth, active_only)
        {
            let _ = fs::remove_file(&path);
            return None;
        }
        let mut rules = Vec::with_capacity(dto.rules.len());
        for r in &dto.rules {
            match Rule::from_json(r) {
                Ok(rule) => rules.push(rule),
                Err(_) => {
                    let _ = fs::remove_file(&path);
                    return None;
                }
            }
        }
        Some(rules)
    }

    fn parse_or_discard<T: serde::de::DeserializeOwned>(&self, path: &Path) -> Option<T> {
        let text = fs::read_to_string(path).ok()?;
        match serde_json::from_str(&text) {
            Ok(v) => Some(v),
            Err(_) => {
                let _ = fs::remove_file(path);
                None
            }
        }
    }
}

fn rule_file(width: usize, height: usize, depth: usize, active_only: bool) -> String {
    let mode = if active_only { "active" } else { "full" };
    format!("rules-{width}x{height}-{mode}-{depth}.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avoid::avoiders;
    use crate::block::{block_set, build_poset};
    use crate::gen::{generate_rules, GenConfig};
    use crate::ClassCache;

    fn b(s: &str) -> Basis {
        s.parse().unwrap()
    }

    fn scratch(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("permcover-cache-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn avoiders_round_trip() {
        let dir = scratch("roundtrip");
        let cache = DiskCache::at(&dir);
        let sets = avoiders(&b("231"), 7).unwrap();
        cache.store_avoiders(&sets).unwrap();
        assert_eq!(cache.load_avoiders(&b("231"), 7).unwrap(), sets);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn symmetric_spellings_share_one_entry() {
        let dir = scratch("symmetry");
        let cache = DiskCache::at(&dir);
        cache.store_avoiders(&avoiders(&b("231"), 6).unwrap()).unwrap();
        // One directory, named by the canonical basis.
        let dirs: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(dirs, ["132"]);
        // A rotated spelling hits the same entry and gets its own sets back.
        let loaded = cache.load_avoiders(&b("312"), 6).unwrap();
        assert_eq!(loaded, avoiders(&b("312"), 6).unwrap());
        assert!(cache.load_avoiders(&b("321"), 6).is_none());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn deeper_entries_serve_shallow_requests() {
        let dir = scratch("prefix");
        let cache = DiskCache::at(&dir);
        cache.store_avoiders(&avoiders(&b("123_231"), 6).unwrap()).unwrap();
        let loaded = cache.load_avoiders(&b("123_231"), 4).unwrap();
        assert_eq!(loaded, avoiders(&b("123_231"), 4).unwrap());
        assert_eq!(loaded.depth(), 4);
        assert!(cache.load_avoiders(&b("123_231"), 7).is_none());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn corrupt_entries_are_discarded() {
        let dir = scratch("corrupt");
        let cache = DiskCache::at(&dir);
        let path = dir.join("132").join("avoiders-5.json");
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, "{ not json").unwrap();
        assert!(cache.load_avoiders(&b("132"), 5).is_none());
        assert!(!path.exists());
        // Well-formed JSON that fails validation is discarded the same way.
        fs::write(&path, r#"{"basis":"132","depth":5,"perms":[["1"]]}"#).unwrap();
        assert!(cache.load_avoiders(&b("132"), 5).is_none());
        assert!(!path.exists());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn cover_round_trip_prefers_deepest() {
        let dir = scratch("cover");
        let cache = DiskCache::at(&dir);
        let rule = Rule::from_sparse(
            2,
            2,
            [(0, 1, crate::block::Block::Point), (1, 0, "Av(12)".parse().unwrap())],
        )
        .unwrap();
        let shallow = Cover::new(b("12"), vec![Rule::empty(), rule.clone()], 4);
        let mut deep = shallow.clone();
        deep.depth_verified = 6;
        cache.store_cover(&shallow).unwrap();
        cache.store_cover(&deep).unwrap();
        let loaded = cache.load_cover(&b("12")).unwrap();
        assert_eq!(loaded, deep);
        // A symmetric spelling of the basis finds the same cover.
        assert_eq!(cache.load_cover(&b("21")).unwrap(), deep);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn rule_pools_round_trip_on_exact_parameters() {
        let dir = scratch("rules");
        let cache = DiskCache::at(&dir);
        let basis = b("132");
        let mut cc = ClassCache::new();
        let blocks = block_set(&basis, &mut cc).unwrap();
        let poset = build_poset(&blocks);
        let cfg = GenConfig::for_basis(&basis).with_dims(2, 2);
        let pool = generate_rules(&blocks, &poset, &cfg, &mut cc).unwrap();
        assert!(!pool.is_empty());
        cache.store_rules(&basis, 2, 2, cfg.depth, false, &pool).unwrap();
        assert_eq!(cache.load_rules(&basis, 2, 2, cfg.depth, false).unwrap(), pool);
        assert!(cache.load_rules(&basis, 3, 3, cfg.depth, false).is_none());
        assert!(cache.load_rules(&basis, 2, 2, cfg.depth, true).is_none());
        let _ = fs::remove_dir_all(&dir);
    }
}
