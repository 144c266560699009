//! Persistent store of central values, one JSON object per line.
//!
//! Loading keeps every well-formed line up to the first malformed one and
//! drops the rest with a warning. Saving rewrites the whole file through a
//! temporary sibling and a rename, so a crash never leaves a torn file.

use log::warn;
use nvlab_core::characters::CharacterSet;
use nvlab_core::lvalue::{lvalues_direct_all, Method};
use nvlab_core::moments::LValueSource;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub q: u64,
    pub index: usize,
    pub parity: String,
    pub conductor: u64,
    pub method: String,
    pub re: f64,
    pub im: f64,
    pub config_hash: String,
    pub version: String,
}

impl CacheEntry {
    fn key(&self) -> (u64, usize, String, String) {
        (self.q, self.index, self.method.clone(), self.config_hash.clone())
    }
}

/// Hash of everything the direct values depend on.
pub fn direct_config_hash() -> String {
    let mut h = Sha256::new();
    h.update(b"method=direct;zeta=hurwitz-euler-maclaurin;version=");
    h.update(VERSION.as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Why a file failed a strict check.
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub line: usize,
    pub reason: String,
}

fn parse_line(line: &str) -> Result<CacheEntry, String> {
    let e: CacheEntry = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if !(e.re.is_finite() && e.im.is_finite()) {
        return Err("non-finite value".into());
    }
    Ok(e)
}

/// Reads entries, stopping at the first bad line.
fn read_entries(path: &Path) -> io::Result<(Vec<CacheEntry>, Option<Corruption>)> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((Vec::new(), None)),
        Err(e) => return Err(e),
    };
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(e) if seen.insert(e.key()) => entries.push(e),
            Ok(_) => {
                let bad = Corruption { line: i + 1, reason: "duplicate key".into() };
                return Ok((entries, Some(bad)));
            }
            Err(reason) => return Ok((entries, Some(Corruption { line: i + 1, reason }))),
        }
    }
    Ok((entries, None))
}

/// Strict check: the number of entries, or the first problem.
pub fn verify(path: &Path) -> io::Result<Result<usize, Corruption>> {
    let (entries, bad) = read_entries(path)?;
    Ok(match bad {
        Some(c) => Err(c),
        None => Ok(entries.len()),
    })
}

#[derive(Debug)]
pub struct LValueCache {
    path: Option<PathBuf>,
    config_hash: String,
    loaded: Vec<CacheEntry>,
    values: RwLock<HashMap<(u64, usize), Complex64>>,
    fresh: Mutex<Vec<CacheEntry>>,
    hits: AtomicU64,
    misses: AtomicU64,
    truncated: Option<Corruption>,
}

impl LValueCache {
    /// A cache that never touches disk.
    pub fn in_memory() -> LValueCache {
        Self::build(None, Vec::new(), None)
    }

    pub fn open(path: &Path) -> io::Result<LValueCache> {
        let (entries, bad) = read_entries(path)?;
        if let Some(c) = &bad {
            warn!(
                "cache {}: line {} unreadable ({}); keeping the {} entries before it",
                path.display(),
                c.line,
                c.reason,
                entries.len()
            );
        }
        Ok(Self::build(Some(path.to_path_buf()), entries, bad))
    }

    fn build(path: Option<PathBuf>, loaded: Vec<CacheEntry>, truncated: Option<Corruption>) -> Self {
        let config_hash = direct_config_hash();
        let values = loaded
            .iter()
            .filter(|e| e.method == Method::Direct.as_str() && e.config_hash == config_hash)
            .map(|e| ((e.q, e.index), Complex64::new(e.re, e.im)))
            .collect();
        LValueCache {
            path,
            config_hash,
            loaded,
            values: RwLock::new(values),
            fresh: Mutex::new(Vec::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            truncated,
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn truncated(&self) -> Option<&Corruption> {
        self.truncated.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write loaded and new entries, sorted, via rename.
    pub fn save(&self) -> io::Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut all = self.loaded.clone();
        let mut fresh = self.fresh.lock().expect("cache lock").clone();
        fresh.sort_by_key(|a| (a.q, a.index));
        all.extend(fresh);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut f = io::BufWriter::new(fs::File::create(&tmp)?);
            for e in &all {
                serde_json::to_writer(&mut f, e)?;
                f.write_all(b"\n")?;
            }
            f.flush()?;
        }
        fs::rename(&tmp, path)
    }
}

impl LValueSource for LValueCache {
    fn lvalues(&self, set: &CharacterSet) -> nvlab_core::Result<Vec<Option<Complex64>>> {
        let q = set.modulus();
        let wanted = set.iter().filter(|c| !c.is_principal()).count() as u64;
        {
            let values = self.values.read().expect("cache lock");
            let found: Vec<Option<Complex64>> = set
                .iter()
                .map(|c| (!c.is_principal()).then(|| values.get(&(q, c.index())).copied()).flatten())
                .collect();
            if found.iter().filter(|v| v.is_some()).count() as u64 == wanted {
                self.hits.fetch_add(wanted, Ordering::Relaxed);
                return Ok(found);
            }
        }
        let computed = lvalues_direct_all(set)?;
        self.misses.fetch_add(wanted, Ordering::Relaxed);
        let mut values = self.values.write().expect("cache lock");
        let mut fresh = self.fresh.lock().expect("cache lock");
        for chi in set.iter() {
            if let Some(v) = computed[chi.index()] {
                if values.insert((q, chi.index()), v).is_none() {
                    fresh.push(CacheEntry {
                        q,
                        index: chi.index(),
                        parity: chi.parity().as_str().to_string(),
                        conductor: chi.conductor(),
                        method: Method::Direct.as_str().to_string(),
                        re: v.re,
                        im: v.im,
                        config_hash: self.config_hash.clone(),
                        version: VERSION.to_string(),
                    });
                }
            }
        }
        Ok(computed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lv.jsonl");
        let first = LValueCache::open(&path).unwrap();
        let set = CharacterSet::new(37);
        let a = first.lvalues(&set).unwrap();
        assert_eq!(first.misses(), 35);
        first.save().unwrap();

        let second = LValueCache::open(&path).unwrap();
        let b = second.lvalues(&set).unwrap();
        assert_eq!((second.hits(), second.misses()), (35, 0));
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Some(x), Some(y)) => {
                    assert_eq!(x.re.to_bits(), y.re.to_bits());
                    assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
                (None, None) => {}
                _ => panic!("principal mismatch"),
            }
        }
        assert_eq!(verify(&path).unwrap(), Ok(35));
    }

    #[test]
    fn truncates_at_first_bad_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lv.jsonl");
        let c = LValueCache::open(&path).unwrap();
        c.lvalues(&CharacterSet::new(5)).unwrap();
        c.save().unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        let first = text.lines().next().unwrap().to_owned();
        text.push_str(&first);
        fs::write(&path, text).unwrap();

        assert_eq!(verify(&path).unwrap().unwrap_err().line, 4);
        let reopened = LValueCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 3);
        assert_eq!(reopened.truncated().unwrap().line, 4);
        reopened.save().unwrap();
        assert_eq!(verify(&path).unwrap(), Ok(3));
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let c = LValueCache::open(&dir.path().join("none.jsonl")).unwrap();
        assert!(c.is_empty());
        assert!(LValueCache::in_memory().save().is_ok());
    }
}
