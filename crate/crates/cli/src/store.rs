//! On-disk cache of discriminant records.
//!
//! Layout: one JSON header line, then records as a little-endian `u32`
//! length followed by `d, t, u` (`u64`), `epsilon` (`f64`), `h` (`u64`) and
//! `L(1, chi_d)` (`f64`), all little-endian.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use pellclass::arith::is_discriminant;
use pellclass::classno::DiscriminantRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "pellclass-cache";
pub const VERSION: u32 = 1;
const RECORD_LEN: u32 = 48;
/// Largest allowed `|formula value - h|` in a stored row.
pub const FORMULA_SLACK: f64 = pellclass::classno::ROUNDING_SLACK;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub format: String,
    pub version: u32,
    pub x: f64,
    pub alpha: f64,
    pub p_trunc: u64,
    pub l_tol: f64,
    pub count: u64,
    pub digest: String,
}

impl CacheHeader {
    pub fn new(x: f64, alpha: f64, p_trunc: u64, l_tol: f64, count: u64) -> Self {
        let mut h = CacheHeader {
            format: FORMAT.into(),
            version: VERSION,
            x,
            alpha,
            p_trunc,
            l_tol,
            count,
            digest: String::new(),
        };
        h.digest = h.compute_digest();
        h
    }

    /// SHA-256 over the bit patterns of every other field.
    pub fn compute_digest(&self) -> String {
        let mut s = Sha256::new();
        s.update(self.format.as_bytes());
        s.update(self.version.to_le_bytes());
        s.update(self.x.to_bits().to_le_bytes());
        s.update(self.alpha.to_bits().to_le_bytes());
        s.update(self.p_trunc.to_le_bytes());
        s.update(self.l_tol.to_bits().to_le_bytes());
        s.update(self.count.to_le_bytes());
        hex::encode(s.finalize())
    }
}

/// What a reader needs from a cache.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheRequest {
    pub x: f64,
    pub alpha: f64,
    pub l_tol: f64,
}

/// Exclusive writer lock, released on drop.
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(cache: &Path) -> CliResult<Self> {
        let path = lock_path(cache);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| CliError::Io(format!("cannot lock {}: {e} (remove the lock file if no writer is running)", path.display())))?;
        Ok(CacheLock { path })
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn lock_path(cache: &Path) -> PathBuf {
    let mut s = cache.as_os_str().to_owned();
    s.push(".lock");
    PathBuf::from(s)
}

fn encode(r: &DiscriminantRecord, out: &mut Vec<u8>) {
    out.extend_from_slice(&RECORD_LEN.to_le_bytes());
    out.extend_from_slice(&r.d.to_le_bytes());
    out.extend_from_slice(&r.t.to_le_bytes());
    out.extend_from_slice(&r.u.to_le_bytes());
    out.extend_from_slice(&r.epsilon.to_le_bytes());
    out.extend_from_slice(&r.h.to_le_bytes());
    out.extend_from_slice(&r.l1.to_le_bytes());
}

fn word(b: &[u8], i: usize) -> [u8; 8] {
    b[8 * i..8 * i + 8].try_into().expect("8 bytes")
}

fn decode(b: &[u8]) -> DiscriminantRecord {
    DiscriminantRecord {
        d: u64::from_le_bytes(word(b, 0)),
        t: u64::from_le_bytes(word(b, 1)),
        u: u64::from_le_bytes(word(b, 2)),
        epsilon: f64::from_le_bytes(word(b, 3)),
        h: u64::from_le_bytes(word(b, 4)),
        l1: f64::from_le_bytes(word(b, 5)),
    }
}

/// Write `records` (sorted by `d`) under a lock, via a temporary file.
pub fn write_cache(path: &Path, header: &CacheHeader, records: &[DiscriminantRecord]) -> CliResult<()> {
    if header.count != records.len() as u64 {
        return Err(CliError::Invariant(format!("header count {} != {} records", header.count, records.len())));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let _lock = CacheLock::acquire(path)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        let line = serde_json::to_string(header).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(52);
        for r in records {
            buf.clear();
            encode(r, &mut buf);
            w.write_all(&buf)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a cache without checking it against a request.
pub fn read_cache(path: &Path) -> CliResult<(CacheHeader, Vec<DiscriminantRecord>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: CacheHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| CliError::Io(format!("{}: unreadable header: {e}", path.display())))?;
    if header.format != FORMAT {
        return Err(CliError::Io(format!("{}: not a cache file", path.display())));
    }
    if header.version != VERSION {
        return Err(CliError::Io(format!(
            "{}: cache format version {} is not supported (expected {VERSION}); re-run enumerate",
            path.display(),
            header.version
        )));
    }
    if header.digest != header.compute_digest() {
        return Err(CliError::Invariant(format!("{}: header digest mismatch", path.display())));
    }
    let mut records = Vec::with_capacity(header.count as usize);
    let mut len = [0u8; 4];
    let mut body = [0u8; RECORD_LEN as usize];
    for i in 0..header.count {
        r.read_exact(&mut len)
            .map_err(|_| CliError::Invariant(format!("{}: truncated at row {i}", path.display())))?;
        if u32::from_le_bytes(len) != RECORD_LEN {
            return Err(CliError::Invariant(format!("{}: bad length prefix at row {i}", path.display())));
        }
        r.read_exact(&mut body)
            .map_err(|_| CliError::Invariant(format!("{}: truncated at row {i}", path.display())))?;
        records.push(decode(&body));
    }
    if r.read(&mut len)? != 0 {
        return Err(CliError::Invariant(format!("{}: trailing bytes after {} rows", path.display(), header.count)));
    }
    Ok((header, records))
}

/// Read a cache that covers `req`: same `alpha`, `x` at least as large (rows
/// beyond `req.x` are dropped), and an `L` tolerance at least as tight.
pub fn read_cache_for(path: &Path, req: &CacheRequest) -> CliResult<(CacheHeader, Vec<DiscriminantRecord>)> {
    let (header, mut records) = read_cache(path)?;
    if header.alpha != req.alpha || header.x < req.x || header.l_tol > req.l_tol {
        return Err(CliError::Config(format!(
            "{}: cache holds (x = {}, alpha = {}, tol = {}), request needs (x = {}, alpha = {}, tol = {})",
            path.display(),
            header.x,
            header.alpha,
            header.l_tol,
            req.x,
            req.alpha,
            req.l_tol
        )));
    }
    records.retain(|r| r.d as f64 <= req.x);
    Ok((header, records))
}

/// Row-level checks: increasing `d`, valid discriminant, norm equation,
/// and the class number formula to within the rounding slack.
pub fn check_rows(records: &[DiscriminantRecord]) -> CliResult<()> {
    for (i, r) in records.iter().enumerate() {
        let row = |what: &str| CliError::Invariant(format!("row {i} (d = {}): {what}", r.d));
        if i > 0 && records[i - 1].d >= r.d {
            return Err(row("d not strictly increasing"));
        }
        if !is_discriminant(r.d) {
            return Err(row("not a discriminant"));
        }
        let (t, u, d) = (r.t as u128, r.u as u128, r.d as u128);
        if t * t != d * u * u + 4 {
            return Err(row("t^2 - d u^2 != 4"));
        }
        let eps = pellclass::pell::PellPoint::new(r.t, r.u, r.d).epsilon;
        if eps.to_bits() != r.epsilon.to_bits() {
            return Err(row("stored unit disagrees with (t, u)"));
        }
        if r.h == 0 || !(r.l1 > 0.0) || (r.formula_value() - r.h as f64).abs() > FORMULA_SLACK {
            return Err(row(&format!("class number formula gives {} for h = {}", r.formula_value(), r.h)));
        }
    }
    Ok(())
}
