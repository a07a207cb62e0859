//! Content-addressed S-matrix cache under `$SCATLAB_CACHE_DIR`.
//!
//! Entry layout: magic, cache version, 32-byte key, payload length, payload
//! (the core S-matrix encoding), SHA-256 of the payload. Writes go through a
//! temporary file and an atomic rename while holding an exclusive lock on
//! `cache.lock`; reads take a shared lock.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use scatlab::forward::persist::{decode_smatrix, encode_smatrix};
use scatlab::forward::ScatteringMatrix;

pub const CACHE_ENV: &str = "SCATLAB_CACHE_DIR";
/// Bump to invalidate every existing entry.
pub const CACHE_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SLCE";

/// Everything that determines an S-matrix.
#[derive(Serialize)]
pub struct CacheKey<'a> {
    pub cache_version: u32,
    pub library_version: &'a str,
    pub potential: String,
    pub energy_bits: u64,
    pub grid: (usize, usize, u64),
    pub degree: usize,
    pub route: &'a str,
    pub solver: (u64, usize, usize, usize),
}

impl CacheKey<'_> {
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("key serializes");
        Sha256::digest(&json).into()
    }
}

#[derive(Debug)]
pub enum Lookup {
    Hit(ScatteringMatrix),
    Miss,
    /// Entry present but unreadable; recomputed and overwritten.
    Corrupt(String),
}

pub struct Cache {
    dir: PathBuf,
}

fn lock_file(dir: &Path) -> std::io::Result<File> {
    OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(dir.join("cache.lock"))
}

impl Cache {
    /// Cache rooted at `$SCATLAB_CACHE_DIR`, if set.
    pub fn from_env() -> std::io::Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::open(PathBuf::from(d)).map(Some),
            _ => Ok(None),
        }
    }

    pub fn open(dir: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path_for(&self, key: &[u8; 32]) -> PathBuf {
        self.dir.join(format!("{}.slce", hex::encode(key)))
    }

    pub fn get(&self, key: &[u8; 32]) -> std::io::Result<Lookup> {
        let path = self.path_for(key);
        let lock = lock_file(&self.dir)?;
        lock.lock_shared()?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Lookup::Miss),
            Err(e) => return Err(e),
        };
        drop(lock);
        Ok(match parse_entry(&bytes, key) {
            Ok(Some(s)) => Lookup::Hit(s),
            Ok(None) => Lookup::Miss,
            Err(msg) => Lookup::Corrupt(msg),
        })
    }

    pub fn put(&self, key: &[u8; 32], s: &ScatteringMatrix) -> std::io::Result<()> {
        let payload = encode_smatrix(s);
        let mut buf = Vec::with_capacity(payload.len() + 80);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(key);
        buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        buf.extend_from_slice(&payload);
        buf.extend_from_slice(&Sha256::digest(&payload));
        let lock = lock_file(&self.dir)?;
        lock.lock()?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&buf)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

/// `Ok(None)` for entries of another cache version.
fn parse_entry(bytes: &[u8], key: &[u8; 32]) -> Result<Option<ScatteringMatrix>, String> {
    if bytes.len() < 48 || &bytes[..4] != MAGIC {
        return Err("bad header".into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Ok(None);
    }
    if &bytes[8..40] != key {
        return Err("key mismatch".into());
    }
    let len = u64::from_le_bytes(bytes[40..48].try_into().unwrap()) as usize;
    if bytes.len() != 48 + len + 32 {
        return Err("length mismatch".into());
    }
    let payload = &bytes[48..48 + len];
    if Sha256::digest(payload).as_slice() != &bytes[48 + len..] {
        return Err("checksum mismatch".into());
    }
    decode_smatrix(payload).map(Some).map_err(|e| e.to_string())
}
