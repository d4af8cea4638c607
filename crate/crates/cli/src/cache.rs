//! Content-addressed on-disk cache of eigensystems.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use amolab_core::operator::{decode_record, eigensystem, encode_record, record_key, RECORD_FORMAT_VERSION};
use amolab_core::{operator::build_hamiltonian, EigenSystem, ModelParams, Window};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "AMOLAB_CACHE_DIR";

#[derive(Debug)]
pub enum Lookup {
    Hit(EigenSystem),
    Miss,
    /// The entry existed but failed validation; it has been removed.
    Corrupt(String),
}

#[derive(Debug)]
pub struct EigenCache {
    dir: PathBuf,
    namespace: String,
    writer: Mutex<()>,
}

impl EigenCache {
    pub fn default_namespace() -> String {
        format!("amolab-core-{}-rec{}", env!("CARGO_PKG_VERSION"), RECORD_FORMAT_VERSION)
    }

    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        Self::with_namespace(dir, Self::default_namespace())
    }

    /// A cache whose file names are also keyed by `namespace`, so entries
    /// written under another namespace are never seen.
    pub fn with_namespace(dir: impl Into<PathBuf>, namespace: impl Into<String>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            namespace: namespace.into(),
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, params: &ModelParams, window: Window) -> PathBuf {
        let key = record_key(params, window);
        let mut h = Sha256::new();
        h.update(self.namespace.as_bytes());
        h.update(key);
        self.dir.join(format!("{}.eig", hex::encode(h.finalize())))
    }

    pub fn get(&self, params: &ModelParams, window: Window) -> Lookup {
        let path = self.path_for(params, window);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(_) => return Lookup::Miss,
        };
        match decode_record(&bytes, &record_key(params, window)) {
            Ok(es) => Lookup::Hit(es),
            Err(e) => {
                let _ = std::fs::remove_file(&path);
                Lookup::Corrupt(e.to_string())
            }
        }
    }

    /// Writes through a temporary file in the cache directory and renames it
    /// into place.
    pub fn put(&self, params: &ModelParams, window: Window, es: &EigenSystem) -> std::io::Result<PathBuf> {
        let path = self.path_for(params, window);
        let bytes = encode_record(&record_key(params, window), es);
        let _guard = self.writer.lock().expect("cache writer lock");
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(path)
    }

    /// Returns the cached eigensystem or computes and stores it. The flag is
    /// true on a hit.
    pub fn get_or_compute(&self, params: &ModelParams, window: Window) -> amolab_core::Result<(EigenSystem, bool)> {
        match self.get(params, window) {
            Lookup::Hit(es) => return Ok((es, true)),
            Lookup::Corrupt(why) => eprintln!("warning: rebuilding corrupt cache entry: {why}"),
            Lookup::Miss => {}
        }
        let es = eigensystem(&build_hamiltonian(params, window))?;
        if let Err(e) = self.put(params, window, &es) {
            eprintln!("warning: could not write cache entry: {e}");
        }
        Ok((es, false))
    }
}
