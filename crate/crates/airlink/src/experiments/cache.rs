//! Content-addressed cache for trained models and evaluated cells.
//!
//! Keys are SHA-256 digests of a canonical JSON rendering of everything
//! that influences the artifact, plus a code-version string so stale
//! entries are never reused across incompatible revisions. Models are
//! stored as AIRN v1 checkpoints, so a freshly trained model is written
//! and read back before use; evaluation therefore sees identical (f32)
//! parameters whether the cache was warm or cold.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::Network;

/// Bumped when cached artifacts change meaning.
pub const CODE_VERSION: &str = concat!("airlink-", env!("CARGO_PKG_VERSION"), "/cache2");

pub const CACHE_ENV_VAR: &str = "AIRLINK_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".airlink-cache";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    /// Resolution order: explicit override, `AIRLINK_CACHE_DIR`, then
    /// `./.airlink-cache`.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        let dir = match explicit {
            Some(p) => p.to_path_buf(),
            None => match std::env::var_os(CACHE_ENV_VAR) {
                Some(v) => PathBuf::from(v),
                None => PathBuf::from(DEFAULT_CACHE_DIR),
            },
        };
        std::fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Digest of a serializable key structure plus the code version.
    pub fn digest<K: Serialize>(key: &K) -> Result<String> {
        let json = serde_json::to_string(key)
            .map_err(|e| Error::Format(format!("cache key serialize: {e}")))?;
        let mut hasher = Sha256::new();
        hasher.update(CODE_VERSION.as_bytes());
        hasher.update(b"\n");
        hasher.update(json.as_bytes());
        Ok(hex::encode(hasher.finalize()))
    }

    fn model_path(&self, digest: &str, suffix: &str) -> PathBuf {
        self.dir.join(format!("{digest}{suffix}.airn"))
    }

    fn result_path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn load_model(&self, digest: &str, suffix: &str) -> Option<Network> {
        let path = self.model_path(digest, suffix);
        path.exists()
            .then(|| crate::io::load_model(&path).ok())
            .flatten()
    }

    /// Stores a model and reads it back, returning the f32-round-tripped
    /// network that later cache hits will see.
    pub fn store_model(&self, digest: &str, suffix: &str, net: &Network) -> Result<Network> {
        let path = self.model_path(digest, suffix);
        let tmp = path.with_extension("tmp");
        {
            let mut file = std::fs::File::create(&tmp)?;
            crate::io::write_model(net, &mut file)?;
        }
        std::fs::rename(&tmp, &path)?;
        crate::io::load_model(&path)
    }

    pub fn load_json<T: DeserializeOwned>(&self, digest: &str) -> Option<T> {
        let path = self.result_path(digest);
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn store_json<T: Serialize>(&self, digest: &str, value: &T) -> Result<()> {
        let path = self.result_path(digest);
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Format(format!("cache value serialize: {e}")))?;
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_key_sensitive() {
        #[derive(Serialize)]
        struct Key<'a> {
            name: &'a str,
            n: u32,
        }
        let a = Cache::digest(&Key { name: "x", n: 1 }).unwrap();
        let b = Cache::digest(&Key { name: "x", n: 1 }).unwrap();
        let c = Cache::digest(&Key { name: "x", n: 2 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn model_round_trip_returns_f32_view() {
        let dir = std::env::temp_dir().join("airlink_cache_test");
        let cache = Cache::resolve(Some(&dir)).unwrap();
        let net = Network::init(&[2, 4, 3], 9).unwrap();
        let digest = Cache::digest(&"model-key").unwrap();
        let stored = cache.store_model(&digest, "", &net).unwrap();
        let loaded = cache.load_model(&digest, "").unwrap();
        assert_eq!(stored, loaded);
        for (a, b) in stored.flatten_params().iter().zip(net.flatten_params()) {
            assert_eq!(*a, b as f32 as f64);
        }
    }
}
