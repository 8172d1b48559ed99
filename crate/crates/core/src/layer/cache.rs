//! Content-addressed join cache under `<workspace>/.cache/joins`.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::container::{sha256_hex, write_atomic};
use super::LayerError;
use crate::grammar::{Level, SpatialRelation};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinKey {
    pub left_hash: String,
    pub right_hash: String,
    pub relation: SpatialRelation,
    pub in_level: Level,
    pub out_level: Level,
}

impl JoinKey {
    pub fn digest(&self) -> String {
        let text = format!(
            "join/v1\n{}\n{}\n{}\n{}\n{}",
            self.left_hash, self.right_hash, self.relation, self.in_level, self.out_level
        );
        sha256_hex(text.as_bytes())
    }
}

/// For each left element, the ascending list of matched right elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinMap {
    pub key: JoinKey,
    pub entries: Vec<Vec<u32>>,
}

impl JoinMap {
    pub fn new(key: JoinKey, mut entries: Vec<Vec<u32>>) -> JoinMap {
        for e in &mut entries {
            e.sort_unstable();
            e.dedup();
        }
        JoinMap { key, entries }
    }
}

#[derive(Debug, Clone)]
pub struct JoinCache {
    dir: PathBuf,
}

impl JoinCache {
    pub fn new(dir: impl Into<PathBuf>) -> JoinCache {
        JoinCache { dir: dir.into() }
    }

    fn path(&self, key: &JoinKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    /// The stored map for `key`, if any. Unreadable entries are treated as
    /// absent.
    pub fn lookup(&self, key: &JoinKey) -> Result<Option<JoinMap>, LayerError> {
        let path = self.path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LayerError::io(&path, e)),
        };
        match serde_json::from_slice::<JoinMap>(&bytes) {
            Ok(map) if &map.key == key => Ok(Some(map)),
            Ok(_) => Ok(None),
            Err(e) => {
                log::warn!("ignoring corrupt join cache entry {}: {e}", path.display());
                Ok(None)
            }
        }
    }

    pub fn store(&self, map: &JoinMap) -> Result<(), LayerError> {
        let bytes = serde_json::to_vec(map).expect("join map serializes");
        write_atomic(&self.path(&map.key), &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(relation: SpatialRelation, right: &str) -> JoinKey {
        JoinKey {
            left_hash: "aa".into(),
            right_hash: right.into(),
            relation,
            in_level: Level::Coordinates,
            out_level: Level::Objects,
        }
    }

    #[test]
    fn store_then_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let cache = JoinCache::new(dir.path());
        let map = JoinMap::new(key(SpatialRelation::Contains, "bb"), vec![vec![3, 1], vec![], vec![2]]);
        assert_eq!(map.entries[0], vec![1, 3]);
        assert!(cache.lookup(&map.key).unwrap().is_none());
        cache.store(&map).unwrap();
        assert_eq!(cache.lookup(&map.key).unwrap(), Some(map.clone()));
        assert!(cache.lookup(&key(SpatialRelation::Contains, "cc")).unwrap().is_none());
    }

    #[test]
    fn relation_is_part_of_the_key() {
        let a = key(SpatialRelation::Contains, "bb");
        let b = key(SpatialRelation::Intersects, "bb");
        assert_ne!(a.digest(), b.digest());
    }
}
