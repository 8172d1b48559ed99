//! Directory of `.utk` files plus the workspace frame and join cache.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::cache::JoinCache;
use super::container::{read_layer_bytes, save_layer, sha256_hex, write_atomic};
use super::{Layer, LayerError, PhysicalKind};
use crate::geometry::LocalFrame;

/// Optional workspace settings file holding the shared frame origin.
pub const WORKSPACE_FILE: &str = "workspace.json";
const EXTENSION: &str = "utk";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "kind")]
pub enum LayerType {
    Physical(PhysicalKind),
    Thematic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(flatten)]
    pub layer_type: LayerType,
    pub content_hash: String,
}

#[derive(Serialize, Deserialize)]
struct WorkspaceSettings {
    origin: [f64; 2],
}

#[derive(Deserialize)]
struct Header {
    #[serde(rename = "type")]
    layer_type: String,
    crs_origin: Option<[f64; 2]>,
    payload: PayloadHead,
}

#[derive(Deserialize)]
struct PayloadHead {
    kind: Option<PhysicalKind>,
}

#[derive(Debug)]
pub struct WorkspaceCatalog {
    root: PathBuf,
    frame: Option<LocalFrame>,
    entries: BTreeMap<String, CatalogEntry>,
    loaded: Mutex<HashMap<String, Arc<Layer>>>,
}

impl WorkspaceCatalog {
    /// Scans `root` for layer files. A missing directory yields an empty
    /// catalog.
    pub fn open(root: impl Into<PathBuf>) -> Result<WorkspaceCatalog, LayerError> {
        let mut catalog =
            WorkspaceCatalog { root: root.into(), frame: None, entries: BTreeMap::new(), loaded: Mutex::new(HashMap::new()) };
        catalog.refresh()?;
        Ok(catalog)
    }

    /// Rescans the directory, recomputing every content hash.
    pub fn refresh(&mut self) -> Result<(), LayerError> {
        self.entries.clear();
        let settings_path = self.root.join(WORKSPACE_FILE);
        self.frame = match fs::read(&settings_path) {
            Ok(bytes) => {
                let s: WorkspaceSettings = serde_json::from_slice(&bytes).map_err(|e| LayerError::Format {
                    field: WORKSPACE_FILE.to_owned(),
                    message: e.to_string(),
                })?;
                Some(LocalFrame::new(s.origin[0], s.origin[1]))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(LayerError::io(&settings_path, e)),
        };
        let dir = match fs::read_dir(&self.root) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(LayerError::io(&self.root, e)),
        };
        let mut paths: Vec<PathBuf> = dir
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == EXTENSION))
            .collect();
        paths.sort();
        let mut first_origin = None;
        for path in paths {
            let bytes = fs::read(&path).map_err(|e| LayerError::io(&path, e))?;
            let header: Header = serde_json::from_slice(&bytes).map_err(|e| LayerError::Format {
                field: path.display().to_string(),
                message: e.to_string(),
            })?;
            let layer_type = match (header.layer_type.as_str(), header.payload.kind) {
                ("physical", Some(kind)) => LayerType::Physical(kind),
                ("thematic", _) => LayerType::Thematic,
                (other, _) => {
                    return Err(LayerError::Format {
                        field: path.display().to_string(),
                        message: format!("unknown layer type `{other}`"),
                    })
                }
            };
            if first_origin.is_none() && matches!(layer_type, LayerType::Physical(_)) {
                first_origin = header.crs_origin;
            }
            let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let entry = CatalogEntry { name: name.clone(), path, layer_type, content_hash: sha256_hex(&bytes) };
            self.entries.insert(name, entry);
        }
        if self.frame.is_none() {
            self.frame = first_origin.map(|o| LocalFrame::new(o[0], o[1]));
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.root.join(".cache").join("joins")
    }

    pub fn join_cache(&self) -> JoinCache {
        JoinCache::new(self.cache_dir())
    }

    /// Shared frame of the workspace; `None` until an origin is known.
    pub fn frame(&self) -> Option<LocalFrame> {
        self.frame
    }

    /// Records the frame origin in the settings file if none is set yet.
    pub fn ensure_frame(&mut self, frame: LocalFrame) -> Result<LocalFrame, LayerError> {
        if let Some(f) = self.frame {
            return Ok(f);
        }
        let settings = WorkspaceSettings { origin: [frame.origin_lat, frame.origin_lon] };
        let bytes = serde_json::to_vec_pretty(&settings).expect("settings serialize");
        write_atomic(&self.root.join(WORKSPACE_FILE), &bytes)?;
        self.frame = Some(frame);
        Ok(frame)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    /// Looks up a layer by name, accepting an optional `.utk` suffix.
    pub fn resolve(&self, name: &str) -> Option<&CatalogEntry> {
        let trimmed = name.trim_start_matches("./");
        let stem = trimmed.strip_suffix(".utk").unwrap_or(trimmed);
        self.entries.get(stem)
    }

    /// Loads and caches a layer, projecting physical layers into the
    /// workspace frame.
    pub fn load(&self, name: &str) -> Result<Arc<Layer>, LayerError> {
        let entry = self.resolve(name).ok_or_else(|| LayerError::UnknownLayer(name.to_owned()))?;
        if let Some(layer) = self.loaded.lock().expect("catalog lock").get(&entry.name) {
            if layer.content_hash() == entry.content_hash {
                return Ok(layer.clone());
            }
        }
        let bytes = fs::read(&entry.path).map_err(|e| LayerError::io(&entry.path, e))?;
        let (layer, warnings) = read_layer_bytes(&bytes, self.frame)?;
        for w in warnings {
            log::warn!("{w}");
        }
        let layer = Arc::new(layer);
        self.loaded.lock().expect("catalog lock").insert(entry.name.clone(), layer.clone());
        Ok(layer)
    }

    /// Saves `layer` as `<root>/<name>.utk` and registers it.
    pub fn save(&mut self, layer: &Layer) -> Result<CatalogEntry, LayerError> {
        if let Layer::Physical(l) = layer {
            self.ensure_frame(l.crs_origin)?;
        }
        let path = self.root.join(format!("{}.{EXTENSION}", layer.name()));
        let report = save_layer(layer, &path)?;
        for w in &report.warnings {
            log::warn!("{w}");
        }
        let entry = CatalogEntry {
            name: layer.name().to_owned(),
            path,
            layer_type: layer.layer_type(),
            content_hash: report.content_hash,
        };
        self.loaded.lock().expect("catalog lock").remove(&entry.name);
        self.entries.insert(entry.name.clone(), entry.clone());
        Ok(entry)
    }
}
