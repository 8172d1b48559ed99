//! The `.utk` container: one JSON document per layer with geodetic
//! coordinates on disk.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{Layer, LayerError, PhysicalKind, PhysicalLayer, PhysicalObject, ThematicLayer, ThematicPoint};
use crate::geometry::{LocalFrame, Vec3};
use crate::grammar::ColorScaleDef;
use crate::scalar::Scalar;

pub const CONTAINER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    container_version: u32,
    #[serde(rename = "type")]
    layer_type: String,
    name: String,
    crs_origin: Option<[f64; 2]>,
    payload: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysicalPayload {
    kind: PhysicalKind,
    objects: Vec<PhysicalObject>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThematicPayload {
    points: Vec<ThematicPoint>,
    #[serde(default)]
    color_scale: ColorScaleDef,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, Scalar>,
}

#[derive(Debug, Clone)]
pub struct SaveReport {
    pub path: PathBuf,
    pub content_hash: String,
    pub warnings: Vec<String>,
}

fn format_err(field: &str, message: impl ToString) -> LayerError {
    LayerError::Format { field: field.to_owned(), message: message.to_string() }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes a layer to canonical container bytes. Physical coordinates are
/// unprojected with the layer's own frame.
pub fn write_layer_bytes(layer: &Layer) -> Result<(Vec<u8>, Vec<String>), LayerError> {
    let mut warnings = Vec::new();
    let envelope = match layer {
        Layer::Physical(l) => {
            l.validate()?;
            let frame = l.crs_origin;
            let objects = l
                .objects
                .iter()
                .map(|o| PhysicalObject {
                    coordinates: o
                        .points()
                        .flat_map(|p| {
                            let (lat, lon, h) = frame.unproject(p);
                            [lat, lon, h]
                        })
                        .collect(),
                    ..o.clone()
                })
                .collect();
            let payload = PhysicalPayload { kind: l.kind, objects };
            Envelope {
                container_version: CONTAINER_VERSION,
                layer_type: "physical".into(),
                name: l.name.clone(),
                crs_origin: Some([frame.origin_lat, frame.origin_lon]),
                payload: serde_json::to_value(payload).map_err(|e| format_err("payload", e))?,
            }
        }
        Layer::Thematic(l) => {
            let mut l = l.clone();
            warnings.extend(l.normalize_values());
            l.validate()?;
            let payload = ThematicPayload { points: l.points, color_scale: l.color_scale, attributes: l.attributes };
            Envelope {
                container_version: CONTAINER_VERSION,
                layer_type: "thematic".into(),
                name: l.name,
                crs_origin: None,
                payload: serde_json::to_value(payload).map_err(|e| format_err("payload", e))?,
            }
        }
    };
    let mut bytes = serde_json::to_vec(&envelope).map_err(|e| format_err("document", e))?;
    bytes.push(b'\n');
    Ok((bytes, warnings))
}

/// Parses container bytes. Physical coordinates are projected into `frame`
/// when given, otherwise into the frame recorded in the file.
pub fn read_layer_bytes(bytes: &[u8], frame: Option<LocalFrame>) -> Result<(Layer, Vec<String>), LayerError> {
    let envelope: Envelope = serde_json::from_slice(bytes).map_err(|e| format_err("document", e))?;
    if envelope.container_version != CONTAINER_VERSION {
        return Err(format_err(
            "container_version",
            format!("unsupported version {} (expected {CONTAINER_VERSION})", envelope.container_version),
        ));
    }
    let content_hash = sha256_hex(bytes);
    let mut warnings = Vec::new();
    let layer = match envelope.layer_type.as_str() {
        "physical" => {
            let payload: PhysicalPayload =
                serde_json::from_value(envelope.payload).map_err(|e| format_err("payload", e))?;
            let origin = envelope.crs_origin.ok_or_else(|| format_err("crs_origin", "required for physical layers"))?;
            let frame = frame.unwrap_or(LocalFrame::new(origin[0], origin[1]));
            let objects = payload
                .objects
                .into_iter()
                .map(|o| PhysicalObject {
                    coordinates: o
                        .coordinates
                        .chunks_exact(3)
                        .flat_map(|c| frame.project(c[0], c[1], c[2]).to_array())
                        .collect(),
                    ..o
                })
                .collect();
            let mut layer = PhysicalLayer::new(envelope.name, payload.kind, frame, objects);
            warnings.extend(layer.normalize_rings());
            layer.validate()?;
            layer.content_hash = content_hash;
            Layer::Physical(layer)
        }
        "thematic" => {
            let payload: ThematicPayload =
                serde_json::from_value(envelope.payload).map_err(|e| format_err("payload", e))?;
            let mut layer = ThematicLayer {
                name: envelope.name,
                points: payload.points,
                color_scale: payload.color_scale,
                attributes: payload.attributes,
                content_hash,
            };
            warnings.extend(layer.normalize_values());
            layer.validate()?;
            Layer::Thematic(layer)
        }
        other => return Err(format_err("type", format!("unknown layer type `{other}`"))),
    };
    Ok((layer, warnings))
}

/// Writes the layer to `path` atomically and returns its content hash.
pub fn save_layer(layer: &Layer, path: impl AsRef<Path>) -> Result<SaveReport, LayerError> {
    let path = path.as_ref();
    let (bytes, warnings) = write_layer_bytes(layer)?;
    write_atomic(path, &bytes)?;
    Ok(SaveReport { path: path.to_owned(), content_hash: sha256_hex(&bytes), warnings })
}

pub fn load_layer(path: impl AsRef<Path>, frame: Option<LocalFrame>) -> Result<(Layer, Vec<String>), LayerError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| LayerError::io(path, e))?;
    read_layer_bytes(&bytes, frame)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LayerError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| LayerError::io(dir, e))?;
    let file_name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| LayerError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| LayerError::io(&tmp, e))?;
    f.sync_all().map_err(|e| LayerError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| LayerError::io(path, e))
}

/// Maximum coordinate difference between two physical layers.
pub fn max_coordinate_delta(a: &PhysicalLayer, b: &PhysicalLayer) -> f64 {
    a.all_coordinates()
        .iter()
        .zip(b.all_coordinates())
        .map(|(p, q): (&Vec3, Vec3)| (*p - q).length())
        .fold(0.0, f64::max)
}
