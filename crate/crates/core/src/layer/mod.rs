//! Physical and thematic layers, their on-disk container, the workspace
//! catalog and the persistent join cache.

mod cache;
mod catalog;
mod container;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{JoinCache, JoinKey, JoinMap};
pub use catalog::{CatalogEntry, LayerType, WorkspaceCatalog, WORKSPACE_FILE};
pub use container::{
    load_layer, max_coordinate_delta, read_layer_bytes, save_layer, write_layer_bytes, SaveReport, CONTAINER_VERSION,
};

use crate::geometry::{ring_signed_area, Aabb2, Footprint, GeoBox, LocalFrame, Vec2, Vec3};
use crate::grammar::ColorScaleDef;
use crate::scalar::Scalar;

/// Triangles with less area than this are dropped at ingest.
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LayerError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("format error in {field}: {message}")]
    Format { field: String, message: String },
    #[error("invariant violated in layer `{layer}`: {message}")]
    InvariantViolation { layer: String, message: String },
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
}

impl LayerError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> LayerError {
        LayerError::Io { path: path.as_ref().display().to_string(), source }
    }

    fn invariant(layer: &str, message: impl Into<String>) -> LayerError {
        LayerError::InvariantViolation { layer: layer.to_owned(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicalKind {
    Mesh3d,
    Polygons2d,
    Lines,
    /// Square cells stored like `polygons2d`; the uniform subdivision makes
    /// them brushable.
    Grid,
}

impl PhysicalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhysicalKind::Mesh3d => "mesh3d",
            PhysicalKind::Polygons2d => "polygons2d",
            PhysicalKind::Lines => "lines",
            PhysicalKind::Grid => "grid",
        }
    }

    pub fn has_rings(self) -> bool {
        matches!(self, PhysicalKind::Polygons2d | PhysicalKind::Grid)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhysicalObject {
    pub object_id: u32,
    /// Flat `x, y, z` triples in workspace meters.
    pub coordinates: Vec<f64>,
    /// Triangle corner indices into this object's coordinates (mesh3d).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indices: Vec<u32>,
    /// Ring lengths (polygons2d, grid) or part lengths (lines).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rings: Vec<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, Scalar>,
}

impl PhysicalObject {
    pub fn coordinate_count(&self) -> usize {
        self.coordinates.len() / 3
    }

    pub fn coordinate(&self, i: usize) -> Vec3 {
        Vec3::from_slice(&self.coordinates[3 * i..3 * i + 3])
    }

    pub fn points(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.coordinates.chunks_exact(3).map(Vec3::from_slice)
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        self.indices.chunks_exact(3).map(|t| {
            [self.coordinate(t[0] as usize), self.coordinate(t[1] as usize), self.coordinate(t[2] as usize)]
        })
    }

    /// Coordinate ranges of each ring (or polyline part).
    pub fn ring_ranges(&self) -> Vec<Range<usize>> {
        if self.rings.is_empty() {
            return vec![0..self.coordinate_count()];
        }
        let mut start = 0;
        self.rings
            .iter()
            .map(|&len| {
                let r = start..start + len as usize;
                start += len as usize;
                r
            })
            .collect()
    }

    pub fn rings_2d(&self) -> Vec<Vec<Vec2>> {
        self.ring_ranges().into_iter().map(|r| r.map(|i| self.coordinate(i).xy()).collect()).collect()
    }

    /// Mean of the object's coordinates.
    pub fn centroid(&self) -> Vec3 {
        let n = self.coordinate_count().max(1) as f64;
        self.points().fold(Vec3::ZERO, |acc, p| acc + p) / n
    }

    pub fn bbox(&self) -> Aabb2 {
        Aabb2::from_points(self.points().map(Vec3::xy))
    }

    /// Planar extent: rings for polygon kinds, upward faces for meshes,
    /// polylines for networks.
    pub fn footprint(&self, kind: PhysicalKind) -> Footprint {
        match kind {
            PhysicalKind::Polygons2d | PhysicalKind::Grid => Footprint::from_rings(self.rings_2d()),
            PhysicalKind::Lines => Footprint::from_polylines(self.rings_2d()),
            PhysicalKind::Mesh3d => {
                let flat = |t: &[Vec3; 3]| [t[0].xy(), t[1].xy(), t[2].xy()];
                let projected_area = |t: &[Vec3; 3]| ((t[1] - t[0]).cross(t[2] - t[0])).z / 2.0;
                let mut up: Vec<[Vec2; 3]> =
                    self.triangles().filter(|t| projected_area(t) > MIN_TRIANGLE_AREA).map(|t| flat(&t)).collect();
                if up.is_empty() {
                    up = self
                        .triangles()
                        .filter(|t| projected_area(t).abs() > MIN_TRIANGLE_AREA)
                        .map(|t| flat(&t))
                        .collect();
                }
                Footprint::from_triangles(up)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLayer {
    pub name: String,
    pub kind: PhysicalKind,
    /// Origin of the frame the coordinates are expressed in.
    pub crs_origin: LocalFrame,
    pub objects: Vec<PhysicalObject>,
    /// Digest of the container file; empty until saved or loaded.
    pub content_hash: String,
}

impl PhysicalLayer {
    pub fn new(name: impl Into<String>, kind: PhysicalKind, frame: LocalFrame, objects: Vec<PhysicalObject>) -> Self {
        PhysicalLayer { name: name.into(), kind, crs_origin: frame, objects, content_hash: String::new() }
    }

    pub fn coordinate_count(&self) -> usize {
        self.objects.iter().map(PhysicalObject::coordinate_count).sum()
    }

    /// Start offset of each object's coordinates in the layer-wide numbering,
    /// plus a final entry equal to the total count.
    pub fn object_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.objects.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for obj in &self.objects {
            acc += obj.coordinate_count();
            offsets.push(acc);
        }
        offsets
    }

    /// All coordinates in layer-wide order.
    pub fn all_coordinates(&self) -> Vec<Vec3> {
        self.objects.iter().flat_map(PhysicalObject::points).collect()
    }

    /// Owning object index of every layer-wide coordinate.
    pub fn coordinate_owners(&self) -> Vec<u32> {
        let mut owners = Vec::with_capacity(self.coordinate_count());
        for (i, obj) in self.objects.iter().enumerate() {
            owners.extend(std::iter::repeat_n(i as u32, obj.coordinate_count()));
        }
        owners
    }

    pub fn footprints(&self) -> Vec<Footprint> {
        self.objects.iter().map(|o| o.footprint(self.kind)).collect()
    }

    pub fn bbox(&self) -> Aabb2 {
        self.objects.iter().fold(Aabb2::empty(), |acc, o| acc.union(&o.bbox()))
    }

    /// Checks the structural invariants of the layer.
    pub fn validate(&self) -> Result<(), LayerError> {
        let name = &self.name;
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.object_id as usize != i {
                return Err(LayerError::invariant(name, format!("object {i} has id {} (ids must be dense)", obj.object_id)));
            }
            if obj.coordinates.is_empty() || obj.coordinates.len() % 3 != 0 {
                return Err(LayerError::invariant(name, format!("object {i} has malformed coordinates")));
            }
            if obj.coordinates.iter().any(|c| !c.is_finite()) {
                return Err(LayerError::invariant(name, format!("object {i} has non-finite coordinates")));
            }
            let count = obj.coordinate_count();
            match self.kind {
                PhysicalKind::Mesh3d => {
                    if obj.indices.len() % 3 != 0 {
                        return Err(LayerError::invariant(name, format!("object {i}: index count not a multiple of 3")));
                    }
                    if let Some(bad) = obj.indices.iter().find(|&&ix| ix as usize >= count) {
                        return Err(LayerError::invariant(
                            name,
                            format!("object {i}: triangle index {bad} out of range ({count} coordinates)"),
                        ));
                    }
                    if obj.triangles().any(|t| triangle_area(&t) <= MIN_TRIANGLE_AREA) {
                        return Err(LayerError::invariant(name, format!("object {i}: zero-area triangle")));
                    }
                }
                PhysicalKind::Polygons2d | PhysicalKind::Grid | PhysicalKind::Lines => {
                    let min_len = if self.kind == PhysicalKind::Lines { 2 } else { 3 };
                    let total: usize = obj.rings.iter().map(|&r| r as usize).sum();
                    if self.kind.has_rings() && obj.rings.is_empty() {
                        return Err(LayerError::invariant(name, format!("object {i}: missing ring lengths")));
                    }
                    if !obj.rings.is_empty() && total != count {
                        return Err(LayerError::invariant(
                            name,
                            format!("object {i}: ring lengths sum to {total}, object has {count} coordinates"),
                        ));
                    }
                    if obj.ring_ranges().iter().any(|r| r.len() < min_len) {
                        return Err(LayerError::invariant(name, format!("object {i}: ring or part too short")));
                    }
                    if self.kind.has_rings() {
                        for ring in obj.rings_2d() {
                            if ring.first() == ring.last() {
                                return Err(LayerError::invariant(name, format!("object {i}: ring repeats its first vertex")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Fixes ring closure and winding so that exterior rings run
    /// counter-clockwise and holes clockwise. Returns a warning per object
    /// that had to be changed.
    pub fn normalize_rings(&mut self) -> Vec<String> {
        let mut warnings = Vec::new();
        if !self.kind.has_rings() {
            return warnings;
        }
        for obj in &mut self.objects {
            if normalize_object_rings(obj) {
                warnings.push(format!(
                    "layer `{}` object {}: ring orientation normalized (exterior CCW, holes CW)",
                    self.name, obj.object_id
                ));
            }
        }
        warnings
    }
}

pub fn triangle_area(t: &[Vec3; 3]) -> f64 {
    (t[1] - t[0]).cross(t[2] - t[0]).length() / 2.0
}

/// Normalizes one polygon object. Ring roles come from nesting depth: a ring
/// inside an odd number of sibling rings is a hole.
pub(crate) fn normalize_object_rings(obj: &mut PhysicalObject) -> bool {
    let mut rings: Vec<Vec<Vec3>> = obj
        .ring_ranges()
        .into_iter()
        .map(|r| r.map(|i| obj.coordinate(i)).collect())
        .collect();
    let mut changed = false;
    for ring in &mut rings {
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
            changed = true;
        }
    }
    let flat: Vec<Vec<Vec2>> = rings.iter().map(|r| r.iter().map(|p| p.xy()).collect()).collect();
    for (i, ring) in rings.iter_mut().enumerate() {
        let depth = (0..flat.len())
            .filter(|&j| j != i && flat[i].first().is_some_and(|&p| Footprint::from_rings(vec![flat[j].clone()]).interior_contains(p)))
            .count();
        let area = ring_signed_area(&flat[i]);
        let want_ccw = depth % 2 == 0;
        if (area > 0.0) != want_ccw && area != 0.0 {
            ring.reverse();
            changed = true;
        }
    }
    if changed {
        obj.rings = rings.iter().map(|r| r.len() as u32).collect();
        obj.coordinates = rings.iter().flatten().flat_map(|p| p.to_array()).collect();
    }
    changed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThematicPoint {
    pub lat: f64,
    pub lon: f64,
    pub height: f64,
    pub value: Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThematicLayer {
    pub name: String,
    pub points: Vec<ThematicPoint>,
    pub color_scale: ColorScaleDef,
    /// Free-form metadata such as `accumulation_minutes`.
    pub attributes: BTreeMap<String, Scalar>,
    pub content_hash: String,
}

impl ThematicLayer {
    pub fn new(name: impl Into<String>, points: Vec<ThematicPoint>) -> ThematicLayer {
        ThematicLayer {
            name: name.into(),
            points,
            color_scale: ColorScaleDef::default(),
            attributes: BTreeMap::new(),
            content_hash: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), LayerError> {
        for (i, p) in self.points.iter().enumerate() {
            if !(-90.0..=90.0).contains(&p.lat) || !(-180.0..=180.0).contains(&p.lon) {
                return Err(LayerError::invariant(&self.name, format!("point {i} outside geodetic range")));
            }
            if !p.height.is_finite() {
                return Err(LayerError::invariant(&self.name, format!("point {i} has non-finite height")));
            }
        }
        if let Some((lo, hi)) = self.color_scale.domain {
            if !(lo < hi) {
                return Err(LayerError::invariant(&self.name, "color scale domain must satisfy lo < hi"));
            }
        }
        Ok(())
    }

    /// Replaces non-finite numbers with null, returning one warning per value.
    pub fn normalize_values(&mut self) -> Vec<String> {
        let mut warnings = Vec::new();
        for (i, p) in self.points.iter_mut().enumerate() {
            if let Scalar::Number(v) = p.value {
                if !v.is_finite() {
                    p.value = Scalar::Null;
                    warnings.push(format!("layer `{}` point {i}: non-finite value stored as null", self.name));
                }
            }
        }
        warnings
    }

    pub fn projected(&self, frame: &LocalFrame) -> Vec<Vec3> {
        self.points.iter().map(|p| frame.project(p.lat, p.lon, p.height)).collect()
    }

    pub fn geo_bounds(&self) -> Option<GeoBox> {
        let first = self.points.first()?;
        let mut b = GeoBox::new(first.lat, first.lon, first.lat, first.lon);
        for p in &self.points {
            b.lat_min = b.lat_min.min(p.lat);
            b.lat_max = b.lat_max.max(p.lat);
            b.lon_min = b.lon_min.min(p.lon);
            b.lon_max = b.lon_max.max(p.lon);
        }
        Some(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Physical(PhysicalLayer),
    Thematic(ThematicLayer),
}

impl Layer {
    pub fn name(&self) -> &str {
        match self {
            Layer::Physical(l) => &l.name,
            Layer::Thematic(l) => &l.name,
        }
    }

    pub fn content_hash(&self) -> &str {
        match self {
            Layer::Physical(l) => &l.content_hash,
            Layer::Thematic(l) => &l.content_hash,
        }
    }

    pub fn as_physical(&self) -> Option<&PhysicalLayer> {
        match self {
            Layer::Physical(l) => Some(l),
            Layer::Thematic(_) => None,
        }
    }

    pub fn as_thematic(&self) -> Option<&ThematicLayer> {
        match self {
            Layer::Thematic(l) => Some(l),
            Layer::Physical(_) => None,
        }
    }

    pub fn layer_type(&self) -> LayerType {
        match self {
            Layer::Physical(l) => LayerType::Physical(l.kind),
            Layer::Thematic(_) => LayerType::Thematic,
        }
    }
}
