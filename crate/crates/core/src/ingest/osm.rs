//! OpenStreetMap (Overpass JSON) extracts into physical layers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::triangulate::extrude;
use super::{FeatureClass, IngestConfig, IngestError, Region};
use crate::geometry::{Aabb2, Footprint, LocalFrame, Vec2};
use crate::layer::{PhysicalKind, PhysicalLayer, PhysicalObject};
use crate::scalar::Scalar;

type Tags = BTreeMap<String, String>;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawElement {
    Node {
        id: i64,
        lat: f64,
        lon: f64,
    },
    Way {
        id: i64,
        #[serde(default)]
        nodes: Vec<i64>,
        #[serde(default)]
        tags: Tags,
    },
    Relation {
        id: i64,
        #[serde(default)]
        members: Vec<Member>,
        #[serde(default)]
        tags: Tags,
    },
    #[serde(other)]
    Other,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Member {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(rename = "ref")]
    pub id: i64,
    #[serde(default)]
    pub role: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Way {
    pub id: i64,
    pub nodes: Vec<i64>,
    pub tags: Tags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub id: i64,
    pub members: Vec<Member>,
    pub tags: Tags,
}

/// Nodes, ways and relations of an Overpass JSON extract.
#[derive(Debug, Clone, Default)]
pub struct OsmExtract {
    pub nodes: HashMap<i64, (f64, f64)>,
    pub ways: Vec<Way>,
    pub relations: Vec<Relation>,
    pub source: Option<PathBuf>,
}

#[derive(Deserialize)]
struct RawDoc {
    elements: Vec<RawElement>,
}

impl OsmExtract {
    pub fn from_json(text: &str) -> Result<OsmExtract, IngestError> {
        let doc: RawDoc = serde_json::from_str(text).map_err(|e| IngestError::Parse(format!("Overpass JSON: {e}")))?;
        let mut out = OsmExtract::default();
        for e in doc.elements {
            match e {
                RawElement::Node { id, lat, lon } => {
                    out.nodes.insert(id, (lat, lon));
                }
                RawElement::Way { id, nodes, tags } => out.ways.push(Way { id, nodes, tags }),
                RawElement::Relation { id, members, tags } => out.relations.push(Relation { id, members, tags }),
                RawElement::Other => {}
            }
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<OsmExtract, IngestError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| IngestError::Io { path: path.display().to_string(), source: e })?;
        let mut x = OsmExtract::from_json(&text)?;
        x.source = Some(path.to_owned());
        Ok(x)
    }

    /// Geodetic bounds of all nodes.
    pub fn bounds(&self) -> Option<crate::GeoBox> {
        let mut it = self.nodes.values();
        let &(lat, lon) = it.next()?;
        let mut b = crate::GeoBox::new(lat, lon, lat, lon);
        for &(lat, lon) in it {
            b.lat_min = b.lat_min.min(lat);
            b.lat_max = b.lat_max.max(lat);
            b.lon_min = b.lon_min.min(lon);
            b.lon_max = b.lon_max.max(lon);
        }
        Some(b)
    }
}

pub fn classify(tags: &Tags) -> Option<FeatureClass> {
    let is = |k: &str, vals: &[&str]| tags.get(k).is_some_and(|v| vals.contains(&v.as_str()));
    if tags.get("building").is_some_and(|v| v != "no") || tags.contains_key("building:part") {
        Some(FeatureClass::Buildings)
    } else if is("leisure", &["park", "garden", "playground", "nature_reserve"])
        || is("landuse", &["grass", "recreation_ground", "village_green", "forest", "meadow"])
    {
        Some(FeatureClass::Parks)
    } else if is("natural", &["water"]) || is("waterway", &["riverbank", "dock"]) || is("landuse", &["reservoir", "basin"])
    {
        Some(FeatureClass::Water)
    } else if tags.contains_key("highway") {
        Some(FeatureClass::Roads)
    } else {
        None
    }
}

/// Reads a length tag such as `20`, `20 m` or `65'`.
fn parse_length(s: &str) -> Option<f64> {
    let s = s.trim();
    let end = s.find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-')).unwrap_or(s.len());
    let v: f64 = s[..end].parse().ok()?;
    let unit = s[end..].trim();
    let v = if unit.starts_with('\'') || unit.starts_with("ft") { v * 0.3048 } else { v };
    (v.is_finite() && v > 0.0).then_some(v)
}

pub fn building_height(tags: &Tags, config: &IngestConfig) -> f64 {
    if let Some(h) = tags.get("height").and_then(|h| parse_length(h)) {
        return h;
    }
    if let Some(l) = tags.get("building:levels").and_then(|l| l.trim().parse::<f64>().ok()).filter(|l| *l > 0.0) {
        return l * config.meters_per_level;
    }
    config.default_building_height
}

/// Layers produced from an extract, one per requested class that has
/// features in the region.
#[derive(Debug, Clone)]
pub struct OsmIngest {
    pub layers: Vec<PhysicalLayer>,
    pub warnings: Vec<String>,
}

struct Area {
    id: i64,
    tags: Tags,
    rings: Vec<Vec<Vec2>>,
}

struct Clip {
    bounds: Aabb2,
    polygon: Option<Footprint>,
}

impl Clip {
    fn keeps(&self, p: Vec2) -> bool {
        self.bounds.contains_point(p) && self.polygon.as_ref().is_none_or(|f| f.contains_point(p))
    }
}

pub fn ingest_osm(extract: &OsmExtract, config: &IngestConfig, frame: &LocalFrame) -> Result<OsmIngest, IngestError> {
    config.validate()?;
    let clip = match &config.region {
        Region::BoundingBox(b) => Clip { bounds: b.project(frame), polygon: None },
        Region::Polygon(vertices) => {
            let ring: Vec<Vec2> = vertices.iter().map(|&(lat, lon)| frame.project(lat, lon, 0.0).xy()).collect();
            Clip { bounds: Aabb2::from_points(ring.iter().copied()), polygon: Some(Footprint::from_rings(vec![ring])) }
        }
        Region::Address(a) => return Err(IngestError::UnresolvedRegion(a.clone())),
    };
    let mut warnings = Vec::new();
    let mut malformed = 0usize;
    let mut features = 0usize;
    let project = |refs: &[i64]| -> Option<Vec<Vec2>> {
        refs.iter().map(|r| extract.nodes.get(r).map(|&(lat, lon)| frame.project(lat, lon, 0.0).xy())).collect()
    };

    let mut areas: BTreeMap<FeatureClass, Vec<Area>> = BTreeMap::new();
    let mut roads: Vec<(i64, Tags, Vec<Vec2>)> = Vec::new();
    let ways_by_id: HashMap<i64, &Way> = extract.ways.iter().map(|w| (w.id, w)).collect();

    for w in &extract.ways {
        let Some(class) = classify(&w.tags).filter(|c| config.layers.contains(c)) else { continue };
        features += 1;
        let Some(points) = project(&w.nodes) else {
            malformed += 1;
            warnings.push(format!("way {}: unresolved node reference, skipped", w.id));
            continue;
        };
        let closed = w.nodes.len() >= 4 && w.nodes.first() == w.nodes.last();
        match class {
            FeatureClass::Roads => roads.push((w.id, w.tags.clone(), points)),
            _ if !closed => {
                malformed += 1;
                warnings.push(format!("way {}: area feature is not closed, skipped", w.id));
            }
            _ => areas.entry(class).or_default().push(Area { id: w.id, tags: w.tags.clone(), rings: vec![points] }),
        }
    }
    for r in &extract.relations {
        if r.tags.get("type").map(String::as_str) != Some("multipolygon") {
            continue;
        }
        let Some(class) = classify(&r.tags).filter(|c| *c != FeatureClass::Roads && config.layers.contains(c)) else {
            continue;
        };
        features += 1;
        let mut rings = Vec::new();
        let mut broken = false;
        for m in r.members.iter().filter(|m| m.kind == "way") {
            let ring = ways_by_id
                .get(&m.id)
                .filter(|w| w.nodes.len() >= 4 && w.nodes.first() == w.nodes.last())
                .and_then(|w| project(&w.nodes));
            match ring {
                Some(ring) => rings.push(ring),
                None => broken = true,
            }
        }
        if broken || rings.is_empty() {
            malformed += 1;
            warnings.push(format!("relation {}: missing or open member ways, skipped", r.id));
            continue;
        }
        areas.entry(class).or_default().push(Area { id: r.id, tags: r.tags.clone(), rings });
    }
    if features > 0 && malformed == features {
        return Err(IngestError::MalformedWay(format!("all {features} features are malformed")));
    }

    let mut layers = Vec::new();
    for class in &config.layers {
        let objects = match class {
            FeatureClass::Roads => road_objects(&roads, &clip),
            FeatureClass::Buildings => building_objects(areas.get(class).map_or(&[][..], Vec::as_slice), &clip, config, &mut warnings),
            _ => area_objects(areas.get(class).map_or(&[][..], Vec::as_slice), &clip),
        };
        if objects.is_empty() {
            warnings.push(format!("no {} in the region", class.as_str()));
            continue;
        }
        let kind = match class {
            FeatureClass::Buildings => PhysicalKind::Mesh3d,
            FeatureClass::Roads => PhysicalKind::Lines,
            _ => PhysicalKind::Polygons2d,
        };
        let mut layer = PhysicalLayer::new(class.as_str(), kind, *frame, objects);
        layer.normalize_rings();
        layers.push(layer);
    }
    if layers.is_empty() {
        return Err(IngestError::EmptyRegion);
    }
    Ok(OsmIngest { layers, warnings })
}

fn clean_ring(mut ring: Vec<Vec2>) -> Vec<Vec2> {
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring.dedup_by(|a, b| a.distance_squared(*b) < 1e-18);
    ring
}

fn base_attributes(id: i64, tags: &Tags) -> BTreeMap<String, Scalar> {
    let mut a = BTreeMap::new();
    a.insert("osm_id".into(), Scalar::number(id as f64));
    if let Some(n) = tags.get("name") {
        a.insert("name".into(), Scalar::text(n.clone()));
    }
    a
}

fn building_objects(areas: &[Area], clip: &Clip, config: &IngestConfig, warnings: &mut Vec<String>) -> Vec<PhysicalObject> {
    let mut out = Vec::new();
    for a in areas {
        let rings: Vec<Vec<Vec2>> = a.rings.iter().cloned().map(clean_ring).filter(|r| r.len() >= 3).collect();
        if rings.is_empty() || Footprint::from_rings(rings.clone()).area() < 1e-6 {
            warnings.push(format!("building {}: degenerate footprint, skipped", a.id));
            continue;
        }
        let n = rings[0].len() as f64;
        let centroid = rings[0].iter().fold(Vec2::new(0.0, 0.0), |acc, &p| acc + p) * (1.0 / n);
        if !clip.keeps(centroid) {
            continue;
        }
        let height = building_height(&a.tags, config);
        let (coordinates, indices) = extrude(&rings, 0.0, height);
        let mut attributes = base_attributes(a.id, &a.tags);
        attributes.insert("height".into(), Scalar::number(height));
        out.push(PhysicalObject { object_id: out.len() as u32, coordinates, indices, rings: Vec::new(), attributes });
    }
    out
}

/// Sutherland–Hodgman against an axis-aligned box.
fn clip_ring(ring: &[Vec2], b: &Aabb2) -> Vec<Vec2> {
    let planes: [(fn(Vec2) -> f64, f64, bool); 4] =
        [(|p| p.x, b.min.x, true), (|p| p.x, b.max.x, false), (|p| p.y, b.min.y, true), (|p| p.y, b.max.y, false)];
    let mut cur = ring.to_vec();
    for (coord, limit, keep_above) in planes {
        if cur.is_empty() {
            break;
        }
        let inside = |p: Vec2| if keep_above { coord(p) >= limit } else { coord(p) <= limit };
        let mut next = Vec::with_capacity(cur.len() + 4);
        for k in 0..cur.len() {
            let a = cur[k];
            let c = cur[(k + 1) % cur.len()];
            if inside(a) {
                next.push(a);
            }
            if inside(a) != inside(c) {
                let t = (limit - coord(a)) / (coord(c) - coord(a));
                next.push(a + (c - a) * t);
            }
        }
        cur = next;
    }
    clean_ring(cur)
}

fn area_objects(areas: &[Area], clip: &Clip) -> Vec<PhysicalObject> {
    let mut out = Vec::new();
    for a in areas {
        let rings: Vec<Vec<Vec2>> = a
            .rings
            .iter()
            .map(|r| clip_ring(&clean_ring(r.clone()), &clip.bounds))
            .filter(|r| r.len() >= 3 && crate::geometry::ring_signed_area(r).abs() > 1e-9)
            .collect();
        if rings.is_empty() {
            continue;
        }
        if let Some(poly) = &clip.polygon {
            let mean = rings[0].iter().fold(Vec2::new(0.0, 0.0), |acc, &p| acc + p) * (1.0 / rings[0].len() as f64);
            if !poly.contains_point(mean) {
                continue;
            }
        }
        out.push(PhysicalObject {
            object_id: out.len() as u32,
            rings: rings.iter().map(|r| r.len() as u32).collect(),
            coordinates: rings.iter().flatten().flat_map(|p| [p.x, p.y, 0.0]).collect(),
            indices: Vec::new(),
            attributes: base_attributes(a.id, &a.tags),
        });
    }
    out
}

/// Liang–Barsky clip of a segment; returns the parameter interval kept.
fn clip_segment(a: Vec2, b: Vec2, bx: &Aabb2) -> Option<(f64, f64)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x - bx.min.x), (d.x, bx.max.x - a.x), (-d.y, a.y - bx.min.y), (d.y, bx.max.y - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

fn road_objects(roads: &[(i64, Tags, Vec<Vec2>)], clip: &Clip) -> Vec<PhysicalObject> {
    let mut out = Vec::new();
    for (id, tags, line) in roads {
        let mut parts: Vec<Vec<Vec2>> = Vec::new();
        let mut cur: Vec<Vec2> = Vec::new();
        for w in line.windows(2) {
            match clip_segment(w[0], w[1], &clip.bounds) {
                Some((t0, t1)) if t1 - t0 > 0.0 => {
                    let p = w[0] + (w[1] - w[0]) * t0;
                    let q = w[0] + (w[1] - w[0]) * t1;
                    if t0 > 0.0 || cur.is_empty() {
                        if cur.len() >= 2 {
                            parts.push(std::mem::take(&mut cur));
                        }
                        cur = vec![p];
                    }
                    cur.push(q);
                    if t1 < 1.0 {
                        parts.push(std::mem::take(&mut cur));
                    }
                }
                _ => {
                    if cur.len() >= 2 {
                        parts.push(std::mem::take(&mut cur));
                    }
                    cur.clear();
                }
            }
        }
        if cur.len() >= 2 {
            parts.push(cur);
        }
        if let Some(poly) = &clip.polygon {
            parts.retain(|part| part.iter().any(|&p| poly.contains_point(p)));
        }
        parts.retain(|p| p.len() >= 2);
        if parts.is_empty() {
            continue;
        }
        let mut attributes = base_attributes(*id, tags);
        if let Some(h) = tags.get("highway") {
            attributes.insert("highway".into(), Scalar::text(h.clone()));
        }
        out.push(PhysicalObject {
            object_id: out.len() as u32,
            rings: parts.iter().map(|p| p.len() as u32).collect(),
            coordinates: parts.iter().flatten().flat_map(|p| [p.x, p.y, 0.0]).collect(),
            indices: Vec::new(),
            attributes,
        });
    }
    out
}

/// The default layer set.
pub fn all_classes() -> BTreeSet<FeatureClass> {
    [FeatureClass::Buildings, FeatureClass::Parks, FeatureClass::Water, FeatureClass::Roads].into_iter().collect()
}
