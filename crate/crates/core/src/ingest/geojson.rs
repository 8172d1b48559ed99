//! GeoJSON features into physical layers.

use std::collections::BTreeMap;

use serde_json::Value;

use super::IngestError;
use crate::geometry::{LocalFrame, Vec3};
use crate::layer::{normalize_object_rings, PhysicalKind, PhysicalLayer, PhysicalObject};
use crate::scalar::Scalar;

/// One object per feature with its properties as attributes. Polygon kinds
/// accept Polygon and MultiPolygon, `lines` accepts LineString and
/// MultiLineString. Rings are closed-vertex-free and normalized.
pub fn ingest_geojson(
    doc: &Value,
    name: &str,
    kind: PhysicalKind,
    frame: &LocalFrame,
) -> Result<(PhysicalLayer, Vec<String>), IngestError> {
    if kind == PhysicalKind::Mesh3d {
        return Err(IngestError::UnsupportedGeometry("mesh3d layers are built from OSM extracts".into()));
    }
    let features: Vec<(&Value, Option<&serde_json::Map<String, Value>>)> =
        match doc.get("type").and_then(Value::as_str) {
            Some("FeatureCollection") => doc
                .get("features")
                .and_then(Value::as_array)
                .ok_or_else(|| IngestError::Parse("FeatureCollection without `features`".into()))?
                .iter()
                .map(|f| (f.get("geometry").unwrap_or(&Value::Null), f.get("properties").and_then(Value::as_object)))
                .collect(),
            Some("Feature") => {
                vec![(doc.get("geometry").unwrap_or(&Value::Null), doc.get("properties").and_then(Value::as_object))]
            }
            Some(_) => vec![(doc, None)],
            None => return Err(IngestError::Parse("not a GeoJSON object".into())),
        };
    if features.is_empty() {
        return Err(IngestError::EmptyCollection);
    }
    let mut warnings = Vec::new();
    let mut objects = Vec::with_capacity(features.len());
    for (i, (geometry, props)) in features.into_iter().enumerate() {
        let parts = parts_of(geometry, kind).map_err(|e| match e {
            IngestError::UnsupportedGeometry(m) => IngestError::UnsupportedGeometry(format!("feature {i}: {m}")),
            other => other,
        })?;
        let mut obj = PhysicalObject { object_id: objects.len() as u32, ..Default::default() };
        for part in parts {
            let mut pts: Vec<Vec3> = part
                .iter()
                .map(|c| position(c).map(|(lon, lat, h)| frame.project(lat, lon, h)))
                .collect::<Result<_, _>>()?;
            if kind.has_rings() {
                while pts.len() > 1 && pts.first() == pts.last() {
                    pts.pop();
                }
                if pts.len() < 3 {
                    warnings.push(format!("feature {i}: ring with fewer than 3 vertices dropped"));
                    continue;
                }
            } else if pts.len() < 2 {
                warnings.push(format!("feature {i}: line part with fewer than 2 vertices dropped"));
                continue;
            }
            obj.rings.push(pts.len() as u32);
            obj.coordinates.extend(pts.iter().flat_map(|p| p.to_array()));
        }
        if obj.coordinates.is_empty() {
            warnings.push(format!("feature {i}: empty geometry skipped"));
            continue;
        }
        if kind.has_rings() {
            normalize_object_rings(&mut obj);
        }
        obj.attributes = props.map(attributes).unwrap_or_default();
        objects.push(obj);
    }
    if objects.is_empty() {
        return Err(IngestError::EmptyCollection);
    }
    Ok((PhysicalLayer::new(name, kind, *frame, objects), warnings))
}

fn coord_array<'a>(v: Option<&'a Value>, ty: &str) -> Result<&'a Vec<Value>, IngestError> {
    v.and_then(Value::as_array).ok_or_else(|| IngestError::Parse(format!("{ty} without coordinate array")))
}

fn rings_of<'a>(v: Option<&'a Value>, ty: &str) -> Result<Vec<&'a Vec<Value>>, IngestError> {
    coord_array(v, ty)?.iter().map(|r| coord_array(Some(r), ty)).collect()
}

fn parts_of(geometry: &Value, kind: PhysicalKind) -> Result<Vec<&Vec<Value>>, IngestError> {
    let ty = geometry.get("type").and_then(Value::as_str).unwrap_or("null");
    let coords = geometry.get("coordinates");
    match (ty, kind) {
        ("Polygon", PhysicalKind::Polygons2d | PhysicalKind::Grid) => rings_of(coords, ty),
        ("MultiPolygon", PhysicalKind::Polygons2d | PhysicalKind::Grid) => {
            let mut out = Vec::new();
            for poly in coord_array(coords, ty)? {
                out.extend(rings_of(Some(poly), ty)?);
            }
            Ok(out)
        }
        ("LineString", PhysicalKind::Lines) => Ok(vec![coord_array(coords, ty)?]),
        ("MultiLineString", PhysicalKind::Lines) => rings_of(coords, ty),
        (other, kind) => Err(IngestError::UnsupportedGeometry(format!("{other} geometry in a {} layer", kind.as_str()))),
    }
}

fn position(c: &Value) -> Result<(f64, f64, f64), IngestError> {
    let a = c.as_array().ok_or_else(|| IngestError::Parse("position is not an array".into()))?;
    let num = |i: usize| a.get(i).and_then(Value::as_f64);
    match (num(0), num(1)) {
        (Some(lon), Some(lat)) if (-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat) => {
            Ok((lon, lat, num(2).unwrap_or(0.0)))
        }
        _ => Err(IngestError::Parse(format!("invalid position {c}"))),
    }
}

fn attributes(props: &serde_json::Map<String, Value>) -> BTreeMap<String, Scalar> {
    props
        .iter()
        .map(|(k, v)| {
            let s = match v {
                Value::Null => Scalar::Null,
                Value::Bool(b) => Scalar::number(f64::from(u8::from(*b))),
                Value::Number(n) => n.as_f64().map_or(Scalar::Null, Scalar::number),
                Value::String(s) => Scalar::text(s.clone()),
                other => Scalar::text(other.to_string()),
            };
            (k.clone(), s)
        })
        .collect()
}
