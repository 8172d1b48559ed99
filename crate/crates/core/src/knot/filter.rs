//! Knot filters: bounding boxes and geocoded addresses.

use std::collections::HashMap;

use super::{broadcast, EvaluatedKnot, KnotError};
use crate::geometry::{Aabb2, GeoBox, LocalFrame};
use crate::grammar::{FilterDef, Level};
use crate::layer::PhysicalLayer;
use crate::scalar::Scalar;

/// Resolves an address to a geodetic box.
pub trait Geocoder: Send + Sync {
    fn geocode(&self, address: &str) -> Option<GeoBox>;
}

/// The default geocoder: resolves nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct OfflineGeocoder;

impl Geocoder for OfflineGeocoder {
    fn geocode(&self, _address: &str) -> Option<GeoBox> {
        None
    }
}

/// A fixed address table.
#[derive(Debug, Default, Clone)]
pub struct StaticGeocoder(pub HashMap<String, GeoBox>);

impl Geocoder for StaticGeocoder {
    fn geocode(&self, address: &str) -> Option<GeoBox> {
        self.0.get(address).copied()
    }
}

/// Nulls the values of elements whose representative point (coordinate or
/// object centroid) lies outside the filter box. Geometry is untouched.
pub fn apply_filter(
    knot: &EvaluatedKnot,
    layer: &PhysicalLayer,
    frame: &LocalFrame,
    filter: &FilterDef,
    geocoder: &dyn Geocoder,
) -> Result<EvaluatedKnot, KnotError> {
    let geo = match filter {
        FilterDef::BoundingBox(_) => filter.geo_box().expect("bounding box filter"),
        FilterDef::Address(a) => geocoder.geocode(a).ok_or_else(|| KnotError::GeocoderUnavailable(a.clone()))?,
    };
    let region: Aabb2 = geo.project(frame);
    let mut out = knot.clone();
    match knot.level {
        Level::Objects => {
            let values: Vec<Scalar> = layer
                .objects
                .iter()
                .zip(knot.values())
                .map(|(o, v)| if region.contains_point(o.centroid().xy()) { v.clone() } else { Scalar::Null })
                .collect();
            out.coord_values = broadcast(layer, &values);
            out.object_values = Some(values);
        }
        Level::Coordinates => {
            out.coord_values = layer
                .objects
                .iter()
                .flat_map(|o| o.points())
                .zip(&knot.coord_values)
                .map(|(p, v)| if region.contains_point(p.xy()) { v.clone() } else { Scalar::Null })
                .collect();
        }
    }
    Ok(out)
}
