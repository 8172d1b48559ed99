//! Conversion of external data into layers: OSM extracts, GeoJSON, CSV
//! tables and regular grids, plus mesh surface sampling.

mod csv;
mod geojson;
mod grid;
mod osm;
mod sample;
mod triangulate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::csv::{ingest_csv, ingest_csv_str, ColumnMap};
pub use geojson::ingest_geojson;
pub use grid::{make_grid, DEFAULT_MAX_CELLS};
pub use osm::{all_classes, building_height, classify, ingest_osm, Member, OsmExtract, OsmIngest, Relation, Way};
pub use sample::{sample_cells, sample_surfaces, subdivide_triangle, SurfaceSample, WELD_TOLERANCE};
pub use triangulate::{extrude, triangulate};

use crate::geometry::GeoBox;
use crate::knot::Geocoder;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no features in the region")]
    EmptyRegion,
    #[error("malformed way: {0}")]
    MalformedWay(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("the feature collection is empty")]
    EmptyCollection,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("grid would have {cells} cells (limit {limit})")]
    TooManyCells { cells: u64, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("region address `{0}` could not be resolved")]
    UnresolvedRegion(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureClass {
    Buildings,
    Parks,
    Water,
    Roads,
}

impl FeatureClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureClass::Buildings => "buildings",
            FeatureClass::Parks => "parks",
            FeatureClass::Water => "water",
            FeatureClass::Roads => "roads",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureClass> {
        [FeatureClass::Buildings, FeatureClass::Parks, FeatureClass::Water, FeatureClass::Roads]
            .into_iter()
            .find(|c| c.as_str() == s)
    }
}

/// Region of interest; polygon vertices are `(lat, lon)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    BoundingBox(GeoBox),
    Polygon(Vec<(f64, f64)>),
    Address(String),
}

impl Region {
    /// Replaces an address by its geocoded box.
    pub fn resolve(self, geocoder: &dyn Geocoder) -> Result<Region, IngestError> {
        match self {
            Region::Address(a) => geocoder.geocode(&a).map(Region::BoundingBox).ok_or(IngestError::UnresolvedRegion(a)),
            other => Ok(other),
        }
    }

    pub fn center(&self) -> Option<(f64, f64)> {
        match self {
            Region::BoundingBox(b) => Some(b.center()),
            Region::Polygon(v) if !v.is_empty() => {
                let n = v.len() as f64;
                Some((v.iter().map(|p| p.0).sum::<f64>() / n, v.iter().map(|p| p.1).sum::<f64>() / n))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub region: Region,
    pub layers: BTreeSet<FeatureClass>,
    pub default_building_height: f64,
    pub meters_per_level: f64,
    pub grid_cell: f64,
    pub surface_sample_edge: f64,
}

impl IngestConfig {
    pub fn new(region: Region) -> IngestConfig {
        IngestConfig {
            region,
            layers: all_classes(),
            default_building_height: 10.0,
            meters_per_level: 3.5,
            grid_cell: 10.0,
            surface_sample_edge: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for (name, v) in [
            ("default_building_height", self.default_building_height),
            ("meters_per_level", self.meters_per_level),
            ("grid_cell", self.grid_cell),
            ("surface_sample_edge", self.surface_sample_edge),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(IngestError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if let Region::BoundingBox(b) = &self.region {
            if !b.is_valid() {
                return Err(IngestError::InvalidConfig("region bounding box is invalid".into()));
            }
        }
        if let Region::Polygon(v) = &self.region {
            if v.len() < 3 {
                return Err(IngestError::InvalidConfig("region polygon needs at least 3 vertices".into()));
            }
        }
        Ok(())
    }
}
