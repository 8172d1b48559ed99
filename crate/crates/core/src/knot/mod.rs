//! Knot evaluation: chained joins, aggregations, filters, operation knots
//! and plot extraction.

mod aggregate;
mod engine;
mod export;
pub mod expr;
mod filter;
mod join;
mod plot;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use aggregate::{aggregate, pairwise_sum};
pub use engine::{knot_hashes, Engine, Evaluation};
pub use export::{knot_csv, knot_json, plot_table_json};
pub use expr::{eval_expression, parse_expression, weighted_average_expression, Expr, ExprError};
pub use filter::{apply_filter, Geocoder, OfflineGeocoder, StaticGeocoder};
pub use join::{spatial_join, Elements};
pub use plot::{footprint_slice, plot_table, sector_of, PlotRow, PlotTable};

use crate::geometry::GeometryError;
use crate::grammar::{Diagnostic, Level, SpatialRelation};
use crate::layer::{LayerError, PhysicalLayer};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum KnotError {
    #[error("specification has errors: {}", .0.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unresolved reference `{0}`")]
    UnresolvedReference(String),
    #[error("knot `{knot}` scheme {scheme}: `direct` needs equal element counts ({out} out, {input} in)")]
    CountMismatch { knot: String, scheme: usize, out: usize, input: usize },
    #[error("knot `{knot}` scheme {scheme}: element {element} has {matches} matches; the relation needs an aggregation")]
    MissingAggregation { knot: String, scheme: usize, element: usize, matches: usize },
    #[error("knot `{knot}`, element {element}: {detail}")]
    Type { knot: String, element: usize, detail: String },
    #[error("knot `{knot}`: {source}")]
    Expression { knot: String, source: ExprError },
    #[error("knot `{knot}` scheme {scheme}: relation `{relation}` {detail}")]
    InvalidRelation { knot: String, scheme: usize, relation: SpatialRelation, detail: String },
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("address filter `{0}` needs a geocoder; none is configured")]
    GeocoderUnavailable(String),
    #[error("knot `{knot}` has no {level} values")]
    LevelUnavailable { knot: String, level: Level },
    #[error("physical layer `{0}` is not a mesh3d layer")]
    NotMesh(String),
    #[error("object {0} not found")]
    ObjectNotFound(u32),
    #[error("object {object} has no coordinates within the slice band")]
    NoSamplesInBand { object: u32 },
}

/// One applied integration scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvenanceStep {
    pub scheme: usize,
    pub relation: SpatialRelation,
    pub out_level: Level,
    /// Join-cache digest for geometric joins.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub join_key: Option<String>,
}

/// Values of a knot aligned with its final physical layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluatedKnot {
    pub name: String,
    pub physical_layer: String,
    pub level: Level,
    /// One value per layer coordinate; broadcast from objects at object level.
    pub coord_values: Vec<Scalar>,
    /// One value per object when the knot is at object level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object_values: Option<Vec<Scalar>>,
    pub provenance: Vec<ProvenanceStep>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EvaluatedKnot {
    /// Builds a knot from values at `level`.
    pub fn from_values(name: &str, layer: &PhysicalLayer, level: Level, values: Vec<Scalar>) -> EvaluatedKnot {
        let (coord_values, object_values) = match level {
            Level::Coordinates => (values, None),
            Level::Objects => (broadcast(layer, &values), Some(values)),
        };
        EvaluatedKnot {
            name: name.to_owned(),
            physical_layer: layer.name.clone(),
            level,
            coord_values,
            object_values,
            provenance: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Values at the knot's own level.
    pub fn values(&self) -> &[Scalar] {
        match (&self.level, &self.object_values) {
            (Level::Objects, Some(v)) => v,
            _ => &self.coord_values,
        }
    }

    pub fn values_at(&self, level: Level) -> Option<&[Scalar]> {
        match level {
            Level::Coordinates => Some(&self.coord_values),
            Level::Objects => self.object_values.as_deref(),
        }
    }
}

/// Repeats each object value over the object's coordinates.
pub fn broadcast(layer: &PhysicalLayer, object_values: &[Scalar]) -> Vec<Scalar> {
    let mut out = Vec::with_capacity(layer.coordinate_count());
    for (obj, v) in layer.objects.iter().zip(object_values) {
        out.extend(std::iter::repeat_n(v.clone(), obj.coordinate_count()));
    }
    out
}

pub type SharedKnot = Arc<EvaluatedKnot>;
