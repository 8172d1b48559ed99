//! Geometric joins between element sets.

use rayon::prelude::*;

use crate::geometry::{
    nearest, relate, GeometryError, IndexKind, Predicate, Shape, SpatialIndex, Targets, Vec3, BOUNDARY_EPS,
};
use crate::grammar::{Level, SpatialRelation};
use crate::layer::{PhysicalLayer, ThematicLayer};
use crate::LocalFrame;

/// The elements on one side of a join.
#[derive(Debug, Clone)]
pub enum Elements {
    /// Located samples: thematic points or layer coordinates.
    Points(Vec<Vec3>),
    /// Objects with their footprints and coordinate means.
    Objects { shapes: Vec<Shape>, centroids: Vec<Vec3> },
}

impl Elements {
    pub fn len(&self) -> usize {
        match self {
            Elements::Points(p) => p.len(),
            Elements::Objects { shapes, .. } => shapes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn of_layer(layer: &PhysicalLayer, level: Level) -> Elements {
        match level {
            Level::Coordinates => Elements::Points(layer.all_coordinates()),
            Level::Objects => Elements::Objects {
                shapes: layer.footprints().into_iter().map(Shape::Area).collect(),
                centroids: layer.objects.iter().map(|o| o.centroid()).collect(),
            },
        }
    }

    pub fn of_thematic(layer: &ThematicLayer, frame: &LocalFrame) -> Elements {
        Elements::Points(layer.projected(frame))
    }

    fn shapes(&self) -> Vec<Shape> {
        match self {
            Elements::Points(p) => p.iter().map(|q| Shape::Point(q.xy())).collect(),
            Elements::Objects { shapes, .. } => shapes.clone(),
        }
    }

    fn shape(&self, i: usize) -> Shape {
        match self {
            Elements::Points(p) => Shape::Point(p[i].xy()),
            Elements::Objects { shapes, .. } => shapes[i].clone(),
        }
    }

    /// Query locations for nearest search.
    fn locations(&self) -> Vec<Vec3> {
        match self {
            Elements::Points(p) => p.clone(),
            Elements::Objects { centroids, .. } => centroids.clone(),
        }
    }
}

/// For each output element, the ascending input elements related to it.
///
/// `contains` means the output element contains the input element; `within`
/// means the output element lies within it. `nearest` links every input
/// element to its nearest output element.
pub fn spatial_join(
    relation: SpatialRelation,
    out: &Elements,
    input: &Elements,
    index: IndexKind,
) -> Result<Vec<Vec<u32>>, GeometryError> {
    let predicate = match relation {
        SpatialRelation::Contains => Predicate::Contains,
        SpatialRelation::Within => Predicate::Within,
        SpatialRelation::Intersects => Predicate::Intersects,
        SpatialRelation::Nearest => return nearest_join(out, input),
        SpatialRelation::Direct | SpatialRelation::InnerAggregate => {
            unreachable!("{relation} is resolved without geometry")
        }
    };
    let in_shapes = input.shapes();
    let boxes: Vec<_> = in_shapes.iter().map(Shape::bbox).collect();
    let idx = SpatialIndex::build(&boxes, index);
    (0..out.len())
        .into_par_iter()
        .map(|o| {
            let shape = out.shape(o);
            let mut hits = Vec::new();
            for i in idx.query(&shape.bbox().expanded(BOUNDARY_EPS)) {
                if relate(&shape, &in_shapes[i], predicate)? {
                    hits.push(i as u32);
                }
            }
            Ok(hits)
        })
        .collect()
}

fn nearest_join(out: &Elements, input: &Elements) -> Result<Vec<Vec<u32>>, GeometryError> {
    let mut entries = vec![Vec::new(); out.len()];
    if input.is_empty() || out.is_empty() {
        return Ok(entries);
    }
    let queries = input.locations();
    let hits = match out {
        Elements::Points(p) => nearest(&queries, Targets::Coordinates(p))?,
        Elements::Objects { shapes, .. } => nearest(&queries, Targets::Shapes(shapes))?,
    };
    for (i, hit) in hits.iter().enumerate() {
        entries[hit.index].push(i as u32);
    }
    Ok(entries)
}
