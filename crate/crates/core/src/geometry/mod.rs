//! Projection, planar predicates, spatial indexes and nearest search.

mod frame;
mod index;
mod predicates;
mod vec;

use rayon::prelude::*;
use thiserror::Error;

pub use frame::{great_circle_distance, GeoBox, LocalFrame, EARTH_RADIUS_M};
pub use index::{IndexKind, PointNearest, ShapeNearest, SpatialIndex};
pub use predicates::{
    orient, relate, ring_signed_area, segment_distance_squared, segments_intersect, Footprint, Predicate, Shape,
    BOUNDARY_EPS,
};
pub use vec::{Aabb2, Vec2, Vec3};

use crate::layer::{PhysicalLayer, PhysicalObject};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("nearest search needs a non-empty target set")]
    EmptyTarget,
    #[error("relation {2:?} is not supported between {0} and {1}")]
    UnsupportedKindPair(&'static str, &'static str, Predicate),
}

/// Closed point-in-polygon test against an object's footprint.
pub fn point_in_polygon(p: Vec2, layer: &PhysicalLayer, obj: &PhysicalObject) -> bool {
    obj.footprint(layer.kind).contains_point(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestHit {
    pub index: usize,
    pub distance: f64,
}

pub enum Targets<'a> {
    /// 3D distance to each coordinate.
    Coordinates(&'a [Vec3]),
    /// Planar distance to each shape (0 inside an area).
    Shapes(&'a [Shape]),
}

/// For each query point, the nearest target element (ties go to the lowest
/// index).
pub fn nearest(queries: &[Vec3], targets: Targets<'_>) -> Result<Vec<NearestHit>, GeometryError> {
    match targets {
        Targets::Coordinates(points) => {
            if points.is_empty() {
                return Err(GeometryError::EmptyTarget);
            }
            let tree = PointNearest::new(points);
            Ok(queries
                .par_iter()
                .map(|&q| {
                    let (index, d2) = tree.nearest(q).expect("non-empty tree");
                    NearestHit { index, distance: d2.sqrt() }
                })
                .collect())
        }
        Targets::Shapes(shapes) => {
            if shapes.is_empty() {
                return Err(GeometryError::EmptyTarget);
            }
            let boxes: Vec<Aabb2> = shapes.iter().map(Shape::bbox).collect();
            let tree = ShapeNearest::new(&boxes);
            Ok(queries
                .par_iter()
                .map(|&q| {
                    let p = q.xy();
                    let (index, d2) = tree.nearest(p, |i| shapes[i].distance_squared(p)).expect("non-empty tree");
                    NearestHit { index, distance: d2.sqrt() }
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn query_on_target_has_zero_distance() {
        let targets = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)];
        let hits = nearest(&[Vec3::new(4.0, 5.0, 6.0)], Targets::Coordinates(&targets)).unwrap();
        assert_eq!(hits[0], NearestHit { index: 1, distance: 0.0 });
    }

    #[test]
    fn empty_target_is_an_error() {
        assert_eq!(nearest(&[Vec3::ZERO], Targets::Coordinates(&[])), Err(GeometryError::EmptyTarget));
        assert_eq!(nearest(&[Vec3::ZERO], Targets::Shapes(&[])), Err(GeometryError::EmptyTarget));
    }

    #[test]
    fn equidistant_targets_pick_lowest_index() {
        let mut targets = vec![Vec3::new(100.0, 100.0, 0.0); 10];
        targets[3] = Vec3::new(-1.0, 0.0, 0.0);
        targets[7] = Vec3::new(1.0, 0.0, 0.0);
        let hits = nearest(&[Vec3::ZERO], Targets::Coordinates(&targets)).unwrap();
        assert_eq!(hits[0].index, 3);
    }

    #[test]
    fn shape_nearest_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shapes: Vec<Shape> = (0..60)
            .map(|_| {
                let x = rng.gen_range(0.0..500.0);
                let y = rng.gen_range(0.0..500.0);
                let w = rng.gen_range(1.0..40.0);
                let h = rng.gen_range(1.0..40.0);
                Shape::Area(Footprint::from_rings(vec![vec![
                    Vec2::new(x, y),
                    Vec2::new(x + w, y),
                    Vec2::new(x + w, y + h),
                    Vec2::new(x, y + h),
                ]]))
            })
            .collect();
        let queries: Vec<Vec3> =
            (0..1000).map(|_| Vec3::new(rng.gen_range(-50.0..550.0), rng.gen_range(-50.0..550.0), 0.0)).collect();
        let hits = nearest(&queries, Targets::Shapes(&shapes)).unwrap();
        for (q, hit) in queries.iter().zip(&hits) {
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, s) in shapes.iter().enumerate() {
                let d = s.distance_squared(q.xy());
                if d < best.1 {
                    best = (i, d);
                }
            }
            assert_eq!(hit.index, best.0);
        }
    }
}
