//! Planar predicates with closed-boundary semantics: a point lying on an edge
//! counts as inside, touching regions intersect, and a region contains
//! another region that shares part of its boundary.

use std::collections::HashMap;

use super::vec::{Aabb2, Vec2};
use super::GeometryError;

/// Distance under which a point is considered to lie on a boundary segment.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predicate {
    Contains,
    Within,
    Intersects,
}

#[derive(Debug, Clone)]
enum Surface {
    /// Exterior rings counter-clockwise, holes clockwise; filled by the
    /// non-zero winding rule.
    Rings(Vec<Vec<Vec2>>),
    /// Union of triangles, e.g. the upward faces of a building mesh.
    Triangles(Vec<[Vec2; 3]>),
    /// Polylines; no interior.
    Curve,
}

/// The planar extent of a physical object.
#[derive(Debug, Clone)]
pub struct Footprint {
    surface: Surface,
    segments: Vec<(Vec2, Vec2)>,
    vertices: Vec<Vec2>,
    bbox: Aabb2,
}

/// A join element: either a bare location or an object footprint.
#[derive(Debug, Clone)]
pub enum Shape {
    Point(Vec2),
    Area(Footprint),
}

pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Squared distance from `p` to segment `ab`.
pub fn segment_distance_squared(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.length_squared();
    if len2 == 0.0 {
        return p.distance_squared(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance_squared(a + ab * t)
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    segment_distance_squared(p, a, b) <= BOUNDARY_EPS * BOUNDARY_EPS
}

fn within_span(p: Vec2, a: Vec2, b: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection, including touching endpoints and collinear
/// overlap.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1.signum() * o2.signum() < 0.0 && o3.signum() * o4.signum() < 0.0 {
        return true;
    }
    (o1 == 0.0 && within_span(c, a, b))
        || (o2 == 0.0 && within_span(d, a, b))
        || (o3 == 0.0 && within_span(a, c, d))
        || (o4 == 0.0 && within_span(b, c, d))
        || on_segment(c, a, b)
        || on_segment(d, a, b)
        || on_segment(a, c, d)
        || on_segment(b, c, d)
}

/// Interiors of the two segments cross at a single point.
fn segments_cross_properly(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = orient(a, b, c).signum();
    let o2 = orient(a, b, d).signum();
    let o3 = orient(c, d, a).signum();
    let o4 = orient(c, d, b).signum();
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn winding_number(p: Vec2, ring: &[Vec2]) -> i32 {
    let n = ring.len();
    let mut wn = 0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && orient(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && orient(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn in_triangle(p: Vec2, t: &[Vec2; 3]) -> bool {
    let d1 = orient(t[0], t[1], p);
    let d2 = orient(t[1], t[2], p);
    let d3 = orient(t[2], t[0], p);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}

/// Signed area of a closed ring (positive when counter-clockwise).
pub fn ring_signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += ring[i].cross(ring[(i + 1) % n]);
    }
    acc / 2.0
}

impl Footprint {
    pub fn from_rings(rings: Vec<Vec<Vec2>>) -> Footprint {
        let mut segments = Vec::new();
        let mut vertices = Vec::new();
        for ring in &rings {
            let n = ring.len();
            for i in 0..n {
                segments.push((ring[i], ring[(i + 1) % n]));
            }
            vertices.extend_from_slice(ring);
        }
        let bbox = Aabb2::from_points(vertices.iter().copied());
        Footprint { surface: Surface::Rings(rings), segments, vertices, bbox }
    }

    /// Footprint made of a triangle soup. Boundary segments are the edges
    /// used by an odd number of triangles.
    pub fn from_triangles(triangles: Vec<[Vec2; 3]>) -> Footprint {
        let key = |p: Vec2| (p.x.to_bits(), p.y.to_bits());
        let mut counts: HashMap<((u64, u64), (u64, u64)), (usize, (Vec2, Vec2))> = HashMap::new();
        let mut order = Vec::new();
        let mut vertices = Vec::new();
        for t in &triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let (ka, kb) = (key(a), key(b));
                let k = if ka <= kb { (ka, kb) } else { (kb, ka) };
                let entry = counts.entry(k).or_insert_with(|| {
                    order.push(k);
                    (0, (a, b))
                });
                entry.0 += 1;
            }
            vertices.extend_from_slice(t);
        }
        let segments = order
            .iter()
            .filter_map(|k| {
                let (count, seg) = counts[k];
                (count % 2 == 1).then_some(seg)
            })
            .collect();
        let bbox = Aabb2::from_points(vertices.iter().copied());
        Footprint { surface: Surface::Triangles(triangles), segments, vertices, bbox }
    }

    pub fn from_polylines(parts: Vec<Vec<Vec2>>) -> Footprint {
        let mut segments = Vec::new();
        let mut vertices = Vec::new();
        for part in &parts {
            for w in part.windows(2) {
                segments.push((w[0], w[1]));
            }
            vertices.extend_from_slice(part);
        }
        let bbox = Aabb2::from_points(vertices.iter().copied());
        Footprint { surface: Surface::Curve, segments, vertices, bbox }
    }

    pub fn has_area(&self) -> bool {
        !matches!(self.surface, Surface::Curve)
    }

    pub fn bbox(&self) -> Aabb2 {
        self.bbox
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn segments(&self) -> &[(Vec2, Vec2)] {
        &self.segments
    }

    pub fn on_boundary(&self, p: Vec2) -> bool {
        if !self.bbox.expanded(BOUNDARY_EPS).contains_point(p) {
            return false;
        }
        self.segments.iter().any(|&(a, b)| on_segment(p, a, b))
    }

    /// Closed containment: boundary points are inside.
    pub fn contains_point(&self, p: Vec2) -> bool {
        if !self.bbox.expanded(BOUNDARY_EPS).contains_point(p) {
            return false;
        }
        if self.on_boundary(p) {
            return true;
        }
        self.strictly_inside(p)
    }

    /// Open containment: inside and not on the boundary.
    pub fn interior_contains(&self, p: Vec2) -> bool {
        self.bbox.contains_point(p) && !self.on_boundary(p) && self.strictly_inside(p)
    }

    fn strictly_inside(&self, p: Vec2) -> bool {
        match &self.surface {
            Surface::Rings(rings) => rings.iter().map(|r| winding_number(p, r)).sum::<i32>() != 0,
            Surface::Triangles(tris) => tris.iter().any(|t| in_triangle(p, t)),
            Surface::Curve => false,
        }
    }

    /// Squared distance from `p` to the footprint (0 when contained).
    pub fn distance_squared(&self, p: Vec2) -> f64 {
        if self.has_area() && self.contains_point(p) {
            return 0.0;
        }
        self.segments
            .iter()
            .map(|&(a, b)| segment_distance_squared(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        match &self.surface {
            Surface::Rings(rings) => rings.iter().map(|r| ring_signed_area(r)).sum(),
            Surface::Triangles(tris) => tris.iter().map(|t| orient(t[0], t[1], t[2]).abs() / 2.0).sum(),
            Surface::Curve => 0.0,
        }
    }

    fn contains_footprint(&self, other: &Footprint) -> bool {
        if !self.bbox.expanded(BOUNDARY_EPS).intersects(&other.bbox) {
            return false;
        }
        if !other.vertices.iter().all(|&v| self.contains_point(v)) {
            return false;
        }
        for &(a, b) in &self.segments {
            for &(c, d) in &other.segments {
                if segments_cross_properly(a, b, c, d) {
                    return false;
                }
            }
        }
        if other.has_area() && self.vertices.iter().any(|&v| other.interior_contains(v)) {
            return false;
        }
        other.segments.iter().all(|&(a, b)| self.contains_point((a + b) / 2.0))
    }

    fn intersects_footprint(&self, other: &Footprint) -> bool {
        if !self.bbox.expanded(BOUNDARY_EPS).intersects(&other.bbox) {
            return false;
        }
        for &(a, b) in &self.segments {
            for &(c, d) in &other.segments {
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        (self.has_area() && other.vertices.iter().any(|&v| self.contains_point(v)))
            || (other.has_area() && self.vertices.iter().any(|&v| other.contains_point(v)))
    }
}

impl Shape {
    pub fn bbox(&self) -> Aabb2 {
        match self {
            Shape::Point(p) => Aabb2::from_point(*p),
            Shape::Area(f) => f.bbox(),
        }
    }

    /// Squared planar distance from `p` to this shape.
    pub fn distance_squared(&self, p: Vec2) -> f64 {
        match self {
            Shape::Point(q) => q.distance_squared(p),
            Shape::Area(f) => f.distance_squared(p),
        }
    }

    fn covers_point(&self, p: Vec2) -> bool {
        match self {
            Shape::Point(q) => q.distance_squared(p) <= BOUNDARY_EPS * BOUNDARY_EPS,
            Shape::Area(f) if f.has_area() => f.contains_point(p),
            Shape::Area(f) => f.on_boundary(p),
        }
    }
}

/// Evaluates `predicate(a, b)`, e.g. `a contains b`.
pub fn relate(a: &Shape, b: &Shape, predicate: Predicate) -> Result<bool, GeometryError> {
    match predicate {
        Predicate::Within => relate(b, a, Predicate::Contains),
        Predicate::Contains => match (a, b) {
            (_, Shape::Point(p)) => Ok(a.covers_point(*p)),
            (Shape::Point(_), Shape::Area(_)) => Ok(false),
            (Shape::Area(fa), Shape::Area(fb)) => {
                if !fa.has_area() {
                    if !fb.has_area() {
                        return Err(GeometryError::UnsupportedKindPair("lines", "lines", predicate));
                    }
                    return Ok(false);
                }
                Ok(fa.contains_footprint(fb))
            }
        },
        Predicate::Intersects => match (a, b) {
            (_, Shape::Point(p)) => Ok(a.covers_point(*p)),
            (Shape::Point(p), _) => Ok(b.covers_point(*p)),
            (Shape::Area(fa), Shape::Area(fb)) => Ok(fa.intersects_footprint(fb)),
        },
    }
}
