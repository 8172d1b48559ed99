//! Surface sampling of meshes for shadow accumulation.

use std::collections::HashMap;

use serde::Serialize;

use crate::geometry::Vec3;
use crate::layer::{triangle_area, PhysicalKind, PhysicalLayer, MIN_TRIANGLE_AREA};

/// Vertices closer than this are merged.
pub const WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceSample {
    pub position: Vec3,
    /// Unit outward normal.
    pub normal: Vec3,
    pub object_id: u32,
}

/// Splits a triangle into `n * n` congruent pieces, where `n` is the
/// smallest count that brings the longest edge to at most `max_edge`.
pub fn subdivide_triangle(t: &[Vec3; 3], max_edge: f64) -> Vec<[Vec3; 3]> {
    let longest = [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
        .iter()
        .map(|(a, b)| a.distance_squared(*b).sqrt())
        .fold(0.0, f64::max);
    let n = ((longest / max_edge) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let point = |i: usize, j: usize| {
        let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
        t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v
    };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n - i {
            out.push([point(i, j), point(i + 1, j), point(i, j + 1)]);
            if i + j + 1 < n {
                out.push([point(i + 1, j), point(i + 1, j + 1), point(i, j + 1)]);
            }
        }
    }
    out
}

/// Welds vertices within `WELD_TOLERANCE`, keeping first-seen order.
struct Welder {
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vec3>,
}

impl Welder {
    fn new() -> Welder {
        Welder { cells: HashMap::new(), points: Vec::new() }
    }

    fn key(p: Vec3) -> (i64, i64, i64) {
        let k = |x: f64| (x / WELD_TOLERANCE).floor() as i64;
        (k(p.x), k(p.y), k(p.z))
    }

    fn insert(&mut self, p: Vec3) -> usize {
        let (x, y, z) = Self::key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&(x + dx, y + dy, z + dz)) {
                        if let Some(&i) =
                            list.iter().find(|&&i| self.points[i].distance_squared(p) <= WELD_TOLERANCE * WELD_TOLERANCE)
                        {
                            return i;
                        }
                    }
                }
            }
        }
        let i = self.points.len();
        self.points.push(p);
        self.cells.entry((x, y, z)).or_default().push(i);
        i
    }
}

/// Unique vertices of the subdivided mesh with their outward normals (mean
/// of the incident unit face normals). Degenerate triangles are skipped.
pub fn sample_surfaces(layer: &PhysicalLayer, max_edge: f64) -> Vec<SurfaceSample> {
    if layer.kind != PhysicalKind::Mesh3d || !(max_edge > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (oid, obj) in layer.objects.iter().enumerate() {
        let mut welder = Welder::new();
        let mut normals: Vec<Vec3> = Vec::new();
        for tri in obj.triangles().filter(|t| triangle_area(t) > MIN_TRIANGLE_AREA) {
            let Some(n) = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized() else { continue };
            for piece in subdivide_triangle(&tri, max_edge) {
                for p in piece {
                    let i = welder.insert(p);
                    if i == normals.len() {
                        normals.push(Vec3::ZERO);
                    }
                    normals[i] += n;
                }
            }
        }
        for (p, n) in welder.points.iter().zip(&normals) {
            // vertices shared by opposite faces fall back to straight up
            let normal = n.normalized().unwrap_or(Vec3::UP);
            out.push(SurfaceSample { position: *p, normal, object_id: oid as u32 });
        }
    }
    out
}

/// Upward-facing samples at the centroid of every object of a planar layer
/// (typically a ground grid).
pub fn sample_cells(layer: &PhysicalLayer) -> Vec<SurfaceSample> {
    layer
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let c = o.bbox().center();
            let fp = o.footprint(layer.kind);
            let at = if fp.contains_point(c) { c } else { o.centroid().xy() };
            let z = o.points().map(|p| p.z).fold(f64::MIN, f64::max);
            SurfaceSample { position: Vec3::new(at.x, at.y, z), normal: Vec3::UP, object_id: i as u32 }
        })
        .collect()
}
