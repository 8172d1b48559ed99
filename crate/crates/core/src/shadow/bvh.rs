//! Median-split bounding volume hierarchy over triangles with any-hit rays.

use super::ShadowError;
use crate::geometry::Vec3;
use crate::layer::{triangle_area, PhysicalKind, PhysicalLayer, MIN_TRIANGLE_AREA};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb3 {
    fn empty() -> Aabb3 {
        Aabb3 { min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY), max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn contains(&self, o: &Aabb3) -> bool {
        (0..3).all(|k| self.min[k] <= o.min[k] && o.max[k] <= self.max[k])
    }

    /// Slab test against `origin + t * dir` for t in [0, t_max].
    fn hit(&self, origin: Vec3, inv: Vec3, t_max: f64) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv[k];
            let b = (self.max[k] - origin[k]) * inv[k];
            // NaN from 0 * inf means the ray lies on the slab plane: keep it
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo > t0 {
                t0 = lo;
            }
            if hi < t1 {
                t1 = hi;
            }
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb3, start: usize, end: usize },
    Inner { bounds: Aabb3, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb3 {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<[Vec3; 3]>,
    nodes: Vec<Node>,
}

/// Möller–Trumbore intersection; hits on either face with t in (t_min, t_max).
pub fn ray_triangle(origin: Vec3, dir: Vec3, tri: &[Vec3; 3], t_max: f64) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > 1e-9 && t < t_max).then_some(t)
}

fn bounds_of(tris: &[[Vec3; 3]]) -> Aabb3 {
    let mut b = Aabb3::empty();
    for t in tris {
        for &p in t {
            b.grow(p);
        }
    }
    b
}

impl Bvh {
    pub fn build(mut triangles: Vec<[Vec3; 3]>) -> Result<Bvh, ShadowError> {
        if triangles.is_empty() {
            return Err(ShadowError::EmptyScene);
        }
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        Self::split(&mut triangles, 0, &mut nodes);
        Ok(Bvh { triangles, nodes })
    }

    /// A scene without occluders.
    pub fn empty() -> Bvh {
        Bvh { triangles: Vec::new(), nodes: Vec::new() }
    }

    /// All non-degenerate triangles of mesh3d layers.
    pub fn from_layers(layers: &[&PhysicalLayer]) -> Result<Bvh, ShadowError> {
        let mut tris = Vec::new();
        for layer in layers {
            if layer.kind != PhysicalKind::Mesh3d {
                return Err(ShadowError::NotMesh(layer.name.clone()));
            }
            for o in &layer.objects {
                tris.extend(o.triangles().filter(|t| triangle_area(t) > MIN_TRIANGLE_AREA));
            }
        }
        Bvh::build(tris)
    }

    fn split(tris: &mut [[Vec3; 3]], offset: usize, nodes: &mut Vec<Node>) -> usize {
        let bounds = bounds_of(tris);
        let id = nodes.len();
        if tris.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf { bounds, start: offset, end: offset + tris.len() });
            return id;
        }
        let centroid = |t: &[Vec3; 3]| (t[0] + t[1] + t[2]) / 3.0;
        let mut cb = Aabb3::empty();
        for t in tris.iter() {
            cb.grow(centroid(t));
        }
        let ext = cb.max - cb.min;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = tris.len() / 2;
        tris.select_nth_unstable_by(mid, |a, b| centroid(a)[axis].total_cmp(&centroid(b)[axis]));
        nodes.push(Node::Leaf { bounds, start: 0, end: 0 });
        let (lo, hi) = tris.split_at_mut(mid);
        let left = Self::split(lo, offset, nodes);
        let right = Self::split(hi, offset + mid, nodes);
        nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Checks that leaves partition the triangles and parents enclose children.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut covered = vec![0u32; self.triangles.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Leaf { start, end, bounds } => {
                    for (k, t) in self.triangles[*start..*end].iter().enumerate() {
                        covered[start + k] += 1;
                        if !bounds.contains(&bounds_of(std::slice::from_ref(t))) {
                            return Err(format!("leaf {i} does not enclose its triangles"));
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if !bounds.contains(self.nodes[*left].bounds()) || !bounds.contains(self.nodes[*right].bounds()) {
                        return Err(format!("node {i} does not enclose its children"));
                    }
                }
            }
        }
        match covered.iter().position(|&c| c != 1) {
            Some(t) => Err(format!("triangle {t} appears in {} leaves", covered[t])),
            None => Ok(()),
        }
    }

    /// True when the ray `origin + t * dir`, 0 < t < t_max, hits any triangle.
    pub fn any_hit(&self, origin: Vec3, dir: Vec3, t_max: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.bounds().hit(origin, inv, t_max) {
                continue;
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    if self.triangles[*start..*end].iter().any(|t| ray_triangle(origin, dir, t, t_max).is_some()) {
                        return true;
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        false
    }
}
