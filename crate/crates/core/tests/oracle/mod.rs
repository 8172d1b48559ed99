//! Brute-force reference implementations, written independently of the
//! library: no index, no shared predicates, plain loops.
#![allow(dead_code)]

use rand::Rng;

pub type P2 = (f64, f64);
pub type P3 = [f64; 3];

fn orient(a: P2, b: P2, c: P2) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(p: P2, a: P2, b: P2) -> bool {
    orient(a, b, p) == 0.0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed segments share a point.
pub fn segments_meet(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

fn edges(ring: &[P2]) -> impl Iterator<Item = (P2, P2)> + '_ {
    (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()]))
}

/// Even-odd crossing test; boundary points count as inside.
pub fn point_in_ring(p: P2, ring: &[P2]) -> bool {
    if edges(ring).any(|(a, b)| on_segment(p, a, b)) {
        return true;
    }
    let mut inside = false;
    for (a, b) in edges(ring) {
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            inside = !inside;
        }
    }
    inside
}

fn edges_cross_properly(r: &[P2], s: &[P2]) -> bool {
    edges(r).any(|(a, b)| {
        edges(s).any(|(c, d)| {
            let (d1, d2) = (orient(c, d, a), orient(c, d, b));
            let (d3, d4) = (orient(a, b, c), orient(a, b, d));
            d1 * d2 < 0.0 && d3 * d4 < 0.0
        })
    })
}

/// `inner` lies inside `outer` (simple rings in general position).
pub fn ring_contains_ring(outer: &[P2], inner: &[P2]) -> bool {
    inner.iter().all(|&v| point_in_ring(v, outer)) && !edges_cross_properly(outer, inner)
}

pub fn rings_intersect(r: &[P2], s: &[P2]) -> bool {
    edges(r).any(|(a, b)| edges(s).any(|(c, d)| segments_meet(a, b, c, d)))
        || point_in_ring(r[0], s)
        || point_in_ring(s[0], r)
}

fn segment_distance2(p: P2, a: P2, b: P2) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    qx * qx + qy * qy
}

/// Distance from a point to a filled ring; zero inside.
pub fn ring_distance(p: P2, ring: &[P2]) -> f64 {
    if point_in_ring(p, ring) {
        return 0.0;
    }
    edges(ring).map(|(a, b)| segment_distance2(p, a, b)).fold(f64::INFINITY, f64::min).sqrt()
}

/// Index of the closest ring to `p`; ties go to the lowest index.
pub fn nearest_ring(p: P2, rings: &[Vec<P2>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, r) in rings.iter().enumerate() {
        let d = ring_distance(p, r);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    Sum,
    Mean,
    Min,
    Max,
    Count,
}

impl Agg {
    pub const ALL: [Agg; 5] = [Agg::Sum, Agg::Mean, Agg::Min, Agg::Max, Agg::Count];

    pub fn name(self) -> &'static str {
        match self {
            Agg::Sum => "sum",
            Agg::Mean => "mean",
            Agg::Min => "min",
            Agg::Max => "max",
            Agg::Count => "count",
        }
    }
}

/// Left-to-right reduction; `None` is null.
pub fn aggregate(agg: Agg, values: &[Option<f64>]) -> Option<f64> {
    if agg == Agg::Count {
        return Some(values.len() as f64);
    }
    let nums: Vec<f64> = values.iter().flatten().copied().collect();
    if nums.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for x in &nums {
        sum += x;
    }
    Some(match agg {
        Agg::Sum => sum,
        Agg::Mean => sum / nums.len() as f64,
        Agg::Min => nums.iter().copied().fold(f64::INFINITY, f64::min),
        Agg::Max => nums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Agg::Count => unreachable!(),
    })
}

/// Star-shaped ring around `c`, counter-clockwise, possibly concave. Angular
/// gaps stay below half a turn so the ring is simple.
pub fn star_ring(rng: &mut impl Rng, c: P2, r_min: f64, r_max: f64, n: usize) -> Vec<P2> {
    use std::f64::consts::{PI, TAU};
    let angles = loop {
        let mut a: Vec<f64> = (0..n.max(3)).map(|_| rng.gen_range(0.0..TAU)).collect();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
        let wrap = a[0] + TAU - a[a.len() - 1];
        if a.len() >= 3 && a.windows(2).map(|w| w[1] - w[0]).chain([wrap]).all(|g| g < PI - 1e-3) {
            break a;
        }
    };
    angles
        .into_iter()
        .map(|a| {
            let r = rng.gen_range(r_min..r_max);
            (c.0 + r * a.cos(), c.1 + r * a.sin())
        })
        .collect()
}

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Two-sided Moller-Trumbore; hit distance in (1e-9, t_max).
pub fn ray_hits_triangle(o: P3, d: P3, t: &[P3; 3], t_max: f64) -> bool {
    let e1 = sub(t[1], t[0]);
    let e2 = sub(t[2], t[0]);
    let p = cross(d, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv = 1.0 / det;
    let s = sub(o, t[0]);
    let u = dot(s, p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = cross(s, e1);
    let v = dot(d, q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let dist = dot(e2, q) * inv;
    dist > 1e-9 && dist < t_max
}

pub fn linear_any_hit(o: P3, d: P3, tris: &[[P3; 3]], t_max: f64) -> bool {
    tris.iter().any(|t| ray_hits_triangle(o, d, t, t_max))
}
