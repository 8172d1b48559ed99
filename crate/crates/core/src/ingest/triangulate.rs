//! Ear-clipping triangulation with hole bridging, and footprint extrusion.

use crate::geometry::{orient, ring_signed_area, Footprint, Vec2};

/// Triangulates a polygon given as rings: exterior rings plus holes, in any
/// winding. Holes are assigned to the exterior that contains them (nesting
/// parity decides which rings are holes). Returned triangles are
/// counter-clockwise and index the rings' vertices in concatenated order.
pub fn triangulate(rings: &[Vec<Vec2>]) -> Vec<[u32; 3]> {
    let mut offsets = Vec::with_capacity(rings.len());
    let mut acc = 0u32;
    for r in rings {
        offsets.push(acc);
        acc += r.len() as u32;
    }
    let points: Vec<Vec2> = rings.iter().flatten().copied().collect();
    let depth = nesting_depth(rings);
    let mut out = Vec::new();
    for (e, ring) in rings.iter().enumerate() {
        if depth[e] % 2 == 1 || ring.len() < 3 {
            continue;
        }
        let outer_fp = Footprint::from_rings(vec![ring.clone()]);
        let holes: Vec<usize> = (0..rings.len())
            .filter(|&h| {
                depth[h] == depth[e] + 1 && rings[h].len() >= 3 && outer_fp.interior_contains(rings[h][0])
            })
            .collect();
        let cycle = |i: usize, ccw: bool| -> Vec<u32> {
            let mut c: Vec<u32> = (0..rings[i].len() as u32).map(|k| offsets[i] + k).collect();
            if (ring_signed_area(&rings[i]) > 0.0) != ccw {
                c.reverse();
            }
            c
        };
        let mut poly = cycle(e, true);
        let mut hole_cycles: Vec<Vec<u32>> = holes.iter().map(|&h| cycle(h, false)).collect();
        let max_x = |c: &Vec<u32>| c.iter().map(|&i| points[i as usize].x).fold(f64::MIN, f64::max);
        hole_cycles.sort_by(|a, b| max_x(b).total_cmp(&max_x(a)));
        for hole in hole_cycles {
            poly = bridge(&points, poly, &hole);
        }
        ear_clip(&points, poly, &mut out);
    }
    out
}

/// Number of other rings enclosing each ring; odd depth marks a hole.
fn nesting_depth(rings: &[Vec<Vec2>]) -> Vec<usize> {
    (0..rings.len())
        .map(|i| {
            (0..rings.len())
                .filter(|&j| {
                    j != i
                        && rings[i].first().is_some_and(|&p| Footprint::from_rings(vec![rings[j].clone()]).interior_contains(p))
                })
                .count()
        })
        .collect()
}

/// Splices `hole` into `poly` through a mutually visible vertex pair.
fn bridge(points: &[Vec2], poly: Vec<u32>, hole: &[u32]) -> Vec<u32> {
    let (mi, m) = hole
        .iter()
        .enumerate()
        .map(|(k, &i)| (k, points[i as usize]))
        .fold((0, Vec2::new(f64::MIN, 0.0)), |best, cur| if cur.1.x > best.1.x { cur } else { best });
    let n = poly.len();
    // nearest edge crossing the ray from m toward +x
    let mut best: Option<(f64, usize)> = None;
    for k in 0..n {
        let a = points[poly[k] as usize];
        let b = points[poly[(k + 1) % n] as usize];
        if (a.y > m.y) == (b.y > m.y) && a.y != m.y && b.y != m.y {
            continue;
        }
        if a.y == b.y {
            continue;
        }
        let x = a.x + (m.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if x < m.x || (a.y - m.y) * (b.y - m.y) > 0.0 {
            continue;
        }
        if best.is_none_or(|(bx, _)| x < bx) {
            best = Some((x, k));
        }
    }
    let pick = match best {
        Some((x, k)) => {
            let a = poly[k];
            let b = poly[(k + 1) % n];
            let (pk, p) = if points[a as usize].x > points[b as usize].x { (k, a) } else { ((k + 1) % n, b) };
            let hit = Vec2::new(x, m.y);
            let pp = points[p as usize];
            // reflex vertices inside (m, hit, p) may block the view of p
            let mut chosen = (pk, f64::INFINITY, f64::INFINITY);
            let (t0, t1, t2) = if orient(m, hit, pp) >= 0.0 { (m, hit, pp) } else { (m, pp, hit) };
            for j in 0..n {
                let q = points[poly[j] as usize];
                let prev = points[poly[(j + n - 1) % n] as usize];
                let next = points[poly[(j + 1) % n] as usize];
                if poly[j] == p || orient(prev, q, next) > 0.0 {
                    continue;
                }
                if orient(t0, t1, q) >= 0.0 && orient(t1, t2, q) >= 0.0 && orient(t2, t0, q) >= 0.0 {
                    let d = q - m;
                    let angle = d.y.abs().atan2(d.x);
                    if angle < chosen.1 || (angle == chosen.1 && d.length_squared() < chosen.2) {
                        chosen = (j, angle, d.length_squared());
                    }
                }
            }
            chosen.0
        }
        None => (0..n)
            .min_by(|&a, &b| {
                points[poly[a] as usize].distance_squared(m).total_cmp(&points[poly[b] as usize].distance_squared(m))
            })
            .expect("polygon has vertices"),
    };
    let mut merged = Vec::with_capacity(n + hole.len() + 2);
    merged.extend_from_slice(&poly[..=pick]);
    merged.extend((0..hole.len()).map(|k| hole[(mi + k) % hole.len()]));
    merged.push(hole[mi]);
    merged.push(poly[pick]);
    merged.extend_from_slice(&poly[pick + 1..]);
    merged
}

fn ear_clip(points: &[Vec2], mut poly: Vec<u32>, out: &mut Vec<[u32; 3]>) {
    let at = |i: u32| points[i as usize];
    while poly.len() > 3 {
        let n = poly.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (poly[(k + n - 1) % n], poly[k], poly[(k + 1) % n]);
            let (a, b, c) = (at(ia), at(ib), at(ic));
            if orient(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = poly.iter().any(|&j| {
                let q = at(j);
                if j == ia || j == ib || j == ic || q == a || q == b || q == c {
                    return false;
                }
                orient(a, b, q) >= 0.0 && orient(b, c, q) >= 0.0 && orient(c, a, q) >= 0.0
            });
            if !blocked {
                out.push([ia, ib, ic]);
                poly.remove(k);
                clipped = true;
                break;
            }
        }
        if clipped {
            continue;
        }
        // degenerate remainder: drop a collinear vertex, else force the most convex one
        let scored = (0..n).map(|k| (k, orient(at(poly[(k + n - 1) % n]), at(poly[k]), at(poly[(k + 1) % n]))));
        let collinear = scored.clone().find(|&(_, o)| o == 0.0);
        match collinear {
            Some((k, _)) => {
                poly.remove(k);
            }
            None => {
                let (k, _) = scored.max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
                out.push([poly[(k + n - 1) % n], poly[k], poly[(k + 1) % n]]);
                poly.remove(k);
            }
        }
    }
    if poly.len() == 3 && orient(at(poly[0]), at(poly[1]), at(poly[2])) > 0.0 {
        out.push([poly[0], poly[1], poly[2]]);
    }
}

/// Flat-roofed prism over a footprint. Ground vertices come first, roof
/// vertices follow at the same ring positions. Faces point outward.
pub fn extrude(rings: &[Vec<Vec2>], base: f64, height: f64) -> (Vec<f64>, Vec<u32>) {
    let n: u32 = rings.iter().map(|r| r.len() as u32).sum();
    let mut coords = Vec::with_capacity(6 * n as usize);
    for z in [base, base + height] {
        for p in rings.iter().flatten() {
            coords.extend_from_slice(&[p.x, p.y, z]);
        }
    }
    let mut indices = Vec::new();
    let caps = triangulate(rings);
    for t in &caps {
        indices.extend_from_slice(&[t[0] + n, t[1] + n, t[2] + n]);
    }
    for t in &caps {
        indices.extend_from_slice(&[t[0], t[2], t[1]]);
    }
    // each wall faces away from the solid side of its ring edge: left of a
    // counter-clockwise exterior, right of a counter-clockwise hole
    let depth = nesting_depth(rings);
    let mut start = 0u32;
    for (r, d) in rings.iter().zip(depth) {
        let len = r.len() as u32;
        let left_is_solid = (ring_signed_area(r) > 0.0) == (d % 2 == 0);
        for k in 0..len {
            let (a, b) = (start + k, start + (k + 1) % len);
            let (a, b) = if left_is_solid { (a, b) } else { (b, a) };
            indices.extend_from_slice(&[a, b, b + n, a, b + n, a + n]);
        }
        start += len;
    }
    (coords, indices)
}
