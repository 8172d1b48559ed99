//! Seeded workloads shared by the benchmarks in `benches/`.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbankit::{
    parse_spec, Layer, LocalFrame, PhysicalKind, PhysicalLayer, PhysicalObject, Scalar, Specification, ThematicLayer,
    ThematicPoint, Vec3, WorkspaceCatalog,
};

pub fn frame() -> LocalFrame {
    LocalFrame::new(40.7, -74.0)
}

/// `n` star-shaped polygons scattered over a square of side `extent` meters.
pub fn polygons(name: &str, n: usize, extent: f64, seed: u64) -> PhysicalLayer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = (0..n)
        .map(|i| {
            let (cx, cy) = (rng.gen_range(0.0..extent), rng.gen_range(0.0..extent));
            let k = rng.gen_range(5..12);
            let mut coordinates = Vec::with_capacity(3 * k);
            for j in 0..k {
                let a = TAU * (j as f64 + rng.gen_range(0.0..0.8)) / k as f64;
                let r = rng.gen_range(10.0..60.0);
                coordinates.extend_from_slice(&[cx + r * a.cos(), cy + r * a.sin(), 0.0]);
            }
            PhysicalObject { object_id: i as u32, coordinates, rings: vec![k as u32], ..Default::default() }
        })
        .collect();
    PhysicalLayer::new(name, PhysicalKind::Polygons2d, frame(), objects)
}

/// `n` points with integer values over the same square.
pub fn points(name: &str, n: usize, extent: f64, seed: u64) -> ThematicLayer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = frame();
    let points = (0..n)
        .map(|_| {
            let (lat, lon, height) = f.unproject(Vec3::new(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent), 0.0));
            ThematicPoint { lat, lon, height, value: Scalar::number(rng.gen_range(0..100) as f64) }
        })
        .collect();
    ThematicLayer::new(name, points)
}

/// Writes `regions` and `samples` layers into `dir`.
pub fn join_workspace(dir: &Path, n_polygons: usize, n_points: usize) -> WorkspaceCatalog {
    let extent = 10.0 * (n_polygons as f64).sqrt() * 30.0;
    let mut catalog = WorkspaceCatalog::open(dir).expect("workspace");
    catalog.save(&Layer::Physical(polygons("regions", n_polygons, extent, 1))).expect("save");
    catalog.save(&Layer::Thematic(points("samples", n_points, extent, 2))).expect("save");
    catalog
}

/// One knot joining `samples` into `regions`.
pub fn join_spec(relation: &str, operation: &str) -> Specification {
    let doc = serde_json::json!({
        "grammar_version": "1.0",
        "cameras": [{"camera_id": "c", "position": [0, 0, 100], "direction": [0, 0, -1]}],
        "views": [{"map": {"camera_id": "c", "knots": [{"knot_id": "k"}]}}],
        "knots": [{"name": "k", "schemes": [
            {"in": {"layer": "samples"}, "out": {"layer": "regions"}, "relation": relation, "operation": operation}
        ]}]
    });
    parse_spec(&doc.to_string()).expect("bench spec")
}

/// Small random triangles in a cube of side `2 * extent`.
pub fn triangles(n: usize, extent: f64, seed: u64) -> Vec<[Vec3; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c = Vec3::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent), rng.gen_range(-extent..extent));
            let mut v = || c + Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            [v(), v(), v()]
        })
        .collect()
}

/// Rays from inside the cube in uniformly random directions.
pub fn rays(n: usize, extent: f64, seed: u64) -> Vec<(Vec3, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let o = Vec3::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent), rng.gen_range(-extent..extent));
        let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if let Some(d) = d.normalized() {
            out.push((o, d));
        }
    }
    out
}

/// A grid of `side * side` extruded blocks of varying height.
pub fn city(side: usize, seed: u64) -> PhysicalLayer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::new();
    for i in 0..side * side {
        let (x, y) = ((i % side) as f64 * 40.0, (i / side) as f64 * 40.0);
        let ring = vec![
            urbankit::Vec2::new(x, y),
            urbankit::Vec2::new(x + 25.0, y),
            urbankit::Vec2::new(x + 25.0, y + 25.0),
            urbankit::Vec2::new(x, y + 25.0),
        ];
        let (coordinates, indices) = urbankit::ingest::extrude(&[ring], 0.0, rng.gen_range(10.0..120.0));
        objects.push(PhysicalObject { object_id: i as u32, coordinates, indices, ..Default::default() });
    }
    PhysicalLayer::new("city", PhysicalKind::Mesh3d, frame(), objects)
}

pub fn values(n: usize, seed: u64) -> Vec<Scalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| if rng.gen_bool(0.05) { Scalar::Null } else { Scalar::number(rng.gen_range(-1e3..1e3)) }).collect()
}
