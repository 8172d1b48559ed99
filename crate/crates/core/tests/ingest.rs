mod oracle;

use std::collections::HashMap;

use oracle::P2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbankit::ingest::{
    extrude, ingest_osm, make_grid, sample_surfaces, subdivide_triangle, triangulate, IngestConfig, OsmExtract, Region,
};
use urbankit::layer::write_layer_bytes;
use urbankit::{GeoBox, Layer, LocalFrame, PhysicalKind, PhysicalLayer, PhysicalObject, Vec2, Vec3};

fn shoelace(r: &[P2]) -> f64 {
    let mut a = 0.0;
    for i in 0..r.len() {
        let (p, q) = (r[i], r[(i + 1) % r.len()]);
        a += p.0 * q.1 - q.0 * p.1;
    }
    a / 2.0
}

fn to_vec2(r: &[P2]) -> Vec<Vec2> {
    r.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
}

/// A star polygon, optionally with a star hole strictly inside it.
fn polygon(seed: u64, hole: bool) -> Vec<Vec<P2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..24);
    let outer = oracle::star_ring(&mut rng, (0.0, 0.0), 20.0, 60.0, n);
    let mut rings = vec![outer];
    if hole {
        let n = rng.gen_range(3..10);
        let mut h = oracle::star_ring(&mut rng, (0.0, 0.0), 3.0, 15.0, n);
        if rng.gen_bool(0.5) {
            h.reverse();
        }
        if h.len() >= 3 && oracle::ring_contains_ring(&rings[0], &h) {
            rings.push(h);
        }
    }
    rings
}

fn tri_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / 2.0
}

proptest! {
    #[test]
    fn triangulation_preserves_area(seed in any::<u64>(), hole in any::<bool>()) {
        let rings = polygon(seed, hole);
        prop_assume!(rings[0].len() >= 3);
        let want: f64 = shoelace(&rings[0]).abs() - rings.get(1).map_or(0.0, |h| shoelace(h).abs());
        let pts: Vec<Vec2> = rings.iter().flat_map(|r| to_vec2(r)).collect();
        let tris = triangulate(&rings.iter().map(|r| to_vec2(r)).collect::<Vec<_>>());
        let n_vertices: usize = rings.iter().map(Vec::len).sum();
        prop_assert_eq!(tris.len(), n_vertices - 2 + 2 * (rings.len() - 1));
        let mut got = 0.0;
        for t in &tris {
            let a = tri_area(pts[t[0] as usize], pts[t[1] as usize], pts[t[2] as usize]);
            prop_assert!(a >= -1e-9, "clockwise triangle {:?}", t);
            got += a;
        }
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "area {} vs {}", got, want);
    }

    #[test]
    fn extrusion_is_closed_and_outward(seed in any::<u64>(), hole in any::<bool>(), base in -5.0f64..5.0, h in 1.0f64..80.0) {
        let rings = polygon(seed, hole);
        prop_assume!(rings[0].len() >= 3);
        let (coords, indices) = extrude(&rings.iter().map(|r| to_vec2(r)).collect::<Vec<_>>(), base, h);
        // every directed edge is matched by its reverse exactly once
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for t in indices.chunks(3) {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &n) in &directed {
            prop_assert_eq!(n, 1, "edge {}-{} used {} times", a, b, n);
            prop_assert_eq!(directed.get(&(b, a)), Some(&1), "edge {}-{} is a border", a, b);
        }
        // divergence theorem: outward faces give a positive volume
        let v = |i: u32| Vec3::from_slice(&coords[3 * i as usize..3 * i as usize + 3]);
        let volume: f64 = indices.chunks(3).map(|t| v(t[0]).dot(v(t[1]).cross(v(t[2]))) / 6.0).sum();
        let area = shoelace(&rings[0]).abs() - rings.get(1).map_or(0.0, |r| shoelace(r).abs());
        prop_assert!((volume - area * h).abs() <= 1e-6 * area * h, "volume {} vs {}", volume, area * h);
    }

    #[test]
    fn subdivision_tiles_the_triangle(
        a in prop::array::uniform3(-50.0f64..50.0),
        b in prop::array::uniform3(-50.0f64..50.0),
        c in prop::array::uniform3(-50.0f64..50.0),
        max_edge in 0.5f64..40.0,
    ) {
        let t = [Vec3::new(a[0], a[1], a[2]), Vec3::new(b[0], b[1], b[2]), Vec3::new(c[0], c[1], c[2])];
        let area = |t: &[Vec3; 3]| (t[1] - t[0]).cross(t[2] - t[0]).length() / 2.0;
        prop_assume!(area(&t) > 1e-3);
        let pieces = subdivide_triangle(&t, max_edge);
        let n = (pieces.len() as f64).sqrt().round() as usize;
        prop_assert_eq!(n * n, pieces.len());
        let total: f64 = pieces.iter().map(area).sum();
        prop_assert!((total - area(&t)).abs() <= 1e-9 * area(&t).max(1.0));
        for p in &pieces {
            for k in 0..3 {
                prop_assert!((p[k] - p[(k + 1) % 3]).length() <= max_edge + 1e-9);
            }
        }
    }
}

#[test]
fn box_samples_face_outward() {
    let (coords, indices) = extrude(&[to_vec2(&[(0.0, 0.0), (10.0, 0.0), (10.0, 6.0), (0.0, 6.0)])], 0.0, 12.0);
    let frame = LocalFrame::new(40.0, -74.0);
    let object = PhysicalObject { object_id: 0, coordinates: coords, indices, ..Default::default() };
    let layer = PhysicalLayer::new("b", PhysicalKind::Mesh3d, frame, vec![object]);
    let samples = sample_surfaces(&layer, 2.0);
    assert!(!samples.is_empty());
    let center = Vec3::new(5.0, 3.0, 6.0);
    for s in &samples {
        assert!((s.normal.length() - 1.0).abs() < 1e-12);
        assert!(s.normal.dot(s.position - center) > 0.0, "{s:?}");
        assert_eq!(s.object_id, 0);
    }
    // welded: no two samples share a position
    for (i, a) in samples.iter().enumerate() {
        assert!(samples[i + 1..].iter().all(|b| a.position.distance_squared(b.position) > 1e-12));
    }
}

#[test]
fn grid_covers_the_box() {
    let frame = LocalFrame::new(42.0, -71.0);
    let b = GeoBox::new(41.999, -71.001, 42.001, -70.999);
    let grid = make_grid("g", &b, 25.0, &frame, 1_000_000).unwrap();
    let extent = b.project(&frame);
    let cols = (extent.width() / 25.0 - 1e-6).ceil() as usize;
    let rows = (extent.height() / 25.0 - 1e-6).ceil() as usize;
    assert_eq!(grid.objects.len(), rows * cols);
    assert!(make_grid("g", &b, 0.1, &frame, 1_000_000).is_err());
}

fn osm_text(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    let mut ways = Vec::new();
    let mut id = 0;
    for b in 0..40 {
        let (lat, lon) = (42.0 + rng.gen_range(-0.004..0.004), -71.0 + rng.gen_range(-0.004..0.004));
        let first = id;
        for (dlat, dlon) in [(0.0, 0.0), (0.0, 0.0002), (0.00015, 0.0002), (0.00015, 0.0)] {
            nodes.push(format!(r#"{{"type":"node","id":{id},"lat":{},"lon":{}}}"#, lat + dlat, lon + dlon));
            id += 1;
        }
        let tags = match b % 4 {
            0 => r#"{"building":"yes","height":"21"}"#.to_owned(),
            1 => format!(r#"{{"building":"house","building:levels":"{}"}}"#, rng.gen_range(1..9)),
            2 => r#"{"leisure":"park"}"#.to_owned(),
            _ => r#"{"natural":"water"}"#.to_owned(),
        };
        ways.push(format!(
            r#"{{"type":"way","id":{},"nodes":[{},{},{},{},{}],"tags":{tags}}}"#,
            1000 + b,
            first,
            first + 1,
            first + 2,
            first + 3,
            first
        ));
    }
    for r in 0..10 {
        let a = id;
        for _ in 0..3 {
            let (lat, lon) = (42.0 + rng.gen_range(-0.005..0.005), -71.0 + rng.gen_range(-0.005..0.005));
            nodes.push(format!(r#"{{"type":"node","id":{id},"lat":{lat},"lon":{lon}}}"#));
            id += 1;
        }
        ways.push(format!(r#"{{"type":"way","id":{},"nodes":[{a},{},{}],"tags":{{"highway":"primary"}}}}"#, 2000 + r, a + 1, a + 2));
    }
    nodes.shuffle(&mut rng);
    let mut all = nodes;
    all.extend(ways);
    format!(r#"{{"elements":[{}]}}"#, all.join(","))
}

#[test]
fn osm_ingest_is_deterministic_and_closed() {
    let frame = LocalFrame::new(42.0, -71.0);
    let config = IngestConfig::new(Region::BoundingBox(GeoBox::new(41.997, -71.003, 42.003, -70.997)));
    let bytes = |seed: u64| -> Vec<Vec<u8>> {
        let extract = OsmExtract::from_json(&osm_text(seed)).unwrap();
        let out = ingest_osm(&extract, &config, &frame).unwrap();
        out.layers.iter().map(|l| write_layer_bytes(&Layer::Physical(l.clone())).unwrap().0).collect()
    };
    // node order in the document differs between these calls only through the hash map
    let first = bytes(1);
    assert_eq!(first, bytes(1));

    let extract = OsmExtract::from_json(&osm_text(1)).unwrap();
    let out = ingest_osm(&extract, &config, &frame).unwrap();
    let names: Vec<&str> = out.layers.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(names, ["buildings", "parks", "water", "roads"]);
    let buildings = &out.layers[0];
    assert_eq!(buildings.kind, PhysicalKind::Mesh3d);
    for o in &buildings.objects {
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for t in o.indices.chunks(3) {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        assert!(directed.keys().all(|&(a, b)| directed.get(&(b, a)) == Some(&1)), "object {} is open", o.object_id);
        let top = o.points().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
        assert!(top == 21.0 || (top / 3.5).fract().abs() < 1e-9, "height {top}");
    }
    // clipping keeps every vertex inside the region
    let extent = GeoBox::new(41.997, -71.003, 42.003, -70.997).project(&frame).expanded(1e-6);
    for layer in &out.layers {
        assert!(layer.objects.iter().flat_map(|o| o.points()).all(|p| extent.contains_point(p.xy())), "{}", layer.name);
    }
}
