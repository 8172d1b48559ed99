//! A synthetic workspace that every golden specification resolves against.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbankit::ingest::sample_surfaces;
use urbankit::layer::Layer;
use urbankit::scalar::Scalar;
use urbankit::shadow::{accumulate_shadow, Bvh, SunPath};
use urbankit::{LocalFrame, PhysicalKind, PhysicalLayer, PhysicalObject, ThematicLayer, ThematicPoint, Vec3, WorkspaceCatalog};

pub const ORIGIN: (f64, f64) = (42.36, -71.06);

pub const SIDEWALK_MATERIALS: [&str; 6] = ["brick", "conc", "granite", "brick", "asphalt", "conc"];
pub const SIDEWALK_SHADOW: [f64; 6] = [0.6, 0.7, 0.9, 0.3, 0.8, 0.5];
/// `(mat == brick || mat == conc) && shadow > 0.5 ? 0 : 1` by hand.
pub const EXPECTED_DANGER: [f64; 6] = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0];

pub const THEMATIC_EX3: [&str; 8] =
    ["noise", "crime", "restaurants", "park_locations", "subway", "sky_exposure", "school_quality", "taxi"];

pub fn frame() -> LocalFrame {
    LocalFrame::new(ORIGIN.0, ORIGIN.1)
}

pub fn spec_path(n: usize) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/specs/example{n}.json"))
}

pub fn spec_text(n: usize) -> String {
    std::fs::read_to_string(spec_path(n)).expect("golden spec")
}

/// A closed box mesh whose walls have a vertex row every `dz` meters.
pub fn tower(id: u32, x0: f64, y0: f64, w: f64, d: f64, h: f64, dz: f64) -> PhysicalObject {
    let corners = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + d), (x0, y0 + d)];
    let levels = (h / dz).round().max(1.0) as u32;
    let mut coordinates = Vec::new();
    for k in 0..=levels {
        let z = h * k as f64 / levels as f64;
        for (x, y) in corners {
            coordinates.extend_from_slice(&[x, y, z]);
        }
    }
    let v = |k: u32, c: u32| 4 * k + c % 4;
    let mut indices = Vec::new();
    for k in 0..levels {
        for c in 0..4 {
            indices.extend_from_slice(&[v(k, c), v(k, c + 1), v(k + 1, c + 1)]);
            indices.extend_from_slice(&[v(k, c), v(k + 1, c + 1), v(k + 1, c)]);
        }
    }
    let top = levels;
    indices.extend_from_slice(&[v(top, 0), v(top, 1), v(top, 2), v(top, 0), v(top, 2), v(top, 3)]);
    indices.extend_from_slice(&[v(0, 0), v(0, 2), v(0, 1), v(0, 0), v(0, 3), v(0, 2)]);
    PhysicalObject { object_id: id, coordinates, indices, ..Default::default() }
}

pub fn buildings() -> PhysicalLayer {
    let objects = vec![
        tower(0, 0.0, 0.0, 20.0, 20.0, 30.0, 1.5),
        tower(1, 40.0, 0.0, 20.0, 30.0, 45.0, 1.5),
        tower(2, 0.0, 50.0, 25.0, 20.0, 24.0, 1.5),
    ];
    PhysicalLayer::new("buildings", PhysicalKind::Mesh3d, frame(), objects)
}

pub fn new_tower() -> PhysicalLayer {
    PhysicalLayer::new("tower", PhysicalKind::Mesh3d, frame(), vec![tower(0, 25.0, -40.0, 15.0, 15.0, 90.0, 3.0)])
}

fn square(id: u32, x0: f64, y0: f64, s: f64) -> PhysicalObject {
    PhysicalObject {
        object_id: id,
        coordinates: vec![x0, y0, 0.0, x0 + s, y0, 0.0, x0 + s, y0 + s, 0.0, x0, y0 + s, 0.0],
        rings: vec![4],
        ..Default::default()
    }
}

/// A 3 x 3 block of 300 m zones.
pub fn zip() -> PhysicalLayer {
    let objects = (0..9).map(|i| square(i, -450.0 + 300.0 * (i % 3) as f64, -450.0 + 300.0 * (i / 3) as f64, 300.0));
    PhysicalLayer::new("zip", PhysicalKind::Polygons2d, frame(), objects.collect())
}

/// Six 40 m segments, 100 m apart along x.
pub fn sidewalks() -> PhysicalLayer {
    let objects = (0..6u32)
        .map(|i| {
            let x = 200.0 + 100.0 * i as f64;
            PhysicalObject { object_id: i, coordinates: vec![x, 0.0, 0.0, x + 40.0, 0.0, 0.0], rings: vec![2], ..Default::default() }
        })
        .collect();
    PhysicalLayer::new("sidewalks", PhysicalKind::Lines, frame(), objects)
}

pub fn point_at(f: &LocalFrame, p: Vec3, value: Scalar) -> ThematicPoint {
    let (lat, lon, height) = f.unproject(p);
    ThematicPoint { lat, lon, height, value }
}

fn sidewalk_points(name: &str, value: impl Fn(usize) -> Scalar) -> ThematicLayer {
    let f = frame();
    let points = (0..6)
        .map(|i| point_at(&f, Vec3::new(220.0 + 100.0 * i as f64, 3.0, 0.0), value(i)))
        .collect();
    ThematicLayer::new(name, points)
}

/// Seeded points over the zip block, some outside it.
pub fn random_thematic(name: &str, seed: u64, count: usize) -> ThematicLayer {
    let f = frame();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            let p = Vec3::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0), 0.0);
            point_at(&f, p, Scalar::number(rng.gen_range(0..100) as f64))
        })
        .collect();
    ThematicLayer::new(name, points)
}

pub const MONTHS: [&str; 12] = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"];

/// Shadow accumulated on the building surfaces over six daytime hours of
/// the 21st of `month`.
pub fn shadow_layer(name: &str, month: u32, occluders: &[&PhysicalLayer]) -> ThematicLayer {
    let b = buildings();
    let samples = sample_surfaces(&b, 4.0);
    let mut scene_layers = vec![&b];
    scene_layers.extend_from_slice(occluders);
    let scene = Bvh::from_layers(&scene_layers).expect("scene");
    let from = Utc.with_ymd_and_hms(2021, month, 21, 14, 0, 0).unwrap();
    let path = SunPath::over(ORIGIN.0, ORIGIN.1, from, from + Duration::hours(6), Duration::hours(1)).unwrap();
    accumulate_shadow(&samples, &scene, &path).unwrap().to_layer(name, &samples, &frame())
}

/// Writes every layer the golden specifications reference.
pub fn build_workspace(dir: &Path) -> WorkspaceCatalog {
    let mut catalog = WorkspaceCatalog::open(dir).expect("workspace");
    let tower = new_tower();
    for layer in [buildings(), tower.clone(), zip(), sidewalks()] {
        catalog.save(&Layer::Physical(layer)).expect("save physical");
    }
    let mut thematic = Vec::new();
    for (m, name) in MONTHS.iter().enumerate() {
        thematic.push(shadow_layer(&format!("shadow_{name}"), m as u32 + 1, &[]));
    }
    for (season, month) in [("summer", 6), ("winter", 12)] {
        thematic.push(shadow_layer(&format!("shadow_{season}_s0"), month, &[]));
        thematic.push(shadow_layer(&format!("shadow_{season}_s1"), month, &[&tower]));
    }
    for (i, name) in THEMATIC_EX3.iter().enumerate() {
        thematic.push(random_thematic(name, 100 + i as u64, 400));
    }
    thematic.push(sidewalk_points("shadow_sidewalks", |i| Scalar::number(SIDEWALK_SHADOW[i])));
    thematic.push(sidewalk_points("materials", |i| Scalar::text(SIDEWALK_MATERIALS[i])));
    for layer in thematic {
        catalog.save(&Layer::Thematic(layer)).expect("save thematic");
    }
    catalog
}

pub fn workspace() -> (tempfile::TempDir, WorkspaceCatalog) {
    let dir = tempfile::tempdir().expect("tempdir");
    let catalog = build_workspace(dir.path());
    (dir, catalog)
}
