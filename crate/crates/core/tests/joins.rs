mod oracle;

use oracle::{Agg, P2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use urbankit::knot::Engine;
use urbankit::{
    parse_spec, Layer, LocalFrame, PhysicalKind, PhysicalLayer, PhysicalObject, Scalar, Specification, ThematicLayer,
    ThematicPoint, Vec3, WorkspaceCatalog,
};

fn frame() -> LocalFrame {
    LocalFrame::new(40.7, -74.0)
}

fn polygons(name: &str, rings: &[Vec<P2>]) -> Layer {
    let objects = rings
        .iter()
        .enumerate()
        .map(|(i, r)| PhysicalObject {
            object_id: i as u32,
            coordinates: r.iter().flat_map(|&(x, y)| [x, y, 0.0]).collect(),
            rings: vec![r.len() as u32],
            ..Default::default()
        })
        .collect();
    Layer::Physical(PhysicalLayer::new(name, PhysicalKind::Polygons2d, frame(), objects))
}

fn points(name: &str, pts: &[(P2, Option<i32>)]) -> Layer {
    let f = frame();
    let points = pts
        .iter()
        .map(|&((x, y), v)| {
            let (lat, lon, height) = f.unproject(Vec3::new(x, y, 0.0));
            ThematicPoint { lat, lon, height, value: v.map_or(Scalar::Null, |v| Scalar::number(v as f64)) }
        })
        .collect();
    Layer::Thematic(ThematicLayer::new(name, points))
}

fn spec(knots: Vec<serde_json::Value>) -> Specification {
    let first = knots[0]["name"].clone();
    let doc = json!({
        "grammar_version": "1.0",
        "cameras": [{"camera_id": "c", "position": [0, 0, 100], "direction": [0, 0, -1]}],
        "views": [{"map": {"camera_id": "c", "knots": [{"knot_id": first}]}}],
        "knots": knots,
    });
    parse_spec(&doc.to_string()).unwrap()
}

fn scheme(name: &str, relation: &str, agg: &str) -> serde_json::Value {
    json!({"name": name, "schemes": [{"in": {"layer": "samples"}, "out": {"layer": "regions"}, "relation": relation, "operation": agg}]})
}

struct Instance {
    _dir: tempfile::TempDir,
    catalog: WorkspaceCatalog,
    regions: Vec<Vec<P2>>,
    pts: Vec<P2>,
    vals: Vec<Option<f64>>,
}

fn instance(seed: u64, n_regions: usize, n_points: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = tempfile::tempdir().unwrap();
    let mut catalog = WorkspaceCatalog::open(dir.path()).unwrap();
    let regions: Vec<Vec<P2>> = (0..n_regions)
        .map(|_| {
            let c = (rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0));
            oracle::star_ring(&mut rng, c, 5.0, 80.0, 8)
        })
        .filter(|r| r.len() >= 3)
        .collect();
    let samples: Vec<(P2, Option<i32>)> = (0..n_points)
        .map(|_| {
            let p = (rng.gen_range(-20.0..520.0), rng.gen_range(-20.0..520.0));
            (p, (!rng.gen_bool(0.1)).then(|| rng.gen_range(-20..20)))
        })
        .collect();
    catalog.save(&polygons("regions", &regions)).unwrap();
    catalog.save(&points("samples", &samples)).unwrap();

    // compare against what the engine actually reads back
    let layer = catalog.load("regions").unwrap();
    let regions = layer.as_physical().unwrap().objects.iter().map(|o| o.points().map(|p| (p.x, p.y)).collect()).collect();
    let layer = catalog.load("samples").unwrap();
    let t = layer.as_thematic().unwrap();
    let pts = t.projected(&catalog.frame().unwrap()).iter().map(|p| (p.x, p.y)).collect();
    let vals = t.points.iter().map(|p| p.value.as_f64()).collect();
    Instance { _dir: dir, catalog, regions, pts, vals }
}

fn bitwise(a: &Scalar, b: Option<f64>) -> bool {
    match (a, b) {
        (Scalar::Null, None) => true,
        (Scalar::Number(x), Some(y)) => x.to_bits() == y.to_bits(),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn point_joins_match_brute_force(seed in any::<u64>(), n_regions in 1usize..30, n_points in 0usize..400) {
        let inst = instance(seed, n_regions, n_points);
        let mut knots = Vec::new();
        for agg in Agg::ALL {
            knots.push(scheme(&format!("contains_{}", agg.name()), "contains", agg.name()));
            knots.push(scheme(&format!("nearest_{}", agg.name()), "nearest", agg.name()));
        }
        let eval = Engine::new(&inst.catalog).with_cache(None).evaluate_spec(&spec(knots)).unwrap();

        let contains: Vec<Vec<usize>> = inst
            .regions
            .iter()
            .map(|r| (0..inst.pts.len()).filter(|&i| oracle::point_in_ring(inst.pts[i], r)).collect())
            .collect();
        let mut nearest = vec![Vec::new(); inst.regions.len()];
        for (i, &p) in inst.pts.iter().enumerate() {
            nearest[oracle::nearest_ring(p, &inst.regions)].push(i);
        }
        for (rel, groups) in [("contains", &contains), ("nearest", &nearest)] {
            for agg in Agg::ALL {
                let got = eval.knots[&format!("{rel}_{}", agg.name())].values();
                prop_assert_eq!(got.len(), inst.regions.len());
                for (r, m) in groups.iter().enumerate() {
                    let vs: Vec<Option<f64>> = m.iter().map(|&i| inst.vals[i]).collect();
                    let want = oracle::aggregate(agg, &vs);
                    prop_assert!(bitwise(&got[r], want), "{} {} region {}: {:?} vs {:?}", rel, agg.name(), r, got[r], want);
                }
            }
        }
        // nearest assigns every point exactly once
        let total: f64 = eval.knots["nearest_count"].values().iter().filter_map(Scalar::as_f64).sum();
        prop_assert_eq!(total as usize, inst.pts.len());
    }
}

#[test]
fn cached_joins_give_identical_results() {
    let inst = instance(11, 25, 500);
    let s = spec(vec![scheme("c", "contains", "sum"), scheme("n", "nearest", "mean")]);
    let cold = Engine::new(&inst.catalog).evaluate_spec(&s).unwrap();
    let entries = std::fs::read_dir(inst.catalog.cache_dir()).unwrap().count();
    assert_eq!(entries, 2, "one cache entry per geometric join");
    let warm = Engine::new(&inst.catalog).evaluate_spec(&s).unwrap();
    let uncached = Engine::new(&inst.catalog).with_cache(None).evaluate_spec(&s).unwrap();
    for name in ["c", "n"] {
        assert_eq!(cold.knots[name], warm.knots[name]);
        assert_eq!(cold.knots[name], uncached.knots[name]);
    }
}

#[test]
fn incremental_evaluation_matches_full() {
    let inst = instance(5, 20, 300);
    let before = spec(vec![
        scheme("c", "contains", "sum"),
        scheme("n", "nearest", "mean"),
        json!({"name": "d", "operation": {"expression": "c - n", "inputs": [{"knot": "c"}, {"knot": "n"}]}}),
    ]);
    let after = spec(vec![
        scheme("c", "contains", "max"),
        scheme("n", "nearest", "mean"),
        json!({"name": "d", "operation": {"expression": "c - n", "inputs": [{"knot": "c"}, {"knot": "n"}]}}),
    ]);
    let engine = Engine::new(&inst.catalog).with_cache(None);
    let first = engine.evaluate_spec(&before).unwrap();
    let step = engine.evaluate_incremental(&after, Some(&first)).unwrap();
    assert_eq!(step.evaluated, vec!["c".to_string(), "d".to_string()]);
    let full = engine.evaluate_spec(&after).unwrap();
    for name in ["c", "n", "d"] {
        assert_eq!(step.knots[name], full.knots[name], "{name}");
    }
    assert_eq!(step.hashes, full.hashes);
    assert_ne!(first.hashes["d"], full.hashes["d"], "a changed input changes dependents");
    assert_eq!(first.hashes["n"], full.hashes["n"]);
}
