use proptest::prelude::*;
use serde_json::{json, Value};
use urbankit::grammar::{canonicalize, serialize_spec};
use urbankit::{
    parse_spec, validate_spec, Layer, LocalFrame, PhysicalKind, PhysicalLayer, PhysicalObject, Scalar, Severity, ThematicLayer,
    ThematicPoint, WorkspaceCatalog,
};

const RELATIONS: [&str; 5] = ["nearest", "contains", "within", "intersects", "direct"];
const AGGS: [&str; 5] = ["min", "max", "sum", "mean", "count"];

/// A random document shaped like a real specification. Layer names need not
/// exist: parsing and canonical form never touch the workspace.
fn document() -> impl Strategy<Value = Value> {
    let scheme = (0usize..5, prop::option::of(0usize..5), prop::option::of(any::<bool>()), 0usize..4, 0usize..4);
    let knot = (prop::collection::vec(scheme, 1..3), prop::option::of((-5.0f64..5.0, 0.1f64..10.0)));
    (prop::collection::vec(knot, 1..6), -1e3f64..1e3, prop::option::of("[a-z]{1,8}")).prop_map(|(knots, z, plot)| {
        let knots: Vec<Value> = knots
            .into_iter()
            .enumerate()
            .map(|(i, (schemes, domain))| {
                let schemes: Vec<Value> = schemes
                    .into_iter()
                    .enumerate()
                    .map(|(j, (rel, agg, level, a, b))| {
                        let mut s = json!({"out": {"layer": format!("phys{b}")}, "relation": RELATIONS[rel]});
                        if j == 0 {
                            s["in"] = json!({"layer": format!("them{a}")});
                        }
                        if let Some(agg) = agg {
                            s["operation"] = AGGS[agg].into();
                        }
                        if let Some(level) = level {
                            s["out_level"] = if level { "objects" } else { "coordinates" }.into();
                        }
                        s
                    })
                    .collect();
                let mut k = json!({"name": format!("k{i}"), "schemes": schemes});
                if let Some((lo, w)) = domain {
                    k["color_scale"] = json!({"scheme": "sequential", "domain": [lo, lo + w]});
                }
                k
            })
            .collect();
        let mut view = json!({"map": {"camera_id": "cam", "knots": [{"knot_id": "k0"}]}});
        if let Some(field) = plot {
            view["plots"] = json!([{"chart_spec": {"mark": "bar", "encoding": {"x": {"field": field}}}, "knots": [{"knot_id": "k0"}]}]);
        }
        json!({
            "grammar_version": "1.0",
            "cameras": [{"camera_id": "cam", "position": [1.5, -2.25, z], "direction": [0, 0.6, -0.8]}],
            "views": [view],
            "knots": knots,
        })
    })
}

proptest! {
    #[test]
    fn canonical_form_is_a_fixed_point(doc in document()) {
        let spec = parse_spec(&doc.to_string()).unwrap();
        let text = serialize_spec(&canonicalize(&spec));
        let again = parse_spec(&text).unwrap();
        prop_assert_eq!(canonicalize(&again), canonicalize(&spec));
        prop_assert_eq!(serialize_spec(&canonicalize(&again)), text);
    }

    #[test]
    fn key_order_and_whitespace_do_not_matter(doc in document()) {
        let compact = parse_spec(&doc.to_string()).unwrap();
        let pretty = parse_spec(&serde_json::to_string_pretty(&doc).unwrap()).unwrap();
        prop_assert_eq!(serialize_spec(&canonicalize(&compact)), serialize_spec(&canonicalize(&pretty)));
    }

    #[test]
    fn garbage_never_panics(text in "\\PC{0,200}") {
        let _ = parse_spec(&text);
    }
}

fn workspace() -> (tempfile::TempDir, WorkspaceCatalog) {
    let dir = tempfile::tempdir().unwrap();
    let mut catalog = WorkspaceCatalog::open(dir.path()).unwrap();
    let square = PhysicalObject {
        object_id: 0,
        coordinates: vec![0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 10.0, 10.0, 0.0, 0.0, 10.0, 0.0],
        rings: vec![4],
        ..Default::default()
    };
    let frame = LocalFrame::new(40.7, -74.0);
    catalog.save(&Layer::Physical(PhysicalLayer::new("p", PhysicalKind::Polygons2d, frame, vec![square]))).unwrap();
    let point = ThematicPoint { lat: 40.7, lon: -74.0, height: 0.0, value: Scalar::number(1.0) };
    catalog.save(&Layer::Thematic(ThematicLayer::new("t", vec![point]))).unwrap();
    (dir, catalog)
}

fn errors(catalog: &WorkspaceCatalog, doc: &Value) -> Vec<(String, String)> {
    let spec = match parse_spec(&doc.to_string()) {
        Ok(s) => s,
        Err(e) => return vec![(e.path().to_owned(), e.code().to_owned())],
    };
    validate_spec(&spec, catalog)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| (d.path, d.code))
        .collect()
}

fn base() -> Value {
    json!({
        "grammar_version": "1.0",
        "cameras": [{"camera_id": "c", "position": [0, 0, 10], "direction": [0, 0, -1]}],
        "views": [{"map": {"camera_id": "c", "knots": [{"knot_id": "a"}]}}],
        "knots": [
            {"name": "a", "schemes": [{"in": {"layer": "t"}, "out": {"layer": "p"}, "relation": "contains", "operation": "sum"}]},
            {"name": "b", "schemes": [{"in": {"layer": "t"}, "out": {"layer": "p"}, "relation": "nearest"}]}
        ]
    })
}

#[test]
fn errors_point_at_the_offending_member() {
    let (_dir, ws) = workspace();
    let errors = |doc: &Value| errors(&ws, doc);
    assert!(errors(&base()).is_empty(), "{:?}", errors(&base()));

    let mut doc = base();
    doc["views"][0]["map"]["camera_id"] = "nope".into();
    assert_eq!(errors(&doc), vec![("/views/0/map/camera_id".to_owned(), "UnresolvedReference".to_owned())]);

    let mut doc = base();
    doc["knots"][1]["name"] = "a".into();
    assert!(errors(&doc).iter().any(|(p, c)| p == "/knots/1/name" && c == "DuplicateName"), "{:?}", errors(&doc));

    let mut doc = base();
    doc["knots"][0]["schemes"][0]["in"] = json!({"knot": "b"});
    assert!(errors(&doc).iter().any(|(p, c)| p == "/knots/0/schemes/0/in" && c == "ForwardReference"), "{:?}", errors(&doc));

    let mut doc = base();
    doc["knots"][0]["schemes"][0]["operation"] = "median".into();
    assert_eq!(errors(&doc)[0].0, "/knots/0/schemes/0/operation");

    let mut doc = base();
    doc["knots"][0]["schemes"][0]["out"] = json!({"layer": "t"});
    assert!(errors(&doc).iter().any(|(p, _)| p.starts_with("/knots/0/schemes/0/out")), "{:?}", errors(&doc));

    let mut doc = base();
    doc["knots"][0]["schemes"][0]["in"] = json!({"layer": "missing"});
    assert!(errors(&doc).iter().any(|(p, c)| p.starts_with("/knots/0/schemes/0/in") && c == "UnresolvedReference"));

    let mut doc = base();
    doc["grammar_version"] = "2.0".into();
    assert_eq!(errors(&doc)[0].0, "/grammar_version");
}
