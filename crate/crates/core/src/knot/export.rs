//! CSV and JSON serializations of evaluated knots.

use super::{EvaluatedKnot, PlotTable};
use crate::layer::PhysicalLayer;
use crate::scalar::Scalar;

/// `element_id,object_id,value` per coordinate (or per object at object
/// level). Null values print as an empty field.
pub fn knot_csv(knot: &EvaluatedKnot, layer: &PhysicalLayer) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["element_id", "object_id", "value"]).expect("in-memory write");
    let owners: Vec<u32> = match knot.object_values {
        Some(_) => (0..layer.objects.len() as u32).collect(),
        None => layer.coordinate_owners(),
    };
    for (i, (o, v)) in owners.iter().zip(knot.values()).enumerate() {
        let value = match v {
            Scalar::Null => String::new(),
            other => other.to_string(),
        };
        w.write_record([i.to_string(), o.to_string(), value]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Canonical JSON for a knot; the HTTP data endpoint serves the same bytes.
pub fn knot_json(knot: &EvaluatedKnot) -> Vec<u8> {
    let mut out = serde_json::to_vec(knot).expect("knot serializes");
    out.push(b'\n');
    out
}

pub fn plot_table_json(table: &PlotTable) -> Vec<u8> {
    let mut out = serde_json::to_vec(table).expect("plot table serializes");
    out.push(b'\n');
    out
}
