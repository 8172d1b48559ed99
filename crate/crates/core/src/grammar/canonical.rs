//! Canonical form and serialization.

use super::types::*;

/// Materializes defaults and normalizes camera directions. Idempotent.
pub fn canonicalize(spec: &Specification) -> Specification {
    let mut out = spec.clone();
    for c in &mut out.cameras {
        let norm = c.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() && (norm - 1.0).abs() > 1e-12 {
            c.direction = c.direction.map(|v| v / norm);
        }
    }
    for view in &mut out.views {
        for b in &mut view.map.knots {
            b.interaction.get_or_insert(InteractionKind::None);
        }
        for plot in &mut view.plots {
            plot.interaction.get_or_insert(InteractionKind::None);
            for b in &mut plot.knots {
                b.arrangement.get_or_insert(Arrangement::Linked);
            }
        }
    }
    for knot in &mut out.knots {
        knot.color_scale.get_or_insert_with(ColorScaleDef::default);
        for s in &mut knot.schemes {
            s.relation.get_or_insert(SpatialRelation::Nearest);
            s.out_level.get_or_insert(Level::Objects);
        }
    }
    out
}

/// Pretty-printed JSON document.
pub fn serialize_spec(spec: &Specification) -> String {
    let mut text = serde_json::to_string_pretty(spec).expect("specification serializes");
    text.push('\n');
    text
}
