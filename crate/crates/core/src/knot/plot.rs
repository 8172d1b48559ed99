//! Tabular plot data and footprint slices.

use serde::Serialize;

use super::aggregate::pairwise_sum;
use super::{EvaluatedKnot, KnotError};
use crate::geometry::Vec3;
use crate::grammar::{FootprintArgs, Level};
use crate::layer::{PhysicalKind, PhysicalLayer};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub element_id: u32,
    pub object_id: u32,
    pub value: Scalar,
    /// Sector bounds in degrees counter-clockwise from east.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotTable {
    pub knot: String,
    pub level: Level,
    pub rows: Vec<PlotRow>,
}

/// One row per element at `level`; nulls are kept.
pub fn plot_table(knot: &EvaluatedKnot, layer: &PhysicalLayer, level: Level) -> Result<PlotTable, KnotError> {
    let values =
        knot.values_at(level).ok_or(KnotError::LevelUnavailable { knot: knot.name.clone(), level })?;
    let rows = match level {
        Level::Objects => values
            .iter()
            .enumerate()
            .map(|(i, v)| PlotRow {
                element_id: i as u32,
                object_id: i as u32,
                value: v.clone(),
                angle_start: None,
                angle_end: None,
            })
            .collect(),
        Level::Coordinates => layer
            .coordinate_owners()
            .into_iter()
            .zip(values)
            .enumerate()
            .map(|(i, (o, v))| PlotRow {
                element_id: i as u32,
                object_id: o,
                value: v.clone(),
                angle_start: None,
                angle_end: None,
            })
            .collect(),
    };
    Ok(PlotTable { knot: knot.name.clone(), level, rows })
}

/// Sector of an azimuth (degrees counter-clockwise from east). Sector `k`
/// is centred on `k * 360 / n` and covers half a sector width either side.
pub fn sector_of(angle_deg: f64, n: usize) -> usize {
    let width = 360.0 / n as f64;
    let shifted = (angle_deg + width / 2.0).rem_euclid(360.0);
    ((shifted / width).floor() as usize).min(n - 1)
}

/// Sector means of the object's coordinate values within a horizontal band.
pub fn footprint_slice(
    knot: &EvaluatedKnot,
    layer: &PhysicalLayer,
    object_id: u32,
    args: &FootprintArgs,
) -> Result<PlotTable, KnotError> {
    if layer.kind != PhysicalKind::Mesh3d {
        return Err(KnotError::NotMesh(layer.name.clone()));
    }
    let obj = layer.objects.get(object_id as usize).ok_or(KnotError::ObjectNotFound(object_id))?;
    let start = layer.object_offsets()[object_id as usize];
    let half = args.band_width / 2.0;
    let band: Vec<(Vec3, &Scalar)> = obj
        .points()
        .enumerate()
        .filter(|(_, p)| (p.z - args.slice_height).abs() <= half)
        .map(|(i, p)| (p, &knot.coord_values[start + i]))
        .collect();
    if band.is_empty() {
        return Err(KnotError::NoSamplesInBand { object: object_id });
    }
    let n = args.n_segments;
    let cx = pairwise_sum(&band.iter().map(|b| b.0.x).collect::<Vec<_>>()) / band.len() as f64;
    let cy = pairwise_sum(&band.iter().map(|b| b.0.y).collect::<Vec<_>>()) / band.len() as f64;
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (p, v) in &band {
        if let Some(x) = v.as_f64() {
            let angle = (p.y - cy).atan2(p.x - cx).to_degrees();
            bins[sector_of(angle, n)].push(x);
        }
    }
    let width = 360.0 / n as f64;
    let rows = bins
        .iter()
        .enumerate()
        .map(|(k, b)| PlotRow {
            element_id: k as u32,
            object_id,
            value: if b.is_empty() { Scalar::Null } else { Scalar::number(pairwise_sum(b) / b.len() as f64) },
            angle_start: Some(k as f64 * width - width / 2.0),
            angle_end: Some(k as f64 * width + width / 2.0),
        })
        .collect();
    Ok(PlotTable { knot: knot.name.clone(), level: Level::Coordinates, rows })
}
