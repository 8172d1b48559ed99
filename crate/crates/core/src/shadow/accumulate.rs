//! Shadow accumulation over a sun path.

use rayon::prelude::*;
use serde::Serialize;

use super::{Bvh, ShadowError, SunPath};
use crate::geometry::LocalFrame;
use crate::grammar::{ColorScaleDef, ColorScheme};
use crate::ingest::SurfaceSample;
use crate::layer::{ThematicLayer, ThematicPoint};
use crate::scalar::Scalar;

/// Offset along the sample normal before casting, in meters.
pub const RAY_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowResult {
    /// Shadowed share of above-horizon instants per sample; `None` when the
    /// sun never rises during the window.
    pub fractions: Vec<Option<f64>>,
    pub accumulation_minutes: f64,
    pub above_horizon_instants: usize,
}

impl ShadowResult {
    /// The result as a thematic layer located at the samples.
    pub fn to_layer(&self, name: &str, samples: &[SurfaceSample], frame: &LocalFrame) -> ThematicLayer {
        let points = samples
            .iter()
            .zip(&self.fractions)
            .map(|(s, f)| {
                let (lat, lon, height) = frame.unproject(s.position);
                ThematicPoint { lat, lon, height, value: f.map_or(Scalar::Null, Scalar::number) }
            })
            .collect();
        let mut layer = ThematicLayer::new(name, points);
        layer.color_scale = ColorScaleDef { scheme: ColorScheme::Sequential, domain: Some((0.0, 1.0)), ..Default::default() };
        layer.attributes.insert("accumulation_minutes".into(), Scalar::number(self.accumulation_minutes));
        layer.attributes.insert("instants".into(), Scalar::number(self.above_horizon_instants as f64));
        layer
    }
}

/// Counts, for every sample, the above-horizon instants at which the sun is
/// blocked or behind the surface.
pub fn accumulate_shadow(samples: &[SurfaceSample], scene: &Bvh, path: &SunPath) -> Result<ShadowResult, ShadowError> {
    if path.is_empty() {
        return Err(ShadowError::EmptyPath);
    }
    if samples.is_empty() {
        return Err(ShadowError::EmptyScene);
    }
    let suns: Vec<_> = path.positions.iter().filter(|p| p.is_up()).map(|p| p.direction()).collect();
    let fractions = samples
        .par_iter()
        .map(|s| {
            if suns.is_empty() {
                return None;
            }
            let origin = s.position + s.normal * RAY_EPSILON;
            let shadowed = suns
                .iter()
                .filter(|&&d| s.normal.dot(d) <= 0.0 || scene.any_hit(origin, d, f64::INFINITY))
                .count();
            Some(shadowed as f64 / suns.len() as f64)
        })
        .collect();
    Ok(ShadowResult {
        fractions,
        accumulation_minutes: suns.len() as f64 * path.step_minutes,
        above_horizon_instants: suns.len(),
    })
}
