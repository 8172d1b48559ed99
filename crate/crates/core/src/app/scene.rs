//! Scene bundles: everything a renderer needs, without workspace access.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::geometry::LocalFrame;
use crate::grammar::{Arrangement, ColorScaleDef, ColorScheme, FootprintArgs, Level, Specification};
use crate::knot::{footprint_slice, plot_table, Evaluation, KnotError, PlotTable};
use crate::layer::{PhysicalKind, PhysicalLayer, WorkspaceCatalog};
use crate::scalar::Scalar;

pub const BUNDLE_VERSION: u32 = 1;

/// Geometry of one physical layer in the workspace frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerGeometry {
    pub name: String,
    pub kind: PhysicalKind,
    /// Flat `x, y, z` triples in layer-wide coordinate order.
    pub coordinates: Vec<f64>,
    /// Triangle indices into the layer-wide coordinates (meshes only).
    pub indices: Vec<u32>,
    /// Coordinate range of object `i` is `object_offsets[i]..object_offsets[i + 1]`.
    pub object_offsets: Vec<usize>,
    /// Ring or part lengths per object.
    pub rings: Vec<Vec<u32>>,
}

impl LayerGeometry {
    pub fn of(layer: &PhysicalLayer) -> LayerGeometry {
        let offsets = layer.object_offsets();
        let mut indices = Vec::new();
        for (o, obj) in layer.objects.iter().enumerate() {
            indices.extend(obj.indices.iter().map(|&i| i + offsets[o] as u32));
        }
        LayerGeometry {
            name: layer.name.clone(),
            kind: layer.kind,
            coordinates: layer.objects.iter().flat_map(|o| o.coordinates.iter().copied()).collect(),
            indices,
            object_offsets: offsets,
            rings: layer.objects.iter().map(|o| o.rings.clone()).collect(),
        }
    }
}

/// Color scale with its domain resolved against the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorMapping {
    pub scheme: ColorScheme,
    /// `None` when the knot has no numeric values.
    pub domain: Option<(f64, f64)>,
    /// Sorted distinct text values.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    pub no_data_color: String,
}

impl ColorMapping {
    pub fn resolve(def: &ColorScaleDef, values: &[Scalar]) -> ColorMapping {
        let nums = values.iter().filter_map(Scalar::as_f64);
        let auto = nums.fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        });
        let categories: BTreeSet<&str> = values.iter().filter_map(Scalar::as_text).collect();
        ColorMapping {
            scheme: def.scheme,
            domain: def.domain.or(auto),
            categories: categories.into_iter().map(str::to_owned).collect(),
            no_data_color: def.no_data_color.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotScene {
    pub name: String,
    pub physical_layer: String,
    pub level: Level,
    /// One value per layer coordinate.
    pub values: Vec<Scalar>,
    pub color: ColorMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub plot: usize,
    pub chart_spec: serde_json::Value,
    pub tables: Vec<PlotTable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneBundle {
    pub bundle_version: u32,
    pub frame: Option<LocalFrame>,
    pub spec: Specification,
    pub layers: Vec<LayerGeometry>,
    pub knots: Vec<KnotScene>,
    pub plots: Vec<PlotData>,
}

/// Tables of the `index`-th plot, counting plots across views in order.
pub fn plot_data(
    spec: &Specification,
    eval: &Evaluation,
    catalog: &WorkspaceCatalog,
    index: usize,
) -> Result<Option<PlotData>, KnotError> {
    let Some(plot) = spec.views.iter().flat_map(|v| &v.plots).nth(index) else { return Ok(None) };
    let mut tables = Vec::new();
    let mut warnings = Vec::new();
    for binding in &plot.knots {
        let knot = eval
            .knots
            .get(&binding.knot_id)
            .ok_or_else(|| KnotError::UnresolvedReference(binding.knot_id.clone()))?;
        let layer = catalog.load(&knot.physical_layer)?;
        let layer = layer
            .as_physical()
            .ok_or_else(|| KnotError::UnresolvedReference(knot.physical_layer.clone()))?;
        match binding.arrangement.unwrap_or(Arrangement::Linked) {
            Arrangement::EmbeddedFootprint => {
                let args = FootprintArgs::from_args(&plot.args).unwrap_or_default();
                for o in 0..layer.objects.len() as u32 {
                    match footprint_slice(knot, layer, o, &args) {
                        Ok(t) => tables.push(t),
                        Err(KnotError::NoSamplesInBand { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            Arrangement::EmbeddedSurface => {
                warnings.push(format!("knot `{}`: surface-embedded plots are drawn as linked plots", knot.name));
                tables.push(plot_table(knot, layer, knot.level)?);
            }
            Arrangement::Linked => tables.push(plot_table(knot, layer, knot.level)?),
        }
    }
    Ok(Some(PlotData { plot: index, chart_spec: plot.chart_spec.clone(), tables, warnings }))
}

/// Assembles the bundle for an evaluated specification.
pub fn build_scene(spec: &Specification, eval: &Evaluation, catalog: &WorkspaceCatalog) -> Result<SceneBundle, KnotError> {
    let defs: BTreeMap<&str, _> = spec.knots.iter().map(|k| (k.name.as_str(), k)).collect();
    let mut layer_names = BTreeSet::new();
    let mut knots = Vec::new();
    for (name, knot) in &eval.knots {
        layer_names.insert(knot.physical_layer.clone());
        let def = defs.get(name.as_str()).and_then(|d| d.color_scale.clone()).unwrap_or_default();
        knots.push(KnotScene {
            name: name.clone(),
            physical_layer: knot.physical_layer.clone(),
            level: knot.level,
            values: knot.coord_values.clone(),
            color: ColorMapping::resolve(&def, knot.values()),
        });
    }
    let mut layers = Vec::new();
    for name in &layer_names {
        let layer = catalog.load(name)?;
        if let Some(p) = layer.as_physical() {
            layers.push(LayerGeometry::of(p));
        }
    }
    let count = spec.views.iter().map(|v| v.plots.len()).sum::<usize>();
    let plots = (0..count)
        .map(|i| plot_data(spec, eval, catalog, i).map(|p| p.expect("plot index in range")))
        .collect::<Result<_, _>>()?;
    Ok(SceneBundle { bundle_version: BUNDLE_VERSION, frame: catalog.frame(), spec: spec.clone(), layers, knots, plots })
}
