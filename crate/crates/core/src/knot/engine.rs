//! Evaluation of a specification's knot graph.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::aggregate::aggregate;
use super::expr::{parse_expression, EvalStats};
use super::filter::{apply_filter, Geocoder, OfflineGeocoder};
use super::join::{spatial_join, Elements};
use super::{EvaluatedKnot, KnotError, ProvenanceStep, SharedKnot};
use crate::geometry::{IndexKind, LocalFrame};
use crate::grammar::{
    has_errors, resolve_shapes, DataRef, IntegrationSchemeDef, KnotDef, Level, OperationDef, Specification,
    SpatialRelation,
};
use crate::layer::{JoinCache, JoinKey, JoinMap, Layer, PhysicalLayer, WorkspaceCatalog};
use crate::scalar::Scalar;

/// Result of evaluating a specification.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub knots: BTreeMap<String, SharedKnot>,
    /// Definition hash of every knot, including its inputs.
    pub hashes: BTreeMap<String, String>,
    /// Knots computed in this pass (the rest were reused).
    pub evaluated: Vec<String>,
}

pub struct Engine<'a> {
    catalog: &'a WorkspaceCatalog,
    cache: Option<JoinCache>,
    geocoder: Arc<dyn Geocoder>,
    index: IndexKind,
}

enum Input {
    Thematic { layer: Arc<Layer> },
    Physical { layer: Arc<Layer>, level: Level, values: Vec<Scalar> },
}

struct Current {
    layer: Arc<Layer>,
    level: Level,
    values: Vec<Scalar>,
}

fn physical(layer: &Layer) -> Result<&PhysicalLayer, KnotError> {
    layer.as_physical().ok_or_else(|| KnotError::UnresolvedReference(format!("{} (not a physical layer)", layer.name())))
}

fn level_count(layer: &PhysicalLayer, level: Level) -> usize {
    match level {
        Level::Coordinates => layer.coordinate_count(),
        Level::Objects => layer.objects.len(),
    }
}

/// Matches between two levels of the same layer.
fn align(layer: &PhysicalLayer, from: Level, to: Level) -> Vec<Vec<u32>> {
    match (from, to) {
        (Level::Coordinates, Level::Coordinates) => (0..layer.coordinate_count() as u32).map(|i| vec![i]).collect(),
        (Level::Objects, Level::Objects) => (0..layer.objects.len() as u32).map(|i| vec![i]).collect(),
        (Level::Coordinates, Level::Objects) => {
            let offsets = layer.object_offsets();
            offsets.windows(2).map(|w| (w[0] as u32..w[1] as u32).collect()).collect()
        }
        (Level::Objects, Level::Coordinates) => layer.coordinate_owners().into_iter().map(|o| vec![o]).collect(),
    }
}

impl<'a> Engine<'a> {
    /// An engine over `catalog` using its join cache and no geocoder.
    pub fn new(catalog: &'a WorkspaceCatalog) -> Engine<'a> {
        Engine { catalog, cache: Some(catalog.join_cache()), geocoder: Arc::new(OfflineGeocoder), index: IndexKind::Rtree }
    }

    pub fn with_cache(mut self, cache: Option<JoinCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_geocoder(mut self, geocoder: Arc<dyn Geocoder>) -> Self {
        self.geocoder = geocoder;
        self
    }

    pub fn with_index(mut self, index: IndexKind) -> Self {
        self.index = index;
        self
    }

    fn frame(&self, fallback: &PhysicalLayer) -> LocalFrame {
        self.catalog.frame().unwrap_or(fallback.crs_origin)
    }

    pub fn evaluate_spec(&self, spec: &Specification) -> Result<Evaluation, KnotError> {
        self.evaluate_incremental(spec, None)
    }

    /// Evaluates every knot, reusing knots from `previous` whose definition
    /// hash is unchanged. Independent knots are evaluated in parallel.
    pub fn evaluate_incremental(
        &self,
        spec: &Specification,
        previous: Option<&Evaluation>,
    ) -> Result<Evaluation, KnotError> {
        let (_, diags) = resolve_shapes(spec, self.catalog);
        if has_errors(&diags) {
            return Err(KnotError::Invalid(diags));
        }
        let hashes = knot_hashes(spec, self.catalog);
        let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
        for k in &spec.knots {
            let d = dependencies(k).iter().filter_map(|dep| depth.get(dep.as_str())).max().map_or(0, |d| d + 1);
            depth.insert(&k.name, d);
        }
        let max_depth = depth.values().copied().max().unwrap_or(0);
        let mut out = Evaluation { hashes: hashes.clone(), ..Default::default() };
        for wave in 0..=max_depth {
            let mut todo = Vec::new();
            for k in spec.knots.iter().filter(|k| depth[k.name.as_str()] == wave) {
                let reused = previous.and_then(|p| {
                    (p.hashes.get(&k.name) == hashes.get(&k.name)).then(|| p.knots.get(&k.name).cloned()).flatten()
                });
                match reused {
                    Some(knot) => {
                        out.knots.insert(k.name.clone(), knot);
                    }
                    None => todo.push(k),
                }
            }
            let done = &out.knots;
            let results: Vec<Result<EvaluatedKnot, KnotError>> =
                todo.par_iter().map(|k| self.evaluate_knot(k, done)).collect();
            for (k, r) in todo.iter().zip(results) {
                out.knots.insert(k.name.clone(), Arc::new(r?));
                out.evaluated.push(k.name.clone());
            }
        }
        Ok(out)
    }

    /// Evaluates one knot given its already evaluated inputs.
    pub fn evaluate_knot(
        &self,
        def: &KnotDef,
        done: &BTreeMap<String, SharedKnot>,
    ) -> Result<EvaluatedKnot, KnotError> {
        let mut knot = match &def.operation {
            Some(op) => self.evaluate_operation(&def.name, op, done)?,
            None => self.evaluate_schemes(def, done)?,
        };
        if let Some(filter) = &def.filter {
            let layer = self.catalog.load(&knot.physical_layer)?;
            let layer = physical(&layer)?;
            knot = apply_filter(&knot, layer, &self.frame(layer), filter, self.geocoder.as_ref())?;
        }
        Ok(knot)
    }

    fn knot_input(&self, name: &str, done: &BTreeMap<String, SharedKnot>) -> Result<Input, KnotError> {
        let k = done.get(name).ok_or_else(|| KnotError::UnresolvedReference(name.to_owned()))?;
        let layer = self.catalog.load(&k.physical_layer)?;
        Ok(Input::Physical { layer, level: k.level, values: k.values().to_vec() })
    }

    fn evaluate_schemes(&self, def: &KnotDef, done: &BTreeMap<String, SharedKnot>) -> Result<EvaluatedKnot, KnotError> {
        let mut current: Option<Current> = None;
        let mut provenance = Vec::new();
        for (i, s) in def.schemes.iter().enumerate() {
            let input = match (&s.input, current.take()) {
                (Some(DataRef::Layer(name)), None) => {
                    let layer = self.catalog.load(name)?;
                    match layer.as_ref() {
                        Layer::Thematic(_) => Input::Thematic { layer },
                        Layer::Physical(p) => {
                            let level = if s.relation == Some(SpatialRelation::InnerAggregate) {
                                Level::Coordinates
                            } else {
                                Level::Objects
                            };
                            let n = level_count(p, level);
                            Input::Physical { layer, level, values: vec![Scalar::Null; n] }
                        }
                    }
                }
                (Some(DataRef::Knot(name)), None) => self.knot_input(name, done)?,
                (_, Some(c)) => Input::Physical { layer: c.layer, level: c.level, values: c.values },
                (None, None) => return Err(KnotError::UnresolvedReference(format!("{} scheme {i} input", def.name))),
            };
            let out_layer = match &s.output {
                DataRef::Layer(name) => self.catalog.load(name)?,
                DataRef::Knot(name) => {
                    let k = done.get(name).ok_or_else(|| KnotError::UnresolvedReference(name.clone()))?;
                    self.catalog.load(&k.physical_layer)?
                }
            };
            let (next, step) = self.apply_scheme(&def.name, i, s, input, out_layer)?;
            provenance.push(step);
            current = Some(next);
        }
        let c = current.ok_or_else(|| KnotError::UnresolvedReference(format!("{} has no schemes", def.name)))?;
        let mut knot = EvaluatedKnot::from_values(&def.name, physical(&c.layer)?, c.level, c.values);
        knot.provenance = provenance;
        Ok(knot)
    }

    fn apply_scheme(
        &self,
        knot: &str,
        index: usize,
        s: &IntegrationSchemeDef,
        input: Input,
        out_layer: Arc<Layer>,
    ) -> Result<(Current, ProvenanceStep), KnotError> {
        let out = physical(&out_layer)?;
        let relation = s.relation.unwrap_or(SpatialRelation::Nearest);
        let out_level = s.out_level.unwrap_or(Level::Objects);
        let out_count = level_count(out, out_level);
        let invalid = |detail: &str| KnotError::InvalidRelation {
            knot: knot.to_owned(),
            scheme: index,
            relation,
            detail: detail.to_owned(),
        };

        let same_layer = match &input {
            Input::Physical { layer, .. } => {
                layer.name() == out_layer.name() && layer.content_hash() == out_layer.content_hash()
            }
            Input::Thematic { .. } => false,
        };
        let (in_values, in_level, in_layer) = match input {
            Input::Thematic { layer } => {
                let t = layer.as_thematic().expect("thematic input");
                (t.points.iter().map(|p| p.value.clone()).collect::<Vec<_>>(), Level::Coordinates, layer)
            }
            Input::Physical { layer, level, values } => (values, level, layer),
        };

        let mut join_key = None;
        let entries: Vec<Vec<u32>> = match relation {
            SpatialRelation::InnerAggregate => {
                if !same_layer {
                    return Err(invalid("works within one physical layer"));
                }
                align(out, in_level, out_level)
            }
            SpatialRelation::Nearest | SpatialRelation::Direct if same_layer => align(out, in_level, out_level),
            SpatialRelation::Direct => {
                if in_values.len() != out_count {
                    return Err(KnotError::CountMismatch {
                        knot: knot.to_owned(),
                        scheme: index,
                        out: out_count,
                        input: in_values.len(),
                    });
                }
                (0..out_count as u32).map(|i| vec![i]).collect()
            }
            _ => {
                let key = JoinKey {
                    left_hash: out_layer.content_hash().to_owned(),
                    right_hash: in_layer.content_hash().to_owned(),
                    relation,
                    in_level,
                    out_level,
                };
                join_key = Some(key.digest());
                self.join(key, out, out_level, &in_layer, in_level)?
            }
        };

        let results: Vec<Result<Scalar, KnotError>> = entries
            .par_iter()
            .enumerate()
            .map(|(o, matches)| {
                let matched = matches.iter().map(|&i| &in_values[i as usize]);
                match s.operation {
                    Some(kind) => aggregate(kind, matched)
                        .map_err(|detail| KnotError::Type { knot: knot.to_owned(), element: o, detail }),
                    None => match matches.len() {
                        0 => Ok(Scalar::Null),
                        1 => Ok(in_values[matches[0] as usize].clone()),
                        n => Err(KnotError::MissingAggregation {
                            knot: knot.to_owned(),
                            scheme: index,
                            element: o,
                            matches: n,
                        }),
                    },
                }
            })
            .collect();
        let values = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let step = ProvenanceStep { scheme: index, relation, out_level, join_key };
        Ok((Current { layer: out_layer, level: out_level, values }, step))
    }

    fn join(
        &self,
        key: JoinKey,
        out: &PhysicalLayer,
        out_level: Level,
        in_layer: &Layer,
        in_level: Level,
    ) -> Result<Vec<Vec<u32>>, KnotError> {
        let out_count = level_count(out, out_level);
        let cacheable = !key.left_hash.is_empty() && !key.right_hash.is_empty();
        if let (Some(cache), true) = (&self.cache, cacheable) {
            if let Some(map) = cache.lookup(&key)? {
                if map.entries.len() == out_count {
                    return Ok(map.entries);
                }
            }
        }
        let out_elements = Elements::of_layer(out, out_level);
        let in_elements = match in_layer {
            Layer::Thematic(t) => Elements::of_thematic(t, &self.frame(out)),
            Layer::Physical(p) => Elements::of_layer(p, in_level),
        };
        let entries = spatial_join(key.relation, &out_elements, &in_elements, self.index)?;
        if let (Some(cache), true) = (&self.cache, cacheable) {
            let map = JoinMap::new(key, entries);
            if let Err(e) = cache.store(&map) {
                log::warn!("join cache write failed: {e}");
            }
            return Ok(map.entries);
        }
        Ok(entries)
    }

    fn evaluate_operation(
        &self,
        name: &str,
        op: &OperationDef,
        done: &BTreeMap<String, SharedKnot>,
    ) -> Result<EvaluatedKnot, KnotError> {
        let inputs: Vec<&SharedKnot> = op
            .inputs
            .iter()
            .map(|i| done.get(&i.knot).ok_or_else(|| KnotError::UnresolvedReference(i.knot.clone())))
            .collect::<Result<_, _>>()?;
        let first = inputs[0];
        let layer_arc = self.catalog.load(&first.physical_layer)?;
        let layer = physical(&layer_arc)?;
        let level = if inputs.iter().all(|k| k.level == Level::Objects) { Level::Objects } else { Level::Coordinates };
        let columns: Vec<&[Scalar]> =
            inputs.iter().map(|k| k.values_at(level).expect("level present")).collect();
        let n = level_count(layer, level);
        if let Some(bad) = inputs.iter().zip(&columns).find(|(k, c)| c.len() != n || k.physical_layer != layer.name) {
            return Err(KnotError::Type {
                knot: name.to_owned(),
                element: 0,
                detail: format!("input `{}` is not aligned with layer `{}`", bad.0.name, layer.name),
            });
        }
        let expr = parse_expression(&op.expression)
            .map_err(|source| KnotError::Expression { knot: name.to_owned(), source })?;
        let names: Vec<&str> = op.inputs.iter().map(|i| i.binding_name()).collect();
        let compiled =
            expr.compile(&names).map_err(|source| KnotError::Expression { knot: name.to_owned(), source })?;
        let results: Vec<(Result<Scalar, KnotError>, usize)> = (0..n)
            .into_par_iter()
            .map(|e| {
                let slots: Vec<&Scalar> = columns.iter().map(|c| &c[e]).collect();
                let mut stats = EvalStats::default();
                let r = compiled.eval(&slots, &mut stats).map_err(|err| KnotError::Type {
                    knot: name.to_owned(),
                    element: e,
                    detail: err.to_string(),
                });
                (r, stats.divisions_by_zero)
            })
            .collect();
        let divisions: usize = results.iter().map(|r| r.1).sum();
        let values = results.into_iter().map(|r| r.0).collect::<Result<Vec<_>, _>>()?;
        let mut knot = EvaluatedKnot::from_values(name, layer, level, values);
        if divisions > 0 {
            knot.warnings.push(format!("{divisions} division(s) by zero produced null"));
        }
        Ok(knot)
    }
}

fn dependencies(k: &KnotDef) -> BTreeSet<String> {
    let mut deps = BTreeSet::new();
    for s in &k.schemes {
        for r in s.input.iter().chain(std::iter::once(&s.output)) {
            if let DataRef::Knot(n) = r {
                deps.insert(n.clone());
            }
        }
    }
    if let Some(op) = &k.operation {
        deps.extend(op.inputs.iter().map(|i| i.knot.clone()));
    }
    deps
}

/// Definition hash of every knot: its own definition, the content hashes of
/// the layers it reads and the hashes of the knots it depends on.
pub fn knot_hashes(spec: &Specification, catalog: &WorkspaceCatalog) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    for k in &spec.knots {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(k).expect("knot serializes"));
        for s in &k.schemes {
            for r in s.input.iter().chain(std::iter::once(&s.output)) {
                if let DataRef::Layer(n) = r {
                    h.update(b"\0layer\0");
                    h.update(n.as_bytes());
                    h.update(catalog.resolve(n).map(|e| e.content_hash.as_str()).unwrap_or("").as_bytes());
                }
            }
        }
        for dep in dependencies(k) {
            h.update(b"\0knot\0");
            h.update(dep.as_bytes());
            h.update(out.get(&dep).map(String::as_str).unwrap_or("").as_bytes());
        }
        out.insert(k.name.clone(), hex::encode(h.finalize()));
    }
    out
}
