//! A live authoring session: the last accepted specification of one
//! workspace and its evaluated knots.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::scene::{build_scene, plot_data, LayerGeometry, PlotData, SceneBundle};
use crate::grammar::{canonicalize, parse_spec, serialize_spec, validate_spec, Diagnostic, Level, Specification};
use crate::knot::{
    knot_json, plot_table, plot_table_json, Engine, Evaluation, Geocoder, KnotError, OfflineGeocoder, SharedKnot,
};
use crate::layer::{LayerError, WorkspaceCatalog};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown {kind} `{name}`")]
    NotFound { kind: &'static str, name: String },
    #[error(transparent)]
    Knot(#[from] KnotError),
    #[error(transparent)]
    Layer(#[from] LayerError),
}

/// A specification that was not accepted; the previous one stays active.
#[derive(Debug, Clone, Serialize)]
pub struct Rejected {
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UpdateReport {
    pub status: &'static str,
    pub diagnostics: Vec<Diagnostic>,
    /// Knots recomputed by this update.
    pub evaluated: Vec<String>,
    /// Knots carried over unchanged.
    pub reused: Vec<String>,
}

/// An evaluated candidate specification, ready to become the session state.
#[derive(Debug, Clone)]
pub struct Prepared {
    spec: Specification,
    evaluation: Evaluation,
    pub report: UpdateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct KnotSummary {
    pub name: String,
    pub physical_layer: String,
    pub level: Level,
    pub hash: String,
}

pub struct Session {
    catalog: WorkspaceCatalog,
    geocoder: Arc<dyn Geocoder>,
    use_cache: bool,
    spec: Option<Specification>,
    evaluation: Evaluation,
}

fn evaluation_diagnostic(e: &KnotError) -> Diagnostic {
    match e {
        KnotError::Invalid(d) => d.first().cloned().unwrap_or_else(|| Diagnostic::error("", "Invalid", e.to_string())),
        other => Diagnostic::error("/knots", "EvaluationError", other.to_string()),
    }
}

impl Session {
    pub fn new(catalog: WorkspaceCatalog) -> Session {
        Session { catalog, geocoder: Arc::new(OfflineGeocoder), use_cache: true, spec: None, evaluation: Evaluation::default() }
    }

    pub fn with_geocoder(mut self, geocoder: Arc<dyn Geocoder>) -> Session {
        self.geocoder = geocoder;
        self
    }

    /// Disables the on-disk join cache.
    pub fn without_cache(mut self) -> Session {
        self.use_cache = false;
        self
    }

    pub fn catalog(&self) -> &WorkspaceCatalog {
        &self.catalog
    }

    fn engine(&self) -> Engine<'_> {
        let cache = self.use_cache.then(|| self.catalog.join_cache());
        Engine::new(&self.catalog).with_cache(cache).with_geocoder(self.geocoder.clone())
    }

    /// Parses, validates and evaluates `text`. Only knots whose definition
    /// or inputs changed are recomputed. On rejection nothing changes.
    pub fn update(&mut self, text: &str) -> Result<UpdateReport, Rejected> {
        let prepared = self.prepare(text)?;
        Ok(self.commit(prepared))
    }

    pub fn update_spec(&mut self, spec: Specification) -> Result<UpdateReport, Rejected> {
        let prepared = self.prepare_spec(spec)?;
        Ok(self.commit(prepared))
    }

    /// Evaluates a candidate specification without touching the session, so
    /// readers keep seeing the current state meanwhile.
    pub fn prepare(&self, text: &str) -> Result<Prepared, Rejected> {
        let spec = parse_spec(text).map_err(|e| Rejected { diagnostics: vec![Diagnostic::from(&e)] })?;
        self.prepare_spec(spec)
    }

    pub fn prepare_spec(&self, spec: Specification) -> Result<Prepared, Rejected> {
        let spec = canonicalize(&spec);
        let diagnostics = validate_spec(&spec, &self.catalog);
        if diagnostics.iter().any(Diagnostic::is_error) {
            return Err(Rejected { diagnostics });
        }
        let previous = self.spec.as_ref().map(|_| &self.evaluation);
        let evaluation = self
            .engine()
            .evaluate_incremental(&spec, previous)
            .map_err(|e| Rejected { diagnostics: vec![evaluation_diagnostic(&e)] })?;
        let evaluated = evaluation.evaluated.clone();
        let reused = evaluation.knots.keys().filter(|k| !evaluated.contains(k)).cloned().collect();
        let report = UpdateReport { status: "done", diagnostics, evaluated, reused };
        Ok(Prepared { spec, evaluation, report })
    }

    pub fn commit(&mut self, prepared: Prepared) -> UpdateReport {
        self.spec = Some(prepared.spec);
        self.evaluation = prepared.evaluation;
        prepared.report
    }

    pub fn spec(&self) -> Option<&Specification> {
        self.spec.as_ref()
    }

    /// Canonical text of the active specification.
    pub fn spec_text(&self) -> Option<String> {
        self.spec.as_ref().map(serialize_spec)
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    pub fn knots(&self) -> Vec<KnotSummary> {
        self.evaluation
            .knots
            .values()
            .map(|k| KnotSummary {
                name: k.name.clone(),
                physical_layer: k.physical_layer.clone(),
                level: k.level,
                hash: self.evaluation.hashes.get(&k.name).cloned().unwrap_or_default(),
            })
            .collect()
    }

    pub fn knot(&self, name: &str) -> Result<&SharedKnot, SessionError> {
        self.evaluation.knots.get(name).ok_or_else(|| SessionError::NotFound { kind: "knot", name: name.to_owned() })
    }

    /// The knot's JSON export, or its plot table at `level`.
    pub fn knot_data(&self, name: &str, level: Option<Level>) -> Result<Vec<u8>, SessionError> {
        let knot = self.knot(name)?;
        match level {
            None => Ok(knot_json(knot)),
            Some(level) => {
                let layer = self.catalog.load(&knot.physical_layer)?;
                let layer = layer
                    .as_physical()
                    .ok_or_else(|| SessionError::NotFound { kind: "physical layer", name: knot.physical_layer.clone() })?;
                Ok(plot_table_json(&plot_table(knot, layer, level)?))
            }
        }
    }

    pub fn layer_geometry(&self, name: &str) -> Result<LayerGeometry, SessionError> {
        if self.catalog.resolve(name).is_none() {
            return Err(SessionError::NotFound { kind: "layer", name: name.to_owned() });
        }
        let layer = self.catalog.load(name)?;
        let p = layer
            .as_physical()
            .ok_or_else(|| SessionError::NotFound { kind: "physical layer", name: name.to_owned() })?;
        Ok(LayerGeometry::of(p))
    }

    pub fn plot(&self, index: usize) -> Result<PlotData, SessionError> {
        let missing = || SessionError::NotFound { kind: "plot", name: index.to_string() };
        let spec = self.spec.as_ref().ok_or_else(missing)?;
        plot_data(spec, &self.evaluation, &self.catalog, index)?.ok_or_else(missing)
    }

    pub fn scene(&self) -> Result<SceneBundle, SessionError> {
        let spec = self.spec.as_ref().ok_or(SessionError::NotFound { kind: "specification", name: String::new() })?;
        Ok(build_scene(spec, &self.evaluation, &self.catalog)?)
    }
}
