//! Static checks of a parsed specification against a workspace catalog.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::parse::{child, ParseError};
use super::types::*;
use crate::knot::expr::{parse_expression, ExprError};
use crate::layer::{LayerType, PhysicalKind, WorkspaceCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// JSON pointer into the specification document.
    pub path: String,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(path: impl Into<String>, code: &str, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, path: path.into(), code: code.to_owned(), message: message.into() }
    }

    pub fn warning(path: impl Into<String>, code: &str, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, path: path.into(), code: code.to_owned(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Diagnostic {
        let message = match e {
            ParseError::Syntax { message, .. } => message.clone(),
            ParseError::UnknownField { .. } => "unknown field".to_owned(),
            ParseError::WrongType { expected, .. } => format!("expected {expected}"),
        };
        let path = if e.path().is_empty() { "/".to_owned() } else { e.path().to_owned() };
        Diagnostic::error(path, e.code(), message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.path, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Final physical layer and level of a knot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotShape {
    pub physical: String,
    pub kind: PhysicalKind,
    pub level: Level,
}

/// Plot arguments of footprint-embedded plots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintArgs {
    pub n_segments: usize,
    pub slice_height: f64,
    pub band_width: f64,
}

impl Default for FootprintArgs {
    fn default() -> Self {
        FootprintArgs { n_segments: 8, slice_height: 1.5, band_width: 1.0 }
    }
}

impl FootprintArgs {
    /// Reads the arguments, reporting each bad value as `(key, message)`.
    pub fn from_args(args: &BTreeMap<String, serde_json::Value>) -> Result<FootprintArgs, (String, String)> {
        let mut out = FootprintArgs::default();
        if let Some(v) = args.get("n_segments") {
            out.n_segments = v
                .as_u64()
                .filter(|&n| n > 0)
                .ok_or_else(|| ("n_segments".to_owned(), "must be a positive integer".to_owned()))?
                as usize;
        }
        if let Some(v) = args.get("slice_height") {
            out.slice_height = v
                .as_f64()
                .ok_or_else(|| ("slice_height".to_owned(), "must be a number of meters".to_owned()))?;
        }
        if let Some(v) = args.get("band_width") {
            out.band_width = v
                .as_f64()
                .filter(|&b| b > 0.0)
                .ok_or_else(|| ("band_width".to_owned(), "must be a positive number of meters".to_owned()))?;
        }
        Ok(out)
    }
}

struct Ctx<'a> {
    catalog: &'a WorkspaceCatalog,
    diags: Vec<Diagnostic>,
    /// Knot name to its index in document order.
    order: HashMap<&'a str, usize>,
    shapes: BTreeMap<String, KnotShape>,
}

impl Ctx<'_> {
    fn err(&mut self, path: String, code: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(path, code, message));
    }

    fn warn(&mut self, path: String, code: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic::warning(path, code, message));
    }

    /// Checks a reference from knot `at` to knot `name`.
    fn knot_ref(&mut self, at: usize, name: &str, path: String) -> Option<KnotShape> {
        match self.order.get(name) {
            None => {
                self.err(path, "UnresolvedReference", format!("unknown knot `{name}`"));
                None
            }
            Some(&j) if j >= at => {
                self.err(
                    path,
                    "ForwardReference",
                    format!("knot `{name}` must be declared before the knot that uses it"),
                );
                None
            }
            Some(_) => self.shapes.get(name).cloned(),
        }
    }
}

/// A resolved data source while walking a scheme chain.
#[derive(Clone)]
enum Source {
    Thematic,
    Physical { layer: String, kind: PhysicalKind, level: Level, has_values: bool },
}

/// Validates `spec`; an empty error set means every reference resolves and
/// every knot can be evaluated.
pub fn validate_spec(spec: &Specification, catalog: &WorkspaceCatalog) -> Vec<Diagnostic> {
    resolve_shapes(spec, catalog).1
}

/// Validation that also returns the final physical layer of every knot that
/// resolved.
pub fn resolve_shapes(spec: &Specification, catalog: &WorkspaceCatalog) -> (BTreeMap<String, KnotShape>, Vec<Diagnostic>) {
    let mut ctx = Ctx { catalog, diags: Vec::new(), order: HashMap::new(), shapes: BTreeMap::new() };

    if spec.grammar_version != GRAMMAR_VERSION {
        ctx.err("/grammar_version".into(), "SyntaxError", format!("unsupported grammar version `{}`", spec.grammar_version));
    }

    let mut cameras = HashSet::new();
    for (i, c) in spec.cameras.iter().enumerate() {
        let path = child("/cameras", i);
        if !cameras.insert(c.camera_id.as_str()) {
            ctx.err(child(&path, "camera_id"), "DuplicateName", format!("camera id `{}` is declared twice", c.camera_id));
        }
        let norm = c.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-12) || !norm.is_finite() {
            ctx.err(child(&path, "direction"), "InvalidCamera", "camera direction must be a non-zero vector");
        }
        if c.position.iter().any(|v| !v.is_finite()) {
            ctx.err(child(&path, "position"), "InvalidCamera", "camera position must be finite");
        }
    }

    for (i, k) in spec.knots.iter().enumerate() {
        if ctx.order.contains_key(k.name.as_str()) {
            ctx.err(child(&child("/knots", i), "name"), "DuplicateName", format!("knot `{}` is declared twice", k.name));
        } else {
            ctx.order.insert(&k.name, i);
        }
    }

    for (i, k) in spec.knots.iter().enumerate() {
        let path = child("/knots", i);
        let shape = if let Some(op) = &k.operation {
            check_operation(&mut ctx, i, op, &child(&path, "operation"))
        } else {
            check_schemes(&mut ctx, i, &k.schemes, &child(&path, "schemes"))
        };
        if let Some(f) = &k.filter {
            check_filter(&mut ctx, f, &child(&path, "filter"));
        }
        if let Some(cs) = &k.color_scale {
            check_color_scale(&mut ctx, cs, &child(&path, "color_scale"));
        }
        if let (Some(shape), Some(&first)) = (shape, ctx.order.get(k.name.as_str())) {
            if first == i {
                ctx.shapes.insert(k.name.clone(), shape);
            }
        }
    }

    for (v, view) in spec.views.iter().enumerate() {
        let vpath = child("/views", v);
        let mpath = child(&vpath, "map");
        if !cameras.contains(view.map.camera_id.as_str()) {
            ctx.err(child(&mpath, "camera_id"), "UnresolvedReference", format!("unknown camera `{}`", view.map.camera_id));
        }
        if view.map.knots.is_empty() {
            ctx.err(child(&mpath, "knots"), "EmptyMap", "a map needs at least one knot");
        }
        let mut rendered: HashMap<String, String> = HashMap::new();
        for (b, binding) in view.map.knots.iter().enumerate() {
            let bpath = child(&child(&mpath, "knots"), b);
            if !ctx.order.contains_key(binding.knot_id.as_str()) {
                ctx.err(child(&bpath, "knot_id"), "UnresolvedReference", format!("unknown knot `{}`", binding.knot_id));
                continue;
            }
            if let Some(shape) = ctx.shapes.get(&binding.knot_id).cloned() {
                if let Some(other) = rendered.get(&shape.physical) {
                    let msg = format!(
                        "knots `{other}` and `{}` both render physical layer `{}` in one map",
                        binding.knot_id, shape.physical
                    );
                    ctx.err(child(&bpath, "knot_id"), "DuplicatePhysicalLayer", msg);
                } else {
                    rendered.insert(shape.physical, binding.knot_id.clone());
                }
            }
        }
        for (p, plot) in view.plots.iter().enumerate() {
            check_plot(&mut ctx, plot, &child(&child(&vpath, "plots"), p));
        }
    }

    let Ctx { shapes, diags, .. } = ctx;
    (shapes, diags)
}

fn check_plot(ctx: &mut Ctx<'_>, plot: &PlotDef, path: &str) {
    if plot.knots.is_empty() {
        ctx.err(child(path, "knots"), "EmptyPlot", "a plot needs at least one knot");
    }
    let mut footprint = false;
    for (b, binding) in plot.knots.iter().enumerate() {
        let bpath = child(&child(path, "knots"), b);
        if !ctx.order.contains_key(binding.knot_id.as_str()) {
            ctx.err(child(&bpath, "knot_id"), "UnresolvedReference", format!("unknown knot `{}`", binding.knot_id));
            continue;
        }
        match binding.arrangement {
            Some(Arrangement::EmbeddedSurface) => ctx.warn(
                child(&bpath, "arrangement"),
                "UnsupportedRendering",
                "embedded_surface is not rendered; surface data is exposed as per-coordinate coloring",
            ),
            Some(Arrangement::EmbeddedFootprint) => {
                footprint = true;
                if let Some(shape) = ctx.shapes.get(&binding.knot_id).cloned() {
                    if shape.kind != PhysicalKind::Mesh3d {
                        ctx.err(
                            child(&bpath, "arrangement"),
                            "InvalidArrangement",
                            format!(
                                "embedded_footprint needs a mesh3d layer, `{}` is {}",
                                shape.physical,
                                shape.kind.as_str()
                            ),
                        );
                    }
                }
            }
            _ => {}
        }
    }
    if footprint {
        if let Err((key, msg)) = FootprintArgs::from_args(&plot.args) {
            ctx.err(child(&child(path, "args"), key), "InvalidArgument", msg);
        }
    }
}

fn check_filter(ctx: &mut Ctx<'_>, f: &FilterDef, path: &str) {
    if let FilterDef::BoundingBox(b) = f {
        if !f.geo_box().is_some_and(|g| g.is_valid()) {
            ctx.err(
                child(path, "bounding_box"),
                "InvalidFilter",
                format!("bounding box {b:?} must satisfy lat_min < lat_max and lon_min < lon_max"),
            );
        }
    }
}

fn check_color_scale(ctx: &mut Ctx<'_>, cs: &ColorScaleDef, path: &str) {
    if let Some((lo, hi)) = cs.domain {
        if !(lo < hi) {
            ctx.err(child(path, "domain"), "InvalidColorScale", "explicit domain must satisfy lo < hi");
        }
    }
}

fn check_operation(ctx: &mut Ctx<'_>, at: usize, op: &OperationDef, path: &str) -> Option<KnotShape> {
    match op.relation {
        None => {}
        Some(SpatialRelation::Nearest) => ctx.warn(
            child(path, "relation"),
            "RedundantRelation",
            "nearest between knots on the same physical layer is redundant (identity alignment)",
        ),
        Some(r) => ctx.err(
            child(path, "relation"),
            "InvalidRelation",
            format!("operations align knots element-wise; relation `{r}` is not allowed"),
        ),
    }
    let mut names = HashSet::new();
    let mut shapes = Vec::new();
    let mut resolved = true;
    for (j, input) in op.inputs.iter().enumerate() {
        let ipath = child(&child(path, "inputs"), j);
        if !names.insert(input.binding_name().to_owned()) {
            ctx.err(ipath.clone(), "DuplicateBinding", format!("name `{}` is bound twice", input.binding_name()));
        }
        match ctx.knot_ref(at, &input.knot, child(&ipath, "knot")) {
            Some(s) => shapes.push((ipath, s)),
            None => resolved = false,
        }
    }
    let expr_path = child(path, "expression");
    match parse_expression(&op.expression) {
        Err(ExprError::Syntax { offset, message }) => {
            ctx.err(expr_path, "ExprSyntaxError", format!("at offset {offset}: {message}"));
        }
        Err(e) => ctx.err(expr_path, "ExprSyntaxError", e.to_string()),
        Ok(e) => {
            for id in e.identifiers() {
                if !names.contains(id) {
                    ctx.err(expr_path.clone(), "UnboundIdentifier", format!("identifier `{id}` is not an input name"));
                }
            }
        }
    }
    let (first_path, first) = shapes.first().cloned()?;
    let _ = first_path;
    let mut ok = resolved;
    for (ipath, s) in &shapes[1..] {
        if s.physical != first.physical {
            ctx.err(
                ipath.clone(),
                "PhysicalLayerMismatch",
                format!("knots must share physical layer (`{}` vs `{}`)", first.physical, s.physical),
            );
            ok = false;
        }
    }
    let level =
        if shapes.iter().all(|(_, s)| s.level == Level::Objects) { Level::Objects } else { Level::Coordinates };
    ok.then_some(KnotShape { physical: first.physical, kind: first.kind, level })
}

fn check_schemes(ctx: &mut Ctx<'_>, at: usize, schemes: &[IntegrationSchemeDef], path: &str) -> Option<KnotShape> {
    let mut prev: Option<(DataRef, Source)> = None;
    let mut broken = false;
    for (j, s) in schemes.iter().enumerate() {
        let spath = child(path, j);
        let relation = s.relation.unwrap_or(SpatialRelation::Nearest);
        let out_level = s.out_level.unwrap_or(Level::Objects);

        // input
        let input = match (&s.input, &prev) {
            (None, None) => {
                if j == 0 {
                    ctx.err(spath.clone(), "MissingInput", "the first scheme of a knot needs an `in` reference");
                }
                None
            }
            (None, Some((_, src))) => Some(src.clone()),
            (Some(r), Some((prev_out, src))) => {
                if r != prev_out {
                    ctx.err(
                        child(&spath, "in"),
                        "ChainBroken",
                        format!("a chained scheme continues from `{}`; omit `in` or repeat it", prev_out.name()),
                    );
                    None
                } else {
                    Some(src.clone())
                }
            }
            (Some(r), None) => {
                if j > 0 {
                    None
                } else {
                    resolve_input(ctx, at, r, relation, &child(&spath, "in"))
                }
            }
        };

        // output
        let opath = child(&spath, "out");
        let output = match &s.output {
            DataRef::Layer(name) => match ctx.catalog.resolve(name).map(|e| e.layer_type) {
                None => {
                    ctx.err(opath.clone(), "UnresolvedReference", format!("no layer file `{name}` in the workspace"));
                    None
                }
                Some(LayerType::Thematic) => {
                    ctx.err(
                        opath.clone(),
                        "LayerReference",
                        format!("thematic layer `{name}` can only be referenced as `in`"),
                    );
                    None
                }
                Some(LayerType::Physical(kind)) => Some((layer_stem(ctx.catalog, name), kind)),
            },
            DataRef::Knot(k) => ctx.knot_ref(at, k, opath.clone()).map(|s| (s.physical, s.kind)),
        };

        let Some((out_layer, out_kind)) = output else {
            broken = true;
            prev = None;
            continue;
        };
        let src_out = Source::Physical { layer: out_layer.clone(), kind: out_kind, level: out_level, has_values: true };
        let Some(input) = input else {
            broken = true;
            prev = Some((s.output.clone(), src_out));
            continue;
        };

        // relation and aggregation
        let rpath = child(&spath, "relation");
        let apath = child(&spath, "operation");
        let aggregation = s.operation;
        if relation.always_one_to_many() && aggregation.is_none() {
            ctx.err(
                apath.clone(),
                "MissingAggregation",
                format!("relation `{relation}` is 1:n and needs an aggregation"),
            );
        }
        match &input {
            Source::Thematic => {
                if matches!(relation, SpatialRelation::Within | SpatialRelation::InnerAggregate) {
                    ctx.err(
                        rpath.clone(),
                        "InvalidRelation",
                        format!("relation `{relation}` needs a physical input; thematic points have no extent"),
                    );
                }
            }
            Source::Physical { layer, level, has_values, .. } => {
                if !has_values && aggregation != Some(AggregationKind::Count) {
                    ctx.err(
                        apath.clone(),
                        "NoValues",
                        format!("physical layer `{layer}` carries no values; link a knot or use `count`"),
                    );
                }
                if relation == SpatialRelation::InnerAggregate {
                    if *layer != out_layer {
                        ctx.err(rpath.clone(), "InvalidRelation", "inner_aggregate works within one physical layer");
                    }
                    if out_level != Level::Objects {
                        ctx.err(child(&spath, "out_level"), "InvalidRelation", "inner_aggregate produces object-level values");
                    }
                    if *level != Level::Coordinates {
                        ctx.warn(rpath.clone(), "RedundantRelation", "input is already at object level");
                    }
                }
            }
        }
        prev = Some((s.output.clone(), src_out));
    }
    if broken {
        return None;
    }
    match prev {
        Some((_, Source::Physical { layer, kind, level, .. })) => Some(KnotShape { physical: layer, kind, level }),
        _ => None,
    }
}

fn layer_stem(catalog: &WorkspaceCatalog, name: &str) -> String {
    catalog.resolve(name).map(|e| e.name.clone()).unwrap_or_else(|| name.to_owned())
}

fn resolve_input(
    ctx: &mut Ctx<'_>,
    at: usize,
    r: &DataRef,
    relation: SpatialRelation,
    path: &str,
) -> Option<Source> {
    match r {
        DataRef::Layer(name) => match ctx.catalog.resolve(name).map(|e| e.layer_type) {
            None => {
                ctx.err(path.to_owned(), "UnresolvedReference", format!("no layer file `{name}` in the workspace"));
                None
            }
            Some(LayerType::Thematic) => Some(Source::Thematic),
            Some(LayerType::Physical(kind)) => {
                let level = if relation == SpatialRelation::InnerAggregate { Level::Coordinates } else { Level::Objects };
                Some(Source::Physical { layer: layer_stem(ctx.catalog, name), kind, level, has_values: false })
            }
        },
        DataRef::Knot(k) => ctx
            .knot_ref(at, k, path.to_owned())
            .map(|s| Source::Physical { layer: s.physical, kind: s.kind, level: s.level, has_values: true }),
    }
}
