//! One function per CLI command. Each returns the lines it wants printed
//! on stdout; diagnostics and warnings go through `log`.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDateTime, Utc};
use serde_json::Value;
use urbankit::app::Session;
use urbankit::grammar::{has_errors, parse_spec, validate_spec, Diagnostic};
use urbankit::ingest::{
    ingest_csv, ingest_geojson, ingest_osm, make_grid, sample_cells, sample_surfaces, ColumnMap, FeatureClass,
    IngestConfig, OsmExtract, Region,
};
use urbankit::knot::{knot_csv, knot_json, Geocoder};
use urbankit::layer::{Layer, PhysicalKind, WorkspaceCatalog};
use urbankit::shadow::{accumulate_shadow, Bvh, SunPath};
use urbankit::{GeoBox, LocalFrame};

use crate::Failure;

pub fn open_workspace(dir: &Path) -> Result<WorkspaceCatalog, Failure> {
    if !dir.is_dir() {
        return Err(Failure::Io(format!("{}: workspace directory not found", dir.display())));
    }
    Ok(WorkspaceCatalog::open(dir)?)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn log_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        log::warn!("{d}");
    }
}

/// Parses and validates a specification against the workspace catalog.
/// Returns the warnings when there are no errors.
pub fn validate(spec: &Path, workspace: &Path) -> Result<Vec<Diagnostic>, Failure> {
    let text = read_text(spec)?;
    let catalog = open_workspace(workspace)?;
    let parsed = parse_spec(&text).map_err(|e| Failure::Diagnostics(vec![Diagnostic::from(&e)]))?;
    let diags = validate_spec(&parsed, &catalog);
    if has_errors(&diags) {
        return Err(Failure::Diagnostics(diags));
    }
    Ok(diags)
}

/// A session with `spec` accepted.
pub fn load_session(spec: &Path, workspace: &Path) -> Result<Session, Failure> {
    let text = read_text(spec)?;
    let mut session = Session::new(open_workspace(workspace)?);
    let report = session.update(&text).map_err(|r| Failure::Diagnostics(r.diagnostics))?;
    log_diagnostics(&report.diagnostics);
    Ok(session)
}

/// Writes `<knot>.json` and `<knot>.csv` for every knot; returns the paths.
pub fn eval(spec: &Path, workspace: &Path, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let session = load_session(spec, workspace)?;
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let mut written = Vec::new();
    for (name, knot) in &session.evaluation().knots {
        for w in &knot.warnings {
            log::warn!("knot `{name}`: {w}");
        }
        let json = out.join(format!("{name}.json"));
        write_bytes(&json, &knot_json(knot))?;
        let layer = session.catalog().load(&knot.physical_layer)?;
        let physical = layer
            .as_physical()
            .ok_or_else(|| Failure::Invalid(format!("`{}` is not a physical layer", knot.physical_layer)))?;
        let csv = out.join(format!("{name}.csv"));
        write_bytes(&csv, knot_csv(knot, physical).as_bytes())?;
        written.push(json);
        written.push(csv);
    }
    Ok(written)
}

/// Writes the scene bundle as JSON.
pub fn export_scene(spec: &Path, workspace: &Path, out: &Path) -> Result<(), Failure> {
    let session = load_session(spec, workspace)?;
    let scene = session.scene().map_err(|e| Failure::Invalid(e.to_string()))?;
    let mut bytes = serde_json::to_vec(&scene).expect("scene serializes");
    bytes.push(b'\n');
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
    }
    write_bytes(out, &bytes)
}

/// `lat_min,lon_min,lat_max,lon_max`.
pub fn parse_bbox(text: &str) -> Result<GeoBox, Failure> {
    let v = parse_numbers(text, ',')?;
    if v.len() != 4 {
        return Err(Failure::Invalid(format!("bounding box needs 4 numbers, got `{text}`")));
    }
    let b = GeoBox::new(v[0], v[1], v[2], v[3]);
    if !b.is_valid() {
        return Err(Failure::Invalid(format!("invalid bounding box `{text}`")));
    }
    Ok(b)
}

/// `lat,lon;lat,lon;...`.
pub fn parse_polygon(text: &str) -> Result<Vec<(f64, f64)>, Failure> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| match parse_numbers(pair, ',')?.as_slice() {
            [lat, lon] => Ok((*lat, *lon)),
            _ => Err(Failure::Invalid(format!("polygon vertex `{pair}` is not `lat,lon`"))),
        })
        .collect()
}

fn parse_numbers(text: &str, sep: char) -> Result<Vec<f64>, Failure> {
    text.split(sep)
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Invalid(format!("`{s}` is not a number"))))
        .collect()
}

/// Instants such as `2021-12-21T08:00Z`, `2021-12-21T08:00:00Z` or full RFC 3339.
pub fn parse_instant(text: &str) -> Result<DateTime<Utc>, Failure> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.with_timezone(&Utc));
    }
    let bare = text.strip_suffix('Z').unwrap_or(text);
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(bare, fmt) {
            return Ok(t.and_utc());
        }
    }
    Err(Failure::Invalid(format!("`{text}` is not a UTC instant")))
}

/// Durations such as `10m`, `1h`, `90s`; a bare number means minutes.
pub fn parse_step(text: &str) -> Result<Duration, Failure> {
    let bad = || Failure::Invalid(format!("`{text}` is not a duration (e.g. 10m, 1h, 30s)"));
    let t = text.trim();
    let (num, unit) = match t.char_indices().find(|(_, c)| c.is_ascii_alphabetic()) {
        Some((i, _)) => (&t[..i], &t[i..]),
        None => (t, "m"),
    };
    let n: f64 = num.parse().map_err(|_| bad())?;
    let seconds = match unit {
        "s" => n,
        "m" | "min" => n * 60.0,
        "h" => n * 3600.0,
        _ => return Err(bad()),
    };
    if seconds.is_nan() || seconds <= 0.0 {
        return Err(bad());
    }
    Ok(Duration::milliseconds((seconds * 1000.0).round() as i64))
}

pub fn parse_kind(text: &str) -> Result<PhysicalKind, Failure> {
    serde_json::from_value(Value::String(text.to_owned()))
        .map_err(|_| Failure::Invalid(format!("unknown layer kind `{text}` (mesh3d, polygons2d, lines, grid)")))
}

pub fn parse_classes(text: &str) -> Result<std::collections::BTreeSet<FeatureClass>, Failure> {
    text.split(',')
        .map(|s| FeatureClass::parse(s.trim()).ok_or_else(|| Failure::Invalid(format!("unknown feature class `{s}`"))))
        .collect()
}

fn frame_for(catalog: &WorkspaceCatalog, center: Option<(f64, f64)>) -> Result<LocalFrame, Failure> {
    match (catalog.frame(), center) {
        (Some(f), _) => Ok(f),
        (None, Some((lat, lon))) => Ok(LocalFrame::new(lat, lon)),
        (None, None) => Err(Failure::Invalid("cannot choose a workspace origin: no data".into())),
    }
}

fn saved(catalog: &mut WorkspaceCatalog, layer: Layer) -> Result<String, Failure> {
    let entry = catalog.save(&layer)?;
    Ok(format!("{} -> {}", entry.name, entry.path.display()))
}

pub struct OsmOptions {
    pub region: Region,
    pub layers: Option<String>,
    pub default_height: Option<f64>,
    pub meters_per_level: Option<f64>,
}

/// Ingests an Overpass JSON extract; one layer per feature class.
pub fn ingest_osm_extract(
    extract: &OsmExtract,
    options: OsmOptions,
    workspace: &Path,
    geocoder: &dyn Geocoder,
) -> Result<Vec<String>, Failure> {
    let mut catalog = open_workspace(workspace)?;
    let mut config = IngestConfig::new(options.region.resolve(geocoder)?);
    if let Some(l) = &options.layers {
        config.layers = parse_classes(l)?;
    }
    if let Some(h) = options.default_height {
        config.default_building_height = h;
    }
    if let Some(m) = options.meters_per_level {
        config.meters_per_level = m;
    }
    config.validate()?;
    let frame = frame_for(&catalog, config.region.center())?;
    let result = ingest_osm(extract, &config, &frame)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    result.layers.into_iter().map(|l| saved(&mut catalog, Layer::Physical(l))).collect()
}

pub fn ingest_geojson_file(path: &Path, name: &str, kind: PhysicalKind, workspace: &Path) -> Result<String, Failure> {
    let text = read_text(path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let mut catalog = open_workspace(workspace)?;
    let frame = frame_for(&catalog, geojson_center(&doc))?;
    let (layer, warnings) = ingest_geojson(&doc, name, kind, &frame)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    saved(&mut catalog, Layer::Physical(layer))
}

/// Centre of the bounding box of every `[lon, lat, ...]` position.
fn geojson_center(doc: &Value) -> Option<(f64, f64)> {
    fn walk(v: &Value, b: &mut Option<(f64, f64, f64, f64)>) {
        match v {
            Value::Array(a) if a.len() >= 2 && a.iter().all(Value::is_number) => {
                let (lon, lat) = (a[0].as_f64().unwrap_or(0.0), a[1].as_f64().unwrap_or(0.0));
                *b = Some(match *b {
                    None => (lat, lon, lat, lon),
                    Some((a0, o0, a1, o1)) => (a0.min(lat), o0.min(lon), a1.max(lat), o1.max(lon)),
                });
            }
            Value::Array(a) => a.iter().for_each(|x| walk(x, b)),
            Value::Object(m) => {
                for (k, x) in m {
                    if k != "properties" {
                        walk(x, b);
                    }
                }
            }
            _ => {}
        }
    }
    let mut b = None;
    walk(doc, &mut b);
    b.map(|(a0, o0, a1, o1)| ((a0 + a1) / 2.0, (o0 + o1) / 2.0))
}

pub fn ingest_csv_file(path: &Path, name: &str, columns: &ColumnMap, workspace: &Path) -> Result<String, Failure> {
    let mut catalog = open_workspace(workspace)?;
    let (layer, warnings) = ingest_csv(path, name, columns)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    saved(&mut catalog, Layer::Thematic(layer))
}

pub fn ingest_grid(name: &str, bbox: &GeoBox, cell: f64, max_cells: usize, workspace: &Path) -> Result<String, Failure> {
    let mut catalog = open_workspace(workspace)?;
    let frame = frame_for(&catalog, Some(bbox.center()))?;
    let layer = make_grid(name, bbox, cell, &frame, max_cells)?;
    saved(&mut catalog, Layer::Physical(layer))
}

pub struct ShadowOptions {
    pub layer: String,
    pub occluders: Vec<String>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
    pub step: Duration,
    pub max_edge: f64,
    pub name: Option<String>,
}

/// Accumulates shadow over the samples of `layer` and saves the thematic
/// result. Mesh layers are sampled on their surfaces and grid layers at
/// cell centres. Mesh layers shadow themselves; `occluders` add more.
pub fn shadow(options: &ShadowOptions, workspace: &Path) -> Result<String, Failure> {
    let mut catalog = open_workspace(workspace)?;
    let layer = catalog.load(&options.layer)?;
    let target = layer
        .as_physical()
        .ok_or_else(|| Failure::Invalid(format!("`{}` is not a physical layer", options.layer)))?;
    let samples = match target.kind {
        PhysicalKind::Mesh3d => sample_surfaces(target, options.max_edge),
        PhysicalKind::Grid => sample_cells(target),
        other => {
            return Err(Failure::Invalid(format!(
                "shadow needs a mesh3d or grid layer; `{}` is {}",
                options.layer,
                other.as_str()
            )))
        }
    };
    let mut loaded = Vec::new();
    for name in &options.occluders {
        loaded.push(catalog.load(name)?);
    }
    let mut scene_layers: Vec<&urbankit::PhysicalLayer> = Vec::new();
    if target.kind == PhysicalKind::Mesh3d {
        scene_layers.push(target);
    }
    for (name, l) in options.occluders.iter().zip(&loaded) {
        scene_layers.push(l.as_physical().ok_or_else(|| Failure::Invalid(format!("`{name}` is not a physical layer")))?);
    }
    let scene = if scene_layers.is_empty() { Bvh::empty() } else { Bvh::from_layers(&scene_layers)? };
    let frame = target.crs_origin;
    let (lat, lon) = (options.lat.unwrap_or(frame.origin_lat), options.lon.unwrap_or(frame.origin_lon));
    let path = SunPath::over(lat, lon, options.from, options.to, options.step)?;
    let result = accumulate_shadow(&samples, &scene, &path)?;
    let name = options.name.clone().unwrap_or_else(|| format!("shadow_{}", target.name));
    let out = result.to_layer(&name, &samples, &frame);
    let line = saved(&mut catalog, Layer::Thematic(out))?;
    Ok(format!(
        "{line} ({} samples, {} of {} instants above the horizon, {} accumulation minutes)",
        samples.len(),
        result.above_horizon_instants,
        path.len(),
        result.accumulation_minutes
    ))
}
