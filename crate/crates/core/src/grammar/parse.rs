//! JSON document to [`Specification`], with JSON-pointer paths on every
//! error.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::{Map, Value};
use thiserror::Error;

use super::types::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: unknown field")]
    UnknownField { path: String },
    #[error("{path}: expected {expected}")]
    WrongType { path: String, expected: &'static str },
}

impl ParseError {
    pub fn path(&self) -> &str {
        match self {
            ParseError::Syntax { path, .. } | ParseError::UnknownField { path } | ParseError::WrongType { path, .. } => {
                path
            }
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::UnknownField { .. } => "UnknownField",
            ParseError::WrongType { .. } => "WrongType",
        }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

fn syntax(path: &str, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { path: path.to_owned(), message: message.into() }
}

fn wrong(path: &str, expected: &'static str) -> ParseError {
    ParseError::WrongType { path: path.to_owned(), expected }
}

pub(crate) fn child(path: &str, key: impl std::fmt::Display) -> String {
    let key = key.to_string().replace('~', "~0").replace('/', "~1");
    format!("{path}/{key}")
}

/// A JSON object whose keys have been checked against an allow-list.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: &str, allowed: &[&str]) -> Result<Obj<'a>> {
        let map = v.as_object().ok_or_else(|| wrong(path, "object"))?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ParseError::UnknownField { path: child(path, k) });
        }
        Ok(Obj { map, path: path.to_owned() })
    }

    fn at(&self, key: &str) -> String {
        child(&self.path, key)
    }

    fn opt(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn req(&self, key: &str) -> Result<&'a Value> {
        self.map.get(key).ok_or_else(|| syntax(&self.path_or_root(), format!("missing required field `{key}`")))
    }

    fn path_or_root(&self) -> String {
        if self.path.is_empty() {
            "/".to_owned()
        } else {
            self.path.clone()
        }
    }

    fn req_str(&self, key: &str) -> Result<&'a str> {
        self.req(key)?.as_str().ok_or_else(|| wrong(&self.at(key), "string"))
    }

    fn opt_str(&self, key: &str) -> Result<Option<&'a str>> {
        self.opt(key).map(|v| v.as_str().ok_or_else(|| wrong(&self.at(key), "string"))).transpose()
    }

    fn req_array(&self, key: &str) -> Result<&'a Vec<Value>> {
        self.req(key)?.as_array().ok_or_else(|| wrong(&self.at(key), "array"))
    }

    fn opt_array(&self, key: &str) -> Result<Option<&'a Vec<Value>>> {
        self.opt(key).map(|v| v.as_array().ok_or_else(|| wrong(&self.at(key), "array"))).transpose()
    }

    fn opt_keyword<T: FromStr<Err = String>>(&self, key: &str) -> Result<Option<T>> {
        self.opt_str(key)?.map(|s| s.parse().map_err(|m| syntax(&self.at(key), m))).transpose()
    }
}

fn number_array<const N: usize>(v: &Value, path: &str, expected: &'static str) -> Result<[f64; N]> {
    let arr = v.as_array().filter(|a| a.len() == N).ok_or_else(|| wrong(path, expected))?;
    let mut out = [0.0; N];
    for (i, x) in arr.iter().enumerate() {
        out[i] = x.as_f64().ok_or_else(|| wrong(&child(path, i), "number"))?;
    }
    Ok(out)
}

/// Parses a specification document.
pub fn parse_spec(text: &str) -> Result<Specification> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| syntax("", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column())))?;
    parse_value(&doc)
}

pub fn parse_value(doc: &Value) -> Result<Specification> {
    let root = Obj::new(doc, "", &["grammar_version", "cameras", "views", "knots"])?;
    let views_v = root.req_array("views")?;
    let cameras_v = root.req_array("cameras")?;
    let knots_v = root.req_array("knots")?;
    let version = root.req_str("grammar_version")?;
    if version != GRAMMAR_VERSION {
        return Err(syntax(
            "/grammar_version",
            format!("unsupported grammar version `{version}` (supported: {GRAMMAR_VERSION})"),
        ));
    }
    let cameras = cameras_v.iter().enumerate().map(|(i, v)| parse_camera(v, &child("/cameras", i))).collect::<Result<_>>()?;
    let views = views_v.iter().enumerate().map(|(i, v)| parse_view(v, &child("/views", i))).collect::<Result<_>>()?;
    let knots = knots_v.iter().enumerate().map(|(i, v)| parse_knot(v, &child("/knots", i))).collect::<Result<_>>()?;
    Ok(Specification { grammar_version: version.to_owned(), cameras, views, knots })
}

fn parse_camera(v: &Value, path: &str) -> Result<CameraDef> {
    let o = Obj::new(v, path, &["camera_id", "position", "direction"])?;
    Ok(CameraDef {
        camera_id: o.req_str("camera_id")?.to_owned(),
        position: number_array(o.req("position")?, &o.at("position"), "array of 3 numbers")?,
        direction: number_array(o.req("direction")?, &o.at("direction"), "array of 3 numbers")?,
    })
}

fn parse_view(v: &Value, path: &str) -> Result<ViewDef> {
    let o = Obj::new(v, path, &["map", "plots"])?;
    let map_path = o.at("map");
    let m = Obj::new(o.req("map")?, &map_path, &["camera_id", "knots"])?;
    let knots = m
        .req_array("knots")?
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let bp = child(&m.at("knots"), i);
            let b = Obj::new(b, &bp, &["knot_id", "interaction"])?;
            Ok(KnotBinding { knot_id: b.req_str("knot_id")?.to_owned(), interaction: b.opt_keyword("interaction")? })
        })
        .collect::<Result<_>>()?;
    let map = MapDef { camera_id: m.req_str("camera_id")?.to_owned(), knots };
    let plots = match o.opt_array("plots")? {
        None => Vec::new(),
        Some(arr) => arr.iter().enumerate().map(|(i, p)| parse_plot(p, &child(&o.at("plots"), i))).collect::<Result<_>>()?,
    };
    Ok(ViewDef { map, plots })
}

fn parse_plot(v: &Value, path: &str) -> Result<PlotDef> {
    let o = Obj::new(v, path, &["chart_spec", "knots", "interaction", "args"])?;
    let knots = o
        .req_array("knots")?
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let bp = child(&o.at("knots"), i);
            let b = Obj::new(b, &bp, &["knot_id", "arrangement"])?;
            Ok(PlotBinding { knot_id: b.req_str("knot_id")?.to_owned(), arrangement: b.opt_keyword("arrangement")? })
        })
        .collect::<Result<_>>()?;
    let args = match o.opt("args") {
        None => BTreeMap::new(),
        Some(a) => a
            .as_object()
            .ok_or_else(|| wrong(&o.at("args"), "object"))?
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    };
    Ok(PlotDef { chart_spec: o.req("chart_spec")?.clone(), knots, interaction: o.opt_keyword("interaction")?, args })
}

fn parse_knot(v: &Value, path: &str) -> Result<KnotDef> {
    let o = Obj::new(v, path, &["name", "schemes", "operation", "filter", "color_scale"])?;
    let name = o.req_str("name")?.to_owned();
    let mut operation = o.opt("operation").map(|op| parse_operation(op, &o.at("operation"))).transpose()?;
    let mut schemes = Vec::new();
    if let Some(arr) = o.opt_array("schemes")? {
        if arr.is_empty() {
            return Err(syntax(&o.at("schemes"), "a knot needs at least one integration scheme"));
        }
        for (i, s) in arr.iter().enumerate() {
            match parse_scheme(s, &child(&o.at("schemes"), i))? {
                SchemeForm::Join(def) => schemes.push(def),
                SchemeForm::Operation(op) => {
                    let sp = child(&o.at("schemes"), i);
                    if arr.len() != 1 || operation.is_some() {
                        return Err(syntax(
                            &sp,
                            "an expression scheme must be the only scheme of a knot without an `operation` field",
                        ));
                    }
                    operation = Some(op);
                }
            }
        }
    }
    if schemes.is_empty() && operation.is_none() {
        return Err(syntax(path, "a knot needs `schemes` or an `operation`"));
    }
    if !schemes.is_empty() && operation.is_some() {
        return Err(syntax(path, "a knot is either a join knot or an operation knot, not both"));
    }
    let filter = o.opt("filter").map(|f| parse_filter(f, &o.at("filter"))).transpose()?;
    let color_scale = o.opt("color_scale").map(|c| parse_color_scale(c, &o.at("color_scale"))).transpose()?;
    Ok(KnotDef { name, schemes, operation, filter, color_scale })
}

fn parse_operation(v: &Value, path: &str) -> Result<OperationDef> {
    let o = Obj::new(v, path, &["expression", "inputs", "relation"])?;
    let inputs = o
        .req_array("inputs")?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let ip = child(&o.at("inputs"), i);
            let x = Obj::new(x, &ip, &["knot", "as"])?;
            Ok(KnotInput { knot: x.req_str("knot")?.to_owned(), alias: x.opt_str("as")?.map(str::to_owned) })
        })
        .collect::<Result<Vec<_>>>()?;
    if inputs.is_empty() {
        return Err(syntax(&o.at("inputs"), "an operation needs at least one input knot"));
    }
    Ok(OperationDef {
        expression: o.req_str("expression")?.to_owned(),
        inputs,
        relation: o.opt_keyword("relation")?,
    })
}

enum SchemeForm {
    Join(IntegrationSchemeDef),
    Operation(OperationDef),
}

fn parse_ref(v: &Value, path: &str) -> Result<(DataRef, Option<String>)> {
    let o = Obj::new(v, path, &["layer", "knot", "as"])?;
    let alias = o.opt_str("as")?.map(str::to_owned);
    match (o.opt_str("layer")?, o.opt_str("knot")?) {
        (Some(l), None) => Ok((DataRef::Layer(l.to_owned()), alias)),
        (None, Some(k)) => Ok((DataRef::Knot(k.to_owned()), alias)),
        _ => Err(syntax(path, "a reference names exactly one of `layer` or `knot`")),
    }
}

fn parse_scheme(v: &Value, path: &str) -> Result<SchemeForm> {
    let o = Obj::new(v, path, &["in", "out", "relation", "out_level", "operation"])?;
    let input = o.opt("in").map(|r| parse_ref(r, &o.at("in"))).transpose()?;
    let output = parse_ref(o.req("out")?, &o.at("out"))?;
    let relation: Option<SpatialRelation> = o.opt_keyword("relation")?;

    if let Some(op) = o.opt("operation").filter(|op| op.is_object()) {
        let op_path = o.at("operation");
        let op = Obj::new(op, &op_path, &["expression"])?;
        let expression = op.req_str("expression")?.to_owned();
        let as_input = |r: Option<(DataRef, Option<String>)>, at: &str| match r {
            Some((DataRef::Knot(knot), alias)) => Ok(KnotInput { knot, alias }),
            Some((DataRef::Layer(_), _)) => Err(syntax(at, "expression operations combine knots, not layers")),
            None => Err(syntax(at, "expression operations need both `in` and `out` knots")),
        };
        let first = as_input(input, &o.at("in"))?;
        let second = as_input(Some(output), &o.at("out"))?;
        if o.opt("out_level").is_some() {
            return Err(syntax(&o.at("out_level"), "an expression scheme has no out_level"));
        }
        return Ok(SchemeForm::Operation(OperationDef { expression, inputs: vec![first, second], relation }));
    }

    let no_alias = |r: &Option<String>, at: &str| match r {
        Some(_) => Err(syntax(&child(at, "as"), "aliases are only allowed on expression operands")),
        None => Ok(()),
    };
    let input = match input {
        Some((r, alias)) => {
            no_alias(&alias, &o.at("in"))?;
            Some(r)
        }
        None => None,
    };
    no_alias(&output.1, &o.at("out"))?;
    Ok(SchemeForm::Join(IntegrationSchemeDef {
        input,
        output: output.0,
        relation,
        out_level: o.opt_keyword("out_level")?,
        operation: o.opt_keyword("operation")?,
    }))
}

fn parse_filter(v: &Value, path: &str) -> Result<FilterDef> {
    let o = Obj::new(v, path, &["bounding_box", "address"])?;
    match (o.opt("bounding_box"), o.opt_str("address")?) {
        (Some(b), None) => Ok(FilterDef::BoundingBox(number_array(
            b,
            &o.at("bounding_box"),
            "array of 4 numbers [lat_min, lon_min, lat_max, lon_max]",
        )?)),
        (None, Some(a)) => Ok(FilterDef::Address(a.to_owned())),
        _ => Err(syntax(path, "a filter is exactly one of `bounding_box` or `address`")),
    }
}

fn parse_color_scale(v: &Value, path: &str) -> Result<ColorScaleDef> {
    let o = Obj::new(v, path, &["scheme", "domain", "no_data_color"])?;
    let mut def = ColorScaleDef::default();
    if let Some(s) = o.opt_keyword("scheme")? {
        def.scheme = s;
    }
    match o.opt("domain") {
        None => {}
        Some(Value::String(s)) if s == "auto" => def.domain = None,
        Some(d) => {
            let [lo, hi] = number_array(d, &o.at("domain"), "\"auto\" or [lo, hi]")?;
            def.domain = Some((lo, hi));
        }
    }
    if let Some(c) = o.opt_str("no_data_color")? {
        def.no_data_color = c.to_owned();
    }
    Ok(def)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
        "grammar_version": "1.0",
        "cameras": [{"camera_id": "c", "position": [0, 0, 500], "direction": [0, 0, -1]}],
        "views": [{"map": {"camera_id": "c", "knots": [{"knot_id": "noise2zip", "interaction": "pick"}]}}],
        "knots": [{"name": "noise2zip", "schemes": [
            {"in": {"layer": "noise"}, "out": {"layer": "zip"}, "relation": "contains", "operation": "sum"}
        ]}]
    }"#;

    #[test]
    fn parses_example_three_knot() {
        let spec = parse_spec(MIN).unwrap();
        let k = &spec.knots[0];
        assert_eq!(k.name, "noise2zip");
        assert_eq!(k.schemes[0].input, Some(DataRef::Layer("noise".into())));
        assert_eq!(k.schemes[0].output, DataRef::Layer("zip".into()));
        assert_eq!(k.schemes[0].relation, Some(SpatialRelation::Contains));
        assert_eq!(k.schemes[0].operation, Some(AggregationKind::Sum));
    }

    #[test]
    fn empty_document_reports_missing_views() {
        let err = parse_spec("{}").unwrap_err();
        assert!(matches!(&err, ParseError::Syntax { message, .. } if message.contains("`views`")), "{err}");
    }

    #[test]
    fn scheme_expression_becomes_operation_knot() {
        let text = MIN.replace(
            r#"{"name": "noise2zip", "schemes"#,
            r#"{"name": "diff", "schemes": [{"in": {"knot": "knot_s0"}, "out": {"knot": "knot_s1"},
                "relation": "nearest", "operation": {"expression": "knot_s0-knot_s1"}}]},
               {"name": "noise2zip", "schemes"#,
        );
        let spec = parse_spec(&text).unwrap();
        let op = spec.knots[0].operation.as_ref().unwrap();
        assert!(spec.knots[0].schemes.is_empty());
        assert_eq!(op.expression, "knot_s0-knot_s1");
        let names: Vec<&str> = op.inputs.iter().map(|i| i.knot.as_str()).collect();
        assert_eq!(names, ["knot_s0", "knot_s1"]);
        assert_eq!(op.relation, Some(SpatialRelation::Nearest));
    }

    #[test]
    fn unknown_field_carries_path() {
        let text = MIN.replace(r#""relation": "contains""#, r#""relation": "contains", "weight": 2"#);
        assert_eq!(parse_spec(&text).unwrap_err(), ParseError::UnknownField { path: "/knots/0/schemes/0/weight".into() });
    }

    #[test]
    fn keyword_outside_enumeration_is_rejected() {
        let text = MIN.replace(r#""relation": "contains""#, r#""relation": "touches""#);
        let err = parse_spec(&text).unwrap_err();
        assert_eq!(err.path(), "/knots/0/schemes/0/relation");
        let text = MIN.replace(r#""operation": "sum""#, r#""operation": "median""#);
        assert_eq!(parse_spec(&text).unwrap_err().path(), "/knots/0/schemes/0/operation");
    }

    #[test]
    fn wrong_types_are_reported() {
        let text = MIN.replace(r#""position": [0, 0, 500]"#, r#""position": [0, 0]"#);
        assert!(matches!(parse_spec(&text).unwrap_err(), ParseError::WrongType { path, .. } if path == "/cameras/0/position"));
        let text = MIN.replace(r#""knots": [{"knot_id""#, r#""knots": {"knot_id""#).replace(r#""pick"}]}"#, r#""pick"}}"#);
        assert!(matches!(parse_spec(&text).unwrap_err(), ParseError::WrongType { path, .. } if path == "/views/0/map/knots"));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = MIN.replace(r#""1.0""#, r#""2.0""#);
        assert_eq!(parse_spec(&text).unwrap_err().path(), "/grammar_version");
    }

    #[test]
    fn alias_on_join_reference_is_rejected() {
        let text = MIN.replace(r#"{"layer": "noise"}"#, r#"{"layer": "noise", "as": "n"}"#);
        assert_eq!(parse_spec(&text).unwrap_err().path(), "/knots/0/schemes/0/in/as");
    }
}
