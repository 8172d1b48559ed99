use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::GeoBox;

/// The only grammar version this parser accepts.
pub const GRAMMAR_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Specification {
    pub grammar_version: String,
    pub cameras: Vec<CameraDef>,
    pub views: Vec<ViewDef>,
    pub knots: Vec<KnotDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewDef {
    pub map: MapDef,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub plots: Vec<PlotDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapDef {
    pub camera_id: String,
    pub knots: Vec<KnotBinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotBinding {
    pub knot_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CameraDef {
    pub camera_id: String,
    pub position: [f64; 3],
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotDef {
    pub name: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub schemes: Vec<IntegrationSchemeDef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<OperationDef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterDef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color_scale: Option<ColorScaleDef>,
}

/// Element-wise expression over knots sharing one physical layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationDef {
    pub expression: String,
    pub inputs: Vec<KnotInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation: Option<SpatialRelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotInput {
    pub knot: String,
    #[serde(rename = "as", skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
}

impl KnotInput {
    /// Identifier the expression uses for this input.
    pub fn binding_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.knot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrationSchemeDef {
    /// Omitted on chained schemes: the previous scheme's result feeds this one.
    #[serde(rename = "in", skip_serializing_if = "Option::is_none")]
    pub input: Option<DataRef>,
    #[serde(rename = "out")]
    pub output: DataRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation: Option<SpatialRelation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_level: Option<Level>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<AggregationKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataRef {
    Layer(String),
    Knot(String),
}

impl DataRef {
    pub fn name(&self) -> &str {
        match self {
            DataRef::Layer(n) | DataRef::Knot(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDef {
    BoundingBox([f64; 4]),
    Address(String),
}

impl FilterDef {
    pub fn geo_box(&self) -> Option<GeoBox> {
        match self {
            FilterDef::BoundingBox([a, b, c, d]) => Some(GeoBox::new(*a, *b, *c, *d)),
            FilterDef::Address(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotDef {
    pub chart_spec: serde_json::Value,
    pub knots: Vec<PlotBinding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction: Option<InteractionKind>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub args: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotBinding {
    pub knot_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arrangement: Option<Arrangement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorScaleDef {
    pub scheme: ColorScheme,
    #[serde(with = "domain_serde")]
    pub domain: Option<(f64, f64)>,
    pub no_data_color: String,
}

impl Default for ColorScaleDef {
    fn default() -> Self {
        ColorScaleDef { scheme: ColorScheme::Sequential, domain: None, no_data_color: "#cccccc".to_owned() }
    }
}

mod domain_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<(f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some((lo, hi)) => [lo, hi].serialize(s),
            None => s.serialize_str("auto"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<(f64, f64)>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Auto(String),
            Range([f64; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Auto(s) if s == "auto" => Ok(None),
            Raw::Auto(s) => Err(serde::de::Error::custom(format!("unknown domain `{s}`"))),
            Raw::Range([lo, hi]) => Ok(Some((lo, hi))),
        }
    }
}

/// Declares a closed keyword enumeration with its JSON spelling.
macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($name),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

keyword_enum!(InteractionKind { Brush => "brush", Pick => "pick", None => "none" });

keyword_enum!(
    /// Join predicate of an integration scheme.
    SpatialRelation {
        Nearest => "nearest",
        Contains => "contains",
        Within => "within",
        Intersects => "intersects",
        Direct => "direct",
        InnerAggregate => "inner_aggregate",
    }
);

keyword_enum!(AggregationKind { Min => "min", Max => "max", Sum => "sum", Mean => "mean", Count => "count" });

keyword_enum!(Level { Coordinates => "coordinates", Objects => "objects" });

keyword_enum!(Arrangement {
    Linked => "linked",
    EmbeddedSurface => "embedded_surface",
    EmbeddedFootprint => "embedded_footprint",
});

keyword_enum!(ColorScheme { Sequential => "sequential", Diverging => "diverging", Categorical => "categorical" });

impl SpatialRelation {
    /// Relations whose natural multiplicity is 1:n and therefore always
    /// need an aggregation.
    pub fn always_one_to_many(self) -> bool {
        matches!(self, SpatialRelation::Contains | SpatialRelation::Intersects | SpatialRelation::InnerAggregate)
    }
}
