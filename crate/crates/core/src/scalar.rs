use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A single data value carried by thematic layers and knots.
///
/// Numbers are always finite; a NaN or infinite input collapses to `Null`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Scalar {
    Number(f64),
    Text(String),
    #[default]
    Null,
}

impl Scalar {
    /// Builds a number, mapping non-finite input to `Null`.
    pub fn number(v: f64) -> Scalar {
        if v.is_finite() {
            Scalar::Number(v)
        } else {
            Scalar::Null
        }
    }

    pub fn text(s: impl Into<String>) -> Scalar {
        Scalar::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Scalar::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Scalar::Number(_) => "number",
            Scalar::Text(_) => "text",
            Scalar::Null => "null",
        }
    }

    /// Bitwise identity, treating `0.0` and `-0.0` as different values.
    pub fn identical(&self, other: &Scalar) -> bool {
        match (self, other) {
            (Scalar::Number(a), Scalar::Number(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::number(v)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_owned())
    }
}

impl From<String> for Scalar {
    fn from(s: String) -> Self {
        Scalar::Text(s)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Number(v) => write!(f, "{v}"),
            Scalar::Text(s) => f.write_str(s),
            Scalar::Null => Ok(()),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Number(v) => serializer.serialize_f64(*v),
            Scalar::Text(s) => serializer.serialize_str(s),
            Scalar::Null => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        Scalar::try_from(&value).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<&serde_json::Value> for Scalar {
    type Error = String;

    fn try_from(value: &serde_json::Value) -> Result<Self, Self::Error> {
        match value {
            serde_json::Value::Null => Ok(Scalar::Null),
            serde_json::Value::Number(n) => Ok(n.as_f64().map(Scalar::number).unwrap_or(Scalar::Null)),
            serde_json::Value::String(s) => Ok(Scalar::Text(s.clone())),
            serde_json::Value::Bool(b) => Ok(Scalar::Number(if *b { 1.0 } else { 0.0 })),
            other => Err(format!("expected number, text or null, found {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_becomes_null() {
        assert_eq!(Scalar::number(f64::NAN), Scalar::Null);
        assert_eq!(Scalar::number(f64::INFINITY), Scalar::Null);
        assert_eq!(Scalar::number(2.5), Scalar::Number(2.5));
    }

    #[test]
    fn json_shape() {
        let values = vec![Scalar::Number(1.5), Scalar::text("brick"), Scalar::Null];
        let text = serde_json::to_string(&values).unwrap();
        assert_eq!(text, r#"[1.5,"brick",null]"#);
        let back: Vec<Scalar> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn identical_distinguishes_signed_zero() {
        assert!(!Scalar::Number(0.0).identical(&Scalar::Number(-0.0)));
        assert!(Scalar::Null.identical(&Scalar::Null));
    }
}
