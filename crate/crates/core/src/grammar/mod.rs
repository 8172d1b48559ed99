//! The declarative specification: types, parser, validation and canonical
//! form.

mod canonical;
mod parse;
mod types;
mod validate;

pub use canonical::{canonicalize, serialize_spec};
pub use parse::{parse_spec, parse_value, ParseError};
pub use types::*;
pub use validate::{
    has_errors, resolve_shapes, validate_spec, Diagnostic, FootprintArgs, KnotShape, Severity,
};

/// Machine-readable schema of the document format.
pub const SCHEMA: &str = include_str!("schema.json");
