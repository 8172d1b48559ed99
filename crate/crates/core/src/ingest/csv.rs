//! Thematic point tables from CSV.

use std::path::Path;

use super::IngestError;
use crate::layer::{ThematicLayer, ThematicPoint};
use crate::scalar::Scalar;

/// Header names of the columns to read.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub lat: String,
    pub lon: String,
    pub height: Option<String>,
    pub value: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap { lat: "lat".into(), lon: "lon".into(), height: None, value: "value".into() }
    }
}

pub fn ingest_csv(path: &Path, name: &str, columns: &ColumnMap) -> Result<(ThematicLayer, Vec<String>), IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io { path: path.display().to_string(), source: e })?;
    ingest_csv_str(&text, name, columns)
}

/// A value column is numeric when its first non-empty cell parses as a
/// number; numeric columns map unparseable cells to null with a warning,
/// other columns keep text. Empty cells are null.
pub fn ingest_csv_str(text: &str, name: &str, columns: &ColumnMap) -> Result<(ThematicLayer, Vec<String>), IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| IngestError::Parse(e.to_string()))?.clone();
    let column = |c: &str| headers.iter().position(|h| h == c).ok_or_else(|| IngestError::MissingColumn(c.to_owned()));
    let lat_i = column(&columns.lat)?;
    let lon_i = column(&columns.lon)?;
    let value_i = column(&columns.value)?;
    let height_i = columns.height.as_deref().map(column).transpose()?;
    let mut warnings = Vec::new();
    let mut points = Vec::new();
    let mut numeric: Option<bool> = None;
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| IngestError::Parse(format!("line {line}: {e}")))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let (Ok(lat), Ok(lon)) = (field(lat_i).parse::<f64>(), field(lon_i).parse::<f64>()) else {
            warnings.push(format!("line {line}: unparseable coordinates, row skipped"));
            continue;
        };
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            warnings.push(format!("line {line}: coordinates out of range, row skipped"));
            continue;
        }
        let height = match height_i.map(field) {
            None | Some("") => 0.0,
            Some(h) => h.parse::<f64>().ok().filter(|h| h.is_finite()).unwrap_or_else(|| {
                warnings.push(format!("line {line}: unparseable height `{h}`, using 0"));
                0.0
            }),
        };
        let raw = field(value_i);
        let value = if raw.is_empty() {
            Scalar::Null
        } else {
            let parsed = raw.parse::<f64>().ok().filter(|v| v.is_finite());
            match *numeric.get_or_insert(parsed.is_some()) {
                true => parsed.map(Scalar::number).unwrap_or_else(|| {
                    warnings.push(format!("line {line}: unparseable number `{raw}` stored as null"));
                    Scalar::Null
                }),
                false => Scalar::text(raw),
            }
        };
        points.push(ThematicPoint { lat, lon, height, value });
    }
    if points.is_empty() {
        warnings.push(format!("layer `{name}` has no data rows"));
    }
    Ok((ThematicLayer::new(name, points), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_numeric_rows() {
        let with_height = ColumnMap { height: Some("height".into()), ..Default::default() };
        let (l, w) = ingest_csv_str("lat,lon,height,value\n41.88,-87.63,0,3.5\n", "t", &with_height).unwrap();
        assert!(w.is_empty());
        assert_eq!(l.points, vec![ThematicPoint { lat: 41.88, lon: -87.63, height: 0.0, value: Scalar::number(3.5) }]);
    }

    #[test]
    fn text_values_stay_text() {
        let (l, _) = ingest_csv_str("lat,lon,value\n1,2,brick\n3,4,\n5,6,conc\n", "t", &ColumnMap::default()).unwrap();
        let v: Vec<_> = l.points.iter().map(|p| p.value.clone()).collect();
        assert_eq!(v, vec![Scalar::text("brick"), Scalar::Null, Scalar::text("conc")]);
        assert_eq!(l.points[0].height, 0.0);
    }

    #[test]
    fn bad_number_becomes_null() {
        let (l, w) = ingest_csv_str("lat,lon,value\n1,2,3\n3,4,n/a\n", "t", &ColumnMap::default()).unwrap();
        assert_eq!(l.points[1].value, Scalar::Null);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn header_only_warns() {
        let (l, w) = ingest_csv_str("lat,lon,value\n", "t", &ColumnMap::default()).unwrap();
        assert!(l.points.is_empty());
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn missing_column() {
        let cols = ColumnMap { value: "shadow".into(), ..Default::default() };
        assert!(matches!(ingest_csv_str("lat,lon,value\n", "t", &cols), Err(IngestError::MissingColumn(c)) if c == "shadow"));
    }
}
