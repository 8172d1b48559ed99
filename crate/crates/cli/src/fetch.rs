//! Optional network access: live Overpass queries and address lookup.
//! Nothing else in the crate touches the network.

use std::time::Duration;

use serde_json::Value;
use urbankit::ingest::{OsmExtract, Region};
use urbankit::knot::Geocoder;
use urbankit::GeoBox;

use crate::Failure;

pub const OVERPASS_URL: &str = "https://overpass-api.de/api/interpreter";
pub const NOMINATIM_URL: &str = "https://nominatim.openstreetmap.org/search";

/// The endpoint named by environment variable `var`, else `default`.
fn endpoint(var: &str, default: &str) -> String {
    std::env::var(var).ok().filter(|v| !v.is_empty()).unwrap_or_else(|| default.to_owned())
}

fn agent() -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(Duration::from_secs(180)).user_agent("urbankit/0.1").build()
}

/// Overpass QL for every feature class inside `bbox`.
pub fn overpass_query(bbox: &GeoBox) -> String {
    let b = format!("{},{},{},{}", bbox.lat_min, bbox.lon_min, bbox.lat_max, bbox.lon_max);
    format!(
        "[out:json][timeout:120];(way[\"building\"]({b});way[\"building:part\"]({b});\
         relation[\"building\"]({b});way[\"leisure\"]({b});way[\"landuse\"]({b});relation[\"landuse\"]({b});\
         way[\"natural\"=\"water\"]({b});relation[\"natural\"=\"water\"]({b});way[\"waterway\"]({b});\
         way[\"highway\"]({b}););(._;>;);out body;"
    )
}

fn region_box(region: &Region) -> Result<GeoBox, Failure> {
    match region {
        Region::BoundingBox(b) => Ok(*b),
        Region::Polygon(v) => {
            let lat = v.iter().map(|p| p.0);
            let lon = v.iter().map(|p| p.1);
            Ok(GeoBox::new(
                lat.clone().fold(f64::INFINITY, f64::min),
                lon.clone().fold(f64::INFINITY, f64::min),
                lat.fold(f64::NEG_INFINITY, f64::max),
                lon.fold(f64::NEG_INFINITY, f64::max),
            ))
        }
        Region::Address(a) => Err(Failure::Invalid(format!("address `{a}` must be geocoded before fetching"))),
    }
}

pub fn fetch_overpass(region: &Region) -> Result<OsmExtract, Failure> {
    let query = overpass_query(&region_box(region)?);
    let text = agent()
        .post(&endpoint("OVERPASS_URL", OVERPASS_URL))
        .send_form(&[("data", query.as_str())])
        .map_err(|e| Failure::Io(format!("overpass request failed: {e}")))?
        .into_string()
        .map_err(|e| Failure::Io(format!("overpass response: {e}")))?;
    Ok(OsmExtract::from_json(&text)?)
}

/// Geocodes through Nominatim's search endpoint.
pub struct NominatimGeocoder;

impl Geocoder for NominatimGeocoder {
    fn geocode(&self, address: &str) -> Option<GeoBox> {
        let body: Value = agent()
            .get(&endpoint("NOMINATIM_URL", NOMINATIM_URL))
            .query("q", address)
            .query("format", "json")
            .query("limit", "1")
            .call()
            .ok()?
            .into_json()
            .ok()?;
        // boundingbox is [lat_min, lat_max, lon_min, lon_max] as strings
        let bb = body.get(0)?.get("boundingbox")?.as_array()?;
        let n: Vec<f64> = bb.iter().filter_map(|v| v.as_str()?.parse().ok()).collect();
        (n.len() == 4).then(|| GeoBox::new(n[0], n[2], n[1], n[3]))
    }
}
