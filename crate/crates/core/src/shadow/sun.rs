//! Low-precision solar ephemeris (declination, equation of time, hour angle).

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

use super::ShadowError;
use crate::geometry::Vec3;

/// Sun direction in degrees: azimuth clockwise from north, elevation above
/// the horizon (geometric, no refraction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SunPosition {
    pub azimuth: f64,
    pub elevation: f64,
}

impl SunPosition {
    /// Unit vector toward the sun in the local east/north/up frame.
    pub fn direction(&self) -> Vec3 {
        let (az, el) = (self.azimuth.to_radians(), self.elevation.to_radians());
        Vec3::new(az.sin() * el.cos(), az.cos() * el.cos(), el.sin())
    }

    pub fn is_up(&self) -> bool {
        self.elevation > 0.0
    }
}

fn julian_day(t: &DateTime<Utc>) -> f64 {
    let seconds = t.timestamp() as f64 + f64::from(t.timestamp_subsec_nanos()) * 1e-9;
    seconds / 86_400.0 + 2_440_587.5
}

/// Sun position seen from (`lat`, `lon`) in degrees at `instant`. Agrees
/// with high-precision algorithms to a few hundredths of a degree between
/// 1950 and 2100.
pub fn sun_position(lat: f64, lon: f64, instant: DateTime<Utc>) -> SunPosition {
    let t = (julian_day(&instant) - 2_451_545.0) / 36_525.0;
    let l0 = (280.46646 + t * (36000.76983 + 0.0003032 * t)).rem_euclid(360.0);
    let m = (357.52911 + t * (35999.05029 - 0.0001537 * t)).to_radians();
    let e = 0.016708634 - t * (0.000042037 + 0.0000001267 * t);
    let c = m.sin() * (1.914602 - t * (0.004817 + 0.000014 * t))
        + (2.0 * m).sin() * (0.019993 - 0.000101 * t)
        + (3.0 * m).sin() * 0.000289;
    let omega = (125.04 - 1934.136 * t).to_radians();
    let lambda = (l0 + c - 0.00569 - 0.00478 * omega.sin()).to_radians();
    let eps0 = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - 0.001813 * t))) / 60.0) / 60.0;
    let eps = (eps0 + 0.00256 * omega.cos()).to_radians();
    let decl = (eps.sin() * lambda.sin()).asin();

    let y = (eps / 2.0).tan().powi(2);
    let l0r = l0.to_radians();
    let eot = 4.0
        * (y * (2.0 * l0r).sin() - 2.0 * e * m.sin() + 4.0 * e * y * m.sin() * (2.0 * l0r).cos()
            - 0.5 * y * y * (4.0 * l0r).sin()
            - 1.25 * e * e * (2.0 * m).sin())
        .to_degrees();

    let midnight = instant.date_naive().and_hms_opt(0, 0, 0).expect("valid midnight").and_utc();
    let minutes = (instant - midnight).num_milliseconds() as f64 / 60_000.0;
    let true_solar = (minutes + eot + 4.0 * lon).rem_euclid(1440.0);
    let ha = (true_solar / 4.0 - 180.0).to_radians();

    let phi = lat.to_radians();
    let sin_el = phi.sin() * decl.sin() + phi.cos() * decl.cos() * ha.cos();
    let elevation = sin_el.clamp(-1.0, 1.0).asin().to_degrees();
    let azimuth =
        (ha.sin().atan2(ha.cos() * phi.sin() - decl.tan() * phi.cos()).to_degrees() + 180.0).rem_euclid(360.0);
    SunPosition { azimuth, elevation }
}

/// Sun positions over a sampled time window. Each instant stands for
/// `step_minutes` of accumulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SunPath {
    pub latitude: f64,
    pub longitude: f64,
    pub step_minutes: f64,
    pub instants: Vec<DateTime<Utc>>,
    pub positions: Vec<SunPosition>,
}

impl SunPath {
    /// Instants `from, from + step, ...` strictly before `to`.
    pub fn over(
        lat: f64,
        lon: f64,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
        step: Duration,
    ) -> Result<SunPath, ShadowError> {
        if step <= Duration::zero() {
            return Err(ShadowError::InvalidPath("step must be positive".into()));
        }
        let mut instants = Vec::new();
        let mut t = from;
        while t < to {
            instants.push(t);
            t += step;
        }
        if instants.is_empty() {
            return Err(ShadowError::EmptyPath);
        }
        let positions = instants.iter().map(|&i| sun_position(lat, lon, i)).collect();
        Ok(SunPath {
            latitude: lat,
            longitude: lon,
            step_minutes: step.num_milliseconds() as f64 / 60_000.0,
            instants,
            positions,
        })
    }

    /// A path with prescribed sun positions, one per step starting at `start`.
    pub fn fixed(
        start: DateTime<Utc>,
        step: Duration,
        positions: Vec<SunPosition>,
    ) -> Result<SunPath, ShadowError> {
        if positions.is_empty() {
            return Err(ShadowError::EmptyPath);
        }
        if step <= Duration::zero() {
            return Err(ShadowError::InvalidPath("step must be positive".into()));
        }
        if let Some(p) = positions.iter().find(|p| !(-90.0..=90.0).contains(&p.elevation)) {
            return Err(ShadowError::InvalidPath(format!("elevation {} outside [-90, 90]", p.elevation)));
        }
        let instants = (0..positions.len() as i32).map(|i| start + step * i).collect();
        Ok(SunPath {
            latitude: f64::NAN,
            longitude: f64::NAN,
            step_minutes: step.num_milliseconds() as f64 / 60_000.0,
            instants,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn above_horizon(&self) -> usize {
        self.positions.iter().filter(|p| p.is_up()).count()
    }
}
