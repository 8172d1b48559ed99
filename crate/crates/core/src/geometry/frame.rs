//! Local tangent frame shared by every layer of a workspace.
//!
//! Geodetic positions are mapped onto a local equirectangular plane centred on
//! the frame origin: `x = R cos(lat0) dlon`, `y = R dlat`, `z = height`, all in
//! meters. At city extents the distortion against great-circle distance stays
//! well under one percent.

use serde::{Deserialize, Serialize};

use super::vec::{Aabb2, Vec2, Vec3};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin_lat: f64,
    pub origin_lon: f64,
}

impl LocalFrame {
    pub fn new(origin_lat: f64, origin_lon: f64) -> LocalFrame {
        LocalFrame { origin_lat, origin_lon }
    }

    fn x_scale(&self) -> f64 {
        EARTH_RADIUS_M * self.origin_lat.to_radians().cos()
    }

    pub fn project(&self, lat: f64, lon: f64, height: f64) -> Vec3 {
        let dlon = wrap_degrees(lon - self.origin_lon);
        let dlat = lat - self.origin_lat;
        Vec3::new(self.x_scale() * dlon.to_radians(), EARTH_RADIUS_M * dlat.to_radians(), height)
    }

    /// Inverse of [`LocalFrame::project`]; returns `(lat, lon, height)`.
    pub fn unproject(&self, p: Vec3) -> (f64, f64, f64) {
        let lat = self.origin_lat + (p.y / EARTH_RADIUS_M).to_degrees();
        let lon = wrap_degrees(self.origin_lon + (p.x / self.x_scale()).to_degrees());
        (lat, lon, p.z)
    }
}

fn wrap_degrees(d: f64) -> f64 {
    if (-180.0..180.0).contains(&d) {
        d
    } else {
        (d + 180.0).rem_euclid(360.0) - 180.0
    }
}

/// Geodetic bounding box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl GeoBox {
    pub fn new(lat_min: f64, lon_min: f64, lat_max: f64, lon_max: f64) -> GeoBox {
        GeoBox { lat_min, lon_min, lat_max, lon_max }
    }

    pub fn is_valid(&self) -> bool {
        self.lat_min < self.lat_max
            && self.lon_min < self.lon_max
            && self.lat_min >= -90.0
            && self.lat_max <= 90.0
            && self.lon_min >= -180.0
            && self.lon_max <= 180.0
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.lat_min + self.lat_max) / 2.0, (self.lon_min + self.lon_max) / 2.0)
    }

    pub fn project(&self, frame: &LocalFrame) -> Aabb2 {
        let a = frame.project(self.lat_min, self.lon_min, 0.0);
        let b = frame.project(self.lat_max, self.lon_max, 0.0);
        Aabb2::new(Vec2::new(a.x.min(b.x), a.y.min(b.y)), Vec2::new(a.x.max(b.x), a.y.max(b.y)))
    }
}

/// Great-circle distance in meters (haversine).
pub fn great_circle_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_maps_to_zero() {
        let f = LocalFrame::new(41.88, -87.63);
        let p = f.project(41.88, -87.63, 12.5);
        assert_eq!(p, Vec3::new(0.0, 0.0, 12.5));
    }

    #[test]
    fn due_north_offset() {
        let f = LocalFrame::new(41.88, -87.63);
        let p = f.project(41.89, -87.63, 0.0);
        assert_eq!(p.x, 0.0);
        // R * 0.01 deg in radians
        assert!((p.y - 1111.949266).abs() < 1e-3, "{}", p.y);
    }

    #[test]
    fn round_trip_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let f = LocalFrame::new(rng.gen_range(-70.0..70.0), rng.gen_range(-180.0..180.0));
            let lat = f.origin_lat + rng.gen_range(-0.5..0.5);
            let lon = wrap_degrees(f.origin_lon + rng.gen_range(-0.5..0.5));
            let (lat2, lon2, _) = f.unproject(f.project(lat, lon, 3.0));
            worst = worst.max((lat - lat2).abs()).max(wrap_degrees(lon - lon2).abs());
        }
        assert!(worst < 1e-9, "worst {worst}");
    }

    #[test]
    fn distortion_below_half_percent_at_city_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for lat0 in [0.0, 42.0, 60.0] {
            let f = LocalFrame::new(lat0, 10.0);
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                // two points inside a 30 km square centred on the origin
                let a = Vec3::new(rng.gen_range(-15e3..15e3), rng.gen_range(-15e3..15e3), 0.0);
                let b = Vec3::new(rng.gen_range(-15e3..15e3), rng.gen_range(-15e3..15e3), 0.0);
                let planar = (a - b).length();
                if planar < 100.0 {
                    continue;
                }
                let (la, lo, _) = f.unproject(a);
                let (lb, lob, _) = f.unproject(b);
                let gc = great_circle_distance(la, lo, lb, lob);
                worst = worst.max((planar - gc).abs() / gc);
            }
            assert!(worst < 0.005, "lat0 {lat0}: distortion {worst}");
        }
    }

    #[test]
    fn geobox_projection_is_axis_aligned() {
        let f = LocalFrame::new(40.0, -74.0);
        let b = GeoBox::new(39.99, -74.01, 40.01, -73.99).project(&f);
        assert!((b.center().x).abs() < 1e-6 && (b.center().y).abs() < 1e-6);
        assert!(b.width() > 0.0 && b.height() > 0.0);
    }
}
