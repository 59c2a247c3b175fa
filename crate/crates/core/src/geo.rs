//! Geodesy primitives: great-circle distance, map-tile ground resolution,
//! and the axis-aligned windows used for zonal statistics.
//!
//! All math assumes a spherical Earth of radius 6,371,000 m. At the 1.6 km
//! cell size used throughout, the ellipsoidal correction is below 0.5% and
//! is deliberately ignored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters (spherical model).
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters per degree of latitude on the spherical model.
pub const M_PER_DEG_LAT: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

/// A WGS-84 coordinate in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validated constructor: latitude in [-90, 90], longitude in [-180, 180],
    /// NaN rejected.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidInput(format!(
                "coordinate out of range ({lat}, {lon})"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }
}

/// Side length of a square analysis window.
///
/// The standard set is 1.6 km (1 square mile), 5 km, and 10 km; other sizes
/// are allowed via `custom` when a configuration overrides the default set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    side_km: f64,
}

impl WindowSpec {
    pub const SQUARE_MILE: WindowSpec = WindowSpec { side_km: 1.6 };
    pub const FIVE_KM: WindowSpec = WindowSpec { side_km: 5.0 };
    pub const TEN_KM: WindowSpec = WindowSpec { side_km: 10.0 };

    /// The three standard window sizes, smallest first.
    pub fn standard() -> [WindowSpec; 3] {
        [Self::SQUARE_MILE, Self::FIVE_KM, Self::TEN_KM]
    }

    pub fn new(side_km: f64) -> Result<Self> {
        let standard = [1.6, 5.0, 10.0];
        if standard.iter().any(|s| (s - side_km).abs() < 1e-12) {
            Ok(WindowSpec { side_km })
        } else {
            Err(Error::InvalidInput(format!(
                "window side {side_km} km is not one of the standard sizes (use custom)"
            )))
        }
    }

    /// Config-declared override of the standard set.
    pub fn custom(side_km: f64) -> Result<Self> {
        if side_km.is_finite() && side_km > 0.0 {
            Ok(WindowSpec { side_km })
        } else {
            Err(Error::InvalidInput(format!("invalid window side {side_km} km")))
        }
    }

    pub fn side_km(&self) -> f64 {
        self.side_km
    }

    pub fn side_m(&self) -> f64 {
        self.side_km * 1000.0
    }
}

/// Axis-aligned lat/lon box. Longitudes are unwrapped degrees; boxes that
/// would cross the antimeridian are not supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub south: f64,
    pub north: f64,
    pub west: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.south && p.lat <= self.north && p.lon >= self.west && p.lon <= self.east
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: (self.south + self.north) / 2.0,
            lon: (self.west + self.east) / 2.0,
        }
    }
}

/// Great-circle distance in meters between two points.
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let half_dlat = (lat_b - lat_a) / 2.0;
    let half_dlon = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dlat.sin().powi(2) + lat_a.cos() * lat_b.cos() * half_dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Ground resolution of a web-mercator tile pixel:
/// 156,543 * cos(lat * pi/180) / 2^zoom meters per pixel.
pub fn meters_per_pixel(lat_deg: f64, zoom: u32) -> Result<f64> {
    if zoom > 22 {
        return Err(Error::InvalidInput(format!("zoom {zoom} out of range [0, 22]")));
    }
    Ok(156_543.0 * (lat_deg * std::f64::consts::PI / 180.0).cos() / f64::powi(2.0, zoom as i32))
}

/// Axis-aligned box spanning `w.side_m()` meters N-S and E-W around `center`.
///
/// The longitude span is scaled by 1/cos(lat) so the box keeps its metric
/// width at the center's latitude. Rejects near-polar centers where the
/// scaling degenerates.
pub fn cell_window(center: GeoPoint, w: WindowSpec) -> Result<BoundingBox> {
    if center.lat.abs() >= 85.0 {
        return Err(Error::InvalidInput(format!(
            "cell_window undefined near the poles (lat {})",
            center.lat
        )));
    }
    let half_lat = w.side_m() / M_PER_DEG_LAT / 2.0;
    let half_lon = w.side_m() / (M_PER_DEG_LAT * center.lat.to_radians().cos()) / 2.0;
    Ok(BoundingBox {
        south: center.lat - half_lat,
        north: center.lat + half_lat,
        west: center.lon - half_lon,
        east: center.lon + half_lon,
    })
}

/// Initial great-circle bearing from `from` to `to`, degrees in [0, 360).
pub fn initial_bearing_deg(from: GeoPoint, to: GeoPoint) -> f64 {
    let lat_a = from.lat.to_radians();
    let lat_b = to.lat.to_radians();
    let dlon = (to.lon - from.lon).to_radians();
    let y = dlon.sin() * lat_b.cos();
    let x = lat_a.cos() * lat_b.sin() - lat_a.sin() * lat_b.cos() * dlon.cos();
    let deg = y.atan2(x).to_degrees();
    (deg + 360.0) % 360.0
}

/// Point reached from `origin` after travelling `distance_m` meters on the
/// initial bearing `bearing_deg`.
pub fn destination(origin: GeoPoint, bearing_deg: f64, distance_m: f64) -> GeoPoint {
    let ang = distance_m / EARTH_RADIUS_M;
    let brg = bearing_deg.to_radians();
    let lat1 = origin.lat.to_radians();
    let lat2 = (lat1.sin() * ang.cos() + lat1.cos() * ang.sin() * brg.cos()).asin();
    let lon2 = origin.lon.to_radians()
        + (brg.sin() * ang.sin() * lat1.cos()).atan2(ang.cos() - lat1.sin() * lat2.sin());
    GeoPoint {
        lat: lat2.to_degrees(),
        lon: lon2.to_degrees(),
    }
}

/// Distance in meters from `p` to the segment `a`-`b`, computed in a local
/// equirectangular plane centered on `p`. Adequate at the sub-country scales
/// where nearest-feature queries matter; the spatial index and its oracle
/// share this exact definition.
pub fn point_segment_distance_m(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let k = p.lat.to_radians().cos();
    let ax = (a.lon - p.lon) * k * M_PER_DEG_LAT;
    let ay = (a.lat - p.lat) * M_PER_DEG_LAT;
    let bx = (b.lon - p.lon) * k * M_PER_DEG_LAT;
    let by = (b.lat - p.lat) * M_PER_DEG_LAT;
    let dx = bx - ax;
    let dy = by - ay;
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-(ax * dx + ay * dy) / len2).clamp(0.0, 1.0)
    };
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    (cx * cx + cy * cy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_identity_is_zero() {
        let a = pt(12.34, -56.78);
        assert_eq!(haversine_m(a, a), 0.0);
    }

    #[test]
    fn haversine_one_degree_equator() {
        // Closed form: pi/180 * 6,371,000 = 111,194.92664 m.
        let d = haversine_m(pt(0.0, 0.0), pt(0.0, 1.0));
        assert!((d - 111_194.9).abs() < 0.5, "got {d}");
    }

    #[test]
    fn point_rejects_nan_and_out_of_range() {
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
    }

    #[test]
    fn meters_per_pixel_reference_values() {
        let at_equator = meters_per_pixel(0.0, 16).unwrap();
        assert!((at_equator - 2.3887).abs() < 1e-3, "got {at_equator}");
        // cos 60 deg = 0.5 halves the resolution.
        let at_60 = meters_per_pixel(60.0, 16).unwrap();
        assert!((at_60 - at_equator / 2.0).abs() < 1e-9);
        // One more zoom level halves it again.
        let z17 = meters_per_pixel(0.0, 17).unwrap();
        assert!((z17 - at_equator / 2.0).abs() < 1e-9);
        assert!(meters_per_pixel(0.0, 23).is_err());
    }

    #[test]
    fn cell_window_lat_span() {
        let b = cell_window(pt(0.0, 0.0), WindowSpec::SQUARE_MILE).unwrap();
        let span = b.north - b.south;
        // Arc-length arithmetic: 1600 m / (pi/180 * R) degrees.
        let expected = 1600.0 / (std::f64::consts::PI / 180.0 * EARTH_RADIUS_M);
        assert!((span - expected).abs() < 1e-6, "got {span}, want {expected}");
    }

    #[test]
    fn cell_window_lon_scaling() {
        let eq = cell_window(pt(0.0, 10.0), WindowSpec::FIVE_KM).unwrap();
        let hi = cell_window(pt(60.0, 10.0), WindowSpec::FIVE_KM).unwrap();
        let ratio = (hi.east - hi.west) / (eq.east - eq.west);
        assert!((ratio - 2.0).abs() < 1e-9, "got {ratio}");
    }

    #[test]
    fn cell_window_rejects_near_polar() {
        assert!(cell_window(pt(86.0, 0.0), WindowSpec::SQUARE_MILE).is_err());
    }

    #[test]
    fn destination_round_trip() {
        let origin = pt(-6.5, 31.2);
        let moved = destination(origin, 37.0, 4200.0);
        let d = haversine_m(origin, moved);
        assert!((d - 4200.0).abs() < 1e-6, "got {d}");
        let brg = initial_bearing_deg(origin, moved);
        assert!((brg - 37.0).abs() < 1e-6, "got {brg}");
    }

    #[test]
    fn segment_distance_endpoint_and_interior() {
        let a = pt(0.0, 0.0);
        let b = pt(0.0, 0.01);
        // Query on the segment: zero.
        assert!(point_segment_distance_m(pt(0.0, 0.005), a, b) < 1e-9);
        // Query due north of the midpoint: distance equals the lat offset.
        let d = point_segment_distance_m(pt(0.001, 0.005), a, b);
        assert!((d - 0.001 * M_PER_DEG_LAT).abs() < 1e-6, "got {d}");
        // Degenerate segment behaves as a point.
        let d2 = point_segment_distance_m(pt(0.001, 0.0), a, a);
        assert!((d2 - 0.001 * M_PER_DEG_LAT).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn haversine_symmetry(lat1 in -80.0..80.0f64, lon1 in -179.0..179.0f64,
                              lat2 in -80.0..80.0f64, lon2 in -179.0..179.0f64) {
            let a = pt(lat1, lon1);
            let b = pt(lat2, lon2);
            prop_assert_eq!(haversine_m(a, b).to_bits(), haversine_m(b, a).to_bits());
            prop_assert!(haversine_m(a, b) >= 0.0);
        }

        #[test]
        fn haversine_triangle_inequality(lat1 in -80.0..80.0f64, lon1 in -179.0..179.0f64,
                                         lat2 in -80.0..80.0f64, lon2 in -179.0..179.0f64,
                                         lat3 in -80.0..80.0f64, lon3 in -179.0..179.0f64) {
            let a = pt(lat1, lon1);
            let b = pt(lat2, lon2);
            let c = pt(lat3, lon3);
            let ab = haversine_m(a, b);
            let bc = haversine_m(b, c);
            let ac = haversine_m(a, c);
            prop_assert!(ac <= ab + bc + 1e-6 * (ab + bc).max(1.0));
        }

        #[test]
        fn window_always_contains_center(lat in -84.0..84.0f64, lon in -170.0..170.0f64) {
            let c = pt(lat, lon);
            for w in WindowSpec::standard() {
                let b = cell_window(c, w).unwrap();
                prop_assert!(b.contains(c));
            }
        }

        #[test]
        fn resolution_decreasing_in_zoom_and_latitude(lat in 0.5..84.0f64, zoom in 0u32..22) {
            let base = meters_per_pixel(lat, zoom).unwrap();
            prop_assert!(meters_per_pixel(lat, zoom + 1).unwrap() < base);
            prop_assert!(meters_per_pixel(lat + 0.5, zoom).unwrap() < base);
            prop_assert!(meters_per_pixel(-lat, zoom).unwrap() == base);
        }
    }
}
