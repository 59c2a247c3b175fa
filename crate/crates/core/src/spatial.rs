//! Bucket-grid spatial indexes for exact nearest-neighbor queries.
//!
//! Items are hashed into fixed-size lat/lon cells; queries expand outward in
//! square rings and stop once the remaining region's distance lower bound
//! exceeds the best candidate. The lower bounds are conservative (latitude
//! separation and cross-track distance to the bounding meridian), so results
//! are identical to a full scan, including tie-breaks by item index.
//!
//! Longitudes are treated as unwrapped degrees; datasets crossing the
//! antimeridian are out of scope.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geo::{haversine_m, point_segment_distance_m, GeoPoint, EARTH_RADIUS_M, M_PER_DEG_LAT};

/// Lower bound (meters) on great-circle distance to anything at latitude
/// separation >= `dphi_deg`.
fn lat_lb_m(dphi_deg: f64) -> f64 {
    dphi_deg.max(0.0) * M_PER_DEG_LAT
}

/// Lower bound (meters) on great-circle distance from a point at latitude
/// `qlat_deg` to anything whose longitude separation is >= `dlam_deg`:
/// the cross-track distance to the bounding meridian circle.
fn lune_lb_m(qlat_deg: f64, dlam_deg: f64) -> f64 {
    let dlam = dlam_deg.max(0.0).min(90.0).to_radians();
    EARTH_RADIUS_M * (dlam.sin() * qlat_deg.to_radians().cos()).asin()
}

fn grid_coord(v: f64, cell_deg: f64) -> i64 {
    (v / cell_deg).floor() as i64
}

/// Exact nearest-neighbor index over points under great-circle distance.
#[derive(Debug, Clone)]
pub struct PointIndex {
    cell_deg: f64,
    points: Vec<GeoPoint>,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

fn pick_cell_deg(points_or_boxes: usize, lat_span: f64, lon_span: f64) -> f64 {
    let n = points_or_boxes.max(1) as f64;
    let area = (lat_span.max(1e-6)) * (lon_span.max(1e-6));
    (area / n).sqrt().clamp(1e-4, 5.0)
}

impl PointIndex {
    pub fn build(points: Vec<GeoPoint>) -> PointIndex {
        let (mut lat_lo, mut lat_hi) = (f64::MAX, f64::MIN);
        let (mut lon_lo, mut lon_hi) = (f64::MAX, f64::MIN);
        for p in &points {
            lat_lo = lat_lo.min(p.lat);
            lat_hi = lat_hi.max(p.lat);
            lon_lo = lon_lo.min(p.lon);
            lon_hi = lon_hi.max(p.lon);
        }
        let cell_deg = if points.is_empty() {
            1.0
        } else {
            pick_cell_deg(points.len(), lat_hi - lat_lo, lon_hi - lon_lo)
        };
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets
                .entry((grid_coord(p.lat, cell_deg), grid_coord(p.lon, cell_deg)))
                .or_default()
                .push(i as u32);
        }
        PointIndex {
            cell_deg,
            points,
            buckets,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> GeoPoint {
        self.points[i]
    }

    /// Index and distance of the nearest point; ties go to the smallest
    /// index. Matches a linear scan exactly.
    pub fn nearest(&self, q: GeoPoint) -> Result<(usize, f64)> {
        if self.points.is_empty() {
            return Err(Error::Data("nearest query on an empty index".into()));
        }
        let c = self.cell_deg;
        let qi = grid_coord(q.lat, c);
        let qj = grid_coord(q.lon, c);
        let mut best: Option<(f64, u32)> = None;
        let mut consider = |idx: u32, d: f64| match best {
            Some((bd, bi)) if bd < d || (bd == d && bi < idx) => {}
            _ => best = Some((d, idx)),
        };
        // Ring radius needed to cover every occupied bucket in the worst case.
        let max_ring = self
            .buckets
            .keys()
            .map(|(i, j)| (i - qi).abs().max((j - qj).abs()))
            .max()
            .unwrap_or(0);
        for ring in 0..=max_ring {
            // Everything not yet scanned lies outside the box of half-width
            // `ring` cells; stop once it cannot beat the best candidate.
            if let Some((bd, _)) = best {
                let south = (qi - (ring - 1)) as f64 * c;
                let north = (qi + ring) as f64 * c;
                let west = (qj - (ring - 1)) as f64 * c;
                let east = (qj + ring) as f64 * c;
                let lb = lat_lb_m(q.lat - south)
                    .min(lat_lb_m(north - q.lat))
                    .min(lune_lb_m(q.lat, q.lon - west))
                    .min(lune_lb_m(q.lat, east - q.lon));
                if ring > 0 && lb > bd {
                    break;
                }
            }
            for (di, dj) in ring_cells(ring) {
                if let Some(items) = self.buckets.get(&(qi + di, qj + dj)) {
                    for &idx in items {
                        consider(idx, haversine_m(q, self.points[idx as usize]));
                    }
                }
            }
        }
        let (d, i) = best.expect("non-empty index yields a candidate");
        Ok((i as usize, d))
    }
}

/// Cells at Chebyshev distance exactly `r` from the origin.
fn ring_cells(r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(0, 0)];
    }
    let mut out = Vec::with_capacity((8 * r) as usize);
    for dj in -r..=r {
        out.push((-r, dj));
        out.push((r, dj));
    }
    for di in (-r + 1)..r {
        out.push((di, -r));
        out.push((di, r));
    }
    out
}

/// A polyline segment addressed by the way it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: GeoPoint,
    pub b: GeoPoint,
}

/// Exact nearest-neighbor index over segments under the local-planar
/// point-to-segment distance from [`point_segment_distance_m`].
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    cell_deg: f64,
    segments: Vec<Segment>,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl SegmentIndex {
    pub fn build(segments: Vec<Segment>) -> SegmentIndex {
        let (mut lat_lo, mut lat_hi) = (f64::MAX, f64::MIN);
        let (mut lon_lo, mut lon_hi) = (f64::MAX, f64::MIN);
        for s in &segments {
            lat_lo = lat_lo.min(s.a.lat.min(s.b.lat));
            lat_hi = lat_hi.max(s.a.lat.max(s.b.lat));
            lon_lo = lon_lo.min(s.a.lon.min(s.b.lon));
            lon_hi = lon_hi.max(s.a.lon.max(s.b.lon));
        }
        let cell_deg = if segments.is_empty() {
            1.0
        } else {
            pick_cell_deg(segments.len(), lat_hi - lat_lo, lon_hi - lon_lo)
        };
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, s) in segments.iter().enumerate() {
            let i_lo = grid_coord(s.a.lat.min(s.b.lat), cell_deg);
            let i_hi = grid_coord(s.a.lat.max(s.b.lat), cell_deg);
            let j_lo = grid_coord(s.a.lon.min(s.b.lon), cell_deg);
            let j_hi = grid_coord(s.a.lon.max(s.b.lon), cell_deg);
            for bi in i_lo..=i_hi {
                for bj in j_lo..=j_hi {
                    buckets.entry((bi, bj)).or_default().push(i as u32);
                }
            }
        }
        SegmentIndex {
            cell_deg,
            segments,
            buckets,
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Index and distance of the nearest segment; ties go to the smallest
    /// index. Matches a linear scan exactly.
    pub fn nearest(&self, q: GeoPoint) -> Result<(usize, f64)> {
        if self.segments.is_empty() {
            return Err(Error::Data("nearest query on an empty index".into()));
        }
        let c = self.cell_deg;
        let qi = grid_coord(q.lat, c);
        let qj = grid_coord(q.lon, c);
        // Planar scale factors of the query-centered projection.
        let k_lon = q.lat.to_radians().cos() * M_PER_DEG_LAT;
        let mut best: Option<(f64, u32)> = None;
        let mut seen = vec![false; self.segments.len()];
        let max_ring = self
            .buckets
            .keys()
            .map(|(i, j)| (i - qi).abs().max((j - qj).abs()))
            .max()
            .unwrap_or(0);
        for ring in 0..=max_ring {
            if let Some((bd, _)) = best {
                let south = (qi - (ring - 1)) as f64 * c;
                let north = (qi + ring) as f64 * c;
                let west = (qj - (ring - 1)) as f64 * c;
                let east = (qj + ring) as f64 * c;
                let lb = ((q.lat - south) * M_PER_DEG_LAT)
                    .min((north - q.lat) * M_PER_DEG_LAT)
                    .min((q.lon - west) * k_lon)
                    .min((east - q.lon) * k_lon)
                    .max(0.0);
                if ring > 0 && lb > bd {
                    break;
                }
            }
            for (di, dj) in ring_cells(ring) {
                if let Some(items) = self.buckets.get(&(qi + di, qj + dj)) {
                    for &idx in items {
                        if seen[idx as usize] {
                            continue;
                        }
                        seen[idx as usize] = true;
                        let s = self.segments[idx as usize];
                        let d = point_segment_distance_m(q, s.a, s.b);
                        match best {
                            Some((bd, bi)) if bd < d || (bd == d && bi < idx) => {}
                            _ => best = Some((d, idx)),
                        }
                    }
                }
            }
        }
        let (d, i) = best.expect("non-empty index yields a candidate");
        Ok((i as usize, d))
    }
}
