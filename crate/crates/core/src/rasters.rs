//! Text-grid raster I/O and windowed zonal statistics for the nighttime
//! luminosity and population layers.
//!
//! The on-disk format is an ESRI-ASCII-style text grid: a six-key header
//! (`ncols nrows xllcorner yllcorner cellsize NODATA_value`) followed by
//! whitespace-separated cell values, first row northernmost. Values are
//! written with shortest round-trip decimal formatting, so read(write(g))
//! reproduces g bit-exactly for finite values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{cell_window, BoundingBox, GeoPoint, WindowSpec};

/// In-memory raster: row-major values, row 0 is the northernmost row.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    ncols: usize,
    nrows: usize,
    /// Longitude of the grid's west edge (cell corner), degrees.
    xll: f64,
    /// Latitude of the grid's south edge (cell corner), degrees.
    yll: f64,
    /// Cell side in degrees.
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
}

/// The six luminosity summary statistics computed per window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LuminosityStats {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub zero_ratio: f64,
    pub upper_third_mean: f64,
    pub lower_third_mean: f64,
}

impl LuminosityStats {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.max,
            self.mean,
            self.median,
            self.zero_ratio,
            self.upper_third_mean,
            self.lower_third_mean,
        ]
    }
}

/// Sum over a window; `pixels` counts the non-nodata cells that contributed.
/// A window that overlaps the grid but holds only nodata yields sum 0 with
/// `pixels == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSum {
    pub sum: f64,
    pub pixels: usize,
}

impl WindowSum {
    pub fn is_empty(&self) -> bool {
        self.pixels == 0
    }
}

impl RasterGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidInput("grid dimensions must be positive".into()));
        }
        if !(cellsize > 0.0) || !cellsize.is_finite() {
            return Err(Error::InvalidInput(format!("invalid cellsize {cellsize}")));
        }
        if values.len() != ncols * nrows {
            return Err(Error::InvalidInput(format!(
                "value count {} does not match {}x{}",
                values.len(),
                ncols,
                nrows
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !nodata.is_finite() {
            return Err(Error::InvalidInput("non-finite cell value".into()));
        }
        Ok(RasterGrid {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    /// Uniform grid filled with a single value.
    pub fn filled(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        value: f64,
    ) -> Result<Self> {
        Self::new(ncols, nrows, xll, yll, cellsize, nodata, vec![value; ncols * nrows])
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn set_value(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.ncols + col] = v;
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata
    }

    /// Center coordinate of cell (row, col); row 0 is the northernmost row.
    pub fn center(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint {
            lon: self.xll + (col as f64 + 0.5) * self.cellsize,
            lat: self.yll + ((self.nrows - 1 - row) as f64 + 0.5) * self.cellsize,
        }
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox {
            south: self.yll,
            north: self.yll + self.nrows as f64 * self.cellsize,
            west: self.xll,
            east: self.xll + self.ncols as f64 * self.cellsize,
        }
    }

    /// All cells whose centers fall inside `b` (closed bounds). The candidate
    /// row/col range is computed arithmetically and then filtered with the
    /// same per-center comparison a full scan would use, so results agree
    /// with a brute-force scan bit-for-bit.
    pub fn cells_in<'a>(
        &'a self,
        b: &BoundingBox,
    ) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
        let b = *b;
        let col_lo = (((b.west - self.xll) / self.cellsize - 0.5).ceil() - 1.0).max(0.0) as usize;
        let col_hi_f = ((b.east - self.xll) / self.cellsize - 0.5).floor() + 1.0;
        let col_hi = if col_hi_f < 0.0 {
            0
        } else {
            (col_hi_f as usize).min(self.ncols.saturating_sub(1))
        };
        // Rows count from the north, so invert the lat range.
        let inv = |lat: f64| (self.nrows as f64 - 1.0) - ((lat - self.yll) / self.cellsize - 0.5);
        let row_lo = ((inv(b.north)).ceil() - 1.0).max(0.0) as usize;
        let row_hi_f = (inv(b.south)).floor() + 1.0;
        let row_hi = if row_hi_f < 0.0 {
            0
        } else {
            (row_hi_f as usize).min(self.nrows.saturating_sub(1))
        };
        (row_lo..=row_hi.min(self.nrows.saturating_sub(1)))
            .flat_map(move |r| (col_lo..=col_hi).map(move |c| (r, c)))
            .filter_map(move |(r, c)| {
                let center = self.center(r, c);
                if b.contains(center) {
                    Some((r, c, self.value(r, c)))
                } else {
                    None
                }
            })
    }

    /// Maximum-value non-nodata cell with its center inside `b`; ties go to
    /// the first cell in row-major order.
    pub fn max_cell_in(&self, b: &BoundingBox) -> Option<(GeoPoint, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (r, c, v) in self.cells_in(b) {
            if self.is_nodata(v) {
                continue;
            }
            match best {
                Some((_, _, bv)) if bv >= v => {}
                _ => best = Some((r, c, v)),
            }
        }
        best.map(|(r, c, v)| (self.center(r, c), v))
    }
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<RasterGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text).map_err(|msg| Error::parse(path, msg))
}

fn parse_grid(text: &str) -> std::result::Result<RasterGrid, String> {
    let mut tokens = text.split_whitespace();
    let mut header = [0.0f64; 6];
    const KEYS: [&str; 6] = [
        "ncols",
        "nrows",
        "xllcorner",
        "yllcorner",
        "cellsize",
        "nodata_value",
    ];
    for (i, key) in KEYS.iter().enumerate() {
        let k = tokens.next().ok_or_else(|| format!("missing header key {key}"))?;
        if !k.eq_ignore_ascii_case(key) {
            return Err(format!("expected header key {key}, found {k}"));
        }
        let v = tokens.next().ok_or_else(|| format!("missing value for {key}"))?;
        header[i] = v
            .parse::<f64>()
            .map_err(|_| format!("invalid value for {key}: {v}"))?;
    }
    let ncols = header[0] as usize;
    let nrows = header[1] as usize;
    if header[0].fract() != 0.0 || header[1].fract() != 0.0 {
        return Err("ncols/nrows must be integers".into());
    }
    let mut values = Vec::with_capacity(ncols * nrows);
    for tok in tokens {
        let v = tok.parse::<f64>().map_err(|_| format!("invalid cell value {tok}"))?;
        values.push(v);
    }
    if values.len() != ncols * nrows {
        return Err(format!(
            "value count {} does not match header {}x{}",
            values.len(),
            ncols,
            nrows
        ));
    }
    RasterGrid::new(ncols, nrows, header[2], header[3], header[4], header[5], values)
        .map_err(|e| e.to_string())
}

pub fn write_grid(grid: &RasterGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.ncols);
    let _ = writeln!(out, "nrows {}", grid.nrows);
    let _ = writeln!(out, "xllcorner {}", grid.xll);
    let _ = writeln!(out, "yllcorner {}", grid.yll);
    let _ = writeln!(out, "cellsize {}", grid.cellsize);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata);
    for row in 0..grid.nrows {
        let mut line = String::new();
        for col in 0..grid.ncols {
            if col > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{}", grid.value(row, col));
        }
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// The six window statistics over non-nodata cells whose centers fall in the
/// `w`-sized window around `center`.
///
/// Median is the lower of the two middle values for even counts. The upper
/// and lower thirds each take ceil(n/3) values by rank.
pub fn window_stats(grid: &RasterGrid, center: GeoPoint, w: WindowSpec) -> Result<LuminosityStats> {
    let the_box = cell_window(center, w)?;
    let mut vals: Vec<f64> = grid
        .cells_in(&the_box)
        .filter(|(_, _, v)| !grid.is_nodata(*v))
        .map(|(_, _, v)| v)
        .collect();
    if vals.is_empty() {
        return Err(Error::Data(format!(
            "window at ({}, {}) contains no data pixels",
            center.lat, center.lon
        )));
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len();
    let third = n.div_ceil(3);
    let sum: f64 = vals.iter().sum();
    let zero_count = vals.iter().filter(|v| **v == 0.0).count();
    let lower: f64 = vals[..third].iter().sum::<f64>() / third as f64;
    let upper: f64 = vals[n - third..].iter().sum::<f64>() / third as f64;
    Ok(LuminosityStats {
        max: vals[n - 1],
        mean: sum / n as f64,
        median: vals[(n - 1) / 2],
        zero_ratio: zero_count as f64 / n as f64,
        upper_third_mean: upper,
        lower_third_mean: lower,
    })
}

/// Sum of non-nodata cell values in the window. Errors if the window does
/// not overlap the grid at all.
pub fn window_sum(grid: &RasterGrid, center: GeoPoint, w: WindowSpec) -> Result<WindowSum> {
    let the_box = cell_window(center, w)?;
    let g = grid.bounds();
    if the_box.east < g.west || the_box.west > g.east || the_box.north < g.south
        || the_box.south > g.north
    {
        return Err(Error::Data(format!(
            "window at ({}, {}) does not overlap the grid",
            center.lat, center.lon
        )));
    }
    let mut sum = 0.0;
    let mut pixels = 0usize;
    for (_, _, v) in grid.cells_in(&the_box) {
        if !grid.is_nodata(v) {
            sum += v;
            pixels += 1;
        }
    }
    Ok(WindowSum { sum, pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn small_grid(values: Vec<f64>, ncols: usize, nrows: usize, cellsize: f64) -> RasterGrid {
        // Centered so that (0, 0) lies mid-grid.
        let xll = -(ncols as f64) * cellsize / 2.0;
        let yll = -(nrows as f64) * cellsize / 2.0;
        RasterGrid::new(ncols, nrows, xll, yll, cellsize, -9999.0, values).unwrap()
    }

    /// Independent O(pixels) oracle: scan every cell, same closed-bounds test.
    fn brute_force_in_window(grid: &RasterGrid, center: GeoPoint, w: WindowSpec) -> Vec<f64> {
        let b = cell_window(center, w).unwrap();
        let mut out = Vec::new();
        for r in 0..grid.nrows() {
            for c in 0..grid.ncols() {
                let p = grid.center(r, c);
                if p.lat >= b.south && p.lat <= b.north && p.lon >= b.west && p.lon <= b.east {
                    let v = grid.value(r, c);
                    if !grid.is_nodata(v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn round_trip_single_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.asc");
        let g = RasterGrid::new(1, 1, 3.25, -1.75, 0.125, -9999.0, vec![7.0]).unwrap();
        write_grid(&g, &path).unwrap();
        assert_eq!(read_grid(&path).unwrap(), g);
    }

    #[test]
    fn round_trip_preserves_nodata_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nd.asc");
        let g = RasterGrid::new(2, 2, 0.0, 0.0, 0.5, -1.0, vec![1.5, -1.0, 0.0, 2.25]).unwrap();
        write_grid(&g, &path).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back, g);
        assert!(back.is_nodata(back.value(0, 1)));
    }

    #[test]
    fn value_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.asc");
        std::fs::write(
            &path,
            "ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2 3 4 5 6 7 8\n",
        )
        .unwrap();
        assert!(read_grid(&path).is_err());
    }

    #[test]
    fn malformed_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad2.asc");
        std::fs::write(&path, "ncols 1\nnrows 1\nxllcorner 0\n1\n").unwrap();
        assert!(read_grid(&path).is_err());
    }

    #[test]
    fn stats_hand_oracle_nine_values() {
        // 3x3 grid of [0,0,0,1,2,3,4,5,6] at 30 m pixels, window 1.6 km: all inside.
        let cs = 30.0 / crate::geo::M_PER_DEG_LAT;
        let g = small_grid(vec![0., 0., 0., 1., 2., 3., 4., 5., 6.], 3, 3, cs);
        let s = window_stats(&g, GeoPoint { lat: 0.0, lon: 0.0 }, WindowSpec::SQUARE_MILE).unwrap();
        assert_eq!(s.max, 6.0);
        assert!((s.mean - 21.0 / 9.0).abs() < 1e-12);
        assert_eq!(s.median, 2.0);
        assert!((s.zero_ratio - 3.0 / 9.0).abs() < 1e-12);
        assert_eq!(s.upper_third_mean, 5.0);
        assert_eq!(s.lower_third_mean, 0.0);
    }

    #[test]
    fn stats_uniform_and_all_zero() {
        let cs = 30.0 / crate::geo::M_PER_DEG_LAT;
        let g = small_grid(vec![4.0; 25], 5, 5, cs);
        let s = window_stats(&g, GeoPoint { lat: 0.0, lon: 0.0 }, WindowSpec::SQUARE_MILE).unwrap();
        assert_eq!((s.max, s.mean, s.median, s.zero_ratio), (4.0, 4.0, 4.0, 0.0));

        let z = small_grid(vec![0.0; 25], 5, 5, cs);
        let s = window_stats(&z, GeoPoint { lat: 0.0, lon: 0.0 }, WindowSpec::SQUARE_MILE).unwrap();
        assert_eq!((s.zero_ratio, s.max), (1.0, 0.0));
    }

    #[test]
    fn sum_all_ones_inside() {
        let cs = 30.0 / crate::geo::M_PER_DEG_LAT;
        let g = small_grid(vec![1.0; 100], 10, 10, cs);
        let s = window_sum(&g, GeoPoint { lat: 0.0, lon: 0.0 }, WindowSpec::SQUARE_MILE).unwrap();
        assert_eq!(s.sum, 100.0);
        assert_eq!(s.pixels, 100);
    }

    #[test]
    fn sum_nodata_only_window_flagged() {
        let cs = 30.0 / crate::geo::M_PER_DEG_LAT;
        let g = small_grid(vec![-9999.0; 9], 3, 3, cs);
        let s = window_sum(&g, GeoPoint { lat: 0.0, lon: 0.0 }, WindowSpec::SQUARE_MILE).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.sum, 0.0);
    }

    #[test]
    fn sum_no_overlap_errors() {
        let cs = 30.0 / crate::geo::M_PER_DEG_LAT;
        let g = small_grid(vec![1.0; 9], 3, 3, cs);
        assert!(window_sum(&g, GeoPoint { lat: 40.0, lon: 40.0 }, WindowSpec::SQUARE_MILE).is_err());
    }

    #[test]
    fn random_windows_match_brute_force() {
        let mut rng = StdRng::seed_from_u64(20_240_817);
        for trial in 0..200 {
            let ncols = rng.random_range(3..40);
            let nrows = rng.random_range(3..40);
            let cellsize = rng.random_range(0.0002..0.02);
            let xll = rng.random_range(-10.0..10.0);
            let yll = rng.random_range(-10.0..10.0);
            let values: Vec<f64> = (0..ncols * nrows)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        -9999.0
                    } else if rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0.0..100.0)
                    }
                })
                .collect();
            let g = RasterGrid::new(ncols, nrows, xll, yll, cellsize, -9999.0, values).unwrap();
            let gb = g.bounds();
            let center = GeoPoint {
                lat: rng.random_range(gb.south - 0.01..gb.north + 0.01),
                lon: rng.random_range(gb.west - 0.01..gb.east + 0.01),
            };
            for w in WindowSpec::standard() {
                let mut expected = brute_force_in_window(&g, center, w);
                let got_sum = window_sum(&g, center, w);
                match got_sum {
                    Ok(s) => {
                        let e: f64 = expected.iter().sum();
                        assert_eq!(s.pixels, expected.len(), "trial {trial}");
                        assert_eq!(s.sum, e, "trial {trial}: sum mismatch");
                    }
                    Err(_) => assert!(expected.is_empty(), "trial {trial}: overlap missed"),
                }
                let got_stats = window_stats(&g, center, w);
                if expected.is_empty() {
                    assert!(got_stats.is_err());
                } else {
                    let s = got_stats.unwrap();
                    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let n = expected.len();
                    let third = n.div_ceil(3);
                    assert_eq!(s.max, expected[n - 1]);
                    assert_eq!(s.median, expected[(n - 1) / 2]);
                    assert_eq!(s.mean, expected.iter().sum::<f64>() / n as f64);
                    assert_eq!(
                        s.zero_ratio,
                        expected.iter().filter(|v| **v == 0.0).count() as f64 / n as f64
                    );
                    assert_eq!(
                        s.upper_third_mean,
                        expected[n - third..].iter().sum::<f64>() / third as f64
                    );
                    assert_eq!(
                        s.lower_third_mean,
                        expected[..third].iter().sum::<f64>() / third as f64
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn growing_window_never_decreases_sum(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let cs = rng.random_range(0.001..0.01);
            let values: Vec<f64> = (0..144).map(|_| rng.random_range(0.0..10.0)).collect();
            let g = RasterGrid::new(12, 12, -0.06, -0.06, cs, -9999.0, values).unwrap();
            let center = GeoPoint { lat: 0.0, lon: 0.0 };
            let s1 = window_sum(&g, center, WindowSpec::SQUARE_MILE).unwrap().sum;
            let s5 = window_sum(&g, center, WindowSpec::FIVE_KM).unwrap().sum;
            let s10 = window_sum(&g, center, WindowSpec::TEN_KM).unwrap().sum;
            prop_assert!(s1 <= s5 && s5 <= s10);
        }

        #[test]
        fn grid_round_trip(ncols in 1usize..8, nrows in 1usize..8, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let values: Vec<f64> = (0..ncols * nrows)
                .map(|_| f64::from_bits(rng.random::<u64>() & 0x7FEF_FFFF_FFFF_FFFF))
                .collect();
            let g = RasterGrid::new(ncols, nrows, 1.25, -3.5, 0.01, -9999.0, values).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("g.asc");
            write_grid(&g, &path).unwrap();
            prop_assert_eq!(read_grid(&path).unwrap(), g);
        }
    }
}
