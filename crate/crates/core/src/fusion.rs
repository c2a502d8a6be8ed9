//! Thresholding, Cartesian resampling and map fusion.

use crate::error::{Error, Result};
use crate::geometry::BistaticPair;
use crate::periodogram::BistaticMap;
use crate::reliability::ReliabilityMask;
use crate::scenario::GridConfig;

/// Non-negative map on the shared surveillance grid, `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianMap {
    pub grid: GridConfig,
    pub values: Vec<f64>,
}

impl CartesianMap {
    pub fn zeros(grid: &GridConfig) -> Self {
        CartesianMap {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Pixel index `(ix, iy)` of the largest value, lowest index on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        (best.1 % self.grid.nx, best.1 / self.grid.nx)
    }

    pub fn scaled(&self, a: f64) -> Self {
        CartesianMap {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    fn add_assign(&mut self, other: &CartesianMap) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("Cartesian grids differ".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }
}

/// Per-pixel detection threshold for a target false-alarm rate per map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec {
    pub far: f64,
    pub search_space_size: usize,
    pub p_fa_point: f64,
    pub eta: f64,
}

impl ThresholdSpec {
    /// `P_FA = FAR / |R|` and `eta = -sigma^2 ln P_FA`.
    pub fn new(far: f64, search_space_size: usize, noise_variance: f64) -> Result<Self> {
        if !(far > 0.0) || search_space_size == 0 || !(noise_variance > 0.0) {
            return Err(Error::Dimension(format!(
                "threshold needs FAR > 0, |R| > 0, sigma^2 > 0 (got {far}, {search_space_size}, {noise_variance})"
            )));
        }
        let p_fa_point = far / search_space_size as f64;
        if p_fa_point >= 1.0 {
            return Err(Error::Dimension(format!(
                "per-pixel false-alarm probability {p_fa_point} is not below one"
            )));
        }
        Ok(ThresholdSpec {
            far,
            search_space_size,
            p_fa_point,
            eta: -noise_variance * p_fa_point.ln(),
        })
    }
}

/// Zeroes entries below the threshold and keeps the rest unchanged.
pub fn threshold_map(map: &BistaticMap, spec: &ThresholdSpec) -> BistaticMap {
    BistaticMap {
        values: map
            .values
            .iter()
            .map(|&v| if v >= spec.eta { v } else { 0.0 })
            .collect(),
        ..map.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    pixel: u32,
    row: u32,
    col: u32,
    /// Fractional offsets towards `row + 1` and `col + 1`.
    t: f64,
    u: f64,
}

/// Inverse mapping from grid pixels to fractional `(range bin, direction)`
/// coordinates of one pair. Depends on geometry only.
#[derive(Debug, Clone)]
pub struct ResampleTable {
    pub grid: GridConfig,
    pub rows: usize,
    pub cols: usize,
    pub first_bin: usize,
    samples: Vec<Sample>,
}

impl ResampleTable {
    pub fn new(pair: &BistaticPair, scan_angles: &[f64], grid: &GridConfig) -> Result<Self> {
        let rows = pair.gated_bins();
        let cols = scan_angles.len();
        if cols == 0 || scan_angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Dimension("scan angles must be strictly increasing".into()));
        }
        let lo = pair.first_bin as f64;
        let hi = (pair.last_bin - 1) as f64;
        let mut samples = Vec::new();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let (r_bis, theta) = pair.observe(grid.pixel_center(ix, iy));
                let bin = r_bis / pair.range_resolution_m;
                if !(bin >= lo && bin <= hi) {
                    continue;
                }
                let Some((col, u)) = locate_angle(scan_angles, theta) else {
                    continue;
                };
                let fr = bin - lo;
                let row = if rows > 1 { (fr.floor() as usize).min(rows - 2) } else { 0 };
                samples.push(Sample {
                    pixel: (iy * grid.nx + ix) as u32,
                    row: row as u32,
                    col: col as u32,
                    t: fr - row as f64,
                    u,
                });
            }
        }
        Ok(ResampleTable {
            grid: grid.clone(),
            rows,
            cols,
            first_bin: pair.first_bin,
            samples,
        })
    }

    /// Number of pixels inside the gate and the scan sector.
    pub fn covered_pixels(&self) -> usize {
        self.samples.len()
    }

    fn interpolate(&self, values: &[f64], s: &Sample) -> f64 {
        let (r, c) = (s.row as usize, s.col as usize);
        let at = |rr: usize, cc: usize| {
            if rr < self.rows && cc < self.cols {
                values[rr * self.cols + cc]
            } else {
                0.0
            }
        };
        let top = (1.0 - s.u) * at(r, c) + s.u * at(r, c + 1);
        let bottom = (1.0 - s.u) * at(r + 1, c) + s.u * at(r + 1, c + 1);
        (1.0 - s.t) * top + s.t * bottom
    }

    pub fn apply(&self, map: &BistaticMap) -> Result<CartesianMap> {
        if map.rows != self.rows || map.cols != self.cols || map.first_bin != self.first_bin {
            return Err(Error::Dimension(format!(
                "map {}x{} from bin {} vs table {}x{} from bin {}",
                map.rows, map.cols, map.first_bin, self.rows, self.cols, self.first_bin
            )));
        }
        let mut out = CartesianMap::zeros(&self.grid);
        for s in &self.samples {
            out.values[s.pixel as usize] = self.interpolate(&map.values, s);
        }
        Ok(out)
    }

    /// Pixels whose interpolated mask value is positive.
    pub fn mask_support(&self, mask: &ReliabilityMask) -> Vec<u32> {
        let values: Vec<f64> = mask.values.iter().map(|&v| f64::from(v)).collect();
        self.samples
            .iter()
            .filter(|s| self.interpolate(&values, s) > 0.0)
            .map(|s| s.pixel)
            .collect()
    }
}

/// Column index and fractional offset of `theta` between neighboring scan
/// angles, or `None` outside the scanned sector.
fn locate_angle(angles: &[f64], theta: f64) -> Option<(usize, f64)> {
    let n = angles.len();
    if n == 1 {
        return (theta == angles[0]).then_some((0, 0.0));
    }
    if !(theta >= angles[0] && theta <= angles[n - 1]) {
        return None;
    }
    let upper = angles.partition_point(|&a| a <= theta).clamp(1, n - 1);
    let c = upper - 1;
    Some((c, (theta - angles[c]) / (angles[c + 1] - angles[c])))
}

/// Bilinear inverse-mapped resampling of one bistatic map onto the grid.
pub fn resample_to_cartesian(
    map: &BistaticMap,
    pair: &BistaticPair,
    grid: &GridConfig,
) -> Result<CartesianMap> {
    ResampleTable::new(pair, &map.scan_angles, grid)?.apply(map)
}

/// Element-wise sum of the receiver maps of one round, in order.
pub fn fuse_round(maps: &[CartesianMap]) -> Result<CartesianMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Dimension("no maps to fuse".into()))?;
    let mut out = CartesianMap::zeros(&first.grid);
    for m in maps {
        out.add_assign(m)?;
    }
    Ok(out)
}

/// Element-wise sum over rounds; one soft map per transmitter is required.
pub fn aggregate_rounds(rounds: &[CartesianMap], expected: usize) -> Result<CartesianMap> {
    if rounds.len() != expected {
        return Err(Error::Dimension(format!(
            "{} rounds for {expected} transmitters",
            rounds.len()
        )));
    }
    fuse_round(rounds)
}

/// Number of pairs whose masked footprint reaches each pixel.
pub fn coverage_counts(tables: &[(&ResampleTable, &ReliabilityMask)]) -> Result<Vec<u16>> {
    let grid = match tables.first() {
        Some((t, _)) => &t.grid,
        None => return Ok(Vec::new()),
    };
    let mut counts = vec![0u16; grid.len()];
    for (t, m) in tables {
        if &t.grid != grid {
            return Err(Error::Dimension("Cartesian grids differ".into()));
        }
        for p in t.mask_support(m) {
            counts[p as usize] += 1;
        }
    }
    Ok(counts)
}
