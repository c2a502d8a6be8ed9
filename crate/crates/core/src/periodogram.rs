//! Range-Doppler periodograms and bistatic range-angle maps.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Symmetric Kaiser window of length `m`, scaled so that the mean of the
/// squared samples is one.
pub fn kaiser_window(m: usize, beta: f64) -> Vec<f64> {
    let raw: Vec<f64> = if m == 1 {
        vec![1.0]
    } else {
        let denom = bessel_i0(beta);
        (0..m)
            .map(|i| {
                let r = 2.0 * i as f64 / (m - 1) as f64 - 1.0;
                bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
            })
            .collect()
    };
    normalize_power(raw)
}

pub fn rectangular_window(m: usize) -> Vec<f64> {
    vec![1.0; m]
}

fn normalize_power(w: Vec<f64>) -> Vec<f64> {
    let ms = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
    let s = ms.sqrt();
    w.into_iter().map(|v| v / s).collect()
}

/// Sizes, Doppler window and physical bin spacings of a periodogram.
#[derive(Debug, Clone)]
pub struct PeriodogramSpec {
    pub k: usize,
    pub m: usize,
    pub k_p: usize,
    pub m_p: usize,
    pub window: Vec<f64>,
    pub range_bin_m: f64,
    pub doppler_bin_hz: f64,
}

impl PeriodogramSpec {
    pub fn new(k: usize, m: usize, k_p: usize, m_p: usize, window: Vec<f64>) -> Result<Self> {
        if k_p < k || m_p < m || window.len() != m || k == 0 || m == 0 {
            return Err(Error::Dimension(format!(
                "periodogram K={k} M={m} K_p={k_p} M_p={m_p} window={}",
                window.len()
            )));
        }
        Ok(PeriodogramSpec {
            k,
            m,
            k_p,
            m_p,
            window,
            range_bin_m: 1.0,
            doppler_bin_hz: 1.0,
        })
    }

    pub fn with_axes(mut self, range_bin_m: f64, doppler_bin_hz: f64) -> Self {
        self.range_bin_m = range_bin_m;
        self.doppler_bin_hz = doppler_bin_hz;
        self
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.k as f64 * self.m as f64)
    }
}

/// Non-negative periodogram values over a block of range bins.
///
/// Row `r` holds range bin `first_bin + r`; column `p` holds Doppler bin `p`
/// (bins above `cols / 2` are negative frequencies).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    pub first_bin: usize,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub range_bin_m: f64,
    pub doppler_bin_hz: f64,
    pub direction: usize,
}

impl RangeDopplerMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Signed Doppler bin index of column `col`.
    pub fn signed_doppler_bin(&self, col: usize) -> isize {
        if col < self.cols.div_ceil(2) {
            col as isize
        } else {
            col as isize - self.cols as isize
        }
    }
}

/// Full periodogram of a K x M grid stored row-major by subcarrier.
///
/// Windowing and a forward transform run along symbols, an unnormalized
/// inverse transform along subcarriers, both zero-padded; the squared
/// magnitude is scaled by `1 / (K M)`.
pub fn compute_periodogram(grid: &[Complex64], spec: &PeriodogramSpec) -> Result<RangeDopplerMap> {
    let (k, m, k_p, m_p) = (spec.k, spec.m, spec.k_p, spec.m_p);
    if grid.len() != k * m {
        return Err(Error::Dimension(format!(
            "grid has {} samples, expected {k} x {m}",
            grid.len()
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let doppler = planner.plan_fft_forward(m_p);
    let range = planner.plan_fft_inverse(k_p);

    let mut rows = vec![Complex64::new(0.0, 0.0); k * m_p];
    for (dst, src) in rows.chunks_exact_mut(m_p).zip(grid.chunks_exact(m)) {
        for ((d, s), w) in dst.iter_mut().zip(src).zip(&spec.window) {
            *d = s * *w;
        }
    }
    doppler.process(&mut rows);

    // transpose into Doppler-major columns, padding subcarriers to K_p
    let mut cols = vec![Complex64::new(0.0, 0.0); m_p * k_p];
    for kk in 0..k {
        for p in 0..m_p {
            cols[p * k_p + kk] = rows[kk * m_p + p];
        }
    }
    range.process(&mut cols);

    let scale = spec.scale();
    let mut values = vec![0.0; k_p * m_p];
    for p in 0..m_p {
        for l in 0..k_p {
            values[l * m_p + p] = cols[p * k_p + l].norm_sqr() * scale;
        }
    }
    Ok(RangeDopplerMap {
        first_bin: 0,
        rows: k_p,
        cols: m_p,
        values,
        range_bin_m: spec.range_bin_m,
        doppler_bin_hz: spec.doppler_bin_hz,
        direction: 0,
    })
}

/// Shared FFT plan for repeated Doppler transforms of one length.
#[derive(Clone)]
pub struct DopplerFft {
    fft: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl DopplerFft {
    pub fn new(m_p: usize) -> Self {
        let fft = FftPlanner::<f64>::new().plan_fft_forward(m_p);
        let scratch_len = fft.get_inplace_scratch_len();
        DopplerFft { fft, scratch_len }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fft.len() == 0
    }

    /// Transforms every consecutive row of `buffer` in place.
    pub fn process_rows(&self, buffer: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        self.fft.process_with_scratch(buffer, &mut scratch);
    }
}

impl std::fmt::Debug for DopplerFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DopplerFft").field("len", &self.fft.len()).finish()
    }
}

/// Zeroes every Doppler column whose signed bin satisfies `|p| <= p_0`.
pub fn apply_doppler_notch(map: &mut RangeDopplerMap, p_0: usize) {
    let cols = map.cols;
    let zeroed: Vec<usize> = (0..cols)
        .filter(|&c| map.signed_doppler_bin(c).unsigned_abs() <= p_0)
        .collect();
    for row in map.values.chunks_exact_mut(cols) {
        for &c in &zeroed {
            row[c] = 0.0;
        }
    }
}

/// Picks the Doppler column holding the largest value inside the range gate
/// `[first_bin, last_bin)` and returns that column over the gate together
/// with the column index. Ties go to the lowest `(range, Doppler)` index.
pub fn extract_range_profile(
    map: &RangeDopplerMap,
    first_bin: usize,
    last_bin: usize,
) -> Result<(Vec<f64>, usize)> {
    if first_bin >= last_bin {
        return Err(Error::Dimension(format!(
            "empty range gate {first_bin}..{last_bin}"
        )));
    }
    if first_bin < map.first_bin || last_bin > map.first_bin + map.rows {
        return Err(Error::Dimension(format!(
            "gate {first_bin}..{last_bin} outside map bins {}..{}",
            map.first_bin,
            map.first_bin + map.rows
        )));
    }
    let r0 = first_bin - map.first_bin;
    let r1 = last_bin - map.first_bin;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for r in r0..r1 {
        for (c, &v) in map.row(r).iter().enumerate() {
            if v > best.0 {
                best = (v, c);
            }
        }
    }
    let p_hat = best.1;
    let profile = (r0..r1).map(|r| map.get(r, p_hat)).collect();
    Ok((profile, p_hat))
}

/// Bistatic range-angle map: rows are gated range bins, columns are scan
/// directions. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BistaticMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    /// Periodogram bin of row 0.
    pub first_bin: usize,
    pub range_bin_m: f64,
    /// Scan angle of each column, Rx local frame.
    pub scan_angles: Vec<f64>,
}

impl BistaticMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row_range_m(&self, row: usize) -> f64 {
        (self.first_bin + row) as f64 * self.range_bin_m
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `(row, col)` of the largest value, lowest index on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        (best.1 / self.cols, best.1 % self.cols)
    }

    pub fn same_shape(&self, other_rows: usize, other_cols: usize) -> bool {
        self.rows == other_rows && self.cols == other_cols
    }
}

/// Column-stacks per-direction range profiles.
pub fn build_bistatic_map(
    profiles: &[Vec<f64>],
    first_bin: usize,
    range_bin_m: f64,
    scan_angles: &[f64],
) -> Result<BistaticMap> {
    let cols = profiles.len();
    if cols != scan_angles.len() {
        return Err(Error::Dimension(format!(
            "{cols} profiles for {} scan angles",
            scan_angles.len()
        )));
    }
    let rows = profiles.first().map_or(0, Vec::len);
    if profiles.iter().any(|p| p.len() != rows) {
        return Err(Error::Dimension("ragged range profiles".into()));
    }
    let mut values = vec![0.0; rows * cols];
    for (c, prof) in profiles.iter().enumerate() {
        for (r, v) in prof.iter().enumerate() {
            values[r * cols + c] = *v;
        }
    }
    Ok(BistaticMap {
        rows,
        cols,
        values,
        first_bin,
        range_bin_m,
        scan_angles: scan_angles.to_vec(),
    })
}
