//! Geometry-only reliability masks for bistatic range-angle maps.
//!
//! A map cell is kept when the Cartesian footprint of its resolution cell,
//! the quadrilateral spanned by `(R_bis +- dR/2, theta +- dtheta/2)`, is
//! smaller than a threshold area.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::geometry::{BistaticPair, Point2};
use crate::periodogram::BistaticMap;

/// Area in square meters of the resolution cell centered on
/// `(r_bis, theta)`, or `None` when a corner has no valid range conversion.
pub fn resolution_cell_area(
    pair: &BistaticPair,
    r_bis: f64,
    theta: f64,
    delta_r: f64,
    delta_theta: f64,
) -> Option<f64> {
    let signs = [(-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (1.0, -1.0)];
    let mut corners = [Point2::ORIGIN; 4];
    for (c, (sr, st)) in corners.iter_mut().zip(signs) {
        let r = r_bis + sr * 0.5 * delta_r;
        let t = theta + st * 0.5 * delta_theta;
        if r <= pair.baseline_m {
            return None;
        }
        let rr = pair.rx_range(r, t).ok()?;
        if !rr.is_finite() {
            return None;
        }
        *c = Point2::from_polar(rr, t);
    }
    Some(shoelace(&corners))
}

/// Absolute polygon area.
pub fn shoelace(points: &[Point2]) -> f64 {
    let n = points.len();
    let twice: f64 = (0..n).map(|i| points[i].cross(points[(i + 1) % n])).sum();
    0.5 * twice.abs()
}

/// Binary mask congruent with a bistatic map.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityMask {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<u8>,
    pub threshold_m2: f64,
    pub first_bin: usize,
    pub range_bin_m: f64,
    pub scan_angles: Vec<f64>,
}

impl ReliabilityMask {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.cols + col]
    }

    pub fn kept(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    pub fn all_ones(rows: usize, cols: usize) -> Self {
        ReliabilityMask {
            rows,
            cols,
            values: vec![1; rows * cols],
            threshold_m2: f64::INFINITY,
            first_bin: 0,
            range_bin_m: 0.0,
            scan_angles: Vec::new(),
        }
    }
}

/// Cell areas of every gated bin and scan direction; `NaN` marks invalid cells.
pub fn cell_areas(pair: &BistaticPair, scan_angles: &[f64], delta_theta: f64) -> Vec<f64> {
    let cols = scan_angles.len();
    let mut out = vec![f64::NAN; pair.gated_bins() * cols];
    for (r, bin) in (pair.first_bin..pair.last_bin).enumerate() {
        let r_bis = pair.bin_range(bin);
        for (c, &theta) in scan_angles.iter().enumerate() {
            if let Some(a) =
                resolution_cell_area(pair, r_bis, theta, pair.range_resolution_m, delta_theta)
            {
                out[r * cols + c] = a;
            }
        }
    }
    out
}

/// Entry `(l', j)` is one iff the cell area is below `gamma_res_m2`.
pub fn build_mask(
    pair: &BistaticPair,
    scan_angles: &[f64],
    delta_theta: f64,
    gamma_res_m2: f64,
) -> ReliabilityMask {
    let values = cell_areas(pair, scan_angles, delta_theta)
        .into_iter()
        .map(|a| u8::from(a < gamma_res_m2))
        .collect();
    ReliabilityMask {
        rows: pair.gated_bins(),
        cols: scan_angles.len(),
        values,
        threshold_m2: gamma_res_m2,
        first_bin: pair.first_bin,
        range_bin_m: pair.range_resolution_m,
        scan_angles: scan_angles.to_vec(),
    }
}

/// Element-wise product of a map and a mask.
pub fn apply_mask(map: &BistaticMap, mask: &ReliabilityMask) -> Result<BistaticMap> {
    if map.rows != mask.rows || map.cols != mask.cols {
        return Err(Error::Dimension(format!(
            "map {}x{} vs mask {}x{}",
            map.rows, map.cols, mask.rows, mask.cols
        )));
    }
    let values = map
        .values
        .iter()
        .zip(&mask.values)
        .map(|(&v, &m)| if m == 1 { v } else { 0.0 })
        .collect();
    Ok(BistaticMap {
        values,
        ..map.clone()
    })
}

/// Stable key of everything a mask depends on.
pub fn geometry_key(
    pair: &BistaticPair,
    scan_angles: &[f64],
    delta_theta: f64,
    gamma_res_m2: f64,
) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    let floats = [
        pair.tx_frame.origin.x,
        pair.tx_frame.origin.y,
        pair.tx_frame.boresight,
        pair.rx_frame.origin.x,
        pair.rx_frame.origin.y,
        pair.rx_frame.boresight,
        pair.range_resolution_m,
        delta_theta,
        gamma_res_m2,
    ];
    for f in floats.iter().chain(scan_angles) {
        f.to_bits().hash(&mut h);
    }
    (pair.first_bin, pair.last_bin).hash(&mut h);
    h.finish()
}

/// Shared mask store, filled on first use.
#[derive(Debug, Default)]
pub struct MaskCache {
    inner: RwLock<HashMap<u64, Arc<ReliabilityMask>>>,
}

impl MaskCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        pair: &BistaticPair,
        scan_angles: &[f64],
        delta_theta: f64,
        gamma_res_m2: f64,
    ) -> Arc<ReliabilityMask> {
        let key = geometry_key(pair, scan_angles, delta_theta, gamma_res_m2);
        if let Some(m) = self.inner.read().expect("mask cache poisoned").get(&key) {
            return Arc::clone(m);
        }
        let mask = Arc::new(build_mask(pair, scan_angles, delta_theta, gamma_res_m2));
        let mut w = self.inner.write().expect("mask cache poisoned");
        Arc::clone(w.entry(key).or_insert(mask))
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("mask cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
