//! ULA steering vectors, the wide-sector transmit beam and the tapered
//! receive scan beams.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Response of a half-wavelength ULA with `n` elements towards `theta`
/// (radians from broadside). Element `i` has phase `pi * (i - (n-1)/2) * sin(theta)`.
pub fn steering(n: usize, theta: f64) -> Vec<Complex64> {
    let s = theta.sin();
    let center = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| Complex64::from_polar(1.0, PI * (i as f64 - center) * s))
        .collect()
}

/// `a(theta)^T w`, the complex array factor of a weight vector.
pub fn array_factor(weights: &[Complex64], theta: f64) -> Complex64 {
    steering(weights.len(), theta)
        .iter()
        .zip(weights)
        .map(|(a, w)| a * w)
        .sum()
}

pub fn power_gain(weights: &[Complex64], theta: f64) -> f64 {
    array_factor(weights, theta).norm_sqr()
}

/// Dolph-Chebyshev taper with the given peak-to-sidelobe ratio, peak
/// normalized to one.
pub fn chebyshev_window(n: usize, sidelobe_db: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![1.0; n];
    }
    let order = (n - 1) as f64;
    let beta = ((10f64.powf(sidelobe_db.abs() / 20.0)).acosh() / order).cosh();
    let cheb = |x: f64| -> f64 {
        if x > 1.0 {
            (order * x.acosh()).cosh()
        } else if x < -1.0 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sign * (order * (-x).acosh()).cosh()
        } else {
            (order * x.acos()).cos()
        }
    };
    let mut p: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(cheb(beta * (PI * k as f64 / n as f64).cos()), 0.0))
        .collect();
    if n % 2 == 0 {
        for (k, v) in p.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, PI * k as f64 / n as f64);
        }
    }
    // forward DFT, real part
    let spectrum: Vec<f64> = (0..n)
        .map(|i| {
            p.iter()
                .enumerate()
                .map(|(k, v)| {
                    v * Complex64::from_polar(1.0, -2.0 * PI * (i * k % n) as f64 / n as f64)
                })
                .sum::<Complex64>()
                .re
        })
        .collect();
    let mut w = Vec::with_capacity(n);
    if n % 2 == 1 {
        let half = (n + 1) / 2;
        w.extend(spectrum[1..half].iter().rev());
        w.extend(&spectrum[..half]);
    } else {
        let half = n / 2 + 1;
        w.extend(spectrum[1..half].iter().rev());
        w.extend(&spectrum[1..half]);
    }
    let max = w.iter().cloned().fold(f64::MIN, f64::max);
    w.iter().map(|v| v / max).collect()
}

/// Receive weights for every scan direction of one station.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanBank {
    pub directions: Vec<f64>,
    pub weights: Vec<Vec<Complex64>>,
}

impl ScanBank {
    pub fn elements(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `w_j^T b(theta)` for every direction `j`.
    pub fn responses(&self, theta: f64) -> Vec<Complex64> {
        let b = steering(self.elements(), theta);
        self.weights
            .iter()
            .map(|w| w.iter().zip(&b).map(|(w, b)| w * b).sum())
            .collect()
    }
}

/// Conjugate steering with a Dolph-Chebyshev taper, unit norm.
pub fn design_scan_bank(n_r: usize, directions: &[f64], sidelobe_db: f64) -> ScanBank {
    let taper = chebyshev_window(n_r, sidelobe_db);
    let weights = directions
        .iter()
        .map(|&theta| {
            let w: Vec<Complex64> = steering(n_r, theta)
                .iter()
                .zip(&taper)
                .map(|(b, c)| b.conj() * (*c / (n_r as f64).sqrt()))
                .collect();
            let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            w.into_iter().map(|v| v / norm).collect()
        })
        .collect();
    ScanBank {
        directions: directions.to_vec(),
        weights,
    }
}

/// Wide transmit beam and the ripple it achieves over its sector.
#[derive(Debug, Clone, PartialEq)]
pub struct TxBeam {
    pub weights: Vec<Complex64>,
    pub sector: (f64, f64),
    /// Max over min in-sector power gain, dB.
    pub ripple_db: f64,
}

const TX_DESIGN_GRID: usize = 1024;
const TX_RIDGE: f64 = 1e-3;

/// Least-squares fit of the transmit array factor to a flat-top mask over
/// `sector` (radians from broadside), scaled to `||w||^2 = p_avg`.
///
/// The mask edge is pushed outward by a fraction of the array's sin-space
/// resolution so the half-power points of the fitted pattern land on the
/// sector edges instead of the -6 dB point of a hard step.
pub fn design_wide_tx_beam(n_t: usize, sector: (f64, f64), p_avg: f64) -> Result<TxBeam> {
    let (lo, hi) = sector;
    if !(lo < hi) || lo <= -PI / 2.0 || hi >= PI / 2.0 {
        return Err(Error::Beamforming(format!(
            "sector ({lo}, {hi}) must be ordered and inside (-90, 90) deg"
        )));
    }
    if n_t == 1 {
        return Ok(TxBeam {
            weights: vec![Complex64::new(p_avg.sqrt(), 0.0)],
            sector,
            ripple_db: 0.0,
        });
    }
    let shift = 0.8 / n_t as f64;
    let (u_lo, u_hi) = (lo.sin() - shift, hi.sin() + shift);

    let grid: Vec<f64> = (0..TX_DESIGN_GRID)
        .map(|g| -PI / 2.0 + PI * (g as f64 + 0.5) / TX_DESIGN_GRID as f64)
        .collect();
    let a = DMatrix::from_fn(TX_DESIGN_GRID, n_t, |g, i| {
        let s = grid[g].sin();
        Complex64::from_polar(1.0, PI * (i as f64 - (n_t as f64 - 1.0) / 2.0) * s)
    });
    let d = DVector::from_fn(TX_DESIGN_GRID, |g, _| {
        let u = grid[g].sin();
        Complex64::new(if u >= u_lo && u <= u_hi { 1.0 } else { 0.0 }, 0.0)
    });
    let ah = a.adjoint();
    let mut gram = &ah * &a;
    let ridge = TX_RIDGE * gram.trace().re / n_t as f64;
    for i in 0..n_t {
        gram[(i, i)] += Complex64::new(ridge, 0.0);
    }
    let rhs = &ah * d;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Beamforming("normal equations not positive definite".into()))?;
    let w = chol.solve(&rhs);
    let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let weights: Vec<Complex64> = w.iter().map(|v| v * (p_avg.sqrt() / norm)).collect();

    let (min, max) = sector_extremes(&weights, sector, 0.1f64.to_radians());
    Ok(TxBeam {
        weights,
        sector,
        ripple_db: 10.0 * (max / min).log10(),
    })
}

/// Min and max power gain over `sector` sampled at `step`.
pub fn sector_extremes(weights: &[Complex64], sector: (f64, f64), step: f64) -> (f64, f64) {
    let n = ((sector.1 - sector.0) / step).round() as usize;
    (0..=n)
        .map(|i| power_gain(weights, sector.0 + (sector.1 - sector.0) * i as f64 / n as f64))
        .fold((f64::MAX, f64::MIN), |(lo, hi), g| (lo.min(g), hi.max(g)))
}

/// Transmit and receive beamformers of one station.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerBank {
    pub tx: TxBeam,
    pub scan: ScanBank,
}

impl BeamformerBank {
    /// Tx sector: the span of scan directions widened by half a beamwidth.
    pub fn design(
        n_t: usize,
        n_r: usize,
        directions: &[f64],
        beamwidth: f64,
        sidelobe_db: f64,
        p_avg: f64,
    ) -> Result<Self> {
        let lo = directions.iter().cloned().fold(f64::MAX, f64::min) - beamwidth / 2.0;
        let hi = directions.iter().cloned().fold(f64::MIN, f64::max) + beamwidth / 2.0;
        Ok(BeamformerBank {
            tx: design_wide_tx_beam(n_t, (lo, hi), p_avg)?,
            scan: design_scan_bank(n_r, directions, sidelobe_db),
        })
    }
}

/// `(angle_deg, gain_db)` samples of a pattern over [-90, 90] deg.
pub fn pattern_db(weights: &[Complex64], step_deg: f64) -> Vec<(f64, f64)> {
    let n = (180.0 / step_deg).round() as usize;
    (0..=n)
        .map(|i| {
            let deg = -90.0 + 180.0 * i as f64 / n as f64;
            (deg, 10.0 * power_gain(weights, deg.to_radians()).max(1e-30).log10())
        })
        .collect()
}
