//! Per-pair sensing: beamformed symbols to a bistatic range-angle map.
//!
//! Two interchangeable paths produce the same map:
//!
//! * the reference path synthesizes every `K x M` symbol grid, removes the
//!   data symbols and runs the full two-dimensional periodogram;
//! * the fast path evaluates the subcarrier transform in closed form (a
//!   Dirichlet kernel per scatterer) only on the gated range bins, adds
//!   delay-domain noise and keeps the Doppler FFT.
//!
//! Without padding along subcarriers the delay-domain noise of the fast path
//! has exactly the distribution of the transformed element noise, so the two
//! paths agree in distribution. With noise disabled they agree sample by
//! sample.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::beamforming::ScanBank;
use crate::channel::{
    complex_gaussian, draw_symbols, path_coefficients, synthesize_beamformed,
    synthesize_direction_filtered, NoiseSpec, ScattererRealization,
};
use crate::error::{Error, Result};
use crate::geometry::BistaticPair;
use crate::periodogram::{
    apply_doppler_notch, build_bistatic_map, compute_periodogram, extract_range_profile,
    BistaticMap, DopplerFft, PeriodogramSpec, RangeDopplerMap,
};
use crate::rng::StreamSeed;
use crate::scenario::{NoiseMode, OfdmNumerology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SensingPath {
    /// Fast path whenever it is exact, reference path otherwise.
    #[default]
    Auto,
    Reference,
    Fast,
}

/// Processing parameters shared by every pair.
#[derive(Debug, Clone)]
pub struct SensingSetup {
    pub numerology: OfdmNumerology,
    pub periodogram: PeriodogramSpec,
    pub p_0: usize,
    pub noise: NoiseSpec,
    pub path: SensingPath,
    /// Keep the gated range-Doppler maps of every direction.
    pub keep_rd_maps: bool,
}

impl SensingSetup {
    fn resolve(&self) -> SensingPath {
        match self.path {
            SensingPath::Auto if self.fast_is_exact() => SensingPath::Fast,
            SensingPath::Auto => SensingPath::Reference,
            p => p,
        }
    }

    /// The fast path reproduces the noise statistics only without range padding.
    pub fn fast_is_exact(&self) -> bool {
        !self.noise.enabled || self.periodogram.k_p == self.periodogram.k
    }
}

/// Random streams for one pair.
#[derive(Debug, Clone, Copy)]
pub struct PairSeeds {
    pub noise: StreamSeed,
    pub symbols: StreamSeed,
}

#[derive(Debug, Clone)]
pub struct PairSensing {
    pub tx_index: usize,
    pub rx_index: usize,
    pub map: BistaticMap,
    /// Peak Doppler column chosen for each direction.
    pub doppler_bins: Vec<usize>,
    /// Gated, notched range-Doppler maps, if requested.
    pub rd_maps: Vec<RangeDopplerMap>,
}

pub fn sense_pair(
    setup: &SensingSetup,
    pair: &BistaticPair,
    scatterers: &[ScattererRealization],
    tx_weights: &[Complex64],
    scan: &ScanBank,
    seeds: PairSeeds,
) -> Result<PairSensing> {
    let k_p = setup.periodogram.k_p;
    if pair.last_bin > k_p {
        return Err(Error::Dimension(format!(
            "range gate ends at bin {} beyond K_p = {k_p}",
            pair.last_bin
        )));
    }
    match setup.resolve() {
        SensingPath::Fast => {
            if !setup.fast_is_exact() {
                return Err(Error::Dimension(
                    "fast path needs K_p = K when noise is enabled".into(),
                ));
            }
            sense_fast(setup, pair, scatterers, tx_weights, scan, seeds.noise)
        }
        _ => sense_reference(setup, pair, scatterers, tx_weights, scan, seeds),
    }
}

fn finish(
    setup: &SensingSetup,
    pair: &BistaticPair,
    scan: &ScanBank,
    maps: Vec<RangeDopplerMap>,
) -> Result<PairSensing> {
    let mut profiles = Vec::with_capacity(maps.len());
    let mut doppler_bins = Vec::with_capacity(maps.len());
    let mut kept = Vec::new();
    for mut rd in maps {
        apply_doppler_notch(&mut rd, setup.p_0);
        let (profile, p_hat) = extract_range_profile(&rd, pair.first_bin, pair.last_bin)?;
        profiles.push(profile);
        doppler_bins.push(p_hat);
        if setup.keep_rd_maps {
            kept.push(crop(rd, pair.first_bin, pair.last_bin));
        }
    }
    let map = build_bistatic_map(
        &profiles,
        pair.first_bin,
        pair.range_resolution_m,
        &scan.directions,
    )?;
    Ok(PairSensing {
        tx_index: pair.tx_index,
        rx_index: pair.rx_index,
        map,
        doppler_bins,
        rd_maps: kept,
    })
}

fn crop(rd: RangeDopplerMap, first: usize, last: usize) -> RangeDopplerMap {
    if rd.first_bin == first && rd.rows == last - first {
        return rd;
    }
    let r0 = first - rd.first_bin;
    let values = rd.values[r0 * rd.cols..(r0 + last - first) * rd.cols].to_vec();
    RangeDopplerMap {
        first_bin: first,
        rows: last - first,
        values,
        ..rd
    }
}

/// Literal processing of the full symbol grids.
pub fn sense_reference(
    setup: &SensingSetup,
    pair: &BistaticPair,
    scatterers: &[ScattererRealization],
    tx_weights: &[Complex64],
    scan: &ScanBank,
    seeds: PairSeeds,
) -> Result<PairSensing> {
    let num = &setup.numerology;
    let (k, m) = (num.active_subcarriers, num.symbols);
    let symbols = draw_symbols(k, m, &mut seeds.symbols.rng());
    let spec = &setup.periodogram;
    let mut maps = Vec::with_capacity(scan.len());
    if setup.noise.enabled && setup.noise.mode == NoiseMode::Exact {
        let grid = synthesize_beamformed(
            num,
            (pair.tx_index, pair.rx_index),
            scatterers,
            tx_weights,
            scan,
            &symbols,
            &setup.noise,
            seeds.noise,
        )?;
        for (j, y) in grid.directions.iter().enumerate() {
            let g = crate::channel::reciprocal_filter(y, &symbols)?;
            let mut rd = compute_periodogram(&g, spec)?;
            rd.direction = j;
            maps.push(rd);
        }
    } else {
        crate::channel::check_weights(tx_weights, num.per_subcarrier_power_w, scan)?;
        let coeff = path_coefficients(scatterers, tx_weights, scan);
        let mut g = vec![Complex64::new(0.0, 0.0); k * m];
        for j in 0..scan.len() {
            synthesize_direction_filtered(
                num,
                &coeff,
                scatterers,
                j,
                &symbols,
                &setup.noise,
                seeds.noise,
                &mut g,
            )?;
            let mut rd = compute_periodogram(&g, spec)?;
            rd.direction = j;
            maps.push(crop(rd, pair.first_bin, pair.last_bin));
        }
    }
    finish(setup, pair, scan, maps)
}

/// `sum_{k<K} exp(j 2 pi k x)`.
pub fn dirichlet(k: usize, x: f64) -> Complex64 {
    let x = x - x.round();
    let s = (PI * x).sin();
    if s.abs() < 1e-12 {
        return Complex64::new(k as f64, 0.0);
    }
    let amp = (PI * k as f64 * x).sin() / s;
    Complex64::from_polar(amp, PI * (k as f64 - 1.0) * x)
}

/// Closed-form range transform on the gated bins only.
pub fn sense_fast(
    setup: &SensingSetup,
    pair: &BistaticPair,
    scatterers: &[ScattererRealization],
    tx_weights: &[Complex64],
    scan: &ScanBank,
    noise_seed: StreamSeed,
) -> Result<PairSensing> {
    let num = &setup.numerology;
    let spec = &setup.periodogram;
    let (k, m, k_p, m_p) = (spec.k, spec.m, spec.k_p, spec.m_p);
    if num.active_subcarriers != k || num.symbols != m {
        return Err(Error::Dimension("numerology and periodogram sizes differ".into()));
    }
    crate::channel::check_weights(tx_weights, num.per_subcarrier_power_w, scan)?;
    let coeff = path_coefficients(scatterers, tx_weights, scan);
    let rows = pair.gated_bins();
    let n_dir = scan.len();

    // Range kernel per scatterer over gated rows, Doppler phasors per scatterer.
    let kernels: Vec<Vec<Complex64>> = scatterers
        .iter()
        .map(|s| {
            let shift = num.subcarrier_spacing_hz * s.toa_s;
            (pair.first_bin..pair.last_bin)
                .map(|l| dirichlet(k, l as f64 / k_p as f64 - shift))
                .collect()
        })
        .collect();
    let moving: Vec<usize> = (0..scatterers.len())
        .filter(|&i| scatterers[i].doppler_hz != 0.0)
        .collect();
    let phasors: Vec<Vec<Complex64>> = moving
        .iter()
        .map(|&i| {
            let step = 2.0 * PI * num.symbol_duration_s * scatterers[i].doppler_hz;
            (0..m).map(|mm| Complex64::from_polar(1.0, step * mm as f64)).collect()
        })
        .collect();

    let delay_var = k as f64 * setup.noise.variance_w;
    let exact_noise = if setup.noise.enabled && setup.noise.mode == NoiseMode::Exact {
        Some(exact_delay_noise(scan, rows, m, delay_var, noise_seed))
    } else {
        None
    };

    let fft = DopplerFft::new(m_p);
    let scale = spec.scale();
    let mut maps = Vec::with_capacity(n_dir);
    let mut buf = vec![Complex64::new(0.0, 0.0); rows * m_p];
    for j in 0..n_dir {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let mut rng = noise_seed.child(j as u64).rng();
        for r in 0..rows {
            let row = &mut buf[r * m_p..r * m_p + m];
            let mut fixed = Complex64::new(0.0, 0.0);
            for (i, kern) in kernels.iter().enumerate() {
                if scatterers[i].doppler_hz == 0.0 {
                    fixed += coeff[i][j] * kern[r];
                }
            }
            row.iter_mut().for_each(|v| *v = fixed);
            for (mi, &i) in moving.iter().enumerate() {
                let a = coeff[i][j] * kernels[i][r];
                for (v, e) in row.iter_mut().zip(&phasors[mi]) {
                    *v += a * e;
                }
            }
            if let Some(noise) = &exact_noise {
                let src = &noise[(j * rows + r) * m..(j * rows + r + 1) * m];
                for (v, n) in row.iter_mut().zip(src) {
                    *v += n;
                }
            } else if setup.noise.enabled {
                for v in row.iter_mut() {
                    *v += complex_gaussian(&mut rng, delay_var);
                }
            }
            for (v, w) in row.iter_mut().zip(&spec.window) {
                *v *= *w;
            }
        }
        fft.process_rows(&mut buf);
        maps.push(RangeDopplerMap {
            first_bin: pair.first_bin,
            rows,
            cols: m_p,
            values: buf.iter().map(|v| v.norm_sqr() * scale).collect(),
            range_bin_m: spec.range_bin_m,
            doppler_bin_hz: spec.doppler_bin_hz,
            direction: j,
        });
    }
    finish(setup, pair, scan, maps)
}

/// Delay-domain element noise projected through every beam, laid out as
/// `[direction][row][symbol]`.
fn exact_delay_noise(
    scan: &ScanBank,
    rows: usize,
    m: usize,
    var: f64,
    seed: StreamSeed,
) -> Vec<Complex64> {
    let n_dir = scan.len();
    let n_r = scan.elements();
    let mut rng = seed.rng();
    let mut out = vec![Complex64::new(0.0, 0.0); n_dir * rows * m];
    let mut element = vec![Complex64::new(0.0, 0.0); n_r];
    for r in 0..rows {
        for mm in 0..m {
            for e in element.iter_mut() {
                *e = complex_gaussian(&mut rng, var);
            }
            for (j, w) in scan.weights.iter().enumerate() {
                out[(j * rows + r) * m + mm] =
                    w.iter().zip(&element).map(|(a, b)| a * b).sum::<Complex64>();
            }
        }
    }
    out
}
