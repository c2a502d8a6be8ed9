//! Frequency-domain multistatic channel and beamformed receive symbols.
//!
//! Each scatterer contributes a rank-one term `alpha * b(theta) a(phi)^T` to
//! the channel matrix. After Tx precoding and Rx combining with beam `j`
//! that term collapses to the scalar `alpha * gamma(phi) * (w_j^T b(theta))`,
//! so synthesis never builds an `N_R x N_T` matrix.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::beamforming::{array_factor, ScanBank};
use crate::error::{Error, Result};
use crate::geometry::{bistatic_doppler, BistaticPair, Point2, Vec2};
use crate::rng::StreamSeed;
use crate::scenario::{
    ClutterPoint, NoiseMode, OfdmNumerology, ScenarioConfig, Target, SPEED_OF_LIGHT,
};

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScattererKind {
    Target,
    Clutter,
}

/// One point scatterer as seen by one Tx/Rx pair in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererRealization {
    pub kind: ScattererKind,
    pub position_m: Point2,
    pub velocity_mps: Vec2,
    /// Drawn RCS for this receiver.
    pub rcs_m2: f64,
    pub gain: Complex64,
    pub toa_s: f64,
    pub doppler_hz: f64,
    /// Departure angle in the Tx local frame.
    pub dod_rad: f64,
    /// Arrival angle in the Rx local frame.
    pub doa_rad: f64,
}

impl ScattererRealization {
    pub fn bistatic_range_m(&self) -> f64 {
        self.toa_s * SPEED_OF_LIGHT
    }
}

/// Radar-equation path amplitude `sqrt(G_R c^2 sigma / ((4 pi)^3 f_c^2 (r_T r_R)^2))`.
pub fn radar_gain_magnitude(rx_gain: f64, rcs_m2: f64, carrier_hz: f64, r_t: f64, r_r: f64) -> f64 {
    let num = rx_gain * SPEED_OF_LIGHT * SPEED_OF_LIGHT * rcs_m2;
    let den = (4.0 * PI).powi(3) * carrier_hz * carrier_hz * (r_t * r_r).powi(2);
    (num / den).sqrt()
}

/// Swerling-I draw: exponential RCS with the given mean.
pub fn draw_rcs(mean_rcs_m2: f64, rng: &mut ChaCha8Rng) -> f64 {
    let e: f64 = Exp1.sample(rng);
    mean_rcs_m2 * e
}

/// Realizes every target and clutter point for one pair.
///
/// Per scatterer, in order (targets first), one RCS draw then one phase draw.
pub fn draw_scatterers(
    config: &ScenarioConfig,
    targets: &[Target],
    clutter: &[ClutterPoint],
    pair: &BistaticPair,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ScattererRealization>> {
    let fc = config.numerology.carrier_frequency_hz;
    let g_r = config.rx_element_gain();
    let tx = pair.tx_frame.origin;
    let rx = pair.rx_frame.origin;
    let moving = targets
        .iter()
        .map(|t| (ScattererKind::Target, t.position_m, t.velocity_mps, t.mean_rcs_m2));
    let fixed = clutter
        .iter()
        .map(|c| (ScattererKind::Clutter, c.position_m, Vec2::ORIGIN, c.mean_rcs_m2));
    moving
        .chain(fixed)
        .map(|(kind, p, v, mean)| {
            let r_t = p.distance(tx);
            let r_r = p.distance(rx);
            if r_t == 0.0 || r_r == 0.0 {
                return Err(Error::Geometry(format!(
                    "scatterer at ({}, {}) coincides with a node",
                    p.x, p.y
                )));
            }
            let rcs = draw_rcs(mean, rng);
            let phase = rng.gen::<f64>() * 2.0 * PI;
            let doppler_hz = match kind {
                ScattererKind::Target => bistatic_doppler(tx, rx, p, v, fc)?,
                ScattererKind::Clutter => 0.0,
            };
            Ok(ScattererRealization {
                kind,
                position_m: p,
                velocity_mps: v,
                rcs_m2: rcs,
                gain: Complex64::from_polar(radar_gain_magnitude(g_r, rcs, fc, r_t, r_r), phase),
                toa_s: (r_t + r_r) / SPEED_OF_LIGHT,
                doppler_hz,
                dod_rad: pair.tx_frame.angle_of(p),
                doa_rad: pair.rx_frame.angle_of(p),
            })
        })
        .collect()
}

/// Unit-modulus QPSK symbols, row-major `K x M`.
pub fn draw_symbols(k: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let alphabet = [
        Complex64::new(a, a),
        Complex64::new(-a, a),
        Complex64::new(-a, -a),
        Complex64::new(a, -a),
    ];
    (0..k * m).map(|_| alphabet[rng.gen_range(0..4)]).collect()
}

/// Circularly symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub variance_w: f64,
    pub enabled: bool,
}

impl NoiseSpec {
    pub fn off() -> Self {
        NoiseSpec {
            mode: NoiseMode::Factored,
            variance_w: 0.0,
            enabled: false,
        }
    }

    pub fn from_config(config: &ScenarioConfig) -> Self {
        NoiseSpec {
            mode: config.channel.noise_mode,
            variance_w: config.numerology.noise_variance_w,
            enabled: config.channel.noise_enabled,
        }
    }
}

/// Combined receive symbols, one row-major `K x M` grid per scan direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedGrid {
    pub tx_index: usize,
    pub rx_index: usize,
    pub k: usize,
    pub m: usize,
    pub directions: Vec<Vec<Complex64>>,
}

/// `c[l][j] = alpha_l * gamma(phi_l) * (w_j^T b(theta_l))`.
pub fn path_coefficients(
    scatterers: &[ScattererRealization],
    tx_weights: &[Complex64],
    scan: &ScanBank,
) -> Vec<Vec<Complex64>> {
    scatterers
        .iter()
        .map(|s| {
            let gamma = array_factor(tx_weights, s.dod_rad);
            scan.responses(s.doa_rad)
                .into_iter()
                .map(|r| s.gain * gamma * r)
                .collect()
        })
        .collect()
}

/// Checks `||w_T||^2 = P_avg` and unit-norm scan beams.
pub fn check_weights(tx_weights: &[Complex64], p_avg: f64, scan: &ScanBank) -> Result<()> {
    let e: f64 = tx_weights.iter().map(|v| v.norm_sqr()).sum();
    if (e - p_avg).abs() > WEIGHT_TOLERANCE * p_avg {
        return Err(Error::Beamforming(format!(
            "Tx weight energy {e} differs from P_avg {p_avg}"
        )));
    }
    for (j, w) in scan.weights.iter().enumerate() {
        let n: f64 = w.iter().map(|v| v.norm_sqr()).sum();
        if (n - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Beamforming(format!(
                "scan beam {j} has squared norm {n}"
            )));
        }
    }
    Ok(())
}

/// Per-scatterer phasors along subcarriers and symbols.
struct Phasors {
    range: Vec<Vec<Complex64>>,
    doppler: Vec<Vec<Complex64>>,
}

impl Phasors {
    fn new(num: &OfdmNumerology, scatterers: &[ScattererRealization]) -> Self {
        let (k, m) = (num.active_subcarriers, num.symbols);
        let range = scatterers
            .iter()
            .map(|s| {
                let step = -2.0 * PI * num.subcarrier_spacing_hz * s.toa_s;
                (0..k).map(|kk| Complex64::from_polar(1.0, step * kk as f64)).collect()
            })
            .collect();
        let doppler = scatterers
            .iter()
            .map(|s| {
                let step = 2.0 * PI * num.symbol_duration_s * s.doppler_hz;
                (0..m).map(|mm| Complex64::from_polar(1.0, step * mm as f64)).collect()
            })
            .collect();
        Phasors { range, doppler }
    }

    /// Noise-free beamformed symbols of one direction, before the data symbols.
    fn direction(&self, coeff: &[Vec<Complex64>], j: usize, out: &mut [Complex64]) {
        let m = self.doppler.first().map_or(0, Vec::len);
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (l, c) in coeff.iter().enumerate() {
            let cj = c[j];
            for (row, rk) in out.chunks_exact_mut(m).zip(&self.range[l]) {
                let a = cj * rk;
                for (v, d) in row.iter_mut().zip(&self.doppler[l]) {
                    *v += a * d;
                }
            }
        }
    }
}

/// Beamformed receive symbols `y_{j,k,m}` for every scan direction.
///
/// Factored noise uses stream `noise_seed.child(j)` per direction; exact
/// noise draws one element-space vector per `(k, m)` from `noise_seed` and
/// projects it through every beam.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_beamformed(
    num: &OfdmNumerology,
    pair: (usize, usize),
    scatterers: &[ScattererRealization],
    tx_weights: &[Complex64],
    scan: &ScanBank,
    symbols: &[Complex64],
    noise: &NoiseSpec,
    noise_seed: StreamSeed,
) -> Result<BeamformedGrid> {
    let (k, m) = (num.active_subcarriers, num.symbols);
    if symbols.len() != k * m {
        return Err(Error::Dimension(format!(
            "{} symbols for a {k} x {m} grid",
            symbols.len()
        )));
    }
    check_weights(tx_weights, num.per_subcarrier_power_w, scan)?;
    let coeff = path_coefficients(scatterers, tx_weights, scan);
    let phasors = Phasors::new(num, scatterers);
    let mut directions = vec![vec![Complex64::new(0.0, 0.0); k * m]; scan.len()];
    for (j, grid) in directions.iter_mut().enumerate() {
        phasors.direction(&coeff, j, grid);
        for (v, x) in grid.iter_mut().zip(symbols) {
            *v *= x;
        }
    }
    if noise.enabled {
        match noise.mode {
            NoiseMode::Factored => {
                for (j, grid) in directions.iter_mut().enumerate() {
                    let mut rng = noise_seed.child(j as u64).rng();
                    for v in grid.iter_mut() {
                        *v += complex_gaussian(&mut rng, noise.variance_w);
                    }
                }
            }
            NoiseMode::Exact => {
                let mut rng = noise_seed.rng();
                let n_r = scan.elements();
                let mut element = vec![Complex64::new(0.0, 0.0); n_r];
                for idx in 0..k * m {
                    for e in element.iter_mut() {
                        *e = complex_gaussian(&mut rng, noise.variance_w);
                    }
                    for (grid, w) in directions.iter_mut().zip(&scan.weights) {
                        grid[idx] += w.iter().zip(&element).map(|(a, b)| a * b).sum::<Complex64>();
                    }
                }
            }
        }
    }
    Ok(BeamformedGrid {
        tx_index: pair.0,
        rx_index: pair.1,
        k,
        m,
        directions,
    })
}

/// Symbol-free grid `g = y x*` for one direction with factored noise,
/// without materializing the other directions.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_direction_filtered(
    num: &OfdmNumerology,
    coeff: &[Vec<Complex64>],
    scatterers: &[ScattererRealization],
    j: usize,
    symbols: &[Complex64],
    noise: &NoiseSpec,
    noise_seed: StreamSeed,
    out: &mut [Complex64],
) -> Result<()> {
    let (k, m) = (num.active_subcarriers, num.symbols);
    if out.len() != k * m || symbols.len() != k * m {
        return Err(Error::Dimension("direction buffer size".into()));
    }
    if noise.enabled && noise.mode == NoiseMode::Exact {
        return Err(Error::Dimension(
            "exact noise needs every direction at once".into(),
        ));
    }
    Phasors::new(num, scatterers).direction(coeff, j, out);
    if noise.enabled {
        let mut rng = noise_seed.child(j as u64).rng();
        for (v, x) in out.iter_mut().zip(symbols) {
            *v = (*v * x + complex_gaussian(&mut rng, noise.variance_w)) * x.conj();
        }
    }
    Ok(())
}

/// Reciprocal filtering `g = y / x`, applied as `y x*` for unit-modulus symbols.
pub fn reciprocal_filter(grid: &[Complex64], symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    if grid.len() != symbols.len() {
        return Err(Error::Dimension(format!(
            "{} samples for {} symbols",
            grid.len(),
            symbols.len()
        )));
    }
    Ok(grid.iter().zip(symbols).map(|(y, x)| y * x.conj()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{design_scan_bank, design_wide_tx_beam, steering};
    use crate::geometry::LocalFrame;
    use crate::scenario::{derive_numerology, NumerologyInputs};
    use rand::SeedableRng;

    fn small_numerology(k: usize, m: usize) -> OfdmNumerology {
        let mut n = derive_numerology(&NumerologyInputs::default()).unwrap();
        n.active_subcarriers = k;
        n.symbols = m;
        n.per_subcarrier_power_w = n.tx_power_w / k as f64;
        n
    }

    fn pair() -> BistaticPair {
        let tx = LocalFrame::new(Point2::new(0.0, 60.0), -PI / 2.0);
        let rx = LocalFrame::new(Point2::new(-60.0, 0.0), 0.0);
        BistaticPair::new(0, 1, tx, rx, 0.5952e-6, 0.7886).unwrap()
    }

    #[test]
    fn radar_equation_example() {
        let a = radar_gain_magnitude(1.0, 1.0, 28e9, 60.0, 60.0);
        assert!((a - 6.68e-8).abs() < 0.01e-8, "{a}");
    }

    #[test]
    fn realizations_follow_the_radar_equation() {
        let config = ScenarioConfig::table1();
        let targets = ScenarioConfig::example_targets(0.5);
        let clutter = vec![ClutterPoint {
            position_m: Point2::new(5.0, -3.0),
            mean_rcs_m2: 1.0,
        }];
        let p = pair();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = draw_scatterers(&config, &targets, &clutter, &p, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        for r in &s {
            let rt = r.position_m.distance(p.tx_frame.origin);
            let rr = r.position_m.distance(p.rx_frame.origin);
            let want = radar_gain_magnitude(1.0, r.rcs_m2, 28e9, rt, rr);
            assert!((r.gain.norm() - want).abs() <= 1e-12 * want);
        }
        assert_eq!(s[3].kind, ScattererKind::Clutter);
        assert_eq!(s[3].doppler_hz, 0.0);
        assert!(s[0].doppler_hz != 0.0);
    }

    #[test]
    fn coincident_scatterer_is_an_error() {
        let config = ScenarioConfig::table1();
        let clutter = vec![ClutterPoint {
            position_m: Point2::new(-60.0, 0.0),
            mean_rcs_m2: 1.0,
        }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_scatterers(&config, &[], &clutter, &pair(), &mut rng).is_err());
    }

    #[test]
    fn rcs_mean_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| draw_rcs(0.5, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn qpsk_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = draw_symbols(1000, 1000, &mut rng);
        assert!(x.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        let mean: Complex64 = x.iter().sum::<Complex64>() / x.len() as f64;
        assert!(mean.norm() < 3e-3);
        let mut counts = [0usize; 4];
        for v in &x {
            let q = match (v.re > 0.0, v.im > 0.0) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            counts[q] += 1;
        }
        for c in counts {
            assert!((c as f64 / 250_000.0 - 1.0).abs() < 0.01, "{counts:?}");
        }
    }

    fn setup(k: usize, m: usize, n: usize) -> (OfdmNumerology, Vec<Complex64>, ScanBank) {
        let num = small_numerology(k, m);
        let tx = design_wide_tx_beam(n, (-1.0, 1.0), num.per_subcarrier_power_w).unwrap();
        let dirs: Vec<f64> = (0..5).map(|j| -0.6 + 0.3 * j as f64).collect();
        (num, tx.weights, design_scan_bank(n, &dirs, 30.0))
    }

    fn scatterer(p: Point2, v: Vec2, pair: &BistaticPair, gain: Complex64, fc: f64) -> ScattererRealization {
        let tx = pair.tx_frame.origin;
        let rx = pair.rx_frame.origin;
        ScattererRealization {
            kind: ScattererKind::Target,
            position_m: p,
            velocity_mps: v,
            rcs_m2: 1.0,
            gain,
            toa_s: (p.distance(tx) + p.distance(rx)) / SPEED_OF_LIGHT,
            doppler_hz: bistatic_doppler(tx, rx, p, v, fc).unwrap(),
            dod_rad: pair.tx_frame.angle_of(p),
            doa_rad: pair.rx_frame.angle_of(p),
        }
    }

    #[test]
    fn zero_scatterers_without_noise_is_silent() {
        let (num, w, scan) = setup(8, 4, 4);
        let x = draw_symbols(8, 4, &mut ChaCha8Rng::seed_from_u64(0));
        let g = synthesize_beamformed(&num, (0, 1), &[], &w, &scan, &x, &NoiseSpec::off(), StreamSeed::new(0))
            .unwrap();
        assert_eq!(g.directions.len(), 5);
        assert!(g.directions.iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn static_scatterer_is_a_pure_range_tone() {
        let (num, w, scan) = setup(16, 6, 4);
        let p = pair();
        let s = scatterer(Point2::new(0.0, 0.0), Vec2::ORIGIN, &p, Complex64::new(1e-6, 0.0), 28e9);
        let x = vec![Complex64::new(1.0, 0.0); 96];
        let g = synthesize_beamformed(&num, (0, 1), &[s.clone()], &w, &scan, &x, &NoiseSpec::off(), StreamSeed::new(0))
            .unwrap();
        let y = &g.directions[2];
        let step = Complex64::from_polar(1.0, -2.0 * PI * num.subcarrier_spacing_hz * s.toa_s);
        for kk in 0..15 {
            for mm in 0..6 {
                assert!((y[kk * 6 + mm] - y[kk * 6]).norm() < 1e-12 * y[0].norm());
                assert!((y[(kk + 1) * 6 + mm] - y[kk * 6 + mm] * step).norm() < 1e-9 * y[0].norm());
            }
        }
    }

    /// `w_j^T (H x_tilde)` with the full channel matrix.
    fn brute_force(
        num: &OfdmNumerology,
        scatterers: &[ScattererRealization],
        w_t: &[Complex64],
        scan: &ScanBank,
        x: &[Complex64],
    ) -> Vec<Vec<Complex64>> {
        let (k, m) = (num.active_subcarriers, num.symbols);
        let (n_t, n_r) = (w_t.len(), scan.elements());
        let mut out = vec![vec![Complex64::new(0.0, 0.0); k * m]; scan.len()];
        for kk in 0..k {
            for mm in 0..m {
                let mut h = vec![Complex64::new(0.0, 0.0); n_r * n_t];
                for s in scatterers {
                    let ph = Complex64::from_polar(
                        1.0,
                        2.0 * PI * (mm as f64 * num.symbol_duration_s * s.doppler_hz
                            - kk as f64 * num.subcarrier_spacing_hz * s.toa_s),
                    );
                    let a = steering(n_t, s.dod_rad);
                    let b = steering(n_r, s.doa_rad);
                    for r in 0..n_r {
                        for t in 0..n_t {
                            h[r * n_t + t] += s.gain * ph * b[r] * a[t];
                        }
                    }
                }
                let xt: Vec<Complex64> = w_t.iter().map(|w| w * x[kk * m + mm]).collect();
                let y: Vec<Complex64> = (0..n_r)
                    .map(|r| (0..n_t).map(|t| h[r * n_t + t] * xt[t]).sum())
                    .collect();
                for (j, wr) in scan.weights.iter().enumerate() {
                    out[j][kk * m + mm] = wr.iter().zip(&y).map(|(a, b)| a * b).sum();
                }
            }
        }
        out
    }

    #[test]
    fn factored_synthesis_matches_full_channel_matrix() {
        let (num, w, scan) = setup(8, 4, 4);
        let p = pair();
        let s = vec![
            scatterer(Point2::new(3.0, 4.0), Vec2::new(10.0, -5.0), &p, Complex64::from_polar(2e-7, 0.4), 28e9),
            scatterer(Point2::new(-10.0, 20.0), Vec2::ORIGIN, &p, Complex64::from_polar(5e-8, 2.0), 28e9),
        ];
        let x = draw_symbols(8, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let g = synthesize_beamformed(&num, (0, 1), &s, &w, &scan, &x, &NoiseSpec::off(), StreamSeed::new(0))
            .unwrap();
        let want = brute_force(&num, &s, &w, &scan, &x);
        for (a, b) in g.directions.iter().flatten().zip(want.iter().flatten()) {
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-30), "{a} {b}");
        }
    }

    #[test]
    fn streaming_direction_matches_full_synthesis() {
        let (num, w, scan) = setup(8, 4, 4);
        let p = pair();
        let s = vec![scatterer(Point2::new(3.0, 4.0), Vec2::new(10.0, -5.0), &p, Complex64::from_polar(2e-7, 0.4), 28e9)];
        let x = draw_symbols(8, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let noise = NoiseSpec {
            mode: NoiseMode::Factored,
            variance_w: 1e-14,
            enabled: true,
        };
        let seed = StreamSeed::new(3);
        let g = synthesize_beamformed(&num, (0, 1), &s, &w, &scan, &x, &noise, seed).unwrap();
        let coeff = path_coefficients(&s, &w, &scan);
        let mut out = vec![Complex64::new(0.0, 0.0); 32];
        synthesize_direction_filtered(&num, &coeff, &s, 3, &x, &noise, seed, &mut out).unwrap();
        let want = reciprocal_filter(&g.directions[3], &x).unwrap();
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12 * b.norm());
        }
    }

    #[test]
    fn noise_only_grid_has_the_noise_variance() {
        let (num, w, scan) = setup(1000, 200, 8);
        let x = vec![Complex64::new(1.0, 0.0); 200_000];
        for mode in [NoiseMode::Factored, NoiseMode::Exact] {
            let noise = NoiseSpec {
                mode,
                variance_w: 3.0,
                enabled: true,
            };
            let g = synthesize_beamformed(&num, (0, 1), &[], &w, &scan, &x, &noise, StreamSeed::new(9))
                .unwrap();
            let mut all = g.directions[0].clone();
            all.extend_from_slice(&g.directions[4]);
            let n = all.len() as f64;
            let var = all.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
            let pseudo: Complex64 = all.iter().map(|v| v * v).sum::<Complex64>() / n;
            assert!((var - 3.0).abs() / 3.0 < 0.01, "{mode:?} {var}");
            assert!(pseudo.norm() / 3.0 < 0.01);
        }
    }

    #[test]
    fn doubling_power_doubles_eirp() {
        let a = design_wide_tx_beam(16, (-0.8, 0.8), 1.0).unwrap();
        let b = design_wide_tx_beam(16, (-0.8, 0.8), 2.0).unwrap();
        for t in [-0.5, 0.0, 0.3, 1.2] {
            let ga = array_factor(&a.weights, t).norm_sqr();
            let gb = array_factor(&b.weights, t).norm_sqr();
            assert!((gb - 2.0 * ga).abs() < 1e-12 * gb);
        }
    }

    #[test]
    fn unnormalized_weights_are_rejected() {
        let (num, mut w, scan) = setup(8, 4, 4);
        w[0] *= 2.0;
        let x = vec![Complex64::new(1.0, 0.0); 32];
        assert!(matches!(
            synthesize_beamformed(&num, (0, 1), &[], &w, &scan, &x, &NoiseSpec::off(), StreamSeed::new(0)),
            Err(Error::Beamforming(_))
        ));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let (num, w, scan) = setup(8, 4, 4);
        let x = vec![Complex64::new(1.0, 0.0); 32];
        let noise = NoiseSpec {
            mode: NoiseMode::Exact,
            variance_w: 1.0,
            enabled: true,
        };
        let a = synthesize_beamformed(&num, (0, 1), &[], &w, &scan, &x, &noise, StreamSeed::new(1)).unwrap();
        let b = synthesize_beamformed(&num, (0, 1), &[], &w, &scan, &x, &noise, StreamSeed::new(1)).unwrap();
        assert_eq!(a, b);
    }
}
