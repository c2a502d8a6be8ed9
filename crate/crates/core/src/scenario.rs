//! Scenario configuration, defaults and validation.
//!
//! Angles are held in radians. The JSON form carries them in degrees under
//! `*_deg` keys.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{BistaticPair, LocalFrame, Point2, Vec2};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant as used for the thermal noise floor, J/K.
pub const BOLTZMANN: f64 = 1.38e-23;

const IDENTITY_TOL: f64 = 1e-12;

mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(f64::deserialize(d)?.to_radians())
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(rad: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match rad {
                Some(r) => s.serialize_some(&r.to_degrees()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<f64>::deserialize(d)?.map(f64::to_radians))
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmNumerology {
    pub carrier_frequency_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub active_subcarriers: usize,
    pub symbols: usize,
    pub guard_time_s: f64,
    pub symbol_duration_s: f64,
    pub tx_power_w: f64,
    pub per_subcarrier_power_w: f64,
    pub noise_psd_w_per_hz: f64,
    pub noise_variance_w: f64,
}

/// Primary radio parameters from which an [`OfdmNumerology`] is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct NumerologyInputs {
    pub carrier_frequency_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub active_subcarriers: usize,
    pub symbols: usize,
    pub scan_time_s: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub temperature_k: f64,
}

impl Default for NumerologyInputs {
    fn default() -> Self {
        NumerologyInputs {
            carrier_frequency_hz: 28e9,
            subcarrier_spacing_hz: 120e3,
            active_subcarriers: 3168,
            symbols: 336,
            scan_time_s: 3e-3,
            tx_power_dbm: 20.0,
            noise_figure_db: 13.0,
            temperature_k: 290.0,
        }
    }
}

pub fn derive_numerology(inp: &NumerologyInputs) -> Result<OfdmNumerology> {
    if inp.symbols == 0 || inp.active_subcarriers == 0 {
        return Err(Error::InvalidConfig(vec![Violation::new(
            "numerology",
            "K >= 1 and M >= 1",
        )]));
    }
    let symbol_duration_s = inp.scan_time_s / inp.symbols as f64;
    let guard_time_s = symbol_duration_s - 1.0 / inp.subcarrier_spacing_hz;
    if !(guard_time_s > 0.0) {
        return Err(Error::InvalidConfig(vec![Violation::new(
            "numerology.guard_time_s",
            format!("T_scan / M - 1/delta_f > 0 (got {guard_time_s:e} s)"),
        )]));
    }
    let noise_psd = BOLTZMANN * inp.temperature_k * 10f64.powf(inp.noise_figure_db / 10.0);
    let tx_power_w = dbm_to_watts(inp.tx_power_dbm);
    Ok(OfdmNumerology {
        carrier_frequency_hz: inp.carrier_frequency_hz,
        subcarrier_spacing_hz: inp.subcarrier_spacing_hz,
        active_subcarriers: inp.active_subcarriers,
        symbols: inp.symbols,
        guard_time_s,
        symbol_duration_s,
        tx_power_w,
        per_subcarrier_power_w: tx_power_w / inp.active_subcarriers as f64,
        noise_psd_w_per_hz: noise_psd,
        noise_variance_w: noise_psd * inp.subcarrier_spacing_hz,
    })
}

impl OfdmNumerology {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn scan_time_s(&self) -> f64 {
        self.symbols as f64 * self.symbol_duration_s
    }

    /// Same radio with a different total transmit power.
    pub fn with_tx_power_dbm(&self, dbm: f64) -> Self {
        let tx_power_w = dbm_to_watts(dbm);
        OfdmNumerology {
            tx_power_w,
            per_subcarrier_power_w: tx_power_w / self.active_subcarriers as f64,
            ..self.clone()
        }
    }

    pub fn tx_power_dbm(&self) -> f64 {
        watts_to_dbm(self.tx_power_w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub position_m: Point2,
    pub tx_elements: usize,
    pub rx_elements: usize,
    #[serde(rename = "boresight_deg", with = "degrees")]
    pub boresight_rad: f64,
    /// Per-station override of the first scan direction.
    #[serde(
        rename = "scan_start_deg",
        with = "degrees::option",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub scan_start_rad: Option<f64>,
}

impl BaseStation {
    /// A station at `position_m` facing the origin.
    pub fn facing_origin(position_m: Point2, elements: usize) -> Self {
        BaseStation {
            position_m,
            tx_elements: elements,
            rx_elements: elements,
            boresight_rad: crate::geometry::wrap_angle((-position_m).bearing()),
            scan_start_rad: None,
        }
    }

    pub fn frame(&self) -> LocalFrame {
        LocalFrame::new(self.position_m, self.boresight_rad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub position_m: Point2,
    pub velocity_mps: Vec2,
    pub mean_rcs_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterPoint {
    pub position_m: Point2,
    pub mean_rcs_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// theta_0; direction j (1-based) is `start + j * step`.
    #[serde(rename = "start_deg", with = "degrees")]
    pub start_rad: f64,
    #[serde(rename = "step_deg", with = "degrees")]
    pub step_rad: f64,
    pub n_dir: usize,
    /// Receive beamwidth used for the resolution-cell area.
    #[serde(rename = "beamwidth_deg", with = "degrees")]
    pub beamwidth_rad: f64,
    /// Design peak-to-sidelobe ratio of the receive taper.
    pub sidelobe_db: f64,
}

impl ScanConfig {
    pub fn directions(&self, start_override: Option<f64>) -> Vec<f64> {
        let start = start_override.unwrap_or(self.start_rad);
        (1..=self.n_dir)
            .map(|j| start + j as f64 * self.step_rad)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceUnit {
    Meters,
    Pixels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Total false-alarm rate per range-angle map.
    pub far: f64,
    pub gamma_res_m2: f64,
    /// Excision threshold as a fraction of the aggregated-map peak.
    pub gamma_d: f64,
    pub xi_d: f64,
    pub xi_d_unit: DistanceUnit,
    /// Minimum duplicated weight inside the neighborhood of a core point.
    pub n_d: u64,
    /// Doppler notch half-width in bins.
    pub p_0: usize,
    pub apply_masks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx_m: f64,
    pub dy_m: f64,
    /// Center of pixel (0, 0).
    pub origin_m: Point2,
}

impl GridConfig {
    pub fn full() -> Self {
        GridConfig {
            nx: 701,
            ny: 701,
            dx_m: 0.1,
            dy_m: 0.1,
            origin_m: Point2::new(-35.0, -35.0),
        }
    }

    /// Reduced grid covering the same area.
    pub fn fast() -> Self {
        GridConfig {
            nx: 351,
            ny: 351,
            dx_m: 0.2,
            dy_m: 0.2,
            origin_m: Point2::new(-35.0, -35.0),
        }
    }

    pub fn pixel_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin_m.x + ix as f64 * self.dx_m,
            self.origin_m.y + iy as f64 * self.dy_m,
        )
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GospaConfig {
    pub p: f64,
    pub xi_g_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddingConfig {
    pub k_p: usize,
    pub m_p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Independent noise per scan direction.
    Factored,
    /// One element-space noise vector per (k, m), projected through every beam.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Single receive element gain G_R.
    pub rx_element_gain_dbi: f64,
    pub kaiser_beta: f64,
    pub noise_mode: NoiseMode,
    pub noise_enabled: bool,
}

/// Random-scene parameters for Monte Carlo trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n_trials: usize,
    pub targets: usize,
    pub target_area_m: [f64; 2],
    pub target_area_center_m: Point2,
    pub max_speed_mps: f64,
    pub min_separation_m: f64,
    pub target_rcs_m2: f64,
    pub n_clutter: usize,
    pub clutter_area_m: [f64; 2],
    pub clutter_rcs_m2: f64,
    /// Clutter is never drawn closer than this to a base station.
    pub clutter_keepout_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub numerology: OfdmNumerology,
    pub base_stations: Vec<BaseStation>,
    #[serde(default)]
    pub targets: Vec<Target>,
    #[serde(default)]
    pub clutter: Vec<ClutterPoint>,
    pub scan: ScanConfig,
    pub detection: DetectionConfig,
    pub grid: GridConfig,
    pub gospa: GospaConfig,
    pub padding: PaddingConfig,
    pub channel: ChannelConfig,
    pub monte_carlo: MonteCarloConfig,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::table1()
    }
}

impl ScenarioConfig {
    /// The reference five-station deployment at 28 GHz.
    pub fn table1() -> Self {
        let numerology = derive_numerology(&NumerologyInputs::default())
            .expect("reference numerology is valid");
        let k = numerology.active_subcarriers;
        let m = numerology.symbols;
        let base_stations = [
            (0.0, 60.0),
            (-60.0, 0.0),
            (-30.0, -52.0),
            (30.0, -52.0),
            (60.0, 0.0),
        ]
        .iter()
        .map(|&(x, y)| BaseStation::facing_origin(Point2::new(x, y), 50))
        .collect();
        ScenarioConfig {
            numerology,
            base_stations,
            targets: Vec::new(),
            clutter: Vec::new(),
            scan: ScanConfig {
                start_rad: (-58.8f64).to_radians(),
                step_rad: 2.4f64.to_radians(),
                n_dir: 50,
                beamwidth_rad: 2.4f64.to_radians(),
                sidelobe_db: 30.0,
            },
            detection: DetectionConfig {
                far: 1e-2,
                gamma_res_m2: 5.0,
                gamma_d: 0.05,
                xi_d: 2.0,
                xi_d_unit: DistanceUnit::Meters,
                n_d: 50,
                p_0: 2,
                apply_masks: true,
            },
            grid: GridConfig::full(),
            gospa: GospaConfig { p: 2.0, xi_g_m: 5.0 },
            padding: PaddingConfig { k_p: k, m_p: m },
            channel: ChannelConfig {
                rx_element_gain_dbi: 0.0,
                kaiser_beta: 3.0,
                noise_mode: NoiseMode::Factored,
                noise_enabled: true,
            },
            monte_carlo: MonteCarloConfig {
                n_trials: 50,
                targets: 3,
                target_area_m: [70.0, 70.0],
                target_area_center_m: Point2::ORIGIN,
                max_speed_mps: 20.0,
                min_separation_m: 1.0,
                target_rcs_m2: 0.5,
                n_clutter: 25,
                clutter_area_m: [120.0, 120.0],
                clutter_rcs_m2: 1.0,
                clutter_keepout_m: 1.0,
            },
            rng_seed: 1,
        }
    }

    /// The targets of the aggregated-map example scene (three movers).
    pub fn example_targets(mean_rcs_m2: f64) -> Vec<Target> {
        [
            ((-20.0, -5.0), (17.0, 19.0)),
            ((-6.0, -5.0), (19.0, 13.0)),
            ((10.0, 15.0), (3.0, 2.0)),
        ]
        .iter()
        .map(|&((x, y), (vx, vy))| Target {
            position_m: Point2::new(x, y),
            velocity_mps: Vec2::new(vx, vy),
            mean_rcs_m2,
        })
        .collect()
    }

    pub fn with_fast_grid(mut self) -> Self {
        self.grid = GridConfig::fast();
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.padding.k_p as f64 * self.numerology.subcarrier_spacing_hz)
    }

    pub fn rx_element_gain(&self) -> f64 {
        10f64.powf(self.channel.rx_element_gain_dbi / 10.0)
    }

    pub fn scan_directions(&self, bs: usize) -> Vec<f64> {
        self.scan
            .directions(self.base_stations[bs].scan_start_rad)
    }

    /// Pair with Tx `tx` and Rx `rx`.
    pub fn pair(&self, tx: usize, rx: usize) -> Result<BistaticPair> {
        BistaticPair::new(
            tx,
            rx,
            self.base_stations[tx].frame(),
            self.base_stations[rx].frame(),
            self.numerology.guard_time_s,
            self.range_resolution_m(),
        )
    }

    /// Every ordered (tx, rx) pair in round-robin order.
    pub fn pairs(&self) -> Result<Vec<BistaticPair>> {
        let n = self.base_stations.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        for tx in 0..n {
            for rx in (0..n).filter(|&rx| rx != tx) {
                out.push(self.pair(tx, rx)?);
            }
        }
        Ok(out)
    }

    /// Checks every invariant and returns the complete list of violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let mut check = |ok: bool, field: &str, constraint: String| {
            if !ok {
                v.push(Violation::new(field, constraint));
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;

        let n = &self.numerology;
        for (name, val) in [
            ("carrier_frequency_hz", n.carrier_frequency_hz),
            ("subcarrier_spacing_hz", n.subcarrier_spacing_hz),
            ("guard_time_s", n.guard_time_s),
            ("symbol_duration_s", n.symbol_duration_s),
            ("tx_power_w", n.tx_power_w),
            ("per_subcarrier_power_w", n.per_subcarrier_power_w),
            ("noise_psd_w_per_hz", n.noise_psd_w_per_hz),
            ("noise_variance_w", n.noise_variance_w),
        ] {
            check(pos(val), &format!("numerology.{name}"), "> 0".into());
        }
        check(n.active_subcarriers >= 1, "numerology.active_subcarriers", "K >= 1".into());
        check(n.symbols >= 1, "numerology.symbols", "M >= 1".into());
        check(
            close(n.symbol_duration_s, 1.0 / n.subcarrier_spacing_hz + n.guard_time_s),
            "numerology.symbol_duration_s",
            "T_s = 1/delta_f + T_g".into(),
        );
        check(
            n.active_subcarriers >= 1
                && close(n.per_subcarrier_power_w, n.tx_power_w / n.active_subcarriers as f64),
            "numerology.per_subcarrier_power_w",
            "P_avg = P_T / K".into(),
        );
        check(
            close(n.noise_variance_w, n.noise_psd_w_per_hz * n.subcarrier_spacing_hz),
            "numerology.noise_variance_w",
            "sigma_N^2 = N_0 * delta_f".into(),
        );

        check(
            self.base_stations.len() >= 2,
            "base_stations",
            "|S| >= 2".into(),
        );
        for (i, bs) in self.base_stations.iter().enumerate() {
            check(bs.tx_elements >= 1, &format!("base_stations[{i}].tx_elements"), ">= 1".into());
            check(bs.rx_elements >= 1, &format!("base_stations[{i}].rx_elements"), ">= 1".into());
            check(
                bs.boresight_rad > -PI && bs.boresight_rad <= PI,
                &format!("base_stations[{i}].boresight_deg"),
                "in (-180, 180]".into(),
            );
            for (j, other) in self.base_stations.iter().enumerate().skip(i + 1) {
                check(
                    bs.position_m != other.position_m,
                    &format!("base_stations[{i}].position_m"),
                    format!("distinct from base_stations[{j}]"),
                );
            }
        }

        let min_sep = self.monte_carlo.min_separation_m;
        for (i, t) in self.targets.iter().enumerate() {
            check(pos(t.mean_rcs_m2), &format!("targets[{i}].mean_rcs_m2"), "> 0".into());
            for (j, u) in self.targets.iter().enumerate().skip(i + 1) {
                check(
                    t.position_m.distance(u.position_m) >= min_sep,
                    &format!("targets[{i}].position_m"),
                    format!("at least {min_sep} m from targets[{j}]"),
                );
            }
        }
        for (i, c) in self.clutter.iter().enumerate() {
            check(pos(c.mean_rcs_m2), &format!("clutter[{i}].mean_rcs_m2"), "> 0".into());
        }

        let s = &self.scan;
        check(s.n_dir >= 1, "scan.n_dir", "N_dir >= 1".into());
        check(pos(s.step_rad), "scan.step_deg", "> 0".into());
        check(pos(s.beamwidth_rad), "scan.beamwidth_deg", "> 0".into());
        check(pos(s.sidelobe_db), "scan.sidelobe_db", "> 0".into());
        for (i, _) in self.base_stations.iter().enumerate() {
            if s.n_dir >= 1 {
                let dirs = self.scan_directions(i);
                let (lo, hi) = (dirs[0], dirs[dirs.len() - 1]);
                check(
                    lo > -PI / 2.0 && hi < PI / 2.0,
                    &format!("base_stations[{i}] scan sector"),
                    "all scan directions inside (-90, 90) deg of boresight".into(),
                );
            }
        }

        let d = &self.detection;
        check(pos(d.far), "detection.far", "> 0".into());
        check(pos(d.gamma_res_m2), "detection.gamma_res_m2", "> 0".into());
        check(d.gamma_d > 0.0 && d.gamma_d < 1.0, "detection.gamma_d", "in (0, 1)".into());
        check(pos(d.xi_d), "detection.xi_d", "> 0".into());
        check(d.n_d >= 1, "detection.n_d", ">= 1".into());
        check(
            2 * d.p_0 < self.padding.m_p,
            "detection.p_0",
            "p_0 < M_p / 2".into(),
        );

        let g = &self.grid;
        check(g.nx >= 1 && g.ny >= 1, "grid", "R_x, R_y >= 1".into());
        check(pos(g.dx_m) && pos(g.dy_m), "grid", "delta_x, delta_y > 0".into());

        check(self.gospa.p >= 1.0, "gospa.p", "p >= 1".into());
        check(pos(self.gospa.xi_g_m), "gospa.xi_g_m", "> 0".into());

        check(
            self.padding.k_p >= n.active_subcarriers,
            "padding.k_p",
            "K_p >= K".into(),
        );
        check(self.padding.m_p >= n.symbols, "padding.m_p", "M_p >= M".into());

        check(
            self.channel.kaiser_beta >= 0.0,
            "channel.kaiser_beta",
            ">= 0".into(),
        );
        check(
            self.channel.rx_element_gain_dbi.is_finite(),
            "channel.rx_element_gain_dbi",
            "finite".into(),
        );

        let mc = &self.monte_carlo;
        check(
            pos(mc.target_area_m[0]) && pos(mc.target_area_m[1]),
            "monte_carlo.target_area_m",
            "> 0".into(),
        );
        check(
            pos(mc.clutter_area_m[0]) && pos(mc.clutter_area_m[1]),
            "monte_carlo.clutter_area_m",
            "> 0".into(),
        );
        check(mc.max_speed_mps >= 0.0, "monte_carlo.max_speed_mps", ">= 0".into());
        check(mc.min_separation_m >= 0.0, "monte_carlo.min_separation_m", ">= 0".into());
        check(pos(mc.target_rcs_m2), "monte_carlo.target_rcs_m2", "> 0".into());
        check(pos(mc.clutter_rcs_m2), "monte_carlo.clutter_rcs_m2", "> 0".into());

        if v.is_empty() && self.padding.k_p > 0 {
            if let Err(e) = self.pairs() {
                v.push(Violation::new("base_stations", e.to_string()));
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn validated(self) -> Result<ValidConfig> {
        ValidConfig::new(self)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_TOL * a.abs().max(b.abs())
}

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

/// A configuration that passed [`ScenarioConfig::validate`]. Immutable and
/// cheap to share between workers.
#[derive(Debug, Clone)]
pub struct ValidConfig(Arc<ScenarioConfig>);

impl ValidConfig {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate().map_err(Error::InvalidConfig)?;
        Ok(ValidConfig(Arc::new(config)))
    }

    /// A modified copy, re-validated.
    pub fn modify(&self, f: impl FnOnce(&mut ScenarioConfig)) -> Result<Self> {
        let mut c = (*self.0).clone();
        f(&mut c);
        ValidConfig::new(c)
    }
}

impl Deref for ValidConfig {
    type Target = ScenarioConfig;
    fn deref(&self) -> &ScenarioConfig {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_is_valid() {
        let c = ScenarioConfig::table1();
        assert_eq!(c.validate(), Ok(()));
        assert_eq!(c.numerology.carrier_frequency_hz, 28e9);
        assert_eq!(c.numerology.active_subcarriers, 3168);
        assert_eq!(c.numerology.symbols, 336);
        assert_eq!(c.base_stations.len(), 5);
        assert_eq!(c.scan.n_dir, 50);
        assert_eq!(c.detection.gamma_res_m2, 5.0);
        assert_eq!(c.detection.far, 1e-2);
        assert!(c.base_stations.iter().all(|b| b.tx_elements == 50 && b.rx_elements == 50));
    }

    #[test]
    fn derived_numerology_values() {
        let n = derive_numerology(&NumerologyInputs::default()).unwrap();
        assert!((n.symbol_duration_s - 8.928_571_4e-6).abs() < 1e-12);
        assert!((n.guard_time_s - 0.595_238_1e-6).abs() < 1e-12);
        assert!((n.noise_variance_w - 9.58e-15).abs() < 0.01e-15, "{}", n.noise_variance_w);
        assert!((n.tx_power_w - 0.1).abs() < 1e-15);
        assert!((n.scan_time_s() - 3e-3).abs() < 1e-15);
    }

    #[test]
    fn zero_guard_time_is_rejected() {
        let inp = NumerologyInputs {
            scan_time_s: 336.0 / 120e3,
            ..Default::default()
        };
        assert!(derive_numerology(&inp).is_err());
    }

    #[test]
    fn violations_are_reported_by_field() {
        let mut c = ScenarioConfig::table1();
        c.padding.k_p = c.numerology.active_subcarriers - 1;
        let v = c.validate().unwrap_err();
        assert!(v.iter().any(|v| v.field == "padding.k_p" && v.constraint == "K_p >= K"));

        let mut c = ScenarioConfig::table1();
        c.base_stations.truncate(1);
        let v = c.validate().unwrap_err();
        assert!(v.iter().any(|v| v.constraint == "|S| >= 2"));

        let mut c = ScenarioConfig::table1();
        c.padding.m_p = 1;
        c.detection.gamma_d = 2.0;
        c.numerology.noise_variance_w *= 2.0;
        let v = c.validate().unwrap_err();
        assert!(v.len() >= 3, "{v:?}");
        assert_eq!(c.validate(), c.validate());
    }

    #[test]
    fn json_round_trip_uses_degrees() {
        let c = ScenarioConfig::table1();
        let text = c.to_json();
        assert!(text.contains("\"start_deg\": -58.8"));
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert!((back.scan.start_rad - c.scan.start_rad).abs() < 1e-15);
        assert_eq!(back.numerology, c.numerology);
        assert_eq!(back.base_stations.len(), 5);
    }

    #[test]
    fn boresights_face_the_origin() {
        let c = ScenarioConfig::table1();
        assert!((c.base_stations[0].boresight_rad + PI / 2.0).abs() < 1e-12);
        assert!((c.base_stations[1].boresight_rad).abs() < 1e-12);
    }

    #[test]
    fn pairs_cover_round_robin() {
        let c = ScenarioConfig::table1();
        let pairs = c.pairs().unwrap();
        assert_eq!(pairs.len(), 20);
        for tx in 0..5 {
            assert_eq!(pairs.iter().filter(|p| p.tx_index == tx).count(), 4);
        }
    }
}
