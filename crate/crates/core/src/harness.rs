//! Round-robin search cycles, Monte Carlo trials and parameter sweeps.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::beamforming::BeamformerBank;
use crate::channel::{draw_scatterers, NoiseSpec};
use crate::detection::{detect, DetectionSet};
use crate::error::{Error, Result};
use crate::fusion::{aggregate_rounds, fuse_round, threshold_map, CartesianMap, ResampleTable, ThresholdSpec};
use crate::geometry::{BistaticPair, Point2, Vec2};
use crate::metrics::{gospa, GospaResult};
use crate::periodogram::{kaiser_window, PeriodogramSpec};
use crate::reliability::{apply_mask, MaskCache, ReliabilityMask};
use crate::rng::{stage, StreamSeed};
use crate::scenario::{ClutterPoint, MonteCarloConfig, Target, ValidConfig};
use crate::sensing::{sense_pair, PairSeeds, PairSensing, SensingPath, SensingSetup};

/// Search-phase duration: one scan of `M` symbols per transmitting station.
pub fn search_time(config: &crate::ScenarioConfig) -> f64 {
    config.numerology.scan_time_s() * config.base_stations.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskSelection {
    On,
    Off,
    Both,
}

impl MaskSelection {
    pub fn from_flag(apply_masks: bool) -> Self {
        if apply_masks {
            MaskSelection::On
        } else {
            MaskSelection::Off
        }
    }

    /// Variants in output order, `true` meaning masked.
    pub fn variants(self) -> &'static [bool] {
        match self {
            MaskSelection::On => &[true],
            MaskSelection::Off => &[false],
            MaskSelection::Both => &[true, false],
        }
    }
}

/// One Monte Carlo scene.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub trial_id: u64,
    pub seed: StreamSeed,
    pub targets: Vec<Target>,
    pub clutter: Vec<ClutterPoint>,
}

impl TrialSpec {
    /// Draws a scene for `trial_id`.
    ///
    /// Targets and clutter listed in the config are used as given; otherwise
    /// `q` targets and `monte_carlo.n_clutter` clutter points are drawn.
    pub fn draw(config: &ValidConfig, trial_id: u64, q: usize, target_rcs_m2: f64) -> Result<Self> {
        let seed = StreamSeed::new(config.rng_seed).child(trial_id);
        let mc = &config.monte_carlo;
        let targets = if config.targets.is_empty() {
            draw_targets(mc, q, target_rcs_m2, &mut seed.child(stage::SCENE).rng())?
        } else {
            config.targets.clone()
        };
        let clutter = if config.clutter.is_empty() {
            let nodes: Vec<Point2> = config.base_stations.iter().map(|b| b.position_m).collect();
            draw_clutter(mc, &nodes, &mut seed.child(stage::CLUTTER).rng())?
        } else {
            config.clutter.clone()
        };
        Ok(TrialSpec {
            trial_id,
            seed,
            targets,
            clutter,
        })
    }

    /// Scene with the configured target count and RCS.
    pub fn from_config(config: &ValidConfig, trial_id: u64) -> Result<Self> {
        let mc = &config.monte_carlo;
        Self::draw(config, trial_id, mc.targets, mc.target_rcs_m2)
    }

    pub fn truth(&self) -> Vec<Point2> {
        self.targets.iter().map(|t| t.position_m).collect()
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, center: Point2, size: [f64; 2]) -> Point2 {
    Point2::new(
        center.x + (rng.gen::<f64>() - 0.5) * size[0],
        center.y + (rng.gen::<f64>() - 0.5) * size[1],
    )
}

const MAX_ATTEMPTS_PER_POINT: usize = 10_000;

/// Uniform positions with pairwise separation by rejection, uniform velocity components.
pub fn draw_targets(
    mc: &MonteCarloConfig,
    q: usize,
    mean_rcs_m2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Target>> {
    let mut out: Vec<Target> = Vec::with_capacity(q);
    let mut attempts = 0;
    while out.len() < q {
        attempts += 1;
        if attempts > MAX_ATTEMPTS_PER_POINT * q {
            return Err(Error::Geometry(format!(
                "cannot place {q} targets {} m apart in {:?} m",
                mc.min_separation_m, mc.target_area_m
            )));
        }
        let p = uniform_in(rng, mc.target_area_center_m, mc.target_area_m);
        let v = Vec2::new(
            rng.gen_range(-1.0..=1.0) * mc.max_speed_mps,
            rng.gen_range(-1.0..=1.0) * mc.max_speed_mps,
        );
        if out.iter().all(|t| t.position_m.distance(p) >= mc.min_separation_m) {
            out.push(Target {
                position_m: p,
                velocity_mps: v,
                mean_rcs_m2,
            });
        }
    }
    Ok(out)
}

/// Static clutter uniform over the surveillance area, kept away from the stations.
pub fn draw_clutter(mc: &MonteCarloConfig, nodes: &[Point2], rng: &mut ChaCha8Rng) -> Result<Vec<ClutterPoint>> {
    let n = mc.n_clutter;
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > MAX_ATTEMPTS_PER_POINT * n {
            return Err(Error::Geometry("cannot place clutter away from the stations".into()));
        }
        let p = uniform_in(rng, Point2::ORIGIN, mc.clutter_area_m);
        if nodes.iter().all(|&b| b.distance(p) >= mc.clutter_keepout_m) {
            out.push(ClutterPoint {
                position_m: p,
                mean_rcs_m2: mc.clutter_rcs_m2,
            });
        }
    }
    Ok(out)
}

/// Everything that depends on the configuration but not on the trial.
pub struct Pipeline {
    config: ValidConfig,
    banks: Vec<BeamformerBank>,
    pairs: Vec<BistaticPair>,
    masks: Vec<Arc<ReliabilityMask>>,
    tables: Vec<ResampleTable>,
    thresholds: Vec<ThresholdSpec>,
    setup: SensingSetup,
    tx_power_dbm: f64,
}

impl Pipeline {
    pub fn new(config: &ValidConfig) -> Result<Self> {
        Self::with_cache(config, &MaskCache::new())
    }

    pub fn with_cache(config: &ValidConfig, cache: &MaskCache) -> Result<Self> {
        let c = config;
        let n = &c.numerology;
        let banks = beam_banks(c)?;
        let pairs = c.pairs().map_err(|e| e.in_stage("geometry"))?;
        let mut masks = Vec::with_capacity(pairs.len());
        let mut tables = Vec::with_capacity(pairs.len());
        let mut thresholds = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            let angles = &banks[pair.rx_index].scan.directions;
            masks.push(cache.get_or_build(pair, angles, c.scan.beamwidth_rad, c.detection.gamma_res_m2));
            tables.push(ResampleTable::new(pair, angles, &c.grid).map_err(|e| e.in_stage("fusion"))?);
            thresholds.push(
                ThresholdSpec::new(c.detection.far, pair.gated_bins() * angles.len(), n.noise_variance_w)
                    .map_err(|e| e.in_stage("fusion"))?,
            );
        }
        let periodogram = PeriodogramSpec::new(
            n.active_subcarriers,
            n.symbols,
            c.padding.k_p,
            c.padding.m_p,
            kaiser_window(n.symbols, c.channel.kaiser_beta),
        )?
        .with_axes(
            c.range_resolution_m(),
            1.0 / (c.padding.m_p as f64 * n.symbol_duration_s),
        );
        let setup = SensingSetup {
            numerology: n.clone(),
            periodogram,
            p_0: c.detection.p_0,
            noise: NoiseSpec::from_config(c),
            path: SensingPath::Auto,
            keep_rd_maps: false,
        };
        Ok(Pipeline {
            config: config.clone(),
            banks,
            pairs,
            masks,
            tables,
            thresholds,
            setup,
            tx_power_dbm: n.tx_power_dbm(),
        })
    }

    pub fn with_sensing_path(mut self, path: SensingPath) -> Self {
        self.setup.path = path;
        self
    }

    /// Keep every gated range-Doppler map in the trial output.
    pub fn keep_rd_maps(mut self, keep: bool) -> Self {
        self.setup.keep_rd_maps = keep;
        self
    }

    /// Same geometry at another transmit power.
    pub fn with_tx_power_dbm(&self, dbm: f64) -> Result<Self> {
        let config = self
            .config
            .modify(|c| c.numerology = c.numerology.with_tx_power_dbm(dbm))?;
        let banks = beam_banks(&config)?;
        let mut setup = self.setup.clone();
        setup.numerology = config.numerology.clone();
        Ok(Pipeline {
            config,
            banks,
            pairs: self.pairs.clone(),
            masks: self.masks.clone(),
            tables: self.tables.clone(),
            thresholds: self.thresholds.clone(),
            setup,
            tx_power_dbm: dbm,
        })
    }

    pub fn config(&self) -> &ValidConfig {
        &self.config
    }

    pub fn banks(&self) -> &[BeamformerBank] {
        &self.banks
    }

    /// Ordered (tx, rx) pairs, grouped by round.
    pub fn pairs(&self) -> &[BistaticPair] {
        &self.pairs
    }

    pub fn masks(&self) -> &[Arc<ReliabilityMask>] {
        &self.masks
    }

    pub fn tables(&self) -> &[ResampleTable] {
        &self.tables
    }

    pub fn thresholds(&self) -> &[ThresholdSpec] {
        &self.thresholds
    }

    pub fn setup(&self) -> &SensingSetup {
        &self.setup
    }

    pub fn tx_power_dbm(&self) -> f64 {
        self.tx_power_dbm
    }

    /// Runs the sensing chain of pair `index` for one scene.
    pub fn sense(&self, index: usize, trial: &TrialSpec) -> Result<PairSensing> {
        let pair = &self.pairs[index];
        let (tx, rx) = (pair.tx_index as u64, pair.rx_index as u64);
        let mut rng = trial.seed.path(&[stage::SCATTERERS, tx, rx]).rng();
        let scatterers = draw_scatterers(&self.config, &trial.targets, &trial.clutter, pair, &mut rng)
            .map_err(|e| e.in_stage("channel"))?;
        let seeds = PairSeeds {
            noise: trial.seed.path(&[stage::NOISE, tx, rx]),
            symbols: trial.seed.path(&[stage::SYMBOLS, tx]),
        };
        let scan = &self.banks[pair.rx_index].scan;
        let tx_w = &self.banks[pair.tx_index].tx.weights;
        sense_pair(&self.setup, pair, &scatterers, tx_w, scan, seeds).map_err(|e| e.in_stage("sensing"))
    }
}

fn beam_banks(c: &ValidConfig) -> Result<Vec<BeamformerBank>> {
    c.base_stations
        .iter()
        .enumerate()
        .map(|(i, bs)| {
            BeamformerBank::design(
                bs.tx_elements,
                bs.rx_elements,
                &c.scan_directions(i),
                c.scan.beamwidth_rad,
                c.scan.sidelobe_db,
                c.numerology.per_subcarrier_power_w,
            )
            .map_err(|e| e.in_stage("beamforming"))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrialOptions {
    pub keep_aggregated: bool,
    pub keep_sensing: bool,
}

/// Outcome of one trial under one masking variant.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub trial_id: u64,
    pub q: usize,
    pub p_t_dbm: f64,
    pub rcs_mean_m2: f64,
    pub masks_applied: bool,
    pub truth: Vec<Point2>,
    pub detections: DetectionSet,
    pub metrics: GospaResult,
    /// Receiver maps summed into the aggregate.
    pub maps_fused: usize,
    pub aggregated: Option<CartesianMap>,
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub reports: Vec<DetectionReport>,
    pub sensing: Vec<PairSensing>,
}

/// One full search cycle: every station transmits once while the others receive.
pub fn run_trial(
    pipeline: &Pipeline,
    trial: &TrialSpec,
    masks: MaskSelection,
    opts: TrialOptions,
) -> Result<TrialOutput> {
    let config = &pipeline.config;
    let variants = masks.variants();
    let n_bs = config.base_stations.len();
    let per_round = n_bs - 1;
    let mut rounds: Vec<Vec<CartesianMap>> = vec![Vec::with_capacity(n_bs); variants.len()];
    let mut sensing = Vec::new();
    let mut maps_fused = 0;

    for t in 0..n_bs {
        let indices: Vec<usize> = (t * per_round..(t + 1) * per_round).collect();
        let results: Vec<Result<(Vec<CartesianMap>, PairSensing)>> = indices
            .par_iter()
            .map(|&i| {
                let sensed = pipeline.sense(i, trial)?;
                let thresholded = threshold_map(&sensed.map, &pipeline.thresholds[i]);
                let maps = variants
                    .iter()
                    .map(|&masked| {
                        let m = if masked {
                            apply_mask(&thresholded, &pipeline.masks[i])?
                        } else {
                            thresholded.clone()
                        };
                        pipeline.tables[i].apply(&m)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.in_stage("fusion"))?;
                Ok((maps, sensed))
            })
            .collect();
        let mut per_variant: Vec<Vec<CartesianMap>> = vec![Vec::with_capacity(per_round); variants.len()];
        for r in results {
            let (maps, sensed) = r?;
            for (v, m) in maps.into_iter().enumerate() {
                per_variant[v].push(m);
            }
            if opts.keep_sensing {
                sensing.push(sensed);
            }
            maps_fused += 1;
        }
        for (v, maps) in per_variant.iter().enumerate() {
            rounds[v].push(fuse_round(maps).map_err(|e| e.in_stage("fusion"))?);
        }
    }

    let truth = trial.truth();
    let q = truth.len();
    let rcs_mean_m2 = trial.targets.first().map_or(config.monte_carlo.target_rcs_m2, |t| t.mean_rcs_m2);
    let mut reports = Vec::with_capacity(variants.len());
    for (v, &masked) in variants.iter().enumerate() {
        let aggregated = aggregate_rounds(&rounds[v], n_bs).map_err(|e| e.in_stage("fusion"))?;
        let detections = detect(&aggregated, &config.detection).map_err(|e| e.in_stage("detection"))?;
        let metrics = gospa(&truth, &detections.positions(), config.gospa.p, config.gospa.xi_g_m);
        reports.push(DetectionReport {
            trial_id: trial.trial_id,
            q,
            p_t_dbm: pipeline.tx_power_dbm,
            rcs_mean_m2,
            masks_applied: masked,
            truth: truth.clone(),
            detections,
            metrics,
            maps_fused,
            aggregated: opts.keep_aggregated.then_some(aggregated),
        });
    }
    Ok(TrialOutput { reports, sensing })
}

/// Parameter grid of a sweep; an empty axis takes the configured value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub q: Vec<usize>,
    pub p_t_dbm: Vec<f64>,
    pub rcs_m2: Vec<f64>,
}

impl SweepAxes {
    /// Parses `q=1..5`, `p_t=20,25,30` or `rcs=0.5,5` into the matching axis.
    pub fn set(&mut self, spec: &str) -> Result<()> {
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("sweep axis `{spec}` is not name=values")))?;
        let bad = || Error::Parse(format!("cannot parse sweep values `{values}`"));
        match name.trim() {
            "q" => {
                self.q = if let Some((a, b)) = values.split_once("..") {
                    let a: usize = a.trim().parse().map_err(|_| bad())?;
                    let b: usize = b.trim().parse().map_err(|_| bad())?;
                    if b < a {
                        return Err(bad());
                    }
                    (a..=b).collect()
                } else {
                    parse_list(values).ok_or_else(bad)?
                }
            }
            "p_t" | "p_t_dbm" => self.p_t_dbm = parse_list(values).ok_or_else(bad)?,
            "rcs" | "rcs_m2" => self.rcs_m2 = parse_list(values).ok_or_else(bad)?,
            other => return Err(Error::Parse(format!("unknown sweep axis `{other}` (q, p_t, rcs)"))),
        }
        Ok(())
    }

    /// Cells in output order: power, then RCS, then target count.
    pub fn cells(&self, config: &ValidConfig) -> Vec<(f64, f64, usize)> {
        let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
        let qs = if self.q.is_empty() { vec![config.monte_carlo.targets] } else { self.q.clone() };
        let mut out = Vec::new();
        for p in or(&self.p_t_dbm, config.numerology.tx_power_dbm()) {
            for r in or(&self.rcs_m2, config.monte_carlo.target_rcs_m2) {
                for &q in &qs {
                    out.push((p, r, q));
                }
            }
        }
        out
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|v| v.trim().parse().ok()).collect()
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Stat { mean: f64::NAN, std_err: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std_err, n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub q: usize,
    pub p_t_dbm: f64,
    pub rcs_mean_m2: f64,
    pub masks_applied: bool,
    pub n_trials: usize,
    pub gospa: Stat,
    /// Over trials with at least one matched pair.
    pub rmse: Stat,
    pub detection_rate: Stat,
    pub false_rate: Stat,
    pub missed_rate: Stat,
    /// `| |Z_hat| - Q |`.
    pub cardinality_error: Stat,
}

impl SweepCell {
    fn from_reports(reports: &[&DetectionReport]) -> Self {
        let col = |f: &dyn Fn(&DetectionReport) -> f64| Stat::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        let first = reports[0];
        let rmse: Vec<f64> = reports.iter().filter_map(|r| r.metrics.rmse).collect();
        SweepCell {
            q: first.q,
            p_t_dbm: first.p_t_dbm,
            rcs_mean_m2: first.rcs_mean_m2,
            masks_applied: first.masks_applied,
            n_trials: reports.len(),
            gospa: col(&|r| r.metrics.gospa),
            rmse: Stat::of(&rmse),
            detection_rate: col(&|r| r.metrics.detection_rate),
            false_rate: col(&|r| r.metrics.false_rate),
            missed_rate: col(&|r| r.metrics.missed_rate),
            cardinality_error: col(&|r| (r.detections.len() as f64 - r.q as f64).abs()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    /// Every trial report, in cell then trial order.
    pub reports: Vec<DetectionReport>,
}

/// Runs `n_trials` trials per cell.
///
/// Trial `n` of every cell uses the seed of trial `n`, so cells differing only
/// in power or masking see the same scenes.
pub fn run_sweep(
    config: &ValidConfig,
    axes: &SweepAxes,
    n_trials: usize,
    masks: MaskSelection,
) -> Result<SweepResult> {
    run_sweep_with(config, axes, n_trials, masks, SensingPath::Auto)
}

pub fn run_sweep_with(
    config: &ValidConfig,
    axes: &SweepAxes,
    n_trials: usize,
    masks: MaskSelection,
    path: SensingPath,
) -> Result<SweepResult> {
    if n_trials == 0 {
        return Err(Error::Dimension("a sweep needs at least one trial".into()));
    }
    let base = Pipeline::new(config)?.with_sensing_path(path);
    let mut cells = Vec::new();
    let mut reports = Vec::new();
    let mut current: Option<(f64, Pipeline)> = None;
    for (p_t, rcs, q) in axes.cells(config) {
        if current.as_ref().map_or(true, |(p, _)| *p != p_t) {
            current = Some((p_t, base.with_tx_power_dbm(p_t)?));
        }
        let pipeline = &current.as_ref().expect("pipeline set above").1;
        let outputs: Vec<TrialOutput> = (0..n_trials as u64)
            .into_par_iter()
            .map(|id| {
                let trial = TrialSpec::draw(pipeline.config(), id, q, rcs).map_err(|e| e.in_stage("scene"))?;
                run_trial(pipeline, &trial, masks, TrialOptions::default())
            })
            .collect::<Result<_>>()?;
        for v in 0..masks.variants().len() {
            let cell_reports: Vec<&DetectionReport> = outputs.iter().map(|o| &o.reports[v]).collect();
            let mut cell = SweepCell::from_reports(&cell_reports);
            cell.q = q;
            cell.rcs_mean_m2 = rcs;
            cells.push(cell);
        }
        for v in 0..masks.variants().len() {
            reports.extend(outputs.iter().map(|o| o.reports[v].clone()));
        }
    }
    Ok(SweepResult { cells, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ScenarioConfig;

    fn quiet(q: usize) -> ValidConfig {
        let mut c = ScenarioConfig::table1().with_fast_grid();
        c.channel.noise_enabled = false;
        c.monte_carlo.n_clutter = 0;
        c.monte_carlo.targets = q;
        c.validated().unwrap()
    }

    #[test]
    fn search_time_table1() {
        let c = ScenarioConfig::table1();
        assert!((search_time(&c) - 15e-3).abs() < 1e-5);
        let mut one = c.clone();
        one.base_stations.truncate(1);
        assert_eq!(search_time(&one), one.numerology.scan_time_s());
    }

    #[test]
    fn empty_scene_gives_nothing() {
        let c = quiet(0);
        let p = Pipeline::new(&c).unwrap();
        let t = TrialSpec::from_config(&c, 0).unwrap();
        assert!(t.targets.is_empty() && t.clutter.is_empty());
        let out = run_trial(&p, &t, MaskSelection::Both, TrialOptions { keep_aggregated: true, ..Default::default() }).unwrap();
        for r in &out.reports {
            assert!(r.aggregated.as_ref().unwrap().values.iter().all(|&v| v == 0.0));
            assert!(r.detections.is_empty());
            assert_eq!(r.metrics.gospa, 0.0);
            assert_eq!(r.maps_fused, 20);
        }
    }

    #[test]
    fn targets_respect_area_and_separation() {
        let c = ScenarioConfig::table1();
        let mc = &c.monte_carlo;
        for seed in 0..50u64 {
            let mut rng = StreamSeed::new(seed).rng();
            let t = draw_targets(mc, 10, 0.5, &mut rng).unwrap();
            for (i, a) in t.iter().enumerate() {
                assert!(a.position_m.x.abs() <= 35.0 && a.position_m.y.abs() <= 35.0);
                assert!(a.velocity_mps.x.abs() <= 20.0 && a.velocity_mps.y.abs() <= 20.0);
                for b in &t[i + 1..] {
                    assert!(a.position_m.distance(b.position_m) >= 1.0);
                }
            }
            let nodes: Vec<Point2> = c.base_stations.iter().map(|b| b.position_m).collect();
            let cl = draw_clutter(mc, &nodes, &mut rng).unwrap();
            assert_eq!(cl.len(), 25);
            assert!(cl.iter().all(|p| p.position_m.x.abs() <= 60.0 && p.position_m.y.abs() <= 60.0));
        }
    }

    #[test]
    fn impossible_packing_is_an_error() {
        let mut mc = ScenarioConfig::table1().monte_carlo;
        mc.target_area_m = [1.0, 1.0];
        mc.min_separation_m = 5.0;
        assert!(draw_targets(&mc, 2, 1.0, &mut StreamSeed::new(0).rng()).is_err());
    }

    #[test]
    fn sweep_axes_parse() {
        let mut a = SweepAxes::default();
        a.set("q=1..5").unwrap();
        a.set("p_t=20,25,30").unwrap();
        a.set("rcs=0.5, 5").unwrap();
        assert_eq!(a.q, vec![1, 2, 3, 4, 5]);
        assert_eq!(a.p_t_dbm, vec![20.0, 25.0, 30.0]);
        assert_eq!(a.rcs_m2, vec![0.5, 5.0]);
        assert!(a.set("x=1").is_err());
        assert!(a.set("q=5..1").is_err());
        assert!(a.set("q").is_err());
        let c = ScenarioConfig::table1().validated().unwrap();
        assert_eq!(a.cells(&c).len(), 30);
        assert_eq!(SweepAxes::default().cells(&c), vec![(20.0, 0.5, 3)]);
    }

    #[test]
    fn stat_standard_error() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0]).std_err, 0.0);
    }

    #[test]
    fn single_trial_sweep_matches_trial() {
        let c = quiet(1);
        let sweep = run_sweep(&c, &SweepAxes::default(), 1, MaskSelection::On).unwrap();
        let p = Pipeline::new(&c).unwrap();
        let t = TrialSpec::from_config(&c, 0).unwrap();
        let r = &run_trial(&p, &t, MaskSelection::On, TrialOptions::default()).unwrap().reports[0];
        assert_eq!(sweep.cells.len(), 1);
        assert_eq!(&sweep.reports[0], r);
        assert_eq!(sweep.cells[0].gospa.mean, r.metrics.gospa);
        assert_eq!(sweep.cells[0].n_trials, 1);
    }

    fn example_config(p_0: usize, n_clutter: usize) -> ValidConfig {
        let mut c = ScenarioConfig::table1().with_fast_grid();
        c.targets = ScenarioConfig::example_targets(0.5);
        c.detection.p_0 = p_0;
        c.monte_carlo.n_clutter = n_clutter;
        c.validated().unwrap()
    }

    fn matched(r: &DetectionReport, target: usize, tol: f64) -> bool {
        r.detections
            .positions()
            .iter()
            .any(|d| d.distance(r.truth[target]) < tol)
    }

    #[test]
    fn example_scene_without_notch_losses() {
        // The slow third target sits inside the default notch on every pair.
        let c = example_config(0, 0);
        let p = Pipeline::new(&c).unwrap();
        let t = TrialSpec::from_config(&c, 0).unwrap();
        let r = &run_trial(&p, &t, MaskSelection::On, TrialOptions::default()).unwrap().reports[0];
        assert_eq!(r.detections.len(), 3, "{:?}", r.detections.positions());
        assert!((0..3).all(|i| matched(r, i, 5.0)));
    }

    #[test]
    fn example_scene_default_notch_and_determinism() {
        let c = example_config(2, 25);
        let p = Pipeline::new(&c).unwrap();
        let t = TrialSpec::from_config(&c, 0).unwrap();
        assert_eq!(t.clutter.len(), 25);
        let a = run_trial(&p, &t, MaskSelection::On, TrialOptions::default()).unwrap();
        let r = &a.reports[0];
        assert!(matched(r, 0, 0.5) && matched(r, 1, 0.5), "{:?}", r.detections.positions());
        assert!(!matched(r, 2, 5.0));
        assert_eq!(r.maps_fused, 20);

        let b = run_trial(&p, &t, MaskSelection::On, TrialOptions::default()).unwrap();
        assert_eq!(a.reports, b.reports);
    }
}
