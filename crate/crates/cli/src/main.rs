mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mstatic_core::beamforming::pattern_db;
use mstatic_core::harness::{
    run_sweep_with, run_trial, MaskSelection, Pipeline, SweepAxes, TrialOptions, TrialSpec,
};
use mstatic_core::io::{self, MatrixDump, RunManifest};
use mstatic_core::sensing::SensingPath;
use mstatic_core::{Error, ScenarioConfig, ValidConfig};

use render::Series;

const OUT_DIR_ENV: &str = "MSTATIC_OUT_DIR";

#[derive(Parser)]
#[command(name = "mstatic", version, about = "Multistatic MIMO-OFDM sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo trials or a parameter sweep.
    Run(RunArgs),
    /// Render a matrix dump or sweep CSV to PNG.
    Render(RenderArgs),
    /// Write the reliability mask of every pair.
    DumpMasks(DumpArgs),
    /// Write Tx and scan beam patterns of one station.
    DumpPatterns(PatternArgs),
    /// Print the reference configuration as JSON.
    PrintDefaultConfig,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario JSON; the reference configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the reduced Cartesian grid.
    #[arg(long)]
    fast: bool,
    /// Output directory (default: $MSTATIC_OUT_DIR, then `mstatic-out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Masks {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Print the reference configuration and exit.
    #[arg(long)]
    print_default_config: bool,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per sweep cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Sweep axis such as `q=1..5`, `p_t=20,25,30` or `rcs=0.5,5`; repeatable.
    #[arg(long)]
    sweep: Vec<String>,
    /// Reliability masking; defaults to the config setting.
    #[arg(long, value_enum)]
    masks: Option<Masks>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Always synthesize the full subcarrier grid.
    #[arg(long)]
    reference: bool,
    /// Write trial 0's bistatic maps and range-Doppler maps here.
    #[arg(long)]
    dump_rdmap: Option<PathBuf>,
    /// Scan directions (1-based) to dump per pair; the peak direction when omitted.
    #[arg(long, value_delimiter = ',')]
    rdmap_directions: Vec<usize>,
    /// Write trial 0's aggregated map as CSV.
    #[arg(long)]
    dump_aggregated: Option<PathBuf>,
    /// Also render PNGs of the aggregated map and sweep curves.
    #[arg(long)]
    png: bool,
    /// Render heatmaps in dB.
    #[arg(long)]
    db: bool,
}

#[derive(Args)]
struct RenderArgs {
    input: PathBuf,
    /// Output PNG (maps) or file prefix (sweeps); defaults next to the input.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    db: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long)]
    png: bool,
}

#[derive(Args)]
struct PatternArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    station: usize,
    /// Angular sampling step.
    #[arg(long, default_value_t = 0.1)]
    step_deg: f64,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::Json(_) | Error::Parse(_) => 1,
        Error::Io(_) => 2,
        Error::Stage { source, .. } => code_of(source),
        _ => 3,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: code_of(&e),
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = error
            .chain()
            .find_map(|c| c.downcast_ref::<Error>().map(code_of))
            .or_else(|| error.chain().find_map(|c| c.downcast_ref::<std::io::Error>().map(|_| 2)))
            .unwrap_or(3);
        Failure { code, error }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Render(a) => cmd_render(a),
        Command::DumpMasks(a) => cmd_dump_masks(a),
        Command::DumpPatterns(a) => cmd_dump_patterns(a),
        Command::PrintDefaultConfig => {
            println!("{}", ScenarioConfig::table1().to_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f.error);
            ExitCode::from(f.code)
        }
    }
}

fn report(e: &anyhow::Error) {
    if let Some(Error::InvalidConfig(v)) = e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        eprintln!("error: invalid configuration");
        for v in v {
            eprintln!("  {v}");
        }
        return;
    }
    eprintln!("error: {e:#}");
}

fn load_config(args: &ConfigArgs) -> CliResult<(ScenarioConfig, Option<String>)> {
    let (mut config, path) = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(Error::from)
                .with_context(|| format!("reading {}", p.display()))?;
            (ScenarioConfig::from_json(&text)?, Some(p.display().to_string()))
        }
        None => (ScenarioConfig::table1(), None),
    };
    if args.fast {
        config = config.with_fast_grid();
    }
    Ok((config, path))
}

fn out_dir(args: &ConfigArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mstatic-out"))
}

/// Collects written paths for the manifest.
struct Outputs(Vec<String>);

impl Outputs {
    fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        io::write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.0.push(path.display().to_string());
        Ok(())
    }

    fn png(&mut self, path: &Path, img: &image::RgbImage) -> CliResult<()> {
        let mut bytes = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .map_err(|e| anyhow!("encoding {}: {e}", path.display()))?;
        self.write(path, &bytes)
    }
}

fn cmd_run(a: RunArgs) -> CliResult<()> {
    if a.print_default_config {
        println!("{}", ScenarioConfig::table1().to_json());
        return Ok(());
    }
    let started = io::unix_now();
    let (mut config, config_path) = load_config(&a.common)?;
    if let Some(s) = a.seed {
        config.rng_seed = s;
    }
    let mut axes = SweepAxes::default();
    for s in &a.sweep {
        axes.set(s)?;
    }
    let config = config.validated()?;
    let n_trials = a.trials.unwrap_or(config.monte_carlo.n_trials);
    let masks = match a.masks {
        Some(Masks::On) => MaskSelection::On,
        Some(Masks::Off) => MaskSelection::Off,
        Some(Masks::Both) => MaskSelection::Both,
        None => MaskSelection::from_flag(config.detection.apply_masks),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.unwrap_or(0))
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    let out = out_dir(&a.common);
    let mut outputs = Outputs(Vec::new());

    let path = if a.reference { SensingPath::Reference } else { SensingPath::Auto };
    let sweep = pool.install(|| run_sweep_with(&config, &axes, n_trials, masks, path))?;
    outputs.write(&out.join("results.csv"), io::results_csv(&sweep.reports).as_bytes())?;
    outputs.write(&out.join("sweep.csv"), io::sweep_csv(&sweep.cells).as_bytes())?;
    for &masked in masks.variants() {
        let name = if masked { "detections_masks_on.csv" } else { "detections_masks_off.csv" };
        let reports = sweep.reports.iter().filter(|r| r.masks_applied == masked);
        outputs.write(&out.join(name), io::detections_csv(reports).as_bytes())?;
    }
    if a.png && sweep.cells.len() > 1 {
        for (metric, img) in sweep_charts(&io::sweep_csv(&sweep.cells))? {
            outputs.png(&out.join(format!("sweep_{metric}.png")), &img)?;
        }
    }

    if a.dump_rdmap.is_some() || a.dump_aggregated.is_some() {
        let pipeline = Pipeline::new(&config)?
            .with_sensing_path(path)
            .keep_rd_maps(a.dump_rdmap.is_some());
        let trial = TrialSpec::from_config(&config, 0)?;
        let opts = TrialOptions {
            keep_aggregated: a.dump_aggregated.is_some(),
            keep_sensing: a.dump_rdmap.is_some(),
        };
        let variant = if masks == MaskSelection::Off { MaskSelection::Off } else { MaskSelection::On };
        let result = pool.install(|| dump_trial(&pipeline, &trial, variant, opts, &a.rdmap_directions))?;
        if let (Some(path), Some(map)) = (&a.dump_aggregated, &result.0) {
            let dump = MatrixDump::from_cartesian(map, "aggregated");
            outputs.write(path, dump.to_csv().as_bytes())?;
            if a.png {
                outputs.png(&path.with_extension("png"), &render::heatmap(&dump, a.db))?;
            }
        }
        if let Some(dir) = &a.dump_rdmap {
            for (name, dump) in result.1 {
                outputs.write(&dir.join(name), dump.to_csv().as_bytes())?;
            }
        }
    }

    let finished = io::unix_now();
    let manifest = RunManifest {
        version: io::version_string().into(),
        command_line: std::env::args().collect(),
        config_path,
        config_hash: config.hash_hex(),
        master_seed: config.rng_seed,
        started_unix_s: started,
        finished_unix_s: finished,
        wall_time_s: finished - started,
        outputs: outputs.0,
    };
    let path = out.join("manifest.json");
    manifest
        .write(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {} files to {}", manifest.outputs.len() + 1, out.display());
    Ok(())
}

type TrialDump = (Option<mstatic_core::fusion::CartesianMap>, Vec<(String, MatrixDump)>);

fn dump_trial(
    pipeline: &Pipeline,
    trial: &TrialSpec,
    masks: MaskSelection,
    opts: TrialOptions,
    directions: &[usize],
) -> CliResult<TrialDump> {
    let out = run_trial(pipeline, trial, masks, opts)?;
    let mut files = Vec::new();
    for s in &out.sensing {
        let tag = format!("tx{}_rx{}", s.tx_index, s.rx_index);
        files.push((format!("bistatic_{tag}.csv"), MatrixDump::from_bistatic(&s.map)));
        let chosen: Vec<usize> = if directions.is_empty() {
            vec![s.map.argmax().1]
        } else {
            directions
                .iter()
                .filter(|&&j| j >= 1 && j <= s.rd_maps.len())
                .map(|j| j - 1)
                .collect()
        };
        for j in chosen {
            if let Some(rd) = s.rd_maps.get(j) {
                files.push((format!("rd_{tag}_dir{:02}.csv", j + 1), MatrixDump::from_range_doppler(rd)));
            }
        }
    }
    let aggregated = out.reports.into_iter().next().and_then(|r| r.aggregated);
    Ok((aggregated, files))
}

fn sweep_charts(csv: &str) -> CliResult<Vec<(String, image::RgbImage)>> {
    let (header, rows) = io::parse_table(csv)?;
    let col = |name: &str| header.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| Failure::from(Error::Parse(format!("sweep table lacks `{name}`"))));
    let (q, p, r, m) = (need("q")?, need("p_t_dbm")?, need("rcs_mean_m2")?, need("masks")?);
    let mut out = Vec::new();
    for metric in ["gospa_m", "rmse_m", "r_d", "r_fa", "r_md", "card_err"] {
        let Some(k) = col(metric) else { continue };
        let mut groups: Vec<((f64, f64, f64), Vec<(f64, f64)>)> = Vec::new();
        for row in &rows {
            let key = (row[p], row[r], row[m]);
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => g.1.push((row[q], row[k])),
                None => groups.push((key, vec![(row[q], row[k])])),
            }
        }
        let series: Vec<Series> = groups
            .into_iter()
            .map(|((_, _, masked), points)| Series {
                points,
                dashed: masked == 0.0,
            })
            .collect();
        out.push((metric.to_string(), render::line_chart(&series)));
    }
    Ok(out)
}

fn cmd_render(a: RenderArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.input)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let mut outputs = Outputs(Vec::new());
    if text.starts_with("# rows:") {
        let dump = MatrixDump::parse_csv(&text)?;
        let img = if dump.value_name == "reliable" {
            render::mask_image(&dump)
        } else {
            render::heatmap(&dump, a.db)
        };
        let path = a.out.unwrap_or_else(|| a.input.with_extension("png"));
        outputs.png(&path, &img)?;
    } else {
        let prefix = a.out.unwrap_or_else(|| a.input.with_extension(""));
        for (metric, img) in sweep_charts(&text)? {
            let mut name = prefix.as_os_str().to_owned();
            name.push(format!("_{metric}.png"));
            outputs.png(Path::new(&name), &img)?;
        }
    }
    for o in &outputs.0 {
        eprintln!("wrote {o}");
    }
    Ok(())
}

fn cmd_dump_masks(a: DumpArgs) -> CliResult<()> {
    let (config, _) = load_config(&a.common)?;
    let config: ValidConfig = config.validated()?;
    let pipeline = Pipeline::new(&config)?;
    let dir = out_dir(&a.common);
    let mut outputs = Outputs(Vec::new());
    for (pair, mask) in pipeline.pairs().iter().zip(pipeline.masks()) {
        let dump = MatrixDump::from_mask(mask);
        let path = dir.join(format!("mask_tx{}_rx{}.csv", pair.tx_index, pair.rx_index));
        outputs.write(&path, dump.to_csv().as_bytes())?;
        if a.png {
            outputs.png(&path.with_extension("png"), &render::mask_image(&dump))?;
        }
    }
    eprintln!("wrote {} files to {}", outputs.0.len(), dir.display());
    Ok(())
}

fn cmd_dump_patterns(a: PatternArgs) -> CliResult<()> {
    let (config, _) = load_config(&a.common)?;
    let config = config.validated()?;
    if a.station >= config.base_stations.len() {
        return Err(Error::Parse(format!("station {} does not exist", a.station)).into());
    }
    if !(a.step_deg > 0.0) {
        return Err(Error::Parse("--step-deg must be positive".into()).into());
    }
    let pipeline = Pipeline::new(&config)?;
    let bank = &pipeline.banks()[a.station];
    let dir = out_dir(&a.common);
    let mut outputs = Outputs(Vec::new());
    outputs.write(
        &dir.join(format!("pattern_bs{}_tx.csv", a.station)),
        io::pattern_csv(&pattern_db(&bank.tx.weights, a.step_deg)).as_bytes(),
    )?;
    for (j, w) in bank.scan.weights.iter().enumerate() {
        outputs.write(
            &dir.join(format!("pattern_bs{}_scan{:02}.csv", a.station, j + 1)),
            io::pattern_csv(&pattern_db(w, a.step_deg)).as_bytes(),
        )?;
    }
    eprintln!("wrote {} files to {}", outputs.0.len(), dir.display());
    Ok(())
}
