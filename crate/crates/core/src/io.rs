//! CSV and JSON artifacts.
//!
//! Matrix dumps carry a two-line header:
//!
//! ```text
//! # rows: <name> [<unit>] start=<v> step=<v> n=<n>
//! # cols: <name> [<unit>] start=<v> step=<v> n=<n>; value: <name> [<unit>]
//! ```
//!
//! followed by one comma-separated line per row. Floats use the shortest
//! representation that round-trips, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::CartesianMap;
use crate::harness::{DetectionReport, SweepCell};
use crate::periodogram::{BistaticMap, RangeDopplerMap};
use crate::reliability::ReliabilityMask;

pub const RESULTS_HEADER: &str = "trial,masks,q,p_t_dbm,rcs_mean_m2,gospa_m,rmse_m,r_d,r_fa,r_md,n_est";
pub const DETECTIONS_HEADER: &str = "trial_id,cluster_id,x_m,y_m,mass";
pub const SWEEP_HEADER: &str = "q,p_t_dbm,rcs_mean_m2,masks,n_trials,gospa_m,gospa_se_m,rmse_m,rmse_se_m,rmse_trials,r_d,r_d_se,r_fa,r_fa_se,r_md,r_md_se,card_err,card_err_se";

fn on_off(masked: bool) -> &'static str {
    if masked {
        "on"
    } else {
        "off"
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// One row per trial report.
pub fn results_csv(reports: &[DetectionReport]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in reports {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            on_off(r.masks_applied),
            r.q,
            r.p_t_dbm,
            r.rcs_mean_m2,
            m.gospa,
            opt(m.rmse),
            m.detection_rate,
            m.false_rate,
            m.missed_rate,
            r.detections.len()
        );
    }
    s
}

/// Estimated positions of every report; cluster ids restart per trial.
pub fn detections_csv<'a>(reports: impl IntoIterator<Item = &'a DetectionReport>) -> String {
    let mut s = String::from(DETECTIONS_HEADER);
    s.push('\n');
    for r in reports {
        for (c, d) in r.detections.detections.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{},{}", r.trial_id, c, d.position_m.x, d.position_m.y, d.mass);
        }
    }
    s
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.q,
            c.p_t_dbm,
            c.rcs_mean_m2,
            on_off(c.masks_applied),
            c.n_trials,
            c.gospa.mean,
            c.gospa.std_err,
            c.rmse.mean,
            c.rmse.std_err,
            c.rmse.n,
            c.detection_rate.mean,
            c.detection_rate.std_err,
            c.false_rate.mean,
            c.false_rate.std_err,
            c.missed_rate.mean,
            c.missed_rate.std_err,
            c.cardinality_error.mean,
            c.cardinality_error.std_err
        );
    }
    s
}

/// Parsed sweep CSV: header names and numeric rows (`on`/`off` read as 1/0, blanks as NaN).
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty table".into()))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, l)| {
            let row: Vec<f64> = l
                .split(',')
                .map(|f| match f.trim() {
                    "on" => Ok(1.0),
                    "off" => Ok(0.0),
                    "" => Ok(f64::NAN),
                    v => v.parse().map_err(|_| Error::Parse(format!("row {}: bad value `{v}`", i + 1))),
                })
                .collect::<Result<_>>()?;
            if row.len() != header.len() {
                return Err(Error::Parse(format!("row {} has {} fields, header has {}", i + 1, row.len(), header.len())));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Regularly sampled axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(name: &str, unit: &str, start: f64, step: f64, n: usize) -> Self {
        Axis {
            name: name.into(),
            unit: unit.into(),
            start,
            step,
            n,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.value(self.n.saturating_sub(1))
    }

    fn header(&self) -> String {
        format!("{} [{}] start={} step={} n={}", self.name, self.unit, self.start, self.step, self.n)
    }

    fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed axis header `{text}`"));
        let open = text.find('[').ok_or_else(bad)?;
        let close = text.find(']').ok_or_else(bad)?;
        if close < open {
            return Err(bad());
        }
        let name = text[..open].trim().to_string();
        let unit = text[open + 1..close].to_string();
        let mut start = None;
        let mut step = None;
        let mut n = None;
        for kv in text[close + 1..].split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            match k {
                "start" => start = v.parse().ok(),
                "step" => step = v.parse().ok(),
                "n" => n = v.parse().ok(),
                _ => return Err(bad()),
            }
        }
        Ok(Axis {
            name,
            unit,
            start: start.ok_or_else(bad)?,
            step: step.ok_or_else(bad)?,
            n: n.ok_or_else(bad)?,
        })
    }
}

/// Dense matrix with physical axes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDump {
    pub rows: Axis,
    pub cols: Axis,
    pub value_name: String,
    pub value_unit: String,
    pub values: Vec<f64>,
}

impl MatrixDump {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols.n + c]
    }

    /// Rows are y, columns are x.
    pub fn from_cartesian(map: &CartesianMap, value_name: &str) -> Self {
        let g = &map.grid;
        MatrixDump {
            rows: Axis::new("y", "m", g.origin_m.y, g.dy_m, g.ny),
            cols: Axis::new("x", "m", g.origin_m.x, g.dx_m, g.nx),
            value_name: value_name.into(),
            value_unit: "W".into(),
            values: map.values.clone(),
        }
    }

    /// Rows are bistatic range, columns are scan angle in the Rx frame.
    pub fn from_bistatic(map: &BistaticMap) -> Self {
        MatrixDump {
            rows: Axis::new("bistatic_range", "m", map.row_range_m(0), map.range_bin_m, map.rows),
            cols: angle_axis(&map.scan_angles),
            value_name: "power".into(),
            value_unit: "W".into(),
            values: map.values.clone(),
        }
    }

    /// Rows are bistatic range, columns are Doppler with zero in the middle.
    pub fn from_range_doppler(map: &RangeDopplerMap) -> Self {
        let cols = map.cols;
        let neg = cols - cols.div_ceil(2);
        let mut values = Vec::with_capacity(map.values.len());
        for r in 0..map.rows {
            let row = map.row(r);
            values.extend_from_slice(&row[cols - neg..]);
            values.extend_from_slice(&row[..cols - neg]);
        }
        MatrixDump {
            rows: Axis::new("bistatic_range", "m", map.first_bin as f64 * map.range_bin_m, map.range_bin_m, map.rows),
            cols: Axis::new("doppler", "Hz", -(neg as f64) * map.doppler_bin_hz, map.doppler_bin_hz, cols),
            value_name: "power".into(),
            value_unit: "W".into(),
            values,
        }
    }

    pub fn from_mask(mask: &ReliabilityMask) -> Self {
        MatrixDump {
            rows: Axis::new("bistatic_range", "m", mask.first_bin as f64 * mask.range_bin_m, mask.range_bin_m, mask.rows),
            cols: angle_axis(&mask.scan_angles),
            value_name: "reliable".into(),
            value_unit: "1".into(),
            values: mask.values.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# rows: {}\n# cols: {}; value: {} [{}]\n",
            self.rows.header(),
            self.cols.header(),
            self.value_name,
            self.value_unit
        );
        for r in 0..self.rows.n {
            let row = &self.values[r * self.cols.n..(r + 1) * self.cols.n];
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let l1 = lines.next().unwrap_or_default();
        let l2 = lines.next().unwrap_or_default();
        let rows = Axis::parse(
            l1.strip_prefix("# rows:")
                .ok_or_else(|| Error::Parse("first header line must start with `# rows:`".into()))?,
        )?;
        let (cols_text, value_text) = l2
            .strip_prefix("# cols:")
            .and_then(|l| l.split_once("; value:"))
            .ok_or_else(|| Error::Parse("second header line must be `# cols: ...; value: ...`".into()))?;
        let cols = Axis::parse(cols_text)?;
        let value_text = value_text.trim();
        let (value_name, value_unit) = value_text
            .split_once(" [")
            .and_then(|(n, u)| u.strip_suffix(']').map(|u| (n.to_string(), u.to_string())))
            .ok_or_else(|| Error::Parse(format!("malformed value header `{value_text}`")))?;
        let mut values = Vec::with_capacity(rows.n * cols.n);
        let mut count = 0;
        for (i, line) in lines.filter(|l| !l.is_empty()).enumerate() {
            let before = values.len();
            for f in line.split(',') {
                values.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {i}: bad value `{f}`")))?,
                );
            }
            if values.len() - before != cols.n {
                return Err(Error::Parse(format!("row {i} has {} values, expected {}", values.len() - before, cols.n)));
            }
            count += 1;
        }
        if count != rows.n {
            return Err(Error::Parse(format!("{count} rows, header says {}", rows.n)));
        }
        Ok(MatrixDump {
            rows,
            cols,
            value_name,
            value_unit,
            values,
        })
    }
}

fn angle_axis(angles: &[f64]) -> Axis {
    let start = angles.first().map_or(0.0, |a| a.to_degrees());
    let step = if angles.len() > 1 {
        (angles[angles.len() - 1] - angles[0]).to_degrees() / (angles.len() - 1) as f64
    } else {
        0.0
    };
    Axis::new("scan_angle", "deg", start, step, angles.len())
}

/// `(angle_deg, gain_db)` rows.
pub fn pattern_csv(samples: &[(f64, f64)]) -> String {
    let mut s = String::from("angle_deg,gain_db\n");
    for (a, g) in samples {
        let _ = writeln!(s, "{a},{g}");
    }
    s
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn version_string() -> &'static str {
    option_env!("MSTATIC_GIT_DESCRIBE").unwrap_or(concat!("v", env!("CARGO_PKG_VERSION")))
}

/// Provenance record of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command_line: Vec<String>,
    pub config_path: Option<String>,
    pub config_hash: String,
    pub master_seed: u64,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::GridConfig;

    fn sample() -> MatrixDump {
        MatrixDump {
            rows: Axis::new("y", "m", -1.5, 0.5, 2),
            cols: Axis::new("x", "m", 0.0, 0.25, 3),
            value_name: "power".into(),
            value_unit: "W".into(),
            values: vec![0.0, 1e-12, 3.0, 0.1 + 0.2, -2.5, 1.0 / 3.0],
        }
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = sample();
        let text = m.to_csv();
        assert!(text.starts_with("# rows: y [m] start=-1.5 step=0.5 n=2\n# cols: x [m] start=0 step=0.25 n=3; value: power [W]\n"));
        assert_eq!(MatrixDump::parse_csv(&text).unwrap(), m);
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let text = sample().to_csv();
        for bad in [
            text.replacen("# rows:", "# row:", 1),
            text.replacen("n=2", "n=3", 1),
            text.replacen("; value:", ",", 1),
            text.replacen("start=0 ", "start=zero ", 1),
            text.replacen("3\n", "3,4\n", 1),
            String::new(),
        ] {
            assert!(MatrixDump::parse_csv(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn range_doppler_dump_centers_zero() {
        let rd = RangeDopplerMap {
            first_bin: 10,
            rows: 1,
            cols: 5,
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            range_bin_m: 0.5,
            doppler_bin_hz: 100.0,
            direction: 0,
        };
        let d = MatrixDump::from_range_doppler(&rd);
        assert_eq!(d.values, vec![3.0, 4.0, 0.0, 1.0, 2.0]);
        assert_eq!(d.cols.start, -200.0);
        assert_eq!(d.rows.start, 5.0);
        let col_of_zero = ((0.0 - d.cols.start) / d.cols.step) as usize;
        assert_eq!(d.get(0, col_of_zero), 0.0);
    }

    #[test]
    fn cartesian_dump_axes() {
        let g = GridConfig::fast();
        let d = MatrixDump::from_cartesian(&CartesianMap::zeros(&g), "aggregated");
        assert_eq!((d.rows.n, d.cols.n), (g.ny, g.nx));
        assert!((d.cols.value(1) - d.cols.value(0) - g.dx_m).abs() < 1e-12);
    }

    #[test]
    fn table_parse() {
        let (h, rows) = parse_table("a,masks,b\n1,on,\n2,off,0.5\n").unwrap();
        assert_eq!(h, vec!["a", "masks", "b"]);
        assert_eq!(rows[1], vec![2.0, 0.0, 0.5]);
        assert!(rows[0][2].is_nan());
        assert!(parse_table("a,b\n1\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
