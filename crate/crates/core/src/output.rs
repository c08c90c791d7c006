//! Output bundles: manifest, means time series, per-snapshot histograms and
//! diagnostics. Formats are described in `docs/output-formats.md`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::engine::{Diagnostics, RunResult};
use crate::stats::{Histograms, Means};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("a time series needs at least one row")]
    NoRows,
    #[error("{path}: malformed time series: {message}")]
    Malformed { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Nine significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.8e}")
}

/// Compact decimal form of a time for file names: `1`, `0.25`, `150`.
pub fn time_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn timeseries_header(group_names: &[String]) -> Vec<String> {
    let mut h = vec!["t".to_string(), "m_c_global".to_string(), "m_v_global".to_string()];
    h.extend(group_names.iter().map(|g| format!("m_c_{g}")));
    h.extend(group_names.iter().map(|g| format!("m_v_{g}")));
    h
}

/// Means time series as CSV, rows in the given (ascending) order.
pub fn write_timeseries<W: Write>(out: W, group_names: &[String], rows: &[Means]) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::NoRows);
    }
    let mut w = csv::Writer::from_writer(out);
    let path = Path::new("timeseries");
    w.write_record(timeseries_header(group_names)).map_err(csv_err(path))?;
    for m in rows {
        let mut rec = vec![format_value(m.t), format_value(m.m_c_global), format_value(m.m_v_global)];
        rec.extend(m.m_c_by_group.iter().map(|&x| format_value(x)));
        rec.extend(m.m_v_by_group.iter().map(|&x| format_value(x)));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Parsed time series: header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeseries {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Timeseries {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_timeseries(path: &Path) -> Result<Timeseries, OutputError> {
    let malformed = |message: String| OutputError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| malformed(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Timeseries { header, rows })
}

/// Marginal histograms of one snapshot: columns `kind,bin,lo,hi,mass`.
pub fn write_marginals<W: Write>(out: W, hist: &Histograms) -> Result<(), OutputError> {
    let path = Path::new("marginals");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "bin", "lo", "hi", "mass"]).map_err(csv_err(path))?;
    for (k, &m) in hist.v.iter().enumerate() {
        let (lo, hi) = hist.spec.v_edges(k);
        w.write_record(["v", &k.to_string(), &format_value(lo), &format_value(hi), &format_value(m)])
            .map_err(csv_err(path))?;
    }
    for (k, &m) in hist.c.iter().enumerate() {
        let (lo, hi) = hist.spec.c_edges(k);
        let hi = if hi.is_infinite() { "inf".to_string() } else { format_value(hi) };
        w.write_record(["c", &k.to_string(), &format_value(lo), &hi, &format_value(m)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct JointRecord {
    t: f64,
    iv: usize,
    ic: usize,
    mass: f64,
}

/// Joint histogram as NDJSON, one record per nonzero bin.
pub fn write_joint<W: Write>(mut out: W, t: f64, hist: &Histograms) -> Result<(), OutputError> {
    let path = Path::new("joint");
    let cols = hist.spec.c_entries();
    for (k, &mass) in hist.joint.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let rec = JointRecord {
            t,
            iv: k / cols,
            ic: k % cols,
            mass,
        };
        serde_json::to_writer(&mut out, &rec).map_err(|source| OutputError::Json {
            path: path.display().to_string(),
            source,
        })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Run metadata recorded in `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub version: String,
    pub seed: u64,
    pub n_particles: usize,
    pub threads: usize,
    pub steps: u64,
    pub wall_time_s: f64,
    pub config_file: String,
    pub timeseries_file: String,
    pub snapshot_files: Vec<SnapshotFiles>,
    pub diagnostics_file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotFiles {
    pub t: f64,
    pub marginals: String,
    pub joint: String,
}

#[derive(Serialize)]
struct DiagnosticsDoc<'a> {
    steps: u64,
    #[serde(flatten)]
    counters: &'a Diagnostics,
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| OutputError::Json {
        path: path.display().to_string(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Write the full bundle for `result` into `dir`. Histogram files are
/// written for the configured snapshot times and `t_final`.
pub fn write_bundle(
    dir: &Path,
    config: &ScenarioConfig,
    result: &RunResult,
    threads: usize,
    wall_time_s: f64,
) -> Result<Manifest, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let join = |name: &str| -> PathBuf { dir.join(name) };

    let config_file = "scenario.toml".to_string();
    let path = join(&config_file);
    fs::write(&path, config.to_toml()?).map_err(io_err(&path))?;

    let names: Vec<String> = config.groups.iter().map(|g| g.name.clone()).collect();
    let timeseries_file = "timeseries.csv".to_string();
    let path = join(&timeseries_file);
    write_timeseries(create(&path)?, &names, &result.trace)?;

    let wanted: Vec<u64> = config
        .sim
        .snapshot_times
        .iter()
        .chain(std::iter::once(&config.sim.t_final))
        .map(|&t| config.sim.step_of(t))
        .collect();
    let mut snapshot_files = Vec::new();
    for snap in &result.snapshots {
        if !wanted.contains(&config.sim.step_of(snap.t())) {
            continue;
        }
        let label = time_label(snap.t());
        let files = SnapshotFiles {
            t: snap.t(),
            marginals: format!("marginals_t{label}.csv"),
            joint: format!("joint_t{label}.ndjson"),
        };
        let path = join(&files.marginals);
        write_marginals(create(&path)?, &snap.hist)?;
        let path = join(&files.joint);
        write_joint(create(&path)?, snap.t(), &snap.hist)?;
        snapshot_files.push(files);
    }

    let diagnostics_file = "diagnostics.json".to_string();
    write_json(
        &join(&diagnostics_file),
        &DiagnosticsDoc {
            steps: result.steps,
            counters: &result.diagnostics,
        },
    )?;

    let manifest = Manifest {
        scenario: config.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.sim.seed,
        n_particles: config.sim.n_particles,
        threads,
        steps: result.steps,
        wall_time_s,
        config_file,
        timeseries_file,
        snapshot_files,
        diagnostics_file,
    };
    write_json(&join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn time_labels() {
        assert_eq!(time_label(0.0), "0");
        assert_eq!(time_label(1.0), "1");
        assert_eq!(time_label(0.25), "0.25");
        assert_eq!(time_label(150.0), "150");
    }

    #[test]
    fn empty_series_is_rejected() {
        assert!(matches!(write_timeseries(Vec::new(), &[], &[]), Err(OutputError::NoRows)));
    }

    #[test]
    fn header_layout() {
        let names = vec!["leaders".to_string(), "mass".to_string()];
        assert_eq!(
            timeseries_header(&names).join(","),
            "t,m_c_global,m_v_global,m_c_leaders,m_c_mass,m_v_leaders,m_v_mass"
        );
    }

    proptest! {
        #[test]
        fn nine_digits_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let text = format_value(x);
            let back: f64 = text.parse().unwrap();
            prop_assert_eq!(format_value(back), text.clone());
            prop_assert!((back - x).abs() <= 5e-9 * x.abs());
        }
    }
}
