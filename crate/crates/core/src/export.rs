//! CSV writers for every artifact the CLI produces, plus the run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::channel::DiscreteChannel;
use crate::comm::{FlatnessReport, LinkMetrics};
use crate::error::Result;
use crate::harness::{Aggregates, ExperimentConfig, GridPoint, ResultSet};
use crate::netsched::AlignmentTable;
use crate::pilots::PilotSequence;
use crate::sensing::BeamspaceEstimate;

fn db10(x: f64) -> f64 {
    10.0 * x.max(1e-30).log10()
}

/// Writes serializable rows with a header line.
pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ComplexEntry {
    n: usize,
    i: usize,
    j: usize,
    re: f64,
    im: f64,
}

pub fn write_channel(path: &Path, ch: &DiscreteChannel) -> Result<()> {
    write_rows(
        path,
        ch.taps.iter().enumerate().flat_map(|(n, h)| {
            h.indexed_iter().map(move |((i, j), z)| ComplexEntry { n, i, j, re: z.re, im: z.im })
        }),
    )
}

#[derive(Serialize)]
struct Sample {
    n: usize,
    re: f64,
    im: f64,
}

pub fn write_pilot(path: &Path, pilot: &PilotSequence) -> Result<()> {
    write_rows(path, pilot.samples.iter().enumerate().map(|(n, z)| Sample { n, re: z.re, im: z.im }))
}

#[derive(Serialize)]
struct SpectrumRow {
    m: usize,
    power_db: f64,
}

/// Bin power relative to the ideal flat level `E M / M_s`.
pub fn write_spectrum(path: &Path, pilot: &PilotSequence) -> Result<()> {
    write_rows(
        path,
        (0..pilot.samples.len()).map(|m| SpectrumRow { m, power_db: db10(pilot.normalized_bin_power(m)) }),
    )
}

#[derive(Serialize)]
struct EstimateRow {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

/// Nonzero rows of the estimated beamspace block. The header is written even
/// when the estimate is all zero.
pub fn write_estimates(path: &Path, est: &BeamspaceEstimate) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(["row", "col", "re", "im"])?;
    for ((row, col), z) in est.x.indexed_iter().filter(|((r, _), _)| est.row_norms[*r] > 0.0) {
        w.serialize(EstimateRow { row, col, re: z.re, im: z.im })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    objective: f64,
}

pub fn write_objective_trace(path: &Path, trace: &[f64]) -> Result<()> {
    write_rows(path, trace.iter().enumerate().map(|(iteration, &objective)| TraceRow { iteration, objective }))
}

#[derive(Serialize)]
struct TableRow {
    a: usize,
    b: usize,
    tx_beam: Option<usize>,
    rx_beam: Option<usize>,
    rownorm: f64,
    ok: bool,
}

pub fn write_table(path: &Path, table: &AlignmentTable) -> Result<()> {
    write_rows(
        path,
        table.iter().map(|(a, b, e)| TableRow {
            a,
            b,
            tx_beam: e.beams.map(|p| p.0),
            rx_beam: e.beams.map(|p| p.1),
            rownorm: e.score,
            ok: e.ok,
        }),
    )
}

#[derive(Serialize)]
struct MetricsRow {
    pair: String,
    sinr_db: f64,
    se: f64,
    /// ISI and MUI relative to the useful signal.
    isi_db: f64,
    mui_db: f64,
    mfb_se: f64,
}

pub fn write_metrics(path: &Path, pairing: &[(usize, usize)], metrics: &[LinkMetrics]) -> Result<()> {
    write_rows(
        path,
        pairing.iter().zip(metrics).map(|(&(t, r), m)| MetricsRow {
            pair: format!("{t}-{r}"),
            sinr_db: db10(m.sinr),
            se: m.se,
            isi_db: db10(m.isi_power / m.signal_power),
            mui_db: db10(m.mui_power / m.signal_power),
            mfb_se: m.mfb_se,
        }),
    )
}

#[derive(Serialize)]
struct FlatnessRow {
    m: usize,
    mag_db: f64,
}

pub fn write_flatness(path: &Path, report: &FlatnessReport) -> Result<()> {
    write_rows(path, report.mag_db.iter().enumerate().map(|(m, &mag_db)| FlatnessRow { m, mag_db }))
}

/// Records plus the three aggregate tables of a sweep.
pub fn write_results(dir: &Path, results: &ResultSet, agg: &Aggregates) -> Result<()> {
    write_rows(&dir.join("records.csv"), results.records())?;
    write_rows(&dir.join("mae_vs_q.csv"), &agg.mae_vs_q)?;
    write_rows(&dir.join("cdf.csv"), &agg.cdf)?;
    write_rows(&dir.join("sum_se_vs_pilots.csv"), &agg.sum_se_vs_total_pilots)
}

pub fn write_grid(path: &Path, points: &[GridPoint]) -> Result<()> {
    write_rows(path, points)
}

/// Package version, extended with `git describe` output when available.
pub fn version_string() -> String {
    let base = env!("CARGO_PKG_VERSION");
    let described = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    match described {
        Some(d) => format!("{base}+{d}"),
        None => base.to_string(),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: String,
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
}

/// `manifest.toml`: version, subcommand, seed and the full effective config.
pub fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig) -> Result<()> {
    let m = Manifest { version: version_string(), command, seed: cfg.seed, config: cfg };
    let text = toml::to_string(&m).expect("manifest serializes");
    let mut f = fs::File::create(dir.join("manifest.toml"))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
