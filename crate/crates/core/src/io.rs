//! CSV and JSON artifacts.
//!
//! All CSVs carry a header row and are written with the `csv` crate
//! (RFC 4180 quoting). Floats use Rust's shortest round-trip formatting, so
//! a value read back is bit-identical to the one written.
//!
//! * capital field: `x,t_scaled,t_years,k`, time-level major
//! * measurements: `m,j,x,t_scaled,t_years,clean,noisy`, `m`/`j` 1-based,
//!   plus a JSON sidecar ([`DatasetMeta`]) with grid, plan, noise and config
//! * technology profile: `x,A`, one row per spatial node
//! * gradient field: `alpha1,alpha2,p,k,dg_da1,dg_da2,dg_dp`
//! * DE trace: `generation,best,median,worst`
//! * inversion table: `label,alpha1,alpha2,p,max_abs_delta,rho,misfit`

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{MeasurementPlan, MeasurementSet};
use crate::de::GenerationStats;
use crate::error::{Error, Result};
use crate::model::{CapitalField, GridSpec, ProductionParams, TechnologyField};
use crate::objective::RecoveryMetrics;
use crate::pipeline::InversionReport;
use crate::sensitivity::GradientSample;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_rows<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json<V: DeserializeOwned>(path: &Path) -> Result<V> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// Sidecar path next to a CSV file: `data.csv` → `data.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldRow {
    x: f64,
    t_scaled: f64,
    t_years: f64,
    k: f64,
}

pub fn write_field_csv(path: &Path, field: &CapitalField<f64>, grid: &GridSpec<f64>) -> Result<()> {
    let rows = (0..field.n_t()).flat_map(|n| {
        (0..field.n_x()).map(move |i| FieldRow {
            x: grid.x(i),
            t_scaled: grid.t(n),
            t_years: grid.years(n),
            k: field.get(i, n),
        })
    });
    write_rows(path, rows)
}

/// Field sidecar: grid, parameters, technology and the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub grid: GridSpec<f64>,
    pub params: ProductionParams<f64>,
    pub technology: TechnologyField<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub config: RunConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    m: usize,
    j: usize,
    x: f64,
    t_scaled: f64,
    t_years: f64,
    clean: f64,
    noisy: f64,
}

/// Dataset sidecar: everything needed to rebuild the inverse problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub epsilon: f64,
    pub seed: u64,
    pub grid: GridSpec<f64>,
    pub plan: MeasurementPlan,
    pub technology: TechnologyField<f64>,
    pub config: RunConfig,
}

pub fn write_measurements_csv(path: &Path, set: &MeasurementSet<f64>, grid: &GridSpec<f64>) -> Result<()> {
    let plan = &set.plan;
    let rows = plan.space_indices.iter().enumerate().flat_map(|(m, &i)| {
        plan.time_indices.iter().enumerate().map(move |(j, &n)| MeasurementRow {
            m: m + 1,
            j: j + 1,
            x: grid.x(i),
            t_scaled: grid.t(n),
            t_years: grid.years(n),
            clean: set.clean_at(m, j),
            noisy: set.noisy_at(m, j),
        })
    });
    write_rows(path, rows)
}

/// Reads a dataset CSV and its sidecar, checking that both describe the
/// same points.
pub fn read_dataset(csv_path: &Path) -> Result<(MeasurementSet<f64>, DatasetMeta)> {
    let meta: DatasetMeta = read_json(&sidecar_path(csv_path))?;
    let rows: Vec<MeasurementRow> = read_rows(csv_path)?;
    let plan = meta.plan.clone();
    plan.validate(&meta.grid)
        .map_err(|e| format_err(csv_path, e.to_string()))?;
    if rows.len() != plan.len() {
        return Err(format_err(
            csv_path,
            format!("{} rows but the plan has {} points", rows.len(), plan.len()),
        ));
    }
    let mut clean = vec![0.0; plan.len()];
    let mut noisy = vec![0.0; plan.len()];
    let mut seen = vec![false; plan.len()];
    for row in rows {
        if row.m == 0 || row.m > plan.m() || row.j == 0 || row.j > plan.n() {
            return Err(format_err(csv_path, format!("row (m={}, j={}) outside the plan", row.m, row.j)));
        }
        let idx = (row.m - 1) * plan.n() + (row.j - 1);
        if std::mem::replace(&mut seen[idx], true) {
            return Err(format_err(csv_path, format!("duplicate row (m={}, j={})", row.m, row.j)));
        }
        let x = meta.grid.x(plan.space_indices[row.m - 1]);
        let t = meta.grid.t(plan.time_indices[row.j - 1]);
        if (row.x - x).abs() > 1e-9 || (row.t_scaled - t).abs() > 1e-9 {
            return Err(format_err(csv_path, format!("row (m={}, j={}) does not match the plan coordinates", row.m, row.j)));
        }
        clean[idx] = row.clean;
        noisy[idx] = row.noisy;
    }
    let set = MeasurementSet {
        plan,
        clean,
        noisy,
        epsilon: meta.epsilon,
        seed: meta.seed,
    };
    Ok((set, meta))
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    x: f64,
    #[serde(rename = "A")]
    a: f64,
}

pub fn write_technology_profile(path: &Path, tech: &TechnologyField<f64>, grid: &GridSpec<f64>) -> Result<()> {
    let values = tech.node_values(grid)?;
    write_rows(
        path,
        values.iter().enumerate().map(|(i, &a)| ProfileRow { x: grid.x(i), a }),
    )
}

/// Reads an `x,A` profile; rows must match the spatial nodes in order.
pub fn read_technology_profile(path: &Path, grid: &GridSpec<f64>) -> Result<TechnologyField<f64>> {
    let rows: Vec<ProfileRow> = read_rows(path)?;
    if rows.len() != grid.n_x {
        return Err(format_err(
            path,
            format!("{} rows but the grid has {} nodes", rows.len(), grid.n_x),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if (row.x - grid.x(i)).abs() > 1e-9 {
            return Err(format_err(path, format!("row {} has x = {} but node {i} is at {}", i + 1, row.x, grid.x(i))));
        }
    }
    TechnologyField::tabulated(rows.into_iter().map(|r| r.a).collect()).map_err(|e| format_err(path, e.to_string()))
}

#[derive(Debug, Serialize)]
struct GradientRow {
    alpha1: f64,
    alpha2: f64,
    p: f64,
    k: f64,
    dg_da1: f64,
    dg_da2: f64,
    dg_dp: f64,
}

pub fn write_gradient_csv(path: &Path, samples: &[GradientSample<f64>]) -> Result<()> {
    write_rows(
        path,
        samples.iter().map(|s| GradientRow {
            alpha1: s.point.alpha1,
            alpha2: s.point.alpha2,
            p: s.point.p,
            k: s.k,
            dg_da1: s.grad[0],
            dg_da2: s.grad[1],
            dg_dp: s.grad[2],
        }),
    )
}

pub fn write_trace_csv(path: &Path, trace: &[GenerationStats<f64>]) -> Result<()> {
    write_rows(path, trace.iter().copied())
}

#[derive(Debug, Serialize)]
struct TableRow {
    label: String,
    alpha1: f64,
    alpha2: f64,
    p: f64,
    max_abs_delta: Option<f64>,
    rho: Option<f64>,
    misfit: Option<f64>,
}

fn table_row(label: &str, params: &ProductionParams<f64>, metrics: Option<&RecoveryMetrics<f64>>) -> TableRow {
    TableRow {
        label: label.to_string(),
        alpha1: params.alpha1,
        alpha2: params.alpha2,
        p: params.p,
        max_abs_delta: metrics.map(|m| m.max_abs_delta),
        rho: metrics.map(|m| m.rho),
        misfit: metrics.map(|m| m.misfit),
    }
}

/// One row each for the exact (if known), mean and best parameters.
pub fn write_report_csv(path: &Path, report: &InversionReport<f64>) -> Result<()> {
    let mut rows = Vec::new();
    if let Some(exact) = &report.exact {
        rows.push(table_row("exact", exact, None));
    }
    rows.push(table_row("mean", &report.mean, report.metrics_mean.as_ref()));
    rows.push(table_row("best", &report.best, report.metrics_best.as_ref()));
    write_rows(path, rows)
}
