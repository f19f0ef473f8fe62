//! The subcommands of the `solow` binary. Each writes its artifacts under
//! `cfg.out` and returns the list of files plus a short summary.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{apply_noise, generate_synthetic_data};
use crate::error::{Error, Result};
use crate::io::{self, DatasetMeta, FieldMeta};
use crate::model::{sample_initial_condition, GridSpec, ProductionParams, TechnologyField};
use crate::objective::InverseProblem;
use crate::pipeline::{run_inversion, InversionReport};
use crate::sensitivity::{emit_gradient_field, max_fd_relative_error, GradientSample};
use crate::solver::solve_forward;
use crate::verify::{self, Check};

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Outcome {
    fn file(&mut self, path: PathBuf) -> &Path {
        self.files.push(path);
        self.files.last().unwrap()
    }
}

fn write_profile_if_tabulated(
    out: &mut Outcome,
    dir: &Path,
    tech: &TechnologyField<f64>,
    grid: &GridSpec<f64>,
) -> Result<()> {
    if matches!(tech, TechnologyField::Tabulated { .. }) {
        let path = out.file(dir.join("technology.csv")).to_path_buf();
        io::write_technology_profile(&path, tech, grid)?;
    }
    Ok(())
}

/// Solves the forward problem with the configured parameters.
pub fn cmd_forward(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.exact_params()?;
    let tech = cfg.technology(&grid)?;
    let k0 = sample_initial_condition(&grid);
    let field = solve_forward(&params, &tech, &grid, &k0, &cfg.solver_options())?;

    io::create_dir(&cfg.out)?;
    let mut out = Outcome::default();
    io::write_field_csv(out.file(cfg.out.join("field.csv")), &field, &grid)?;
    let meta = FieldMeta {
        grid,
        params,
        technology: tech.clone(),
        k_min: field.min(),
        k_max: field.max(),
        config: cfg.clone(),
    };
    io::write_json(out.file(cfg.out.join("field.json")), &meta)?;
    write_profile_if_tabulated(&mut out, &cfg.out, &tech, &grid)?;
    out.summary.push(format!(
        "{} x {} field, k in [{:.6}, {:.6}]",
        grid.n_x, grid.n_t, meta.k_min, meta.k_max
    ));
    Ok(out)
}

/// Generates clean and noisy measurements of the forward solution.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.exact_params()?;
    let tech = cfg.technology(&grid)?;
    let plan = cfg.plan(&grid)?;
    let k0 = sample_initial_condition(&grid);
    let clean = generate_synthetic_data(&params, &tech, &grid, &k0, &plan)?;
    let set = apply_noise(&clean, cfg.eps_noise, cfg.seed)?;

    io::create_dir(&cfg.out)?;
    let mut out = Outcome::default();
    io::write_measurements_csv(out.file(cfg.out.join("data.csv")), &set, &grid)?;
    let meta = DatasetMeta {
        epsilon: cfg.eps_noise,
        seed: cfg.seed,
        grid,
        plan: plan.clone(),
        technology: tech.clone(),
        config: cfg.clone(),
    };
    io::write_json(out.file(cfg.out.join("data.json")), &meta)?;
    write_profile_if_tabulated(&mut out, &cfg.out, &tech, &grid)?;
    out.summary.push(format!(
        "{} measurements ({} x {}), eps = {}, seed = {}",
        set.plan.len(),
        plan.m(),
        plan.n(),
        cfg.eps_noise,
        cfg.seed
    ));
    Ok(out)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    dataset: &'a Path,
    config: &'a RunConfig,
    report: &'a InversionReport<f64>,
}

/// Recovers the production parameters from a dataset written by `synth`.
///
/// The grid, technology and data-generating parameters come from the
/// dataset sidecar; DE settings, restarts and the output directory come
/// from `cfg`.
pub fn cmd_invert(cfg: &RunConfig, dataset: &Path) -> Result<(Outcome, InversionReport<f64>)> {
    let (set, meta) = io::read_dataset(dataset)?;
    cfg.inversion_spec().validate()?;
    let grid = meta.grid;
    let k0 = sample_initial_condition(&grid);
    let exact = ProductionParams::new(meta.config.alpha1, meta.config.alpha2, meta.config.p)?;
    let problem = InverseProblem::new(grid, &meta.technology, k0, set, cfg.solver_options())?;
    let report = run_inversion(&problem, &cfg.inversion_spec(), Some(&exact))?;

    io::create_dir(&cfg.out)?;
    let mut out = Outcome::default();
    let file = ReportFile {
        dataset,
        config: cfg,
        report: &report,
    };
    io::write_json(out.file(cfg.out.join("report.json")), &file)?;
    io::write_report_csv(out.file(cfg.out.join("report.csv")), &report)?;
    if cfg.trace {
        for (r, trace) in report.traces.iter().enumerate() {
            io::write_trace_csv(out.file(cfg.out.join(format!("trace_r{r}.csv"))), trace)?;
        }
    }

    let a = &report.aggregated;
    out.summary.push(format!(
        "alpha1 = {:.6e}, alpha2 = {:.6e}, p = {:.6}",
        a.alpha1, a.alpha2, a.p
    ));
    if let Some(m) = &report.metrics {
        out.summary.push(format!(
            "max|delta| = {:.4e}, rho = {:.4e}, misfit = {:.4e}",
            m.max_abs_delta, m.rho, m.misfit
        ));
    }
    out.summary.push(format!(
        "{}/{} restarts reached eps_stop, {:.1} s",
        report.threshold_stops,
        report.restarts.len(),
        report.wall_time.as_secs_f64()
    ));
    if let Some(w) = &report.warning {
        out.summary.push(format!("warning: {w}"));
    }
    Ok((out, report))
}

#[derive(Serialize)]
struct GradientLevel {
    k: f64,
    file: String,
    samples: usize,
    fd_max_relative_error: Option<f64>,
}

#[derive(Serialize)]
struct GradientMeta<'a> {
    gamma: f64,
    levels: Vec<GradientLevel>,
    config: &'a RunConfig,
}

fn level_file_name(k: f64) -> String {
    format!("gradient_k{k}.csv")
}

/// Gradient fields of the reaction term over the search box, one CSV per
/// capital level, with `γ = A/δ` for the constant technology level.
pub fn cmd_sensitivity(cfg: &RunConfig, check_fd: bool) -> Result<Outcome> {
    cfg.validate()?;
    let gamma = cfg.tech_constant / cfg.delta;
    let bx = cfg.param_box();
    io::create_dir(&cfg.out)?;
    let mut out = Outcome::default();
    let mut levels = Vec::new();
    let mut worst: f64 = 0.0;
    for &k in &cfg.k_levels {
        let samples: Vec<GradientSample<f64>> = emit_gradient_field(&bx, k, gamma, cfg.grad_res)?;
        let name = level_file_name(k);
        io::write_gradient_csv(out.file(cfg.out.join(&name)), &samples)?;
        let fd = check_fd.then(|| max_fd_relative_error(&samples)).transpose()?;
        if let Some(e) = fd {
            worst = worst.max(e);
        }
        levels.push(GradientLevel {
            k,
            file: name,
            samples: samples.len(),
            fd_max_relative_error: fd,
        });
    }
    io::write_json(
        out.file(cfg.out.join("gradient.json")),
        &GradientMeta {
            gamma,
            levels,
            config: cfg,
        },
    )?;
    out.summary.push(format!("{} gradient fields, gamma = {gamma}", cfg.k_levels.len()));
    if check_fd {
        out.summary.push(format!("max relative FD error {worst:.3e}"));
        if worst >= 1e-5 {
            return Err(Error::domain(format!(
                "analytic gradient disagrees with finite differences (relative error {worst:.3e})"
            )));
        }
    }
    Ok(out)
}

pub fn cmd_verify() -> Result<Vec<Check>> {
    verify::run_all()
}
