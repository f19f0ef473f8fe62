//! Run configuration: a flat `key = value` text file plus overrides.
//!
//! Blank lines and `#` comments are ignored. Every key has a default (the
//! reference experiment), and the full effective configuration is echoed
//! into every output so runs can be reproduced from their artifacts.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `delta`, `L`, `T` | depreciation rate, spatial extent, horizon (years) | 0.05, 50, 150 |
//! | `Nx`, `Nt` | spatial / temporal node counts | 26, 251 |
//! | `alpha1`, `alpha2`, `p` | production parameters (data generation, metrics) | 0.0005, 0.0005, 4 |
//! | `A` | constant technology level | 1 |
//! | `A_profile` | `default` or a CSV file `x,A` tabulated on the nodes; overrides `A` | unset |
//! | `M`, `N` | spatial / temporal measurement counts | 5, 6 |
//! | `placement` | `endpoints` or `interior` | endpoints |
//! | `eps_noise`, `seed` | noise level and noise seed | 0, 1 |
//! | `Np`, `F`, `Cr`, `Gmax`, `eps_stop` | DE settings | 100, 0.7, 0.9, 5000, 1e-4 |
//! | `de_seed` | seed of the first restart | 1 |
//! | `a1_min` … `p_max` | search box | 1e-5, 1e-2, 1e-5, 1e-2, 1.5, 8 |
//! | `bound_handling` | `clip`, `reflect` or `resample` | clip |
//! | `R`, `aggregation` | restarts and `mean` / `best` | 16, mean |
//! | `k_points` | capital levels for `max|δ(k)|` | 501 |
//! | `blowup_cap` | solver abort threshold | 1e6 |
//! | `k_levels`, `grad_res` | gradient-field capital levels and lattice size | 0.5,1.3,11.25 ; 5 |
//! | `trace` | write per-generation DE statistics | false |
//! | `out` | output directory | out |

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{build_measurement_plan_with, MeasurementPlan, SpacePlacement};
use crate::de::{BoundHandling, DEConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::model::{GridSpec, PhysicalConfig, ProductionParams, TechnologyField};
use crate::pipeline::{Aggregation, InversionSpec};
use crate::sensitivity::ParamBox;
use crate::solver::SolverOptions;

/// Every key accepted by [`RunConfig::set`], in documentation order.
pub const KEYS: &[&str] = &[
    "delta", "L", "T", "Nx", "Nt", "alpha1", "alpha2", "p", "A", "A_profile", "M", "N", "placement", "eps_noise",
    "seed", "Np", "F", "Cr", "Gmax", "eps_stop", "de_seed", "a1_min", "a1_max", "a2_min", "a2_max", "p_min", "p_max",
    "bound_handling", "R", "aggregation", "k_points", "blowup_cap", "k_levels", "grad_res", "trace", "out",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub delta: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "Nx")]
    pub n_x: usize,
    #[serde(rename = "Nt")]
    pub n_t: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub p: f64,
    #[serde(rename = "A")]
    pub tech_constant: f64,
    #[serde(rename = "A_profile")]
    pub tech_profile: Option<String>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub placement: SpacePlacement,
    pub eps_noise: f64,
    pub seed: u64,
    #[serde(rename = "Np")]
    pub np: usize,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "Cr")]
    pub cr: f64,
    #[serde(rename = "Gmax")]
    pub gmax: usize,
    pub eps_stop: f64,
    pub de_seed: u64,
    pub a1_min: f64,
    pub a1_max: f64,
    pub a2_min: f64,
    pub a2_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub bound_handling: BoundHandling,
    #[serde(rename = "R")]
    pub restarts: usize,
    pub aggregation: Aggregation,
    pub k_points: usize,
    pub blowup_cap: f64,
    pub k_levels: Vec<f64>,
    pub grad_res: usize,
    pub trace: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            length: 50.0,
            horizon: 150.0,
            n_x: 26,
            n_t: 251,
            alpha1: 0.0005,
            alpha2: 0.0005,
            p: 4.0,
            tech_constant: 1.0,
            tech_profile: None,
            m: 5,
            n: 6,
            placement: SpacePlacement::Endpoints,
            eps_noise: 0.0,
            seed: 1,
            np: 100,
            f: 0.7,
            cr: 0.9,
            gmax: 5000,
            eps_stop: 1e-4,
            de_seed: 1,
            a1_min: 1e-5,
            a1_max: 1e-2,
            a2_min: 1e-5,
            a2_max: 1e-2,
            p_min: 1.5,
            p_max: 8.0,
            bound_handling: BoundHandling::Clip,
            restarts: 16,
            aggregation: Aggregation::Mean,
            k_points: 501,
            blowup_cap: 1e6,
            k_levels: vec![0.5, 1.3, 11.25],
            grad_res: 5,
            trace: false,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::config(format!("{key} = {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(format!("{key} = {value:?}: expected a boolean"))),
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(&text)? {
            cfg.set(&k, &v).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "delta" => self.delta = parse(key, value)?,
            "L" => self.length = parse(key, value)?,
            "T" => self.horizon = parse(key, value)?,
            "Nx" => self.n_x = parse(key, value)?,
            "Nt" => self.n_t = parse(key, value)?,
            "alpha1" => self.alpha1 = parse(key, value)?,
            "alpha2" => self.alpha2 = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "A" => self.tech_constant = parse(key, value)?,
            "A_profile" => {
                self.tech_profile = match value {
                    "" | "none" => None,
                    v => Some(v.to_string()),
                }
            }
            "M" => self.m = parse(key, value)?,
            "N" => self.n = parse(key, value)?,
            "placement" => {
                self.placement = match value {
                    "endpoints" => SpacePlacement::Endpoints,
                    "interior" => SpacePlacement::Interior,
                    _ => return Err(Error::config(format!("placement = {value:?}: expected endpoints or interior"))),
                }
            }
            "eps_noise" => self.eps_noise = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "Np" => self.np = parse(key, value)?,
            "F" => self.f = parse(key, value)?,
            "Cr" => self.cr = parse(key, value)?,
            "Gmax" => self.gmax = parse(key, value)?,
            "eps_stop" => self.eps_stop = parse(key, value)?,
            "de_seed" => self.de_seed = parse(key, value)?,
            "a1_min" => self.a1_min = parse(key, value)?,
            "a1_max" => self.a1_max = parse(key, value)?,
            "a2_min" => self.a2_min = parse(key, value)?,
            "a2_max" => self.a2_max = parse(key, value)?,
            "p_min" => self.p_min = parse(key, value)?,
            "p_max" => self.p_max = parse(key, value)?,
            "bound_handling" => {
                self.bound_handling = match value {
                    "clip" => BoundHandling::Clip,
                    "reflect" => BoundHandling::Reflect,
                    "resample" => BoundHandling::Resample,
                    _ => return Err(Error::config(format!("bound_handling = {value:?}: expected clip, reflect or resample"))),
                }
            }
            "R" => self.restarts = parse(key, value)?,
            "aggregation" => {
                self.aggregation = match value {
                    "mean" => Aggregation::Mean,
                    "best" => Aggregation::BestByMisfit,
                    _ => return Err(Error::config(format!("aggregation = {value:?}: expected mean or best"))),
                }
            }
            "k_points" => self.k_points = parse(key, value)?,
            "blowup_cap" => self.blowup_cap = parse(key, value)?,
            "k_levels" => {
                self.k_levels = value
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "grad_res" => self.grad_res = parse(key, value)?,
            "trace" => self.trace = parse_bool(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Checks values and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        self.physical().validate()?;
        self.grid()?;
        if let Some(path) = self.tech_profile.as_deref().filter(|p| *p != "default") {
            if !Path::new(path).is_file() {
                return Err(Error::config(format!("A_profile file {path:?} does not exist")));
            }
        }
        if self.k_points < 2 {
            return Err(Error::config("k_points must be >= 2"));
        }
        if self.k_levels.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::config("k_levels must be positive"));
        }
        self.inversion_spec().validate()
    }

    pub fn physical(&self) -> PhysicalConfig<f64> {
        PhysicalConfig {
            length: self.length,
            horizon: self.horizon,
            delta: self.delta,
        }
    }

    pub fn grid(&self) -> Result<GridSpec<f64>> {
        GridSpec::new(&self.physical(), self.n_x, self.n_t)
    }

    pub fn exact_params(&self) -> Result<ProductionParams<f64>> {
        ProductionParams::new(self.alpha1, self.alpha2, self.p)
    }

    pub fn technology(&self, grid: &GridSpec<f64>) -> Result<TechnologyField<f64>> {
        let tech = match self.tech_profile.as_deref() {
            None => TechnologyField::constant(self.tech_constant)?,
            Some("default") => TechnologyField::default_profile(grid),
            Some(path) => io::read_technology_profile(Path::new(path), grid)?,
        };
        tech.validate(grid)?;
        Ok(tech)
    }

    pub fn plan(&self, grid: &GridSpec<f64>) -> Result<MeasurementPlan> {
        build_measurement_plan_with(grid, self.m, self.n, self.placement)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            blowup_cap: self.blowup_cap,
            ..SolverOptions::default()
        }
    }

    pub fn bounds(&self) -> Vec<[f64; 2]> {
        vec![
            [self.a1_min, self.a1_max],
            [self.a2_min, self.a2_max],
            [self.p_min, self.p_max],
        ]
    }

    pub fn de_config(&self) -> DEConfig<f64> {
        DEConfig {
            population_size: self.np,
            f: self.f,
            cr: self.cr,
            max_generations: self.gmax,
            eps_stop: self.eps_stop,
            bounds: self.bounds(),
            seed: self.de_seed,
            bound_handling: self.bound_handling,
            trace: self.trace,
        }
    }

    pub fn inversion_spec(&self) -> InversionSpec<f64> {
        InversionSpec {
            de: self.de_config(),
            restarts: self.restarts,
            aggregation: self.aggregation,
            k_points: self.k_points,
        }
    }

    pub fn param_box(&self) -> ParamBox<f64> {
        ParamBox {
            alpha1: [self.a1_min, self.a1_max],
            alpha2: [self.a2_min, self.a2_max],
            p: [self.p_min, self.p_max],
        }
    }
}
