//! Multi-restart inversion: independent DE runs on seeds `seed, seed+1, …`,
//! aggregated into one parameter estimate.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{minimize, DEConfig, DEResult, GenerationStats, StopReason};
use crate::error::{Error, Result};
use crate::model::ProductionParams;
use crate::objective::{compute_recovery_metrics, InverseProblem, RecoveryMetrics, DEFAULT_K_POINTS};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Componentwise arithmetic mean of the restart optima.
    #[default]
    Mean,
    /// The restart optimum with the lowest misfit.
    BestByMisfit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InversionSpec<T> {
    pub de: DEConfig<T>,
    pub restarts: usize,
    pub aggregation: Aggregation,
    /// Capital levels used for `max|δ(k)|`.
    pub k_points: usize,
}

impl<T: Scalar> InversionSpec<T> {
    pub fn new(de: DEConfig<T>, restarts: usize) -> Self {
        Self {
            de,
            restarts,
            aggregation: Aggregation::Mean,
            k_points: DEFAULT_K_POINTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::config("at least one restart is required"));
        }
        if self.de.dimension() != 3 {
            return Err(Error::config(format!(
                "production parameters need 3 search dimensions, got {}",
                self.de.dimension()
            )));
        }
        self.de.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RestartRecord<T> {
    pub index: usize,
    pub seed: u64,
    pub params: ProductionParams<T>,
    pub misfit: T,
    pub generations: usize,
    pub evaluations: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InversionReport<T> {
    pub spec: InversionSpec<T>,
    pub restarts: Vec<RestartRecord<T>>,
    /// Estimate under the configured aggregation rule.
    pub aggregated: ProductionParams<T>,
    pub mean: ProductionParams<T>,
    pub best: ProductionParams<T>,
    /// Parameters the data were generated with, when known.
    pub exact: Option<ProductionParams<T>>,
    /// Metrics of `aggregated`.
    pub metrics: Option<RecoveryMetrics<T>>,
    pub metrics_mean: Option<RecoveryMetrics<T>>,
    pub metrics_best: Option<RecoveryMetrics<T>>,
    pub threshold_stops: usize,
    pub warning: Option<String>,
    /// Not serialized, so reports of identical runs stay byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
    /// Per-restart DE traces when tracing is enabled; written separately.
    #[serde(skip)]
    pub traces: Vec<Vec<GenerationStats<T>>>,
}

/// Combines restart optima under `rule`.
pub fn aggregate_restarts<T: Scalar>(results: &[DEResult<T>], rule: Aggregation) -> Result<Vec<T>> {
    let first = results
        .first()
        .ok_or_else(|| Error::domain("cannot aggregate an empty list of restarts"))?;
    let dim = first.best_vector.len();
    if results.iter().any(|r| r.best_vector.len() != dim) {
        return Err(Error::domain("restart results have different dimensions"));
    }
    Ok(match rule {
        Aggregation::Mean => {
            let count = T::from_count(results.len());
            (0..dim)
                .map(|j| results.iter().fold(T::zero(), |s, r| s + r.best_vector[j]) / count)
                .collect()
        }
        Aggregation::BestByMisfit => {
            let mut best = first;
            for r in &results[1..] {
                if r.best_value < best.best_value {
                    best = r;
                }
            }
            best.best_vector.clone()
        }
    })
}

fn as_params<T: Scalar>(v: &[T]) -> ProductionParams<T> {
    ProductionParams {
        alpha1: v[0],
        alpha2: v[1],
        p: v[2],
    }
}

/// Runs `spec.restarts` independent minimizations of the misfit and
/// aggregates them. Metrics are computed when `exact` is given.
pub fn run_inversion<T: Scalar>(
    problem: &InverseProblem<T>,
    spec: &InversionSpec<T>,
    exact: Option<&ProductionParams<T>>,
) -> Result<InversionReport<T>> {
    spec.validate()?;
    let started = Instant::now();

    let results: Vec<DEResult<T>> = (0..spec.restarts)
        .into_par_iter()
        .map(|r| {
            let cfg = DEConfig {
                seed: spec.de.seed.wrapping_add(r as u64),
                ..spec.de.clone()
            };
            minimize(|v: &[T]| problem.objective(v), &cfg)
        })
        .collect::<Result<_>>()?;

    let restarts: Vec<RestartRecord<T>> = results
        .iter()
        .enumerate()
        .map(|(index, r)| RestartRecord {
            index,
            seed: spec.de.seed.wrapping_add(index as u64),
            params: as_params(&r.best_vector),
            misfit: r.best_value,
            generations: r.generations_used,
            evaluations: r.evaluations,
            stop_reason: r.stop_reason,
        })
        .collect();

    let mean = as_params(&aggregate_restarts(&results, Aggregation::Mean)?);
    let best = as_params(&aggregate_restarts(&results, Aggregation::BestByMisfit)?);
    let aggregated = match spec.aggregation {
        Aggregation::Mean => mean,
        Aggregation::BestByMisfit => best,
    };

    let metrics_for = |p: &ProductionParams<T>| -> Result<Option<RecoveryMetrics<T>>> {
        exact
            .map(|ex| compute_recovery_metrics(problem, ex, p, spec.k_points))
            .transpose()
    };
    let metrics_mean = metrics_for(&mean)?;
    let metrics_best = metrics_for(&best)?;
    let metrics = match spec.aggregation {
        Aggregation::Mean => metrics_mean,
        Aggregation::BestByMisfit => metrics_best,
    };

    let threshold_stops = restarts
        .iter()
        .filter(|r| r.stop_reason == StopReason::Threshold)
        .count();
    let warning = (threshold_stops == 0).then(|| {
        format!(
            "no restart reached eps_stop = {}; all {} stopped at the generation budget",
            spec.de.eps_stop, spec.restarts
        )
    });

    Ok(InversionReport {
        spec: spec.clone(),
        restarts,
        aggregated,
        mean,
        best,
        exact: exact.copied(),
        metrics,
        metrics_mean,
        metrics_best,
        threshold_stops,
        warning,
        wall_time: started.elapsed(),
        traces: results.into_iter().map(|r| r.trace).collect(),
    })
}
