//! Measurement plans and synthetic data.
//!
//! Spatial samples sit on grid nodes equispaced over `[0, 1]` (both ends
//! included by default, nearest node with ties rounded down). Temporal
//! samples start at the first level with `t ≥ t_end/2` and advance by a
//! constant stride of `round(span / N)` levels, `span` being the number of
//! levels left to `t_end`. On the 251-level grid with `N = 6` this is a
//! 21-level (12.6 year) stride: 75, 87.6, …, 138 years.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GridSpec, ProductionParams, TechnologyField};
use crate::scalar::Scalar;
use crate::solver::{ForwardSolver, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacePlacement {
    /// `m/(M−1)` for `m = 0..M`, so both boundary nodes are sampled.
    #[default]
    Endpoints,
    /// `(m+1)/(M+1)`, interior nodes only.
    Interior,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub space_indices: Vec<usize>,
    pub time_indices: Vec<usize>,
}

impl MeasurementPlan {
    /// Number of spatial sample points `M`.
    pub fn m(&self) -> usize {
        self.space_indices.len()
    }

    /// Number of sample times `N`.
    pub fn n(&self) -> usize {
        self.time_indices.len()
    }

    pub fn len(&self) -> usize {
        self.m() * self.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last_time_index(&self) -> usize {
        self.time_indices.last().copied().unwrap_or(0)
    }

    /// Checks ordering, grid bounds and that sample times lie in `[t_end/2, t_end]`.
    pub fn validate<T: Scalar>(&self, grid: &GridSpec<T>) -> Result<()> {
        let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if self.space_indices.is_empty() || self.time_indices.is_empty() {
            return Err(Error::config("measurement plan is empty"));
        }
        if !increasing(&self.space_indices) || !increasing(&self.time_indices) {
            return Err(Error::config("measurement indices must be strictly increasing"));
        }
        if *self.space_indices.last().unwrap() >= grid.n_x {
            return Err(Error::config("spatial measurement index outside the grid"));
        }
        if self.last_time_index() >= grid.n_t {
            return Err(Error::config("temporal measurement index outside the grid"));
        }
        if 2 * self.time_indices[0] < grid.n_t - 1 {
            return Err(Error::config("measurement times must lie in the second half of the horizon"));
        }
        Ok(())
    }
}

/// `round(num / den)` with ties going down.
fn div_round_half_down(num: usize, den: usize) -> usize {
    let (q, r) = (num / den, num % den);
    if 2 * r > den {
        q + 1
    } else {
        q
    }
}

pub fn build_measurement_plan<T: Scalar>(grid: &GridSpec<T>, m: usize, n: usize) -> Result<MeasurementPlan> {
    build_measurement_plan_with(grid, m, n, SpacePlacement::Endpoints)
}

pub fn build_measurement_plan_with<T: Scalar>(
    grid: &GridSpec<T>,
    m: usize,
    n: usize,
    placement: SpacePlacement,
) -> Result<MeasurementPlan> {
    let intervals = grid.n_x - 1;
    let space_indices: Vec<usize> = match placement {
        SpacePlacement::Endpoints => {
            if m < 2 || m > grid.n_x {
                return Err(Error::config(format!(
                    "M must lie in [2, {}] when boundary nodes are sampled, got {m}",
                    grid.n_x
                )));
            }
            (0..m).map(|i| div_round_half_down(i * intervals, m - 1)).collect()
        }
        SpacePlacement::Interior => {
            if m < 1 || m + 2 > grid.n_x {
                return Err(Error::config(format!(
                    "M must lie in [1, {}] for interior sampling, got {m}",
                    grid.n_x - 2
                )));
            }
            (0..m).map(|i| div_round_half_down((i + 1) * intervals, m + 1)).collect()
        }
    };

    if n < 1 || n > grid.n_t / 2 {
        return Err(Error::config(format!("N must lie in [1, {}], got {n}", grid.n_t / 2)));
    }
    let last = grid.n_t - 1;
    let start = last.div_ceil(2);
    let span = last - start;
    let stride = if n == 1 {
        0
    } else {
        let s = div_round_half_down(span, n).max(1);
        if start + (n - 1) * s > last {
            span / (n - 1)
        } else {
            s
        }
    };
    if n > 1 && stride == 0 {
        return Err(Error::config(format!("N = {n} does not fit into the second half of the grid")));
    }
    let time_indices = (0..n).map(|j| start + j * stride).collect();

    let plan = MeasurementPlan { space_indices, time_indices };
    plan.validate(grid)?;
    Ok(plan)
}

/// Measurements `f_mj` (clean) and `f^ε_mj` (noisy), stored row-major by
/// spatial point: entry `(m, j)` lives at `m * N + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MeasurementSet<T> {
    pub plan: MeasurementPlan,
    pub clean: Vec<T>,
    pub noisy: Vec<T>,
    pub epsilon: T,
    pub seed: u64,
}

impl<T: Scalar> MeasurementSet<T> {
    pub fn index(&self, m: usize, j: usize) -> usize {
        m * self.plan.n() + j
    }

    pub fn clean_at(&self, m: usize, j: usize) -> T {
        self.clean[self.index(m, j)]
    }

    pub fn noisy_at(&self, m: usize, j: usize) -> T {
        self.noisy[self.index(m, j)]
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.plan.len();
        if self.clean.len() != len || self.noisy.len() != len {
            return Err(Error::config(format!(
                "measurement set holds {} clean and {} noisy values for a plan of {len} points",
                self.clean.len(),
                self.noisy.len()
            )));
        }
        Ok(())
    }
}

/// Samples the forward solution at the plan points.
pub fn sample_field<T: Scalar>(
    solver: &ForwardSolver<T>,
    params: &ProductionParams<T>,
    k0: &[T],
    plan: &MeasurementPlan,
    out: &mut [T],
) -> Result<()> {
    let n = plan.n();
    debug_assert_eq!(out.len(), plan.len());
    let mut next_j = 0;
    solver.march(params, k0, plan.last_time_index(), |level, values| {
        if next_j < n && plan.time_indices[next_j] == level {
            for (m, &i) in plan.space_indices.iter().enumerate() {
                out[m * n + next_j] = values[i];
            }
            next_j += 1;
        }
    })
}

/// Runs the forward problem with the data-generating parameters and records
/// the clean measurements.
pub fn generate_synthetic_data<T: Scalar>(
    params_ex: &ProductionParams<T>,
    tech: &TechnologyField<T>,
    grid: &GridSpec<T>,
    k0: &[T],
    plan: &MeasurementPlan,
) -> Result<MeasurementSet<T>> {
    params_ex.validate()?;
    plan.validate(grid)?;
    let solver = ForwardSolver::new(*grid, tech, SolverOptions::default())?;
    let mut clean = vec![T::zero(); plan.len()];
    sample_field(&solver, params_ex, k0, plan, &mut clean)?;
    Ok(MeasurementSet {
        plan: plan.clone(),
        noisy: clean.clone(),
        clean,
        epsilon: T::zero(),
        seed: 0,
    })
}

/// Multiplicative Gaussian noise `f^ε = f (1 + ε ξ)`, `ξ ~ N(0, 1)`.
///
/// Draws come from ChaCha8 seeded with `seed`, one per point in `(m, j)`
/// row-major order.
pub fn apply_noise<T: Scalar>(set: &MeasurementSet<T>, epsilon: T, seed: u64) -> Result<MeasurementSet<T>> {
    if !(epsilon >= T::zero() && epsilon.is_finite()) {
        return Err(Error::domain(format!("noise level must be >= 0, got {epsilon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = set
        .clean
        .iter()
        .map(|&f| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            f + epsilon * f * T::lit(xi)
        })
        .collect();
    Ok(MeasurementSet {
        plan: set.plan.clone(),
        clean: set.clean.clone(),
        noisy,
        epsilon,
        seed,
    })
}
