//! Discrete misfit `J(q) = 1/(NM) Σ_j Σ_m (k(x_m, t_j; q) − f^ε_mj)²` and
//! the recovery-quality metrics reported for an inversion.

use serde::{Deserialize, Serialize};

use crate::data::{sample_field, MeasurementSet};
use crate::error::{Error, Result};
use crate::model::{CapitalField, GridSpec, ProductionParams, TechnologyField};
use crate::scalar::Scalar;
use crate::solver::{ForwardSolver, SolverOptions};

/// Number of equispaced capital levels on `[0, k_max]` used for `max|δ(k)|`.
pub const DEFAULT_K_POINTS: usize = 501;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MisfitValue<T> {
    /// `+∞` when the forward solve failed.
    pub value: T,
    /// Forward solves consumed.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RecoveryMetrics<T> {
    /// `max |q_ex(k) − q_ε(k)|` over `[0, k_max]`.
    pub max_abs_delta: T,
    /// Relative L² distance of the two capital fields over the whole grid.
    pub rho: T,
    /// `J(q_ε)` against the (noisy) data.
    pub misfit: T,
    /// Upper end of the capital range used for `max_abs_delta`.
    pub k_max: T,
}

/// Everything needed to evaluate candidates against one data set: the
/// factored forward solver, the initial condition and the measurements.
#[derive(Debug, Clone)]
pub struct InverseProblem<T> {
    solver: ForwardSolver<T>,
    k0: Vec<T>,
    data: MeasurementSet<T>,
}

impl<T: Scalar> InverseProblem<T> {
    pub fn new(
        grid: GridSpec<T>,
        tech: &TechnologyField<T>,
        k0: Vec<T>,
        data: MeasurementSet<T>,
        opts: SolverOptions,
    ) -> Result<Self> {
        data.validate()?;
        data.plan.validate(&grid)?;
        if k0.len() != grid.n_x {
            return Err(Error::config(format!(
                "initial condition has {} values, grid has {} nodes",
                k0.len(),
                grid.n_x
            )));
        }
        Ok(Self {
            solver: ForwardSolver::new(grid, tech, opts)?,
            k0,
            data,
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        self.solver.grid()
    }

    pub fn data(&self) -> &MeasurementSet<T> {
        &self.data
    }

    pub fn initial_condition(&self) -> &[T] {
        &self.k0
    }

    pub fn solver(&self) -> &ForwardSolver<T> {
        &self.solver
    }

    /// Model values at the plan points, ordered like the data.
    pub fn predictions(&self, params: &ProductionParams<T>) -> Result<Vec<T>> {
        params.validate()?;
        let mut out = vec![T::zero(); self.data.plan.len()];
        sample_field(&self.solver, params, &self.k0, &self.data.plan, &mut out)?;
        Ok(out)
    }

    /// `J(candidate)`; inadmissible parameters and failed solves give `+∞`.
    pub fn evaluate_misfit(&self, candidate: &ProductionParams<T>) -> MisfitValue<T> {
        let value = match self.predictions(candidate) {
            Ok(pred) => misfit_from_predictions(&pred, &self.data.noisy),
            Err(_) => T::infinity(),
        };
        MisfitValue { value, evaluations: 1 }
    }

    /// Misfit of a raw `(α₁, α₂, p)` vector, the form the optimizer works with.
    pub fn objective(&self, v: &[T]) -> T {
        match ProductionParams::from_slice(v) {
            Ok(params) => self.evaluate_misfit(&params).value,
            Err(_) => T::infinity(),
        }
    }

    pub fn solve(&self, params: &ProductionParams<T>) -> Result<CapitalField<T>> {
        params.validate()?;
        self.solver.solve(params, &self.k0)
    }
}

/// Mean of squared residuals.
pub fn misfit_from_predictions<T: Scalar>(predictions: &[T], data: &[T]) -> T {
    assert_eq!(predictions.len(), data.len(), "prediction/data length mismatch");
    if data.is_empty() {
        return T::zero();
    }
    let sum = predictions
        .iter()
        .zip(data)
        .fold(T::zero(), |acc, (&p, &f)| acc + (p - f) * (p - f));
    let value = sum / T::from_count(data.len());
    if value.is_nan() {
        T::infinity()
    } else {
        value
    }
}

/// Builds a one-off problem and evaluates `J(candidate)`.
pub fn evaluate_misfit<T: Scalar>(
    candidate: &ProductionParams<T>,
    data: &MeasurementSet<T>,
    tech: &TechnologyField<T>,
    grid: &GridSpec<T>,
    k0: &[T],
    opts: &SolverOptions,
) -> Result<MisfitValue<T>> {
    let problem = InverseProblem::new(*grid, tech, k0.to_vec(), data.clone(), *opts)?;
    Ok(problem.evaluate_misfit(candidate))
}

/// `max |q_a(k) − q_b(k)|` over `points` equispaced levels on `[0, k_max]`.
pub fn max_abs_delta<T: Scalar>(
    a: &ProductionParams<T>,
    b: &ProductionParams<T>,
    k_max: T,
    points: usize,
) -> T {
    let points = points.max(2);
    let step = k_max / T::from_count(points - 1);
    (0..points)
        .map(|i| {
            let k = T::from_count(i) * step;
            (a.q(k) - b.q(k)).abs()
        })
        .fold(T::zero(), T::max)
}

fn trapezoid_weights<T: Scalar>(count: usize, h: T) -> impl Iterator<Item = T> {
    let half = T::lit(0.5);
    (0..count).map(move |i| if i == 0 || i + 1 == count { half * h } else { h })
}

/// `∫∫ u² dx dt` with trapezoidal weights in both directions.
pub fn l2_norm_squared<T: Scalar>(field: &CapitalField<T>, grid: &GridSpec<T>) -> T {
    weighted_sum(field, grid, |v| v * v)
}

fn weighted_sum<T: Scalar>(field: &CapitalField<T>, grid: &GridSpec<T>, f: impl Fn(T) -> T) -> T {
    let wx: Vec<T> = trapezoid_weights(grid.n_x, grid.h_x).collect();
    trapezoid_weights(grid.n_t, grid.h_t)
        .enumerate()
        .fold(T::zero(), |acc, (n, wt)| {
            let level = field.level(n);
            let row = level
                .iter()
                .zip(&wx)
                .fold(T::zero(), |s, (&v, &w)| s + w * f(v));
            acc + wt * row
        })
}

/// `‖a − b‖ / ‖a‖` in the grid L² norm.
pub fn relative_l2_error<T: Scalar>(reference: &CapitalField<T>, other: &CapitalField<T>, grid: &GridSpec<T>) -> T {
    let wx: Vec<T> = trapezoid_weights(grid.n_x, grid.h_x).collect();
    let diff = trapezoid_weights(grid.n_t, grid.h_t)
        .enumerate()
        .fold(T::zero(), |acc, (n, wt)| {
            let row = reference
                .level(n)
                .iter()
                .zip(other.level(n))
                .zip(&wx)
                .fold(T::zero(), |s, ((&a, &b), &w)| s + w * (a - b) * (a - b));
            acc + wt * row
        });
    let norm = l2_norm_squared(reference, grid);
    if diff == T::zero() {
        return T::zero();
    }
    (diff / norm).sqrt()
}

/// Compares a recovered production function with the exact one: on the
/// production curve, on the whole capital field and through the misfit.
pub fn compute_recovery_metrics<T: Scalar>(
    problem: &InverseProblem<T>,
    exact: &ProductionParams<T>,
    recovered: &ProductionParams<T>,
    k_points: usize,
) -> Result<RecoveryMetrics<T>> {
    let exact_field = problem.solve(exact)?;
    let k_max = exact_field.max();
    let rho = match problem.solve(recovered) {
        Ok(field) => relative_l2_error(&exact_field, &field, problem.grid()),
        Err(Error::BlowUp { .. }) => T::infinity(),
        Err(e) => return Err(e),
    };
    Ok(RecoveryMetrics {
        max_abs_delta: max_abs_delta(exact, recovered, k_max, k_points),
        rho,
        misfit: problem.evaluate_misfit(recovered).value,
        k_max,
    })
}
