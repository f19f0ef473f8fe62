//! Built-in oracle checks behind `solow verify`: analytic decay,
//! convergence orders, DE on standard test functions, gradient against
//! finite differences and nonnegativity of the forward solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::de::{minimize, DEConfig};
use crate::error::Result;
use crate::model::{
    sample_initial_condition, CapitalField, GridSpec, PhysicalConfig, ProductionParams, TechnologyField,
};
use crate::sensitivity::{emit_gradient_field, max_fd_relative_error, ParamBox, REFERENCE_K_LEVELS};
use crate::solver::{solve_forward, ForwardSolver, SolverOptions};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Value at node `i` and scaled time `t`, linear in time between levels.
pub fn value_at_time(field: &CapitalField<f64>, grid: &GridSpec<f64>, i: usize, t: f64) -> f64 {
    let s = (t / grid.h_t).clamp(0.0, (grid.n_t - 1) as f64);
    let n = (s.floor() as usize).min(grid.n_t - 2);
    let w = s - n as f64;
    (1.0 - w) * field.get(i, n) + w * field.get(i, n + 1)
}

/// `|k(·, 1) − 10e⁻¹|` for pure decay from `k₀ ≡ 10` with `Nt` levels on the
/// reference domain.
pub fn decay_error(n_t: usize) -> Result<f64> {
    let grid = GridSpec::new(&PhysicalConfig::reference(), 26, n_t)?;
    let params = ProductionParams::new(0.0, 0.0005, 4.0)?;
    let tech = TechnologyField::constant(1.0)?;
    let field = solve_forward(&params, &tech, &grid, &vec![10.0; grid.n_x], &SolverOptions::default())?;
    let exact = 10.0 * (-1.0f64).exp();
    Ok((0..grid.n_x)
        .map(|i| (value_at_time(&field, &grid, i, 1.0) - exact).abs())
        .fold(0.0, f64::max))
}

/// Max-norm error of the discrete steady state of
/// `−u'' + u = π² cos(πx) + cos(πx) + 2`, `u'(0) = u'(1) = 0`, whose exact
/// solution is `cos(πx) + 2`, on `n_x` nodes.
pub fn manufactured_steady_error(n_x: usize) -> Result<f64> {
    use std::f64::consts::PI;
    // d = 1, horizon long enough to reach the discrete steady state
    let grid = GridSpec::with_coefficient(1.0, 60.0, 1.0, n_x, 121)?;
    let tech = TechnologyField::constant(1.0)?;
    let solver = ForwardSolver::new(grid, &tech, SolverOptions::default())?;
    let off = ProductionParams::new(0.0, 0.0, 2.0)?;
    let nodes = grid.nodes();
    let exact: Vec<f64> = nodes.iter().map(|x| (PI * x).cos() + 2.0).collect();
    let source: Vec<f64> = nodes.iter().map(|x| (PI * PI + 1.0) * (PI * x).cos() + 2.0).collect();
    let mut cur = vec![2.0; n_x];
    let mut next = vec![0.0; n_x];
    for _ in 1..grid.n_t {
        solver.step_forced_into(&cur, &off, Some(&source), &mut next)?;
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Runs every check; quick enough for an interactive command.
pub fn run_all() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let coarse = decay_error(251)?;
    let fine = decay_error(501)?;
    checks.push(Check::new(
        "decay oracle at t = 1",
        coarse <= 0.06,
        format!("error {coarse:.5} (limit 0.06)"),
    ));
    let ratio = coarse / fine;
    checks.push(Check::new(
        "first-order time convergence",
        (1.7..=2.3).contains(&ratio),
        format!("error ratio {ratio:.3} when halving h_t (want 1.7..2.3)"),
    ));

    let ratio = manufactured_steady_error(21)? / manufactured_steady_error(41)?;
    checks.push(Check::new(
        "second-order space convergence",
        (3.5..=4.5).contains(&ratio),
        format!("error ratio {ratio:.3} when halving h_x (want ~4)"),
    ));

    let cfg = |dim: usize, lim: f64, seed: u64| DEConfig {
        eps_stop: 0.0,
        seed,
        ..DEConfig::reference(vec![[-lim, lim]; dim])
    };
    let s = minimize(sphere, &DEConfig { eps_stop: 1e-8, ..cfg(3, 5.0, 1) })?;
    checks.push(Check::new(
        "DE sphere (D = 3)",
        s.best_value < 1e-8,
        format!("best {:.3e} after {} generations", s.best_value, s.generations_used),
    ));
    let r = minimize(rosenbrock, &DEConfig { eps_stop: 1e-6, ..cfg(2, 2.0, 1) })?;
    checks.push(Check::new(
        "DE Rosenbrock (D = 2)",
        r.best_value < 1e-6,
        format!("best {:.3e} after {} generations", r.best_value, r.generations_used),
    ));

    let mut worst: f64 = 0.0;
    for k in REFERENCE_K_LEVELS {
        let samples = emit_gradient_field(&ParamBox::search_default(), k, 20.0, 5)?;
        worst = worst.max(max_fd_relative_error(&samples)?);
    }
    checks.push(Check::new(
        "gradient vs finite differences",
        worst < 1e-5,
        format!("max relative error {worst:.2e} (limit 1e-5)"),
    ));

    let grid = GridSpec::reference();
    let k0 = sample_initial_condition(&grid);
    let tech = TechnologyField::constant(1.0)?;
    let solver = ForwardSolver::new(grid, &tech, SolverOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut min_value = f64::INFINITY;
    for _ in 0..20 {
        let params = ProductionParams::new(
            rng.random_range(0.0..1e-2),
            rng.random_range(1e-5..1e-2),
            rng.random_range(1.01..8.0),
        )?;
        if let Ok(field) = solver.solve(&params, &k0) {
            min_value = min_value.min(field.min());
        }
    }
    checks.push(Check::new(
        "forward solution nonnegative",
        min_value >= 0.0,
        format!("smallest value {min_value:.3e} over 20 random parameter sets"),
    ));

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_hits_levels() {
        let grid = GridSpec::reference();
        let params = ProductionParams::new(0.0, 0.0005, 4.0).unwrap();
        let tech = TechnologyField::constant(1.0).unwrap();
        let field = solve_forward(&params, &tech, &grid, &vec![10.0; 26], &SolverOptions::default()).unwrap();
        assert!((value_at_time(&field, &grid, 0, grid.t(40)) - field.get(0, 40)).abs() < 1e-12);
        assert!((value_at_time(&field, &grid, 0, grid.t_end) - field.get(0, 250)).abs() < 1e-12);
    }

    #[test]
    fn test_functions_vanish_at_minimum() {
        assert_eq!(sphere(&[0.0; 3]), 0.0);
        assert_eq!(rosenbrock(&[1.0, 1.0]), 0.0);
        assert_eq!(rosenbrock(&[0.0, 0.0]), 1.0);
    }
}
