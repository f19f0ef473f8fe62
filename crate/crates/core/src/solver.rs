//! Finite-difference solver for the scaled initial-boundary value problem
//!
//! ```text
//! ∂k/∂t − d ∂²k/∂x² = (A/δ) q(k) − k   on (0, 1) × (0, δT]
//! ∂k/∂x = 0                             at x = 0 and x = 1
//! ```
//!
//! Backward Euler in time, the three-point Laplacian in space and mirrored
//! ghost nodes at both ends. Diffusion and the linear decay are implicit; the
//! production term is taken from the previous time level, so every step is a
//! single solve with the same tridiagonal matrix
//!
//! ```text
//! (I − h_t d Δ_h + h_t I) kⁿ⁺¹ = kⁿ + h_t (A/δ) q(kⁿ)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CapitalField, GridSpec, ProductionParams, TechnologyField};
use crate::scalar::Scalar;
use crate::tridiag::TridiagonalLu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionTreatment {
    /// Production term explicit, decay and diffusion implicit.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryScheme {
    /// Zero flux through `k₋₁ = k₁` and `k_{n} = k_{n−2}`.
    #[default]
    GhostMirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub reaction_treatment: ReactionTreatment,
    pub boundary_scheme: BoundaryScheme,
    /// Any value above this aborts the run as a blow-up.
    pub blowup_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            reaction_treatment: ReactionTreatment::SemiImplicit,
            boundary_scheme: BoundaryScheme::GhostMirror,
            blowup_cap: 1e6,
        }
    }
}

/// Forward solver with the step matrix factored once for a fixed grid and
/// technology field. Immutable, so one instance can serve concurrent callers.
#[derive(Debug, Clone)]
pub struct ForwardSolver<T> {
    grid: GridSpec<T>,
    opts: SolverOptions,
    // A_i / δ at each node
    gamma: Vec<T>,
    lu: TridiagonalLu<T>,
    cap: T,
}

impl<T: Scalar> ForwardSolver<T> {
    pub fn new(grid: GridSpec<T>, tech: &TechnologyField<T>, opts: SolverOptions) -> Result<Self> {
        if !(opts.blowup_cap > 0.0) {
            return Err(Error::config("blow-up cap must be positive"));
        }
        let gamma = tech
            .node_values(&grid)?
            .into_iter()
            .map(|a| a / grid.delta)
            .collect();
        let n = grid.n_x;
        let r = grid.h_t * grid.d / (grid.h_x * grid.h_x);
        let two = T::lit(2.0);
        let diag = vec![T::one() + grid.h_t + two * r; n];
        let mut lower = vec![-r; n - 1];
        let mut upper = vec![-r; n - 1];
        match opts.boundary_scheme {
            BoundaryScheme::GhostMirror => {
                upper[0] = -two * r;
                lower[n - 2] = -two * r;
            }
        }
        // Strictly diagonally dominant for any h_t, d > 0, so factoring cannot fail.
        let lu = TridiagonalLu::factor(&lower, &diag, &upper)
            .expect("implicit step matrix is diagonally dominant");
        Ok(Self {
            grid,
            opts,
            gamma,
            lu,
            cap: T::lit(opts.blowup_cap),
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// Advances one time level, writing the new values into `next`.
    pub fn step_into(&self, prev: &[T], params: &ProductionParams<T>, next: &mut [T]) -> Result<()> {
        self.step_forced_into(prev, params, None, next)
    }

    /// Like [`Self::step_into`] with an additional known source term added
    /// to the right-hand side at the previous time level.
    pub fn step_forced_into(
        &self,
        prev: &[T],
        params: &ProductionParams<T>,
        source: Option<&[T]>,
        next: &mut [T],
    ) -> Result<()> {
        let n = self.grid.n_x;
        if prev.len() != n || next.len() != n || source.is_some_and(|s| s.len() != n) {
            return Err(Error::domain(format!("state vectors must have {n} entries")));
        }
        let h_t = self.grid.h_t;
        match self.opts.reaction_treatment {
            ReactionTreatment::SemiImplicit => {
                for i in 0..n {
                    let k = prev[i];
                    let mut rhs = k + h_t * self.gamma[i] * params.q(k);
                    if let Some(s) = source {
                        rhs = rhs + h_t * s[i];
                    }
                    next[i] = rhs;
                }
            }
        }
        self.lu.solve_in_place(next);
        Ok(())
    }

    fn check_level(&self, level: usize, values: &[T]) -> Result<()> {
        for &v in values {
            if !v.is_finite() || v > self.cap {
                return Err(Error::BlowUp {
                    level,
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Marches from `k0` up to and including time level `last_level`, calling
    /// `visit(level, values)` for every level starting with 0.
    pub fn march<V>(
        &self,
        params: &ProductionParams<T>,
        k0: &[T],
        last_level: usize,
        mut visit: V,
    ) -> Result<()>
    where
        V: FnMut(usize, &[T]),
    {
        let n = self.grid.n_x;
        if k0.len() != n {
            return Err(Error::domain(format!(
                "initial condition has {} values, grid has {n} nodes",
                k0.len()
            )));
        }
        if k0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { level: 0 });
        }
        if k0.iter().any(|&v| v < T::zero()) {
            return Err(Error::domain("initial condition must be nonnegative"));
        }
        if last_level >= self.grid.n_t {
            return Err(Error::domain(format!(
                "time level {last_level} beyond grid with {} levels",
                self.grid.n_t
            )));
        }
        let mut cur = k0.to_vec();
        let mut next = vec![T::zero(); n];
        visit(0, &cur);
        for level in 1..=last_level {
            self.step_into(&cur, params, &mut next)?;
            self.check_level(level, &next)?;
            std::mem::swap(&mut cur, &mut next);
            visit(level, &cur);
        }
        Ok(())
    }

    /// Full space-time solution on the grid.
    pub fn solve(&self, params: &ProductionParams<T>, k0: &[T]) -> Result<CapitalField<T>> {
        let (n_x, n_t) = (self.grid.n_x, self.grid.n_t);
        let mut values = Vec::with_capacity(n_x * n_t);
        self.march(params, k0, n_t - 1, |_, level| values.extend_from_slice(level))?;
        Ok(CapitalField::from_levels(n_x, n_t, values))
    }
}

/// Solves the forward problem on the whole grid.
pub fn solve_forward<T: Scalar>(
    params: &ProductionParams<T>,
    tech: &TechnologyField<T>,
    grid: &GridSpec<T>,
    k0: &[T],
    opts: &SolverOptions,
) -> Result<CapitalField<T>> {
    params.validate()?;
    ForwardSolver::new(*grid, tech, *opts)?.solve(params, k0)
}

/// Single time step of the semi-implicit scheme. The technology field is
/// time independent, so `_t` only documents which level is being advanced.
pub fn step<T: Scalar>(
    prev: &[T],
    _t: T,
    params: &ProductionParams<T>,
    tech: &TechnologyField<T>,
    grid: &GridSpec<T>,
    opts: &SolverOptions,
) -> Result<Vec<T>> {
    if prev.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { level: 0 });
    }
    params.validate()?;
    let solver = ForwardSolver::new(*grid, tech, *opts)?;
    let mut next = vec![T::zero(); grid.n_x];
    solver.step_into(prev, params, &mut next)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::model::{sample_initial_condition, PhysicalConfig};

    fn no_production() -> ProductionParams<f64> {
        ProductionParams::new(0.0, 0.0005, 4.0).unwrap()
    }

    fn unit_tech() -> TechnologyField<f64> {
        TechnologyField::constant(1.0).unwrap()
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = GridSpec::reference();
        let zero = vec![0.0; g.n_x];
        let out = step(&zero, 0.0, &ProductionParams::exact(), &unit_tech(), &g, &Default::default()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        let field = solve_forward(&ProductionParams::exact(), &unit_tech(), &g, &zero, &Default::default()).unwrap();
        assert!(field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_decay_step() {
        let g = GridSpec::reference();
        let c = 7.0;
        let out = step(&vec![c; g.n_x], 0.0, &no_production(), &unit_tech(), &g, &Default::default()).unwrap();
        for v in out {
            assert_relative_eq!(v, c / (1.0 + g.h_t), max_relative = 1e-13);
        }
    }

    #[test]
    fn step_rejects_nonfinite() {
        let g = GridSpec::reference();
        let mut prev = vec![1.0; g.n_x];
        prev[3] = f64::NAN;
        assert!(matches!(
            step(&prev, 0.0, &no_production(), &unit_tech(), &g, &Default::default()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn symmetric_data_gives_symmetric_step() {
        let g: GridSpec<f64> = GridSpec::reference();
        let prev: Vec<f64> = g.nodes().iter().map(|x| 5.0 + 4.0 * (x - 0.5).powi(2)).collect();
        let tech = TechnologyField::default_profile(&g);
        let out = step(&prev, 0.0, &ProductionParams::exact(), &tech, &g, &Default::default()).unwrap();
        let n = out.len();
        for i in 0..n {
            assert!((out[i] - out[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_neumann_flux_vanishes() {
        // Row 0 of the scheme: (k0' - k0)/h_t = d (2 k1' - 2 k0')/h² - k0' + γ q(k0).
        // With the mirrored ghost node the one-sided flux through the boundary
        // cell balances exactly.
        let g = GridSpec::reference();
        let q = ProductionParams::exact();
        let prev = sample_initial_condition(&g);
        let out = step(&prev, 0.0, &q, &unit_tech(), &g, &Default::default()).unwrap();
        let n = g.n_x;
        let gamma = 1.0 / g.delta;
        let lap0 = 2.0 * (out[1] - out[0]) / (g.h_x * g.h_x);
        let lapn = 2.0 * (out[n - 2] - out[n - 1]) / (g.h_x * g.h_x);
        let res0 = (out[0] - prev[0]) / g.h_t - g.d * lap0 + out[0] - gamma * q.q(prev[0]);
        let resn = (out[n - 1] - prev[n - 1]) / g.h_t - g.d * lapn + out[n - 1] - gamma * q.q(prev[n - 1]);
        assert!(res0.abs() < 1e-10, "{res0}");
        assert!(resn.abs() < 1e-10, "{resn}");
    }

    #[test]
    fn uniform_data_stays_uniform() {
        let g = GridSpec::reference();
        let field = solve_forward(&ProductionParams::exact(), &unit_tech(), &g, &vec![12.0; g.n_x], &Default::default()).unwrap();
        for n in 0..g.n_t {
            let lvl = field.level(n);
            let spread = lvl.iter().copied().fold(f64::MIN, f64::max) - lvl.iter().copied().fold(f64::MAX, f64::min);
            assert!(spread <= 1e-12 * lvl[0].abs().max(1.0), "level {n}: {spread}");
        }
    }

    #[test]
    fn first_column_is_initial_condition() {
        let g = GridSpec::reference();
        let k0 = sample_initial_condition(&g);
        let field = solve_forward(&ProductionParams::exact(), &unit_tech(), &g, &k0, &Default::default()).unwrap();
        assert_eq!(field.level(0), &k0[..]);
        assert_eq!((field.n_x(), field.n_t()), (26, 251));
    }

    #[test]
    fn blowup_is_reported() {
        let g = GridSpec::reference();
        let opts = SolverOptions { blowup_cap: 50.0, ..Default::default() };
        // saturation level 20 · α₁/α₂ = 2000 overshoots the cap
        let q = ProductionParams::new(0.1, 0.001, 2.0).unwrap();
        let err = solve_forward(&q, &unit_tech(), &g, &vec![10.0; g.n_x], &opts).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn rejects_bad_initial_data() {
        let g = GridSpec::reference();
        let solver = ForwardSolver::new(g, &unit_tech(), SolverOptions::default()).unwrap();
        assert!(solver.solve(&no_production(), &[1.0; 3]).is_err());
        assert!(solver.solve(&no_production(), &vec![-1.0; g.n_x]).is_err());
    }

    #[test]
    fn f32_tracks_f64() {
        let g64 = GridSpec::<f64>::reference();
        let g32 = GridSpec::<f32>::new(&PhysicalConfig::reference(), 26, 251).unwrap();
        let f64_field = solve_forward(
            &ProductionParams::exact(),
            &unit_tech(),
            &g64,
            &sample_initial_condition(&g64),
            &Default::default(),
        )
        .unwrap();
        let f32_field = solve_forward(
            &ProductionParams::<f32>::exact(),
            &TechnologyField::constant(1.0f32).unwrap(),
            &g32,
            &sample_initial_condition(&g32),
            &Default::default(),
        )
        .unwrap();
        let scale = f64_field.max();
        for (a, b) in f64_field.values().iter().zip(f32_field.values()) {
            assert!((a - f64::from(*b)).abs() < 1e-3 * scale);
        }
    }
}
