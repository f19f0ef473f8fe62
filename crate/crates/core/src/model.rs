//! Domain types of the spatial Solow model: the convex-concave production
//! family, the reaction term, nondimensional scaling and the initial capital
//! distribution.
//!
//! Space is scaled to `[0, 1]` and time to `[0, δT]`, so the diffusion
//! coefficient becomes `d = 1 / (δ L²)` and the reaction term reads
//! `g(k, x, t) = A(x, t) / δ · q(k) − k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of `q(k) = α₁ kᵖ / (1 + α₂ kᵖ)` with `α₁, α₂ ≥ 0`, `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ProductionParams<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub p: T,
}

impl<T: Scalar> ProductionParams<T> {
    pub fn new(alpha1: T, alpha2: T, p: T) -> Result<Self> {
        let params = Self { alpha1, alpha2, p };
        params.validate()?;
        Ok(params)
    }

    /// The data-generating production function `0.0005 k⁴ / (1 + 0.0005 k⁴)`.
    pub fn exact() -> Self {
        Self {
            alpha1: T::lit(0.0005),
            alpha2: T::lit(0.0005),
            p: T::lit(4.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha1.is_finite()
            && self.alpha2.is_finite()
            && self.p.is_finite()
            && self.alpha1 >= T::zero()
            && self.alpha2 >= T::zero()
            && self.p > T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "production parameters need alpha1 >= 0, alpha2 >= 0, p > 1 (got {}, {}, {})",
                self.alpha1, self.alpha2, self.p
            )))
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.validate().is_ok()
    }

    /// Parameter vector in optimizer order `(α₁, α₂, p)`.
    pub fn to_array(&self) -> [T; 3] {
        [self.alpha1, self.alpha2, self.p]
    }

    pub fn from_slice(v: &[T]) -> Result<Self> {
        match v {
            [a1, a2, p] => Self::new(*a1, *a2, *p),
            _ => Err(Error::domain(format!(
                "expected 3 production parameters, got {}",
                v.len()
            ))),
        }
    }

    /// Evaluates `q(k)`, failing on `k < 0`.
    pub fn eval(&self, k: T) -> Result<T> {
        if !(k >= T::zero()) {
            return Err(Error::domain(format!("capital must be >= 0, got {k}")));
        }
        Ok(self.q(k))
    }

    /// `q(k)` without argument checks; `k` must be nonnegative.
    #[inline]
    pub(crate) fn q(&self, k: T) -> T {
        if k <= T::zero() {
            return T::zero();
        }
        let kp = k.powf(self.p);
        if kp.is_infinite() {
            // α₁kᵖ/(1+α₂kᵖ) → α₁/α₂
            return if self.alpha2 > T::zero() {
                self.alpha1 / self.alpha2
            } else if self.alpha1 > T::zero() {
                T::infinity()
            } else {
                T::zero()
            };
        }
        self.alpha1 * kp / (T::one() + self.alpha2 * kp)
    }
}

/// Evaluates the production function `q(k)`.
pub fn eval_production<T: Scalar>(params: &ProductionParams<T>, k: T) -> Result<T> {
    params.validate()?;
    params.eval(k)
}

/// Evaluates `g = (A/δ) q(k) − k` at spatial node `x_index` and scaled time `t`.
pub fn eval_reaction<T: Scalar>(
    params: &ProductionParams<T>,
    tech: &TechnologyField<T>,
    delta: T,
    x_index: usize,
    t: T,
    k: T,
) -> Result<T> {
    let q = eval_production(params, k)?;
    let a = tech.value_at(x_index, t)?;
    Ok(a / delta * q - k)
}

/// Physical extent of the experiment before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PhysicalConfig<T> {
    /// Spatial extent `L` (number of regions).
    pub length: T,
    /// Time horizon `T` in years.
    pub horizon: T,
    /// Depreciation rate `δ` per year.
    pub delta: T,
}

impl<T: Scalar> PhysicalConfig<T> {
    /// `L = 50`, `T = 150` years, `δ = 0.05`.
    pub fn reference() -> Self {
        Self {
            length: T::lit(50.0),
            horizon: T::lit(150.0),
            delta: T::lit(0.05),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > T::zero() && self.length.is_finite()) {
            return Err(Error::config(format!("L must be > 0, got {}", self.length)));
        }
        if !(self.horizon > T::zero() && self.horizon.is_finite()) {
            return Err(Error::config(format!("T must be > 0, got {}", self.horizon)));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(Error::config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Scaled horizon `δT`.
    pub fn scaled_horizon(&self) -> T {
        self.delta * self.horizon
    }
}

/// Scaled diffusion coefficient `d = 1 / (δ L²)`.
pub fn derive_scaled_coefficient<T: Scalar>(cfg: &PhysicalConfig<T>) -> Result<T> {
    cfg.validate()?;
    Ok(T::one() / (cfg.delta * cfg.length * cfg.length))
}

/// Equidistant space-time grid on `[0, 1] × [0, t_end]`.
///
/// `n_x` nodes give `n_x − 1` intervals, so the 26/251-node grid has
/// `h_x = 0.04` and `h_t = 0.03`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridSpec<T> {
    pub n_x: usize,
    pub n_t: usize,
    pub h_x: T,
    pub h_t: T,
    /// Scaled diffusion coefficient.
    pub d: T,
    /// Scaled horizon `δT`.
    pub t_end: T,
    /// Depreciation rate, kept for converting scaled time back to years.
    pub delta: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(cfg: &PhysicalConfig<T>, n_x: usize, n_t: usize) -> Result<Self> {
        let d = derive_scaled_coefficient(cfg)?;
        Self::with_coefficient(d, cfg.scaled_horizon(), cfg.delta, n_x, n_t)
    }

    /// Grid with an explicit diffusion coefficient and horizon.
    pub fn with_coefficient(d: T, t_end: T, delta: T, n_x: usize, n_t: usize) -> Result<Self> {
        if n_x < 3 {
            return Err(Error::config(format!("Nx must be >= 3, got {n_x}")));
        }
        if n_t < 2 {
            return Err(Error::config(format!("Nt must be >= 2, got {n_t}")));
        }
        if !(d > T::zero() && d.is_finite()) {
            return Err(Error::config(format!("diffusion coefficient must be > 0, got {d}")));
        }
        if !(t_end > T::zero() && t_end.is_finite()) {
            return Err(Error::config(format!("horizon must be > 0, got {t_end}")));
        }
        if !(delta > T::zero()) {
            return Err(Error::config(format!("delta must be > 0, got {delta}")));
        }
        Ok(Self {
            n_x,
            n_t,
            h_x: T::one() / T::from_count(n_x - 1),
            h_t: t_end / T::from_count(n_t - 1),
            d,
            t_end,
            delta,
        })
    }

    /// The 26 × 251 grid on the `L = 50`, `T = 150`, `δ = 0.05` domain.
    pub fn reference() -> Self {
        Self::new(&PhysicalConfig::reference(), 26, 251).expect("reference grid is valid")
    }

    pub fn x(&self, i: usize) -> T {
        T::from_count(i) * self.h_x
    }

    pub fn t(&self, n: usize) -> T {
        T::from_count(n) * self.h_t
    }

    pub fn years(&self, n: usize) -> T {
        self.t(n) / self.delta
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    /// Time level closest to scaled time `t`.
    pub fn level_of(&self, t: T) -> usize {
        let n = (t / self.h_t).round().to_usize().unwrap_or(0);
        n.min(self.n_t - 1)
    }
}

/// Technological level `A(x)`, either constant or tabulated on the spatial
/// nodes. Time independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "snake_case", tag = "kind")]
pub enum TechnologyField<T> {
    Constant { value: T },
    Tabulated { profile: Vec<T> },
}

impl<T: Scalar> TechnologyField<T> {
    pub fn constant(value: T) -> Result<Self> {
        let field = Self::Constant { value };
        field.check_values()?;
        Ok(field)
    }

    pub fn tabulated(profile: Vec<T>) -> Result<Self> {
        let field = Self::Tabulated { profile };
        field.check_values()?;
        Ok(field)
    }

    /// Stand-in space-dependent profile `A(x) = 1 + ½ cos(2π(x − ½))`.
    ///
    /// A single positive bump centred on the domain, ranging over `[0.5, 1.5]`
    /// with unit mean. This is illustrative data, not a measured technology
    /// distribution.
    pub fn default_profile(grid: &GridSpec<T>) -> Self {
        let half = T::lit(0.5);
        let profile = grid
            .nodes()
            .into_iter()
            .map(|x| T::one() + half * (T::TAU() * (x - half)).cos())
            .collect();
        Self::Tabulated { profile }
    }

    fn check_values(&self) -> Result<()> {
        let bad = match self {
            Self::Constant { value } => !(*value > T::zero() && value.is_finite()),
            Self::Tabulated { profile } => {
                profile.is_empty() || profile.iter().any(|a| !(*a > T::zero() && a.is_finite()))
            }
        };
        if bad {
            Err(Error::config("technology level must be finite and strictly positive"))
        } else {
            Ok(())
        }
    }

    /// Checks positivity and, for tabulated profiles, alignment with the grid.
    pub fn validate(&self, grid: &GridSpec<T>) -> Result<()> {
        self.check_values()?;
        if let Self::Tabulated { profile } = self {
            if profile.len() != grid.n_x {
                return Err(Error::config(format!(
                    "technology profile has {} values but the grid has {} nodes",
                    profile.len(),
                    grid.n_x
                )));
            }
        }
        Ok(())
    }

    pub fn value_at(&self, x_index: usize, _t: T) -> Result<T> {
        match self {
            Self::Constant { value } => Ok(*value),
            Self::Tabulated { profile } => profile.get(x_index).copied().ok_or_else(|| {
                Error::domain(format!(
                    "node {x_index} outside technology profile of length {}",
                    profile.len()
                ))
            }),
        }
    }

    /// Node values of `A`, length `n_x`.
    pub fn node_values(&self, grid: &GridSpec<T>) -> Result<Vec<T>> {
        self.validate(grid)?;
        Ok(match self {
            Self::Constant { value } => vec![*value; grid.n_x],
            Self::Tabulated { profile } => profile.clone(),
        })
    }
}

/// Space-time capital field `k(x_i, t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapitalField<T> {
    n_x: usize,
    n_t: usize,
    // time-level major: values[n * n_x + i]
    values: Vec<T>,
}

impl<T: Scalar> CapitalField<T> {
    pub(crate) fn from_levels(n_x: usize, n_t: usize, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), n_x * n_t);
        Self { n_x, n_t, values }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn get(&self, i: usize, n: usize) -> T {
        self.values[n * self.n_x + i]
    }

    /// Node values at time level `n`.
    pub fn level(&self, n: usize) -> &[T] {
        &self.values[n * self.n_x..(n + 1) * self.n_x]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Piecewise initial capital: `0` on `[0, 0.3)`, `25(x − 0.3)` on
/// `[0.3, 0.7]`, `10` on `(0.7, 1]`.
pub fn initial_condition<T: Scalar>(x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::domain(format!("initial condition defined on [0, 1], got {x}")));
    }
    let lo = T::lit(0.3);
    let hi = T::lit(0.7);
    Ok(if x < lo {
        T::zero()
    } else if x <= hi {
        T::lit(25.0) * (x - lo)
    } else {
        T::lit(10.0)
    })
}

/// Samples [`initial_condition`] on the grid nodes.
pub fn sample_initial_condition<T: Scalar>(grid: &GridSpec<T>) -> Vec<T> {
    grid.nodes()
        .into_iter()
        .map(|x| initial_condition(x.min(T::one())).expect("grid nodes lie in [0, 1]"))
        .collect()
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn production_examples() {
        let q = ProductionParams::<f64>::exact();
        assert_eq!(eval_production(&q, 0.0).unwrap(), 0.0);
        assert_relative_eq!(eval_production(&q, 10.0).unwrap(), 5.0 / 6.0, max_relative = 1e-14);
        assert!(eval_production(&q, -1.0).is_err());
        let bad = ProductionParams { alpha1: 1.0, alpha2: 1.0, p: 1.0 };
        assert!(eval_production(&bad, 1.0).is_err());
        assert!(ProductionParams::new(-1e-3, 0.0, 2.0).is_err());
    }

    #[test]
    fn production_saturates_without_nan() {
        let q = ProductionParams::new(2.0, 0.5, 8.0).unwrap();
        assert_eq!(q.eval(1e300).unwrap(), 4.0);
        assert!(q.eval(1e6).unwrap() < 4.0 + 1e-12);
    }

    #[test]
    fn reaction_examples() {
        let q = ProductionParams::<f64>::exact();
        let a = TechnologyField::constant(1.0).unwrap();
        assert_eq!(eval_reaction(&q, &a, 0.05, 0, 0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            eval_reaction(&q, &a, 0.05, 3, 1.0, 10.0).unwrap(),
            20.0 / 3.0,
            max_relative = 1e-12
        );
        let off = ProductionParams::new(0.0, 0.3, 2.5).unwrap();
        assert_eq!(eval_reaction(&off, &a, 0.05, 0, 0.0, 7.5).unwrap(), -7.5);
    }

    #[test]
    fn scaling_examples() {
        let reference = PhysicalConfig::<f64>::reference();
        assert_relative_eq!(derive_scaled_coefficient(&reference).unwrap(), 0.008, max_relative = 1e-12);
        assert_relative_eq!(reference.scaled_horizon(), 7.5, max_relative = 1e-12);
        let unit = PhysicalConfig { length: 1.0, horizon: 1.0, delta: 0.999_999 };
        assert_relative_eq!(derive_scaled_coefficient(&unit).unwrap(), 1.0, max_relative = 1e-5);
        let bad = PhysicalConfig { length: 1.0, horizon: 1.0, delta: 1.0 };
        assert!(derive_scaled_coefficient(&bad).is_err());
    }

    #[test]
    fn reference_grid_steps() {
        let g = GridSpec::<f64>::reference();
        assert_eq!((g.n_x, g.n_t), (26, 251));
        assert_relative_eq!(g.h_x, 0.04, max_relative = 1e-12);
        assert_relative_eq!(g.h_t, 0.03, max_relative = 1e-12);
        assert_relative_eq!(g.h_x * 25.0, 1.0, max_relative = 1e-12);
        assert_relative_eq!(g.h_t * 250.0, g.t_end, max_relative = 1e-12);
        assert_relative_eq!(g.years(125), 75.0, max_relative = 1e-12);
        assert_eq!(g.level_of(1.0), 33);
    }

    #[test]
    fn initial_condition_pieces() {
        assert_eq!(initial_condition(0.2).unwrap(), 0.0);
        assert_relative_eq!(initial_condition(0.5).unwrap(), 5.0, max_relative = 1e-12);
        assert_eq!(initial_condition(0.9).unwrap(), 10.0);
        assert_eq!(initial_condition(0.3).unwrap(), 0.0);
        assert_relative_eq!(initial_condition(0.7).unwrap(), 10.0, max_relative = 1e-12);
        assert!(initial_condition(1.01).is_err());
        assert!(initial_condition(-0.01).is_err());
        // left limits at the breakpoints agree with the values
        assert!(initial_condition(0.3f64 - 1e-12).unwrap().abs() < 1e-9);
        assert!((initial_condition(0.7f64 + 1e-12).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn technology_profiles() {
        let g = GridSpec::<f64>::reference();
        let a = TechnologyField::default_profile(&g);
        a.validate(&g).unwrap();
        let vals = a.node_values(&g).unwrap();
        // trapezoidal mean over [0, 1]
        let mean = g.h_x
            * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]));
        assert_relative_eq!(mean, 1.0, max_relative = 1e-12);
        assert!(TechnologyField::tabulated(vec![1.0, 0.0]).is_err());
        assert!(TechnologyField::constant(-1.0).is_err());
        let short = TechnologyField::tabulated(vec![1.0; 5]).unwrap();
        assert!(short.validate(&g).is_err());
    }

    proptest! {
        #[test]
        fn production_monotone_and_saturating(
            a1 in 0.0f64..1e-2, a2 in 1e-6f64..1e-2, p in 1.0001f64..8.0,
            k1 in 0.0f64..50.0, dk in 0.0f64..50.0,
        ) {
            let q = ProductionParams::new(a1, a2, p).unwrap();
            let lo = q.eval(k1).unwrap();
            let hi = q.eval(k1 + dk).unwrap();
            prop_assert!(lo <= hi);
            prop_assert!(hi <= a1 / a2);
            prop_assert!(lo >= 0.0);
        }

        #[test]
        fn reaction_vanishes_at_zero_capital(
            a1 in 0.0f64..1.0, a2 in 0.0f64..1.0, p in 1.0001f64..10.0, a in 0.01f64..5.0,
        ) {
            let q = ProductionParams::new(a1, a2, p).unwrap();
            let tech = TechnologyField::constant(a).unwrap();
            prop_assert_eq!(eval_reaction(&q, &tech, 0.05, 0, 0.0, 0.0).unwrap(), 0.0);
        }
    }
}
