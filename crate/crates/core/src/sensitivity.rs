//! Parameter gradient of the reaction term
//! `g = γ α₁ kᵖ / (1 + α₂ kᵖ) − k`, `γ = A/δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eval_production, ProductionParams};
use crate::scalar::Scalar;

/// Capital levels of the three reference gradient fields.
pub const REFERENCE_K_LEVELS: [f64; 3] = [0.5, 1.3, 11.25];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GradientSample<T> {
    pub point: ProductionParams<T>,
    pub k: T,
    pub gamma: T,
    /// `(∂g/∂α₁, ∂g/∂α₂, ∂g/∂p)`
    pub grad: [T; 3],
}

/// `(γkᵖ/(1+α₂kᵖ), −γα₁k²ᵖ/(1+α₂kᵖ)², γα₁ ln(k) kᵖ/(1+α₂kᵖ)²)`.
///
/// `∂g/∂p` has the sign of `ln k`: raising `p` lowers production below
/// `k = 1` and raises it above.
pub fn gradient_of_g<T: Scalar>(params: &ProductionParams<T>, k: T, gamma: T) -> Result<[T; 3]> {
    if !(k > T::zero() && k.is_finite()) {
        return Err(Error::domain(format!("gradient needs k > 0, got {k}")));
    }
    params.validate()?;
    let kp = k.powf(params.p);
    let denom = T::one() + params.alpha2 * kp;
    Ok([
        gamma * kp / denom,
        -gamma * params.alpha1 * kp * kp / (denom * denom),
        gamma * params.alpha1 * k.ln() * kp / (denom * denom),
    ])
}

/// Axis-aligned box in `(α₁, α₂, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParamBox<T> {
    pub alpha1: [T; 2],
    pub alpha2: [T; 2],
    pub p: [T; 2],
}

impl<T: Scalar> ParamBox<T> {
    /// Same box as the default inversion search space.
    pub fn search_default() -> Self {
        Self {
            alpha1: [T::lit(1e-5), T::lit(1e-2)],
            alpha2: [T::lit(1e-5), T::lit(1e-2)],
            p: [T::lit(1.5), T::lit(8.0)],
        }
    }

    pub fn point(params: &ProductionParams<T>) -> Self {
        Self {
            alpha1: [params.alpha1; 2],
            alpha2: [params.alpha2; 2],
            p: [params.p; 2],
        }
    }
}

fn axis<T: Scalar>(name: &str, [lo, hi]: [T; 2], resolution: usize) -> Result<Vec<T>> {
    if !(lo <= hi) {
        return Err(Error::domain(format!("{name} range [{lo}, {hi}] is empty")));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    if resolution < 2 {
        return Err(Error::domain(format!("resolution must be >= 2, got {resolution}")));
    }
    let step = (hi - lo) / T::from_count(resolution - 1);
    Ok((0..resolution)
        .map(|i| if i + 1 == resolution { hi } else { lo + T::from_count(i) * step })
        .collect())
}

/// Gradient on a `resolution³` lattice (degenerate axes collapse to one
/// point), ordered with `p` varying fastest.
pub fn emit_gradient_field<T: Scalar>(
    bx: &ParamBox<T>,
    k: T,
    gamma: T,
    resolution: usize,
) -> Result<Vec<GradientSample<T>>> {
    let a1s = axis("alpha1", bx.alpha1, resolution)?;
    let a2s = axis("alpha2", bx.alpha2, resolution)?;
    let ps = axis("p", bx.p, resolution)?;
    let mut out = Vec::with_capacity(a1s.len() * a2s.len() * ps.len());
    for &alpha1 in &a1s {
        for &alpha2 in &a2s {
            for &p in &ps {
                let point = ProductionParams::new(alpha1, alpha2, p)?;
                out.push(GradientSample {
                    point,
                    k,
                    gamma,
                    grad: gradient_of_g(&point, k, gamma)?,
                });
            }
        }
    }
    Ok(out)
}

/// Fourth-order central differences of `γ q(k)` in each parameter, with
/// step `1e-2·|α|` for the coefficients and `1e-3` for `p`. The `−k` part of `g` does not depend on the parameters and is
/// left out, since near small `k` it would swamp the differences in
/// cancellation error. Used as an independent check of [`gradient_of_g`].
pub fn finite_difference_gradient(params: &ProductionParams<f64>, k: f64, gamma: f64) -> Result<[f64; 3]> {
    let g = |p: [f64; 3]| -> Result<f64> {
        let params = ProductionParams { alpha1: p[0], alpha2: p[1], p: p[2] };
        Ok(gamma * eval_production(&params, k)?)
    };
    let base = params.to_array();
    let mut grad = [0.0; 3];
    for (j, slot) in grad.iter_mut().enumerate() {
        let h = if j == 2 { 1e-3 } else { 1e-2 * base[j].abs().max(f64::MIN_POSITIVE) };
        let at = |s: f64| {
            let mut p = base;
            p[j] += s * h;
            g(p)
        };
        *slot = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h);
    }
    Ok(grad)
}

/// Largest componentwise relative difference between analytic and
/// finite-difference gradients over `samples`.
pub fn max_fd_relative_error(samples: &[GradientSample<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in samples {
        let fd = finite_difference_gradient(&s.point, s.k, s.gamma)?;
        for (a, n) in s.grad.iter().zip(fd) {
            let scale = a.abs().max(n.abs());
            if scale > 0.0 {
                worst = worst.max((a - n).abs() / scale);
            }
        }
    }
    Ok(worst)
}
