//! Differential evolution, rand/1/bin, over box-bounded real vectors.
//!
//! Each generation draws, for every target `i` in order, three distinct
//! partners `r₁, r₂, r₃ ≠ i`, the forced crossover index `j_rand` and then
//! one uniform number per coordinate. All draws come from a single ChaCha8
//! stream and happen before the trial vectors are evaluated, so the result
//! depends only on the seed, never on how many threads evaluate the
//! objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What happens to a trial coordinate that left its box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundHandling {
    /// Move it onto the violated bound.
    #[default]
    Clip,
    /// Mirror it back into the box (clipping if it overshoots the far side).
    Reflect,
    /// Draw it afresh, uniformly in the box.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Some member fell below `eps_stop`.
    Threshold,
    /// `max_generations` reached.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DEConfig<T> {
    /// `Np`
    pub population_size: usize,
    /// Differential weight `F ∈ [0, 2]`.
    pub f: T,
    /// Crossover probability `Cr ∈ [0, 1]`.
    pub cr: T,
    /// `G_max`
    pub max_generations: usize,
    /// Stop as soon as some member has `J < eps_stop`.
    pub eps_stop: T,
    /// Inclusive `[low, high]` per dimension.
    pub bounds: Vec<[T; 2]>,
    pub seed: u64,
    pub bound_handling: BoundHandling,
    /// Record best/median/worst per generation.
    pub trace: bool,
}

impl<T: Scalar> DEConfig<T> {
    /// `Np = 100`, `F = 0.7`, `Cr = 0.9`, `G_max = 5000`, `ε_stop = 10⁻⁴`.
    pub fn reference(bounds: Vec<[T; 2]>) -> Self {
        Self {
            population_size: 100,
            f: T::lit(0.7),
            cr: T::lit(0.9),
            max_generations: 5000,
            eps_stop: T::lit(1e-4),
            bounds,
            seed: 0,
            bound_handling: BoundHandling::Clip,
            trace: false,
        }
    }

    /// Default search box for `(α₁, α₂, p)`: `[10⁻⁵, 10⁻²]² × [1.5, 8]`.
    pub fn production_bounds() -> Vec<[T; 2]> {
        vec![
            [T::lit(1e-5), T::lit(1e-2)],
            [T::lit(1e-5), T::lit(1e-2)],
            [T::lit(1.5), T::lit(8.0)],
        ]
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::config(format!(
                "population size must be >= 4, got {}",
                self.population_size
            )));
        }
        if !(self.f >= T::zero() && self.f <= T::lit(2.0)) {
            return Err(Error::config(format!("F must lie in [0, 2], got {}", self.f)));
        }
        if !(self.cr >= T::zero() && self.cr <= T::one()) {
            return Err(Error::config(format!("Cr must lie in [0, 1], got {}", self.cr)));
        }
        if !(self.eps_stop >= T::zero()) {
            return Err(Error::config(format!("eps_stop must be >= 0, got {}", self.eps_stop)));
        }
        if self.bounds.is_empty() {
            return Err(Error::config("search space needs at least one dimension"));
        }
        for (j, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::config(format!("bounds of dimension {j} are invalid: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    pub members: Vec<Vec<T>>,
    pub objective_values: Vec<T>,
    pub generation: usize,
}

impl<T: Scalar> Population<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the smallest objective value, first one on ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.objective_values.iter().enumerate() {
            if v < self.objective_values[best] {
                best = i;
            }
        }
        best
    }

    pub fn best_value(&self) -> T {
        self.objective_values[self.best_index()]
    }

    pub fn stats(&self) -> GenerationStats<T> {
        let mut sorted = self.objective_values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) * T::lit(0.5)
        };
        GenerationStats {
            generation: self.generation,
            best: sorted[0],
            median,
            worst: sorted[n - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GenerationStats<T> {
    pub generation: usize,
    pub best: T,
    pub median: T,
    pub worst: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DEResult<T> {
    pub best_vector: Vec<T>,
    pub best_value: T,
    pub generations_used: usize,
    pub stop_reason: StopReason,
    /// Objective evaluations, including the initial population.
    pub evaluations: usize,
    /// Per-generation statistics; empty unless tracing was requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<GenerationStats<T>>,
}

/// Failed evaluations rank worst.
#[inline]
fn sanitize<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

fn uniform_in<T: Scalar, R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [T; 2]) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

fn evaluate_all<T, F>(objective: &F, vectors: &[Vec<T>]) -> Vec<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    vectors.par_iter().map(|v| sanitize(objective(v))).collect()
}

/// Uniform initial population, evaluated.
pub fn init_population<T, F, R>(cfg: &DEConfig<T>, objective: &F, rng: &mut R) -> Population<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
    R: Rng + ?Sized,
{
    let members: Vec<Vec<T>> = (0..cfg.population_size)
        .map(|_| cfg.bounds.iter().map(|&b| uniform_in(rng, b)).collect())
        .collect();
    let objective_values = evaluate_all(objective, &members);
    Population {
        members,
        objective_values,
        generation: 0,
    }
}

/// Three indices, distinct from each other and from `target`, by rejection.
pub fn distinct_indices<R: Rng + ?Sized>(population_size: usize, target: usize, rng: &mut R) -> [usize; 3] {
    assert!(population_size >= 4, "mutation needs at least 4 members");
    let mut picked = [usize::MAX; 3];
    let mut count = 0;
    while count < 3 {
        let r = rng.random_range(0..population_size);
        if r != target && !picked[..count].contains(&r) {
            picked[count] = r;
            count += 1;
        }
    }
    picked
}

/// `v = q_{r₁} + F (q_{r₂} − q_{r₃})`.
pub fn donor<T: Scalar>(members: &[Vec<T>], [r1, r2, r3]: [usize; 3], f: T) -> Vec<T> {
    members[r1]
        .iter()
        .zip(&members[r2])
        .zip(&members[r3])
        .map(|((&a, &b), &c)| a + f * (b - c))
        .collect()
}

/// Donor vector for target `i` with randomly chosen partners.
pub fn mutate<T: Scalar, R: Rng + ?Sized>(pop: &Population<T>, i: usize, f: T, rng: &mut R) -> Vec<T> {
    let r = distinct_indices(pop.len(), i, rng);
    donor(&pop.members, r, f)
}

/// Binomial crossover: coordinate `j` comes from the donor iff
/// `rand_j ≤ Cr` or `j = j_rand`.
pub fn crossover<T: Scalar, R: Rng + ?Sized>(target: &[T], donor: &[T], cr: T, rng: &mut R) -> Vec<T> {
    assert_eq!(target.len(), donor.len(), "target/donor dimension mismatch");
    let j_rand = rng.random_range(0..target.len());
    let cr = cr.as_f64();
    target
        .iter()
        .zip(donor)
        .enumerate()
        .map(|(j, (&t, &d))| {
            let u: f64 = rng.random();
            if u <= cr || j == j_rand {
                d
            } else {
                t
            }
        })
        .collect()
}

/// Brings every coordinate of `trial` back into its box.
pub fn repair<T: Scalar, R: Rng + ?Sized>(trial: &mut [T], bounds: &[[T; 2]], handling: BoundHandling, rng: &mut R) {
    for (x, &[lo, hi]) in trial.iter_mut().zip(bounds) {
        if *x >= lo && *x <= hi {
            continue;
        }
        *x = match handling {
            BoundHandling::Clip => x.max(lo).min(hi),
            BoundHandling::Reflect => {
                let mirrored = if *x < lo { lo + (lo - *x) } else { hi - (*x - hi) };
                mirrored.max(lo).min(hi)
            }
            BoundHandling::Resample => uniform_in(rng, [lo, hi]),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Survivor {
    Target,
    Trial,
}

/// The trial replaces the target iff `J(trial) ≤ J(target)`. A failed
/// (infinite or NaN) trial loses unless the target failed too.
pub fn select<T: Scalar>(target_value: T, trial_value: T) -> Survivor {
    if sanitize(trial_value) <= sanitize(target_value) {
        Survivor::Trial
    } else {
        Survivor::Target
    }
}

/// Minimizes `objective` over the box in `cfg`.
pub fn minimize<T, F>(objective: F, cfg: &DEConfig<T>) -> Result<DEResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop = init_population(cfg, &objective, &mut rng);
    let mut evaluations = pop.len();
    let mut trace = Vec::new();
    if cfg.trace {
        trace.push(pop.stats());
    }

    let stop_reason = loop {
        if pop.objective_values.iter().any(|&v| v < cfg.eps_stop) {
            break StopReason::Threshold;
        }
        if pop.generation >= cfg.max_generations {
            break StopReason::Budget;
        }

        let trials: Vec<Vec<T>> = (0..pop.len())
            .map(|i| {
                let v = mutate(&pop, i, cfg.f, &mut rng);
                let mut u = crossover(&pop.members[i], &v, cfg.cr, &mut rng);
                repair(&mut u, &cfg.bounds, cfg.bound_handling, &mut rng);
                u
            })
            .collect();
        let trial_values = evaluate_all(&objective, &trials);
        evaluations += trials.len();

        for (i, (u, ju)) in trials.into_iter().zip(trial_values).enumerate() {
            if select(pop.objective_values[i], ju) == Survivor::Trial {
                pop.members[i] = u;
                pop.objective_values[i] = ju;
            }
        }
        pop.generation += 1;
        if cfg.trace {
            trace.push(pop.stats());
        }
    };

    let best = pop.best_index();
    Ok(DEResult {
        best_vector: pop.members[best].clone(),
        best_value: pop.objective_values[best],
        generations_used: pop.generation,
        stop_reason,
        evaluations,
        trace,
    })
}
