//! Spatial Solow growth model as a reaction-diffusion problem, with recovery
//! of the production function `q(k) = α₁kᵖ/(1+α₂kᵖ)` from sparse, noisy
//! capital measurements by multi-restart differential evolution.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The
//! `…64` / `…32` aliases below fix the scalar type; file I/O and the CLI
//! work in `f64`.

pub mod commands;
pub mod config;
pub mod data;
pub mod de;
pub mod error;
pub mod io;
pub mod model;
pub mod objective;
pub mod pipeline;
pub mod scalar;
pub mod sensitivity;
pub mod solver;
pub mod tridiag;
pub mod verify;

pub use data::{
    apply_noise, build_measurement_plan, build_measurement_plan_with, generate_synthetic_data, MeasurementPlan,
    MeasurementSet, SpacePlacement,
};
pub use de::{minimize, BoundHandling, DEConfig, DEResult, Population, StopReason};
pub use error::{Error, Result};
pub use model::{
    derive_scaled_coefficient, eval_production, eval_reaction, initial_condition, sample_initial_condition,
    CapitalField, GridSpec, PhysicalConfig, ProductionParams, TechnologyField,
};
pub use objective::{compute_recovery_metrics, evaluate_misfit, InverseProblem, MisfitValue, RecoveryMetrics};
pub use pipeline::{aggregate_restarts, run_inversion, Aggregation, InversionReport, InversionSpec};
pub use scalar::Scalar;
pub use sensitivity::{emit_gradient_field, gradient_of_g, GradientSample, ParamBox};
pub use solver::{solve_forward, step, ForwardSolver, SolverOptions};

pub type ProductionParams64 = ProductionParams<f64>;
pub type ProductionParams32 = ProductionParams<f32>;
pub type PhysicalConfig64 = PhysicalConfig<f64>;
pub type PhysicalConfig32 = PhysicalConfig<f32>;
pub type GridSpec64 = GridSpec<f64>;
pub type GridSpec32 = GridSpec<f32>;
pub type TechnologyField64 = TechnologyField<f64>;
pub type TechnologyField32 = TechnologyField<f32>;
pub type CapitalField64 = CapitalField<f64>;
pub type CapitalField32 = CapitalField<f32>;
pub type MeasurementSet64 = MeasurementSet<f64>;
pub type MeasurementSet32 = MeasurementSet<f32>;
pub type ForwardSolver64 = ForwardSolver<f64>;
pub type ForwardSolver32 = ForwardSolver<f32>;
pub type InverseProblem64 = InverseProblem<f64>;
pub type InverseProblem32 = InverseProblem<f32>;
pub type DEConfig64 = DEConfig<f64>;
pub type DEConfig32 = DEConfig<f32>;
pub type InversionReport64 = InversionReport<f64>;
pub type InversionReport32 = InversionReport<f32>;
