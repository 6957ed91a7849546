//! Front-tracking solver for the anisotropic curve-shortening flow
//! `∂ₜγ = a(θ) k N` and the diagnostics used to validate it.
//!
//! Markers move along the inward normal with speed `a^ω(θ) k`, where `a^ω`
//! is the mollified mobility (the exact profile is not differentiable at
//! multiples of π/4). A tangential velocity is added at every step so that
//! markers stay equally spaced in arc length; it moves each marker along its
//! own chord, which leaves the enclosed area unchanged to first order.

mod diagnostics;
mod heat;
mod output;
mod shape;
mod solver;

pub use diagnostics::{
    angle_span_nesting, gmax_bound_check, heat_chart_check, inflection_count, positive_arcs,
    ChartWindow, CurvatureArc, GmaxVerdict, HeatChartError, NestingViolation,
};
pub use output::{read_metadata, write_trajectory, TrajectoryMetadata};
pub use shape::{ShapeKind, ShapeSpec};
pub use solver::{
    run_to_shrink, snapshot_domain, stable_dt, step, FlowParams, FlowState, FlowStatus,
    MonitorRecord, Trajectory, DEFAULT_C_STAB,
};

use thiserror::Error;

use crate::anisotropy::AnisotropyError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Anisotropy(#[from] AnisotropyError),
    #[error("the flow has already shrunk to a point")]
    NotRunning,
    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    /// The last accepted state is kept so callers can dump it.
    #[error("solver failure at t = {t}: {reason}")]
    SolverFailure {
        t: f64,
        reason: String,
        last: Box<FlowState>,
    },
}
