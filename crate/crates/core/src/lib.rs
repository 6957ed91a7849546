//! Zero-temperature Ising droplets and the anisotropic curve-shortening flow
//! that describes them in the diffusive scaling limit.
//!
//! * [`anisotropy`]: the slope-dependent mobility `a(θ)` and its mollifications.
//! * [`geometry`]: marker curves, regions, dilation/erosion, Hausdorff distance.
//! * [`flow`]: front-tracking solver for `∂ₜγ = a(θ) k N` and its diagnostics.
//! * [`glauber`]: rejection-free zero-temperature heat-bath dynamics.
//! * [`harness`]: matched stochastic/deterministic experiments and reports.
//! * [`cli`]: configuration and the `droplet` command line.

pub mod anisotropy;
pub mod cli;
pub mod flow;
pub mod geometry;
pub mod glauber;
pub mod harness;
