//! Zero-temperature heat-bath (Glauber) dynamics for Ising droplets.
//!
//! Every site of `(ℤ/L)²` carries a rate-1 clock; at a ring the spin takes
//! the majority value of its four neighbours, or a fair coin on a tie. The
//! simulator is rejection-free: only sites whose resample can change the
//! spin are tracked, in two classes with rates 1 and ½, and the next event is
//! drawn directly from the total rate.
//!
//! Sites outside a finite window around the initial droplet are pinned to
//! `+1`. A `+` site with four `+` neighbours never flips, so a window that
//! contains the droplet's bounding rectangle does not change the law.

mod coupling;
mod lattice;
mod rng;

pub use coupling::{coupled_advance, is_ordered};
pub use lattice::{FlipEvent, SpinLattice, Window, DEFAULT_MARGIN, MIN_SCALE};
pub use rng::RngStream;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlauberError {
    #[error("lattice scale {0} is below the minimum {min}", min = MIN_SCALE)]
    ScaleTooSmall(u32),
    #[error("initial region leaves [-1, 1]^2")]
    OutsideUnitSquare,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("coupled systems must share scale, window and time")]
    CouplingMismatch,
    #[error("coupled systems are not ordered (lower droplet must lie inside upper droplet)")]
    NotOrdered,
    #[error("droplet still has {remaining} sites at the time cap {cap}")]
    Timeout { cap: f64, remaining: usize },
}
