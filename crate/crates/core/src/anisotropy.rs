//! Slope-dependent mobility of the zero-temperature Ising interface.
//!
//! The exact mobility is
//!
//! ```text
//! a(θ) = 1 / (2 (|cos θ| + |sin θ|)²) = 1 / (2 (1 + |sin 2θ|))
//! ```
//!
//! It is π/2-periodic, 1-Lipschitz, bounded in `[1/4, 1/2]` and has kinks at
//! multiples of π/2. The mollified family `a^ω` convolves `a` with a smooth
//! compactly supported bump of half-width `ω`; the result is tabulated on a
//! uniform grid of [`TABLE_SIZE`] points per period and evaluated by cubic
//! Hermite interpolation. Every admissible mollifier must keep the same
//! period, stay 1-Lipschitz and converge uniformly to `a`; this bump is one
//! such choice.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use thiserror::Error;

/// Grid points per π/2 period for the mollified table.
pub const TABLE_SIZE: usize = 4096;

/// Largest admissible mollification half-width.
pub const MAX_OMEGA: f64 = PI / 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnisotropyError {
    #[error("mollification width must lie in (0, pi/8], got {0}")]
    InvalidOmega(f64),
    #[error("constant mobility must be positive and finite, got {0}")]
    InvalidConstant(f64),
    #[error("exact mobility is not differentiable at theta = {0} (multiple of pi/2)")]
    NonDifferentiable(f64),
}

/// Which mobility is in use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Exact,
    Mollified { omega: f64 },
    Constant { c: f64 },
}

/// A mobility function `θ ↦ a(θ)`. Cheap to clone; immutable.
#[derive(Debug, Clone)]
pub struct AnisotropyProfile {
    kind: ProfileKind,
    table: Option<Arc<MollifierTable>>,
}

impl PartialEq for AnisotropyProfile {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl AnisotropyProfile {
    pub fn exact() -> Self {
        Self {
            kind: ProfileKind::Exact,
            table: None,
        }
    }

    pub fn mollified(omega: f64) -> Result<Self, AnisotropyError> {
        if !(omega > 0.0 && omega <= MAX_OMEGA) {
            return Err(AnisotropyError::InvalidOmega(omega));
        }
        Ok(Self {
            kind: ProfileKind::Mollified { omega },
            table: Some(Arc::new(MollifierTable::build(omega))),
        })
    }

    pub fn constant(c: f64) -> Result<Self, AnisotropyError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(AnisotropyError::InvalidConstant(c));
        }
        Ok(Self {
            kind: ProfileKind::Constant { c },
            table: None,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Short label used in metadata files, e.g. `mollified(0.05)`.
    pub fn label(&self) -> String {
        match self.kind {
            ProfileKind::Exact => "exact".to_string(),
            ProfileKind::Mollified { omega } => format!("mollified({omega})"),
            ProfileKind::Constant { c } => format!("constant({c})"),
        }
    }

    /// `a(θ)` for any finite `θ`.
    pub fn eval(&self, theta: f64) -> f64 {
        match self.kind {
            ProfileKind::Exact => exact_value(fold(theta)),
            ProfileKind::Mollified { .. } => self.table().value(fold(theta)),
            ProfileKind::Constant { c } => c,
        }
    }

    /// `da/dθ`. The exact profile is rejected at its kinks.
    pub fn eval_derivative(&self, theta: f64) -> Result<f64, AnisotropyError> {
        match self.kind {
            ProfileKind::Exact => {
                let phi = fold(theta);
                let tol = 4.0 * f64::EPSILON * theta.abs().max(1.0);
                if phi <= tol || FRAC_PI_2 - phi <= tol {
                    return Err(AnisotropyError::NonDifferentiable(theta));
                }
                Ok(exact_derivative(phi))
            }
            ProfileKind::Mollified { .. } => Ok(self.table().derivative(fold(theta))),
            ProfileKind::Constant { .. } => Ok(0.0),
        }
    }

    /// `∫₀^{2π} a(θ) dθ` by adaptive quadrature.
    pub fn total_integral(&self) -> f64 {
        match self.kind {
            ProfileKind::Constant { c } => TAU * c,
            _ => {
                // The kinks sit on the period boundaries, so each quarter is smooth.
                let quarter = adaptive_simpson(&|t| self.eval(t), 0.0, FRAC_PI_2, 1e-13, 48);
                4.0 * quarter
            }
        }
    }

    /// `(a_min, a_max)` over all angles.
    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            ProfileKind::Exact => (0.25, 0.5),
            ProfileKind::Mollified { .. } => {
                let t = self.table();
                let lo = t.values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = t.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            ProfileKind::Constant { c } => (c, c),
        }
    }

    /// The profile a marker solver should step with: the exact mobility is
    /// replaced by its mollification at `omega`.
    pub fn for_stepping(&self, omega: f64) -> Result<Self, AnisotropyError> {
        match self.kind {
            ProfileKind::Exact => Self::mollified(omega.min(MAX_OMEGA)),
            _ => Ok(self.clone()),
        }
    }

    fn table(&self) -> &MollifierTable {
        self.table
            .as_deref()
            .expect("mollified profile always carries its table")
    }
}

/// Reduce `θ` to `[0, π/2)`.
fn fold(theta: f64) -> f64 {
    let phi = theta.rem_euclid(FRAC_PI_2);
    if phi >= FRAC_PI_2 {
        0.0
    } else {
        phi
    }
}

fn exact_value(phi: f64) -> f64 {
    0.5 / (1.0 + (2.0 * phi).sin().abs())
}

/// Classical derivative of `a` on the open quarter `(0, π/2)`.
fn exact_derivative(phi: f64) -> f64 {
    let s = 1.0 + (2.0 * phi).sin();
    -(2.0 * phi).cos() / (s * s)
}

#[derive(Debug)]
struct MollifierTable {
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

// 8-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];
const PANELS: usize = 12;

impl MollifierTable {
    fn build(omega: f64) -> Self {
        let step = FRAC_PI_2 / TABLE_SIZE as f64;
        let mut values = Vec::with_capacity(TABLE_SIZE);
        let mut derivs = Vec::with_capacity(TABLE_SIZE);
        for j in 0..TABLE_SIZE {
            let theta = j as f64 * step;
            let (v, d) = convolve(theta, omega);
            values.push(v);
            derivs.push(d);
        }
        Self {
            step,
            values,
            derivs,
        }
    }

    fn locate(&self, phi: f64) -> (usize, usize, f64) {
        let x = phi / self.step;
        let j = (x.floor() as usize).min(TABLE_SIZE - 1);
        let u = x - j as f64;
        (j, (j + 1) % TABLE_SIZE, u)
    }

    fn value(&self, phi: f64) -> f64 {
        let (j0, j1, u) = self.locate(phi);
        let h = self.step;
        let (p0, p1) = (self.values[j0], self.values[j1]);
        let (m0, m1) = (self.derivs[j0] * h, self.derivs[j1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * p1
            + (u3 - u2) * m1
    }

    fn derivative(&self, phi: f64) -> f64 {
        let (j0, j1, u) = self.locate(phi);
        let h = self.step;
        let (p0, p1) = (self.values[j0], self.values[j1]);
        let (m0, m1) = (self.derivs[j0] * h, self.derivs[j1] * h);
        let u2 = u * u;
        ((6.0 * u2 - 6.0 * u) * p0
            + (3.0 * u2 - 4.0 * u + 1.0) * m0
            + (-6.0 * u2 + 6.0 * u) * p1
            + (3.0 * u2 - 2.0 * u) * m1)
            / h
    }
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// `(a * φ_ω)(θ)` and `(a' * φ_ω)(θ)`, normalised by the discrete bump mass
/// so the result is an exact weighted average of `a`.
fn convolve(theta: f64, omega: f64) -> (f64, f64) {
    // Split [-ω, ω] at the kinks of a(θ - u), i.e. where θ - u ≡ 0 mod π/2.
    let mut cuts = vec![-omega, omega];
    let k_lo = ((theta - omega) / FRAC_PI_2).ceil() as i64;
    let k_hi = ((theta + omega) / FRAC_PI_2).floor() as i64;
    for k in k_lo..=k_hi {
        let u = theta - k as f64 * FRAC_PI_2;
        if u > -omega && u < omega {
            cuts.push(u);
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));

    let (mut mass, mut val, mut der) = (0.0, 0.0, 0.0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let panel = (hi - lo) / PANELS as f64;
        for p in 0..PANELS {
            let a = lo + p as f64 * panel;
            let mid = a + 0.5 * panel;
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                let u = mid + 0.5 * panel * x;
                let weight = wt * 0.5 * panel * bump(u / omega);
                let phi = fold(theta - u);
                mass += weight;
                val += weight * exact_value(phi);
                // a' is bounded; on the measure-zero kink the choice is irrelevant.
                der += weight * exact_derivative(phi);
            }
        }
    }
    (val / mass, der / mass)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn exact_values() {
        let a = AnisotropyProfile::exact();
        assert!((a.eval(0.0) - 0.5).abs() < 1e-15);
        assert!((a.eval(FRAC_PI_4) - 0.25).abs() < 1e-15);
        // printed formula, evaluated directly
        for &t in &[0.3, 1.1, 2.5, -0.7, 5.9] {
            let c: f64 = t;
            let direct = 1.0 / (2.0 * (c.cos().abs() + c.sin().abs()).powi(2));
            assert!((a.eval(t) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_profile() {
        let a = AnisotropyProfile::constant(1.0).unwrap();
        assert_eq!(a.eval(0.37), 1.0);
        assert_eq!(a.eval_derivative(1.2).unwrap(), 0.0);
        assert!((a.total_integral() - TAU).abs() < 1e-15);
        assert!(AnisotropyProfile::constant(0.0).is_err());
        assert!(AnisotropyProfile::constant(f64::NAN).is_err());
    }

    #[test]
    fn omega_validation() {
        assert!(AnisotropyProfile::mollified(0.0).is_err());
        assert!(AnisotropyProfile::mollified(-0.1).is_err());
        assert!(AnisotropyProfile::mollified(0.5).is_err());
        assert!(AnisotropyProfile::mollified(MAX_OMEGA).is_ok());
    }

    #[test]
    fn exact_derivative_matches_finite_difference() {
        let a = AnisotropyProfile::exact();
        let h = 1e-6;
        let t = PI / 8.0;
        let fd = (a.eval(t + h) - a.eval(t - h)) / (2.0 * h);
        assert!((a.eval_derivative(t).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn exact_derivative_rejected_at_kinks() {
        let a = AnisotropyProfile::exact();
        for k in -3..4 {
            let t = k as f64 * FRAC_PI_2;
            assert!(matches!(
                a.eval_derivative(t),
                Err(AnisotropyError::NonDifferentiable(_))
            ));
        }
    }

    #[test]
    fn mollified_symmetry_point() {
        let a = AnisotropyProfile::mollified(0.05).unwrap();
        assert!(a.eval_derivative(FRAC_PI_4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn total_integrals() {
        assert!((AnisotropyProfile::exact().total_integral() - 2.0).abs() < 1e-9);
        let m = AnisotropyProfile::mollified(0.05).unwrap();
        assert!((m.total_integral() - 2.0).abs() < 0.05 * TAU);
        // convolution with a normalised kernel preserves the mean
        assert!((m.total_integral() - 2.0).abs() < 1e-7);
    }

    #[test]
    fn mollified_bounds() {
        for &w in &[0.01, 0.05, MAX_OMEGA] {
            let (lo, hi) = AnisotropyProfile::mollified(w).unwrap().bounds();
            assert!(lo >= 0.25 - w && hi <= 0.5 + w);
            assert!(lo >= 0.25 - 1e-12 && hi <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn mollified_derivative_matches_finite_difference_away_from_kinks() {
        use rand::{Rng, SeedableRng};
        let omega = 0.05;
        let a = AnisotropyProfile::mollified(omega).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let mut n = 0;
        while n < 1000 {
            let t: f64 = rng.gen_range(-TAU..TAU);
            let r = t.rem_euclid(FRAC_PI_2);
            if r < 2.0 * omega || FRAC_PI_2 - r < 2.0 * omega {
                continue;
            }
            let fd = (a.eval(t + h) - a.eval(t - h)) / (2.0 * h);
            let d = a.eval_derivative(t).unwrap();
            assert!((d - fd).abs() < 1e-6, "theta={t} d={d} fd={fd}");
            assert!(d.abs() <= 1.0);
            n += 1;
        }
    }

    proptest! {
        #[test]
        fn periodic(t in -20.0f64..20.0) {
            let e = AnisotropyProfile::exact();
            prop_assert!((e.eval(t + FRAC_PI_2) - e.eval(t)).abs() <= 8.0 * f64::EPSILON);
        }

        #[test]
        fn lipschitz(t1 in -7.0f64..7.0, t2 in -7.0f64..7.0) {
            let e = AnisotropyProfile::exact();
            prop_assert!((e.eval(t1) - e.eval(t2)).abs() <= (t1 - t2).abs() + 1e-15);
            let m = AnisotropyProfile::mollified(0.05).unwrap();
            prop_assert!((m.eval(t1) - m.eval(t2)).abs() <= (t1 - t2).abs() + 1e-15);
        }

        #[test]
        fn mollified_close_to_exact(t in -7.0f64..7.0, w in 0.005f64..0.39) {
            let e = AnisotropyProfile::exact();
            let m = AnisotropyProfile::mollified(w).unwrap();
            prop_assert!((m.eval(t) - e.eval(t)).abs() <= w);
        }

        #[test]
        fn mollified_derivative_bounded(t in -7.0f64..7.0) {
            let m = AnisotropyProfile::mollified(0.05).unwrap();
            prop_assert!(m.eval_derivative(t).unwrap().abs() <= 1.0);
        }
    }
}
