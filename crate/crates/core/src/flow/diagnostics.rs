use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use thiserror::Error;

use crate::anisotropy::ProfileKind;
use crate::geometry::{wrap_angle, MarkerCurve};

use super::heat::crank_nicolson;
use super::{FlowState, Trajectory};

/// Curvatures below this fraction of `max |k|` carry no sign.
const HYSTERESIS_BAND: f64 = 0.05;

/// Per-marker curvature sign with hysteresis: markers inside the band
/// inherit the sign of the previous marker outside it.
fn hysteresis_signs(curve: &MarkerCurve) -> Option<Vec<i8>> {
    let k = curve.curvature();
    let band = HYSTERESIS_BAND * curve.max_abs_curvature();
    let strong = |x: f64| -> i8 {
        if x > band {
            1
        } else if x < -band {
            -1
        } else {
            0
        }
    };
    let n = k.len();
    let start = (0..n).rev().find(|&i| strong(k[i]) != 0)?;
    let mut sign = strong(k[start]);
    let mut out = vec![0i8; n];
    for (i, s) in out.iter_mut().enumerate() {
        let raw = strong(k[i]);
        if raw != 0 {
            sign = raw;
        }
        *s = sign;
    }
    // markers before the first strong one inherit from the wrap-around
    let first_strong = (0..n).find(|&i| strong(k[i]) != 0).unwrap_or(0);
    let wrap = strong(k[start]);
    for s in out.iter_mut().take(first_strong) {
        *s = wrap;
    }
    Some(out)
}

/// Number of curvature sign changes around the curve, ignoring `|k|` below
/// 5% of the maximum.
pub fn inflection_count(curve: &MarkerCurve) -> usize {
    let Some(signs) = hysteresis_signs(curve) else {
        return 0;
    };
    let n = signs.len();
    (0..n).filter(|&i| signs[i] != signs[(i + 1) % n]).count()
}

/// A maximal arc of positive curvature between two inflections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureArc {
    /// First and last marker of the arc (cyclic; `end` may be below `start`).
    pub start: usize,
    pub end: usize,
    /// Tangent angles at the two bounding inflections.
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl CurvatureArc {
    fn contains_index(&self, i: usize, n: usize) -> bool {
        (i + n - self.start) % n <= (self.end + n - self.start) % n
    }

    fn len(&self, n: usize) -> usize {
        (self.end + n - self.start) % n + 1
    }
}

/// Positive-curvature arcs of a curve with at least one inflection.
///
/// The tangent angle is monotone on each arc, so its range runs between
/// the extreme values of `θ` reached at the neighbouring inflections.
pub fn positive_arcs(curve: &MarkerCurve) -> Vec<CurvatureArc> {
    let Some(signs) = hysteresis_signs(curve) else {
        return Vec::new();
    };
    let n = signs.len();
    let Some(origin) = (0..n).find(|&i| signs[i] != signs[(i + n - 1) % n]) else {
        return Vec::new();
    };
    let theta = curve.theta();
    let k = curve.curvature();
    let mut arcs = Vec::new();
    let mut i = 0;
    while i < n {
        let s = (origin + i) % n;
        let mut len = 1;
        while i + len < n && signs[(origin + i + len) % n] == signs[s] {
            len += 1;
        }
        if signs[s] > 0 {
            let e = (s + len - 1) % n;
            // walk out to the first non-positive marker on each side
            let mut b = (s + n - 1) % n;
            let mut guard = 0;
            while k[b] > 0.0 && guard < n {
                b = (b + n - 1) % n;
                guard += 1;
            }
            let mut f = (e + 1) % n;
            while k[f] > 0.0 && guard < 2 * n {
                f = (f + 1) % n;
                guard += 1;
            }
            let mut value = theta[b];
            let (mut lo, mut hi) = (value, value);
            let mut j = b;
            while j != f {
                let next = (j + 1) % n;
                value += wrap_angle(theta[next] - theta[j]);
                lo = lo.min(value);
                hi = hi.max(value);
                j = next;
            }
            arcs.push(CurvatureArc {
                start: s,
                end: e,
                theta_lo: lo,
                theta_hi: hi,
            });
        }
        i += len;
    }
    arcs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestingViolation {
    pub t_before: f64,
    pub t_after: f64,
    pub before: (f64, f64),
    pub after: (f64, f64),
}

/// Check that tangent-angle ranges of positive arcs shrink with time.
///
/// Only consecutive states with the same inflection count are compared;
/// arcs are matched by marker-index overlap.
pub fn angle_span_nesting(states: &[FlowState], tol: f64) -> Vec<NestingViolation> {
    let mut out = Vec::new();
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !(a.is_running() && b.is_running()) {
            continue;
        }
        let ia = inflection_count(a.curve());
        if ia == 0 || ia != inflection_count(b.curve()) {
            continue;
        }
        let n = a.curve().len();
        let arcs_a = positive_arcs(a.curve());
        let arcs_b = positive_arcs(b.curve());
        if arcs_a.len() != arcs_b.len() {
            continue;
        }
        for nb in &arcs_b {
            let mid = (nb.start + nb.len(n) / 2) % n;
            let Some(na) = arcs_a.iter().find(|x| x.contains_index(mid, n)) else {
                continue;
            };
            let shift = TAU * ((na.theta_lo - nb.theta_lo) / TAU).round();
            let (lo, hi) = (nb.theta_lo + shift, nb.theta_hi + shift);
            if lo < na.theta_lo - tol || hi > na.theta_hi + tol {
                out.push(NestingViolation {
                    t_before: a.t(),
                    t_after: b.t(),
                    before: (na.theta_lo, na.theta_hi),
                    after: (lo, hi),
                });
            }
        }
    }
    out
}

/// Result of [`gmax_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmaxVerdict {
    /// Number of records where the bound is finite and was compared.
    pub checked: usize,
    /// `(t, observed, bound)` of the first violation.
    pub first_violation: Option<(f64, f64, f64)>,
}

impl GmaxVerdict {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Compare `max |g|` with the blow-up bound
/// `(G₀⁻² − 2t / a_min)^{-1/2} (1 + slack)` wherever it is finite.
pub fn gmax_bound_check(trajectory: &Trajectory, slack: f64) -> GmaxVerdict {
    let a_min = trajectory.profile().bounds().0;
    let g0 = trajectory.monitors[0].max_abs_g;
    let mut verdict = GmaxVerdict {
        checked: 0,
        first_violation: None,
    };
    for m in &trajectory.monitors {
        let denom = g0.powi(-2) - 2.0 * m.t / a_min;
        if denom <= 0.0 {
            continue;
        }
        verdict.checked += 1;
        let bound = denom.powf(-0.5) * (1.0 + slack);
        if m.max_abs_g > bound && verdict.first_violation.is_none() {
            verdict.first_violation = Some((m.t, m.max_abs_g, bound));
        }
    }
    verdict
}

/// Window for [`heat_chart_check`], in the frame rotated by `theta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartWindow {
    /// Frame angle: an odd multiple of π/4.
    pub theta0: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// The graph branch is the one passing closest to `(x_mid, y_ref)`.
    pub y_ref: f64,
    /// Number of grid intervals on `[x_min, x_max]`.
    pub cells: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatChartError {
    #[error("heat charts need the exact or mollified profile")]
    UnsupportedProfile,
    #[error("frame angle {0} is not an odd multiple of pi/4")]
    InvalidFrame(f64),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("need at least two running states in increasing time order")]
    TooFewStates,
    #[error("at t = {t} the boundary is not a graph over the window")]
    NotAGraph { t: f64 },
    #[error("at t = {t} the graph slope reaches {slope} > 1")]
    NotLipschitz { t: f64, slope: f64 },
}

/// Solve `y_t = y_xx / 4` on the window with the solver's data at the first
/// state and at the window ends, and return the largest deviation from the
/// solver's graph at the last state over interior grid points.
pub fn heat_chart_check(states: &[FlowState], window: &ChartWindow) -> Result<f64, HeatChartError> {
    if states.len() < 2
        || states.iter().any(|s| !s.is_running())
        || states.windows(2).any(|w| w[1].t() <= w[0].t())
    {
        return Err(HeatChartError::TooFewStates);
    }
    if states
        .iter()
        .any(|s| matches!(s.profile().kind(), ProfileKind::Constant { .. }))
    {
        return Err(HeatChartError::UnsupportedProfile);
    }
    let q = (window.theta0 - FRAC_PI_4) / FRAC_PI_2;
    if !window.theta0.is_finite() || (q - q.round()).abs() > 1e-9 {
        return Err(HeatChartError::InvalidFrame(window.theta0));
    }
    if !(window.x_max > window.x_min) || window.cells < 2 || !window.y_ref.is_finite() {
        return Err(HeatChartError::InvalidWindow(format!("{window:?}")));
    }
    let m = window.cells;
    let dx = (window.x_max - window.x_min) / m as f64;
    let xs: Vec<f64> = (0..=m).map(|j| window.x_min + j as f64 * dx).collect();

    let graphs = states
        .iter()
        .map(|s| extract_graph(s.curve(), window, &xs).map_err(|e| e.at(s.t())))
        .collect::<Result<Vec<_>, _>>()?;
    let times: Vec<f64> = states.iter().map(FlowState::t).collect();

    let mut u = graphs[0].clone();
    for i in 0..graphs.len() - 1 {
        let span = times[i + 1] - times[i];
        // CN is unconditionally stable; keep the time step comparable to
        // the explicit limit so that the O(dt²) error stays negligible.
        let explicit = 2.0 * dx * dx;
        let sub = ((span / explicit).ceil() as usize).clamp(4, 100_000);
        let left = (graphs[i][0], graphs[i + 1][0]);
        let right = (graphs[i][m], graphs[i + 1][m]);
        crank_nicolson(&mut u, 0.25, dx, span, sub, left, right);
    }
    let last = graphs.last().expect("at least two graphs");
    Ok((1..m).map(|j| (u[j] - last[j]).abs()).fold(0.0, f64::max))
}

enum GraphIssue {
    NotAGraph,
    Slope(f64),
}

impl GraphIssue {
    fn at(self, t: f64) -> HeatChartError {
        match self {
            GraphIssue::NotAGraph => HeatChartError::NotAGraph { t },
            GraphIssue::Slope(slope) => HeatChartError::NotLipschitz { t, slope },
        }
    }
}

/// Heights of the boundary branch over the grid `xs`, in the rotated frame.
fn extract_graph(curve: &MarkerCurve, w: &ChartWindow, xs: &[f64]) -> Result<Vec<f64>, GraphIssue> {
    let (s, c) = w.theta0.sin_cos();
    let q: Vec<[f64; 2]> = curve
        .points()
        .iter()
        .map(|p| [c * p[0] + s * p[1], -s * p[0] + c * p[1]])
        .collect();
    let n = q.len();
    let xc = 0.5 * (w.x_min + w.x_max);
    let i0 = (0..n)
        .min_by(|&a, &b| {
            let da = (q[a][0] - xc).powi(2) + (q[a][1] - w.y_ref).powi(2);
            let db = (q[b][0] - xc).powi(2) + (q[b][1] - w.y_ref).powi(2);
            da.total_cmp(&db)
        })
        .ok_or(GraphIssue::NotAGraph)?;
    let dir = (q[(i0 + 1) % n][0] - q[i0][0]).signum();
    if dir == 0.0 {
        return Err(GraphIssue::NotAGraph);
    }
    let (fwd_end, back_end) = if dir > 0.0 {
        (w.x_max, w.x_min)
    } else {
        (w.x_min, w.x_max)
    };
    let beyond = |x: f64, end: f64, sgn: f64| (x - end) * sgn >= 0.0;

    let mut branch = vec![q[i0]];
    let mut j = i0;
    let mut steps = 0;
    while !beyond(q[j][0], fwd_end, dir) {
        let k = (j + 1) % n;
        if (q[k][0] - q[j][0]) * dir <= 0.0 || steps >= n {
            return Err(GraphIssue::NotAGraph);
        }
        branch.push(q[k]);
        j = k;
        steps += 1;
    }
    let mut j = i0;
    while !beyond(q[j][0], back_end, -dir) {
        let k = (j + n - 1) % n;
        if (q[j][0] - q[k][0]) * dir <= 0.0 || steps >= n {
            return Err(GraphIssue::NotAGraph);
        }
        branch.insert(0, q[k]);
        j = k;
        steps += 1;
    }
    if dir < 0.0 {
        branch.reverse();
    }

    let mut max_slope: f64 = 0.0;
    for p in branch.windows(2) {
        if p[1][0] > w.x_min && p[0][0] < w.x_max {
            max_slope = max_slope.max(((p[1][1] - p[0][1]) / (p[1][0] - p[0][0])).abs());
        }
    }
    if max_slope > 1.0 {
        return Err(GraphIssue::Slope(max_slope));
    }

    let mut out = Vec::with_capacity(xs.len());
    let mut seg = 0;
    for &x in xs {
        while seg + 2 < branch.len() && branch[seg + 1][0] < x {
            seg += 1;
        }
        let (a, b) = (branch[seg], branch[seg + 1]);
        let t = (x - a[0]) / (b[0] - a[0]);
        out.push(a[1] + t * (b[1] - a[1]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyProfile;
    use crate::geometry::construct;

    #[test]
    fn convex_curves_have_no_inflections() {
        let c = construct::ellipse([0.0, 0.0], 0.6, 0.3, 512).unwrap();
        assert_eq!(inflection_count(&c), 0);
        assert!(positive_arcs(&c).is_empty());
    }

    #[test]
    fn star_inflections() {
        let c = construct::star([0.0, 0.0], 0.5, 0.2, 6, 512).unwrap();
        assert_eq!(inflection_count(&c), 12);
        let arcs = positive_arcs(&c);
        assert_eq!(arcs.len(), 6);
        for a in &arcs {
            // each lobe turns by more than 2π/6
            assert!(a.theta_hi - a.theta_lo > TAU / 6.0);
        }
    }

    #[test]
    fn frame_and_profile_restrictions() {
        let c = construct::circle([0.0, 0.0], 0.4, 256).unwrap();
        let s = FlowState::new(c.clone(), &AnisotropyProfile::exact(), None).unwrap();
        let mut s2 = s.clone();
        s2 = super::super::step(&s2, 1e-6).unwrap();
        let w = ChartWindow {
            theta0: 0.3,
            x_min: -0.1,
            x_max: 0.1,
            y_ref: 0.4,
            cells: 16,
        };
        assert!(matches!(
            heat_chart_check(&[s.clone(), s2.clone()], &w),
            Err(HeatChartError::InvalidFrame(_))
        ));
        let iso = FlowState::new(c, &AnisotropyProfile::constant(1.0).unwrap(), None).unwrap();
        let iso2 = super::super::step(&iso, 1e-6).unwrap();
        let w = ChartWindow { theta0: FRAC_PI_4, ..w };
        assert_eq!(
            heat_chart_check(&[iso, iso2], &w),
            Err(HeatChartError::UnsupportedProfile)
        );
    }
}
