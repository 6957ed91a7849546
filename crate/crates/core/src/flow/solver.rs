use std::f64::consts::TAU;

use crate::anisotropy::AnisotropyProfile;
use crate::geometry::{MarkerCurve, Point, Region};

use super::diagnostics::inflection_count;
use super::{FlowError, ShapeSpec};

/// Default Courant factor in `dt = c_stab (min ds)² / a_max`.
pub const DEFAULT_C_STAB: f64 = 0.4;

const MAX_HALVINGS: u32 = 20;
const SHRINK_AREA_FRACTION: f64 = 1e-4;
const SHRINK_DIAMETER_SPACINGS: f64 = 4.0;
/// Fraction of the spacing defect removed per full-size step.
const SPACING_RELAXATION: f64 = 0.05;

/// Scalar monitors recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    pub area: f64,
    pub length: f64,
    pub max_abs_k: f64,
    /// `max |a(θ) k|` with the stepping profile.
    pub max_abs_g: f64,
    pub inflections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowStatus {
    Running,
    /// Stopped at `stop_time`; `time` is the extrapolated shrink time.
    Shrunk {
        center: Point,
        stop_time: f64,
        time: f64,
    },
}

/// One instant of the flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    curve: MarkerCurve,
    t: f64,
    profile: AnisotropyProfile,
    rate: f64,
    monitor: MonitorRecord,
    status: FlowStatus,
    area0: f64,
    spacing0: f64,
}

impl FlowState {
    /// Start the flow from `curve` at `t = 0`.
    ///
    /// The exact profile is replaced by its mollification at `omega`
    /// (default `4 · 2π / N`); other profiles are used unchanged.
    pub fn new(
        curve: MarkerCurve,
        profile: &AnisotropyProfile,
        omega: Option<f64>,
    ) -> Result<Self, FlowError> {
        let omega = omega.unwrap_or(4.0 * TAU / curve.len() as f64);
        let profile = profile.for_stepping(omega)?;
        let rate = profile.total_integral();
        let monitor = monitor_for(&curve, &profile, 0.0);
        Ok(Self {
            area0: monitor.area,
            spacing0: curve.mean_spacing(),
            curve,
            t: 0.0,
            profile,
            rate,
            monitor,
            status: FlowStatus::Running,
        })
    }

    pub fn curve(&self) -> &MarkerCurve {
        &self.curve
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// The profile actually used for stepping.
    pub fn profile(&self) -> &AnisotropyProfile {
        &self.profile
    }

    pub fn monitor(&self) -> &MonitorRecord {
        &self.monitor
    }

    pub fn status(&self) -> FlowStatus {
        self.status
    }

    pub fn is_running(&self) -> bool {
        self.status == FlowStatus::Running
    }

    pub fn initial_area(&self) -> f64 {
        self.area0
    }

    /// Area the exact law predicts at the current time.
    pub fn predicted_area(&self) -> f64 {
        self.area0 - self.rate * self.t
    }
}

fn monitor_for(curve: &MarkerCurve, profile: &AnisotropyProfile, t: f64) -> MonitorRecord {
    let max_abs_g = curve
        .theta()
        .iter()
        .zip(curve.curvature())
        .fold(0.0_f64, |m, (th, k)| m.max((profile.eval(*th) * k).abs()));
    MonitorRecord {
        t,
        area: curve.area(),
        length: curve.length(),
        max_abs_k: curve.max_abs_curvature(),
        max_abs_g,
        inflections: inflection_count(curve),
    }
}

/// Largest step allowed by `c_stab (min ds)² / a_max`.
pub fn stable_dt(state: &FlowState, c_stab: f64) -> f64 {
    let h = state.curve.min_spacing();
    c_stab * h * h / state.profile.bounds().1
}

/// Advance by `dt`, halving on rejection. A step is rejected when the new
/// curve is degenerate, self-intersects, or is not shorter than the old one.
///
/// The returned state may have advanced by less than `dt` if halvings
/// occurred; its `t()` is authoritative.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    step_with(state, dt, DEFAULT_C_STAB)
}

pub(crate) fn step_with(state: &FlowState, dt: f64, c_stab: f64) -> Result<FlowState, FlowError> {
    if !state.is_running() {
        return Err(FlowError::NotRunning);
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(FlowError::InvalidParams(format!("time step must be finite and >= 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let bound = stable_dt(state, c_stab);
    if dt > bound * (1.0 + 1e-9) {
        return Err(FlowError::StepTooLarge { dt, bound });
    }
    let old_len = state.monitor.length;
    let mut h = dt;
    let mut reason = String::new();
    for _ in 0..=MAX_HALVINGS {
        let relax = SPACING_RELAXATION * (h / bound).min(1.0);
        match advance_markers(&state.curve, &state.profile, h, relax) {
            Ok(curve) if curve.length() < old_len => {
                return Ok(accept(state, curve, state.t + h));
            }
            Ok(curve) => {
                reason = format!("length did not decrease ({} -> {})", old_len, curve.length());
            }
            Err(r) => reason = r,
        }
        h *= 0.5;
    }
    Err(FlowError::SolverFailure {
        t: state.t,
        reason: format!("step rejected after {MAX_HALVINGS} halvings: {reason}"),
        last: Box::new(state.clone()),
    })
}

fn accept(prev: &FlowState, curve: MarkerCurve, t: f64) -> FlowState {
    let monitor = monitor_for(&curve, &prev.profile, t);
    let mut status = FlowStatus::Running;
    if has_shrunk(&curve, monitor.area, prev.area0, prev.spacing0) {
        status = FlowStatus::Shrunk {
            center: curve.centroid(),
            stop_time: t,
            time: t + monitor.area / prev.rate,
        };
    }
    FlowState {
        curve,
        t,
        profile: prev.profile.clone(),
        rate: prev.rate,
        monitor,
        status,
        area0: prev.area0,
        spacing0: prev.spacing0,
    }
}

fn has_shrunk(curve: &MarkerCurve, area: f64, area0: f64, spacing0: f64) -> bool {
    if area < SHRINK_AREA_FRACTION * area0 {
        return true;
    }
    let limit = SHRINK_DIAMETER_SPACINGS * spacing0;
    let b = curve.bbox();
    let diag = (b[2] - b[0]).hypot(b[3] - b[1]);
    // diameter <= bbox diagonal <= sqrt(2) diameter
    if diag < limit {
        return true;
    }
    diag < std::f64::consts::SQRT_2 * limit && curve.diameter() < limit
}

/// Normal advection plus an arc-length-equalizing tangential motion.
///
/// Tangential displacements `δ_i` along the chord direction are chosen so
/// that every edge length changes at the mean rate, plus a relaxation of
/// `relax` times the current deviation from the mean spacing.
fn advance_markers(
    curve: &MarkerCurve,
    profile: &AnisotropyProfile,
    dt: f64,
    relax: f64,
) -> Result<MarkerCurve, String> {
    let n = curve.len();
    let pts = curve.points();
    let theta = curve.theta();
    let k = curve.curvature();
    let edges = curve.edge_lengths();

    let mut normal_step = Vec::with_capacity(n);
    for i in 0..n {
        let v = profile.eval(theta[i]) * k[i] * dt;
        let (s, c) = theta[i].sin_cos();
        normal_step.push([-s * v, c * v]);
    }

    let mean = curve.mean_spacing();
    let mut growth = Vec::with_capacity(n);
    for j in 0..n {
        let a = pts[j];
        let b = pts[(j + 1) % n];
        let e = [(b[0] - a[0]) / edges[j], (b[1] - a[1]) / edges[j]];
        let da = normal_step[j];
        let db = normal_step[(j + 1) % n];
        growth.push((db[0] - da[0]) * e[0] + (db[1] - da[1]) * e[1]);
    }
    let mean_growth = growth.iter().sum::<f64>() / n as f64;

    let mut delta = vec![0.0; n];
    for j in 0..n - 1 {
        let r = (mean_growth - growth[j]) + relax * (mean - edges[j]);
        delta[j + 1] = delta[j] + r;
    }
    let shift = delta.iter().sum::<f64>() / n as f64;

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let cap = 0.25 * edges[i].min(edges[(i + n - 1) % n]);
        let d = (delta[i] - shift).clamp(-cap, cap);
        let (s, c) = theta[i].sin_cos();
        let p = pts[i];
        out.push([
            p[0] + normal_step[i][0] + d * c,
            p[1] + normal_step[i][1] + d * s,
        ]);
    }
    let next = MarkerCurve::new_unchecked_simple(out).map_err(|e| e.to_string())?;
    if let Some((a, b)) = next.self_intersection() {
        return Err(format!("self-intersection between edges {a} and {b}"));
    }
    Ok(next)
}

/// Solver controls for [`run_to_shrink`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub c_stab: f64,
    /// Mollification width for the exact profile (default `4 · 2π / N`).
    pub omega: Option<f64>,
    /// Times at which a snapshot is stored exactly.
    pub snapshot_times: Vec<f64>,
    /// Also store a snapshot every `interval` time units.
    pub snapshot_interval: Option<f64>,
    pub max_steps: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            c_stab: DEFAULT_C_STAB,
            omega: None,
            snapshot_times: Vec::new(),
            snapshot_interval: None,
            max_steps: 50_000_000,
        }
    }
}

/// Output of [`run_to_shrink`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Initial state, requested snapshots in time order, and the final
    /// (shrunk) state.
    pub snapshots: Vec<FlowState>,
    /// One record per accepted step, starting with `t = 0`.
    pub monitors: Vec<MonitorRecord>,
    pub center: Point,
    pub t_stop: f64,
    pub t_observed: f64,
    pub steps: usize,
    pub omega: f64,
}

impl Trajectory {
    pub fn initial(&self) -> &FlowState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &FlowState {
        self.snapshots.last().expect("trajectory has snapshots")
    }

    /// Stepping profile of the run.
    pub fn profile(&self) -> &AnisotropyProfile {
        self.initial().profile()
    }

    /// Snapshot stored at exactly `t`, if any.
    pub fn snapshot_at(&self, t: f64) -> Option<&FlowState> {
        self.snapshots.iter().find(|s| s.t == t && s.is_running())
    }

    /// The flowed domain at time `t`.
    ///
    /// Stored times return the stored polygon. Between two stored snapshots
    /// marker positions are interpolated linearly (markers keep their index
    /// from step to step). From the stopping time on, the domain is the
    /// point `X`.
    pub fn domain_at(&self, t: f64) -> Region {
        if t >= self.t_stop {
            return Region::Point(self.center);
        }
        let t = t.max(0.0);
        let idx = self.snapshots.partition_point(|s| s.t <= t);
        let before = &self.snapshots[idx - 1];
        if before.t == t || idx == self.snapshots.len() {
            return snapshot_domain(before);
        }
        let after = &self.snapshots[idx];
        let w = (t - before.t) / (after.t - before.t);
        let pts: Vec<Point> = before
            .curve
            .points()
            .iter()
            .zip(after.curve.points())
            .map(|(a, b)| [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
            .collect();
        match MarkerCurve::new(pts) {
            Ok(c) => Region::Polygon(c),
            Err(_) => snapshot_domain(if w < 0.5 { before } else { after }),
        }
    }
}

/// Polygon of a running state; the point `X` once shrunk.
pub fn snapshot_domain(state: &FlowState) -> Region {
    match state.status {
        FlowStatus::Running => Region::Polygon(state.curve.clone()),
        FlowStatus::Shrunk { center, .. } => Region::Point(center),
    }
}

/// Integrate from `spec` until the curve shrinks to a point.
pub fn run_to_shrink(
    spec: &ShapeSpec,
    profile: &AnisotropyProfile,
    params: &FlowParams,
) -> Result<Trajectory, FlowError> {
    spec.validate()?;
    if !(params.c_stab > 0.0 && params.c_stab <= DEFAULT_C_STAB) {
        return Err(FlowError::InvalidParams(format!(
            "c_stab must lie in (0, {DEFAULT_C_STAB}], got {}",
            params.c_stab
        )));
    }
    let curve = spec.curve()?;
    let omega = params.omega.unwrap_or(4.0 * TAU / curve.len() as f64);
    let mut state = FlowState::new(curve, profile, Some(omega))?;

    let mut targets: Vec<f64> = params
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && t.is_finite())
        .collect();
    if let Some(dt) = params.snapshot_interval {
        if !(dt > 0.0) {
            return Err(FlowError::InvalidParams(format!(
                "snapshot interval must be positive, got {dt}"
            )));
        }
        // The shrink time is bounded by area / a_min.
        let horizon = state.area0 / (state.rate.min(TAU * state.profile.bounds().0));
        let count = (horizon / dt).ceil() as usize;
        targets.extend((1..=count).map(|i| i as f64 * dt));
    }
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let mut snapshots = vec![state.clone()];
    let mut monitors = vec![state.monitor];
    let mut next = 0;
    let mut steps = 0;
    while state.is_running() {
        while next < targets.len() && targets[next] <= state.t {
            next += 1;
        }
        if steps >= params.max_steps {
            return Err(FlowError::SolverFailure {
                t: state.t,
                reason: format!("step budget of {} exhausted", params.max_steps),
                last: Box::new(state),
            });
        }
        let mut dt = stable_dt(&state, params.c_stab);
        let target = targets.get(next).copied();
        if let Some(tt) = target {
            if tt - state.t <= dt {
                dt = tt - state.t;
            }
        }
        let mut new = if dt <= 1e-14 * state.t.max(1.0) {
            let mut s = state.clone();
            s.t += dt;
            s.monitor.t = s.t;
            s
        } else {
            step_with(&state, dt, params.c_stab)?
        };
        steps += 1;
        if let Some(tt) = target {
            if (new.t - tt).abs() <= 1e-12 * tt.max(1.0) {
                new.t = tt;
                new.monitor.t = tt;
                if new.is_running() {
                    snapshots.push(new.clone());
                }
            }
        }
        monitors.push(new.monitor);
        state = new;
    }
    let (center, t_stop, t_observed) = match state.status {
        FlowStatus::Shrunk {
            center,
            stop_time,
            time,
        } => (center, stop_time, time),
        FlowStatus::Running => unreachable!("loop exits only once shrunk"),
    };
    snapshots.push(state);
    Ok(Trajectory {
        snapshots,
        monitors,
        center,
        t_stop,
        t_observed,
        steps,
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::construct;

    fn running(curve: MarkerCurve, profile: AnisotropyProfile) -> FlowState {
        FlowState::new(curve, &profile, None).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let s = running(
            construct::star([0.0, 0.0], 0.5, 0.2, 6, 256).unwrap(),
            AnisotropyProfile::exact(),
        );
        let t = step(&s, 0.0).unwrap();
        assert_eq!(t.curve(), s.curve());
        assert_eq!(t.t(), s.t());
    }

    #[test]
    fn oversize_step_rejected() {
        let s = running(
            construct::circle([0.0, 0.0], 0.4, 128).unwrap(),
            AnisotropyProfile::exact(),
        );
        let bound = stable_dt(&s, DEFAULT_C_STAB);
        assert!(matches!(
            step(&s, 2.0 * bound),
            Err(FlowError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn isotropic_circle_radius() {
        let r0: f64 = 0.5;
        let c = 1.0;
        let mut s = running(
            construct::circle([0.0, 0.0], r0, 512).unwrap(),
            AnisotropyProfile::constant(c).unwrap(),
        );
        let t_end = 0.1;
        while s.t() < t_end {
            let dt = stable_dt(&s, DEFAULT_C_STAB).min(t_end - s.t());
            s = step(&s, dt).unwrap();
        }
        let want = (r0 * r0 - 2.0 * c * t_end).sqrt();
        let ctr = s.curve().centroid();
        let pts = s.curve().points();
        let mean_r = pts
            .iter()
            .map(|p| (p[0] - ctr[0]).hypot(p[1] - ctr[1]))
            .sum::<f64>()
            / pts.len() as f64;
        assert!((mean_r - want).abs() / want < 1e-3, "{mean_r} vs {want}");
    }

    #[test]
    fn spacing_stays_quasi_uniform() {
        let mut s = running(
            construct::ellipse([0.0, 0.0], 0.6, 0.3, 256).unwrap(),
            AnisotropyProfile::exact(),
        );
        for _ in 0..3000 {
            let dt = stable_dt(&s, DEFAULT_C_STAB);
            s = step(&s, dt).unwrap();
            let c = s.curve();
            assert!(c.max_spacing() / c.min_spacing() <= 2.0);
        }
    }

    #[test]
    fn shrunk_state_domain_is_point() {
        let tr = run_to_shrink(
            &ShapeSpec::disk(0.2, 64),
            &AnisotropyProfile::constant(1.0).unwrap(),
            &FlowParams::default(),
        )
        .unwrap();
        let last = tr.last();
        assert!(!last.is_running());
        assert!(matches!(snapshot_domain(last), Region::Point(_)));
        assert!(matches!(step(last, 0.0), Err(FlowError::NotRunning)));
        let want = std::f64::consts::PI * 0.04 / TAU;
        assert!((tr.t_observed - want).abs() < 1e-3);
    }
}
