use std::f64::consts::TAU;

use super::{
    cross, dist, dot, norm, segment_segment_dist, segments_intersect, sub, wrap_angle,
    GeometryError, Point,
};

pub const MIN_MARKERS: usize = 16;

/// Turning angles this close to ±π mean the polyline folds back on itself.
const FOLD_TOL: f64 = 1e-9;

/// Simple closed counterclockwise polygon with cached differential data.
///
/// Edge `i` joins marker `i` to marker `i + 1`. At marker `i`:
///
/// * `theta[i]` is the direction of the chord `p[i+1] - p[i-1]`, unwrapped so
///   that it increases by exactly 2π over one loop;
/// * `curvature[i]` is the turning angle between edges `i - 1` and `i`
///   divided by the dual length `ds[i] = (|e[i-1]| + |e[i]|) / 2`.
///
/// With these definitions `Σ k ds` telescopes to the total turning, 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerCurve {
    points: Vec<Point>,
    edge_len: Vec<f64>,
    ds: Vec<f64>,
    theta: Vec<f64>,
    curvature: Vec<f64>,
}

impl MarkerCurve {
    /// Validate and build. Clockwise input is reversed.
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        let curve = Self::new_unchecked_simple(points)?;
        if let Some((i, j)) = curve.self_intersection() {
            return Err(GeometryError::SelfIntersecting(i, j));
        }
        Ok(curve)
    }

    /// Everything [`MarkerCurve::new`] checks except simplicity. The flow
    /// solver runs its own intersection sweep as part of step acceptance.
    pub(crate) fn new_unchecked_simple(mut points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() < MIN_MARKERS {
            return Err(GeometryError::TooFewMarkers {
                got: points.len(),
                min: MIN_MARKERS,
            });
        }
        if let Some(index) = points
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(GeometryError::NonFinite { index });
        }
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        let (theta, curvature) = curvature_and_angle(&points)?;
        let n = points.len();
        let edge_len: Vec<f64> = (0..n).map(|i| dist(points[i], points[(i + 1) % n])).collect();
        let ds = (0..n)
            .map(|i| 0.5 * (edge_len[(i + n - 1) % n] + edge_len[i]))
            .collect();
        Ok(Self {
            points,
            edge_len,
            ds,
            theta,
            curvature,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Dual arc-length element at each marker.
    pub fn ds(&self) -> &[f64] {
        &self.ds
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_len
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.points)
    }

    pub fn length(&self) -> f64 {
        self.edge_len.iter().sum()
    }

    /// `Σ k_i ds_i / 2π`; equal to one for a simple counterclockwise curve.
    pub fn turning_number(&self) -> f64 {
        self.curvature
            .iter()
            .zip(&self.ds)
            .map(|(k, s)| k * s)
            .sum::<f64>()
            / TAU
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    /// Inward unit normal at marker `i` (the tangent rotated by +π/2).
    pub fn normal(&self, i: usize) -> Point {
        let t = self.theta[i];
        [-t.sin(), t.cos()]
    }

    /// Area centroid of the enclosed polygon.
    pub fn centroid(&self) -> Point {
        let n = self.points.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.points[i];
            let q = self.points[(i + 1) % n];
            let c = cross(p, q);
            a2 += c;
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        if a2.abs() < f64::MIN_POSITIVE {
            let m = self.points.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
            return [m[0] / n as f64, m[1] / n as f64];
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }

    /// `[xmin, ymin, xmax, ymax]`.
    pub fn bbox(&self) -> [f64; 4] {
        bbox_of(&self.points)
    }

    /// Largest distance between two markers.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.max(dist(*p, *q));
            }
        }
        best
    }

    pub fn mean_spacing(&self) -> f64 {
        self.length() / self.points.len() as f64
    }

    pub fn max_spacing(&self) -> f64 {
        self.edge_len.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.edge_len.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.points.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.points[i], self.points[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// First pair of non-adjacent edges that touch, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        find_self_intersection(&self.points)
    }

    /// Parallel curve at signed distance `x` (positive moves inward).
    ///
    /// Each marker moves along the bisector of its two edge normals by the
    /// miter length `x / cos(Δφ/2)`, so every edge of the result is parallel
    /// to the matching input edge at distance exactly `x`. Curvatures then
    /// transform as `k / (1 - k x)` to second order in the marker spacing.
    pub fn offset(&self, x: f64) -> Result<Self, GeometryError> {
        if x == 0.0 {
            return Ok(self.clone());
        }
        let reach = self.reach();
        if x.abs() >= reach {
            return Err(GeometryError::OffsetBeyondReach { offset: x, reach });
        }
        let n = self.points.len();
        let normals: Vec<Point> = (0..n)
            .map(|i| {
                let e = sub(self.points[(i + 1) % n], self.points[i]);
                let l = norm(e);
                [-e[1] / l, e[0] / l]
            })
            .collect();
        let pts = (0..n)
            .map(|i| {
                let a = normals[(i + n - 1) % n];
                let b = normals[i];
                let c = 1.0 + dot(a, b);
                let m = [(a[0] + b[0]) / c, (a[1] + b[1]) / c];
                let p = self.points[i];
                [p[0] + x * m[0], p[1] + x * m[1]]
            })
            .collect();
        Self::new(pts)
    }

    /// Largest `|x|` for which the normal offset stays simple:
    /// `min(u / 2, r)` with `r` the smallest curvature radius and `u` the
    /// smallest locally minimal distance between non-neighbouring points.
    ///
    /// The marker version of `u` only sees pairs closer than `2r` that are
    /// discrete local minima of the pair distance, refined by the distance
    /// between their incident edges. It is exact on shapes whose necks are
    /// straight or circular and approximate otherwise.
    pub fn reach(&self) -> f64 {
        let kmax = self.max_abs_curvature();
        let r = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
        let u = self.neck_width(2.0 * r);
        (0.5 * u).min(r)
    }

    /// Smallest locally minimal non-neighbour distance below `limit`, or
    /// infinity.
    fn neck_width(&self, limit: f64) -> f64 {
        let n = self.points.len();
        if !limit.is_finite() {
            return f64::INFINITY;
        }
        let exclusion = 4.0 * self.max_spacing();
        // arc-length position of every marker
        let mut s = Vec::with_capacity(n);
        let mut acc = 0.0;
        for l in &self.edge_len {
            s.push(acc);
            acc += l;
        }
        let total = acc;
        let arc_gap = |i: usize, j: usize| {
            let d = (s[i] - s[j]).abs();
            d.min(total - d)
        };
        let pts = &self.points;
        let d = |i: usize, j: usize| dist(pts[i % n], pts[j % n]);

        let buckets = Buckets::new(pts, limit);
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in buckets.near(pts[i]) {
                if j <= i || arc_gap(i, j) <= exclusion {
                    continue;
                }
                let dij = d(i, j);
                if dij >= limit {
                    continue;
                }
                let local_min = dij <= d(i + 1, j)
                    && dij <= d(i + n - 1, j)
                    && dij <= d(i, j + 1)
                    && dij <= d(i, j + n - 1);
                if !local_min {
                    continue;
                }
                let mut refined = dij;
                for a in [(i + n - 1) % n, i] {
                    for b in [(j + n - 1) % n, j] {
                        refined = refined.min(segment_segment_dist(
                            pts[a],
                            pts[(a + 1) % n],
                            pts[b],
                            pts[(b + 1) % n],
                        ));
                    }
                }
                best = best.min(refined);
            }
        }
        best
    }
}

/// Shoelace signed area (positive for counterclockwise order).
pub(crate) fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut a2 = 0.0;
    for i in 0..n {
        a2 += cross(points[i], points[(i + 1) % n]);
    }
    0.5 * a2
}

pub(crate) fn bbox_of(points: &[Point]) -> [f64; 4] {
    points.iter().fold(
        [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
        |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
    )
}

/// Unwrapped chord tangent angles and turning-angle curvatures of a closed
/// counterclockwise polyline.
pub fn curvature_and_angle(points: &[Point]) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let n = points.len();
    if n < 3 {
        return Err(GeometryError::TooFewMarkers {
            got: n,
            min: MIN_MARKERS,
        });
    }
    let scale = {
        let b = bbox_of(points);
        (b[2] - b[0]).max(b[3] - b[1]).max(f64::MIN_POSITIVE)
    };
    let mut edge_angle = Vec::with_capacity(n);
    let mut edge_len = Vec::with_capacity(n);
    for i in 0..n {
        let e = sub(points[(i + 1) % n], points[i]);
        let l = norm(e);
        if l <= 1e-13 * scale {
            return Err(GeometryError::Degenerate {
                index: i,
                reason: "duplicate marker",
            });
        }
        edge_len.push(l);
        edge_angle.push(e[1].atan2(e[0]));
    }

    let mut curvature = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let turn = wrap_angle(edge_angle[i] - edge_angle[prev]);
        if std::f64::consts::PI - turn.abs() < FOLD_TOL {
            return Err(GeometryError::Degenerate {
                index: i,
                reason: "polyline folds back",
            });
        }
        curvature.push(turn / (0.5 * (edge_len[prev] + edge_len[i])));
    }

    let mut theta = Vec::with_capacity(n);
    let chord = |i: usize| {
        let c = sub(points[(i + 1) % n], points[(i + n - 1) % n]);
        c[1].atan2(c[0])
    };
    let mut prev = chord(0);
    theta.push(prev);
    for i in 1..n {
        let raw = chord(i);
        let next = prev + wrap_angle(raw - prev);
        theta.push(next);
        prev = next;
    }
    Ok((theta, curvature))
}

/// Uniform-grid spatial hash over points.
struct Buckets {
    cell: f64,
    keys: Vec<((i64, i64), usize)>,
}

impl Buckets {
    fn new(points: &[Point], cell: f64) -> Self {
        let mut keys: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (Self::key(*p, cell), i))
            .collect();
        keys.sort_unstable();
        Self { cell, keys }
    }

    fn key(p: Point, cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    fn near(&self, p: Point) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = Self::key(p, self.cell);
        (-1..=1).flat_map(move |dx| {
            let k = (cx + dx, cy - 1);
            let start = self.keys.partition_point(|e| e.0 < k);
            let end = self.keys.partition_point(|e| e.0 <= (cx + dx, cy + 1));
            self.keys[start..end].iter().map(|e| e.1)
        })
    }
}

/// Grid-bucketed sweep for touching non-adjacent edges.
pub(crate) fn find_self_intersection(points: &[Point]) -> Option<(usize, usize)> {
    let n = points.len();
    let total: f64 = (0..n).map(|i| dist(points[i], points[(i + 1) % n])).sum();
    let cell = 2.0 * total / n as f64;
    let mut entries: Vec<(i64, i64, u32)> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let x0 = (a[0].min(b[0]) / cell).floor() as i64;
        let x1 = (a[0].max(b[0]) / cell).floor() as i64;
        let y0 = (a[1].min(b[1]) / cell).floor() as i64;
        let y1 = (a[1].max(b[1]) / cell).floor() as i64;
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                entries.push((cx, cy, i as u32));
            }
        }
    }
    entries.sort_unstable();
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end].0 == entries[start].0 && entries[end].1 == entries[start].1 {
            end += 1;
        }
        let group = &entries[start..end];
        for (gi, ea) in group.iter().enumerate() {
            let i = ea.2 as usize;
            for eb in &group[gi + 1..] {
                let j = eb.2 as usize;
                let (lo, hi) = (i.min(j), i.max(j));
                if hi - lo <= 1 || (lo == 0 && hi == n - 1) {
                    continue;
                }
                if segments_intersect(points[lo], points[(lo + 1) % n], points[hi], points[(hi + 1) % n]) {
                    return Some((lo, hi));
                }
            }
        }
        start = end;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::construct;
    use std::f64::consts::PI;

    #[test]
    fn circle_curvature() {
        let c = construct::circle([0.0, 0.0], 0.5, 256).unwrap();
        for k in c.curvature() {
            assert!((k - 2.0).abs() < 1e-3);
        }
        assert!((c.turning_number() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_area_and_length() {
        let c = construct::circle([0.0, 0.0], 1.0, 4096).unwrap();
        assert!((c.area() - PI).abs() < 1e-5);
        assert!((c.length() - TAU).abs() < 1e-5);
    }

    #[test]
    fn unit_square() {
        // 16 markers on the boundary of [0,1]^2, edges subdivided
        let mut pts = Vec::new();
        for side in 0..4 {
            for k in 0..4 {
                let t = k as f64 / 4.0;
                pts.push(match side {
                    0 => [t, 0.0],
                    1 => [1.0, t],
                    2 => [1.0 - t, 1.0],
                    _ => [0.0, 1.0 - t],
                });
            }
        }
        let c = MarkerCurve::new(pts).unwrap();
        assert!((c.area() - 1.0).abs() < 1e-15);
        assert!((c.length() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let c = construct::circle([0.1, 0.2], 0.3, 64).unwrap();
        let mut pts = c.points().to_vec();
        pts.reverse();
        let r = MarkerCurve::new(pts).unwrap();
        assert!(r.area() > 0.0);
        assert!((r.area() - c.area()).abs() < 1e-15);
    }

    #[test]
    fn theta_unwraps_by_two_pi() {
        let c = construct::ellipse([0.0, 0.0], 0.6, 0.3, 128).unwrap();
        let th = c.theta();
        let n = th.len();
        // next value after the last marker is the first plus 2π
        let last_step = wrap_angle(th[0] + TAU - th[n - 1]);
        assert!((th[n - 1] + last_step - th[0] - TAU).abs() < 1e-12);
        assert!(th.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn degenerate_markers_rejected() {
        let c = construct::circle([0.0, 0.0], 0.5, 32).unwrap();
        let mut pts = c.points().to_vec();
        pts[5] = pts[4];
        assert!(matches!(
            MarkerCurve::new(pts),
            Err(GeometryError::Degenerate { .. })
        ));
        assert!(matches!(
            MarkerCurve::new(vec![[0.0, 0.0]; 4]),
            Err(GeometryError::TooFewMarkers { .. })
        ));
    }

    #[test]
    fn self_intersection_detected() {
        // figure-eight lemniscate
        let pts: Vec<Point> = (0..64)
            .map(|i| {
                let t = TAU * i as f64 / 64.0;
                [0.5 * t.sin(), 0.3 * (2.0 * t).sin()]
            })
            .collect();
        assert!(matches!(
            MarkerCurve::new(pts),
            Err(GeometryError::SelfIntersecting(..))
        ));
    }

    #[test]
    fn contains_points() {
        let c = construct::circle([0.0, 0.0], 0.5, 128).unwrap();
        assert!(c.contains([0.1, 0.1]));
        assert!(!c.contains([0.6, 0.0]));
        let cen = c.centroid();
        assert!(cen[0].abs() < 1e-14 && cen[1].abs() < 1e-14);
    }

    #[test]
    fn offset_zero_is_identity() {
        let c = construct::ellipse([0.0, 0.0], 0.6, 0.3, 256).unwrap();
        assert_eq!(c.offset(0.0).unwrap(), c);
    }

    #[test]
    fn offset_beyond_reach_rejected() {
        let c = construct::circle([0.0, 0.0], 0.5, 256).unwrap();
        assert!(matches!(
            c.offset(0.6),
            Err(GeometryError::OffsetBeyondReach { .. })
        ));
    }

    #[test]
    fn circle_reach() {
        let c = construct::circle([0.0, 0.0], 0.5, 512).unwrap();
        assert!((c.reach() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn ellipse_reach_is_min_curvature_radius() {
        let c = construct::ellipse([0.0, 0.0], 0.6, 0.3, 2048).unwrap();
        let want = 0.3 * 0.3 / 0.6;
        assert!((c.reach() - want).abs() / want < 1e-2, "{}", c.reach());
    }
}
