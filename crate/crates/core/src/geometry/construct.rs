//! Builders for closed test curves sampled uniformly in arc length.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{dist, GeometryError, MarkerCurve, Point};

/// Regular `n`-gon inscribed in the circle of radius `r`.
pub fn circle(center: Point, r: f64, n: usize) -> Result<MarkerCurve, GeometryError> {
    let pts = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect();
    MarkerCurve::new(pts)
}

pub fn ellipse(center: Point, a: f64, b: f64, n: usize) -> Result<MarkerCurve, GeometryError> {
    let pts = parametric_uniform(
        |t| {
            let phi = TAU * t;
            [center[0] + a * phi.cos(), center[1] + b * phi.sin()]
        },
        n,
    );
    MarkerCurve::new(pts)
}

/// Polar curve `r(φ) = R (1 + ε cos(m φ))`.
pub fn star(
    center: Point,
    radius: f64,
    eps: f64,
    lobes: u32,
    n: usize,
) -> Result<MarkerCurve, GeometryError> {
    polar(center, |phi| radius * (1.0 + eps * (lobes as f64 * phi).cos()), n)
}

pub fn polar(
    center: Point,
    r: impl Fn(f64) -> f64,
    n: usize,
) -> Result<MarkerCurve, GeometryError> {
    let pts = parametric_uniform(
        |t| {
            let phi = TAU * t;
            let rho = r(phi);
            [center[0] + rho * phi.cos(), center[1] + rho * phi.sin()]
        },
        n,
    );
    MarkerCurve::new(pts)
}

/// Sample a closed parametric curve `f: [0, 1) → ℝ²` at `n` points equally
/// spaced in arc length.
pub fn parametric_uniform(f: impl Fn(f64) -> Point, n: usize) -> Vec<Point> {
    let m = (64 * n).max(4096);
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    let mut prev = f(0.0);
    for i in 1..=m {
        let p = f(i as f64 / m as f64);
        let last = *cum.last().unwrap();
        cum.push(last + dist(prev, p));
        prev = p;
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while seg + 1 < m && cum[seg + 1] < s {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let frac = if span > 0.0 { (s - cum[seg]) / span } else { 0.0 };
        out.push(f((seg as f64 + frac) / m as f64));
    }
    out
}

/// One piece of a piecewise line/arc path.
#[derive(Debug, Clone, Copy)]
pub enum Piece {
    Line { from: Point, to: Point },
    /// Arc of the circle `(center, radius)` from angle `start`, sweeping by
    /// `sweep` radians (positive = counterclockwise).
    Arc {
        center: Point,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Line { from, to } => dist(from, to),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn at(&self, s: f64) -> Point {
        match *self {
            Piece::Line { from, to } => {
                let t = s / dist(from, to);
                [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
            }
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let a = start + sweep.signum() * s / radius;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }
}

/// Closed path made of consecutive pieces; sampled uniformly in arc length.
#[derive(Debug, Clone, Default)]
pub struct Path {
    pieces: Vec<Piece>,
}

impl Path {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn line(mut self, from: Point, to: Point) -> Self {
        self.pieces.push(Piece::Line { from, to });
        self
    }

    pub fn arc(mut self, center: Point, radius: f64, start: f64, sweep: f64) -> Self {
        self.pieces.push(Piece::Arc {
            center,
            radius,
            start,
            sweep,
        });
        self
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    pub fn sample(&self, n: usize) -> Vec<Point> {
        let total = self.length();
        let mut out = Vec::with_capacity(n);
        let mut idx = 0;
        let mut base = 0.0;
        for k in 0..n {
            let s = total * k as f64 / n as f64;
            while idx + 1 < self.pieces.len() && s >= base + self.pieces[idx].length() {
                base += self.pieces[idx].length();
                idx += 1;
            }
            out.push(self.pieces[idx].at(s - base));
        }
        out
    }

    pub fn build(&self, n: usize) -> Result<MarkerCurve, GeometryError> {
        MarkerCurve::new(self.sample(n))
    }
}

/// Axis-aligned square of the given side with corners rounded to `radius`.
pub fn rounded_square(center: Point, side: f64, radius: f64) -> Path {
    let h = 0.5 * side;
    let f = h - radius;
    let [cx, cy] = center;
    Path::new()
        .line([cx - f, cy - h], [cx + f, cy - h])
        .arc([cx + f, cy - f], radius, -FRAC_PI_2, FRAC_PI_2)
        .line([cx + h, cy - f], [cx + h, cy + f])
        .arc([cx + f, cy + f], radius, 0.0, FRAC_PI_2)
        .line([cx + f, cy + h], [cx - f, cy + h])
        .arc([cx - f, cy + f], radius, FRAC_PI_2, FRAC_PI_2)
        .line([cx - h, cy + f], [cx - h, cy - f])
        .arc([cx - f, cy - f], radius, PI, FRAC_PI_2)
}

/// Two circular lobes joined by a straight neck of width `2 half_width`,
/// with concave fillets of radius `fillet` where the neck meets the lobes.
/// The neck runs over `|x| ≤ neck_end`.
pub fn dumbbell(half_width: f64, fillet: f64, lobe: f64, neck_end: f64) -> Path {
    let fy = half_width + fillet;
    let c = neck_end + ((lobe + fillet).powi(2) - fy * fy).sqrt();
    let beta = fy.atan2(c - neck_end);
    let xf = neck_end;
    Path::new()
        .line([-xf, -half_width], [xf, -half_width])
        .arc([xf, -fy], fillet, FRAC_PI_2, beta - FRAC_PI_2)
        .arc([c, 0.0], lobe, beta - PI, 2.0 * (PI - beta))
        .arc([xf, fy], fillet, -beta, beta - FRAC_PI_2)
        .line([xf, half_width], [-xf, half_width])
        .arc([-xf, fy], fillet, -FRAC_PI_2, beta - FRAC_PI_2)
        .arc([-c, 0.0], lobe, beta, 2.0 * (PI - beta))
        .arc([-xf, -fy], fillet, PI - beta, beta - FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_area_matches_polar_integral() {
        // ½∫ r² dφ = π R² (1 + ε²/2)
        let c = star([0.0, 0.0], 0.5, 0.2, 6, 2048).unwrap();
        let want = PI * 0.25 * 1.02;
        assert!((want - 0.801_106).abs() < 1e-6);
        assert!((c.area() - want).abs() < 1e-4);
    }

    #[test]
    fn paths_close_up() {
        for path in [
            rounded_square([0.0, 0.0], 1.0, 0.1),
            dumbbell(0.05, 0.05, 0.3, 0.15),
        ] {
            let pts = path.sample(4000);
            let spacing = path.length() / 4000.0;
            assert!(dist(pts[0], pts[3999]) < 1.01 * spacing);
            for w in pts.windows(2) {
                let d = dist(w[0], w[1]);
                assert!(d <= spacing * (1.0 + 1e-9) && d >= 0.99 * spacing);
            }
        }
    }

    #[test]
    fn rounded_square_curvature() {
        let rho = 0.1;
        let path = rounded_square([0.0, 0.0], 1.0, rho);
        let c = path.build(2000).unwrap();
        let f = 0.5 - rho;
        let mut seen_flat = 0;
        let mut seen_arc = 0;
        let pts = c.points();
        let spacing = c.mean_spacing();
        for (i, k) in c.curvature().iter().enumerate() {
            let p = pts[i];
            let on_flat = (p[0].abs() < f - 2.0 * spacing) || (p[1].abs() < f - 2.0 * spacing);
            let on_arc = p[0].abs() > f + 2.0 * spacing && p[1].abs() > f + 2.0 * spacing;
            if on_flat {
                assert!(k.abs() < 1e-2, "flat marker {i}: {k}");
                seen_flat += 1;
            } else if on_arc {
                assert!((k - 1.0 / rho).abs() < 1e-2, "arc marker {i}: {k}");
                seen_arc += 1;
            }
        }
        assert!(seen_flat > 100 && seen_arc > 100);
    }

    #[test]
    fn ellipse_max_curvature() {
        let c = ellipse([0.0, 0.0], 0.6, 0.3, 512).unwrap();
        let want = 0.6 / (0.3 * 0.3);
        let got = c.max_abs_curvature();
        assert!((got - want).abs() / want < 0.01, "{got}");
    }

    #[test]
    fn dumbbell_reach() {
        let c = dumbbell(0.05, 0.05, 0.3, 0.15).build(4096).unwrap();
        let kmax = c.max_abs_curvature();
        assert!((kmax - 20.0).abs() < 0.2, "{kmax}");
        assert!((c.reach() - 0.05).abs() < 1e-3, "{}", c.reach());
    }
}
