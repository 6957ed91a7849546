use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::geometry::{construct, io, MarkerCurve, Point, Region};

use super::FlowError;

/// Initial droplet shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    Disk { r: f64 },
    Ellipse { a: f64, b: f64 },
    /// Polar curve `r(φ) = R (1 + ε cos(m φ))`.
    Star { radius: f64, eps: f64, lobes: u32 },
    PolygonFile(PathBuf),
}

/// A shape, where it sits, and how many markers represent it.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub center: Point,
    pub samples: usize,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, samples: usize) -> Self {
        Self {
            kind,
            center: [0.0, 0.0],
            samples,
        }
    }

    pub fn disk(r: f64, samples: usize) -> Self {
        Self::new(ShapeKind::Disk { r }, samples)
    }

    pub fn ellipse(a: f64, b: f64, samples: usize) -> Self {
        Self::new(ShapeKind::Ellipse { a, b }, samples)
    }

    pub fn star(radius: f64, eps: f64, lobes: u32, samples: usize) -> Self {
        Self::new(ShapeKind::Star { radius, eps, lobes }, samples)
    }

    pub fn with_center(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    /// Reject parameters that break the smooth-Jordan-curve hypotheses or
    /// leave `[-1, 1]²`.
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: String| Err(FlowError::InvalidShape(m));
        if self.samples < crate::geometry::MIN_MARKERS {
            return bad(format!(
                "need at least {} samples, got {}",
                crate::geometry::MIN_MARKERS,
                self.samples
            ));
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return bad("center must be finite".into());
        }
        let extent = match &self.kind {
            ShapeKind::Disk { r } => {
                if !(*r > 0.0) {
                    return bad(format!("disk radius must be positive, got {r}"));
                }
                [*r, *r]
            }
            ShapeKind::Ellipse { a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return bad(format!("ellipse semi-axes must be positive, got {a}, {b}"));
                }
                [*a, *b]
            }
            ShapeKind::Star { radius, eps, lobes } => {
                if !(*radius > 0.0) {
                    return bad(format!("star radius must be positive, got {radius}"));
                }
                // r(φ) must stay positive for the polar curve to be a smooth Jordan curve
                if !(*eps >= 0.0 && *eps < 1.0) {
                    return bad(format!("star amplitude must lie in [0, 1), got {eps}"));
                }
                if *lobes == 0 {
                    return bad("star needs at least one lobe".into());
                }
                let r = radius * (1.0 + eps);
                [r, r]
            }
            ShapeKind::PolygonFile(_) => {
                let c = self.curve()?;
                let b = c.bbox();
                if b[0] < -1.0 || b[1] < -1.0 || b[2] > 1.0 || b[3] > 1.0 {
                    return bad("polygon leaves [-1, 1]^2".into());
                }
                return Ok(());
            }
        };
        if self.center[0].abs() + extent[0] > 1.0 || self.center[1].abs() + extent[1] > 1.0 {
            return bad("shape leaves [-1, 1]^2".into());
        }
        Ok(())
    }

    /// Marker curve with `samples` markers, equally spaced in arc length.
    pub fn curve(&self) -> Result<MarkerCurve, FlowError> {
        let n = self.samples;
        let c = self.center;
        let curve = match &self.kind {
            ShapeKind::Disk { r } => construct::circle(c, *r, n)?,
            ShapeKind::Ellipse { a, b } => construct::ellipse(c, *a, *b, n)?,
            ShapeKind::Star { radius, eps, lobes } => {
                construct::star(c, *radius, *eps, *lobes, n)?
            }
            ShapeKind::PolygonFile(path) => {
                let pts = io::read_polygon(path)
                    .map_err(|e| FlowError::InvalidShape(format!("{}: {e}", path.display())))?;
                if pts.len() < 3 {
                    return Err(FlowError::InvalidShape("polygon needs 3 vertices".into()));
                }
                let shifted: Vec<Point> =
                    pts.iter().map(|p| [p[0] + c[0], p[1] + c[1]]).collect();
                MarkerCurve::new(resample_polyline(&shifted, n))?
            }
        };
        Ok(curve)
    }

    pub fn region(&self) -> Result<Region, FlowError> {
        Ok(Region::Polygon(self.curve()?))
    }

    /// Exact enclosed area (polygon files: shoelace on the input vertices).
    pub fn area(&self) -> Result<f64, FlowError> {
        Ok(match &self.kind {
            ShapeKind::Disk { r } => PI * r * r,
            ShapeKind::Ellipse { a, b } => PI * a * b,
            ShapeKind::Star { radius, eps, .. } => PI * radius * radius * (1.0 + 0.5 * eps * eps),
            ShapeKind::PolygonFile(path) => {
                let pts = io::read_polygon(path)
                    .map_err(|e| FlowError::InvalidShape(format!("{}: {e}", path.display())))?;
                crate::geometry::signed_area(&pts).abs()
            }
        })
    }
}

/// Points equally spaced in arc length along a closed polyline.
fn resample_polyline(pts: &[Point], n: usize) -> Vec<Point> {
    let m = pts.len();
    let mut cum = vec![0.0];
    for i in 0..m {
        let a = pts[i];
        let b = pts[(i + 1) % m];
        let last = *cum.last().unwrap();
        cum.push(last + (b[0] - a[0]).hypot(b[1] - a[1]));
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while seg + 1 < m && cum[seg + 1] <= s {
            seg += 1;
        }
        let a = pts[seg];
        let b = pts[(seg + 1) % m];
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (s - cum[seg]) / span } else { 0.0 };
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::Disk { r } => write!(f, "disk:{r}"),
            ShapeKind::Ellipse { a, b } => write!(f, "ellipse:{a},{b}"),
            ShapeKind::Star { radius, eps, lobes } => write!(f, "star:{radius},{eps},{lobes}"),
            ShapeKind::PolygonFile(p) => write!(f, "polygon:{}", p.display()),
        }
    }
}

impl FromStr for ShapeKind {
    type Err = String;

    /// `disk:r`, `ellipse:a,b`, `star:R,eps,m` or `polygon:path`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| format!("shape `{s}` must look like kind:params"))?;
        if kind == "polygon" {
            return Ok(ShapeKind::PolygonFile(PathBuf::from(args)));
        }
        let nums: Vec<f64> = args
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("shape `{s}`: {e}"))?;
        match (kind, nums.as_slice()) {
            ("disk", [r]) => Ok(ShapeKind::Disk { r: *r }),
            ("ellipse", [a, b]) => Ok(ShapeKind::Ellipse { a: *a, b: *b }),
            ("star", [radius, eps, m]) => {
                if m.fract() != 0.0 || *m < 1.0 {
                    return Err(format!("star lobe count must be a positive integer, got {m}"));
                }
                Ok(ShapeKind::Star {
                    radius: *radius,
                    eps: *eps,
                    lobes: *m as u32,
                })
            }
            _ => Err(format!("unknown shape or wrong parameter count: `{s}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["disk:0.4", "ellipse:0.6,0.3", "star:0.5,0.2,6"] {
            let k: ShapeKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("star:0.5,0.2,6.5".parse::<ShapeKind>().is_err());
        assert!("blob:1".parse::<ShapeKind>().is_err());
        assert!("disk".parse::<ShapeKind>().is_err());
    }

    #[test]
    fn validation() {
        assert!(ShapeSpec::disk(0.4, 512).validate().is_ok());
        assert!(ShapeSpec::disk(1.2, 512).validate().is_err());
        assert!(ShapeSpec::disk(0.4, 8).validate().is_err());
        assert!(ShapeSpec::star(0.5, 1.0, 6, 512).validate().is_err());
        assert!(ShapeSpec::star(0.5, 0.2, 6, 512).validate().is_ok());
        assert!(ShapeSpec::disk(0.4, 64)
            .with_center([0.7, 0.0])
            .validate()
            .is_err());
    }

    #[test]
    fn areas() {
        let s = ShapeSpec::star(0.5, 0.2, 6, 2048);
        assert!((s.area().unwrap() - 0.801_106_1).abs() < 1e-6);
        assert!((s.curve().unwrap().area() - s.area().unwrap()).abs() < 1e-4);
        let e = ShapeSpec::ellipse(0.6, 0.3, 1024);
        assert!((e.curve().unwrap().area() - e.area().unwrap()).abs() < 1e-4);
    }

    #[test]
    fn polygon_file_is_resampled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sq.txt");
        std::fs::write(&path, "# square\n-0.5 -0.5\n0.5 -0.5\n0.5 0.5\n-0.5 0.5\n").unwrap();
        let spec = ShapeSpec::new(ShapeKind::PolygonFile(path), 64);
        spec.validate().unwrap();
        let c = spec.curve().unwrap();
        assert_eq!(c.len(), 64);
        assert!((c.area() - 1.0).abs() < 1e-12);
        assert!((spec.area().unwrap() - 1.0).abs() < 1e-12);
    }
}
