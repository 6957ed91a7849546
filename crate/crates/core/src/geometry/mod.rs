//! Closed marker curves and planar regions.
//!
//! A [`MarkerCurve`] is a simple counterclockwise polygon carrying per-vertex
//! tangent angle and signed curvature. A [`Region`] is any of the planar sets
//! the comparison harness needs: a polygon interior, a union of lattice
//! cells, a single point, or a pixel raster produced by dilation/erosion.
//!
//! Region-valued operations (dilation, erosion, Hausdorff distance,
//! inclusion) run on a pixel raster. Pixel membership is decided at pixel
//! centers and distances are exact Euclidean distances between pixel
//! centers, so every result carries an error of at most one pixel diagonal.

pub mod construct;
mod curve;
pub mod io;
mod raster;
pub(crate) mod region;

pub use curve::{curvature_and_angle, MarkerCurve, MIN_MARKERS};
pub(crate) use curve::signed_area;
pub use raster::Grid;
pub use region::{
    dilate_erode, hausdorff, hausdorff_with, inclusion_check, inclusion_check_with, resolution_for,
    sandwich, CellUnion, Raster, Region, Sandwich, Verdict,
};

use thiserror::Error;

/// A point in the plane.
pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("a closed curve needs at least {min} markers, got {got}")]
    TooFewMarkers { got: usize, min: usize },
    #[error("marker {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("degenerate marker {index} ({reason}); resample the curve before retrying")]
    Degenerate { index: usize, reason: &'static str },
    #[error("curve self-intersects (segments {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("offset {offset} is not below the reach {reach}")]
    OffsetBeyondReach { offset: f64, reach: f64 },
    #[error("Hausdorff distance needs two nonempty regions")]
    EmptyRegion,
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Wrap an angle into `(-π, π]`.
#[inline]
pub(crate) fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Squared distance from `p` to the segment `[a, b]`.
pub(crate) fn point_segment_dist2(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(ap, ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    let d = sub(p, q);
    dot(d, d)
}

/// Distance between segments `[a, b]` and `[c, d]` (zero if they intersect).
pub(crate) fn segment_segment_dist(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_dist2(a, c, d)
        .min(point_segment_dist2(b, c, d))
        .min(point_segment_dist2(c, a, b))
        .min(point_segment_dist2(d, a, b))
        .sqrt()
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    fn orient(p: Point, q: Point, r: Point) -> f64 {
        cross(sub(q, p), sub(r, p))
    }
    fn on_segment(p: Point, q: Point, r: Point) -> bool {
        r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
