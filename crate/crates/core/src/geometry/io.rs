//! Plain-text snapshot formats.
//!
//! Curve snapshot:
//!
//! ```text
//! <N> <time>
//! <x> <y> <theta> <k>      (N lines)
//! ```
//!
//! Cell union:
//!
//! ```text
//! <L>
//! <i> <j>                  (sorted, one cell per line)
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{CellUnion, GeometryError, MarkerCurve, Point};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> SnapshotError {
    SnapshotError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Contents of one curve snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSnapshot {
    pub time: f64,
    pub points: Vec<Point>,
    pub theta: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl CurveSnapshot {
    pub fn from_curve(curve: &MarkerCurve, time: f64) -> Self {
        Self {
            time,
            points: curve.points().to_vec(),
            theta: curve.theta().to_vec(),
            curvature: curve.curvature().to_vec(),
        }
    }

    /// Rebuild the curve from the stored positions.
    pub fn to_curve(&self) -> Result<MarkerCurve, GeometryError> {
        MarkerCurve::new(self.points.clone())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(64 * (self.points.len() + 1));
        let _ = writeln!(s, "{} {}", self.points.len(), self.time);
        for i in 0..self.points.len() {
            let p = self.points[i];
            let _ = writeln!(s, "{} {} {} {}", p[0], p[1], self.theta[i], self.curvature[i]);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SnapshotError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
        let mut h = header.split_whitespace();
        let n: usize = h
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(1, "header must be `N time`"))?;
        let time: f64 = h
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(1, "header must be `N time`"))?;
        let mut snap = Self {
            time,
            points: Vec::with_capacity(n),
            theta: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
        };
        for (idx, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| parse_err(idx + 1, e.to_string()))?;
            if vals.len() != 4 {
                return Err(parse_err(idx + 1, "expected `x y theta k`"));
            }
            snap.points.push([vals[0], vals[1]]);
            snap.theta.push(vals[2]);
            snap.curvature.push(vals[3]);
        }
        if snap.points.len() != n {
            return Err(parse_err(
                1,
                format!("header announces {n} markers, found {}", snap.points.len()),
            ));
        }
        Ok(snap)
    }

    pub fn write(&self, path: &Path) -> Result<(), SnapshotError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, SnapshotError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

pub fn cells_to_text(cells: &CellUnion) -> String {
    let mut s = String::with_capacity(16 * (cells.len() + 1));
    let _ = writeln!(s, "{}", cells.scale());
    for (i, j) in cells.cells() {
        let _ = writeln!(s, "{i} {j}");
    }
    s
}

pub fn cells_from_text(text: &str) -> Result<CellUnion, SnapshotError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let l: u32 = header
        .trim()
        .parse()
        .map_err(|_| parse_err(1, "header must be the lattice scale L"))?;
    let mut cells = Vec::new();
    let mut prev: Option<(i64, i64)> = None;
    for (idx, line) in lines {
        let mut it = line.split_whitespace().map(|t| t.parse::<i64>());
        let cell = match (it.next(), it.next(), it.next()) {
            (Some(Ok(i)), Some(Ok(j)), None) => (i, j),
            _ => return Err(parse_err(idx + 1, "expected `i j`")),
        };
        if prev.is_some_and(|p| p >= cell) {
            return Err(parse_err(idx + 1, "cells must be strictly sorted"));
        }
        prev = Some(cell);
        cells.push(cell);
    }
    Ok(CellUnion::new(l, cells))
}

pub fn write_cells(path: &Path, cells: &CellUnion) -> Result<(), SnapshotError> {
    std::fs::write(path, cells_to_text(cells))?;
    Ok(())
}

pub fn read_cells(path: &Path) -> Result<CellUnion, SnapshotError> {
    cells_from_text(&std::fs::read_to_string(path)?)
}

/// Read a polygon from either a curve snapshot or bare `x y` lines.
pub fn read_polygon(path: &Path) -> Result<Vec<Point>, SnapshotError> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(snap) = CurveSnapshot::parse(&text) {
        return Ok(snap.points);
    }
    let mut pts = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(idx + 1, e.to_string()))?;
        if vals.len() < 2 {
            return Err(parse_err(idx + 1, "expected `x y`"));
        }
        pts.push([vals[0], vals[1]]);
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::construct;
    use proptest::prelude::*;

    #[test]
    fn curve_snapshot_round_trip() {
        let c = construct::star([0.01, -0.02], 0.5, 0.2, 6, 128).unwrap();
        let snap = CurveSnapshot::from_curve(&c, 0.123_456_789_012_345_67);
        let back = CurveSnapshot::parse(&snap.to_text()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_curve().unwrap(), c);
    }

    #[test]
    fn header_mismatch_rejected() {
        assert!(CurveSnapshot::parse("3 0.5\n0 0 0 0\n").is_err());
        assert!(cells_from_text("16\n1 2\n0 0\n").is_err());
    }

    proptest! {
        #[test]
        fn snapshot_text_is_bit_exact(
            rows in proptest::collection::vec(proptest::array::uniform4(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO), 1..40),
            t in proptest::num::f64::NORMAL,
        ) {
            let snap = CurveSnapshot {
                time: t,
                points: rows.iter().map(|r| [r[0], r[1]]).collect(),
                theta: rows.iter().map(|r| r[2]).collect(),
                curvature: rows.iter().map(|r| r[3]).collect(),
            };
            let text = snap.to_text();
            let back = CurveSnapshot::parse(&text).unwrap();
            prop_assert_eq!(back.to_text(), text);
            for (a, b) in back.points.iter().zip(&snap.points) {
                prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
                prop_assert_eq!(a[1].to_bits(), b[1].to_bits());
            }
        }

        #[test]
        fn cells_text_round_trip(cells in proptest::collection::vec((-500i64..500, -500i64..500), 0..60), l in 16u32..1024) {
            let cu = CellUnion::new(l, cells);
            let back = cells_from_text(&cells_to_text(&cu)).unwrap();
            prop_assert_eq!(back, cu);
        }
    }
}
