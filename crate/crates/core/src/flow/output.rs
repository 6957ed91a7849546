//! Trajectory directories.
//!
//! A trajectory directory holds one curve snapshot per stored time
//! (`snapshot_00000.txt`, ...) in the geometry snapshot format, and a
//! `metadata.txt` file of `key = value` lines:
//!
//! ```text
//! shape = star:0.5,0.2,6
//! n = 1024
//! profile = mollified(0.0245436926)
//! omega = 0.02454369260617026
//! c_stab = 0.4
//! dt_policy = c_stab * min_ds^2 / a_max, halved on rejection
//! steps = 412345
//! t_stop = 0.40051
//! t_observed = 0.400553
//! x = 0.0000012
//! y = -0.0000004
//! snapshots = 12
//! snapshot.0 = snapshot_00000.txt 0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::geometry::io::{CurveSnapshot, SnapshotError};
use crate::geometry::Point;

use super::{FlowParams, ShapeSpec, Trajectory};

const METADATA_FILE: &str = "metadata.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMetadata {
    pub shape: String,
    pub n: usize,
    pub profile: String,
    pub omega: f64,
    pub c_stab: f64,
    pub dt_policy: String,
    pub steps: usize,
    pub t_stop: f64,
    pub t_observed: f64,
    pub center: Point,
    /// `(file name, time)` of every running snapshot.
    pub snapshots: Vec<(String, f64)>,
}

impl TrajectoryMetadata {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "shape = {}", self.shape);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "profile = {}", self.profile);
        let _ = writeln!(s, "omega = {}", self.omega);
        let _ = writeln!(s, "c_stab = {}", self.c_stab);
        let _ = writeln!(s, "dt_policy = {}", self.dt_policy);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "t_stop = {}", self.t_stop);
        let _ = writeln!(s, "t_observed = {}", self.t_observed);
        let _ = writeln!(s, "x = {}", self.center[0]);
        let _ = writeln!(s, "y = {}", self.center[1]);
        let _ = writeln!(s, "snapshots = {}", self.snapshots.len());
        for (i, (file, t)) in self.snapshots.iter().enumerate() {
            let _ = writeln!(s, "snapshot.{i} = {file} {t}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SnapshotError> {
        let mut map = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| SnapshotError::Parse {
                line: idx + 1,
                msg: "expected `key = value`".into(),
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<&String, SnapshotError> {
            map.get(k).ok_or_else(|| SnapshotError::Parse {
                line: 0,
                msg: format!("missing key `{k}`"),
            })
        };
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, SnapshotError> {
            v.parse().map_err(|_| SnapshotError::Parse {
                line: 0,
                msg: format!("bad value for `{k}`: {v}"),
            })
        }
        let count: usize = num("snapshots", get("snapshots")?)?;
        let mut snapshots = Vec::with_capacity(count);
        for i in 0..count {
            let key = format!("snapshot.{i}");
            let v = get(&key)?;
            let (file, t) = v.split_once(' ').ok_or_else(|| SnapshotError::Parse {
                line: 0,
                msg: format!("`{key}` must be `file time`"),
            })?;
            snapshots.push((file.to_string(), num(&key, t.trim())?));
        }
        Ok(Self {
            shape: get("shape")?.clone(),
            n: num("n", get("n")?)?,
            profile: get("profile")?.clone(),
            omega: num("omega", get("omega")?)?,
            c_stab: num("c_stab", get("c_stab")?)?,
            dt_policy: get("dt_policy")?.clone(),
            steps: num("steps", get("steps")?)?,
            t_stop: num("t_stop", get("t_stop")?)?,
            t_observed: num("t_observed", get("t_observed")?)?,
            center: [num("x", get("x")?)?, num("y", get("y")?)?],
            snapshots,
        })
    }
}

/// Write every running snapshot plus `metadata.txt` into `dir`.
pub fn write_trajectory(
    dir: &Path,
    spec: &ShapeSpec,
    params: &FlowParams,
    trajectory: &Trajectory,
) -> Result<TrajectoryMetadata, SnapshotError> {
    std::fs::create_dir_all(dir)?;
    let mut snapshots = Vec::new();
    for (i, s) in trajectory
        .snapshots
        .iter()
        .filter(|s| s.is_running())
        .enumerate()
    {
        let name = format!("snapshot_{i:05}.txt");
        CurveSnapshot::from_curve(s.curve(), s.t()).write(&dir.join(&name))?;
        snapshots.push((name, s.t()));
    }
    let meta = TrajectoryMetadata {
        shape: spec.kind.to_string(),
        n: spec.samples,
        profile: trajectory.profile().label(),
        omega: trajectory.omega,
        c_stab: params.c_stab,
        dt_policy: "c_stab * min_ds^2 / a_max, halved on rejection".into(),
        steps: trajectory.steps,
        t_stop: trajectory.t_stop,
        t_observed: trajectory.t_observed,
        center: trajectory.center,
        snapshots,
    };
    std::fs::write(dir.join(METADATA_FILE), meta.to_text())?;
    Ok(meta)
}

/// Read `metadata.txt` from a trajectory directory.
pub fn read_metadata(dir: &Path) -> Result<TrajectoryMetadata, SnapshotError> {
    TrajectoryMetadata::parse(&std::fs::read_to_string(metadata_path(dir))?)
}

fn metadata_path(dir: &Path) -> PathBuf {
    dir.join(METADATA_FILE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyProfile;
    use crate::flow::run_to_shrink;

    #[test]
    fn trajectory_round_trip() {
        let spec = ShapeSpec::disk(0.15, 64);
        let params = FlowParams {
            snapshot_times: vec![0.002, 0.004],
            ..FlowParams::default()
        };
        let tr = run_to_shrink(&spec, &AnisotropyProfile::exact(), &params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let meta = write_trajectory(dir.path(), &spec, &params, &tr).unwrap();
        assert_eq!(meta.snapshots.len(), 3);
        let back = read_metadata(dir.path()).unwrap();
        assert_eq!(back, meta);
        let snap = CurveSnapshot::read(&dir.path().join(&back.snapshots[1].0)).unwrap();
        assert_eq!(snap.time, 0.002);
        assert_eq!(snap.points, tr.snapshots[1].curve().points());
    }
}
