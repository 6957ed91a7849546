use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::anisotropy::AnisotropyProfile;
use crate::flow::{FlowParams, ShapeSpec};
use crate::glauber::{DEFAULT_MARGIN, MIN_SCALE};

use super::HarnessError;

/// A comparison time, either absolute (diffusive units) or a fraction of
/// the shrink time `T = Area / ∫a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Checkpoint {
    Absolute(f64),
    ShrinkFraction(f64),
}

impl Checkpoint {
    pub fn resolve(&self, shrink_time: f64) -> f64 {
        match *self {
            Checkpoint::Absolute(t) => t,
            Checkpoint::ShrinkFraction(f) => f * shrink_time,
        }
    }
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Checkpoint::Absolute(t) => write!(f, "{t}"),
            Checkpoint::ShrinkFraction(x) => write!(f, "{x}T"),
        }
    }
}

impl FromStr for Checkpoint {
    type Err = String;

    /// `0.05` is an absolute time, `0.25T` a fraction of the shrink time.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (num, frac) = match s.strip_suffix('T') {
            Some(n) => (n.trim(), true),
            None => (s, false),
        };
        let v: f64 = num
            .parse()
            .map_err(|_| format!("bad checkpoint `{s}` (expected a time or a multiple of T such as 0.5T)"))?;
        Ok(if frac {
            Checkpoint::ShrinkFraction(v)
        } else {
            Checkpoint::Absolute(v)
        })
    }
}

/// Everything that defines one stochastic-versus-deterministic comparison.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    /// Initial shape; `samples` is the flow resolution.
    pub shape: ShapeSpec,
    pub profile: AnisotropyProfile,
    /// Lattice scales `L`.
    pub scales: Vec<u32>,
    /// One replica per seed at every scale.
    pub seeds: Vec<u64>,
    /// Sandwich margin.
    pub eta: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Fraction of seeds that must pass at a scale.
    pub pass_threshold: f64,
    pub flow: FlowParams,
    /// Lattice window margin in sites.
    pub margin: i64,
}

impl ExperimentPlan {
    pub fn new(shape: ShapeSpec) -> Self {
        Self {
            shape,
            profile: AnisotropyProfile::exact(),
            scales: vec![64, 128, 256],
            seeds: (0..8).collect(),
            eta: 0.05,
            checkpoints: [0.25, 0.5, 0.75]
                .into_iter()
                .map(Checkpoint::ShrinkFraction)
                .collect(),
            pass_threshold: 7.0 / 8.0,
            flow: FlowParams::default(),
            margin: DEFAULT_MARGIN,
        }
    }

    /// `Area / ∫a` of the initial shape.
    pub fn shrink_time(&self) -> Result<f64, HarnessError> {
        let area = self
            .shape
            .area()
            .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        Ok(area / self.profile.total_integral())
    }

    /// Checkpoints as diffusive times.
    pub fn checkpoint_times(&self) -> Result<Vec<f64>, HarnessError> {
        let t = self.shrink_time()?;
        Ok(self.checkpoints.iter().map(|c| c.resolve(t)).collect())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidPlan(m));
        self.shape
            .validate()
            .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        if self.scales.is_empty() {
            return bad("at least one lattice scale is required".into());
        }
        if let Some(l) = self.scales.iter().find(|&&l| l < MIN_SCALE) {
            return bad(format!("lattice scale {l} is below {MIN_SCALE}"));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.pass_threshold > 0.0 && self.pass_threshold <= 1.0) {
            return bad(format!(
                "pass threshold must lie in (0, 1], got {}",
                self.pass_threshold
            ));
        }
        if self.margin < 1 {
            return bad(format!("window margin must be >= 1, got {}", self.margin));
        }
        let times = self.checkpoint_times()?;
        if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("checkpoints must be finite and non-negative".into());
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return bad("checkpoints must be sorted".into());
        }
        Ok(())
    }

    /// Canonical `key = value` description; the config hash is its SHA-256.
    pub fn canonical_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "shape = {}", self.shape.kind);
        let _ = writeln!(
            s,
            "shape.center = {},{}",
            self.shape.center[0], self.shape.center[1]
        );
        let _ = writeln!(s, "flow.n = {}", self.shape.samples);
        let _ = writeln!(s, "profile = {}", self.profile.label());
        let _ = writeln!(s, "flow.c_stab = {}", self.flow.c_stab);
        let _ = writeln!(
            s,
            "flow.omega = {}",
            self.flow.omega.map_or("default".to_string(), |w| w.to_string())
        );
        let _ = writeln!(
            s,
            "scales = {}",
            join(self.scales.iter().map(u32::to_string).collect())
        );
        let _ = writeln!(
            s,
            "seeds = {}",
            join(self.seeds.iter().map(u64::to_string).collect())
        );
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(
            s,
            "checkpoints = {}",
            join(self.checkpoints.iter().map(Checkpoint::to_string).collect())
        );
        let _ = writeln!(s, "pass_threshold = {}", self.pass_threshold);
        let _ = writeln!(s, "margin = {}", self.margin);
        s
    }

    /// Hex SHA-256 of [`ExperimentPlan::canonical_text`].
    pub fn config_hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical_text().as_bytes()))
    }
}
