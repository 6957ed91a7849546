use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::anisotropy::AnisotropyProfile;
use crate::flow::{FlowParams, ShapeKind, ShapeSpec};
use crate::harness::{Checkpoint, ExperimentPlan};

use super::CliError;

/// Which command a configuration is resolved for. A few defaults differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Shapes,
    Flow,
    Glauber,
    Compare,
}

/// Every accepted key with its default and a one-line description, in
/// echo order. `None` marks keys without a default.
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("shape", None, "disk:R | ellipse:A,B | star:R,EPS,M | polygon:PATH"),
    ("shape.center", Some("0,0"), "center of the initial shape"),
    ("flow.n", Some("1024"), "number of flow markers"),
    ("flow.c_stab", Some("0.4"), "step-size factor in dt = c_stab * min_ds^2 / a_max"),
    ("flow.omega", Some("default"), "mollification width for stepping (default: 4 * 2pi / n)"),
    ("flow.snapshot_interval", Some("none"), "extra snapshots every this many time units"),
    ("flow.max_steps", Some("50000000"), "abort the flow after this many steps"),
    ("anisotropy.kind", Some("exact"), "exact | mollified | constant"),
    ("anisotropy.omega", None, "mollification width (anisotropy.kind = mollified)"),
    ("anisotropy.constant", None, "constant mobility value (anisotropy.kind = constant)"),
    ("L", None, "lattice scales; glauber default 128, compare default 64,128,256"),
    ("seed", Some("0"), "first seed"),
    ("replicas", None, "seeds seed, seed+1, ...; glauber default 1, compare default 8"),
    ("checkpoints", Some("0.25T,0.5T,0.75T"), "diffusive times; a T suffix scales by Area / int a"),
    ("eta", Some("0.05"), "sandwich margin"),
    ("pass_threshold", Some("0.875"), "fraction of seeds that must pass at a scale"),
    ("margin", Some("8"), "lattice window margin in sites"),
    ("out", None, "output directory"),
    ("emit_plot_data", Some("false"), "also write boundary polylines and time series"),
    ("event_log", Some("false"), "glauber: write one `t i j old new` line per flip"),
];

/// Raw `key = value` pairs from a config file and command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parse the flat config format: `key = value` lines, `#` comments.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            let k = k.trim();
            if raw.values.contains_key(k) {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
            raw.set(k, v.trim())?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Set a key, replacing any earlier value. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub command: Command,
    pub shape: ShapeSpec,
    pub profile: AnisotropyProfile,
    pub flow: FlowParams,
    pub scales: Vec<u32>,
    pub seed: u64,
    pub replicas: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub eta: f64,
    pub pass_threshold: f64,
    pub margin: i64,
    pub out: PathBuf,
    pub emit_plot_data: bool,
    pub event_log: bool,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| CliError::Config(format!("bad value `{v}` for `{key}`: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_value(key, x)).collect()
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn resolve(raw: &RawConfig, command: Command) -> Result<Self, CliError> {
        let missing = |key: &str| bad(format!("missing required config key `{key}`"));
        let get = |key: &str| -> Option<&str> {
            raw.get(key).or_else(|| {
                KEYS.iter()
                    .find(|(k, _, _)| *k == key)
                    .and_then(|(_, d, _)| *d)
            })
        };
        let kind: ShapeKind = parse_value("shape", raw.get("shape").ok_or_else(|| missing("shape"))?)?;
        let center: Vec<f64> = parse_list("shape.center", get("shape.center").unwrap())?;
        let center: [f64; 2] = center
            .try_into()
            .map_err(|_| bad("`shape.center` needs two numbers"))?;
        let samples: usize = parse_value("flow.n", get("flow.n").unwrap())?;
        let shape = ShapeSpec {
            kind,
            center,
            samples,
        };
        shape.validate().map_err(|e| bad(format!("`shape`: {e}")))?;

        let profile = match get("anisotropy.kind").unwrap() {
            "exact" => AnisotropyProfile::exact(),
            "mollified" => {
                let w = raw.get("anisotropy.omega").ok_or_else(|| missing("anisotropy.omega"))?;
                AnisotropyProfile::mollified(parse_value("anisotropy.omega", w)?)
                    .map_err(|e| bad(format!("`anisotropy.omega`: {e}")))?
            }
            "constant" => {
                let c = raw
                    .get("anisotropy.constant")
                    .ok_or_else(|| missing("anisotropy.constant"))?;
                AnisotropyProfile::constant(parse_value("anisotropy.constant", c)?)
                    .map_err(|e| bad(format!("`anisotropy.constant`: {e}")))?
            }
            other => return Err(bad(format!("bad value `{other}` for `anisotropy.kind`"))),
        };

        let opt_f64 = |key: &str, none: &str| -> Result<Option<f64>, CliError> {
            match get(key).unwrap() {
                v if v == none => Ok(None),
                v => parse_value(key, v).map(Some),
            }
        };
        let flow = FlowParams {
            c_stab: parse_value("flow.c_stab", get("flow.c_stab").unwrap())?,
            omega: opt_f64("flow.omega", "default")?,
            snapshot_times: Vec::new(),
            snapshot_interval: opt_f64("flow.snapshot_interval", "none")?,
            max_steps: parse_value("flow.max_steps", get("flow.max_steps").unwrap())?,
        };
        if !(flow.c_stab > 0.0 && flow.c_stab <= 1.0) {
            return Err(bad(format!("`flow.c_stab` must lie in (0, 1], got {}", flow.c_stab)));
        }
        if flow.omega.is_some_and(|w| !(w > 0.0)) {
            return Err(bad("`flow.omega` must be positive"));
        }
        if flow.snapshot_interval.is_some_and(|w| !(w > 0.0)) {
            return Err(bad("`flow.snapshot_interval` must be positive"));
        }

        let (default_l, default_replicas) = match command {
            Command::Compare => ("64,128,256", "8"),
            _ => ("128", "1"),
        };
        let scales: Vec<u32> = parse_list("L", raw.get("L").unwrap_or(default_l))?;
        let replicas: u64 = parse_value("replicas", raw.get("replicas").unwrap_or(default_replicas))?;
        let out = PathBuf::from(raw.get("out").ok_or_else(|| missing("out"))?);
        let parse_bool = |key: &str| -> Result<bool, CliError> { parse_value(key, get(key).unwrap()) };

        let cfg = Config {
            command,
            shape,
            profile,
            flow,
            scales,
            seed: parse_value("seed", get("seed").unwrap())?,
            replicas,
            checkpoints: parse_list("checkpoints", get("checkpoints").unwrap())?,
            eta: parse_value("eta", get("eta").unwrap())?,
            pass_threshold: parse_value("pass_threshold", get("pass_threshold").unwrap())?,
            margin: parse_value("margin", get("margin").unwrap())?,
            out,
            emit_plot_data: parse_bool("emit_plot_data")?,
            event_log: parse_bool("event_log")?,
        };
        if cfg.replicas == 0 {
            return Err(bad("`replicas` must be at least 1"));
        }
        // the plan checks scales, checkpoints, eta, threshold and margin
        cfg.plan()
            .validate()
            .map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (self.seed..self.seed + self.replicas).collect()
    }

    pub fn plan(&self) -> ExperimentPlan {
        ExperimentPlan {
            shape: self.shape.clone(),
            profile: self.profile.clone(),
            scales: self.scales.clone(),
            seeds: self.seeds(),
            eta: self.eta,
            checkpoints: self.checkpoints.clone(),
            pass_threshold: self.pass_threshold,
            flow: self.flow.clone(),
            margin: self.margin,
        }
    }

    /// Every key with its resolved value; reading this text back gives the
    /// same configuration.
    pub fn echo(&self) -> String {
        let list = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("shape", self.shape.kind.to_string());
        put("shape.center", format!("{},{}", self.shape.center[0], self.shape.center[1]));
        put("flow.n", self.shape.samples.to_string());
        put("flow.c_stab", self.flow.c_stab.to_string());
        put("flow.omega", self.flow.omega.map_or("default".into(), |w| w.to_string()));
        put(
            "flow.snapshot_interval",
            self.flow.snapshot_interval.map_or("none".into(), |w| w.to_string()),
        );
        put("flow.max_steps", self.flow.max_steps.to_string());
        match self.profile.kind() {
            crate::anisotropy::ProfileKind::Exact => put("anisotropy.kind", "exact".into()),
            crate::anisotropy::ProfileKind::Mollified { omega } => {
                put("anisotropy.kind", "mollified".into());
                put("anisotropy.omega", omega.to_string());
            }
            crate::anisotropy::ProfileKind::Constant { c } => {
                put("anisotropy.kind", "constant".into());
                put("anisotropy.constant", c.to_string());
            }
        }
        put("L", list(self.scales.iter().map(u32::to_string).collect()));
        put("seed", self.seed.to_string());
        put("replicas", self.replicas.to_string());
        put(
            "checkpoints",
            list(self.checkpoints.iter().map(Checkpoint::to_string).collect()),
        );
        put("eta", self.eta.to_string());
        put("pass_threshold", self.pass_threshold.to_string());
        put("margin", self.margin.to_string());
        put("out", self.out.display().to_string());
        put("emit_plot_data", self.emit_plot_data.to_string());
        put("event_log", self.event_log.to_string());
        s
    }
}

/// Help text listing every key.
pub fn describe_keys() -> String {
    let mut s = String::new();
    for (k, d, doc) in KEYS {
        let _ = writeln!(s, "  {k:<24} {:<18} {doc}", d.unwrap_or("-"));
    }
    s
}
