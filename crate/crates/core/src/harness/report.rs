use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flow::{run_to_shrink, FlowParams, Trajectory};
use crate::geometry::{sandwich, Region};
use crate::glauber::{RngStream, SpinLattice};

use super::{ExperimentPlan, HarnessError};

/// One `(L, seed, checkpoint)` comparison. A replica without checkpoints
/// has a single row with the checkpoint fields left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub l: u32,
    pub seed: u64,
    pub checkpoint: Option<usize>,
    /// Diffusive time.
    pub t: Option<f64>,
    pub hausdorff: Option<f64>,
    /// `domain^(-η) ⊂ droplet`.
    pub lower: Option<bool>,
    /// `droplet ⊂ domain^(η)`.
    pub upper: Option<bool>,
    pub excess: Option<f64>,
    pub deficit: Option<f64>,
    pub droplet_area: Option<f64>,
    pub domain_area: Option<f64>,
    /// Microscopic time of the last flip.
    pub death_time: Option<f64>,
    /// `death_time / L²`.
    pub death_scaled: Option<f64>,
    /// `Area / ∫a` of the initial shape.
    pub t_area: f64,
    /// Extrapolated shrink time of the flow solver.
    pub t_shrink: Option<f64>,
    pub error: Option<String>,
}

impl ReportRow {
    fn checkpoint_passed(&self) -> bool {
        self.error.is_none() && self.lower == Some(true) && self.upper == Some(true)
    }
}

/// Aggregates for one lattice scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub l: u32,
    pub replicas: usize,
    /// Replicas whose every checkpoint passed both inclusions.
    pub passed: usize,
    pub pass_fraction: f64,
    pub meets_threshold: bool,
    /// Mean over replicas of the largest Hausdorff distance over checkpoints.
    pub mean_max_hausdorff: Option<f64>,
    pub mean_death_scaled: Option<f64>,
    pub sd_death_scaled: Option<f64>,
    /// 95% normal half-width for the mean death time.
    pub death_half_width: Option<f64>,
    pub errors: usize,
}

/// Flow-solver facts echoed into the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub n: usize,
    pub profile: String,
    pub omega: f64,
    pub steps: usize,
    pub t_stop: f64,
    pub t_observed: f64,
    pub center: [f64; 2],
}

/// Rows plus aggregates and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub version: String,
    pub config_hash: String,
    pub config: String,
    pub eta: f64,
    pub pass_threshold: f64,
    pub t_area: f64,
    pub checkpoint_times: Vec<f64>,
    pub flow: Option<FlowSummary>,
    pub flow_error: Option<String>,
    pub scales: Vec<ScaleSummary>,
    #[serde(skip)]
    pub rows: Vec<ReportRow>,
}

/// Compute the flow once, then run every `(L, seed)` replica in parallel.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ComparisonReport, HarnessError> {
    run_experiment_with(plan, |_| {})
}

/// A droplet and its flowed domain at one checkpoint, handed to the
/// observer of [`run_experiment_with`].
pub struct CheckpointView<'a> {
    pub l: u32,
    pub seed: u64,
    pub checkpoint: usize,
    pub t: f64,
    pub droplet: &'a Region,
    pub domain: Option<&'a Region>,
}

/// [`run_experiment`], showing every checkpoint pair to `observe`. The
/// observer runs on worker threads, in no particular order.
pub fn run_experiment_with(
    plan: &ExperimentPlan,
    observe: impl Fn(&CheckpointView<'_>) + Sync,
) -> Result<ComparisonReport, HarnessError> {
    plan.validate()?;
    let times = plan.checkpoint_times()?;
    let t_area = plan.shrink_time()?;
    let params = FlowParams {
        snapshot_times: times.clone(),
        ..plan.flow.clone()
    };
    let flow = run_to_shrink(&plan.shape, &plan.profile, &params);
    let initial = plan
        .shape
        .region()
        .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
    let replicas: Vec<(u32, u64)> = plan
        .scales
        .iter()
        .flat_map(|&l| plan.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let rows: Vec<ReportRow> = replicas
        .par_iter()
        .flat_map_iter(|&(l, seed)| {
            run_replica(plan, &initial, flow.as_ref().ok(), &times, t_area, l, seed, &observe)
        })
        .collect();
    let (flow_summary, flow_error) = match &flow {
        Ok(tr) => (
            Some(FlowSummary {
                n: plan.shape.samples,
                profile: tr.profile().label(),
                omega: tr.omega,
                steps: tr.steps,
                t_stop: tr.t_stop,
                t_observed: tr.t_observed,
                center: tr.center,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ComparisonReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: plan.config_hash(),
        config: plan.canonical_text(),
        eta: plan.eta,
        pass_threshold: plan.pass_threshold,
        t_area,
        checkpoint_times: times,
        flow: flow_summary,
        flow_error,
        scales: aggregate(&rows, plan.pass_threshold),
        rows,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_replica(
    plan: &ExperimentPlan,
    initial: &Region,
    flow: Option<&Trajectory>,
    times: &[f64],
    t_area: f64,
    l: u32,
    seed: u64,
    observe: &(impl Fn(&CheckpointView<'_>) + Sync),
) -> Vec<ReportRow> {
    let scale2 = (l as f64) * (l as f64);
    let blank = ReportRow {
        l,
        seed,
        checkpoint: None,
        t: None,
        hausdorff: None,
        lower: None,
        upper: None,
        excess: None,
        deficit: None,
        droplet_area: None,
        domain_area: None,
        death_time: None,
        death_scaled: None,
        t_area,
        t_shrink: flow.map(|f| f.t_observed),
        error: None,
    };
    let mut lattice = match SpinLattice::init_with_margin(l, initial, plan.margin) {
        Ok(lat) => lat,
        Err(e) => {
            return vec![ReportRow {
                error: Some(format!("lattice: {e}")),
                ..blank
            }]
        }
    };
    let mut rng = RngStream::new(seed, l as u64);
    let mut rows = Vec::with_capacity(times.len().max(1));
    for (k, &t) in times.iter().enumerate() {
        lattice.advance(&mut rng, t * scale2);
        let droplet = lattice.droplet();
        let mut row = ReportRow {
            checkpoint: Some(k),
            t: Some(t),
            droplet_area: Some(droplet.area()),
            ..blank.clone()
        };
        let domain = flow.map(|tr| tr.domain_at(t));
        observe(&CheckpointView {
            l,
            seed,
            checkpoint: k,
            t,
            droplet: &droplet,
            domain: domain.as_ref(),
        });
        match domain {
            Some(domain) => {
                let s = sandwich(&droplet, &domain, plan.eta);
                row.hausdorff = s.hausdorff;
                row.lower = Some(s.lower.holds());
                row.upper = Some(s.upper.holds());
                row.excess = Some(s.excess);
                row.deficit = Some(s.deficit);
                row.domain_area = Some(domain.area());
            }
            None => row.error = Some("flow solver failed".into()),
        }
        rows.push(row);
    }
    if rows.is_empty() {
        rows.push(blank);
    }
    let (death, error) = match lattice.death_time(&mut rng) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(format!("glauber: {e}"))),
    };
    for row in &mut rows {
        row.death_time = death;
        row.death_scaled = death.map(|d| d / scale2);
        if row.error.is_none() {
            row.error = error.clone();
        }
    }
    rows
}

/// Per-scale aggregates; depends only on the rows.
pub fn aggregate(rows: &[ReportRow], pass_threshold: f64) -> Vec<ScaleSummary> {
    let mut scales: Vec<u32> = rows.iter().map(|r| r.l).collect();
    scales.sort_unstable();
    scales.dedup();
    scales
        .into_iter()
        .map(|l| {
            let mut seeds: Vec<u64> = rows.iter().filter(|r| r.l == l).map(|r| r.seed).collect();
            seeds.sort_unstable();
            seeds.dedup();
            let mut passed = 0;
            let mut errors = 0;
            let mut max_h = Vec::new();
            let mut deaths = Vec::new();
            for &seed in &seeds {
                let rs: Vec<&ReportRow> =
                    rows.iter().filter(|r| r.l == l && r.seed == seed).collect();
                let with_checkpoints: Vec<&&ReportRow> =
                    rs.iter().filter(|r| r.checkpoint.is_some()).collect();
                if rs.iter().any(|r| r.error.is_some()) {
                    errors += 1;
                }
                if with_checkpoints.iter().all(|r| r.checkpoint_passed())
                    && rs.iter().all(|r| r.error.is_none())
                {
                    passed += 1;
                }
                let hs: Vec<f64> = with_checkpoints.iter().filter_map(|r| r.hausdorff).collect();
                if !hs.is_empty() {
                    max_h.push(hs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                }
                if let Some(d) = rs.iter().find_map(|r| r.death_scaled) {
                    deaths.push(d);
                }
            }
            let replicas = seeds.len();
            let pass_fraction = passed as f64 / replicas as f64;
            let (mean_d, sd_d) = mean_sd(&deaths);
            ScaleSummary {
                l,
                replicas,
                passed,
                pass_fraction,
                meets_threshold: pass_fraction >= pass_threshold,
                mean_max_hausdorff: mean_sd(&max_h).0,
                mean_death_scaled: mean_d,
                sd_death_scaled: sd_d,
                death_half_width: sd_d.map(|s| 1.96 * s / (deaths.len() as f64).sqrt()),
                errors,
            }
        })
        .collect()
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1).then(|| {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (Some(mean), sd)
}

/// One line of [`convergence_table`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub l: u32,
    pub mean_max_hausdorff: Option<f64>,
    /// `|mean(death / L²) − Area / ∫a|`.
    pub death_error: Option<f64>,
    pub pass_fraction: f64,
    /// Whether the mean Hausdorff distance dropped relative to the previous
    /// (smaller) scale; `None` on the first row.
    pub hausdorff_decreased: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Hausdorff distances decrease strictly with `L`.
    pub hausdorff_monotone: bool,
    /// Pass fractions never decrease with `L`.
    pub pass_fraction_monotone: bool,
}

pub fn convergence_table(report: &ComparisonReport) -> Result<ConvergenceTable, HarnessError> {
    convergence_from_scales(&report.scales, report.t_area)
}

/// [`convergence_table`] from per-scale aggregates and `T = Area / ∫a`.
pub fn convergence_from_scales(
    scales: &[ScaleSummary],
    t_area: f64,
) -> Result<ConvergenceTable, HarnessError> {
    if scales.len() < 2 {
        return Err(HarnessError::InvalidPlan(
            "a convergence table needs at least two lattice scales".into(),
        ));
    }
    let mut scales = scales.to_vec();
    scales.sort_by_key(|s| s.l);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(scales.len());
    for s in &scales {
        let prev = rows.last().and_then(|r| r.mean_max_hausdorff);
        rows.push(ConvergenceRow {
            l: s.l,
            mean_max_hausdorff: s.mean_max_hausdorff,
            death_error: s.mean_death_scaled.map(|d| (d - t_area).abs()),
            pass_fraction: s.pass_fraction,
            hausdorff_decreased: match (prev, s.mean_max_hausdorff, rows.is_empty()) {
                (_, _, true) => None,
                (Some(p), Some(h), false) => Some(h < p),
                _ => Some(false),
            },
        });
    }
    Ok(ConvergenceTable {
        hausdorff_monotone: rows.iter().skip(1).all(|r| r.hausdorff_decreased == Some(true)),
        pass_fraction_monotone: scales.windows(2).all(|w| w[1].pass_fraction >= w[0].pass_fraction),
        rows,
    })
}

/// Paths written by [`write_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Write `report_<hash>.csv` and `summary_<hash>.json` into `dir`, where
/// `<hash>` is the first 12 hex digits of the config hash.
pub fn write_report(dir: &Path, report: &ComparisonReport) -> Result<ReportFiles, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let tag = &report.config_hash[..12.min(report.config_hash.len())];
    let files = ReportFiles {
        csv: dir.join(format!("report_{tag}.csv")),
        json: dir.join(format!("summary_{tag}.json")),
    };
    write_rows(&files.csv, &report.rows)?;
    std::fs::write(&files.json, summary_json(report)?)?;
    Ok(files)
}

pub fn summary_json(report: &ComparisonReport) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<ReportRow>, _>>()?)
}
