use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::flow::{run_to_shrink, write_trajectory, FlowError, FlowParams, MonitorRecord};
use crate::geometry::io::{write_cells, CurveSnapshot};
use crate::geometry::{CellUnion, Region};
use crate::glauber::{RngStream, SpinLattice};
use crate::harness::{
    aggregate, convergence_from_scales, convergence_table, read_rows, run_experiment_with,
    write_report, CheckpointView, ConvergenceTable, ScaleSummary,
};

use super::{CliError, Config};

/// File name of the echoed configuration inside the output directory.
pub const ECHO_FILE: &str = "config.txt";

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn prepare_out(cfg: &Config) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| runtime(format!("cannot create {}: {e}", cfg.out.display())))?;
    std::fs::write(cfg.out.join(ECHO_FILE), cfg.echo()).map_err(runtime)
}

fn cells_of(l: u32, region: &Region) -> CellUnion {
    match region {
        Region::Cells(c) => c.clone(),
        _ => CellUnion::new(l, Vec::new()),
    }
}

/// Boundary of a region as plain text: `x0 y0 x1 y1` segments for cell
/// unions, a closed `x y` polyline for polygons, one `x y` line for a point.
fn boundary_text(region: &Region) -> String {
    let mut s = String::new();
    match region {
        Region::Cells(c) => {
            for [x0, y0, x1, y1] in c.boundary_segments() {
                let _ = writeln!(s, "{x0} {y0} {x1} {y1}");
            }
        }
        Region::Polygon(curve) => {
            let pts = curve.points();
            for p in pts.iter().chain(pts.first()) {
                let _ = writeln!(s, "{} {}", p[0], p[1]);
            }
        }
        Region::Point(p) => {
            let _ = writeln!(s, "{} {}", p[0], p[1]);
        }
        Region::Empty | Region::Raster(_) => {}
    }
    s
}

/// Initial curve plus the initial lattice droplet at every scale.
pub fn cmd_shapes(cfg: &Config) -> Result<(), CliError> {
    prepare_out(cfg)?;
    let curve = cfg.shape.curve().map_err(runtime)?;
    let path = cfg.out.join("shape.txt");
    CurveSnapshot::from_curve(&curve, 0.0)
        .write(&path)
        .map_err(runtime)?;
    let area = cfg.shape.area().map_err(runtime)?;
    println!("shape = {}", cfg.shape.kind);
    println!("area = {area}");
    println!("length = {}", curve.length());
    println!("shrink_time = {}", area / cfg.profile.total_integral());
    println!("wrote {}", path.display());
    let region = cfg.shape.region().map_err(runtime)?;
    for &l in &cfg.scales {
        let lat = SpinLattice::init_with_margin(l, &region, cfg.margin).map_err(runtime)?;
        let path = cfg.out.join(format!("initial_L{l}.txt"));
        write_cells(&path, &cells_of(l, &lat.droplet())).map_err(runtime)?;
        println!("L = {l}: {} sites, wrote {}", lat.minus_count(), path.display());
    }
    Ok(())
}

fn write_monitor(path: &Path, records: &[MonitorRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(["t", "area", "length", "max_abs_k", "max_abs_g", "inflections"])
        .map_err(runtime)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.area.to_string(),
            r.length.to_string(),
            r.max_abs_k.to_string(),
            r.max_abs_g.to_string(),
            r.inflections.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

/// Run the flow to extinction with snapshots at the checkpoints.
pub fn cmd_flow(cfg: &Config) -> Result<(), CliError> {
    prepare_out(cfg)?;
    let plan = cfg.plan();
    let params = FlowParams {
        snapshot_times: plan.checkpoint_times().map_err(runtime)?,
        ..cfg.flow.clone()
    };
    match run_to_shrink(&cfg.shape, &cfg.profile, &params) {
        Ok(traj) => {
            let meta = write_trajectory(&cfg.out, &cfg.shape, &params, &traj).map_err(runtime)?;
            if cfg.emit_plot_data {
                write_monitor(&cfg.out.join("monitor.csv"), &traj.monitors)?;
            }
            println!("t_observed = {}", meta.t_observed);
            println!("center = {} {}", meta.center[0], meta.center[1]);
            println!("steps = {}", meta.steps);
            println!("wrote {} snapshots to {}", meta.snapshots.len(), cfg.out.display());
            Ok(())
        }
        Err(FlowError::SolverFailure { t, reason, last }) => {
            let state = cfg.out.join("failure_state.txt");
            CurveSnapshot::from_curve(last.curve(), last.t())
                .write(&state)
                .map_err(runtime)?;
            let report = cfg.out.join("failure.txt");
            std::fs::write(&report, format!("t = {t}\nreason = {reason}\n")).map_err(runtime)?;
            Err(runtime(format!(
                "flow solver failed at t = {t} ({reason}); diagnostics in {}",
                report.display()
            )))
        }
        Err(e) => Err(runtime(e)),
    }
}

#[derive(Debug, Serialize)]
struct DeathRow {
    l: u32,
    seed: u64,
    death_time: Option<f64>,
    death_scaled: Option<f64>,
    flips: u64,
    error: Option<String>,
}

fn glauber_replica(
    cfg: &Config,
    region: &Region,
    times: &[f64],
    l: u32,
    seed: u64,
) -> Result<DeathRow, CliError> {
    let scale2 = (l as f64) * (l as f64);
    let mut lat = SpinLattice::init_with_margin(l, region, cfg.margin).map_err(runtime)?;
    let mut rng = RngStream::new(seed, l as u64);
    let mut log = if cfg.event_log {
        let path = cfg.out.join(format!("events_L{l}_s{seed}.txt"));
        Some(BufWriter::new(File::create(path).map_err(runtime)?))
    } else {
        None
    };
    let mut log_err = None;
    let mut on_flip = |e: &crate::glauber::FlipEvent| {
        if let Some(w) = log.as_mut() {
            if let Err(err) = writeln!(w, "{}", e.to_line()) {
                log_err.get_or_insert(err);
            }
        }
    };
    for (k, &t) in times.iter().enumerate() {
        lat.advance_with(&mut rng, t * scale2, &mut on_flip);
        let droplet = lat.droplet();
        let stem = format!("L{l}_s{seed}_c{k}");
        write_cells(&cfg.out.join(format!("droplet_{stem}.txt")), &cells_of(l, &droplet))
            .map_err(runtime)?;
        if cfg.emit_plot_data {
            std::fs::write(cfg.out.join(format!("boundary_{stem}.txt")), boundary_text(&droplet))
                .map_err(runtime)?;
        }
    }
    let death = lat.death_time_with(&mut rng, &mut on_flip);
    if let Some(mut w) = log {
        w.flush().map_err(runtime)?;
    }
    if let Some(err) = log_err {
        return Err(runtime(err));
    }
    Ok(DeathRow {
        l,
        seed,
        death_time: death.as_ref().ok().copied(),
        death_scaled: death.as_ref().ok().map(|d| d / scale2),
        flips: lat.flips(),
        error: death.err().map(|e| e.to_string()),
    })
}

/// Droplet snapshots at the checkpoints and the death time of every replica.
pub fn cmd_glauber(cfg: &Config) -> Result<(), CliError> {
    prepare_out(cfg)?;
    let times = cfg.plan().checkpoint_times().map_err(runtime)?;
    let region = cfg.shape.region().map_err(runtime)?;
    let jobs: Vec<(u32, u64)> = cfg
        .scales
        .iter()
        .flat_map(|&l| cfg.seeds().into_iter().map(move |s| (l, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(l, seed)| glauber_replica(cfg, &region, &times, l, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let path = cfg.out.join("death_times.csv");
    let mut w = csv::Writer::from_path(&path).map_err(runtime)?;
    for r in &rows {
        w.serialize(r).map_err(runtime)?;
        match (r.death_scaled, &r.error) {
            (Some(d), _) => println!("L = {} seed = {}: death_time / L^2 = {d}", r.l, r.seed),
            (None, Some(e)) => println!("L = {} seed = {}: {e}", r.l, r.seed),
            (None, None) => {}
        }
    }
    w.flush().map_err(runtime)?;
    println!("wrote {}", path.display());
    if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
        return Err(runtime(format!(
            "L = {} seed = {}: {}",
            r.l,
            r.seed,
            r.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(())
}

fn write_convergence(path: &Path, table: &ConvergenceTable) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    for r in &table.rows {
        w.serialize(r).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn print_scales(scales: &[ScaleSummary]) {
    for s in scales {
        println!(
            "L = {}: pass {}/{} ({}), mean max hausdorff {}, mean death / L^2 {}",
            s.l,
            s.passed,
            s.replicas,
            if s.meets_threshold { "meets threshold" } else { "below threshold" },
            s.mean_max_hausdorff.map_or("-".into(), |h| format!("{h:.4}")),
            s.mean_death_scaled.map_or("-".into(), |d| format!("{d:.4}")),
        );
    }
}

/// The full stochastic-versus-deterministic comparison.
pub fn cmd_compare(cfg: &Config) -> Result<(), CliError> {
    prepare_out(cfg)?;
    let plot_dir = cfg.out.join("plot");
    if cfg.emit_plot_data {
        std::fs::create_dir_all(&plot_dir).map_err(runtime)?;
    }
    let first = (cfg.scales[0], cfg.seed);
    let failures = Mutex::new(Vec::<String>::new());
    let observe = |v: &CheckpointView<'_>| {
        if !cfg.emit_plot_data {
            return;
        }
        let mut files: Vec<(PathBuf, String)> = vec![(
            plot_dir.join(format!("droplet_L{}_s{}_c{}.txt", v.l, v.seed, v.checkpoint)),
            boundary_text(v.droplet),
        )];
        if let (Some(domain), true) = (v.domain, (v.l, v.seed) == first) {
            files.push((plot_dir.join(format!("domain_c{}.txt", v.checkpoint)), boundary_text(domain)));
        }
        for (path, text) in files {
            if let Err(e) = std::fs::write(&path, text) {
                failures.lock().unwrap().push(format!("{}: {e}", path.display()));
            }
        }
    };
    let report = run_experiment_with(&cfg.plan(), observe).map_err(runtime)?;
    if let Some(e) = failures.into_inner().unwrap().first() {
        return Err(runtime(e));
    }
    let files = write_report(&cfg.out, &report).map_err(runtime)?;
    if let Some(e) = &report.flow_error {
        println!("flow solver failed: {e}");
    }
    print_scales(&report.scales);
    println!("wrote {}", files.csv.display());
    println!("wrote {}", files.json.display());
    if report.scales.len() >= 2 {
        let table = convergence_table(&report).map_err(runtime)?;
        let path = cfg.out.join(format!("convergence_{}.csv", &report.config_hash[..12]));
        write_convergence(&path, &table)?;
        println!(
            "hausdorff decreasing in L: {}; pass fraction nondecreasing in L: {}",
            table.hausdorff_monotone, table.pass_fraction_monotone
        );
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Reaggregated {
    rows: usize,
    pass_threshold: f64,
    t_area: Option<f64>,
    scales: Vec<ScaleSummary>,
    convergence: Option<ConvergenceTable>,
}

/// Re-aggregate a report CSV; prints JSON and optionally writes it to `out`.
pub fn cmd_report(rows_path: &Path, pass_threshold: f64, out: Option<&Path>) -> Result<(), CliError> {
    if !(pass_threshold > 0.0 && pass_threshold <= 1.0) {
        return Err(CliError::Config(format!(
            "pass threshold must lie in (0, 1], got {pass_threshold}"
        )));
    }
    if !rows_path.is_file() {
        return Err(CliError::Config(format!("no such report file {}", rows_path.display())));
    }
    let rows = read_rows(rows_path).map_err(runtime)?;
    let scales = aggregate(&rows, pass_threshold);
    let t_area = rows.first().map(|r| r.t_area);
    let convergence = match t_area {
        Some(t) if scales.len() >= 2 => Some(convergence_from_scales(&scales, t).map_err(runtime)?),
        _ => None,
    };
    let summary = Reaggregated {
        rows: rows.len(),
        pass_threshold,
        t_area,
        scales,
        convergence,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(runtime)? + "\n";
    print!("{json}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(runtime)?;
        let stem = rows_path
            .file_stem()
            .map_or("report".into(), |s| s.to_string_lossy().into_owned());
        std::fs::write(dir.join(format!("aggregate_{stem}.json")), json).map_err(runtime)?;
    }
    Ok(())
}
