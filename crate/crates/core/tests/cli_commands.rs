use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use droplet::flow::{read_metadata, ShapeSpec};
use droplet::glauber::SpinLattice;
use droplet::geometry::io::{read_cells, CurveSnapshot};
use droplet::harness::read_rows;

fn droplet(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_droplet"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn flow_disk_shrink_time() {
    let tmp = tempfile::tempdir().unwrap();
    let o = droplet(tmp.path(), &["flow", "--shape", "disk:0.4", "--n", "512", "--out", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = read_metadata(&tmp.path().join("run")).unwrap();
    assert!((meta.t_observed - 0.2513).abs() < 1e-3, "{}", meta.t_observed);
    assert_eq!(meta.n, 512);
    // only the output directory was touched
    assert_eq!(files_in(tmp.path()), vec!["run"]);
}

#[test]
fn flow_star_starts_with_negative_curvature() {
    let tmp = tempfile::tempdir().unwrap();
    let o = droplet(
        tmp.path(),
        &["flow", "--shape", "star:0.5,0.2,6", "--n", "256", "--checkpoints", "0.1", "--out", "star"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = read_metadata(&tmp.path().join("star")).unwrap();
    assert_eq!(meta.snapshots[0].1, 0.0);
    assert!(meta.snapshots.iter().any(|(_, t)| *t == 0.1));
    let first = CurveSnapshot::read(&tmp.path().join("star").join(&meta.snapshots[0].0)).unwrap();
    assert!(first.curvature.iter().any(|&k| k < 0.0));
    assert!(first.curvature.iter().any(|&k| k > 0.0));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = droplet(tmp.path(), &["flow", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`shape`"), "{}", stderr(&o));

    let o = droplet(tmp.path(), &["glauber", "--shape", "disk:0.4", "--L", "8", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("below"), "{}", stderr(&o));

    let o = droplet(tmp.path(), &["compare", "--shape", "disk:0.4", "--L", "", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));

    let o = droplet(tmp.path(), &["compare", "--shape", "disk:0.4", "--set", "colour=red", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`colour`"));

    let o = droplet(tmp.path(), &["shapes", "--shape", "disk:2", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(files_in(tmp.path()).is_empty());
}

#[test]
fn glauber_files_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "glauber", "--shape", "disk:0.4", "--L", "128", "--seed", "7", "--checkpoints", "0.1,0.2",
            "--out", out,
        ]
    };
    let o = droplet(tmp.path(), &args("a"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = tmp.path().join("a");
    assert_eq!(
        files_in(&a),
        vec!["config.txt", "death_times.csv", "droplet_L128_s7_c0.txt", "droplet_L128_s7_c1.txt"]
    );
    let c0 = read_cells(&a.join("droplet_L128_s7_c0.txt")).unwrap();
    let c1 = read_cells(&a.join("droplet_L128_s7_c1.txt")).unwrap();
    assert_eq!(c0.scale(), 128);
    assert!(c1.len() < c0.len());

    let o = droplet(tmp.path(), &args("b"));
    assert_eq!(o.status.code(), Some(0));
    let mut with_log = args("c");
    with_log.push("--event-log");
    let o = droplet(tmp.path(), &with_log);
    assert_eq!(o.status.code(), Some(0));
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for f in ["death_times.csv", "droplet_L128_s7_c0.txt", "droplet_L128_s7_c1.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap(), "{f}");
    }
    // the log replays every flip down to the empty droplet
    let log = fs::read_to_string(c.join("events_L128_s7.txt")).unwrap();
    let net: i64 = log
        .lines()
        .map(|l| l.split(' ').nth(4).unwrap().parse::<i64>().unwrap())
        .sum();
    let region = ShapeSpec::disk(0.4, 1024).region().unwrap();
    let initial = SpinLattice::init_from_region(128, &region).unwrap().minus_count();
    assert_eq!(net, initial as i64);
    let last_t: f64 = log.lines().last().unwrap().split(' ').next().unwrap().parse().unwrap();
    let deaths = fs::read_to_string(a.join("death_times.csv")).unwrap();
    let row = deaths.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(2).unwrap().parse::<f64>().unwrap(), last_t);
}

fn compare_args(out: &str) -> Vec<String> {
    [
        "compare", "--shape", "disk:0.3", "--n", "256", "--L", "16,32", "--replicas", "2", "--eta", "0.1",
        "--emit-plot-data", "--out", out,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn find(dir: &Path, prefix: &str) -> PathBuf {
    files_in(dir)
        .into_iter()
        .find(|f| f.starts_with(prefix))
        .map(|f| dir.join(f))
        .unwrap_or_else(|| panic!("no {prefix}* in {}", dir.display()))
}

#[test]
fn compare_report_and_reaggregation() {
    let tmp = tempfile::tempdir().unwrap();
    let args = compare_args("cmp");
    let o = droplet(tmp.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("cmp");
    let csv = find(&out, "report_");
    let json = find(&out, "summary_");
    let hash = &csv.file_stem().unwrap().to_string_lossy()["report_".len()..];
    assert_eq!(hash.len(), 12);
    assert!(json.to_string_lossy().contains(hash));
    assert!(find(&out, "convergence_").to_string_lossy().contains(hash));
    let rows = read_rows(&csv).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert!(summary["config_hash"].as_str().unwrap().starts_with(hash));
    assert_eq!(summary["scales"].as_array().unwrap().len(), 2);

    // plot data: one boundary per replica and checkpoint, one domain per checkpoint
    let plot = files_in(&out.join("plot"));
    assert_eq!(plot.iter().filter(|f| f.starts_with("droplet_")).count(), 12);
    assert_eq!(plot.iter().filter(|f| f.starts_with("domain_")).count(), 3);

    // re-aggregation reproduces the stored aggregates
    let o = droplet(
        tmp.path(),
        &["report", "--rows", csv.to_str().unwrap(), "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(again["scales"], summary["scales"]);
    assert_eq!(again["convergence"]["rows"].as_array().unwrap().len(), 2);

    // the echoed config reproduces every output byte for byte
    let echo = out.join("config.txt");
    let o = droplet(
        tmp.path(),
        &["compare", "--config", echo.to_str().unwrap(), "--out", "again"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again_dir = tmp.path().join("again");
    assert_eq!(fs::read(&csv).unwrap(), fs::read(find(&again_dir, "report_")).unwrap());
    assert_eq!(fs::read(&json).unwrap(), fs::read(find(&again_dir, "summary_")).unwrap());
}

#[test]
fn shapes_writes_curve_and_lattices() {
    let tmp = tempfile::tempdir().unwrap();
    let o = droplet(tmp.path(), &["shapes", "--shape", "ellipse:0.5,0.25", "--L", "32,64", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = tmp.path().join("s");
    assert_eq!(
        files_in(&s),
        vec!["config.txt", "initial_L32.txt", "initial_L64.txt", "shape.txt"]
    );
    let snap = CurveSnapshot::read(&s.join("shape.txt")).unwrap();
    assert_eq!(snap.points.len(), 1024);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("shrink_time"));
}
