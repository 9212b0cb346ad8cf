use qotgraph::cli::run;
use std::path::Path;

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("qotgraph").chain(list.iter().copied()).map(String::from).collect()
}

fn data_lines(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(String::from);
    assert_eq!(lines.next().as_deref(), Some("#schema=1"));
    lines.skip(1).collect()
}

const SUBCOMMANDS: [&str; 6] =
    ["solve", "sphere-scaling", "torus-laplacian", "circle-exact", "constraint-validity", "pme-compare"];

#[test]
fn help_exits_zero_everywhere() {
    assert_eq!(run(args(&["--help"])), 0);
    assert_eq!(run(args(&["--version"])), 0);
    for sub in SUBCOMMANDS {
        assert_eq!(run(args(&[sub, "--help"])), 0, "{sub}");
    }
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(run(args(&["sphere-scaling", "--eps", "1"])), 1);
    assert_eq!(run(args(&["pme-compare"])), 1);
    assert_eq!(run(args(&["frobnicate"])), 1);
    assert_eq!(run(args(&["sphere-scaling", "--eps", "1", "--bogus", "--out", out])), 1);
    assert_eq!(run(args(&["sphere-scaling", "--eps", "1", "--eps-min", "1", "--out", out])), 1);
    assert_eq!(run(args(&["sphere-scaling", "--d", "4", "--eps", "1", "--out", out])), 1);
    assert_eq!(run(args(&["torus-laplacian", "--alpha", "1.2", "--weights", "magic", "--out", out])), 1);
    assert_eq!(run(args(&["torus-laplacian", "--alpha", "1.2", "--function", "cubic", "--out", out])), 1);
    assert_eq!(run(args(&["solve", "--eps=-1", "--out", out])), 1);
    assert_eq!(run(args(&["pme-compare", "--out", "/nonexistent-dir/x.csv"])), 1);
    assert_eq!(run(args(&["--threads", "0", "pme-compare", "--out", out])), 1);
}

#[test]
fn failed_single_solve_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.csv");
    let code = run(args(&["solve", "--n", "60", "--eps", "1e-6", "--max-iter", "0", "--out", out.to_str().unwrap()]));
    assert_eq!(code, 2);
}

#[test]
fn solve_writes_symmetric_triplets_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.csv");
    let report = dir.path().join("report.json");
    let code = run(args(&[
        "solve", "--n", "80", "--eps", "3", "--out", out.to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut entries = std::collections::HashMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        entries.insert((f[0].to_string(), f[1].to_string()), f[2].to_string());
    }
    for ((i, j), v) in &entries {
        assert_eq!(entries.get(&(j.clone(), i.clone())), Some(v));
    }
    let json = std::fs::read_to_string(report).unwrap();
    assert!(json.contains("\"iterations\""));
}

#[test]
fn solve_reads_points_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    let cloud = qotgraph::geometry::sample_sphere(2, 40, 3).unwrap();
    cloud.write_csv(std::fs::File::create(&pts).unwrap()).unwrap();
    let out = dir.path().join("plan.csv");
    let code = run(args(&["solve", "--points", pts.to_str().unwrap(), "--eps", "2", "--out", out.to_str().unwrap()]));
    assert_eq!(code, 0);
    std::fs::write(&pts, "idx,x0,x1,x2\n0,1,1,1\n").unwrap();
    let code = run(args(&["solve", "--points", pts.to_str().unwrap(), "--eps", "2", "--out", out.to_str().unwrap()]));
    assert_eq!(code, 1);
}

#[test]
fn sphere_scaling_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2.csv");
    let code = run(args(&[
        "sphere-scaling", "--d", "2", "--n", "1000", "--eps-min", "1e-3", "--eps-max", "1e5", "--eps-count", "30",
        "--seed", "42", "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().nth(1), Some("d,N,epsilon,mean_potential,seed,status"));
    assert_eq!(data_lines(&out).len(), 30);
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let run_with = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let code = run(args(&[
            "--threads", threads, "torus-laplacian", "--n", "150,200", "--alpha", "1.25,1.5", "--repeats", "2",
            "--seed", "11", "--out", out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
        std::fs::read_to_string(out).unwrap()
    };
    let a = run_with("1", "a.csv");
    let b = run_with("3", "b.csv");
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2 + 2 * 2 * 2);
}

#[test]
fn failing_cells_still_produce_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let code = run(args(&[
        "sphere-scaling", "--n", "50,60", "--eps", "0.1,1,10", "--max-iter", "0", "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.contains("nonconvergence")));
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let from_cfg = dir.path().join("cfg.csv");
    std::fs::write(
        &cfg,
        format!("# circle study\nn = 500\nneighbors = 5,10\nout = {}\n", from_cfg.display()),
    )
    .unwrap();
    assert_eq!(run(args(&["circle-exact", "--config", cfg.to_str().unwrap()])), 0);
    let rows = data_lines(&from_cfg);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("500,")));
    assert_eq!(run(args(&["circle-exact", "--config", cfg.to_str().unwrap(), "--n", "600"])), 0);
    assert!(data_lines(&from_cfg).iter().all(|r| r.starts_with("600,")));
    std::fs::write(&cfg, "n 500\n").unwrap();
    assert_eq!(run(args(&["circle-exact", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn circle_and_validity_headers() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.csv");
    let v = dir.path().join("v.csv");
    assert_eq!(run(args(&["circle-exact", "--n", "200", "--eps", "5", "--out", c.to_str().unwrap()])), 0);
    assert_eq!(
        run(args(&["constraint-validity", "--n", "300", "--alpha", "1.2,2.5", "--repeats", "3", "--out", v.to_str().unwrap()])),
        0
    );
    let header = |p: &Path| std::fs::read_to_string(p).unwrap().lines().nth(1).unwrap().to_string();
    assert!(header(&c).starts_with("N,epsilon,k_exact,y_exact,y_closed,rel_err,status"));
    assert_eq!(header(&v), "d,N,epsilon,repeat,empirical,leading,correction,status");
    let rows = data_lines(&v);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| r.ends_with("-inadmissible")).count(), 3);
}
