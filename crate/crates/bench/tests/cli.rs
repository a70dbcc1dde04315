use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutcert-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn status_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .last()
        .unwrap()
        .to_string()
}

#[test]
fn zero_budget_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("z.csv");
    let out = bench(&[
        "run",
        "--n",
        "5",
        "--max-oracle-calls",
        "0",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text
        .contains("iter,oracle_calls,kind,f_best,eps_opt,d_tau,D_tau,eps_cert,two_over_d,wall_ms"));
    assert!(data_rows(&csv).is_empty());
    assert_eq!(status_line(&csv), "# status=budget_exhausted");
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("r.csv");
    fs::write(
        &cfg,
        format!(
            "method=vaidya\nn=5\nmu=0.1\nmax_oracle_calls=20\nlp_alpha=0.9\nout={}\n",
            dir.path().join("unused.csv").display()
        ),
    )
    .unwrap();
    let out = bench(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--lp-alpha",
        "0.25",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let head = fs::read_to_string(&csv).unwrap();
    assert!(head.starts_with("# method=vaidya n=5 mu=0.1 max_oracle_calls=20"));
    assert!(head.contains("lp_alpha=0.25"));
    assert!(!dir.path().join("unused.csv").exists());
    assert_eq!(data_rows(&csv).len(), 20);
}

#[test]
fn negative_mu_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("q.csv");
    let out = bench(&["run", "--mu", "-1", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!csv.exists());

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n=5\nmu=-1\n").unwrap();
    let out = bench(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    fs::write(&cfg, "n=5\nshape=round\n").unwrap();
    let out = bench(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn stalled_engine_exits_with_engine_failure() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("s.csv");
    let out = bench(&[
        "run",
        "--n",
        "5",
        "--max-oracle-calls",
        "50",
        "--vaidya-newton-steps",
        "0",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(status_line(&csv).starts_with("# status=failed"));
}

#[test]
fn csv_is_deterministic_apart_from_wall_time() {
    let dir = TempDir::new().unwrap();
    let mut runs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = dir.path().join(name);
        let out = bench(&[
            "run",
            "--n",
            "5",
            "--mu",
            "0.1",
            "--max-oracle-calls",
            "120",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        let rows: Vec<Vec<String>> = data_rows(&csv)
            .into_iter()
            .map(|mut r| {
                r.pop();
                r
            })
            .collect();
        runs.push(rows);
    }
    assert_eq!(runs[0].len(), 120);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn certificate_rows_bound_the_gap() {
    let dir = TempDir::new().unwrap();
    for method in ["vaidya", "ellipsoid"] {
        let csv = dir.path().join(format!("{method}.csv"));
        let out = bench(&[
            "run",
            "--method",
            method,
            "--n",
            "5",
            "--mu",
            "0.01",
            "--max-oracle-calls",
            "300",
            "--cert-every",
            "25",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let mut certs = 0;
        for row in data_rows(&csv) {
            assert_eq!(row.len(), 10);
            if row[7].is_empty() {
                continue;
            }
            certs += 1;
            let eps_opt: f64 = row[4].parse().unwrap();
            let eps_cert: f64 = row[7].parse().unwrap();
            let d: f64 = row[5].parse().unwrap();
            let two_over_d: f64 = row[8].parse().unwrap();
            assert!(eps_opt >= -1e-9, "{method}: {row:?}");
            assert!(eps_cert + 1e-9 >= eps_opt, "{method}: {row:?}");
            assert!((two_over_d - 2.0 / d).abs() <= 1e-12 * two_over_d.abs());
        }
        if method == "vaidya" {
            assert_eq!(certs, 12);
        } else {
            assert_eq!(certs, 0, "ellipsoid runs carry no certificates");
        }
    }
}

#[test]
fn sweep_with_a_failing_run_reports_partial_failure() {
    let dir = TempDir::new().unwrap();
    let grid = dir.path().join("grid.txt");
    let out_dir = dir.path().join("out");
    fs::write(
        &grid,
        "method=vaidya,ellipsoid\nn=4\nmu=0.1\nmax_oracle_calls=40\nvaidya_newton_steps=0\n",
    )
    .unwrap();
    let out = bench(&[
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--jobs",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("run,method,n,mu,iterations,status"));
    let vaidya = lines.iter().find(|l| l.starts_with("vaidya_n4")).unwrap();
    let ellipsoid = lines
        .iter()
        .find(|l| l.starts_with("ellipsoid_n4"))
        .unwrap();
    assert!(vaidya.contains("FAILED"));
    assert!(!ellipsoid.contains("FAILED"));
    assert!(out_dir.join("vaidya_n4_mu0.1.csv").exists());
    assert_eq!(data_rows(&out_dir.join("ellipsoid_n4_mu0.1.csv")).len(), 40);
}

#[test]
fn sweep_grid_errors_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let grid = dir.path().join("grid.txt");
    fs::write(&grid, "n=4,5\nmu=0.1,0\n").unwrap();
    let out = bench(&[
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--out-dir",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn plotscript_covers_each_run() {
    let dir = TempDir::new().unwrap();
    let grid = dir.path().join("grid.txt");
    let out_dir = dir.path().join("out");
    fs::write(
        &grid,
        "method=vaidya,ellipsoid\nn=3\nmu=0.1\nmax_oracle_calls=15\n",
    )
    .unwrap();
    let out = bench(&[
        "sweep",
        "--grid",
        grid.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let script = dir.path().join("plot.gp");
    let out = bench(&[
        "plotscript",
        "--in",
        out_dir.to_str().unwrap(),
        "--out",
        script.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&script).unwrap();
    assert_eq!(text.matches("plot \"").count(), 2);
    assert!(text.contains("vaidya_n3_mu0.1.csv"));
    assert!(text.contains("ellipsoid_n3_mu0.1.png"));
    assert!(!text.contains("summary.csv"));
}
