use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn replikit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replikit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse_rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn states(rows: &[Vec<String>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r[4..].iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn large_step_run_stays_on_the_simplex() {
    let out = replikit(&["simulate", "--model", "rps3", "--scheme", "rational", "--h", "0.5", "--T", "100", "--x0", "0.6,0.3,0.1"]);
    assert!(out.status.success());
    let (header, rows) = parse_rows(&stdout(&out));
    assert_eq!(header, ["t", "h", "eps", "accepted", "x1", "x2", "x3"]);
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r[2].is_empty() && r[3] == "1"));
    for x in states(&rows) {
        assert!(x.iter().all(|v| *v >= 0.0));
        assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
    }
    assert_eq!(rows.last().unwrap()[0].parse::<f64>().unwrap(), 100.0);
}

#[test]
fn corner_start_is_constant() {
    let out = replikit(&["simulate", "--model", "rps3", "--x0", "1,0,0", "--h", "3", "--T", "9"]);
    assert!(out.status.success());
    let (_, rows) = parse_rows(&stdout(&out));
    assert_eq!(rows.len(), 4);
    assert!(states(&rows).iter().all(|x| x == &[1.0, 0.0, 0.0]));
}

#[test]
fn adaptive_rows_accept_only_small_errors() {
    let out = replikit(&[
        "simulate", "--model", "tanh5", "--theta", "1", "--mode", "adaptive", "--tol", "1e-7", "--T", "10",
        "--classic-pi",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_rows(&stdout(&out));
    assert_eq!(header.len(), 9);
    for r in &rows[1..] {
        let eps: f64 = r[2].parse().unwrap();
        assert_eq!(r[3] == "1", eps <= 1.0);
    }
    assert_eq!(rows.last().unwrap()[0].parse::<f64>().unwrap(), 10.0);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = replikit(&[
            "simulate", "--model", "trig6", "--mode", "adaptive", "--tol", "1e-5", "--T", "2", "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn convergence_table_columns() {
    let out = replikit(&["converge", "--h-max-exp", "4", "--h-min-exp", "8"]);
    assert!(out.status.success());
    let (header, rows) = parse_rows(&stdout(&out));
    assert_eq!(header, ["h", "e2_rational", "p_hat_rational", "e2_auxiliary", "p_hat_auxiliary"]);
    assert_eq!(rows.len(), 5);
    assert!(rows[0][2].is_empty() && rows[0][4].is_empty());
    let p: f64 = rows[4][2].parse().unwrap();
    let q: f64 = rows[4][4].parse().unwrap();
    assert!((1.9..=2.1).contains(&p) && (0.9..=1.1).contains(&q));

    let out = replikit(&["converge", "--scheme", "rational", "--h-max-exp", "5", "--h-min-exp", "5"]);
    let (header, rows) = parse_rows(&stdout(&out));
    assert_eq!(header, ["h", "e2", "p_hat"]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][2].is_empty());
}

#[test]
fn residual_of_an_equilibrium_is_zero() {
    let out = replikit(&["residual", "--model", "rps3", "--x0", "0.25,0.25,0.5", "--h-min-exp", "5", "--T", "1"]);
    assert!(out.status.success());
    let (_, rows) = parse_rows(&stdout(&out));
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0));

    let third = (1.0f64 / 3.0).to_string();
    let x0 = format!("{third},{third},{third}");
    let out = replikit(&["residual", "--model", "rps3", "--x0", &x0, "--h-min-exp", "5", "--T", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = parse_rows(&stdout(&out));
    assert_eq!(header, ["h", "r_q", "rho"]);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn equilibrium_files_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let out = replikit(&["equilibrium", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning: euler"), "{stderr}");

    let read = |name: &str| -> Vec<f64> {
        let text = fs::read_to_string(Path::new(dir.path()).join(name)).unwrap();
        let (header, rows) = parse_rows(&text);
        assert_eq!(header, ["t", "d_star"]);
        rows.iter().map(|r| r[1].parse().unwrap()).collect()
    };
    let rational = read("equilibrium_rational.csv");
    assert_eq!(rational.len(), 176);
    assert!(rational.iter().all(|d| *d <= 1e-10));
    assert!(read("equilibrium_euler.csv").iter().any(|d| *d > 1e-3));
    assert!(read("equilibrium_heun.csv").iter().any(|d| *d > 1e-3));
    assert_eq!(read("equilibrium_rk4.csv").len(), 176);
}

#[test]
fn payoff_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rps.txt");
    fs::write(&path, "3\n0 -1 1\n1 0 -1\n-1 1 0\n").unwrap();
    let model = format!("payoff:{}", path.display());
    let from_file = replikit(&["simulate", "--model", &model, "--x0", "0.6,0.3,0.1", "--h", "0.25", "--T", "2"]);
    let builtin = replikit(&["simulate", "--model", "rps3", "--x0", "0.6,0.3,0.1", "--h", "0.25", "--T", "2"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, builtin.stdout);

    fs::write(&path, "3\n0 -1\n").unwrap();
    let out = replikit(&["simulate", "--model", &model, "--h", "0.25", "--T", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--model"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let cases: [&[&str]; 6] = [
        &["simulate", "--x0", "0.5,0.5", "--h", "1", "--T", "2"],
        &["simulate", "--x0", "0.5,0.6,0.1", "--h", "1", "--T", "2"],
        &["simulate", "--model", "nope", "--h", "1", "--T", "2"],
        &["simulate", "--T", "2"],
        &["simulate", "--mode", "adaptive", "--scheme", "heun", "--tol", "1e-4", "--T", "2"],
        &["simulate", "--model", "rps3", "--theta", "2", "--h", "1", "--T", "2"],
    ];
    let fields = ["--x0", "--x0", "--model", "--h", "--scheme", "--theta"];
    for (args, field) in cases.iter().zip(fields) {
        let out = replikit(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn numerical_failures_exit_with_three() {
    let out = replikit(&["simulate", "--model", "nonlinear3", "--scheme", "euler", "--h", "0.2", "--T", "35"]);
    assert_eq!(out.status.code(), Some(3));
    // The partial trajectory is still written, and only as CSV.
    let (header, rows) = parse_rows(&stdout(&out));
    assert_eq!(header[0], "t");
    assert!(rows.len() > 1 && rows.len() < 176);

    let out = replikit(&["residual", "--model", "rps3", "--x0", "0,0.5,0.5", "--h-min-exp", "5", "--T", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vanished"));
}

#[test]
fn thread_limit_is_validated() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_replikit"))
            .args(["converge", "--h-max-exp", "4", "--h-min-exp", "6"])
            .env("REPLIKIT_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(2));
    let one = run("1");
    assert!(one.status.success());
    assert_eq!(one.stdout, run("2").stdout);
}
