use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gle-memlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const SMALL: [&str; 5] = [
    "blocksize-study",
    "--blocks",
    "4,8,16",
    "--quad-nodes",
    "256",
];

#[test]
fn blocksize_csv_on_stdout() {
    let out = run(&SMALL);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,coordinate,value,bound,method,imag_residual")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "blocksize");
    assert_eq!(first[1], "4.0000000000000000e0");
    assert!(first[2].parse::<f64>().unwrap() <= first[3].parse::<f64>().unwrap());
    assert!(text.contains("blocksize:exponent,"));
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let a = run(&SMALL).stdout;
    let b = bin()
        .args(SMALL)
        .env("GLE_MEMLAB_THREADS", "1")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(a, b);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "blocks = 2^2..2^4\nquad_nodes = 256\nkappa1 = 1.0\nkappa2 = 0.0\n",
    )
    .unwrap();
    let out_path = dir.path().join("study.csv");
    let out = run(&[
        "blocksize-study",
        "--config",
        cfg.to_str().unwrap(),
        "--kappa1",
        "2.0",
        "--out",
        out_path.to_str().unwrap(),
        "--gnuplot",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    // bound (2 kappa1 + 4 kappa2)/M with the flag's kappa1 = 2 at M = 4
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3].parse::<f64>().unwrap(), 1.0);
    let script = fs::read_to_string(out_path.with_extension("gp")).unwrap();
    assert!(script.contains("study.csv"));
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        vec!["blocksize-study", "--kappa2", "-5"],
        vec!["blocksize-study", "--blocks", "3,5,7"],
        vec!["spatial-decay", "--jmax", "3"],
        vec!["time-decay", "--tmin", "5", "--tmax", "1"],
        vec!["blocksize-study", "--quad-nodes", "1000"],
        vec!["blocksize-study", "--gnuplot"],
        vec!["blocksize-study", "--config", "/nonexistent/cfg"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = bin()
        .args(SMALL)
        .env("GLE_MEMLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spatial_and_time_reports() {
    let out = run(&["spatial-decay", "--quad-nodes", "512", "--jmax", "12"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.starts_with("spatial,")).count(),
        13
    );
    assert!(text.contains("spatial:rate,"));

    let out = run(&[
        "time-decay",
        "--blocks",
        "16",
        "--quad-nodes",
        "256",
        "--tmax",
        "40",
        "--tsteps",
        "801",
        "--atoms",
        "1024",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let spectral: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("time,") && l.contains(",spectral,"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let dense: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("time,") && l.contains(",dense,"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(spectral.len(), 801);
    assert_eq!(dense.len(), 801);
    // finite-ring effects grow with t; at t = 0 the two paths must agree
    assert!((spectral[0] - dense[0]).abs() < 1e-8);
    assert!(text.contains("time:exponent,") && text.contains("time:sp-prefactor,"));
}

#[test]
fn validate_fast_and_fault_injection() {
    let clean = run(&["validate", "--fast"]);
    assert_eq!(
        clean.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&clean.stdout)
    );
    let faulty = run(&["validate", "--fast", "--inject-fault"]);
    assert_eq!(faulty.status.code(), Some(1));
    let text = String::from_utf8(faulty.stdout).unwrap();
    assert!(text.contains("FAIL interlacing-simplicity"));
}
