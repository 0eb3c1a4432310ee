use std::path::Path;
use std::process::Command;

use rcr::cli::{main_with_args, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["rcr"];
    v.extend_from_slice(args);
    main_with_args(v)
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"params":{"d":1,"N":3,"beta":1.0,"h":0.1,"rho":0.2,"lambda":0.3,"couplings":[{"displacement":[0],"J":1.0}]}}"#,
    )
    .unwrap();
    assert_eq!(
        run(&[
            "estimate",
            "--config",
            s(&bad),
            "--observable",
            "sz",
            "--points",
            "0:0.5"
        ]),
        EXIT_USAGE
    );
    assert_eq!(run(&["no-such-command"]), EXIT_USAGE);
    assert_eq!(
        run(&["estimate", "--observable", "sideways", "--seed", "1"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(&["estimate", "--observable", "szsz", "--points", "0:0.5", "--seed", "1"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(&["percolation", "--beta", "1.0", "--delta", "0.3", "--seed", "1"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(&["oracle", "--observable", "sz", "--points", "7:0.5", "--seed", "1"]),
        EXIT_USAGE
    );
}

#[test]
fn verify_switching_lists_equal_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw.csv");
    assert_eq!(
        run(&["verify-switching", "--instances", "30", "--seed", "4", "-o", s(&out)]),
        EXIT_PASS
    );
    let rs = rows(&out);
    assert_eq!(rs.len(), 150);
    assert!(rs.iter().all(|r| r[2] == r[3]));
}

#[test]
fn diffineq_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("di.csv");
    assert_eq!(run(&["diffineq", "--seed", "1", "-o", s(&out)]), EXIT_PASS);
    let rs = rows(&out);
    assert_eq!(rs.len(), 27);
    assert!(rs.iter().all(|r| &r[12] == "true"));
}

#[test]
fn failed_check_exits_1() {
    // Marks this rare leave no positive frequency to fit.
    let args = [
        "percolation",
        "--n",
        "6",
        "--beta",
        "1.0",
        "--lambda",
        "0.0001",
        "--nsamples",
        "50",
        "--seed",
        "1",
    ];
    assert_eq!(run(&args), EXIT_FAIL);
    assert_eq!(
        run(&[
            "percolation",
            "--n",
            "6",
            "--beta",
            "1.0",
            "--lambda",
            "0.0",
            "--nsamples",
            "50",
            "--seed",
            "1"
        ]),
        EXIT_PASS
    );
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let code = run(&[
            "estimate",
            "--observable",
            "trunc_zx",
            "--points",
            "0:0.2;1:0.6",
            "--nsamples",
            "2000",
            "--seed",
            "9",
            "-o",
            s(out),
        ]);
        assert_eq!(code, EXIT_PASS);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn appending_other_params_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let base = [
        "estimate",
        "--observable",
        "sz",
        "--points",
        "0:0.5",
        "--nsamples",
        "500",
        "--seed",
        "2",
        "-o",
        s(&out),
    ];
    assert_eq!(run(&base), EXIT_PASS);
    assert_eq!(run(&base), EXIT_PASS);
    assert_eq!(rows(&out).len(), 2);
    let mut other = base.to_vec();
    other.extend(["--h", "0.9"]);
    assert_eq!(run(&other), EXIT_USAGE);
    assert_eq!(rows(&out).len(), 2);
}

fn scan_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "scan",
        "--observable",
        "sz",
        "--points",
        "0:0.5",
        "--h-values",
        "0.2,0.5,1.0",
        "--rho-values",
        "0.3,0.6,0.9",
        "--nsamples",
        "400",
        "--seed",
        "3",
        "-o",
        out,
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn scan_writes_grid_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    assert_eq!(run(&scan_args(s(&full), &[])), EXIT_PASS);
    assert_eq!(rows(&full).len(), 9);
    assert_eq!(run(&scan_args(s(&full), &[])), EXIT_PASS);
    assert_eq!(rows(&full).len(), 9);

    let partial = dir.path().join("partial.csv");
    let text = std::fs::read_to_string(&full).unwrap();
    let head: Vec<&str> = text.lines().take(5).collect();
    std::fs::write(&partial, head.join("\n") + "\n").unwrap();
    assert_eq!(run(&scan_args(s(&partial), &[])), EXIT_PASS);
    assert_eq!(std::fs::read_to_string(&partial).unwrap(), text);

    // A different scan may not resume into this file.
    assert_eq!(run(&scan_args(s(&full), &["--lambda", "0.7"])), EXIT_USAGE);
}

#[test]
fn single_point_scan_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let (sc, est) = (dir.path().join("scan.csv"), dir.path().join("est.csv"));
    let common = [
        "--observable",
        "szsz",
        "--points",
        "0:0.1;2:0.4",
        "--nsamples",
        "800",
        "--seed",
        "6",
    ];
    let mut a = vec!["scan", "--h-values", "0.4"];
    a.extend(common);
    a.extend(["-o", s(&sc)]);
    assert_eq!(run(&a), EXIT_PASS);
    let mut b = vec!["estimate"];
    b.extend(common);
    b.extend(["-o", s(&est)]);
    assert_eq!(run(&b), EXIT_PASS);
    let (r1, r2) = (rows(&sc), rows(&est));
    assert_eq!(r1.len(), 1);
    assert_eq!((&r1[0][6], &r1[0][7]), (&r2[0][2], &r2[0][3]));
    assert_eq!(&r1[0][10], &r2[0][6]);
}

#[test]
fn binary_reads_seed_from_environment() {
    let exe = env!("CARGO_BIN_EXE_rcr");
    let go = |seed: &str| {
        let out = Command::new(exe)
            .args([
                "estimate",
                "--observable",
                "sz",
                "--points",
                "0:0.5",
                "--nsamples",
                "300",
                "--json",
            ])
            .env("RCR_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        (v["seed"].as_u64().unwrap(), v["result"]["mean"].as_f64().unwrap())
    };
    let (s1, m1) = go("42");
    let (_, m2) = go("42");
    assert_eq!(s1, 42);
    assert_eq!(m1, m2);
    let bad = Command::new(exe)
        .args(["estimate", "--observable", "sz", "--points", "0:0.5"])
        .env("RCR_SEED", "nope")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
