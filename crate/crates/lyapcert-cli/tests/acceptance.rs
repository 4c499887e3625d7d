//! Acceptance criterion for the command-line contract: exit codes on a
//! scripted invocation matrix, byte-identical outputs under equal seeds, and
//! the pinned report schema. Exercises the installed binary end to end.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lyapcert"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = bin().args(args).output().expect("binary runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("lyapcert-acc-{}-{name}", std::process::id()));
    p
}

/// 10a. Exit codes: 0 all-pass, 1 certified-fail, 2 usage error, 3 numerical
///     error, on a matrix of scripted invocations.
#[test]
fn acceptance_10_exit_code_matrix() {
    let diverging = temp_path("diverging.toml");
    std::fs::write(&diverging, "dim = 1\nf = [\"x1^2\"]\n").unwrap();
    let diverging = diverging.to_str().unwrap().to_string();

    let matrix: Vec<(Vec<String>, i32)> = vec![
        // All requested certificates pass.
        (svec(&["verify", "--bundle", "ngs", "--alpha", "10000", "--checks", "hypotheses,decay"]), 0),
        (svec(&["verify", "--bundle", "friction", "--alpha", "2", "--checks", "decay", "--t-end", "10"]), 0),
        // Certified failure below the threshold.
        (svec(&["verify", "--bundle", "nonuges", "--alpha", "1", "--checks", "decay"]), 1),
        // Usage errors.
        (svec(&["verify", "--bundle", "ngs", "--alpha", "0", "--checks", "decay"]), 2),
        (svec(&["verify", "--bundle", "no-such-bundle", "--alpha", "4", "--checks", "decay"]), 2),
        (svec(&["verify", "--bundle", "friction", "--alpha", "0.5", "--checks", "decay"]), 2),
        (svec(&["verify", "--bundle", "ngs", "--alpha", "100", "--checks", "bogus"]), 2),
        (svec(&["verify", "--bundle", "ngs", "--alpha", "100", "--checks", "iss"]), 2),
        (svec(&["sweep", "--bundle", "friction", "--alpha-min", "8", "--alpha-max", "4"]), 2),
        (svec(&["simulate", "--bundle", "nonuges", "--alpha", "400", "--x0", "1,2", "--t-end", "5"]), 2),
        (svec(&["simulate", "--bundle", "nonuges", "--alpha", "400", "--x0", "abc", "--t-end", "5"]), 2),
        // Sweep that never certifies within its grid.
        (svec(&["sweep", "--bundle", "nonuges", "--alpha-min", "1", "--alpha-max", "4", "--ics", "2", "--t-end", "1.5"]), 1),
        // Numerical failure: the custom dynamics blow up in finite time.
        (svec(&["simulate", "--bundle", &diverging, "--alpha", "1", "--x0", "3", "--t-end", "5"]), 3),
        (svec(&["list-bundles"]), 0),
    ];
    assert!(matrix.len() >= 12);
    for (args, want) in &matrix {
        let arg_refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let (code, _out, err) = run(&arg_refs);
        assert_eq!(code, *want, "args {args:?} gave {code}, wanted {want}; stderr: {err}");
    }
    std::fs::remove_file(&diverging).ok();
    println!("acceptance 10a exit-code-matrix: PASS ({} invocations)", matrix.len());
}

fn svec(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

/// 10b. Equal seeds give byte-identical CSVs, for sweeps and simulations;
///     the satfb sweep shows a monotone tail of passes.
#[test]
fn acceptance_10_determinism_and_monotone_tail() {
    let a = temp_path("sweep-a.csv");
    let b = temp_path("sweep-b.csv");
    for path in [&a, &b] {
        let (code, out, err) = run(&[
            "sweep", "--bundle", "satfb", "--alpha-min", "1", "--alpha-max", "65536",
            "--ics", "5", "--t-end", "2", "--seed", "42", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
        assert!(out.contains("threshold: 64"), "stdout: {out}");
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b, "sweep CSVs differ between identical runs");

    let text = String::from_utf8(bytes_a).unwrap();
    let verdicts: Vec<bool> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap() == "true")
        .collect();
    let first_pass = verdicts.iter().position(|&p| p).expect("some alpha certified");
    assert!(verdicts[first_pass..].iter().all(|&p| p), "pass tail not monotone: {verdicts:?}");

    let c = temp_path("traj-a.csv");
    let d = temp_path("traj-b.csv");
    for path in [&c, &d] {
        let (code, _out, err) = run(&[
            "simulate", "--bundle", "nonuges", "--alpha", "400", "--x0", "1", "--t-end", "8",
            "--seed", "42", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    let bytes_c = std::fs::read(&c).unwrap();
    assert_eq!(bytes_c, std::fs::read(&d).unwrap(), "trajectory CSVs differ");

    // The certified construction decays along the run: V_alpha nonincreasing
    // outside the stop ball.
    let text = String::from_utf8(bytes_c).unwrap();
    let mut rows = text.lines();
    let header = rows.next().unwrap();
    assert_eq!(header, "t,x_1,V_alpha,Vdot_alpha");
    let mut prev_v: Option<f64> = None;
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let (x, v) = (cols[1], cols[2]);
        if x.abs() <= 1e-4 {
            break;
        }
        if let Some(pv) = prev_v {
            assert!(v <= pv + 1e-9, "V rose from {pv} to {v} at t={}", cols[0]);
        }
        prev_v = Some(v);
    }
    for p in [a, b, c, d] {
        std::fs::remove_file(p).ok();
    }
    println!("acceptance 10b determinism: PASS");
}

/// 10c. Report schema: every line carries exactly the pinned keys in the
///     pinned order, and reruns with the same seed are byte-identical.
#[test]
fn acceptance_10_report_schema_golden() {
    let a = temp_path("report-a.ndjson");
    let b = temp_path("report-b.ndjson");
    for path in [&a, &b] {
        let (code, _out, err) = run(&[
            "verify", "--bundle", "nonuges", "--alpha", "300", "--checks", "decay",
            "--seed", "42", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap(), "report files differ");

    let text = String::from_utf8(bytes).unwrap();
    let golden_keys =
        ["artifact_version", "bundle", "alpha", "check_name", "passed", "worst_margin", "worst_point", "seed"];
    let mut lines = 0;
    for line in text.lines() {
        lines += 1;
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        let map = value.as_object().unwrap();
        assert_eq!(map.len(), golden_keys.len(), "unexpected key count in {line}");
        for key in golden_keys {
            assert!(map.contains_key(key), "missing {key} in {line}");
        }
        // Field order is part of the contract.
        let mut at = 0;
        for key in golden_keys {
            let pos = line.find(&format!("\"{key}\":")).unwrap();
            assert!(pos >= at, "key {key} out of order in {line}");
            at = pos;
        }
        assert!(line.starts_with("{\"artifact_version\":"));
    }
    assert!(lines >= 1);
    for p in [a, b] {
        std::fs::remove_file(p).ok();
    }
    println!("acceptance 10c report-schema: PASS");
}

/// Custom description files drive the same pipelines: simulation always
/// works, hypothesis checks run, and route-dependent checks are refused
/// cleanly when the description lacks limiting dynamics.
#[test]
fn custom_description_pipeline() {
    let path = temp_path("custom.toml");
    std::fs::write(
        &path,
        r#"
name = "slow-fade"
dim = 1
f = ["-x1 + 0.2*sin(tau)*x1"]
fbar = ["-x1"]
v = "x1^2/2"
delta = "3*s"
c_bar = 0.1
c_bbar = 3.0
jacobian_bound = 2.0
"#,
    )
    .unwrap();
    let spec = path.to_str().unwrap();

    let out = temp_path("custom-traj.csv");
    let (code, _o, err) = run(&[
        "simulate", "--bundle", spec, "--alpha", "50", "--x0", "1.5", "--t-end", "4",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,x_1,V_alpha,Vdot_alpha\n"));

    let (code, _o, err) = run(&["verify", "--bundle", spec, "--alpha", "50", "--checks", "hypotheses,decay"]);
    assert_eq!(code, 0, "stderr: {err}");

    // Without limiting dynamics the decay route is refused as usage error.
    let bare = temp_path("custom-bare.toml");
    std::fs::write(&bare, "dim = 1\nf = [\"-x1\"]\n").unwrap();
    let (code, _o, _e) = run(&["verify", "--bundle", bare.to_str().unwrap(), "--alpha", "5", "--checks", "decay"]);
    assert_eq!(code, 2);

    for p in [path, out, bare] {
        std::fs::remove_file(p).ok();
    }
}

/// Starting at the origin keeps every state column identically zero.
#[test]
fn simulate_zero_start_stays_zero() {
    let out = temp_path("zero.csv");
    let (code, _o, err) = run(&[
        "simulate", "--bundle", "identification", "--alpha", "64", "--x0", "0,0",
        "--t-end", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let text = std::fs::read_to_string(&out).unwrap();
    for row in text.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1], "0.0000000000000000e0");
        assert_eq!(cols[2], "0.0000000000000000e0");
    }
    std::fs::remove_file(out).ok();
}

/// Divergence flushes the partial table and marks it.
#[test]
fn simulate_divergence_flushes_partial_csv() {
    let desc = temp_path("blowup.toml");
    std::fs::write(&desc, "dim = 1\nf = [\"x1^2\"]\n").unwrap();
    let out = temp_path("blowup.csv");
    let (code, _o, _e) = run(&[
        "simulate", "--bundle", desc.to_str().unwrap(), "--alpha", "1", "--x0", "3",
        "--t-end", "5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.ends_with("# diverged\n"));
    assert!(text.lines().count() > 2, "partial rows missing");
    for p in [desc, out] {
        std::fs::remove_file(p).ok();
    }
}
