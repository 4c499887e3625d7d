//! Command implementations behind the CLI: verification pipelines, time-scale
//! sweeps, and trajectory export. All outputs are assembled in memory by a
//! single writer and flushed once, so equal seeds give byte-identical files.
//!
//! Exit contract: 0 all requested certificates passed, 1 a certificate
//! failed (or a sweep found no threshold), 2 usage error, 3 numerical error.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use lyapcert::bundles::{CheckKind, ExampleBundle, RunPolicy};
use lyapcert::constructors::ConstructedLyapunov;
use lyapcert::numerics::{integrate, IntegrateError, StepConfig, Trajectory};
use lyapcert::systems::{CertificateReport, SignalFn};
use lyapcert::verifiers::{fit_envelope, iiss_estimate, iss_gain_test, FitError, SweepConfig};

use crate::custom::{resolve_bundle, supported_checks};
use crate::report::{csv_row, format_f64, ReportLine, ARTIFACT_VERSION};

pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn load_bundle(spec: &str, alpha: f64) -> Result<ExampleBundle, CliError> {
    let bundle = resolve_bundle(spec).map_err(CliError::Usage)?;
    if alpha.is_nan() || alpha <= 0.0 {
        return usage(format!("alpha must be positive, got {alpha}"));
    }
    if alpha <= bundle.alpha_floor {
        return usage(format!(
            "bundle '{}' requires alpha > {}, got {alpha}",
            bundle.name, bundle.alpha_floor
        ));
    }
    Ok(bundle)
}

fn parse_checks(spec: &str, bundle: &ExampleBundle) -> Result<Vec<CheckKind>, CliError> {
    let supported = supported_checks(bundle);
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = match CheckKind::parse(part) {
            Some(k) => k,
            None => {
                return usage(format!(
                    "unknown check '{part}' (available: hypotheses, decay, iss, iiss, envelope, sweep)"
                ))
            }
        };
        if !supported.contains(&kind) {
            return usage(format!(
                "bundle '{}' does not support the '{part}' check",
                bundle.name
            ));
        }
        out.push(kind);
    }
    if out.is_empty() {
        return usage("the check list is empty");
    }
    Ok(out)
}

fn test_signal(bundle: &ExampleBundle, amplitude: f64) -> Arc<SignalFn> {
    let dim = if bundle.sys.input_map.is_some() { bundle.sys.input_dim } else { bundle.dim() };
    Arc::new(move |t: f64| (0..dim).map(|j| amplitude * (t + j as f64).sin()).collect())
}

pub struct VerifyArgs {
    pub bundle: String,
    pub alpha: f64,
    pub checks: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub ic_count: Option<usize>,
    pub t_end: Option<f64>,
}

pub fn cmd_verify(args: VerifyArgs) -> Result<i32, CliError> {
    let bundle = load_bundle(&args.bundle, args.alpha)?;
    let checks = parse_checks(&args.checks, &bundle)?;
    let policy = RunPolicy { seed: args.seed, ..RunPolicy::default() };
    let ic_count = args.ic_count.unwrap_or(bundle.ic_count);
    let t_end = args.t_end.unwrap_or(bundle.t_end_decay);

    let mut lines: Vec<ReportLine> = Vec::new();
    for check in checks {
        match check {
            CheckKind::Hypotheses => {
                for (name, report) in bundle.hypothesis_reports(&policy) {
                    lines.push(ReportLine::from_certificate(
                        &bundle.name,
                        args.alpha,
                        &format!("hypotheses/{name}"),
                        args.seed,
                        &report,
                    ));
                }
            }
            CheckKind::Decay => {
                let report = bundle.decay_certificate(args.alpha, ic_count, t_end, &policy);
                lines.push(ReportLine::from_certificate(
                    &bundle.name,
                    args.alpha,
                    "decay",
                    args.seed,
                    &report,
                ));
            }
            CheckKind::Sweep => {
                let grid = geometric_from_range(bundle.sweep_range, 2.0);
                let sweep = bundle.sweep(&grid, ic_count.min(5), t_end, &policy);
                let report = match sweep.threshold {
                    Some(th) => {
                        let idx = sweep.alphas.iter().position(|&a| a == th).unwrap();
                        let mut r = sweep.verdicts[idx].clone();
                        r.passed = true;
                        r
                    }
                    None => {
                        let mut r = CertificateReport::vacuous(policy.tolerance);
                        r.passed = false;
                        r.worst_margin = f64::INFINITY;
                        r
                    }
                };
                let mut line = ReportLine::from_certificate(
                    &bundle.name,
                    sweep.threshold.unwrap_or(args.alpha),
                    "sweep",
                    args.seed,
                    &report,
                );
                line.passed = sweep.threshold.is_some();
                lines.push(line);
            }
            CheckKind::Iss => {
                let lyap = bundle.construct(args.alpha, &policy.quad);
                let chi = bundle.input_gain.as_ref().expect("checked by parse_checks");
                let amplitude = 0.5 * chi.eval(1.0);
                let signal = test_signal(&bundle, amplitude);
                let runs: Vec<(Vec<f64>, Arc<SignalFn>)> = bundle
                    .initial_conditions(ic_count, policy.seed)
                    .into_iter()
                    .map(|x0| (x0, signal.clone()))
                    .collect();
                let floor = bundle.decay_floor.clone();
                let out = iss_gain_test(
                    &bundle.sys,
                    &lyap,
                    chi,
                    |s| floor(s),
                    &runs,
                    &SweepConfig { t_end, ..SweepConfig::default() },
                );
                lines.push(ReportLine::from_certificate(
                    &bundle.name,
                    args.alpha,
                    "iss",
                    args.seed,
                    &out.certificate,
                ));
            }
            CheckKind::Iiss => {
                let lyap = bundle.construct(args.alpha, &policy.quad);
                let nu = bundle.iiss_rate.as_ref().expect("checked by parse_checks");
                let chi = bundle.input_gain.as_ref();
                let amplitude = chi.map(|c| 0.5 * c.eval(1.0)).unwrap_or(1e-3);
                let signal = test_signal(&bundle, amplitude);
                let mut runs = Vec::new();
                for x0 in bundle.initial_conditions(ic_count, policy.seed) {
                    match integrate(&bundle.sys, args.alpha, &x0, 0.0, t_end, Some(&signal), &policy.step) {
                        Ok(traj) => runs.push((traj, signal.clone())),
                        Err(e) => return Err(CliError::Numerical(e.to_string())),
                    }
                }
                let r_bar = iiss_estimate(&lyap, nu, &runs);
                lines.push(ReportLine {
                    artifact_version: ARTIFACT_VERSION,
                    bundle: bundle.name.clone(),
                    alpha: args.alpha,
                    check_name: "iiss".to_string(),
                    passed: r_bar.is_finite(),
                    worst_margin: Some(r_bar),
                    worst_point: None,
                    seed: args.seed,
                });
            }
            CheckKind::Envelope => {
                let mut trajs = Vec::new();
                for x0 in bundle.initial_conditions(ic_count, policy.seed) {
                    match integrate(
                        &bundle.sys,
                        args.alpha,
                        &x0,
                        0.0,
                        bundle.t_end_envelope,
                        None,
                        &policy.step,
                    ) {
                        Ok(traj) => trajs.push(traj),
                        Err(e) => return Err(CliError::Numerical(e.to_string())),
                    }
                }
                let fit = fit_envelope(&trajs).map_err(|e: FitError| CliError::Numerical(e.to_string()))?;
                eprintln!(
                    "envelope: D = {:.6}, lambda = {:.6}, residual = {:.3e}",
                    fit.d, fit.lambda, fit.residual
                );
                lines.push(ReportLine {
                    artifact_version: ARTIFACT_VERSION,
                    bundle: bundle.name.clone(),
                    alpha: args.alpha,
                    check_name: "envelope".to_string(),
                    passed: fit.residual <= 0.0,
                    worst_margin: Some(fit.residual),
                    worst_point: None,
                    seed: args.seed,
                });
            }
        }
    }

    let mut content = String::new();
    let mut all_passed = true;
    for line in &lines {
        all_passed &= line.passed;
        content.push_str(&line.to_json());
        content.push('\n');
    }
    write_output(&args.out, &content)?;
    for line in &lines {
        eprintln!(
            "{}: {}",
            line.check_name,
            if line.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(if all_passed { 0 } else { 1 })
}

fn geometric_from_range(range: (f64, f64), factor: f64) -> Vec<f64> {
    let mut grid = vec![range.0];
    while *grid.last().unwrap() * factor <= range.1 * (1.0 + 1e-12) {
        let next = grid.last().unwrap() * factor;
        grid.push(next);
    }
    grid
}

pub struct SweepArgs {
    pub bundle: String,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub factor: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub ic_count: Option<usize>,
    pub t_end: Option<f64>,
}

pub fn cmd_sweep(args: SweepArgs) -> Result<i32, CliError> {
    if args.alpha_min.is_nan() || args.alpha_min <= 0.0 || args.alpha_max < args.alpha_min {
        return usage(format!(
            "empty sweep range [{}, {}]",
            args.alpha_min, args.alpha_max
        ));
    }
    if args.factor.is_nan() || args.factor <= 1.0 {
        return usage("sweep factor must exceed 1");
    }
    let bundle = load_bundle(&args.bundle, args.alpha_min)?;
    let policy = RunPolicy { seed: args.seed, ..RunPolicy::default() };
    let grid = geometric_from_range((args.alpha_min, args.alpha_max), args.factor);
    let ic_count = args.ic_count.unwrap_or(bundle.ic_count.min(5));
    let t_end = args.t_end.unwrap_or(bundle.t_end_decay);
    let sweep = bundle.sweep(&grid, ic_count, t_end, &policy);

    let mut content = String::new();
    content.push_str("alpha,passed,worst_margin,worst_t,worst_x_norm\n");
    for (alpha, verdict) in sweep.alphas.iter().zip(&sweep.verdicts) {
        let (wt, wx) = match &verdict.worst_point {
            Some(p) => (
                format_f64(p.time),
                format_f64(p.state.iter().map(|v| v * v).sum::<f64>().sqrt()),
            ),
            None => (String::new(), String::new()),
        };
        content.push_str(&csv_row(&[
            format_f64(*alpha),
            verdict.passed.to_string(),
            format_f64(verdict.worst_margin),
            wt,
            wx,
        ]));
    }
    write_output(&args.out, &content)?;
    let threshold_line = match sweep.threshold {
        Some(t) => format!("threshold: {t}"),
        None => "threshold: none".to_string(),
    };
    if args.out.is_some() {
        println!("{threshold_line}");
    } else {
        eprintln!("{threshold_line}");
    }
    Ok(if sweep.threshold.is_some() { 0 } else { 1 })
}

pub struct SimulateArgs {
    pub bundle: String,
    pub alpha: f64,
    pub x0: String,
    pub t_end: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub h_base: Option<f64>,
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<i32, CliError> {
    let bundle = load_bundle(&args.bundle, args.alpha)?;
    if args.t_end.is_nan() || args.t_end <= 0.0 {
        return usage("t-end must be positive");
    }
    let mut x0 = Vec::new();
    for part in args.x0.split(',') {
        match part.trim().parse::<f64>() {
            Ok(v) => x0.push(v),
            Err(_) => return usage(format!("cannot parse initial state component '{part}'")),
        }
    }
    if x0.len() != bundle.dim() {
        return usage(format!(
            "initial state has {} components but bundle '{}' has dimension {}",
            x0.len(),
            bundle.name,
            bundle.dim()
        ));
    }

    let policy = RunPolicy { seed: args.seed, ..RunPolicy::default() };
    let step = StepConfig { h_base: args.h_base.unwrap_or(policy.step.h_base), ..policy.step };
    let lyap: Option<ConstructedLyapunov> =
        if bundle.lim.is_some() || bundle.strictification.is_some() {
            Some(bundle.construct(args.alpha, &policy.quad))
        } else {
            None
        };

    let (traj, diverged) =
        match integrate(&bundle.sys, args.alpha, &x0, 0.0, args.t_end, None, &step) {
            Ok(traj) => (traj, false),
            Err(IntegrateError::Divergence { partial, .. }) => (partial, true),
        };
    let content = trajectory_csv(&bundle, lyap.as_ref(), &traj, diverged)?;
    write_output(&args.out, &content)?;
    if diverged {
        eprintln!("trajectory diverged at t = {}", traj.times.last().unwrap());
        return Ok(3);
    }
    Ok(0)
}

fn trajectory_csv(
    bundle: &ExampleBundle,
    lyap: Option<&ConstructedLyapunov>,
    traj: &Trajectory,
    diverged: bool,
) -> Result<String, CliError> {
    let n = bundle.dim();
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        header.push(format!("x_{i}"));
    }
    header.push("V_alpha".to_string());
    header.push("Vdot_alpha".to_string());

    // Values first (quadrature can fail), then difference them in time.
    let mut values = Vec::with_capacity(traj.len());
    for (x, &t) in traj.states.iter().zip(&traj.times) {
        let v = match lyap {
            Some(l) => l
                .try_eval(x, t)
                .map_err(|e| CliError::Numerical(e.to_string()))?,
            None => bundle.candidate.eval(x, t),
        };
        values.push(v);
    }
    let count = traj.len();
    let mut content = String::with_capacity(count * 64);
    content.push_str(&csv_row(&header));
    for i in 0..count {
        let vdot = if count < 2 {
            0.0
        } else if i == 0 {
            (values[1] - values[0]) / (traj.times[1] - traj.times[0])
        } else if i == count - 1 {
            (values[count - 1] - values[count - 2]) / (traj.times[count - 1] - traj.times[count - 2])
        } else {
            (values[i + 1] - values[i - 1]) / (traj.times[i + 1] - traj.times[i - 1])
        };
        let mut fields = vec![format_f64(traj.times[i])];
        for c in &traj.states[i] {
            fields.push(format_f64(*c));
        }
        fields.push(format_f64(values[i]));
        fields.push(format_f64(vdot));
        content.push_str(&csv_row(&fields));
    }
    if diverged {
        content.push_str("# diverged\n");
    }
    Ok(content)
}

pub fn cmd_list_bundles() -> i32 {
    for name in lyapcert::bundles::BUNDLE_NAMES {
        let bundle = lyapcert::bundles::bundle_by_name(name).expect("stock bundle");
        let checks: Vec<&str> = bundle.expected.iter().map(|c| c.name()).collect();
        println!(
            "{name}  dim={}  default-alpha={}  checks=[{}]",
            bundle.dim(),
            bundle.default_alpha,
            checks.join(",")
        );
        for note in &bundle.notes {
            println!("    note: {note}");
        }
    }
    0
}
