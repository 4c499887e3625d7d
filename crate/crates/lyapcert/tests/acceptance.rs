//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values once its assertions hold (run with `--nocapture` to
//! see them). The CLI contract criterion lives in the companion crate's
//! acceptance suite.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::{nested_double_oracle, thin_trajectory, TrigPoly};
use lyapcert::bundles::{bundle_by_name, RunPolicy};
use lyapcert::constructors::shifted_lyapunov;
use lyapcert::numerics::{
    double_integral_derivative_check, double_time_integral, integrate, QuadratureConfig,
};
use lyapcert::systems::{
    kronecker_points, kronecker_sequence, seeded_states, GridConfig, SampleGrid, SignalFn,
};
use lyapcert::verifiers::{check_strictification, fit_envelope, iss_gain_test, SweepConfig};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn pow2_grid(lo: f64, hi: f64) -> Vec<f64> {
    let mut v = vec![lo];
    while *v.last().unwrap() < hi {
        let next = v.last().unwrap() * 2.0;
        v.push(next);
    }
    v
}

/// 1. Fubini-reduced double integrals match brute-force nested Simpson on 20
///    seeded trig-polynomial integrands to relative 1e-8, in under 5 s.
#[test]
fn acceptance_01_quadrature_oracle_equivalence() {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let spots = kronecker_sequence(2, 20, 77);
    let mut worst_rel: f64 = 0.0;
    for (i, spot) in spots.iter().enumerate() {
        let poly = TrigPoly::seeded(1000 + i as u64, 8);
        let t = -3.0 + 8.0 * spot[0];
        let tau = 0.4 + 1.1 * spot[1];
        let fubini = double_time_integral(|l| vec![poly.eval(l)], t, tau, &cfg).unwrap()[0];
        let oracle = nested_double_oracle(&|l| poly.eval(l), t, tau, 256);
        let rel = (fubini - oracle).abs() / oracle.abs();
        worst_rel = worst_rel.max(rel);
        assert!(rel <= 1e-8, "case {i}: fubini {fubini} oracle {oracle} rel {rel:.3e}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "acceptance 01 quadrature-oracle-equivalence: PASS (worst rel {worst_rel:.3e}, {elapsed:?})"
    );
}

/// 2. Derivative identity for the windowed double integral with a
///    time-independent integrand: margin ≤ 1e-6 on 10 seeded cases, checked
///    against the closed-form antiderivative oracle.
#[test]
fn acceptance_02_derivative_identity() {
    let cfg = QuadratureConfig::default();
    let spots = kronecker_sequence(2, 10, 99);
    let mut worst: f64 = 0.0;
    for (i, spot) in spots.iter().enumerate() {
        let poly = TrigPoly::seeded(2000 + i as u64, 8);
        let t = -1.0 + 5.0 * spot[0];
        let tau = 0.3 + 1.2 * spot[1];
        let h = 1e-4;
        let margin =
            double_integral_derivative_check(|l| vec![poly.eval(l)], t, tau, h, &cfg).unwrap();
        assert!(margin <= 1e-6, "case {i}: margin {margin:.3e}");
        worst = worst.max(margin);
        // Cross-check the differenced side against the closed form directly.
        let up = double_time_integral(|l| vec![poly.eval(l)], t + h, tau, &cfg).unwrap()[0];
        let dn = double_time_integral(|l| vec![poly.eval(l)], t - h, tau, &cfg).unwrap()[0];
        let numeric = (up - dn) / (2.0 * h);
        let closed = poly.windowed_double_integral_dt(t, tau);
        assert!((numeric - closed).abs() <= 1e-6, "case {i}: {numeric} vs {closed}");
    }
    println!("acceptance 02 derivative-identity: PASS (worst margin {worst:.3e})");
}

/// 3. Friction limiting system: V̇ + b|x|² ≤ 1e-6 at every interior sample
///    of 10 seeded trajectories and on a 10⁴-point grid, in under 30 s.
#[test]
fn acceptance_03_friction_limiting_decay() {
    let start = Instant::now();
    let b = bundle_by_name("friction").unwrap();
    let policy = RunPolicy { max_checked: usize::MAX, ..RunPolicy::default() };
    let report = b.decay_certificate(2.0, 10, 20.0, &policy);
    assert!(report.passed, "trajectory margin {:.3e}", report.worst_margin);
    assert!(report.samples_total >= 10_000, "samples {}", report.samples_total);

    // Grid form of the same inequality, using the analytic gradient.
    let lim = b.lim.as_ref().unwrap();
    let floor = b.decay_floor.clone();
    let states = seeded_states(2, 2000, -5.0, 5.0, 101);
    let times = kronecker_points(5, 0.0, 20.0, 103);
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0usize;
    for x in &states {
        for &t in &times {
            let grad = b.candidate.gradient(x, t);
            let vt = b.candidate.time_derivative(x, t);
            let f = lim.eval(x, t);
            let vdot = vt + grad.iter().zip(&f).map(|(a, c)| a * c).sum::<f64>();
            worst = worst.max(vdot + floor(norm(x)));
            count += 1;
        }
    }
    assert!(count == 10_000);
    assert!(worst <= 1e-6, "grid margin {worst:.3e}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "acceptance 03 friction-limiting-decay: PASS (traj margin {:.3e}, grid margin {worst:.3e}, {elapsed:?})",
        report.worst_margin
    );
}

/// 4. Oscillator bundle: compatibility and the window-average bound both
///    pass (worst ratio ≤ 1 + 1e-3), and the bounded-rate witness |ẋ| ≤ 2π
///    holds along 10 limiting-system trajectories.
#[test]
fn acceptance_04_nonuges_hypotheses_and_witness() {
    let b = bundle_by_name("nonuges").unwrap();
    let policy = RunPolicy::default();
    let reports = b.hypothesis_reports(&policy);
    for (name, report) in &reports {
        assert!(report.passed, "{name} failed with margin {:.3e}", report.worst_margin);
    }

    let lim = b.lim.as_ref().unwrap();
    let delta = b.delta.as_ref().unwrap();
    let n = b.n_gauge.as_ref().unwrap();
    let consts = b.constants.as_ref().unwrap();
    let grid = lyapcert::verifiers::AveragingGrid::seeded(1, policy.seed, consts.eta_floor, 1e3);
    let avg = lyapcert::verifiers::check_averaging_bound(&b.sys, lim, delta, n, &grid, &policy.quad);
    assert!(avg.certificate.passed);
    assert!(avg.worst_ratio <= 1.0 + 1e-3, "ratio {}", avg.worst_ratio);

    // Bounded-rate witness: the limiting dynamics never move faster than 2π.
    let lim_sys = {
        let fbar = lim.fbar.clone();
        lyapcert::TimeVaryingSystem::new(1, Arc::new(move |x: &[f64], t: f64, _tau: f64| fbar(x, t)))
    };
    for x0 in b.initial_conditions(10, 7) {
        let traj = integrate(&lim_sys, 1.0, &x0, 0.0, 12.0, None, &policy.step).unwrap();
        for (x, &t) in traj.states.iter().zip(&traj.times) {
            let rate = norm(&lim.eval(x, t));
            assert!(rate <= 2.0 * std::f64::consts::PI, "rate {rate} at t={t}");
        }
    }
    println!(
        "acceptance 04 nonuges-hypotheses-and-witness: PASS (worst ratio {:.4}, eta floor {:?})",
        avg.worst_ratio, avg.empirical_eta_floor
    );
}

/// 5. Cubic bundle: zero-mean integrals ≤ 1e-10, derived domination constant
///    stable within 5% under grid refinement, decay certified for 20 seeded
///    starts at twice the derived threshold, and refuted at α = 1.
#[test]
fn acceptance_05_ngs_strictification_and_threshold() {
    let b = bundle_by_name("ngs").unwrap();
    let policy = RunPolicy::default();
    let sd = b.strictification.as_ref().unwrap();

    let base_grid = SampleGrid::log_radial(1, &GridConfig { seed: policy.seed, ..GridConfig::default() });
    let strict = check_strictification(sd, &b.sys, &base_grid, &policy.quad);
    assert!(strict.combined.passed, "margin {:.3e}", strict.combined.worst_margin);
    assert!(strict.zero_mean.worst_margin <= 1e-10, "zero-mean {:.3e}", strict.zero_mean.worst_margin);
    assert!(strict.derived_c > 0.0);

    let fine_grid = SampleGrid::refined(1, &GridConfig { seed: policy.seed, ..GridConfig::default() });
    let fine = check_strictification(sd, &b.sys, &fine_grid, &policy.quad);
    let drift = (fine.derived_c / strict.derived_c - 1.0).abs();
    assert!(drift < 0.05, "derived_c drift {drift:.4}");

    let alpha = 2.0 * strict.alpha_threshold;
    let decay = b.decay_certificate(alpha, 20, b.t_end_decay, &policy);
    assert!(decay.passed, "decay margin {:.3e}", decay.worst_margin);

    let low = b.decay_certificate(1.0, 20, b.t_end_decay, &policy);
    assert!(!low.passed, "decay at alpha=1 unexpectedly passed");
    println!(
        "acceptance 05 ngs-strictification: PASS (derived_c {:.5}, drift {drift:.5}, alpha {alpha:.0}, low-alpha margin {:.3e})",
        strict.derived_c, low.worst_margin
    );
}

/// 6. Identification bundle: envelope fits succeed at the sweep threshold
///    with residual ≤ 0 and a rate within 10% of the rate at four times that
///    α; sweep verdicts are monotone under doubling.
#[test]
fn acceptance_06_identification_sweep_and_envelope() {
    let b = bundle_by_name("identification").unwrap();
    let policy = RunPolicy::default();
    let grid = pow2_grid(64.0, 16384.0);
    let sweep = b.sweep(&grid, 4, b.t_end_decay, &policy);
    let threshold = sweep.threshold.expect("sweep found no threshold");
    for i in 0..sweep.verdicts.len() {
        if sweep.verdicts[i].passed {
            for j in [i + 1, i + 2] {
                if j < sweep.verdicts.len() {
                    assert!(
                        sweep.verdicts[j].passed,
                        "monotonicity broken: alpha {} passed but {} failed",
                        sweep.alphas[i], sweep.alphas[j]
                    );
                }
            }
        }
    }

    let fit_at = |alpha: f64| {
        let ics = b.initial_conditions(10, policy.seed);
        let mut trajs = Vec::new();
        for x0 in &ics {
            let traj =
                integrate(&b.sys, alpha, x0, 0.0, b.t_end_envelope, None, &policy.step).unwrap();
            // Thinning keeps the pooled fit affordable at fast time scales.
            let stride = (traj.len() / 40_000).max(1);
            trajs.push(thin_trajectory(&traj, stride));
        }
        fit_envelope(&trajs).expect("envelope fit refused")
    };
    let fit_lo = fit_at(threshold);
    let fit_hi = fit_at(4.0 * threshold);
    assert!(fit_lo.residual <= 0.0 && fit_hi.residual <= 0.0);
    assert!(fit_lo.d >= 1.0 && fit_hi.d >= 1.0);
    assert!(
        fit_lo.lambda >= 0.9 * fit_hi.lambda,
        "rate {:.4} fell below 0.9x of {:.4}",
        fit_lo.lambda,
        fit_hi.lambda
    );
    println!(
        "acceptance 06 identification-sweep-envelope: PASS (threshold {threshold}, lambda {:.4} vs {:.4}, D {:.3})",
        fit_lo.lambda, fit_hi.lambda, fit_lo.d
    );
}

/// 7. Saturated-feedback bundle: strictification certificate passes and the
///    corrected function decays at rate W/2 along 10 trajectories above the
///    computed threshold.
#[test]
fn acceptance_07_satfb_strictification_decay() {
    let b = bundle_by_name("satfb").unwrap();
    let policy = RunPolicy::default();
    let sd = b.strictification.as_ref().unwrap();
    let grid = SampleGrid::log_radial(1, &GridConfig { seed: policy.seed, ..GridConfig::default() });
    let strict = check_strictification(sd, &b.sys, &grid, &policy.quad);
    assert!(strict.combined.passed, "margin {:.3e}", strict.combined.worst_margin);

    let alpha = 2.0 * strict.alpha_threshold;
    let decay = b.decay_certificate(alpha, 10, b.t_end_decay, &policy);
    assert!(decay.passed, "margin {:.3e}", decay.worst_margin);
    println!(
        "acceptance 07 satfb-strictification-decay: PASS (threshold {:.0}, margin {:.3e})",
        strict.alpha_threshold, decay.worst_margin
    );
}

/// 8. Construction consistency: with matching fast and limiting dynamics the
///    shifted function reproduces the candidate to 1e-12 on 10³ points, and
///    the constant-coefficient friction variant matches its closed form
///    (velocity rescaled by the windowed viscous average) to 1e-8.
#[test]
fn acceptance_08_construction_consistency() {
    // Matching dynamics: displacement vanishes.
    let b = bundle_by_name("nonuges").unwrap();
    let lim = b.lim.as_ref().unwrap();
    let as_fast = {
        let fbar = lim.fbar.clone();
        lyapcert::TimeVaryingSystem::new(1, Arc::new(move |x: &[f64], t: f64, _tau: f64| fbar(x, t)))
    };
    let lyap = shifted_lyapunov(&b.candidate, &as_fast, lim, 777.0, &QuadratureConfig::default());
    let states = seeded_states(1, 200, -6.0, 6.0, 41);
    let times = kronecker_points(5, 0.0, 15.0, 43);
    let mut checked = 0usize;
    for x in &states {
        for &t in &times {
            let diff = (lyap.eval(x, t) - b.candidate.eval(x, t)).abs();
            assert!(diff <= 1e-12, "diff {diff:.3e} at x={} t={t}", x[0]);
            checked += 1;
        }
    }
    assert!(checked == 1000);

    // Constant-coefficient friction: the displacement acts on the velocity
    // only, through the windowed average of the viscous deviation.
    let fc = bundle_by_name("friction-const").unwrap();
    let alpha = 300.0f64;
    let built = fc.construct(alpha, &QuadratureConfig::default());
    let eta = alpha.sqrt();
    let tau = 2.0 / eta;
    let qcfg = QuadratureConfig::default();
    let panels = qcfg.oscillation_panels(tau, alpha);
    let mut worst: f64 = 0.0;
    for xi in seeded_states(2, 50, -3.0, 3.0, 47) {
        for &t in &[0.0, 1.3, 6.9] {
            let j = double_time_integral(
                |l| vec![0.5 * (alpha * l).sin()],
                t,
                tau,
                &qcfg.with_panels(panels),
            )
            .unwrap()[0];
            let shifted = [xi[0], xi[1] * (1.0 + 0.5 * eta * j)];
            let closed = fc.candidate.eval(&shifted, t);
            let diff = (built.eval(&xi, t) - closed).abs();
            worst = worst.max(diff);
            assert!(diff <= 1e-8, "diff {diff:.3e} at xi=({}, {}) t={t}", xi[0], xi[1]);
        }
    }
    println!("acceptance 08 construction-consistency: PASS (friction-const worst diff {worst:.3e})");
}

/// 9. ISS implication test: the oscillator driven by a small sine input
///    passes at a certified α, and the decay floor is evaluated exactly on
///    the samples satisfying the gain condition (instrumented counter).
#[test]
fn acceptance_09_iss_implication() {
    let b = bundle_by_name("nonuges").unwrap();
    let policy = RunPolicy::default();
    let sweep = b.sweep(&pow2_grid(128.0, 2048.0), 3, b.t_end_decay, &policy);
    let threshold = sweep.threshold.expect("no certified alpha");
    let alpha = 2.0 * threshold;

    let lim = b.lim.as_ref().unwrap();
    let lyap = shifted_lyapunov(&b.candidate, &b.sys, lim, alpha, &policy.quad);
    let chi = b.input_gain.as_ref().unwrap();
    let floor = b.decay_floor.clone();
    let evaluations = std::cell::Cell::new(0usize);
    let eps = 5e-4;
    let signal: Arc<SignalFn> = Arc::new(move |t: f64| vec![eps * t.sin()]);
    let runs = vec![
        (vec![1.5], signal.clone()),
        (vec![-1.8], signal.clone()),
        (vec![1.0], signal),
    ];
    let out = iss_gain_test(
        &b.sys,
        &lyap,
        chi,
        |s| {
            evaluations.set(evaluations.get() + 1);
            floor(s)
        },
        &runs,
        &SweepConfig { t_end: 3.0, ..SweepConfig::default() },
    );
    assert!(out.certificate.passed, "margin {:.3e}", out.certificate.worst_margin);
    assert!(out.samples_checked > 0, "no samples satisfied the gain condition");
    assert!(out.samples_excluded > 0, "exclusion branch never exercised");
    assert_eq!(
        evaluations.get(),
        out.samples_checked,
        "decay floor evaluated off the gain region"
    );
    println!(
        "acceptance 09 iss-implication: PASS (alpha {alpha}, checked {}, excluded {})",
        out.samples_checked, out.samples_excluded
    );
}
