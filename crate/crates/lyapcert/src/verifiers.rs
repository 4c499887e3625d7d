//! Falsification-based hypothesis checking, trajectory decay certification,
//! ISS/iISS gain tests, exponential envelope fitting, and time-scale sweeps.
//!
//! Every check samples a finite grid and reports the worst margin together
//! with the point that attained it: a failed check is a reproducible
//! counterexample, a passed check is evidence, never a proof. Worst-point
//! ties keep the lowest grid index, so reports do not depend on evaluation
//! order.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::constructors::ConstructedLyapunov;
use crate::linalg;
use crate::math;
use crate::numerics::{
    integrate, weighted_single_integral, QuadratureConfig, StepConfig, Trajectory,
};
use crate::systems::{
    geometric_grid, CertificateReport, CompatibilityConstants, EnvelopeFit, Gauge,
    LimitingSystem, LyapunovCandidate, MarginCollector, SampleGrid, SignalFn,
    StrictificationData, TimeVaryingSystem, DEFAULT_TOLERANCE,
};

/// Default ratio slack for the window-average bound check.
pub const RATIO_TOLERANCE: f64 = 1e-3;

/// Default tolerance for zero-mean wave integrals.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Compatibility of a candidate with one gauge
// ---------------------------------------------------------------------------

/// Sub-reports of [`check_compatibility`]: the gauge-squared decay of the
/// candidate along the limiting dynamics, the growth caps on `|∇V|` and
/// `|f̄|`, and the linear bound `δ(s) ≤ c̄̄·s`.
#[derive(Clone, Debug)]
pub struct CompatibilityOutcome {
    pub decay: CertificateReport,
    pub gradient_growth: CertificateReport,
    pub linear_bound: CertificateReport,
    pub combined: CertificateReport,
}

/// Check that `(V, f̄, δ)` fit together:
/// `V_t + V_x·f̄ ≤ −c̄·δ²(|x|)`, `|V_x| ≤ δ(|x|)`, `|f̄| ≤ δ(|x|/2)`,
/// and `δ(s) ≤ c̄̄·s`.
pub fn check_compatibility(
    candidate: &LyapunovCandidate,
    lim: &LimitingSystem,
    delta: &Gauge,
    consts: &CompatibilityConstants,
    grid: &SampleGrid,
) -> CompatibilityOutcome {
    assert!(!grid.is_empty(), "sample grid must be nonempty");
    let mut decay = MarginCollector::new(DEFAULT_TOLERANCE);
    let mut growth = MarginCollector::new(DEFAULT_TOLERANCE);
    for x in &grid.states {
        let norm = linalg::norm2(x);
        let d_full = delta.eval(norm);
        let d_half = delta.eval(0.5 * norm);
        for &t in &grid.times {
            let grad = candidate.gradient(x, t);
            let vt = candidate.time_derivative(x, t);
            let fbar = lim.eval(x, t);
            let vdot = vt + linalg::dot(&grad, &fbar);
            decay.observe(vdot + consts.c_bar * d_full * d_full, x, t, None);
            growth.observe(linalg::norm2(&grad) - d_full, x, t, None);
            growth.observe(linalg::norm2(&fbar) - d_half, x, t, None);
        }
    }
    let mut linear = MarginCollector::new(DEFAULT_TOLERANCE);
    for &s in geometric_grid(1e-3, 1e4, 96).iter() {
        linear.observe(delta.eval(s) - consts.c_bbar * s, &[], 0.0, Some(s));
    }
    let decay = decay.finish();
    let gradient_growth = growth.finish();
    let linear_bound = linear.finish();
    let combined = CertificateReport::combine([&decay, &gradient_growth, &linear_bound]);
    CompatibilityOutcome { decay, gradient_growth, linear_bound, combined }
}

// ---------------------------------------------------------------------------
// Window-average proximity of fast and limiting dynamics
// ---------------------------------------------------------------------------

/// Sample locations for [`check_averaging_bound`]: states, window centers
/// `r`, and an increasing grid of window rates `η`.
#[derive(Clone, Debug)]
pub struct AveragingGrid {
    pub states: Vec<Vec<f64>>,
    pub window_centers: Vec<f64>,
    pub etas: Vec<f64>,
}

impl AveragingGrid {
    pub fn seeded(dim: usize, seed: u64, eta_min: f64, eta_max: f64) -> Self {
        let states = crate::systems::seeded_states(dim, 16, -8.0, 8.0, seed);
        let window_centers = crate::systems::kronecker_points(8, 0.0, 20.0, seed ^ 0x5bd1);
        let etas = geometric_grid(eta_min, eta_max, 24);
        Self { states, window_centers, etas }
    }
}

/// Outcome of the window-average check: the certificate over the passing
/// tail of the `η` grid, the worst LHS/RHS ratio there, and the smallest
/// sampled `η` from which the bound held for every state (the empirical
/// window-rate floor; `None` when some state never settles).
#[derive(Clone, Debug)]
pub struct AveragingOutcome {
    pub certificate: CertificateReport,
    pub worst_ratio: f64,
    pub empirical_eta_floor: Option<f64>,
}

/// Check `|∫_{r−1/η}^{r+1/η} {f(x,l,η²l) − f̄(x,l)} dl| ≤ δ(|x|/2)·N(η)`
/// on the grid. The bound only has to hold for large `η`, so each state is
/// scanned for the longest all-passing suffix of the `η` grid (at least
/// three points); the reported ratio and margins cover those suffixes.
pub fn check_averaging_bound(
    sys: &TimeVaryingSystem,
    lim: &LimitingSystem,
    delta: &Gauge,
    n_gauge: &Gauge,
    grid: &AveragingGrid,
    cfg: &QuadratureConfig,
) -> AveragingOutcome {
    assert!(!grid.etas.is_empty() && grid.etas.windows(2).all(|w| w[0] < w[1]));
    let min_tail = 3.min(grid.etas.len());
    let mut collector = MarginCollector::new(RATIO_TOLERANCE);
    let mut worst_ratio: f64 = 0.0;
    let mut eta_floor: Option<f64> = Some(grid.etas[0]);

    for x in &grid.states {
        let norm = linalg::norm2(x);
        if norm == 0.0 {
            continue;
        }
        let d_half = delta.eval(0.5 * norm);
        // ratios[j] = worst ratio over window centers at η_j
        let mut ratios = Vec::with_capacity(grid.etas.len());
        for &eta in &grid.etas {
            let window = 2.0 / eta;
            let qcfg = cfg.with_panels(cfg.oscillation_panels(window, eta * eta));
            let mut worst_here: f64 = 0.0;
            for &r in &grid.window_centers {
                let lhs = weighted_single_integral(
                    |l| {
                        let fast = sys.eval(x, l, eta * eta * l);
                        let slow = lim.eval(x, l);
                        fast.iter().zip(&slow).map(|(a, b)| a - b).collect()
                    },
                    r - 1.0 / eta,
                    r + 1.0 / eta,
                    &qcfg,
                );
                let ratio = match lhs {
                    Ok(v) => {
                        let rhs = d_half * n_gauge.eval(eta);
                        let lhs_norm = linalg::norm2(&v);
                        if rhs > 0.0 {
                            lhs_norm / rhs
                        } else if lhs_norm == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    }
                    // Per-point quadrature failure surfaces as a hard ratio.
                    Err(_) => f64::INFINITY,
                };
                if ratio > worst_here {
                    worst_here = ratio;
                }
            }
            ratios.push(worst_here);
        }
        // Longest all-passing suffix of the η grid.
        let mut start = ratios.len();
        while start > 0 && ratios[start - 1] <= 1.0 + RATIO_TOLERANCE {
            start -= 1;
        }
        let tail_len = ratios.len() - start;
        if tail_len < min_tail {
            eta_floor = None;
            // Report the worst ratio over the whole grid for a failing state.
            for (j, &ratio) in ratios.iter().enumerate() {
                collector.observe(ratio - 1.0, x, 0.0, Some(grid.etas[j]));
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                }
            }
        } else {
            if let Some(f) = eta_floor {
                let here = grid.etas[start];
                eta_floor = Some(if here > f { here } else { f });
            }
            for (j, &ratio) in ratios.iter().enumerate().skip(start) {
                collector.observe(ratio - 1.0, x, 0.0, Some(grid.etas[j]));
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                }
            }
        }
    }
    AveragingOutcome { certificate: collector.finish(), worst_ratio, empirical_eta_floor: eta_floor }
}

// ---------------------------------------------------------------------------
// Jacobian and magnitude growth bounds
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GrowthBoundsOutcome {
    pub fast_jacobian: CertificateReport,
    pub limiting_jacobian: CertificateReport,
    pub magnitude: CertificateReport,
    pub combined: CertificateReport,
}

/// Check the global bounds `|∂f/∂x| ≤ K`, `|∂f̄/∂x| ≤ K` (Frobenius norm)
/// and `|f(x,t,τ)| ≤ δ(|x|/2)` on the grid.
pub fn check_growth_bounds(
    sys: &TimeVaryingSystem,
    lim: &LimitingSystem,
    delta: &Gauge,
    jacobian_bound: f64,
    grid: &SampleGrid,
) -> GrowthBoundsOutcome {
    assert!(!grid.is_empty());
    let mut fast = MarginCollector::new(DEFAULT_TOLERANCE);
    let mut limiting = MarginCollector::new(DEFAULT_TOLERANCE);
    let mut magnitude = MarginCollector::new(DEFAULT_TOLERANCE);
    // Jacobians on a strided subset; magnitudes everywhere.
    let stride = (grid.states.len() / 64).max(1);
    for (i, x) in grid.states.iter().enumerate() {
        let d_half = delta.eval(0.5 * linalg::norm2(x));
        for &t in &grid.times {
            for &tau in &grid.fast_times {
                let f = sys.eval(x, t, tau);
                magnitude.observe(linalg::norm2(&f) - d_half, x, t, Some(tau));
            }
        }
        if i % stride == 0 {
            for &t in &grid.times {
                limiting.observe(
                    linalg::frobenius(&lim.jacobian(x, t)) - jacobian_bound,
                    x,
                    t,
                    None,
                );
                for &tau in &grid.fast_times {
                    fast.observe(
                        linalg::frobenius(&sys.jacobian(x, t, tau)) - jacobian_bound,
                        x,
                        t,
                        Some(tau),
                    );
                }
            }
        }
    }
    let fast_jacobian = fast.finish();
    let limiting_jacobian = limiting.finish();
    let magnitude = magnitude.finish();
    let combined = CertificateReport::combine([&fast_jacobian, &limiting_jacobian, &magnitude]);
    GrowthBoundsOutcome { fast_jacobian, limiting_jacobian, magnitude, combined }
}

// ---------------------------------------------------------------------------
// Relaxed decay requirement on the window gauge
// ---------------------------------------------------------------------------

/// For exponentially stable limiting dynamics the decay requirement on `N`
/// relaxes to `sup_{η ≥ η★} η·N(η) < (K−λ) / (11·D·(Θ−1)·c̄̄)` with
/// `Θ = (√2·D)^{K/λ−1}`. Samples the sup over a geometric grid
/// `[η★, 10⁶]`.
pub fn check_relaxed_n_bound(
    n_gauge: &Gauge,
    jacobian_bound: f64,
    lambda: f64,
    d: f64,
    c_bbar: f64,
    eta_star: f64,
) -> CertificateReport {
    assert!(jacobian_bound > lambda && lambda > 0.0, "need K > λ > 0");
    assert!(d > 1.0, "need D > 1");
    assert!(eta_star > 0.0);
    let theta = math::pow(math::sqrt(2.0) * d, jacobian_bound / lambda - 1.0);
    let bound = (jacobian_bound - lambda) / (11.0 * d * (theta - 1.0) * c_bbar);
    let mut collector = MarginCollector::new(DEFAULT_TOLERANCE);
    for &eta in geometric_grid(eta_star, 1e6, 256).iter() {
        collector.observe(eta * n_gauge.eval(eta) - bound, &[], 0.0, Some(eta));
    }
    collector.finish()
}

// ---------------------------------------------------------------------------
// Strictification hypotheses
// ---------------------------------------------------------------------------

/// Sub-reports of [`check_strictification`] plus the derived domination
/// constant and the time-scale threshold `8·T·p_max / c` it induces.
#[derive(Clone, Debug)]
pub struct StrictificationOutcome {
    /// `V_t + V_x·f ≤ −W + p(τ)·Θ` sampled over states, times, and fast
    /// times; margins are normalized by `1 + |W| + |pΘ|` so equality-tight
    /// candidates are judged in relative terms.
    pub decay_split: CertificateReport,
    /// `∫_{kT}^{(k+1)T} p = 0` for `k ∈ {−2..2}`.
    pub zero_mean: CertificateReport,
    /// `|p| ≤ p_max` on a dense period sample.
    pub wave_bound: CertificateReport,
    /// `V ≥ c|Θ|` and `W ≥ c·max{|Θ|, |Θ̇|}` with the derived `c`.
    pub domination: CertificateReport,
    pub combined: CertificateReport,
    /// Largest `c` the grid supports: `min{V/|Θ|, W/|Θ|, W/|Θ̇|}`.
    pub derived_c: f64,
    /// `8·T·p_max / derived_c`; decay is certified above this `α`.
    pub alpha_threshold: f64,
}

pub fn check_strictification(
    data: &StrictificationData,
    sys: &TimeVaryingSystem,
    grid: &SampleGrid,
    cfg: &QuadratureConfig,
) -> StrictificationOutcome {
    assert!(!grid.is_empty());

    let mut split = MarginCollector::new(DEFAULT_TOLERANCE);
    let mut derived_c = f64::INFINITY;
    let mut dom = MarginCollector::new(DEFAULT_TOLERANCE);
    let mut dom_point: Option<(Vec<f64>, f64, f64)> = None;
    for x in &grid.states {
        for &t in &grid.times {
            let v = data.candidate.eval(x, t);
            let vt = data.candidate.time_derivative(x, t);
            let grad = data.candidate.gradient(x, t);
            let w = (data.decay)(x, t);
            let theta = (data.oscillation)(x, t);
            let theta_grad = data.oscillation_gradient(x, t);
            let theta_dt = data.oscillation_time_derivative(x, t);
            for &tau in &grid.fast_times {
                let f = sys.eval(x, t, tau);
                let vdot = vt + linalg::dot(&grad, &f);
                let wave = (data.wave)(tau);
                // Normalize by the local split magnitude: candidates built to
                // satisfy the split with equality would otherwise fail on
                // round-off alone at large states (terms grow like |x|^6).
                let scale = 1.0 + math::abs(w) + math::abs(wave * theta);
                split.observe((vdot + w - wave * theta) / scale, x, t, Some(tau));

                let theta_abs = math::abs(theta);
                let theta_dot = math::abs(theta_dt + linalg::dot(&theta_grad, &f));
                let mut local = f64::INFINITY;
                if theta_abs > 1e-300 {
                    local = local.min(v / theta_abs).min(w / theta_abs);
                }
                if theta_dot > 1e-300 {
                    local = local.min(w / theta_dot);
                }
                if local < derived_c {
                    derived_c = local;
                    dom_point = Some((x.clone(), t, tau));
                }
            }
        }
    }
    if !derived_c.is_finite() {
        // Oscillation identically zero on the grid: domination is vacuous
        // and the correction term vanishes, so any positive c works.
        derived_c = f64::INFINITY;
    }
    if let Some((x, t, tau)) = dom_point {
        dom.observe(-derived_c, &x, t, Some(tau));
    }

    let mut zero_mean = MarginCollector::new(ZERO_MEAN_TOLERANCE);
    let tight = QuadratureConfig { abs_tol: 1e-13, rel_tol: 1e-13, ..*cfg };
    for k in -2i32..=2 {
        let a = k as f64 * data.period;
        let wave = data.wave.clone();
        let value = weighted_single_integral(|l| alloc::vec![wave(l)], a, a + data.period, &tight);
        let margin = match value {
            Ok(v) => math::abs(v[0]),
            Err(_) => f64::INFINITY,
        };
        zero_mean.observe(margin, &[], a, Some(k as f64));
    }

    let wave_bound = data.check_wave_bound(4096);
    let decay_split = split.finish();
    let zero_mean = zero_mean.finish();
    let domination = dom.finish();
    let combined =
        CertificateReport::combine([&decay_split, &zero_mean, &wave_bound, &domination]);
    let alpha_threshold = if derived_c > 0.0 && derived_c.is_finite() {
        8.0 * data.period * data.wave_bound / derived_c
    } else if derived_c.is_finite() {
        f64::INFINITY
    } else {
        0.0
    };
    StrictificationOutcome {
        decay_split,
        zero_mean,
        wave_bound,
        domination,
        combined,
        derived_c,
        alpha_threshold,
    }
}

/// Check `|∫_s^{αt} p(l) dl| ≤ 2·T·p_max` for `s ∈ [αt−α, αt]` by direct
/// quadrature (independent of the antiderivative tables the strictified
/// construction uses).
pub fn check_running_integral_bound(
    wave: &Arc<crate::systems::ScalarFn>,
    period: f64,
    wave_bound: f64,
    alpha: f64,
    t_samples: &[f64],
    s_per_t: usize,
    cfg: &QuadratureConfig,
) -> CertificateReport {
    assert!(alpha > 0.0);
    let bound = 2.0 * period * wave_bound;
    let mut collector = MarginCollector::new(DEFAULT_TOLERANCE);
    // The bound carries slack proportional to itself, so quadrature accuracy
    // of a fraction of the bound suffices; tight tolerances would never
    // converge on discontinuous waves (Simpson degrades to O(h) there).
    let floor_abs = 2e-4 * bound;
    let loose = QuadratureConfig {
        abs_tol: if cfg.abs_tol > floor_abs { cfg.abs_tol } else { floor_abs },
        rel_tol: if cfg.rel_tol > 1e-6 { cfg.rel_tol } else { 1e-6 },
        ..*cfg
    };
    for &t in t_samples {
        let hi = alpha * t;
        for k in 0..s_per_t {
            let s = hi - alpha * (k as f64 + 0.5) / s_per_t as f64;
            let len = hi - s;
            let qcfg = loose.with_panels(loose.oscillation_panels(len, 8.0 / period));
            let w = wave.clone();
            let value = weighted_single_integral(|l| alloc::vec![w(l)], s, hi, &qcfg);
            let margin = match value {
                Ok(v) => math::abs(v[0]) - bound,
                Err(_) => f64::INFINITY,
            };
            collector.observe(margin, &[], t, Some(s));
        }
    }
    collector.finish()
}

// ---------------------------------------------------------------------------
// Decay certification along trajectories
// ---------------------------------------------------------------------------

/// Policy for trajectory decay checks. `r_stop` excludes a ball around the
/// origin where the differenced derivative is noise-dominated; `max_checked`
/// caps the number of evaluated interior samples (evenly strided) so checks
/// stay affordable when the fast time scale forces tiny steps.
#[derive(Clone, Copy, Debug)]
pub struct DecayConfig {
    pub r_stop: f64,
    pub tolerance: f64,
    pub max_checked: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { r_stop: 1e-4, tolerance: 1e-6, max_checked: 4096 }
    }
}

/// Certify `V̇ ≤ −floor(|x|)` along a trajectory, outside `|x| ≤ r_stop`.
/// `V̇` is the centered difference of the constructed function over stored
/// neighbor samples. An empty eligible set is a vacuous pass.
pub fn certify_decay<F: Fn(f64) -> f64>(
    traj: &Trajectory,
    lyap: &ConstructedLyapunov,
    decay_floor: F,
    cfg: &DecayConfig,
) -> CertificateReport {
    assert!(
        math::abs(traj.alpha - lyap.alpha()) <= 1e-12 * (1.0 + traj.alpha),
        "trajectory and Lyapunov function must share the time-scale constant"
    );
    let n = traj.len();
    if n < 3 {
        return CertificateReport::vacuous(cfg.tolerance);
    }
    let eligible: Vec<usize> =
        (1..n - 1).filter(|&i| linalg::norm2(&traj.states[i]) > cfg.r_stop).collect();
    if eligible.is_empty() {
        return CertificateReport::vacuous(cfg.tolerance);
    }
    let stride = if eligible.len() <= cfg.max_checked {
        1
    } else {
        eligible.len().div_ceil(cfg.max_checked.max(1))
    };
    let mut collector = MarginCollector::new(cfg.tolerance);
    for &i in eligible.iter().step_by(stride) {
        let before = lyap.try_eval(&traj.states[i - 1], traj.times[i - 1]);
        let after = lyap.try_eval(&traj.states[i + 1], traj.times[i + 1]);
        let margin = match (before, after) {
            (Ok(a), Ok(b)) => {
                let vdot = (b - a) / (traj.times[i + 1] - traj.times[i - 1]);
                vdot + decay_floor(linalg::norm2(&traj.states[i]))
            }
            _ => f64::INFINITY,
        };
        collector.observe(margin, &traj.states[i], traj.times[i], None);
    }
    collector.finish()
}

// ---------------------------------------------------------------------------
// Time-scale sweeps
// ---------------------------------------------------------------------------

/// Horizon and check policy shared by every `α` in a sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub t0: f64,
    pub t_end: f64,
    pub step: StepConfig,
    /// Stop-ball radius relative to each initial state norm.
    pub r_stop_rel: f64,
    pub tolerance: f64,
    pub max_checked: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 5.0,
            step: StepConfig::default(),
            r_stop_rel: 1e-4,
            tolerance: 1e-6,
            max_checked: 1024,
        }
    }
}

/// Per-α verdicts over a geometric grid, plus the empirical threshold: the
/// smallest grid `α` that passes together with its next two grid successors
/// (a verdict that survives two doublings).
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub verdicts: Vec<CertificateReport>,
    pub threshold: Option<f64>,
}

/// Build the constructed Lyapunov function at each `α`, integrate every
/// initial condition, and certify decay. Divergent trajectories fail that
/// `α` with an infinite margin.
pub fn sweep_alpha<B, F>(
    builder: B,
    sys: &TimeVaryingSystem,
    initial_conditions: &[Vec<f64>],
    alpha_grid: &[f64],
    decay_floor: F,
    cfg: &SweepConfig,
) -> SweepResult
where
    B: Fn(f64) -> ConstructedLyapunov,
    F: Fn(f64) -> f64,
{
    assert!(alpha_grid.windows(2).all(|w| w[0] < w[1]), "alpha grid must increase");
    assert!(!initial_conditions.is_empty());
    let mut verdicts = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let lyap = builder(alpha);
        let mut reports = Vec::with_capacity(initial_conditions.len());
        for x0 in initial_conditions {
            let decay_cfg = DecayConfig {
                r_stop: cfg.r_stop_rel * linalg::norm2(x0),
                tolerance: cfg.tolerance,
                max_checked: cfg.max_checked,
            };
            match integrate(sys, alpha, x0, cfg.t0, cfg.t_end, None, &cfg.step) {
                Ok(traj) => reports.push(certify_decay(&traj, &lyap, &decay_floor, &decay_cfg)),
                Err(_) => {
                    let mut c = MarginCollector::new(cfg.tolerance);
                    c.observe(f64::INFINITY, x0, cfg.t0, None);
                    reports.push(c.finish());
                }
            }
        }
        verdicts.push(CertificateReport::combine(reports.iter()));
    }
    let mut threshold = None;
    for i in 0..alpha_grid.len().saturating_sub(2) {
        if verdicts[i].passed && verdicts[i + 1].passed && verdicts[i + 2].passed {
            threshold = Some(alpha_grid[i]);
            break;
        }
    }
    SweepResult { alphas: alpha_grid.to_vec(), verdicts, threshold }
}

// ---------------------------------------------------------------------------
// ISS and iISS tests
// ---------------------------------------------------------------------------

/// Result of the gain-implication test, with counters proving the decay
/// floor was only evaluated where the gain condition held.
#[derive(Clone, Debug)]
pub struct IssOutcome {
    pub certificate: CertificateReport,
    pub samples_checked: usize,
    pub samples_excluded: usize,
}

/// Check the ISS implication along input-driven trajectories: wherever
/// `|u(t)| ≤ χ(|x(t)|)`, the constructed function must satisfy
/// `V̇ ≤ −floor(|x|)`. Samples violating the gain condition are excluded
/// (the implication is vacuous there) and the floor is not evaluated on
/// them.
pub fn iss_gain_test<F: Fn(f64) -> f64>(
    sys: &TimeVaryingSystem,
    lyap: &ConstructedLyapunov,
    chi: &Gauge,
    decay_floor: F,
    runs: &[(Vec<f64>, Arc<SignalFn>)],
    cfg: &SweepConfig,
) -> IssOutcome {
    let alpha = lyap.alpha();
    let mut collector = MarginCollector::new(cfg.tolerance);
    let mut checked = 0usize;
    let mut excluded = 0usize;
    for (x0, signal) in runs {
        let traj = match integrate(sys, alpha, x0, cfg.t0, cfg.t_end, Some(signal), &cfg.step) {
            Ok(t) => t,
            Err(_) => {
                collector.observe(f64::INFINITY, x0, cfg.t0, None);
                continue;
            }
        };
        let r_stop = cfg.r_stop_rel * linalg::norm2(x0);
        let n = traj.len();
        let eligible: Vec<usize> =
            (1..n - 1).filter(|&i| linalg::norm2(&traj.states[i]) > r_stop).collect();
        let stride = if eligible.len() <= cfg.max_checked {
            1
        } else {
            eligible.len().div_ceil(cfg.max_checked.max(1))
        };
        for &i in eligible.iter().step_by(stride) {
            let norm = linalg::norm2(&traj.states[i]);
            let u_norm = linalg::norm2(&signal(traj.times[i]));
            if u_norm > chi.eval(norm) {
                excluded += 1;
                continue;
            }
            checked += 1;
            let before = lyap.try_eval(&traj.states[i - 1], traj.times[i - 1]);
            let after = lyap.try_eval(&traj.states[i + 1], traj.times[i + 1]);
            let margin = match (before, after) {
                (Ok(a), Ok(b)) => {
                    let vdot = (b - a) / (traj.times[i + 1] - traj.times[i - 1]);
                    vdot + decay_floor(norm)
                }
                _ => f64::INFINITY,
            };
            collector.observe(margin, &traj.states[i], traj.times[i], Some(u_norm));
        }
    }
    IssOutcome { certificate: collector.finish(), samples_checked: checked, samples_excluded: excluded }
}

/// Fit the smallest `r̄` with `V̇ ≤ −ν(|x|) + r̄·|u|²` along the supplied
/// input-driven runs: the max over samples of `(V̇ + ν(|x|)) / |u|²`,
/// clamped below at zero. Samples with `u = 0` contribute nothing.
pub fn iiss_estimate(
    lyap: &ConstructedLyapunov,
    nu: &Gauge,
    runs: &[(Trajectory, Arc<SignalFn>)],
) -> f64 {
    assert!(!runs.is_empty());
    let mut r_bar: f64 = 0.0;
    for (traj, signal) in runs {
        let n = traj.len();
        for i in 1..n - 1 {
            let u_norm = linalg::norm2(&signal(traj.times[i]));
            if u_norm < 1e-12 {
                continue;
            }
            let before = lyap.eval(&traj.states[i - 1], traj.times[i - 1]);
            let after = lyap.eval(&traj.states[i + 1], traj.times[i + 1]);
            let vdot = (after - before) / (traj.times[i + 1] - traj.times[i - 1]);
            let quotient = (vdot + nu.eval(linalg::norm2(&traj.states[i]))) / (u_norm * u_norm);
            if quotient > r_bar {
                r_bar = quotient;
            }
        }
    }
    r_bar
}

// ---------------------------------------------------------------------------
// Exponential envelope fitting
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum FitError {
    /// The trajectory never decayed below `1e-6·|x₀|`.
    NoDecay { trajectory: usize, final_ratio: f64 },
    /// Zero initial state: the normalized envelope is undefined.
    ZeroInitialState { trajectory: usize },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::NoDecay { trajectory, final_ratio } => write!(
                f,
                "trajectory {trajectory} never decayed below 1e-6 of its start (reached {final_ratio:.3e})"
            ),
            FitError::ZeroInitialState { trajectory } => {
                write!(f, "trajectory {trajectory} starts at the origin")
            }
        }
    }
}

impl core::error::Error for FitError {}

const DECAY_FLOOR_RATIO: f64 = 1e-6;

/// Fit `|x(t)| ≤ D·|x₀|·e^{−λ(t−t₀)}` across trajectories.
///
/// Each trajectory gets its own rate (least squares on the log of windowed
/// peak maxima of `|x|/|x₀|`) and its own smallest constant; the pooled
/// envelope takes the largest constant and the smallest rate, which keeps the
/// residual non-positive and makes the constant monotone under adding
/// trajectories. Trajectories that never reach `1e-6·|x₀|` are refused.
pub fn fit_envelope(trajs: &[Trajectory]) -> Result<EnvelopeFit, FitError> {
    assert!(!trajs.is_empty());
    let mut pooled_d: f64 = 0.0;
    let mut pooled_lambda = f64::INFINITY;
    for (idx, traj) in trajs.iter().enumerate() {
        let x0 = linalg::norm2(&traj.x0);
        if x0 == 0.0 {
            return Err(FitError::ZeroInitialState { trajectory: idx });
        }
        let ratios: Vec<f64> =
            traj.states.iter().map(|x| linalg::norm2(x) / x0).collect();
        let cut = match ratios.iter().position(|&r| r < DECAY_FLOOR_RATIO) {
            Some(i) => i,
            None => {
                let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                return Err(FitError::NoDecay { trajectory: idx, final_ratio: min });
            }
        };
        let windows = 24usize.min((cut / 4).max(2));
        let span = traj.times[cut] - traj.t0;
        let mut xs = Vec::with_capacity(windows);
        let mut ys = Vec::with_capacity(windows);
        for w in 0..windows {
            let lo = traj.t0 + span * w as f64 / windows as f64;
            let hi = traj.t0 + span * (w + 1) as f64 / windows as f64;
            let mut peak: f64 = 0.0;
            let mut t_peak = lo;
            for (&t, &ratio) in traj.times.iter().zip(&ratios).take(cut + 1) {
                if t >= lo && t <= hi && ratio > peak {
                    peak = ratio;
                    t_peak = t;
                }
            }
            if peak > 0.0 {
                xs.push(t_peak - traj.t0);
                ys.push(math::ln(peak));
            }
        }
        // Least squares slope of log-peak against time.
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut var = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            cov += (x - mx) * (y - my);
            var += (x - mx) * (x - mx);
        }
        let slope = cov / var;
        // NaN-proof: refuse unless the fitted slope is genuinely negative.
        if slope.is_nan() || slope >= 0.0 {
            return Err(FitError::NoDecay { trajectory: idx, final_ratio: ratios[cut] });
        }
        let lambda = -slope;
        let mut d: f64 = 0.0;
        for (i, &r) in ratios.iter().enumerate() {
            let grown = r * math::exp(lambda * (traj.times[i] - traj.t0));
            if grown > d {
                d = grown;
            }
        }
        // Head-room keeps the residual strictly non-positive under round-off.
        d *= 1.0 + 1e-12;
        if d > pooled_d {
            pooled_d = d;
        }
        if lambda < pooled_lambda {
            pooled_lambda = lambda;
        }
    }
    let mut residual = f64::NEG_INFINITY;
    for traj in trajs {
        let x0 = linalg::norm2(&traj.x0);
        for (i, x) in traj.states.iter().enumerate() {
            let envelope = pooled_d * x0 * math::exp(-pooled_lambda * (traj.times[i] - traj.t0));
            let r = linalg::norm2(x) - envelope;
            if r > residual {
                residual = r;
            }
        }
    }
    Ok(EnvelopeFit { d: pooled_d, lambda: pooled_lambda, residual })
}
