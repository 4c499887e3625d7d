//! Domain types: dynamics, comparison functions (gauges), Lyapunov
//! candidates, certificates, and the sample grids the verifiers run on.
//!
//! Everything here is immutable after construction and evaluation closures
//! are expected to be pure; verifier callers may evaluate grid points in any
//! order, and reports stay deterministic because worst-point selection ties
//! break on the lowest grid index.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::math;

/// Dynamics `f(x, t, τ)` with slow time `t` and fast time `τ` kept separate,
/// so one closure serves every time-scale constant `α` (the integrator passes
/// `τ = α t`).
pub type DynamicsFn = dyn Fn(&[f64], f64, f64) -> Vec<f64> + Send + Sync;
/// Row-major `n×n` Jacobian `∂f/∂x (x, t, τ)`.
pub type JacobianFn = dyn Fn(&[f64], f64, f64) -> Vec<f64> + Send + Sync;
/// Row-major `n×m` input map `g(x, t, τ)`.
pub type InputMapFn = dyn Fn(&[f64], f64, f64) -> Vec<f64> + Send + Sync;
/// Limiting dynamics `f̄(x, t)`.
pub type LimitingFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
/// Row-major `n×n` Jacobian `∂f̄/∂x (x, t)`.
pub type LimitingJacobianFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
/// Scalar field of state and time, e.g. a Lyapunov function.
pub type ScalarField = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
/// Vector field of state and time, e.g. a state gradient.
pub type VectorField = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
/// Scalar function of one real (gauges, periodic waves, input components).
pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;
/// Input signal `t ↦ u(t)`.
pub type SignalFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Relative tolerance for analytic-vs-finite-difference gradient agreement.
pub const GRADIENT_RTOL: f64 = 1e-5;

/// Default tolerance on certificate margins.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Step for central finite differences, scaled to the state magnitude.
#[inline]
pub(crate) fn fd_step(scale: f64) -> f64 {
    1e-6 * if scale > 1.0 { scale } else { 1.0 }
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

/// Rapidly time-varying dynamics `ẋ = f(x, t, αt)`, optionally with an input
/// map `g` so that controls enter as `... + g(x, t, αt) u`.
#[derive(Clone)]
pub struct TimeVaryingSystem {
    pub dim: usize,
    pub f: Arc<DynamicsFn>,
    pub jac_x: Option<Arc<JacobianFn>>,
    pub input_map: Option<Arc<InputMapFn>>,
    pub input_dim: usize,
}

impl TimeVaryingSystem {
    pub fn new(dim: usize, f: Arc<DynamicsFn>) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        Self { dim, f, jac_x: None, input_map: None, input_dim: 0 }
    }

    pub fn with_jacobian(mut self, jac: Arc<JacobianFn>) -> Self {
        self.jac_x = Some(jac);
        self
    }

    pub fn with_input(mut self, g: Arc<InputMapFn>, input_dim: usize) -> Self {
        self.input_map = Some(g);
        self.input_dim = input_dim;
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64, tau: f64) -> Vec<f64> {
        (self.f)(x, t, tau)
    }

    /// Jacobian `∂f/∂x`, analytic when supplied, otherwise central
    /// finite differences column by column.
    pub fn jacobian(&self, x: &[f64], t: f64, tau: f64) -> Vec<f64> {
        if let Some(j) = &self.jac_x {
            return j(x, t, tau);
        }
        jacobian_fd(|y| (self.f)(y, t, tau), x)
    }
}

/// Limiting (averaged) dynamics `ẋ = f̄(x, t)`.
#[derive(Clone)]
pub struct LimitingSystem {
    pub dim: usize,
    pub fbar: Arc<LimitingFn>,
    pub jac_x: Option<Arc<LimitingJacobianFn>>,
}

impl LimitingSystem {
    pub fn new(dim: usize, fbar: Arc<LimitingFn>) -> Self {
        assert!(dim > 0, "state dimension must be positive");
        Self { dim, fbar, jac_x: None }
    }

    pub fn with_jacobian(mut self, jac: Arc<LimitingJacobianFn>) -> Self {
        self.jac_x = Some(jac);
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.fbar)(x, t)
    }

    pub fn jacobian(&self, x: &[f64], t: f64) -> Vec<f64> {
        if let Some(j) = &self.jac_x {
            return j(x, t);
        }
        jacobian_fd(|y| (self.fbar)(y, t), x)
    }
}

pub(crate) fn jacobian_fd<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h = fd_step(linalg::norm2(x));
    let mut jac = vec![0.0; n * n];
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..n {
            jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

// ---------------------------------------------------------------------------
// Lyapunov candidates and gauges
// ---------------------------------------------------------------------------

/// A candidate Lyapunov function `V(x, t)` with optional analytic derivatives
/// and optional proper-ness bounds `δ₁(|x|) ≤ V ≤ δ₂(|x|)`.
#[derive(Clone)]
pub struct LyapunovCandidate {
    pub v: Arc<ScalarField>,
    pub grad_x: Option<Arc<VectorField>>,
    pub dt: Option<Arc<ScalarField>>,
    pub bounds: Option<(Gauge, Gauge)>,
}

impl LyapunovCandidate {
    pub fn new(v: Arc<ScalarField>) -> Self {
        Self { v, grad_x: None, dt: None, bounds: None }
    }

    pub fn with_gradient(mut self, grad: Arc<VectorField>, dt: Arc<ScalarField>) -> Self {
        self.grad_x = Some(grad);
        self.dt = Some(dt);
        self
    }

    pub fn with_bounds(mut self, lower: Gauge, upper: Gauge) -> Self {
        self.bounds = Some((lower, upper));
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.v)(x, t)
    }

    pub fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        if let Some(g) = &self.grad_x {
            return g(x, t);
        }
        gradient_fd(|y, s| (self.v)(y, s), x, t)
    }

    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        if let Some(d) = &self.dt {
            return d(x, t);
        }
        let h = fd_step(math::abs(t));
        ((self.v)(x, t + h) - (self.v)(x, t - h)) / (2.0 * h)
    }

    /// Positive definiteness by sampling: `V(0, t) = 0` and `V(x, t) > 0`
    /// for every nonzero grid state.
    pub fn check_positive_definite(&self, grid: &SampleGrid) -> CertificateReport {
        let mut collector = MarginCollector::new(DEFAULT_TOLERANCE);
        let zero = vec![0.0; grid.dim];
        for &t in &grid.times {
            let v0 = (self.v)(&zero, t);
            collector.observe(math::abs(v0), &zero, t, None);
            for x in &grid.states {
                let v = (self.v)(x, t);
                // violation when V ≤ 0 away from the origin
                let margin = if v > 0.0 { -v } else { math::abs(v) + f64::MIN_POSITIVE };
                collector.observe(margin, x, t, None);
            }
        }
        collector.finish()
    }
}

pub(crate) fn gradient_fd<F: Fn(&[f64], f64) -> f64>(f: F, x: &[f64], t: f64) -> Vec<f64> {
    let h = fd_step(linalg::norm2(x));
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = f(&xp, t);
        xp[j] = x[j] - h;
        let fm = f(&xp, t);
        xp[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Declared class of a scalar comparison function.
///
/// Class `M` means `s·g(s) → 0` as `s → ∞`; only the monotone trend is
/// decidable by sampling, so the declaration is a trusted annotation that the
/// checks can refute but not prove.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeClass {
    K,
    KInfinity,
    M,
    PositiveDefinite,
}

/// Scalar comparison function with a declared class and a label for reports.
#[derive(Clone)]
pub struct Gauge {
    eval: Arc<ScalarFn>,
    pub declared_class: GaugeClass,
    pub label: String,
}

impl Gauge {
    pub fn new(declared_class: GaugeClass, label: &str, eval: Arc<ScalarFn>) -> Self {
        Self { eval, declared_class, label: String::from(label) }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    /// Same function, rescaled by a positive factor.
    pub fn scaled(&self, factor: f64, label: &str) -> Self {
        assert!(factor > 0.0);
        let inner = self.eval.clone();
        Gauge::new(self.declared_class, label, Arc::new(move |s| factor * inner(s)))
    }
}

/// Constants tying a Lyapunov function for the limiting dynamics to one gauge
/// `δ`: decay fraction `c̄ ∈ (0,1)`, linear slope `c̄̄` with `δ(s) ≤ c̄̄·s`,
/// Jacobian bound `K > 1`, and the smallest admissible window rate `η₀`.
#[derive(Clone, Copy, Debug)]
pub struct CompatibilityConstants {
    pub c_bar: f64,
    pub c_bbar: f64,
    pub jacobian_bound: f64,
    pub eta_floor: f64,
}

impl CompatibilityConstants {
    pub fn new(c_bar: f64, c_bbar: f64, jacobian_bound: f64, eta_floor: f64) -> Self {
        assert!(c_bar > 0.0 && c_bar < 1.0, "c_bar must lie in (0,1)");
        assert!(c_bbar > 0.0, "c_bbar must be positive");
        assert!(jacobian_bound > 1.0, "jacobian bound must exceed 1");
        assert!(eta_floor > 0.0, "eta floor must be positive");
        Self { c_bar, c_bbar, jacobian_bound, eta_floor }
    }
}

// ---------------------------------------------------------------------------
// Strictification data
// ---------------------------------------------------------------------------

/// Ingredients for strictifying a nonstrict Lyapunov function: the candidate
/// `V`, the decay part `W ≥ 0`, the oscillation shape `Θ`, and a bounded
/// `T`-periodic zero-mean wave `p` such that along the dynamics
/// `V̇ ≤ −W(x,t) + p(αt)·Θ(x,t)`, with `V ≥ c|Θ|` and
/// `W ≥ c·max{|Θ|, |Θ̇|}` for some `c > 0`.
#[derive(Clone)]
pub struct StrictificationData {
    pub candidate: LyapunovCandidate,
    pub decay: Arc<ScalarField>,
    pub oscillation: Arc<ScalarField>,
    pub oscillation_grad: Option<Arc<VectorField>>,
    pub oscillation_dt: Option<Arc<ScalarField>>,
    pub wave: Arc<ScalarFn>,
    pub period: f64,
    pub wave_bound: f64,
    pub domination: f64,
}

impl StrictificationData {
    pub fn new(
        candidate: LyapunovCandidate,
        decay: Arc<ScalarField>,
        oscillation: Arc<ScalarField>,
        wave: Arc<ScalarFn>,
        period: f64,
        wave_bound: f64,
        domination: f64,
    ) -> Self {
        assert!(period > 0.0, "period must be positive");
        assert!(wave_bound > 0.0, "wave bound must be positive");
        assert!(domination > 0.0, "domination constant must be positive");
        Self {
            candidate,
            decay,
            oscillation,
            oscillation_grad: None,
            oscillation_dt: None,
            wave,
            period,
            wave_bound,
            domination,
        }
    }

    pub fn with_oscillation_derivatives(
        mut self,
        grad: Arc<VectorField>,
        dt: Arc<ScalarField>,
    ) -> Self {
        self.oscillation_grad = Some(grad);
        self.oscillation_dt = Some(dt);
        self
    }

    pub fn oscillation_gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        if let Some(g) = &self.oscillation_grad {
            return g(x, t);
        }
        gradient_fd(|y, s| (self.oscillation)(y, s), x, t)
    }

    pub fn oscillation_time_derivative(&self, x: &[f64], t: f64) -> f64 {
        if let Some(d) = &self.oscillation_dt {
            return d(x, t);
        }
        let h = fd_step(math::abs(t));
        ((self.oscillation)(x, t + h) - (self.oscillation)(x, t - h)) / (2.0 * h)
    }

    /// Wave amplitude stays within the declared bound on a dense sample of
    /// one period.
    pub fn check_wave_bound(&self, samples: usize) -> CertificateReport {
        let mut collector = MarginCollector::new(DEFAULT_TOLERANCE);
        for k in 0..samples {
            let l = self.period * (k as f64 + 0.5) / samples as f64;
            let margin = math::abs((self.wave)(l)) - self.wave_bound;
            collector.observe(margin, &[], l, Some(l));
        }
        collector.finish()
    }
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// The grid point attaining the worst margin, plus any auxiliary parameter
/// (window rate η, fast time τ, or a gauge argument).
#[derive(Clone, Debug, PartialEq)]
pub struct WorstPoint {
    pub state: Vec<f64>,
    pub time: f64,
    pub aux: Option<f64>,
}

/// Outcome of a sampled hypothesis or decay check. A margin is the value of
/// `LHS − RHS` of the checked inequality, so `≤ tolerance` means the sample
/// satisfied it; `worst_margin` is the maximum over all samples and
/// `worst_point` the first grid point attaining it.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub passed: bool,
    pub worst_margin: f64,
    pub worst_point: Option<WorstPoint>,
    pub samples_total: usize,
    pub tolerance: f64,
}

impl CertificateReport {
    /// Vacuous pass: nothing was eligible for checking.
    pub fn vacuous(tolerance: f64) -> Self {
        Self {
            passed: true,
            worst_margin: f64::NEG_INFINITY,
            worst_point: None,
            samples_total: 0,
            tolerance,
        }
    }

    /// Combine sub-reports into one verdict, keeping the worst margin.
    pub fn combine<'a, I: IntoIterator<Item = &'a CertificateReport>>(reports: I) -> Self {
        let mut out = CertificateReport::vacuous(f64::INFINITY);
        for r in reports {
            out.samples_total += r.samples_total;
            if r.tolerance < out.tolerance {
                out.tolerance = r.tolerance;
            }
            if r.worst_margin > out.worst_margin {
                out.worst_margin = r.worst_margin;
                out.worst_point = r.worst_point.clone();
            }
            out.passed = out.passed && r.passed;
        }
        out
    }
}

/// Streaming worst-margin tracker. Non-finite margins are treated as hard
/// violations; ties keep the earliest point so reports do not depend on
/// evaluation order.
pub struct MarginCollector {
    tolerance: f64,
    worst: f64,
    point: Option<WorstPoint>,
    count: usize,
}

impl MarginCollector {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, worst: f64::NEG_INFINITY, point: None, count: 0 }
    }

    pub fn observe(&mut self, margin: f64, state: &[f64], time: f64, aux: Option<f64>) {
        self.count += 1;
        let margin = if margin.is_nan() { f64::INFINITY } else { margin };
        if margin > self.worst {
            self.worst = margin;
            self.point = Some(WorstPoint { state: state.to_vec(), time, aux });
        }
    }

    pub fn finish(self) -> CertificateReport {
        let passed = self.count == 0 || self.worst <= self.tolerance;
        CertificateReport {
            passed,
            worst_margin: self.worst,
            worst_point: self.point,
            samples_total: self.count,
            tolerance: self.tolerance,
        }
    }
}

/// Exponential decay envelope `|x(t)| ≤ D·|x₀|·e^{−λ(t−t₀)}` fitted to
/// trajectories; `residual` is the largest signed violation over all samples
/// (non-positive when the envelope holds).
#[derive(Clone, Copy, Debug)]
pub struct EnvelopeFit {
    pub d: f64,
    pub lambda: f64,
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// Sample grids
// ---------------------------------------------------------------------------

/// States, slow times, and fast times the sampled checks run over.
///
/// The default grid is log-radial in the state (radii `10^-2 .. 10^2`,
/// sixteen per decade, directions from a seeded low-discrepancy sequence) so
/// both the small- and large-state regime of each inequality gets exercised,
/// with times covering `[0, 20]` and fast times several wave periods.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub dim: usize,
    pub states: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub fast_times: Vec<f64>,
}

/// Knobs for [`SampleGrid::log_radial`].
#[derive(Clone, Copy, Debug)]
pub struct GridConfig {
    pub seed: u64,
    pub radius_min_exp: f64,
    pub radius_max_exp: f64,
    pub per_decade: usize,
    pub directions: usize,
    pub time_points: usize,
    pub t_max: f64,
    pub tau_points: usize,
    pub tau_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            radius_min_exp: -2.0,
            radius_max_exp: 2.0,
            per_decade: 16,
            directions: 8,
            time_points: 16,
            t_max: 20.0,
            tau_points: 48,
            tau_max: 40.0 * core::f64::consts::PI,
        }
    }
}

impl SampleGrid {
    pub fn log_radial(dim: usize, cfg: &GridConfig) -> Self {
        assert!(dim > 0);
        let decades = cfg.radius_max_exp - cfg.radius_min_exp;
        let radii_count = (decades * cfg.per_decade as f64) as usize + 1;
        let dirs = unit_directions(dim, cfg.directions, cfg.seed);
        let mut states = Vec::with_capacity(radii_count * dirs.len());
        for k in 0..radii_count {
            let exp = cfg.radius_min_exp + k as f64 / cfg.per_decade as f64;
            let r = math::pow(10.0, exp);
            for d in &dirs {
                states.push(d.iter().map(|c| c * r).collect());
            }
        }
        let times = kronecker_points(cfg.time_points, 0.0, cfg.t_max, cfg.seed ^ 0x9e37);
        let fast_times = kronecker_points(cfg.tau_points, 0.0, cfg.tau_max, cfg.seed ^ 0x79b9);
        Self { dim, states, times, fast_times }
    }

    pub fn default_for_dim(dim: usize, seed: u64) -> Self {
        Self::log_radial(dim, &GridConfig { seed, ..GridConfig::default() })
    }

    /// Same grid family at half the spacing (all point counts doubled); the
    /// low-discrepancy sequences extend rather than reshuffle, so a refined
    /// grid contains new points without discarding coverage.
    pub fn refined(dim: usize, cfg: &GridConfig) -> Self {
        let fine = GridConfig {
            per_decade: cfg.per_decade * 2,
            directions: cfg.directions * 2,
            time_points: cfg.time_points * 2,
            tau_points: cfg.tau_points * 2,
            ..*cfg
        };
        Self::log_radial(dim, &fine)
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty() || self.times.is_empty()
    }
}

/// Strictly increasing geometric grid from `lo` to `hi` (inclusive).
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = math::pow(hi / lo, 1.0 / (points - 1) as f64);
    let mut out = Vec::with_capacity(points);
    let mut v = lo;
    for _ in 0..points {
        out.push(v);
        v *= ratio;
    }
    *out.last_mut().unwrap() = hi;
    out
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn seed_unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Generalised golden-ratio (Kronecker) sequence in `[0,1)^dim`; the prefix
/// of a longer run equals a shorter run, which keeps refined grids supersets.
pub fn kronecker_sequence(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    // Unique positive root of x^(dim+1) = x + 1.
    let mut phi = 1.5;
    for _ in 0..64 {
        phi = math::pow(1.0 + phi, 1.0 / (dim as f64 + 1.0));
    }
    let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d) ^ 0x5851f42d4c957f2d;
    let offsets: Vec<f64> = (0..dim).map(|_| seed_unit(&mut state)).collect();
    let alphas: Vec<f64> = (1..=dim).map(|j| math::rem_euclid(math::pow(phi, -(j as f64)), 1.0)).collect();
    (0..count)
        .map(|k| {
            (0..dim)
                .map(|j| math::rem_euclid(offsets[j] + (k as f64 + 1.0) * alphas[j], 1.0))
                .collect()
        })
        .collect()
}

/// `count` points equidistributed over `[lo, hi]`, seeded.
pub fn kronecker_points(count: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    kronecker_sequence(1, count, seed).into_iter().map(|p| lo + (hi - lo) * p[0]).collect()
}

/// Seeded unit directions. Dimension one alternates signs; higher dimensions
/// map low-discrepancy cube points onto the sphere.
pub fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 1 {
        return (0..count.max(2)).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect();
    }
    let raw = kronecker_sequence(dim, count * 2, seed);
    let mut out = Vec::with_capacity(count);
    for p in raw {
        if out.len() == count {
            break;
        }
        let v: Vec<f64> = p.iter().map(|u| 2.0 * u - 1.0).collect();
        let n = linalg::norm2(&v);
        if n < 0.2 {
            continue;
        }
        out.push(v.iter().map(|c| c / n).collect());
    }
    let mut state = seed;
    while out.len() < count {
        // Degenerate fallback, only reachable if nearly all cube points
        // landed in the rejection ball.
        let v: Vec<f64> = (0..dim).map(|_| 2.0 * seed_unit(&mut state) - 1.0).collect();
        let n = linalg::norm2(&v);
        if n >= 0.2 {
            out.push(v.iter().map(|c| c / n).collect());
        }
    }
    out
}

/// Seeded initial conditions with every component in `[lo, hi]`, skipping
/// near-zero states (they make decay checks vacuous).
pub fn seeded_states(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let raw = kronecker_sequence(dim, count * 3 + 8, seed);
    let span = hi - lo;
    let floor = 0.02 * span;
    let mut out = Vec::with_capacity(count);
    for p in raw {
        if out.len() == count {
            break;
        }
        let x: Vec<f64> = p.iter().map(|u| lo + span * u).collect();
        if linalg::norm2(&x) > floor {
            out.push(x);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Check that the dynamics vanish at the origin for all sampled times and
/// that a supplied Jacobian matches finite differences of `f`.
///
/// Margins: `|f(0,t,τ)|` for the null check, and (relative Jacobian
/// mismatch − [`GRADIENT_RTOL`]) for the consistency check, so the report
/// passes only when both hold within `tolerance`. Non-finite outputs of `f`
/// surface as infinite margins with the offending point attached.
pub fn validate_system(sys: &TimeVaryingSystem, grid: &SampleGrid) -> CertificateReport {
    assert!(!grid.is_empty(), "sample grid must be nonempty");
    let mut collector = MarginCollector::new(DEFAULT_TOLERANCE);
    let zero = vec![0.0; sys.dim];
    for &t in &grid.times {
        for &tau in &grid.fast_times {
            let fx = sys.eval(&zero, t, tau);
            let margin = if fx.iter().all(|v| v.is_finite()) {
                linalg::norm2(&fx)
            } else {
                f64::INFINITY
            };
            collector.observe(margin, &zero, t, Some(tau));
        }
    }
    if sys.jac_x.is_some() {
        // A strided subset keeps the finite-difference pass cheap on big grids.
        let stride = (grid.states.len() / 48).max(1);
        for x in grid.states.iter().step_by(stride) {
            for (&t, &tau) in grid.times.iter().zip(grid.fast_times.iter().cycle()) {
                let ja = sys.jacobian(x, t, tau);
                let jf = jacobian_fd(|y| sys.eval(y, t, tau), x);
                let mut rel: f64 = 0.0;
                for (a, b) in ja.iter().zip(&jf) {
                    let scale = if math::abs(*a) > 1.0 { math::abs(*a) } else { 1.0 };
                    let r = math::abs(a - b) / scale;
                    if r > rel {
                        rel = r;
                    }
                }
                collector.observe(rel - GRADIENT_RTOL, x, t, Some(tau));
            }
        }
    }
    collector.finish()
}

/// Check a gauge against its declared class on a strictly increasing grid
/// (at least 32 points).
///
/// Class K/K∞: zero at zero and strictly increasing. Class M: `s·g(s)`
/// nonincreasing with the final product under a tenth of the first (the
/// limit itself is not decidable by sampling). Negative values fail every
/// class.
pub fn gauge_class_check(g: &Gauge, grid: &[f64]) -> CertificateReport {
    assert!(grid.len() >= 32, "gauge grid needs at least 32 points");
    assert!(grid.windows(2).all(|w| w[0] < w[1]), "gauge grid must be strictly increasing");
    assert!(grid[0] > 0.0, "gauge grid must start above zero");
    let mut collector = MarginCollector::new(DEFAULT_TOLERANCE);
    let values: Vec<f64> = grid.iter().map(|&s| g.eval(s)).collect();
    for (&s, &v) in grid.iter().zip(&values) {
        // Negative gauge values are violations for every declared class.
        collector.observe(-v - f64::MIN_POSITIVE, &[], 0.0, Some(s));
    }
    match g.declared_class {
        GaugeClass::K | GaugeClass::KInfinity => {
            collector.observe(math::abs(g.eval(0.0)), &[], 0.0, Some(0.0));
            for i in 0..grid.len() - 1 {
                let diff = values[i] - values[i + 1];
                let margin = if diff < 0.0 { diff } else { diff + f64::MIN_POSITIVE };
                collector.observe(margin, &[], 0.0, Some(grid[i]));
            }
        }
        GaugeClass::M => {
            let products: Vec<f64> = grid.iter().zip(&values).map(|(&s, &v)| s * v).collect();
            for i in 0..grid.len() - 1 {
                collector.observe(products[i + 1] - products[i], &[], 0.0, Some(grid[i]));
            }
            let first = products[0];
            let last = *products.last().unwrap();
            let margin = if last < first / 10.0 { last - first / 10.0 } else { last - first / 10.0 + f64::MIN_POSITIVE };
            collector.observe(margin, &[], 0.0, Some(*grid.last().unwrap()));
        }
        GaugeClass::PositiveDefinite => {
            collector.observe(math::abs(g.eval(0.0)), &[], 0.0, Some(0.0));
            for (&s, &v) in grid.iter().zip(&values) {
                let margin = if v > 0.0 { -v } else { math::abs(v) + f64::MIN_POSITIVE };
                collector.observe(margin, &[], 0.0, Some(s));
            }
        }
    }
    collector.finish()
}
