//! Registry of the stock example systems, each packaged with its limiting
//! dynamics, Lyapunov ingredients, gauges, and the checks it is expected to
//! pass on default grids. Bundle names are part of the CLI contract:
//! `nonuges`, `nonuges-lnk`, `identification`, `friction`, `friction-const`,
//! `ngs`, `satfb`.
//!
//! Numeric parameters the underlying models leave open (friction
//! coefficients, regressor signals, wave shapes) are fixed here as documented
//! defaults; the constructors accept overrides.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::constructors::{
    excitation_lyapunov, friction_lyapunov, iss_gain, iss_gain_matrix_input, shifted_lyapunov,
    strictified_lyapunov, ConstructError, ConstructedLyapunov,
};
use crate::math;
use crate::numerics::{QuadratureConfig, StepConfig};
use crate::systems::{
    gauge_class_check, geometric_grid, seeded_states, validate_system, CertificateReport,
    CompatibilityConstants, Gauge, GaugeClass, GridConfig, LimitingSystem, LyapunovCandidate,
    SampleGrid, ScalarFn, SignalFn, StrictificationData, TimeVaryingSystem,
};
use crate::verifiers::{
    certify_decay, check_averaging_bound, check_compatibility, check_growth_bounds,
    check_running_integral_bound, check_strictification, sweep_alpha, AveragingGrid, DecayConfig,
    SweepConfig, SweepResult,
};

/// The checks a bundle advertises; the CLI accepts the same vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Hypotheses,
    Decay,
    Iss,
    Iiss,
    Envelope,
    Sweep,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::Hypotheses,
        CheckKind::Decay,
        CheckKind::Iss,
        CheckKind::Iiss,
        CheckKind::Envelope,
        CheckKind::Sweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Hypotheses => "hypotheses",
            CheckKind::Decay => "decay",
            CheckKind::Iss => "iss",
            CheckKind::Iiss => "iiss",
            CheckKind::Envelope => "envelope",
            CheckKind::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }
}

/// Shared policy for bundle-level runs: seed, quadrature, stepping, and
/// decay-check knobs.
#[derive(Clone, Copy, Debug)]
pub struct RunPolicy {
    pub seed: u64,
    pub quad: QuadratureConfig,
    pub step: StepConfig,
    pub tolerance: f64,
    pub max_checked: usize,
    pub r_stop_rel: f64,
}

impl Default for RunPolicy {
    fn default() -> Self {
        Self {
            seed: 42,
            quad: QuadratureConfig::default(),
            step: StepConfig::default(),
            tolerance: 1e-6,
            max_checked: 1024,
            r_stop_rel: 1e-4,
        }
    }
}

/// An example system with everything its certificates need.
pub struct ExampleBundle {
    pub name: String,
    pub sys: TimeVaryingSystem,
    pub lim: Option<LimitingSystem>,
    pub candidate: LyapunovCandidate,
    pub delta: Option<Gauge>,
    pub n_gauge: Option<Gauge>,
    pub constants: Option<CompatibilityConstants>,
    pub strictification: Option<StrictificationData>,
    /// Gain for the ISS implication test.
    pub input_gain: Option<Gauge>,
    /// Comparison rate for the iISS estimate.
    pub iiss_rate: Option<Gauge>,
    /// Radial decay floor for trajectory certification.
    pub decay_floor: Arc<ScalarFn>,
    /// Floor used by time-scale sweeps (always along the fast system).
    pub sweep_floor: Arc<ScalarFn>,
    /// Certify decay along the limiting dynamics instead of the fast ones
    /// (used where the fast-system threshold exceeds desk-scale sweeps).
    pub decay_on_limiting: bool,
    pub default_alpha: f64,
    /// Smallest admissible `α` (exclusive).
    pub alpha_floor: f64,
    pub sweep_range: (f64, f64),
    pub ic_range: (f64, f64),
    pub ic_count: usize,
    pub t_end_decay: f64,
    pub t_end_envelope: f64,
    pub expected: Vec<CheckKind>,
    pub notes: Vec<String>,
}

impl ExampleBundle {
    pub fn dim(&self) -> usize {
        self.sys.dim
    }

    /// Build the constructed Lyapunov function for this bundle at `α`:
    /// limiting-composition when limiting dynamics exist, strictification
    /// otherwise.
    pub fn construct(&self, alpha: f64, quad: &QuadratureConfig) -> ConstructedLyapunov {
        match (&self.lim, &self.strictification) {
            (Some(lim), _) => shifted_lyapunov(&self.candidate, &self.sys, lim, alpha, quad),
            (None, Some(sd)) => strictified_lyapunov(sd, alpha, quad),
            (None, None) => unreachable!("bundle carries neither limiting dynamics nor strictification data"),
        }
    }

    pub fn initial_conditions(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        seeded_states(self.dim(), count, self.ic_range.0, self.ic_range.1, seed)
    }

    fn decay_system(&self) -> TimeVaryingSystem {
        if self.decay_on_limiting {
            limiting_as_system(self.lim.as_ref().expect("limiting decay needs limiting dynamics"))
        } else {
            self.sys.clone()
        }
    }

    fn decay_lyapunov(&self, alpha: f64, quad: &QuadratureConfig) -> ConstructedLyapunov {
        if self.decay_on_limiting {
            // Fast and limiting dynamics coincide here, so the displacement
            // vanishes and the constructed function equals the candidate.
            let lim = self.lim.as_ref().unwrap();
            shifted_lyapunov(&self.candidate, &limiting_as_system(lim), lim, alpha, quad)
        } else {
            self.construct(alpha, quad)
        }
    }

    /// Integrate seeded initial conditions and certify the decay floor along
    /// each trajectory; the report combines all runs.
    pub fn decay_certificate(
        &self,
        alpha: f64,
        ic_count: usize,
        t_end: f64,
        policy: &RunPolicy,
    ) -> CertificateReport {
        let sys = self.decay_system();
        let lyap = self.decay_lyapunov(alpha, &policy.quad);
        let ics = self.initial_conditions(ic_count, policy.seed);
        let floor = self.decay_floor.clone();
        let mut reports = Vec::with_capacity(ics.len());
        for x0 in &ics {
            let cfg = DecayConfig {
                r_stop: policy.r_stop_rel * crate::linalg::norm2(x0),
                tolerance: policy.tolerance,
                max_checked: policy.max_checked,
            };
            match crate::numerics::integrate(&sys, alpha, x0, 0.0, t_end, None, &policy.step) {
                Ok(traj) => reports.push(certify_decay(&traj, &lyap, |s| floor(s), &cfg)),
                Err(_) => {
                    let mut c = crate::systems::MarginCollector::new(policy.tolerance);
                    c.observe(f64::INFINITY, x0, 0.0, None);
                    reports.push(c.finish());
                }
            }
        }
        CertificateReport::combine(reports.iter())
    }

    /// Sweep a geometric `α` grid along the fast dynamics with the bundle's
    /// constructed function and sweep floor. (Bundles whose headline decay
    /// certificate runs on the limiting dynamics still sweep the fast
    /// system here; an empty threshold is then an honest outcome.)
    pub fn sweep(
        &self,
        alpha_grid: &[f64],
        ic_count: usize,
        t_end: f64,
        policy: &RunPolicy,
    ) -> SweepResult {
        let ics = self.initial_conditions(ic_count, policy.seed);
        let floor = self.sweep_floor.clone();
        let quad = policy.quad;
        let cfg = SweepConfig {
            t0: 0.0,
            t_end,
            step: policy.step,
            r_stop_rel: policy.r_stop_rel,
            tolerance: policy.tolerance,
            max_checked: policy.max_checked,
        };
        sweep_alpha(
            |alpha| self.construct(alpha, &quad),
            &self.sys,
            &ics,
            alpha_grid,
            |s| floor(s),
            &cfg,
        )
    }

    /// Run every hypothesis check the bundle's ingredients support and
    /// return named reports.
    pub fn hypothesis_reports(&self, policy: &RunPolicy) -> Vec<(String, CertificateReport)> {
        let mut out = Vec::new();
        let grid = SampleGrid::log_radial(self.dim(), &GridConfig { seed: policy.seed, ..GridConfig::default() });
        out.push((String::from("system-null-and-jacobian"), validate_system(&self.sys, &grid)));
        out.push((
            String::from("candidate-positive-definite"),
            self.candidate.check_positive_definite(&grid),
        ));
        if let Some(delta) = &self.delta {
            out.push((
                String::from("delta-gauge-class"),
                gauge_class_check(delta, &geometric_grid(1e-3, 1e4, 64)),
            ));
        }
        if let Some(n) = &self.n_gauge {
            out.push((
                String::from("window-gauge-class"),
                gauge_class_check(n, &geometric_grid(1.0, 1e4, 64)),
            ));
        }
        if let (Some(lim), Some(delta), Some(consts)) = (&self.lim, &self.delta, &self.constants) {
            let compat = check_compatibility(&self.candidate, lim, delta, consts, &grid);
            out.push((String::from("compatibility-decay"), compat.decay));
            out.push((String::from("compatibility-growth"), compat.gradient_growth));
            out.push((String::from("compatibility-linear-bound"), compat.linear_bound));
            let growth =
                check_growth_bounds(&self.sys, lim, delta, consts.jacobian_bound, &grid);
            out.push((String::from("growth-bounds"), growth.combined));
            if let Some(n) = &self.n_gauge {
                let avg_grid =
                    AveragingGrid::seeded(self.dim(), policy.seed, consts.eta_floor, 1e3);
                let avg =
                    check_averaging_bound(&self.sys, lim, delta, n, &avg_grid, &policy.quad);
                out.push((String::from("averaging-bound"), avg.certificate));
            }
        }
        if let Some(sd) = &self.strictification {
            let strict = check_strictification(sd, &self.sys, &grid, &policy.quad);
            out.push((String::from("strict-split"), strict.decay_split));
            out.push((String::from("strict-zero-mean"), strict.zero_mean));
            out.push((String::from("strict-wave-bound"), strict.wave_bound));
            out.push((String::from("strict-domination"), strict.domination));
            let alpha = if self.default_alpha < 120.0 { self.default_alpha } else { 120.0 };
            let ts = crate::systems::kronecker_points(4, 0.5, 8.0, policy.seed);
            out.push((
                String::from("running-integral-bound"),
                check_running_integral_bound(
                    &sd.wave,
                    sd.period,
                    sd.wave_bound,
                    alpha,
                    &ts,
                    4,
                    &policy.quad,
                ),
            ));
        }
        out
    }
}

fn limiting_as_system(lim: &LimitingSystem) -> TimeVaryingSystem {
    let fbar = lim.fbar.clone();
    let mut sys =
        TimeVaryingSystem::new(lim.dim, Arc::new(move |x: &[f64], t: f64, _tau: f64| fbar(x, t)));
    if let Some(jac) = &lim.jac_x {
        let jac = jac.clone();
        sys = sys.with_jacobian(Arc::new(move |x: &[f64], t: f64, _tau: f64| jac(x, t)));
    }
    sys
}

// ---------------------------------------------------------------------------
// Oscillator with bounded rate (UGAS but not exponentially stable)
// ---------------------------------------------------------------------------

/// Shape functions for [`example_non_uges`]: an odd concave class-K `σ₁`
/// (with its antiderivative, which becomes the candidate), and any `σ₂` with
/// `sup(|σ₁'| + |σ₁·σ₂'|) < ∞`.
pub struct OscillatorShape {
    pub sigma1: Arc<ScalarFn>,
    pub sigma1_antiderivative: Arc<ScalarFn>,
    pub sigma2: Arc<ScalarFn>,
    /// `K` when `σ₁` is bounded, `KInfinity` when it grows without bound.
    pub delta_class: GaugeClass,
    pub jacobian_bound: f64,
    pub name: String,
}

/// `ẋ = −σ₁(x)·[2 + sin(t + cos(σ₂(x)))]·{1 + 10·sin(αt)}` with limiting
/// dynamics dropping the fast factor, candidate `V(x) = ∫₀^x σ₁`, gauge
/// `δ(s) = 33·σ₁(2s)`, and window gauge `N(η) = 60/η²`.
///
/// The decay fraction comes from concavity: `σ₁(2s) ≤ 2σ₁(s)` gives
/// `δ²(|x|) ≤ 4356·σ₁²(x)`, and the slow factor is at least 1, so
/// `c̄ = 1/4356` makes the gauge-squared decay hold.
pub fn example_non_uges(shape: OscillatorShape) -> ExampleBundle {
    let s1 = shape.sigma1.clone();
    let s2 = shape.sigma2.clone();
    let f = Arc::new(move |x: &[f64], t: f64, tau: f64| {
        let slow = 2.0 + math::sin(t + math::cos(s2(x[0])));
        vec![-s1(x[0]) * slow * (1.0 + 10.0 * math::sin(tau))]
    });
    let s1l = shape.sigma1.clone();
    let s2l = shape.sigma2.clone();
    let fbar = Arc::new(move |x: &[f64], t: f64| {
        vec![-s1l(x[0]) * (2.0 + math::sin(t + math::cos(s2l(x[0]))))]
    });
    let sys = TimeVaryingSystem::new(1, f);
    let lim = LimitingSystem::new(1, fbar);

    let anti = shape.sigma1_antiderivative.clone();
    let v = Arc::new(move |x: &[f64], _t: f64| anti(x[0]));
    let s1g = shape.sigma1.clone();
    let grad = Arc::new(move |x: &[f64], _t: f64| vec![s1g(x[0])]);
    let anti_b = shape.sigma1_antiderivative.clone();
    let bound = Gauge::new(GaugeClass::KInfinity, "V(s)", Arc::new(move |s| anti_b(s)));
    let candidate = LyapunovCandidate::new(v)
        .with_gradient(grad, Arc::new(|_x: &[f64], _t: f64| 0.0))
        .with_bounds(bound.clone(), bound);

    let s1d = shape.sigma1.clone();
    let delta = Gauge::new(
        shape.delta_class,
        "33*sigma1(2s)",
        Arc::new(move |s| 33.0 * s1d(2.0 * s)),
    );
    let n_gauge = Gauge::new(GaugeClass::M, "60/eta^2", Arc::new(|eta| 60.0 / (eta * eta)));
    let c_bar = 1.0 / 4356.0;
    let constants = CompatibilityConstants::new(c_bar, 66.0, shape.jacobian_bound, 1.0);

    let s1f = shape.sigma1.clone();
    let decay_floor: Arc<ScalarFn> = Arc::new(move |s| {
        let d = 33.0 * s1f(s);
        0.5 * c_bar * d * d
    });
    let sweep_floor = decay_floor.clone();
    let s1n = shape.sigma1.clone();
    let iiss_rate = Gauge::new(
        GaugeClass::PositiveDefinite,
        "cbar/4*delta(s/2)^2",
        Arc::new(move |s| {
            let d = 33.0 * s1n(s);
            0.25 * c_bar * d * d
        }),
    );
    let input_gain = iss_gain(&delta, c_bar);

    let expected = if shape.delta_class == GaugeClass::KInfinity {
        vec![CheckKind::Hypotheses, CheckKind::Decay, CheckKind::Iss]
    } else {
        vec![CheckKind::Hypotheses, CheckKind::Decay, CheckKind::Sweep, CheckKind::Iiss]
    };

    ExampleBundle {
        name: shape.name,
        sys,
        lim: Some(lim),
        candidate,
        delta: Some(delta),
        n_gauge: Some(n_gauge),
        constants: Some(constants),
        strictification: None,
        input_gain: Some(input_gain),
        iiss_rate: Some(iiss_rate),
        decay_floor,
        sweep_floor,
        decay_on_limiting: false,
        default_alpha: 4096.0,
        alpha_floor: 0.0,
        sweep_range: (1.0, 65536.0),
        ic_range: (-2.0, 2.0),
        ic_count: 5,
        t_end_decay: 2.0,
        t_end_envelope: 0.0,
        expected,
        notes: Vec::new(),
    }
}

/// Default instance: `σ₁ = σ₂ = arctan`. The limiting dynamics is UGAS but
/// not exponentially stable (its rate never exceeds `3π/2`).
pub fn nonuges_arctan() -> ExampleBundle {
    example_non_uges(OscillatorShape {
        sigma1: Arc::new(math::atan),
        sigma1_antiderivative: Arc::new(|x| {
            let a = math::abs(x);
            a * math::atan(a) - 0.5 * math::ln(1.0 + a * a)
        }),
        sigma2: Arc::new(math::atan),
        delta_class: GaugeClass::K,
        jacobian_bound: 40.0,
        name: String::from("nonuges"),
    })
}

/// Logarithmic variant: `σ₁(s) = sgn(s)·ln(1+|s|)` for `|s| ≥ 1`, matched
/// below one by the odd cubic with equal value and slope at `s = 1`. The
/// gauge is then unbounded, which enables the ISS route.
pub fn nonuges_log() -> ExampleBundle {
    // a + b = ln 2 and a + 3b = 1/2 at the matching point.
    let b = (0.5 - math::ln(2.0)) / 2.0;
    let a = math::ln(2.0) - b;
    let sigma1 = move |s: f64| -> f64 {
        let m = math::abs(s);
        let v = if m >= 1.0 { math::ln(1.0 + m) } else { a * m + b * m * m * m };
        if s < 0.0 {
            -v
        } else {
            v
        }
    };
    let anti = move |x: f64| -> f64 {
        let m = math::abs(x);
        if m < 1.0 {
            a * m * m / 2.0 + b * m * m * m * m / 4.0
        } else {
            let inner = a / 2.0 + b / 4.0;
            inner + (1.0 + m) * math::ln(1.0 + m) - m - (2.0 * math::ln(2.0) - 1.0)
        }
    };
    example_non_uges(OscillatorShape {
        sigma1: Arc::new(sigma1),
        sigma1_antiderivative: Arc::new(anti),
        sigma2: Arc::new(math::atan),
        delta_class: GaugeClass::KInfinity,
        jacobian_bound: 40.0,
        name: String::from("nonuges-lnk"),
    })
}

// ---------------------------------------------------------------------------
// Identification dynamics with a persistently exciting regressor
// ---------------------------------------------------------------------------

pub struct IdentificationParams {
    /// Fast coefficient `f(τ)`, bounded, with negative mean `f★`.
    pub f_fast: Arc<ScalarFn>,
    pub f_star: f64,
    /// Global bound on `|f(τ)|` (enters the Jacobian bound).
    pub f_bound: f64,
    /// Unit-norm regressor.
    pub m: Arc<SignalFn>,
    pub dim: usize,
    pub c_tilde: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    /// Attach the identity input map (enables the matrix-input ISS gain).
    pub with_input: bool,
}

impl Default for IdentificationParams {
    fn default() -> Self {
        // The moving Gram of (cos t, sin t) over a full turn is exactly π·I,
        // so the excitation constants are sharp rather than conservative.
        Self {
            f_fast: Arc::new(|tau| -1.0 + 2.0 * math::sin(tau)),
            f_star: -1.0,
            f_bound: 3.0,
            m: Arc::new(|t| vec![math::cos(t), math::sin(t)]),
            dim: 2,
            c_tilde: 2.0 * core::f64::consts::PI,
            alpha_prime: core::f64::consts::PI,
            beta_prime: core::f64::consts::PI,
            with_input: true,
        }
    }
}

/// `ẋ = f(αt)·m(t)mᵀ(t)·x (+ u)` with limiting dynamics
/// `ẋ = f★·m(t)mᵀ(t)·x` and the quadratic candidate from the excitation
/// construction, rescaled by `2/α′` so its decay is unit-normalized.
pub fn example_identification(
    params: IdentificationParams,
) -> Result<ExampleBundle, ConstructError> {
    let quad = QuadratureConfig::default();
    let (raw, kappa) = excitation_lyapunov(
        params.m.clone(),
        params.dim,
        params.f_star,
        params.c_tilde,
        params.alpha_prime,
        &quad,
    )?;
    let scale = 2.0 / params.alpha_prime;
    let candidate = scale_candidate(&raw, scale);

    let n = params.dim;
    let mf = params.m.clone();
    let ff = params.f_fast.clone();
    let f = Arc::new(move |x: &[f64], t: f64, tau: f64| {
        let mv = mf(t);
        let s: f64 = mv.iter().zip(x).map(|(a, b)| a * b).sum();
        let c = ff(tau) * s;
        mv.iter().map(|a| c * a).collect::<Vec<f64>>()
    });
    let mut sys = TimeVaryingSystem::new(n, f);
    if params.with_input {
        let dim = n;
        sys = sys.with_input(
            Arc::new(move |_x: &[f64], _t: f64, _tau: f64| crate::linalg::identity(dim)),
            n,
        );
    }
    let ml = params.m.clone();
    let fs = params.f_star;
    let lim = LimitingSystem::new(
        n,
        Arc::new(move |x: &[f64], t: f64| {
            let mv = ml(t);
            let s: f64 = mv.iter().zip(x).map(|(a, b)| a * b).sum();
            mv.iter().map(|a| fs * s * a).collect::<Vec<f64>>()
        }),
    );

    // |∇(scaled V)| ≤ 2·scale·(κ + c̃²/2)·|x|, plus margin for the Jacobian
    // bound; c̄ = 1/slope² makes the gauge-squared decay the plain
    // unit-normalized one and the decay floor come out as s²/8.
    let jacobian_bound = params.f_bound + 1.0;
    let slope =
        2.0 * scale * (kappa + 0.5 * params.c_tilde * params.c_tilde) + 2.0 * jacobian_bound;
    let c_bar = 1.0 / (slope * slope);
    let delta = Gauge::new(GaugeClass::KInfinity, "slope*s", Arc::new(move |s| slope * s));
    let n_gauge = Gauge::new(GaugeClass::M, "1/eta^2", Arc::new(|eta| 1.0 / (eta * eta)));
    let constants = CompatibilityConstants::new(c_bar, slope, jacobian_bound, 1.0);

    let decay_floor: Arc<ScalarFn> = Arc::new(|s| s * s / 8.0);
    let sweep_floor = decay_floor.clone();
    let input_gain = iss_gain_matrix_input(&delta, c_bar, 2.0);

    Ok(ExampleBundle {
        name: String::from("identification"),
        sys,
        lim: Some(lim),
        candidate,
        delta: Some(delta),
        n_gauge: Some(n_gauge),
        constants: Some(constants),
        strictification: None,
        input_gain: Some(input_gain),
        iiss_rate: None,
        decay_floor,
        sweep_floor,
        decay_on_limiting: false,
        default_alpha: 1024.0,
        alpha_floor: 0.0,
        sweep_range: (1.0, 65536.0),
        ic_range: (-2.0, 2.0),
        ic_count: 4,
        t_end_decay: 1.5,
        t_end_envelope: 32.0,
        expected: vec![CheckKind::Hypotheses, CheckKind::Sweep, CheckKind::Envelope, CheckKind::Iss],
        notes: Vec::new(),
    })
}

fn scale_candidate(cand: &LyapunovCandidate, scale: f64) -> LyapunovCandidate {
    let v = cand.v.clone();
    let mut out = LyapunovCandidate::new(Arc::new(move |x: &[f64], t: f64| scale * v(x, t)));
    if let (Some(g), Some(d)) = (&cand.grad_x, &cand.dt) {
        let g = g.clone();
        let d = d.clone();
        out = out.with_gradient(
            Arc::new(move |x: &[f64], t: f64| g(x, t).into_iter().map(|v| scale * v).collect()),
            Arc::new(move |x: &[f64], t: f64| scale * d(x, t)),
        );
    }
    if let Some((lo, hi)) = &cand.bounds {
        out = out.with_bounds(lo.scaled(scale, "scaled-lower"), hi.scaled(scale, "scaled-upper"));
    }
    out
}

// ---------------------------------------------------------------------------
// Mass-spring system with fast time-varying friction
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum BundleError {
    /// The spring stiffness rate went positive at a sampled time.
    StiffnessIncreasing { time: f64, rate: f64 },
}

impl core::fmt::Display for BundleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BundleError::StiffnessIncreasing { time, rate } => {
                write!(f, "spring stiffness rate {rate:.3e} > 0 at t = {time}")
            }
        }
    }
}

impl core::error::Error for BundleError {}

pub struct FrictionParams {
    /// Mean viscous, Coulomb, and static coefficients (first must be
    /// positive).
    pub sigma_tilde: [f64; 3],
    /// Time-varying coefficient waves `σᵢ(τ)` around the means.
    pub sigma: [Arc<ScalarFn>; 3],
    pub beta1: f64,
    pub beta2: f64,
    /// Velocity shape in the low-speed friction factor `e^{−β₁·μ(x₂)}`.
    pub mu: Arc<ScalarFn>,
    pub spring: Arc<ScalarFn>,
    pub spring_rate: Arc<ScalarFn>,
    pub k_o: f64,
    pub k_bar: f64,
    pub jacobian_bound: f64,
}

impl FrictionParams {
    /// Coefficient waves `σᵢ(τ) = σ̃ᵢ·(1 + sin(τ)/2)`, Stribeck shape
    /// `μ(v) = v²/(1+v²)`, spring `k(t) = 1 + e^{−t}`.
    pub fn default_varying() -> Self {
        let st = [1.0, 0.5, 0.3];
        Self {
            sigma_tilde: st,
            sigma: [
                Arc::new(move |tau| st[0] * (1.0 + 0.5 * math::sin(tau))),
                Arc::new(move |tau| st[1] * (1.0 + 0.5 * math::sin(tau))),
                Arc::new(move |tau| st[2] * (1.0 + 0.5 * math::sin(tau))),
            ],
            beta1: 1.0,
            beta2: 10.0,
            mu: Arc::new(|v| v * v / (1.0 + v * v)),
            spring: Arc::new(|t| 1.0 + math::exp(-t)),
            spring_rate: Arc::new(|t| -math::exp(-t)),
            k_o: 1.0,
            k_bar: 2.0,
            jacobian_bound: 50.0,
        }
    }

    /// Constant Coulomb and static coefficients; only the viscous term
    /// oscillates, so the averaging displacement acts on the velocity alone
    /// as a pure rescaling.
    pub fn default_constant() -> Self {
        let mut p = Self::default_varying();
        let s2 = p.sigma_tilde[1];
        let s3 = p.sigma_tilde[2];
        p.sigma[1] = Arc::new(move |_tau| s2);
        p.sigma[2] = Arc::new(move |_tau| s3);
        p
    }
}

/// Two-state mass-spring dynamics with fast friction coefficients:
/// `ẋ₁ = x₂`,
/// `ẋ₂ = −σ₁(αt)x₂ − k(t)x₁ − {σ₂(αt) + σ₃(αt)e^{−β₁μ(x₂)}}·tanh(β₂x₂)`.
/// The limiting dynamics replaces each `σᵢ(αt)` by its mean.
pub fn example_friction(params: FrictionParams, constant_variant: bool) -> Result<ExampleBundle, BundleError> {
    for k in 0..64 {
        let t = 0.625 * k as f64;
        let rate = (params.spring_rate)(t);
        if rate > 0.0 {
            return Err(BundleError::StiffnessIncreasing { time: t, rate });
        }
    }
    let (candidate, consts) = friction_lyapunov(
        params.spring.clone(),
        params.spring_rate.clone(),
        params.k_o,
        params.sigma_tilde,
        params.beta2,
    );

    let s = params.sigma.clone();
    let k_fn = params.spring.clone();
    let mu = params.mu.clone();
    let (b1, b2) = (params.beta1, params.beta2);
    let f = Arc::new(move |x: &[f64], t: f64, tau: f64| {
        let sat = math::tanh(b2 * x[1]);
        vec![
            x[1],
            -s[0](tau) * x[1]
                - k_fn(t) * x[0]
                - (s[1](tau) + s[2](tau) * math::exp(-b1 * mu(x[1]))) * sat,
        ]
    });
    let sys = TimeVaryingSystem::new(2, f);

    let st = params.sigma_tilde;
    let k_lim = params.spring.clone();
    let mu_lim = params.mu.clone();
    let lim = LimitingSystem::new(
        2,
        Arc::new(move |x: &[f64], t: f64| {
            let sat = math::tanh(b2 * x[1]);
            vec![
                x[1],
                -st[0] * x[1]
                    - k_lim(t) * x[0]
                    - (st[1] + st[2] * math::exp(-b1 * mu_lim(x[1]))) * sat,
            ]
        }),
    );

    // |∇V| ≤ λmax([[2Ak̄, 1], [1, 2A]])·|x| ≤ (2Ak̄ + 2)·|x|.
    let slope = 2.0 * consts.weight * params.k_bar + 2.0;
    let c_bar = consts.decay_rate / (slope * slope);
    let delta = Gauge::new(GaugeClass::KInfinity, "slope*s", Arc::new(move |s| slope * s));
    let n_gauge = Gauge::new(GaugeClass::M, "1/eta^2", Arc::new(|eta| 1.0 / (eta * eta)));
    let constants = CompatibilityConstants::new(c_bar, slope, params.jacobian_bound, 1.0);

    let b = consts.decay_rate;
    let decay_floor: Arc<ScalarFn> = Arc::new(move |s| b * s * s);
    // Fast-system sweeps use the gauge-squared floor (c_bar/2)*delta(s/2)^2,
    // which reduces to b*s^2/8 for the linear gauge above.
    let sweep_floor: Arc<ScalarFn> = Arc::new(move |s| b * s * s / 8.0);

    Ok(ExampleBundle {
        name: String::from(if constant_variant { "friction-const" } else { "friction" }),
        sys,
        lim: Some(lim),
        candidate,
        delta: Some(delta),
        n_gauge: Some(n_gauge),
        constants: Some(constants),
        strictification: None,
        input_gain: None,
        iiss_rate: None,
        decay_floor,
        sweep_floor,
        decay_on_limiting: true,
        default_alpha: 2.0,
        alpha_floor: 1.0,
        sweep_range: (2.0, 65536.0),
        ic_range: (-2.0, 2.0),
        ic_count: 10,
        t_end_decay: 20.0,
        t_end_envelope: 0.0,
        expected: vec![CheckKind::Hypotheses, CheckKind::Decay],
        notes: vec![String::from(
            "the headline decay certificate runs along the limiting dynamics with the \
             quadratic candidate; sweeps exercise the fast system, where the default \
             coefficient waves never lose their damping sign",
        )],
    })
}

// ---------------------------------------------------------------------------
// Cubic dynamics outside the globally Lipschitz class
// ---------------------------------------------------------------------------

/// `ẋ = −x³ + 10·cos(αt)·x³/(1+x²)`: no limiting-composition route (the
/// Jacobian grows like `x²`), but the strictification ingredients
/// `V = x⁴/4`, `W = x⁶`, `Θ = x⁶/(1+x²)`, `p = 10cos`, `T = 2π` apply.
pub fn example_ngs() -> ExampleBundle {
    let sys = TimeVaryingSystem::new(
        1,
        Arc::new(|x: &[f64], _t: f64, tau: f64| {
            let x2 = x[0] * x[0];
            vec![-x[0] * x2 + 10.0 * math::cos(tau) * x[0] * x2 / (1.0 + x2)]
        }),
    )
    .with_jacobian(Arc::new(|x: &[f64], _t: f64, tau: f64| {
        let x2 = x[0] * x[0];
        let d = (1.0 + x2) * (1.0 + x2);
        vec![-3.0 * x2 + 10.0 * math::cos(tau) * x2 * (3.0 + x2) / d]
    }));

    let candidate = LyapunovCandidate::new(Arc::new(|x: &[f64], _t| {
        let x2 = x[0] * x[0];
        0.25 * x2 * x2
    }))
    .with_gradient(
        Arc::new(|x: &[f64], _t| vec![x[0] * x[0] * x[0]]),
        Arc::new(|_x: &[f64], _t| 0.0),
    );
    let strictification = StrictificationData::new(
        candidate.clone(),
        Arc::new(|x: &[f64], _t| {
            let x2 = x[0] * x[0];
            x2 * x2 * x2
        }),
        Arc::new(|x: &[f64], _t| {
            let x2 = x[0] * x[0];
            x2 * x2 * x2 / (1.0 + x2)
        }),
        Arc::new(|l| 10.0 * math::cos(l)),
        2.0 * core::f64::consts::PI,
        10.0,
        0.05,
    )
    .with_oscillation_derivatives(
        Arc::new(|x: &[f64], _t| {
            let x2 = x[0] * x[0];
            let d = (1.0 + x2) * (1.0 + x2);
            vec![x2 * x2 * x[0] * (6.0 + 4.0 * x2) / d]
        }),
        Arc::new(|_x: &[f64], _t| 0.0),
    );

    ExampleBundle {
        name: String::from("ngs"),
        sys,
        lim: None,
        candidate,
        delta: None,
        n_gauge: None,
        constants: None,
        strictification: Some(strictification),
        input_gain: None,
        iiss_rate: None,
        decay_floor: Arc::new(|s| {
            let s2 = s * s;
            0.5 * s2 * s2 * s2
        }),
        sweep_floor: Arc::new(|s| {
            let s2 = s * s;
            0.5 * s2 * s2 * s2
        }),
        decay_on_limiting: false,
        default_alpha: 16384.0,
        alpha_floor: 0.0,
        sweep_range: (1.0, 65536.0),
        ic_range: (-3.0, 3.0),
        ic_count: 20,
        t_end_decay: 1.5,
        t_end_envelope: 0.0,
        expected: vec![CheckKind::Hypotheses, CheckKind::Decay],
        notes: vec![String::from(
            "strictification route only: the state cubed makes every global Jacobian bound fail",
        )],
    }
}

// ---------------------------------------------------------------------------
// Saturated feedback against an unknown fast parameter
// ---------------------------------------------------------------------------

pub struct SaturatedFeedbackParams {
    /// Unknown bounded zero-mean wave multiplying `x²/(1+x²)`.
    pub wave: Arc<ScalarFn>,
    pub period: f64,
    pub amplitude_bound: f64,
    /// Control amplitude `u_m` in `u = −u_m·arctan(R·x)`.
    pub control_bound: f64,
    pub gain: f64,
}

impl Default for SaturatedFeedbackParams {
    fn default() -> Self {
        Self {
            wave: Arc::new(|l| 10.0 * math::cos(l)),
            period: 2.0 * core::f64::consts::PI,
            amplitude_bound: 10.0,
            control_bound: 2.0,
            gain: 1.0,
        }
    }
}

/// Closed loop of `ẋ = p(αt)·x²/(1+x²) + u` under `u = −u_m·arctan(R·x)`,
/// with strictification ingredients `V = x²/2`, `W = u_m·x·arctan(Rx)`,
/// `Θ = x³/(1+x²)`.
pub fn example_saturated_feedback(params: SaturatedFeedbackParams) -> ExampleBundle {
    let wave = params.wave.clone();
    let (um, r) = (params.control_bound, params.gain);
    let f = Arc::new(move |x: &[f64], _t: f64, tau: f64| {
        let x2 = x[0] * x[0];
        vec![wave(tau) * x2 / (1.0 + x2) - um * math::atan(r * x[0])]
    });
    let sys = TimeVaryingSystem::new(1, f);

    let candidate =
        LyapunovCandidate::new(Arc::new(|x: &[f64], _t| 0.5 * x[0] * x[0])).with_gradient(
            Arc::new(|x: &[f64], _t| vec![x[0]]),
            Arc::new(|_x: &[f64], _t| 0.0),
        );
    let strictification = StrictificationData::new(
        candidate.clone(),
        Arc::new(move |x: &[f64], _t| um * x[0] * math::atan(r * x[0])),
        Arc::new(|x: &[f64], _t| {
            let x2 = x[0] * x[0];
            x[0] * x2 / (1.0 + x2)
        }),
        params.wave.clone(),
        params.period,
        params.amplitude_bound,
        0.1,
    )
    .with_oscillation_derivatives(
        Arc::new(|x: &[f64], _t| {
            let x2 = x[0] * x[0];
            let d = (1.0 + x2) * (1.0 + x2);
            vec![x2 * (3.0 + x2) / d]
        }),
        Arc::new(|_x: &[f64], _t| 0.0),
    );

    let sup_u = params.control_bound * core::f64::consts::PI / 2.0;
    ExampleBundle {
        name: String::from("satfb"),
        sys,
        lim: None,
        candidate,
        delta: None,
        n_gauge: None,
        constants: None,
        strictification: Some(strictification),
        input_gain: None,
        iiss_rate: None,
        decay_floor: Arc::new(move |s| 0.5 * um * s * math::atan(r * s)),
        sweep_floor: Arc::new(move |s| 0.5 * um * s * math::atan(r * s)),
        decay_on_limiting: false,
        default_alpha: 8192.0,
        alpha_floor: 0.0,
        sweep_range: (1.0, 65536.0),
        ic_range: (-3.0, 3.0),
        ic_count: 10,
        t_end_decay: 2.0,
        t_end_envelope: 0.0,
        expected: vec![CheckKind::Hypotheses, CheckKind::Decay, CheckKind::Sweep],
        notes: vec![format!(
            "the feedback sup-norm is u_m*pi/2 = {sup_u:.4}, which exceeds the declared \
             amplitude limit u_m = {}; the formula is kept as stated and the excess is \
             only surfaced here",
            params.control_bound
        )],
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

pub const BUNDLE_NAMES: [&str; 7] = [
    "nonuges",
    "nonuges-lnk",
    "identification",
    "friction",
    "friction-const",
    "ngs",
    "satfb",
];

/// Build a stock bundle by name with default parameters.
pub fn bundle_by_name(name: &str) -> Option<ExampleBundle> {
    match name {
        "nonuges" => Some(nonuges_arctan()),
        "nonuges-lnk" => Some(nonuges_log()),
        "identification" => example_identification(IdentificationParams::default()).ok(),
        "friction" => example_friction(FrictionParams::default_varying(), false).ok(),
        "friction-const" => example_friction(FrictionParams::default_constant(), true).ok(),
        "ngs" => Some(example_ngs()),
        "satfb" => Some(example_saturated_feedback(SaturatedFeedbackParams::default())),
        _ => None,
    }
}
