//! Explicit Lyapunov and gain constructions.
//!
//! Two routes produce a [`ConstructedLyapunov`]:
//!
//! * [`shifted_lyapunov`] — given a candidate `V` for the limiting dynamics,
//!   evaluate it at a shifted state: `V^[α](ξ,t) = V(ξ + R_α(ξ,t), t)` where
//!   the displacement is
//!   `R_α(ξ,t) = −(η/2)·∫_{t−2/η}^{t}∫_{s}^{t} {f(ξ,l,αl) − f̄(ξ,l)} dl ds`
//!   with `η = √α` and the state `ξ` frozen inside the integrand.
//! * [`strictified_lyapunov`] — given `(V, W, Θ, p, T, c)` with
//!   `V̇ ≤ −W + p(αt)Θ` along the dynamics, subtract a correction:
//!   `U^[α](x,t) = V(x,t) − (∫_{t−1}^{t}∫_{s}^{t} p(αl) dl ds)·Θ(x,t)`.
//!
//! The strictified route reduces its window factor to antiderivative tables
//! over a single wave period (valid because the wave is periodic with zero
//! mean), which keeps evaluation O(1) in `α` instead of needing quadrature
//! panel counts proportional to `α`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg;
use crate::math;
use crate::numerics::{
    double_time_integral, weighted_single_integral, QuadratureConfig, QuadratureError,
};
use crate::systems::{
    fd_step, gradient_fd, Gauge, GaugeClass, LimitingSystem, LyapunovCandidate, ScalarFn,
    SignalFn, StrictificationData, TimeVaryingSystem,
};

/// Which construction route produced a [`ConstructedLyapunov`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Composition with a Lyapunov function for the limiting dynamics.
    LimitingComposition,
    /// Strictification of a nonstrict candidate by an integral correction.
    Strictification,
}

#[derive(Clone, Debug)]
pub enum ConstructError {
    /// The moving Gram integral of the regressor dipped below the declared
    /// excitation level.
    ExcitationDeficit { time: f64, lambda_min: f64, required: f64 },
    /// The regressor signal is not unit-norm at a sampled time.
    SignalNotUnit { time: f64, norm: f64 },
    /// The fast coefficient must have a negative mean.
    NonNegativeMean { f_star: f64 },
}

impl fmt::Display for ConstructError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstructError::ExcitationDeficit { time, lambda_min, required } => write!(
                f,
                "excitation deficit at t = {time}: min eigenvalue {lambda_min:.6} < {required:.6}"
            ),
            ConstructError::SignalNotUnit { time, norm } => {
                write!(f, "regressor norm {norm:.6} != 1 at t = {time}")
            }
            ConstructError::NonNegativeMean { f_star } => {
                write!(f, "mean coefficient must be negative, got {f_star}")
            }
        }
    }
}

impl core::error::Error for ConstructError {}

// ---------------------------------------------------------------------------
// Displacement and the limiting-composition route
// ---------------------------------------------------------------------------

/// The displacement `R_α(x,t)` with the state frozen inside the integrand.
/// Quadrature panels resolve the fast oscillation at rate `α` over the
/// window `[t − 2/√α, t]`.
pub fn averaging_displacement(
    x: &[f64],
    t: f64,
    alpha: f64,
    sys: &TimeVaryingSystem,
    lim: &LimitingSystem,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>, QuadratureError> {
    assert!(alpha > 0.0, "time-scale constant must be positive");
    let eta = math::sqrt(alpha);
    let tau = 2.0 / eta;
    let qcfg = cfg.with_panels(cfg.oscillation_panels(tau, alpha));
    let integrand = |l: f64| -> Vec<f64> {
        let fast = sys.eval(x, l, alpha * l);
        let slow = lim.eval(x, l);
        fast.iter().zip(&slow).map(|(a, b)| a - b).collect()
    };
    let inner = double_time_integral(integrand, t, tau, &qcfg)?;
    Ok(inner.into_iter().map(|v| -0.5 * eta * v).collect())
}

enum Kernel {
    Shifted {
        candidate: LyapunovCandidate,
        sys: TimeVaryingSystem,
        lim: LimitingSystem,
        quad: QuadratureConfig,
    },
    Strictified {
        data: StrictificationData,
        table: WaveTable,
    },
}

/// A Lyapunov function built by one of the two construction routes, with
/// finite-difference-backed derivative accessors. Instances are immutable
/// and cheap to clone around via the `Arc`s they hold.
pub struct ConstructedLyapunov {
    alpha: f64,
    kernel: Kernel,
}

impl ConstructedLyapunov {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn provenance(&self) -> Provenance {
        match self.kernel {
            Kernel::Shifted { .. } => Provenance::LimitingComposition,
            Kernel::Strictified { .. } => Provenance::Strictification,
        }
    }

    /// The candidate the construction started from.
    pub fn candidate(&self) -> &LyapunovCandidate {
        match &self.kernel {
            Kernel::Shifted { candidate, .. } => candidate,
            Kernel::Strictified { data, .. } => &data.candidate,
        }
    }

    pub fn strictification(&self) -> Option<&StrictificationData> {
        match &self.kernel {
            Kernel::Strictified { data, .. } => Some(data),
            Kernel::Shifted { .. } => None,
        }
    }

    pub fn try_eval(&self, x: &[f64], t: f64) -> Result<f64, QuadratureError> {
        match &self.kernel {
            Kernel::Shifted { candidate, sys, lim, quad } => {
                let r = averaging_displacement(x, t, self.alpha, sys, lim, quad)?;
                let shifted: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + b).collect();
                Ok(candidate.eval(&shifted, t))
            }
            Kernel::Strictified { data, table } => {
                let phi = table.window_factor(self.alpha, t);
                Ok(data.candidate.eval(x, t) - phi * (data.oscillation)(x, t))
            }
        }
    }

    /// Pointwise value; panics if the displacement quadrature fails to
    /// converge (use [`Self::try_eval`] to handle that case).
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.try_eval(x, t).expect("displacement quadrature did not converge")
    }

    /// State gradient: analytic for the strictified route whenever the
    /// ingredients carry derivatives, central finite differences otherwise.
    pub fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        if let Kernel::Strictified { data, table } = &self.kernel {
            if data.candidate.grad_x.is_some() && data.oscillation_grad.is_some() {
                let phi = table.window_factor(self.alpha, t);
                let gv = data.candidate.gradient(x, t);
                let gt = data.oscillation_gradient(x, t);
                return gv.iter().zip(&gt).map(|(a, b)| a - phi * b).collect();
            }
        }
        gradient_fd(|y, s| self.eval(y, s), x, t)
    }

    /// Partial time derivative by central differences on the value.
    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        let h = fd_step(math::abs(t));
        (self.eval(x, t + h) - self.eval(x, t - h)) / (2.0 * h)
    }

    /// The scalar window factor `∫_{t−1}^{t}∫_{s}^{t} p(αl) dl ds` of the
    /// strictified route; `None` for the limiting-composition route.
    pub fn window_factor(&self, t: f64) -> Option<f64> {
        match &self.kernel {
            Kernel::Strictified { table, .. } => Some(table.window_factor(self.alpha, t)),
            Kernel::Shifted { .. } => None,
        }
    }
}

/// `V^[α](ξ,t) = V(ξ + R_α(ξ,t), t)`: compose a candidate for the limiting
/// dynamics with the averaging displacement.
pub fn shifted_lyapunov(
    candidate: &LyapunovCandidate,
    sys: &TimeVaryingSystem,
    lim: &LimitingSystem,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> ConstructedLyapunov {
    assert!(alpha > 0.0, "time-scale constant must be positive");
    ConstructedLyapunov {
        alpha,
        kernel: Kernel::Shifted {
            candidate: candidate.clone(),
            sys: sys.clone(),
            lim: lim.clone(),
            quad: *cfg,
        },
    }
}

/// `U^[α](x,t) = V(x,t) − (∫_{t−1}^{t}∫_{s}^{t} p(αl) dl ds)·Θ(x,t)`:
/// strictify a candidate whose derivative splits as `−W + p(αt)Θ`.
///
/// Requires the wave to be `T`-periodic with zero mean over a period (the
/// invariants of [`StrictificationData`]); the window factor is then reduced
/// to tabulated antiderivatives over one period, exact up to table error,
/// instead of integrating across `O(α)` oscillations on every call.
pub fn strictified_lyapunov(
    data: &StrictificationData,
    alpha: f64,
    _cfg: &QuadratureConfig,
) -> ConstructedLyapunov {
    assert!(alpha > 0.0, "time-scale constant must be positive");
    let table = WaveTable::build(data.wave.clone(), data.period);
    ConstructedLyapunov { alpha, kernel: Kernel::Strictified { data: data.clone(), table } }
}

// ---------------------------------------------------------------------------
// Periodic wave antiderivative tables
// ---------------------------------------------------------------------------

/// First and second antiderivatives of a zero-mean `T`-periodic wave,
/// tabulated on one period with cumulative Simpson and evaluated by cubic
/// Hermite interpolation (the interpolant's slopes are exact wave values, so
/// the error is O(h⁴)).
struct WaveTable {
    period: f64,
    step: f64,
    /// `P(y_i) = ∫_0^{y_i} p` at `NODES + 1` uniform nodes.
    first: Vec<f64>,
    /// `Q(y_i) = ∫_0^{y_i} P`.
    second: Vec<f64>,
    /// Wave values at the nodes (Hermite slopes for `first`).
    wave_at: Vec<f64>,
    /// `∫_0^T P`, the per-period increment of the second antiderivative.
    full_second: f64,
}

impl WaveTable {
    const NODES: usize = 8192;

    fn build(wave: Arc<ScalarFn>, period: f64) -> Self {
        let n = Self::NODES;
        let step = period / n as f64;
        // Wave sampled at half-step resolution: index 2i is node i.
        let half: Vec<f64> = (0..=2 * n).map(|j| wave(0.5 * step * j as f64)).collect();
        let mut first = Vec::with_capacity(n + 1);
        let mut second = Vec::with_capacity(n + 1);
        first.push(0.0);
        second.push(0.0);
        for i in 1..=n {
            let p0 = half[2 * i - 2];
            let pm = half[2 * i - 1];
            let p1 = half[2 * i];
            let prev_first = first[i - 1];
            first.push(prev_first + step / 6.0 * (p0 + 4.0 * pm + p1));
            // ∫ of P over the panel: P(l) = P_{i-1} + ∫_{y_{i-1}}^{l} p, and
            // the tail reduces to the weighted form ∫ (y_i − l) p(l) dl.
            let tail = step * step / 6.0 * (p0 + 2.0 * pm);
            second.push(second[i - 1] + step * prev_first + tail);
        }
        let wave_at: Vec<f64> = (0..=n).map(|i| half[2 * i]).collect();
        let full_second = second[n];
        Self { period, step, first, second, wave_at, full_second }
    }

    fn hermite(v0: f64, v1: f64, d0: f64, d1: f64, u: f64, h: f64) -> f64 {
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * v0
            + (u3 - 2.0 * u2 + u) * h * d0
            + (-2.0 * u3 + 3.0 * u2) * v1
            + (u3 - u2) * h * d1
    }

    fn locate(&self, y: f64) -> (usize, f64) {
        let r = math::rem_euclid(y, self.period);
        let mut i = (r / self.step) as usize;
        if i >= Self::NODES {
            i = Self::NODES - 1;
        }
        (i, (r - i as f64 * self.step) / self.step)
    }

    /// `P(y) = ∫_0^y p`, exact under zero mean (then `P` is `T`-periodic).
    fn first_antiderivative(&self, y: f64) -> f64 {
        let (i, u) = self.locate(y);
        Self::hermite(
            self.first[i],
            self.first[i + 1],
            self.wave_at[i],
            self.wave_at[i + 1],
            u,
            self.step,
        )
    }

    /// `∫_0^y P`, whole periods contributing `∫_0^T P` each.
    fn second_antiderivative(&self, y: f64) -> f64 {
        let k = math::div_euclid(y, self.period);
        let (i, u) = self.locate(y);
        let frac = Self::hermite(
            self.second[i],
            self.second[i + 1],
            self.first[i],
            self.first[i + 1],
            u,
            self.step,
        );
        k * self.full_second + frac
    }

    /// `Φ(α,t) = ∫_{t−1}^{t}∫_{s}^{t} p(αl) dl ds
    ///         = P(αt)/α − (∫_{αt−α}^{αt} P)/α²`.
    fn window_factor(&self, alpha: f64, t: f64) -> f64 {
        let b = alpha * t;
        let a = b - alpha;
        self.first_antiderivative(b) / alpha
            - (self.second_antiderivative(b) - self.second_antiderivative(a)) / (alpha * alpha)
    }
}

// ---------------------------------------------------------------------------
// Gains
// ---------------------------------------------------------------------------

/// ISS gain `χ(s) = (c̄/4)·δ(s/2)`, class inherited from `δ`.
pub fn iss_gain(delta: &Gauge, c_bar: f64) -> Gauge {
    assert!(c_bar > 0.0 && c_bar < 1.0, "c_bar must lie in (0,1)");
    assert!(
        matches!(delta.declared_class, GaugeClass::K | GaugeClass::KInfinity),
        "gain needs a class-K gauge"
    );
    let inner = delta.clone();
    Gauge::new(
        delta.declared_class,
        "iss-gain",
        Arc::new(move |s| 0.25 * c_bar * inner.eval(0.5 * s)),
    )
}

/// ISS gain for input maps with `‖g‖ ≤ c₀ + √(δ(|x|/2))`:
/// `χ(s) = c̄·δ(s/2) / (4·(c₀ + √(δ(s/2))))`.
pub fn iss_gain_matrix_input(delta: &Gauge, c_bar: f64, c_o: f64) -> Gauge {
    assert!(c_o > 1.0, "c_o must exceed 1");
    assert!(c_bar > 0.0 && c_bar < 1.0, "c_bar must lie in (0,1)");
    assert!(
        delta.declared_class == GaugeClass::KInfinity,
        "matrix-input gain needs a class-K-infinity gauge"
    );
    let inner = delta.clone();
    Gauge::new(
        GaugeClass::KInfinity,
        "iss-gain-matrix-input",
        Arc::new(move |s| {
            let d = inner.eval(0.5 * s);
            c_bar * d / (4.0 * (c_o + math::sqrt(d)))
        }),
    )
}

// ---------------------------------------------------------------------------
// Quadratic Lyapunov function from a persistently exciting regressor
// ---------------------------------------------------------------------------

/// `V(x,t) = xᵀP(t)x` with
/// `P(t) = κI + ∫_{t−c̃}^{t}∫_{s}^{t} m(l)mᵀ(l) dl ds` and
/// `κ = c̃/(2|f★|) + c̃⁴|f★|/(4α′)`, for a unit-norm regressor `m` whose
/// moving Gram integral over windows of length `c̃` stays at or above
/// `α′·I`. Returns the candidate (with analytic gradient, time derivative,
/// and the sandwich `κ|x|² ≤ V ≤ (κ + c̃²/2)|x|²` as bounds) plus `κ`.
pub fn excitation_lyapunov(
    m: Arc<SignalFn>,
    dim: usize,
    f_star: f64,
    c_tilde: f64,
    alpha_prime: f64,
    cfg: &QuadratureConfig,
) -> Result<(LyapunovCandidate, f64), ConstructError> {
    if f_star >= 0.0 {
        return Err(ConstructError::NonNegativeMean { f_star });
    }
    assert!(c_tilde > 0.0 && alpha_prime > 0.0);
    let kappa = c_tilde / (2.0 * math::abs(f_star))
        + c_tilde * c_tilde * c_tilde * c_tilde * math::abs(f_star) / (4.0 * alpha_prime);

    // Excitation and unit-norm checks at deterministic window starts.
    for k in 0..8 {
        let t = 0.37 * k as f64;
        let mv = m(t);
        let norm = linalg::norm2(&mv);
        if math::abs(norm - 1.0) > 1e-6 {
            return Err(ConstructError::SignalNotUnit { time: t, norm });
        }
        let gram = weighted_single_integral(
            |l| {
                let v = m(l);
                outer_flat(&v)
            },
            t,
            t + c_tilde,
            cfg,
        )
        .expect("gram quadrature");
        let lambda_min = linalg::sym_eig_min(&gram, dim);
        if lambda_min < alpha_prime - 1e-7 {
            return Err(ConstructError::ExcitationDeficit {
                time: t,
                lambda_min,
                required: alpha_prime,
            });
        }
    }

    let quad = *cfg;
    let m_for_p = m.clone();
    let p_matrix = Arc::new(move |t: f64| -> Vec<f64> {
        let mut p = double_time_integral(
            |l| {
                let v = m_for_p(l);
                outer_flat(&v)
            },
            t,
            c_tilde,
            &quad,
        )
        .expect("regressor quadrature");
        for i in 0..dim {
            p[i * dim + i] += kappa;
        }
        p
    });

    let pm_eval = p_matrix.clone();
    let v = Arc::new(move |x: &[f64], t: f64| {
        let p = pm_eval(t);
        let px = linalg::matvec(&p, x, dim, dim);
        linalg::dot(x, &px)
    });
    let pm_grad = p_matrix;
    let grad = Arc::new(move |x: &[f64], t: f64| {
        let p = pm_grad(t);
        linalg::matvec(&p, x, dim, dim).into_iter().map(|v| 2.0 * v).collect::<Vec<f64>>()
    });
    // P'(t) = c̃·m(t)mᵀ(t) − ∫_{t−c̃}^{t} m mᵀ, the derivative identity for
    // the windowed double integral with a time-independent integrand.
    let m_dt = m.clone();
    let quad_dt = *cfg;
    let dt = Arc::new(move |x: &[f64], t: f64| {
        let mv = m_dt(t);
        let mut pdot = outer_flat(&mv);
        for v in pdot.iter_mut() {
            *v *= c_tilde;
        }
        let window = weighted_single_integral(
            |l| {
                let v = m_dt(l);
                outer_flat(&v)
            },
            t - c_tilde,
            t,
            &quad_dt,
        )
        .expect("regressor quadrature");
        for (a, b) in pdot.iter_mut().zip(&window) {
            *a -= b;
        }
        let px = linalg::matvec(&pdot, x, dim, dim);
        linalg::dot(x, &px)
    });

    let lower = kappa;
    let upper = kappa + 0.5 * c_tilde * c_tilde;
    let b_lower = Gauge::new(GaugeClass::KInfinity, "kappa*s^2", Arc::new(move |s| lower * s * s));
    let b_upper =
        Gauge::new(GaugeClass::KInfinity, "(kappa+c^2/2)*s^2", Arc::new(move |s| upper * s * s));

    Ok((LyapunovCandidate::new(v).with_gradient(grad, dt).with_bounds(b_lower, b_upper), kappa))
}

fn outer_flat(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = v[i] * v[j];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Mass-spring friction Lyapunov function
// ---------------------------------------------------------------------------

/// Constants behind the friction candidate: the slope sum
/// `S = σ̃₁ + (σ̃₂+σ̃₃)β₂`, the weight `A = 1 + 1/k₀ + (1 + S²/k₀)/σ̃₁`,
/// and the decay rate `b = min{k₀/2, Aσ̃₁ − 1/2}`.
#[derive(Clone, Copy, Debug)]
pub struct FrictionConstants {
    pub slope_sum: f64,
    pub weight: f64,
    pub decay_rate: f64,
}

/// `V(x,t) = A(k(t)x₁² + x₂²) + x₁x₂` with analytic gradient and time
/// derivative, for the two-state mass-spring friction model. `spring_rate`
/// is `k'(t)` (nonpositive by assumption).
pub fn friction_lyapunov(
    spring: Arc<ScalarFn>,
    spring_rate: Arc<ScalarFn>,
    k_o: f64,
    sigma_tilde: [f64; 3],
    beta2: f64,
) -> (LyapunovCandidate, FrictionConstants) {
    assert!(k_o > 0.0 && sigma_tilde[0] > 0.0 && beta2 > 0.0);
    assert!(sigma_tilde[1] >= 0.0 && sigma_tilde[2] >= 0.0);
    let s = sigma_tilde[0] + (sigma_tilde[1] + sigma_tilde[2]) * beta2;
    let a = 1.0 + 1.0 / k_o + (1.0 + s * s / k_o) / sigma_tilde[0];
    let b = {
        let cand = a * sigma_tilde[0] - 0.5;
        if k_o / 2.0 < cand {
            k_o / 2.0
        } else {
            cand
        }
    };

    let k_eval = spring.clone();
    let v = Arc::new(move |x: &[f64], t: f64| {
        let k = k_eval(t);
        a * (k * x[0] * x[0] + x[1] * x[1]) + x[0] * x[1]
    });
    let k_grad = spring;
    let grad = Arc::new(move |x: &[f64], t: f64| {
        let k = k_grad(t);
        vec![2.0 * a * k * x[0] + x[1], 2.0 * a * x[1] + x[0]]
    });
    let dt = Arc::new(move |x: &[f64], t: f64| a * spring_rate(t) * x[0] * x[0]);

    let lower = Gauge::new(GaugeClass::KInfinity, "s^2/2", Arc::new(|s| 0.5 * s * s));
    (
        LyapunovCandidate::new(v).with_gradient(grad, dt).with_bounds(
            lower,
            // |x₁|+|x₂| ≤ √2·|x| makes the quadratic sandwich a gauge of |x|.
            Gauge::new(
                GaugeClass::KInfinity,
                "2*A^2*kbar*s^2",
                Arc::new(move |r| 2.0 * a * a * 2.0 * r * r),
            ),
        ),
        FrictionConstants { slope_sum: s, weight: a, decay_rate: b },
    )
}
