#![allow(dead_code)] // shared across test targets; not every target uses every oracle

//! Shared oracles for the integration suites: trigonometric polynomials with
//! closed-form antiderivatives, and a brute-force nested Simpson rule that is
//! independent of the Fubini-reduced production path.

use lyapcert::systems::kronecker_sequence;
use lyapcert::Trajectory;

/// `p(l) = a₀ + Σ_k a_k cos(kl) + b_k sin(kl)` with exact antiderivatives.
pub struct TrigPoly {
    pub a0: f64,
    pub terms: Vec<(usize, f64, f64)>,
}

impl TrigPoly {
    /// Deterministic coefficients in `[-2, 2]`, frequencies `1..=max_freq`,
    /// constant offset in `[1, 2]` so the windowed integrals stay away from
    /// zero (keeps relative-error assertions meaningful).
    pub fn seeded(seed: u64, max_freq: usize) -> Self {
        let coeffs = kronecker_sequence(2, max_freq, seed);
        let offset = kronecker_sequence(1, 1, seed ^ 0xabcd)[0][0];
        TrigPoly {
            a0: 1.0 + offset,
            terms: coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (i + 1, 4.0 * c[0] - 2.0, 4.0 * c[1] - 2.0))
                .collect(),
        }
    }

    pub fn eval(&self, l: f64) -> f64 {
        let mut acc = self.a0;
        for &(k, a, b) in &self.terms {
            let kl = k as f64 * l;
            acc += a * kl.cos() + b * kl.sin();
        }
        acc
    }

    /// `A(l) = ∫₀^l p`.
    pub fn antiderivative(&self, l: f64) -> f64 {
        let mut acc = self.a0 * l;
        for &(k, a, b) in &self.terms {
            let kf = k as f64;
            let kl = kf * l;
            acc += a * kl.sin() / kf + b * (1.0 - kl.cos()) / kf;
        }
        acc
    }

    /// `B(l) = ∫₀^l A`.
    pub fn second_antiderivative(&self, l: f64) -> f64 {
        let mut acc = 0.5 * self.a0 * l * l;
        for &(k, a, b) in &self.terms {
            let kf = k as f64;
            let kl = kf * l;
            acc += a * (1.0 - kl.cos()) / (kf * kf) + b * (l - kl.sin() / kf) / kf;
        }
        acc
    }

    /// `∫_{t−τ}^{t} ∫_{s}^{t} p(l) dl ds = τ·A(t) − (B(t) − B(t−τ))`.
    pub fn windowed_double_integral(&self, t: f64, tau: f64) -> f64 {
        tau * self.antiderivative(t) - (self.second_antiderivative(t) - self.second_antiderivative(t - tau))
    }

    /// `d/dt` of the windowed double integral: `τ·p(t) − (A(t) − A(t−τ))`.
    pub fn windowed_double_integral_dt(&self, t: f64, tau: f64) -> f64 {
        tau * self.eval(t) - (self.antiderivative(t) - self.antiderivative(t - tau))
    }
}

fn simpson_scalar<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Genuinely two-dimensional composite Simpson for
/// `∫_{t−τ}^{t} (∫_{s}^{t} p dl) ds`: the inner integral is re-evaluated on
/// its own grid for every outer node.
pub fn nested_simpson_double<F: Fn(f64) -> f64>(p: &F, t: f64, tau: f64, panels: usize) -> f64 {
    let inner = |s: f64| {
        if s == t {
            0.0
        } else {
            simpson_scalar(p, s, t, panels)
        }
    };
    simpson_scalar(&inner, t - tau, t, panels)
}

/// Richardson-extrapolated nested Simpson (panel counts `n` and `2n`).
pub fn nested_double_oracle<F: Fn(f64) -> f64>(p: &F, t: f64, tau: f64, panels: usize) -> f64 {
    let coarse = nested_simpson_double(p, t, tau, panels);
    let fine = nested_simpson_double(p, t, tau, panels * 2);
    fine + (fine - coarse) / 15.0
}

/// Keep every `stride`-th sample of a trajectory (always keeping the last);
/// used to bound memory when fitting envelopes over long fast-scale runs.
pub fn thin_trajectory(traj: &Trajectory, stride: usize) -> Trajectory {
    assert!(stride >= 1);
    let n = traj.len();
    let mut times = Vec::with_capacity(n / stride + 2);
    let mut states = Vec::with_capacity(n / stride + 2);
    for i in (0..n).step_by(stride) {
        times.push(traj.times[i]);
        states.push(traj.states[i].clone());
    }
    if *times.last().unwrap() < traj.times[n - 1] {
        times.push(traj.times[n - 1]);
        states.push(traj.states[n - 1].clone());
    }
    Trajectory { times, states, alpha: traj.alpha, t0: traj.t0, x0: traj.x0.clone() }
}
