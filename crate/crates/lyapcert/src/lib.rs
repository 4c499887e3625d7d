//! Strict Lyapunov functions for rapidly time-varying systems, with
//! falsification-based certification of every hypothesis they rest on.
//!
//! The crate works with dynamics of the form `ẋ = f(x, t, αt)` where the
//! third argument is a fast time scale driven by a constant `α > 0`. Two
//! construction routes are provided:
//!
//! * [`constructors::shifted_lyapunov`] composes a Lyapunov function for the
//!   limiting (averaged) dynamics `ẋ = f̄(x, t)` with a displacement built
//!   from a windowed double integral of `f − f̄`. The result decays along the
//!   fast system once `α` is large, and doubles as an ISS/iISS Lyapunov
//!   function when inputs enter the dynamics.
//! * [`constructors::strictified_lyapunov`] repairs a nonstrict Lyapunov
//!   function whose derivative splits as `−W + p(αt)Θ` with a zero-mean
//!   periodic wave `p`, by subtracting an integral correction term.
//!
//! Everything a construction assumes — comparison-function classes, decay and
//! growth bounds, window-average estimates, excitation levels — is checked by
//! sampling in [`verifiers`]; the checks can refute a hypothesis but never
//! prove it, so each report carries the worst margin and the point that
//! attained it. [`bundles`] packages the stock example systems with their
//! gauges and expected checks.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature for embedded use. All floating-point math is routed through
//! `libm`, so results are reproducible bit-for-bit across platforms.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub(crate) mod linalg;
pub(crate) mod math;

pub mod bundles;
pub mod constructors;
pub mod numerics;
pub mod systems;
pub mod verifiers;

pub use systems::{
    CertificateReport, CompatibilityConstants, EnvelopeFit, Gauge, GaugeClass, LimitingSystem,
    LyapunovCandidate, SampleGrid, StrictificationData, TimeVaryingSystem, WorstPoint,
};

pub use numerics::{QuadratureConfig, StepConfig, Trajectory};

pub use constructors::ConstructedLyapunov;
