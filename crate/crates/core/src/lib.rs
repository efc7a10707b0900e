//! Simulator for the driven, interacting N-spin Rosen-Zener quantum battery.
//!
//! The battery is N two-level atoms with gap `Δ`, charged during `[0, τ]` by a
//! pulsed transverse field `f(t) = v₀ sin²(πt/T)` and a collective `Ĵz²`
//! interaction of scaled strength `λ`. Because the initial state and the
//! Hamiltonian are permutation symmetric, everything lives on the `N + 1`
//! dimensional Dicke space `|N/2, m⟩`.
//!
//! Two backends produce the same observables:
//!
//! * [`propagator`] integrates the Schrödinger equation exactly (midpoint
//!   exponential stepping) and [`metrics`] turns the trajectory into stored
//!   energy, power, fluctuations and entropies;
//! * [`analytic`] evaluates the gauge-transformation closed forms.
//!
//! [`spectrum`] diagonalizes the static model for the λ-driven phase
//! transition, and [`sweep`] runs deterministic parameter grids over both.
//!
//! Units: `ħ = ω₀ = 1`, so times are `ω₀t` and energies are in `ħω₀`.
//! Entropies are in bits.

pub mod analytic;
pub mod bessel;
mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod propagator;
pub mod spectrum;
pub mod spin;
pub mod sweep;

pub use error::{Error, Result};
pub use metrics::{Backend, MetricSeries};
pub use model::ModelParams;
pub use propagator::{EvolutionConfig, StepKernel, Trajectory};
pub use spin::{Operator, SpinSpace, StateVector};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Version string embedded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
