//! Closed-form charging dynamics from the gauge-transformed Hamiltonian.
//!
//! Valid for short scan periods (`ω₀T ≲ 0.3π`), where the time ordering of
//! the transformed evolution can be ignored. The interaction enters through
//! `B₈ = B₉`, so at `v₀T = 2nπ` the energy reduces to `(NΔ/2)(1 + cos μ)`.
//!
//! Energy scales carry `Δ` explicitly: `Σ = √(NΔ²/4 − (E − NΔ/2)²/N)` and
//! `Σ(τ) = Δ√(N/4)|sin(v₀T/2)|`.

mod coeffs;

use std::f64::consts::PI;

pub use coeffs::{
    a_coeffs, a_operators, b_coeffs, b_coeffs_branch, c_coeffs, c_operators, mu_dot, mu_of_t,
    ACoeffs, BesselCoeffs, Branch, CCoeffs, A_LABELS, GUARD_RADIUS, NU,
};

use crate::metrics::{average_power, Backend, MetricSeries};
use crate::model::{drive_amplitude, ModelParams};
use crate::{Error, Result};

/// Below this `B₂² + B₃²` the interaction correction is dropped.
pub const ROTATION_FLOOR: f64 = 1e-20;

/// Negative fluctuation radicands down to this value clamp to zero.
pub const RADICAND_TOL: f64 = 1e-10;

/// Relative bisection tolerance on `t_max`.
const T_MAX_TOL: f64 = 1e-12;

/// Parameters with their Bessel constants, evaluated once.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticModel {
    params: ModelParams,
    b: BesselCoeffs,
}

impl AnalyticModel {
    /// Accepts `v₀ = 0` through the zero-drive limit of the constants.
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.charge_end() != params.period {
            return Err(Error::invalid(
                "tau",
                "the analytic backend assumes the window closes at the end of the pulse (tau = T)",
            ));
        }
        let b = if params.v0 == 0.0 {
            BesselCoeffs::zero_drive(params)
        } else {
            b_coeffs(params)?
        };
        Ok(Self {
            params: params.clone(),
            b,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn coeffs(&self) -> &BesselCoeffs {
        &self.b
    }

    /// `(N²(B₈ + B₉)/4) · (cos√q − 1)/q` with `q = B₂² + B₃²`, or 0 below the floor.
    fn correction_scale(&self) -> f64 {
        let q = self.b.rotation_sq();
        if q < ROTATION_FLOOR {
            return 0.0;
        }
        let n = self.params.n_atoms as f64;
        // (cos y − 1)/y² = −½ (sin(y/2)/(y/2))²
        let half = q.sqrt() / 2.0;
        let sinc = half.sin() / half;
        n * n * (self.b.b8 + self.b.b9) / 4.0 * (-0.5 * sinc * sinc)
    }

    pub fn energy(&self, t: f64) -> f64 {
        let p = &self.params;
        let (s, c) = mu_of_t(p, t).sin_cos();
        p.full_charge() / 2.0 * (1.0 + c) + self.correction_scale() * (self.b.b2 * c + self.b.b3 * s)
    }

    /// `E(t)/t`, 0 at `t = 0`.
    pub fn avg_power(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.energy(t) / t
        } else {
            0.0
        }
    }

    pub fn inst_power(&self, t: f64) -> f64 {
        let p = &self.params;
        let f = drive_amplitude(p, t);
        let (s, c) = mu_of_t(p, t).sin_cos();
        p.full_charge() / 2.0 * f * s - f * self.correction_scale() * (self.b.b3 * c - self.b.b2 * s)
    }

    pub fn fluctuation(&self, t: f64) -> Result<f64> {
        fluctuation_from_energy(&self.params, self.energy(t))
    }

    /// Requires `N ≥ 2`.
    pub fn entropy(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        if p.n_atoms < 2 {
            return Err(Error::Domain(
                "analytic entropy needs N >= 2; use the numeric backend for N = 1".into(),
            ));
        }
        let (s, c) = mu_of_t(p, t).sin_cos();
        let prefactor = ((p.n_atoms as f64 - 1.0) * (PI / 2.0).exp()).sqrt();
        let arg = prefactor * (1.0 - self.b.b8 * self.b.b9 * (self.b.b2 * c - self.b.b3 * s));
        if !(arg > 0.0) {
            return Err(Error::Domain(format!("analytic entropy log argument {arg} is not positive")));
        }
        Ok(s.abs() * arg.log2())
    }

    /// Every observable on the given times; `S_vN = 0` and `C = S` for the pure state.
    pub fn series(&self, times: &[f64]) -> Result<MetricSeries> {
        let energy: Vec<f64> = times.iter().map(|&t| self.energy(t)).collect();
        let fluctuation = energy
            .iter()
            .map(|&e| fluctuation_from_energy(&self.params, e))
            .collect::<Result<Vec<_>>>()?;
        let diag_entropy = times
            .iter()
            .map(|&t| self.entropy(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricSeries {
            backend: Backend::Analytic,
            params: self.params.clone(),
            times: times.to_vec(),
            avg_power: average_power(times, &energy),
            inst_power: times.iter().map(|&t| self.inst_power(t)).collect(),
            energy,
            fluctuation,
            vn_entropy: vec![0.0; times.len()],
            coherence: diag_entropy.clone(),
            diag_entropy,
        })
    }
}

/// `√(NΔ²/4 − (E − NΔ/2)²/N)`.
pub fn fluctuation_from_energy(p: &ModelParams, energy: f64) -> Result<f64> {
    let n = p.n_atoms as f64;
    let r = n * p.delta * p.delta / 4.0 - (energy - p.full_charge() / 2.0).powi(2) / n;
    if r >= 0.0 {
        Ok(r.sqrt())
    } else if r >= -RADICAND_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance {
            value: r,
            tol: RADICAND_TOL,
            context: "analytic fluctuation",
        })
    }
}

pub fn analytic_energy(p: &ModelParams, t: f64) -> Result<f64> {
    Ok(AnalyticModel::new(p)?.energy(t))
}

pub fn analytic_avg_power(p: &ModelParams, t: f64) -> Result<f64> {
    Ok(AnalyticModel::new(p)?.avg_power(t))
}

pub fn analytic_inst_power(p: &ModelParams, t: f64) -> Result<f64> {
    Ok(AnalyticModel::new(p)?.inst_power(t))
}

pub fn analytic_fluctuation(p: &ModelParams, t: f64) -> Result<f64> {
    AnalyticModel::new(p)?.fluctuation(t)
}

pub fn analytic_entropy(p: &ModelParams, t: f64) -> Result<f64> {
    AnalyticModel::new(p)?.entropy(t)
}

pub fn analytic_series(p: &ModelParams, times: &[f64]) -> Result<MetricSeries> {
    AnalyticModel::new(p)?.series(times)
}

/// Maximum of the leading-order energy: partial charge below `v₀T = 2π`, full above.
pub fn e_max(p: &ModelParams) -> f64 {
    let a = p.pulse_area();
    if a < 2.0 * PI {
        p.full_charge() / 2.0 * (1.0 - (a / 2.0).cos())
    } else {
        p.full_charge()
    }
}

/// First time the leading-order energy peaks: `T` below `v₀T = 2π`, otherwise
/// the first root of `v₀t/2 − (v₀T/4π) sin(2πt/T) = π`.
pub fn t_max(p: &ModelParams) -> f64 {
    let a = p.pulse_area();
    if a < 2.0 * PI {
        return p.period;
    }
    // LHS − π = −μ(t), nondecreasing from −π at t = 0 to v₀T/2 − π ≥ 0 at T
    let g = |t: f64| -mu_of_t(p, t);
    let (mut lo, mut hi) = (0.0, p.period);
    while hi - lo > T_MAX_TOL * p.period {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Leading-order `E(τ)`.
pub fn e_final(p: &ModelParams) -> f64 {
    p.full_charge() / 2.0 * (1.0 - (p.pulse_area() / 2.0).cos())
}

/// `Σ(τ) = Δ√(N/4)|sin(v₀T/2)|`.
pub fn sigma_final(p: &ModelParams) -> f64 {
    p.delta * (p.n_atoms as f64 / 4.0).sqrt() * (p.pulse_area() / 2.0).sin().abs()
}

/// `S(τ) = log₂√((N−1)e^{π/2}) |sin(v₀T/2)|`; requires `N ≥ 2`.
pub fn s_final(p: &ModelParams) -> Result<f64> {
    if p.n_atoms < 2 {
        return Err(Error::Domain(
            "analytic entropy needs N >= 2; use the numeric backend for N = 1".into(),
        ));
    }
    let c = ((p.n_atoms as f64 - 1.0) * (PI / 2.0).exp()).sqrt().log2();
    Ok(c * (p.pulse_area() / 2.0).sin().abs())
}
