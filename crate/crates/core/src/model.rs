//! Model parameters, the Rosen-Zener drive envelope and `H(t)`.
//!
//! ```text
//! H(t) = Δ Ĵz + Θ(t) [ f(t) Ĵx + (2λΔ/N) Ĵz² ],   f(t) = v₀ sin²(πt/T) on [0, T]
//! ```
//!
//! `Θ(t)` is 1 on the charging window `[0, τ]` and 0 elsewhere; `τ = T` unless
//! overridden. The interaction is the collective `(2η/N) Ĵz²` with `η = λΔ`.
//! It differs from the strict `i ≠ j` pair sum `(η/2N) Σ σᶻσᶻ` by the constant
//! `−η/2`, which shifts every level equally and cancels in all observables.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::spin::{ladder_coefficients, m_values, Operator, SpinSpace};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of two-level atoms `N`.
    pub n_atoms: usize,
    /// Level gap `Δ` in units of `ħω₀`.
    pub delta: f64,
    /// Scaled interaction `λ = η/Δ`; positive is repulsive.
    pub lambda: f64,
    /// Drive strength `v₀` (same units as `Δ`).
    pub v0: f64,
    /// Scan period `T` in units of `1/ω₀`.
    pub period: f64,
    /// End of the charging window; `None` means `τ = T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl ModelParams {
    /// Validated parameters with `Δ = 1` and `τ = T`.
    pub fn new(n_atoms: usize, lambda: f64, v0: f64, period: f64) -> Result<Self> {
        let p = Self {
            n_atoms,
            delta: 1.0,
            lambda,
            v0,
            period,
            tau: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau = Some(tau);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::invalid("n_atoms", "need at least one atom"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be > 0, got {}", self.delta)));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::invalid("period", format!("must be > 0, got {}", self.period)));
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::invalid("v0", format!("must be >= 0, got {}", self.v0)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite"));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::invalid("tau", format!("must be > 0, got {tau}")));
            }
        }
        Ok(())
    }

    /// `τ`, the end of the charging window.
    pub fn charge_end(&self) -> f64 {
        self.tau.unwrap_or(self.period)
    }

    /// Prefactor of `Ĵz²`: `2λΔ/N`.
    pub fn interaction(&self) -> f64 {
        2.0 * self.lambda * self.delta / self.n_atoms as f64
    }

    /// `NΔ`, the energy of a fully charged battery.
    pub fn full_charge(&self) -> f64 {
        self.n_atoms as f64 * self.delta
    }

    /// Pulse area parameter `v₀T`; the charging regimes split at `2π`.
    pub fn pulse_area(&self) -> f64 {
        self.v0 * self.period
    }

    pub fn in_window(&self, t: f64) -> bool {
        (0.0..=self.charge_end()).contains(&t)
    }
}

/// `f(t) = v₀ sin²(πt/T)` on `[0, T]`, zero elsewhere.
pub fn drive_amplitude(p: &ModelParams, t: f64) -> f64 {
    if (0.0..=p.period).contains(&t) {
        let s = (PI * t / p.period).sin();
        p.v0 * s * s
    } else {
        0.0
    }
}

/// `f′(t) = v₀ (π/T) sin(2πt/T)` on `[0, T]`.
pub fn drive_derivative(p: &ModelParams, t: f64) -> f64 {
    if (0.0..=p.period).contains(&t) {
        p.v0 * PI / p.period * (2.0 * PI * t / p.period).sin()
    } else {
        0.0
    }
}

/// Reference energy `⟨ψ(0)|H₀|ψ(0)⟩ = −NΔ/2` subtracted from the stored energy.
pub fn h0_expectation_floor(p: &ModelParams) -> f64 {
    -(p.n_atoms as f64) * p.delta / 2.0
}

/// `H₀ = Δ Ĵz`.
pub fn bare_hamiltonian(p: &ModelParams, space: &SpinSpace) -> Operator {
    space.jz() * C64::new(p.delta, 0.0)
}

/// `H(t)` together with the cached `H₀`.
#[derive(Clone, Debug)]
pub struct HamiltonianSnapshot {
    pub time: f64,
    pub h: Operator,
    pub h0: Operator,
}

pub fn hamiltonian_at(p: &ModelParams, space: &SpinSpace, t: f64) -> HamiltonianSnapshot {
    let h0 = bare_hamiltonian(p, space);
    let mut h = h0.clone();
    if p.in_window(t) {
        let f = drive_amplitude(p, t);
        h += space.jx() * C64::new(f, 0.0);
        h += space.jz2() * C64::new(p.interaction(), 0.0);
    }
    HamiltonianSnapshot { time: t, h, h0 }
}

/// `H(t)` in its natural real symmetric tridiagonal form.
///
/// `diag[k] = Δm + Θ(t)(2λΔ/N)m²` and `off[k] = Θ(t) f(t) c_k / 2`, the
/// coupling between indices `k` and `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.off.iter().all(|&e| e == 0.0)
    }

    /// Gershgorin bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|k| {
                let left = if k > 0 { self.off[k - 1].abs() } else { 0.0 };
                let right = self.off.get(k).map_or(0.0, |e| e.abs());
                self.diag[k].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for (k, &e) in self.off.iter().enumerate() {
            m[(k, k + 1)] = e;
            m[(k + 1, k)] = e;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    pub fn to_operator(&self) -> Operator {
        self.to_dense_real().map(|x| C64::new(x, 0.0))
    }
}

/// Precomputed ingredients of the banded Hamiltonian for one parameter set.
#[derive(Clone, Debug)]
pub struct BandedModel {
    params: ModelParams,
    bare: Vec<f64>,
    interacting: Vec<f64>,
    half_ladder: Vec<f64>,
}

impl BandedModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let m = m_values(params.n_atoms);
        let g = params.interaction();
        let bare: Vec<f64> = m.iter().map(|&m| params.delta * m).collect();
        let interacting = m
            .iter()
            .zip(&bare)
            .map(|(&m, &b)| b + g * m * m)
            .collect();
        let half_ladder = ladder_coefficients(params.n_atoms)
            .into_iter()
            .map(|c| c / 2.0)
            .collect();
        Ok(Self {
            params: params.clone(),
            bare,
            interacting,
            half_ladder,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn at(&self, t: f64) -> Tridiagonal {
        if self.params.in_window(t) {
            let f = drive_amplitude(&self.params, t);
            Tridiagonal {
                diag: self.interacting.clone(),
                off: self.half_ladder.iter().map(|&c| f * c).collect(),
            }
        } else {
            Tridiagonal {
                diag: self.bare.clone(),
                off: vec![0.0; self.half_ladder.len()],
            }
        }
    }

    /// Upper bound on `max_t ‖H(t)‖₂`, using `f ≤ v₀`.
    pub fn max_norm_bound(&self) -> f64 {
        let inside = Tridiagonal {
            diag: self.interacting.clone(),
            off: self.half_ladder.iter().map(|&c| self.params.v0 * c).collect(),
        };
        let outside = Tridiagonal {
            diag: self.bare.clone(),
            off: vec![0.0; self.half_ladder.len()],
        };
        inside.norm_bound().max(outside.norm_bound())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{hermiticity_defect, max_abs};
    use approx::assert_abs_diff_eq;

    fn fig2(v0: f64) -> ModelParams {
        ModelParams::new(10, 2.0, v0, 0.1 * PI).unwrap()
    }

    #[test]
    fn drive_envelope_values() {
        let p = fig2(20.0);
        let t = p.period;
        assert_eq!(drive_amplitude(&p, 0.0), 0.0);
        assert_abs_diff_eq!(drive_amplitude(&p, t / 2.0), 20.0, epsilon = 1e-13);
        assert_abs_diff_eq!(drive_amplitude(&p, t / 4.0), 10.0, epsilon = 1e-13);
        assert_eq!(drive_amplitude(&p, -0.1), 0.0);
        assert_eq!(drive_amplitude(&p, t + 1e-9), 0.0);
        assert!(drive_amplitude(&p, t) < 1e-28);
    }

    #[test]
    fn drive_is_c1_at_the_edges() {
        let p = fig2(20.0);
        let t = p.period;
        let h = 1e-6;
        for &ti in &[0.0, t] {
            assert_abs_diff_eq!(drive_derivative(&p, ti), 0.0, epsilon = 1e-12);
        }
        for k in 1..20 {
            let ti = t * k as f64 / 20.0;
            let fd = (drive_amplitude(&p, ti + h) - drive_amplitude(&p, ti - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, drive_derivative(&p, ti), epsilon = 1e-5);
        }
    }

    #[test]
    fn hamiltonian_outside_window_is_bare() {
        let p = fig2(20.0);
        let sp = SpinSpace::new(10).unwrap();
        let snap = hamiltonian_at(&p, &sp, -1.0);
        assert_eq!(snap.h, sp.jz().clone());
        assert_eq!(snap.h, snap.h0);
        let after = hamiltonian_at(&p, &sp, p.period * 1.5);
        assert_eq!(after.h, snap.h0);
    }

    #[test]
    fn noninteracting_midpoint_is_drive_plus_bare() {
        let p = ModelParams::new(6, 0.0, 7.0, 0.4).unwrap();
        let sp = SpinSpace::new(6).unwrap();
        let snap = hamiltonian_at(&p, &sp, 0.2);
        let expected = sp.jz() + sp.jx() * C64::new(7.0, 0.0);
        assert!(max_abs(&(snap.h - expected)) < 1e-13);
    }

    #[test]
    fn interaction_prefactor_n2_lambda1() {
        let p = ModelParams::new(2, 1.0, 5.0, 1.0).unwrap();
        let sp = SpinSpace::new(2).unwrap();
        let snap = hamiltonian_at(&p, &sp, 0.0);
        assert_eq!(snap.h, sp.jz() + sp.jz2());
    }

    #[test]
    fn floor_values() {
        let mut p = ModelParams::new(10, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(h0_expectation_floor(&p), -5.0);
        p = ModelParams::new(1, 0.0, 1.0, 1.0).unwrap().with_delta(2.0).unwrap();
        assert_eq!(h0_expectation_floor(&p), -1.0);
        p = ModelParams::new(100, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(h0_expectation_floor(&p), -50.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1, f64::NAN, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1, 1.0, 1.0, 1.0).unwrap().with_delta(0.0).is_err());
        assert!(ModelParams::new(1, -30.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn hermitian_and_tridiagonal_across_random_times() {
        // Deterministic low-discrepancy times instead of an RNG.
        let golden = 0.618_033_988_749_894_9;
        for &(n, lam, v0) in &[(1, 0.0, 3.0), (4, 2.0, 20.0), (10, -15.0, 60.0), (7, 1.0, 0.0)] {
            let p = ModelParams::new(n, lam, v0, 0.3).unwrap();
            let sp = SpinSpace::new(n).unwrap();
            let banded = BandedModel::new(&p).unwrap();
            for i in 0..200 {
                let t = ((i as f64 * golden).fract() * 1.4 - 0.2) * p.period;
                let snap = hamiltonian_at(&p, &sp, t);
                assert!(hermiticity_defect(&snap.h) < 1e-14);
                for r in 0..sp.dim() {
                    for c in 0..sp.dim() {
                        if r.abs_diff(c) > 1 {
                            assert_eq!(snap.h[(r, c)], C64::new(0.0, 0.0));
                        }
                    }
                }
                let dense = banded.at(t).to_operator();
                assert!(max_abs(&(dense - &snap.h)) < 1e-13);
            }
        }
    }

    #[test]
    fn norm_bound_dominates_spectral_norm() {
        let p = fig2(60.0);
        let banded = BandedModel::new(&p).unwrap();
        let bound = banded.max_norm_bound();
        for k in 0..=16 {
            let t = p.period * k as f64 / 16.0;
            let eig = banded.at(t).to_dense_real().symmetric_eigenvalues();
            let spec = eig.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
            assert!(spec <= bound + 1e-12);
        }
    }
}
