//! Charging observables of a trajectory.
//!
//! With `ρ = |ψ⟩⟨ψ|` and `H₀ = ΔĴz`:
//!
//! * stored energy `E = ⟨H₀⟩ − ⟨ψ(0)|H₀|ψ(0)⟩`
//! * average power `P = E/t`, with `P(0) = 0` since `E ~ t³` at the start
//! * instantaneous power `P_I = tr(H₀ dρ/dt) = −i tr(H₀[H(t), ρ])`, positive when
//!   energy flows from the charger into the battery
//! * fluctuation `Σ = √(⟨H₀²⟩ − ⟨H₀⟩²)`
//! * diagonal entropy `S = −Σ ρₖₖ log₂ ρₖₖ`, von Neumann entropy `S_vN`, and
//!   relative entropy of coherence `C = S − S_vN`
//!
//! Entropies are in bits.

use std::fmt;
use std::io::Write;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::io::{write_table, Header};
use crate::model::{bare_hamiltonian, h0_expectation_floor, hamiltonian_at, ModelParams};
use crate::propagator::{density_matrix, Trajectory};
use crate::spin::{SpinSpace, StateVector, BASIS_ORDERING};
use crate::{Error, Result};

/// Variances down to this negative value are treated as round-off.
pub const VARIANCE_CLAMP: f64 = 1e-12;

pub const COLUMNS: [&str; 8] = ["t", "E", "P", "P_I", "Sigma", "S_diag", "S_vN", "C"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Numeric,
    Analytic,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Numeric => "numeric",
            Backend::Analytic => "analytic",
        })
    }
}

/// Time series of every observable from one backend.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub backend: Backend,
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub avg_power: Vec<f64>,
    pub inst_power: Vec<f64>,
    pub fluctuation: Vec<f64>,
    pub diag_entropy: Vec<f64>,
    pub vn_entropy: Vec<f64>,
    pub coherence: Vec<f64>,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| {
            vec![
                self.times[i],
                self.energy[i],
                self.avg_power[i],
                self.inst_power[i],
                self.fluctuation[i],
                self.diag_entropy[i],
                self.vn_entropy[i],
                self.coherence[i],
            ]
        })
    }

    /// Header with backend, params, basis and units; callers may append entries.
    pub fn header(&self) -> Header {
        Header::new("metrics")
            .entry("backend", self.backend)
            .entry(
                "params",
                serde_json::to_string(&self.params).expect("params serialize"),
            )
            .entry("basis", BASIS_ORDERING)
            .entry("units", "hbar=omega0=1; E,Sigma in hbar*omega0; P,P_I in hbar*omega0^2; entropies in bits (log2)")
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, header: &Header) -> Result<()> {
        write_table(w, header, &COLUMNS, self.rows())
    }
}

/// `E = ⟨ψ|H₀|ψ⟩ − ⟨ψ(0)|H₀|ψ(0)⟩`.
pub fn stored_energy(state: &StateVector, p: &ModelParams, space: &SpinSpace) -> f64 {
    state.expectation(&bare_hamiltonian(p, space)).re - h0_expectation_floor(p)
}

/// `E = Δ Σₖ k |ψₖ|²`, the population form of [`stored_energy`].
pub fn stored_energy_from_populations(state: &StateVector, p: &ModelParams) -> f64 {
    p.delta
        * state
            .populations()
            .into_iter()
            .enumerate()
            .map(|(k, w)| k as f64 * w)
            .sum::<f64>()
}

/// `P(t) = E(t)/t`, defined as 0 at `t = 0`.
pub fn average_power(times: &[f64], energy: &[f64]) -> Vec<f64> {
    times
        .iter()
        .zip(energy)
        .map(|(&t, &e)| if t > 0.0 { e / t } else { 0.0 })
        .collect()
}

/// `tr(H₀ dρ/dt) = −i⟨ψ|[H₀, H(t)]|ψ⟩ = 2 Im⟨H₀ψ|H(t)ψ⟩`.
pub fn instantaneous_power(state: &StateVector, p: &ModelParams, space: &SpinSpace, t: f64) -> f64 {
    let snap = hamiltonian_at(p, space, t);
    let psi = state.amplitudes();
    let a = &snap.h0 * psi;
    let b = &snap.h * psi;
    2.0 * a.dotc(&b).im
}

/// `√(⟨H₀²⟩ − ⟨H₀⟩²)` from the Dicke populations.
pub fn fluctuation(state: &StateVector, p: &ModelParams) -> Result<f64> {
    let s = (state.dim() - 1) as f64 / 2.0;
    let w = state.populations();
    let level = |k: usize| p.delta * (k as f64 - s);
    let mean: f64 = w.iter().enumerate().map(|(k, w)| w * level(k)).sum();
    // central second moment; no cancellation against ⟨H₀⟩²
    let variance: f64 = w.iter().enumerate().map(|(k, w)| w * (level(k) - mean).powi(2)).sum();
    clamped_sqrt(variance, "fluctuation")
}

pub(crate) fn clamped_sqrt(variance: f64, context: &'static str) -> Result<f64> {
    if variance >= 0.0 {
        Ok(variance.sqrt())
    } else if variance >= -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance {
            value: variance,
            tol: VARIANCE_CLAMP,
            context,
        })
    }
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn shannon_bits<I: IntoIterator<Item = f64>>(probabilities: I) -> f64 {
    probabilities
        .into_iter()
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.log2())
        .sum()
}

pub fn diagonal_entropy(state: &StateVector) -> f64 {
    shannon_bits(state.populations())
}

/// `−tr(ρ log₂ ρ)` from the eigenvalues of the density matrix.
pub fn von_neumann_entropy(state: &StateVector) -> Result<f64> {
    let rho = density_matrix(state);
    let dim = rho.nrows();
    let eig = SymmetricEigen::try_new(rho, f64::EPSILON, 100_000)
        .ok_or(Error::EigenNoConvergence { dim })?;
    Ok(shannon_bits(eig.eigenvalues.iter().copied()).max(0.0))
}

/// `C = S_diag − S_vN`.
pub fn relative_entropy_of_coherence(state: &StateVector) -> Result<f64> {
    Ok(diagonal_entropy(state) - von_neumann_entropy(state)?)
}

/// Evaluates every observable on the stored states of a trajectory.
pub fn from_trajectory(traj: &Trajectory, space: &SpinSpace) -> Result<MetricSeries> {
    let p = &traj.params;
    let n = traj.len();
    let mut energy = Vec::with_capacity(n);
    let mut inst_power = Vec::with_capacity(n);
    let mut fluct = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut vn = Vec::with_capacity(n);
    let mut coherence = Vec::with_capacity(n);
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        energy.push(stored_energy_from_populations(state, p));
        inst_power.push(instantaneous_power(state, p, space, t));
        fluct.push(fluctuation(state, p)?);
        let s = diagonal_entropy(state);
        let s_vn = von_neumann_entropy(state)?;
        diag.push(s);
        vn.push(s_vn);
        coherence.push(s - s_vn);
    }
    Ok(MetricSeries {
        backend: Backend::Numeric,
        params: p.clone(),
        avg_power: average_power(&traj.times, &energy),
        times: traj.times.clone(),
        energy,
        inst_power,
        fluctuation: fluct,
        diag_entropy: diag,
        vn_entropy: vn,
        coherence,
    })
}
