//! Static levels of `H_s = ΔĴz + (2λΔ/N)Ĵz² + gĴx`.
//!
//! For `g = 0` the Hamiltonian is diagonal in the Dicke basis and its ground
//! state jumps between Dicke states as `λ` grows; `g ≠ 0` mixes neighbouring
//! `m` and turns the jumps into a smooth crossover. The field `g` is a free
//! knob with default 0; [`ALTERNATE_TRANSVERSE`] is the documented alternative.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, write_text_table, Header};
use crate::model::ModelParams;
use crate::propagator::EvolutionConfig;
use crate::spin::{ladder_coefficients, m_values};
use crate::sweep::{numeric_extremes, run_cells};
use crate::{Error, Result};

pub const DEFAULT_TRANSVERSE: f64 = 0.0;
/// Transverse field that lifts the `g = 0` degeneracies into a smooth crossover.
pub const ALTERNATE_TRANSVERSE: f64 = 0.1;

/// Energies normalized by `N/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub lambda: f64,
    pub e_ground: f64,
    pub e_excited: f64,
    pub gap: f64,
    /// `⟨Ĵz⟩/(N/2)` in the ground state.
    pub order_parameter: f64,
    /// Numeric `E_max` of the driven dynamics at this `λ`, when joined.
    pub e_max_dynamic: Option<f64>,
}

/// Dense real form of `H_s`.
pub fn static_hamiltonian(n_atoms: usize, delta: f64, lambda: f64, transverse: f64) -> Result<DMatrix<f64>> {
    if n_atoms < 2 {
        return Err(Error::invalid("n_atoms", "static spectrum needs N >= 2"));
    }
    if !(delta > 0.0 && delta.is_finite() && lambda.is_finite() && transverse.is_finite()) {
        return Err(Error::invalid("delta", "need delta > 0 and finite lambda, transverse"));
    }
    let m = m_values(n_atoms);
    let c = ladder_coefficients(n_atoms);
    let chi = 2.0 * lambda * delta / n_atoms as f64;
    let dim = n_atoms + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        h[(k, k)] = delta * m[k] + chi * m[k] * m[k];
    }
    for k in 0..dim - 1 {
        h[(k, k + 1)] = transverse * c[k] / 2.0;
        h[(k + 1, k)] = transverse * c[k] / 2.0;
    }
    Ok(h)
}

/// With `g = 0` the levels are read off the diagonal, so they equal the
/// closed form `Δm + (2λΔ/N)m²` exactly; ties resolve to the lower `m`.
pub fn static_spectrum(n_atoms: usize, delta: f64, lambda: f64, transverse: f64) -> Result<SpectrumPoint> {
    let h = static_hamiltonian(n_atoms, delta, lambda, transverse)?;
    let dim = h.nrows();
    let m = m_values(n_atoms);
    let (levels, jz) = if transverse == 0.0 {
        let levels: Vec<f64> = (0..dim).map(|k| h[(k, k)]).collect();
        let ground = (0..dim).min_by(|&a, &b| levels[a].total_cmp(&levels[b])).expect("dim >= 3");
        (levels, m[ground])
    } else {
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100_000).ok_or(Error::EigenNoConvergence { dim })?;
        let g0 = (0..dim)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .expect("dim >= 3");
        let jz = eig.eigenvectors.column(g0).iter().zip(&m).map(|(a, m)| a * a * m).sum();
        (eig.eigenvalues.iter().copied().collect(), jz)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    let scale = n_atoms as f64 / 2.0;
    let (e0, e1) = (levels[order[0]] / scale, levels[order[1]] / scale);
    Ok(SpectrumPoint {
        lambda,
        e_ground: e0,
        e_excited: e1,
        gap: e1 - e0,
        order_parameter: jz / scale,
        e_max_dynamic: None,
    })
}

/// Drive used to attach dynamic `E_max` to each `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicJoin {
    pub v0: f64,
    pub period: f64,
    #[serde(default)]
    pub evolution: EvolutionConfig,
}

/// One point per `λ` in input order; points are computed independently.
pub fn lambda_sweep(
    n_atoms: usize,
    delta: f64,
    grid: &[f64],
    transverse: f64,
    join: Option<&DynamicJoin>,
    workers: usize,
) -> Result<Vec<SpectrumPoint>> {
    if grid.is_empty() {
        return Err(Error::invalid("lambda", "grid must be non-empty"));
    }
    run_cells(workers, grid.len(), |i| {
        let lambda = grid[i];
        let mut point = static_spectrum(n_atoms, delta, lambda, transverse)?;
        if let Some(j) = join {
            let p = ModelParams::new(n_atoms, lambda, j.v0, j.period)?.with_delta(delta)?;
            point.e_max_dynamic = Some(numeric_extremes(&p, &j.evolution)?.e_max);
        }
        Ok(point)
    })
}

/// Index where the order parameter changes fastest between neighbours.
pub fn steepest_step(points: &[SpectrumPoint]) -> Option<usize> {
    (1..points.len()).max_by(|&a, &b| {
        let d = |i: usize| {
            (points[i].order_parameter - points[i - 1].order_parameter).abs()
                / (points[i].lambda - points[i - 1].lambda).abs()
        };
        d(a).total_cmp(&d(b))
    })
}

pub const SPECTRUM_COLUMNS: [&str; 6] = ["lambda", "e_ground", "e_excited", "gap", "order_parameter", "e_max_dynamic"];

pub fn spectrum_header(n_atoms: usize, delta: f64, transverse: f64, join: Option<&DynamicJoin>) -> Header {
    let mut h = Header::new("spectrum")
        .entry("N", n_atoms)
        .entry("delta", delta)
        .entry("transverse", transverse)
        .entry("hamiltonian", "delta*Jz + (2*lambda*delta/N)*Jz^2 + transverse*Jx")
        .entry("normalization", "energies and <Jz> divided by N/2");
    if let Some(j) = join {
        h.push("dynamic_join", serde_json::to_string(j).expect("join serialize"));
    }
    h
}

/// `e_max_dynamic` is left empty when not joined.
pub fn write_spectrum_csv<W: Write>(w: &mut W, header: &Header, points: &[SpectrumPoint]) -> Result<()> {
    let rows = points.iter().map(|p| {
        vec![
            fmt_f64(p.lambda),
            fmt_f64(p.e_ground),
            fmt_f64(p.e_excited),
            fmt_f64(p.gap),
            fmt_f64(p.order_parameter),
            p.e_max_dynamic.map(fmt_f64).unwrap_or_default(),
        ]
    });
    write_text_table(w, header, &SPECTRUM_COLUMNS, rows)
}
