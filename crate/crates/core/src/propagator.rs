//! Exact numerical propagation of `i ∂ψ/∂t = H(t)ψ`.
//!
//! Each step applies the midpoint exponential
//! `ψ(t + dt) = exp(−i H(t + dt/2) dt) ψ(t)`, a commutator-free second-order
//! scheme that is unitary step by step. `H(t)` is real symmetric tridiagonal
//! on the Dicke basis, so the exponential action is evaluated either by a
//! Taylor series on the banded matrix (default, `O(N)` per term) or by a dense
//! spectral decomposition. Both kernels agree to round-off.
//!
//! The step is refined by halving until `dt·max‖H‖ ≤ 0.5` and the terminal
//! state at `dt` and `dt/2` agree to `refine_tol`.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::io::{fmt_f64, write_table, Header};
use crate::model::{BandedModel, ModelParams, Tridiagonal};
use crate::spin::{uncharged_state, Operator, SpinSpace, StateVector, BASIS_ORDERING};
use crate::{Error, Result, C64};

/// Default number of base steps per scan period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 4096;
/// Largest admissible `dt·‖H‖₂`.
pub const MAX_SCALED_STEP: f64 = 0.5;
/// Cumulative norm drift tolerated in stored states.
pub const NORM_DRIFT_TOL: f64 = 1e-9;

const SERIES_MAX_TERMS: usize = 60;
const SERIES_TOL: f64 = 1e-18;
const CACHE_TOL: f64 = 1e-15;

static EVOLUTIONS: AtomicUsize = AtomicUsize::new(0);

/// Number of [`evolve`] calls made by this process. Lets callers verify that a
/// purely analytic run never touched the integrator.
pub fn evolutions_started() -> usize {
    EVOLUTIONS.load(Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKernel {
    /// Taylor series of the exponential action on the banded `H`.
    #[default]
    Series,
    /// Dense eigendecomposition of `H` per step, cached while `H` is unchanged.
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Base step; `None` means `T / 4096`.
    pub dt: Option<f64>,
    /// Final time; `None` means `τ`.
    pub t_end: Option<f64>,
    /// Snapshot stride in base steps.
    pub store_every: usize,
    /// Halve `dt` until the `dt` and `dt/2` terminal states agree.
    pub refine: bool,
    pub refine_tol: f64,
    pub max_halvings: u32,
    pub kernel: StepKernel,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: None,
            store_every: 16,
            refine: true,
            refine_tol: 1e-8,
            max_halvings: 12,
            kernel: StepKernel::Series,
        }
    }
}

impl EvolutionConfig {
    /// Fixed step count over `[0, t_end]` with no refinement; snapshots every step.
    pub fn fixed(steps: usize, t_end: f64) -> Self {
        Self {
            dt: Some(t_end / steps as f64),
            t_end: Some(t_end),
            store_every: 1,
            refine: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
            }
        }
        if let Some(t_end) = self.t_end {
            if !(t_end >= 0.0 && t_end.is_finite()) {
                return Err(Error::invalid("t_end", format!("must be >= 0, got {t_end}")));
            }
        }
        if self.store_every == 0 {
            return Err(Error::invalid("store_every", "must be >= 1"));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::invalid("refine_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Stored snapshots of one evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub params: ModelParams,
    pub config: EvolutionConfig,
    /// Step actually used after refinement.
    pub dt: f64,
    pub steps: usize,
    pub halvings: u32,
    /// `‖ψ_dt(t_end) − ψ_{dt/2}(t_end)‖` of the accepted refinement pair.
    pub terminal_mismatch: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Largest `|‖ψ‖ − 1|` across stored states.
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `t`, then `re_k, im_k` for each basis index `k`.
    pub fn columns(&self) -> Vec<String> {
        let dim = self.states.first().map_or(0, |s| s.dim());
        std::iter::once("t".to_string())
            .chain((0..dim).flat_map(|k| [format!("re_{k}"), format!("im_{k}")]))
            .collect()
    }

    pub fn header(&self) -> Header {
        Header::new("trajectory")
            .entry("params", serde_json::to_string(&self.params).expect("params serialize"))
            .entry("evolution", serde_json::to_string(&self.config).expect("config serialize"))
            .entry("basis", BASIS_ORDERING)
            .entry("dt", fmt_f64(self.dt))
            .entry("steps", self.steps)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W, header: &Header) -> Result<()> {
        let columns = self.columns();
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        let rows = self.times.iter().zip(&self.states).map(|(&t, s)| {
            std::iter::once(t)
                .chain(s.amplitudes().iter().flat_map(|z| [z.re, z.im]))
                .collect::<Vec<f64>>()
        });
        write_table(w, header, &names, rows)
    }
}

/// `exp(−i H dt)` for Hermitian `H` through its real-eigenvalue decomposition.
pub fn expm_hermitian(h: &Operator, dt: f64) -> Result<Operator> {
    let dim = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 100_000)
        .ok_or(Error::EigenNoConvergence { dim })?;
    let phases = DVector::from_iterator(
        dim,
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
    );
    let v = &eig.eigenvectors;
    Ok(v * Operator::from_diagonal(&phases) * v.adjoint())
}

/// `ρ = |ψ⟩⟨ψ|`.
pub fn density_matrix(state: &StateVector) -> Operator {
    let psi = state.amplitudes();
    psi * psi.adjoint()
}

fn tridiagonal_apply(h: &Tridiagonal, v: &DVector<C64>, out: &mut DVector<C64>) {
    let n = h.dim();
    for k in 0..n {
        let mut acc = v[k] * h.diag[k];
        if k > 0 {
            acc += v[k - 1] * h.off[k - 1];
        }
        if k + 1 < n {
            acc += v[k + 1] * h.off[k];
        }
        out[k] = acc;
    }
}

struct SpectralCache {
    hamiltonian: Tridiagonal,
    dt: f64,
    vectors: DMatrix<f64>,
    phases: DVector<C64>,
}

/// Applies midpoint-exponential steps for one parameter set.
pub struct Stepper {
    model: BandedModel,
    kernel: StepKernel,
    cache: Option<SpectralCache>,
    decompositions: usize,
    scratch: (DVector<C64>, DVector<C64>),
}

impl Stepper {
    pub fn new(params: &ModelParams, kernel: StepKernel) -> Result<Self> {
        let model = BandedModel::new(params)?;
        let dim = params.n_atoms + 1;
        Ok(Self {
            model,
            kernel,
            cache: None,
            decompositions: 0,
            scratch: (DVector::zeros(dim), DVector::zeros(dim)),
        })
    }

    pub fn model(&self) -> &BandedModel {
        &self.model
    }

    /// Eigendecompositions performed so far by the spectral kernel.
    pub fn decompositions(&self) -> usize {
        self.decompositions
    }

    /// `ψ ← exp(−i H(t_mid) dt) ψ`; `dt` may be negative.
    pub fn step(&mut self, psi: &mut DVector<C64>, t_mid: f64, dt: f64) -> Result<()> {
        let h = self.model.at(t_mid);
        if h.is_diagonal() {
            for (c, &e) in psi.iter_mut().zip(&h.diag) {
                *c *= C64::from_polar(1.0, -e * dt);
            }
            return Ok(());
        }
        match self.kernel {
            StepKernel::Series => self.series_step(&h, psi, dt),
            StepKernel::Spectral => self.spectral_step(h, psi, dt),
        }
    }

    fn series_step(&mut self, h: &Tridiagonal, psi: &mut DVector<C64>, dt: f64) -> Result<()> {
        let (term, next) = &mut self.scratch;
        term.copy_from(psi);
        for k in 1..=SERIES_MAX_TERMS {
            tridiagonal_apply(h, term, next);
            let scale = C64::new(0.0, -dt / k as f64);
            let mut size = 0.0;
            for (t, n) in term.iter_mut().zip(next.iter()) {
                *t = n * scale;
                size += t.norm_sqr();
            }
            *psi += &*term;
            if size.sqrt() <= SERIES_TOL {
                return Ok(());
            }
        }
        Err(Error::SeriesNoConvergence {
            terms: SERIES_MAX_TERMS,
            scaled_norm: dt.abs() * h.norm_bound(),
        })
    }

    fn spectral_step(&mut self, h: Tridiagonal, psi: &mut DVector<C64>, dt: f64) -> Result<()> {
        let reusable = self.cache.as_ref().is_some_and(|c| {
            c.dt == dt
                && c.hamiltonian
                    .diag
                    .iter()
                    .chain(&c.hamiltonian.off)
                    .zip(h.diag.iter().chain(&h.off))
                    .all(|(a, b)| (a - b).abs() < CACHE_TOL)
        });
        if !reusable {
            let dim = h.dim();
            let eig = SymmetricEigen::try_new(h.to_dense_real(), f64::EPSILON, 100_000)
                .ok_or(Error::EigenNoConvergence { dim })?;
            self.decompositions += 1;
            let phases = DVector::from_iterator(
                dim,
                eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
            );
            self.cache = Some(SpectralCache {
                hamiltonian: h,
                dt,
                vectors: eig.eigenvectors,
                phases,
            });
        }
        let cache = self.cache.as_ref().expect("cache filled above");
        let v = &cache.vectors;
        // coefficients in the eigenbasis, phased, then mapped back
        let mut coeffs = DVector::<C64>::zeros(v.ncols());
        for j in 0..v.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..v.nrows() {
                acc += psi[i] * v[(i, j)];
            }
            coeffs[j] = acc * cache.phases[j];
        }
        for i in 0..v.nrows() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..v.ncols() {
                acc += coeffs[j] * v[(i, j)];
            }
            psi[i] = acc;
        }
        Ok(())
    }

    /// Propagates `psi` from `t0` to `t1` in `steps` equal midpoint steps,
    /// calling `observe(step_index, time, psi)` after every step.
    pub fn propagate<F>(
        &mut self,
        psi: &mut DVector<C64>,
        t0: f64,
        t1: f64,
        steps: usize,
        mut observe: F,
    ) -> Result<()>
    where
        F: FnMut(usize, f64, &DVector<C64>),
    {
        let h = (t1 - t0) / steps as f64;
        for j in 0..steps {
            let t_mid = t0 + (j as f64 + 0.5) * h;
            self.step(psi, t_mid, h)?;
            observe(j + 1, t0 + (j + 1) as f64 * h, psi);
        }
        Ok(())
    }
}

struct Run {
    times: Vec<f64>,
    states: Vec<DVector<C64>>,
    terminal: DVector<C64>,
}

fn run_fixed(
    params: &ModelParams,
    kernel: StepKernel,
    initial: &DVector<C64>,
    t_end: f64,
    steps: usize,
    stride: usize,
) -> Result<Run> {
    let mut stepper = Stepper::new(params, kernel)?;
    let mut psi = initial.clone();
    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    stepper.propagate(&mut psi, 0.0, t_end, steps, |j, t, state| {
        if j % stride == 0 || j == steps {
            times.push(t);
            states.push(state.clone());
        }
    })?;
    Ok(Run {
        times,
        states,
        terminal: psi,
    })
}

/// Evolves the uncharged state over `[0, t_end]` and returns stored snapshots.
pub fn evolve(params: &ModelParams, space: &SpinSpace, cfg: &EvolutionConfig) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    if space.n_atoms() != params.n_atoms {
        return Err(Error::invalid(
            "space",
            format!("space has N={} but params have N={}", space.n_atoms(), params.n_atoms),
        ));
    }
    EVOLUTIONS.fetch_add(1, Ordering::Relaxed);

    let t_end = cfg.t_end.unwrap_or_else(|| params.charge_end());
    let initial = uncharged_state(space).into_amplitudes();
    if t_end == 0.0 {
        return Ok(Trajectory {
            times: vec![0.0],
            states: vec![StateVector::from_evolved(initial)],
            params: params.clone(),
            config: cfg.clone(),
            dt: 0.0,
            steps: 0,
            halvings: 0,
            terminal_mismatch: None,
        });
    }

    let base_dt = cfg
        .dt
        .unwrap_or(params.period / DEFAULT_STEPS_PER_PERIOD as f64);
    let base_steps = ((t_end / base_dt) - 1e-9).ceil().max(1.0) as usize;
    let norm_bound = BandedModel::new(params)?.max_norm_bound();

    let mut halvings = 0u32;
    let mut steps = base_steps;
    while (t_end / steps as f64) * norm_bound > MAX_SCALED_STEP {
        steps *= 2;
        halvings += 1;
        if halvings > cfg.max_halvings {
            return Err(Error::RefinementExhausted {
                halvings,
                dt: t_end / steps as f64,
                mismatch: f64::NAN,
                tol: cfg.refine_tol,
            });
        }
    }

    let stride_for = |steps: usize| cfg.store_every * (steps / base_steps);
    let mut run = run_fixed(params, cfg.kernel, &initial, t_end, steps, stride_for(steps))?;
    let mut mismatch = None;
    if cfg.refine {
        loop {
            let fine_steps = steps * 2;
            let fine = run_fixed(
                params,
                cfg.kernel,
                &initial,
                t_end,
                fine_steps,
                stride_for(fine_steps),
            )?;
            let diff = (&fine.terminal - &run.terminal).norm();
            steps = fine_steps;
            halvings += 1;
            run = fine;
            if diff <= cfg.refine_tol {
                mismatch = Some(diff);
                break;
            }
            if halvings >= cfg.max_halvings {
                return Err(Error::RefinementExhausted {
                    halvings,
                    dt: t_end / steps as f64,
                    mismatch: diff,
                    tol: cfg.refine_tol,
                });
            }
        }
    }

    let trajectory = Trajectory {
        times: run.times,
        states: run.states.into_iter().map(StateVector::from_evolved).collect(),
        params: params.clone(),
        config: cfg.clone(),
        dt: t_end / steps as f64,
        steps,
        halvings,
        terminal_mismatch: mismatch,
    };
    let drift = trajectory.max_norm_drift();
    if drift > NORM_DRIFT_TOL {
        return Err(Error::NotNormalized {
            norm: 1.0 + drift,
            tol: NORM_DRIFT_TOL,
        });
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::max_abs;
    use std::f64::consts::PI;

    fn random_hermitian(dim: usize, seed: u64) -> Operator {
        // 64-bit LCG, fixed sequence per seed
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let a = Operator::from_fn(dim, dim, |_, _| C64::new(next(), next()));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&Operator::zeros(4, 4), 0.7).unwrap();
        assert!(max_abs(&(u - Operator::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn expm_of_diagonal_is_phases() {
        let sp = SpinSpace::new(6).unwrap();
        let delta = 1.3;
        let dt = 0.21;
        let u = expm_hermitian(&(sp.jz() * C64::new(delta, 0.0)), dt).unwrap();
        for k in 0..sp.dim() {
            let expected = C64::from_polar(1.0, -delta * sp.m(k) * dt);
            assert!((u[(k, k)] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn expm_is_unitary_for_random_hermitian() {
        for seed in 1..6 {
            let h = random_hermitian(9, seed);
            let u = expm_hermitian(&h, 1.7).unwrap();
            let defect = &u * u.adjoint() - Operator::identity(9, 9);
            assert!(max_abs(&defect) < 1e-12);
        }
    }

    #[test]
    fn series_and_spectral_kernels_agree_with_dense_expm() {
        let p = ModelParams::new(7, 2.0, 20.0, 0.1 * PI).unwrap();
        let sp = SpinSpace::new(7).unwrap();
        let t = 0.37 * p.period;
        let dt = 2e-3;
        let dense = expm_hermitian(&crate::model::hamiltonian_at(&p, &sp, t).h, dt).unwrap();
        let psi0 = StateVector::normalized(DVector::from_fn(8, |k, _| {
            C64::new(1.0 + k as f64, 0.5 - 0.1 * k as f64)
        }))
        .unwrap()
        .into_amplitudes();
        let expected = &dense * &psi0;
        for kernel in [StepKernel::Series, StepKernel::Spectral] {
            let mut stepper = Stepper::new(&p, kernel).unwrap();
            let mut psi = psi0.clone();
            stepper.step(&mut psi, t, dt).unwrap();
            assert!((&psi - &expected).norm() < 1e-13, "{kernel:?}");
        }
    }

    #[test]
    fn density_matrix_is_pure_projector() {
        let psi = StateVector::normalized(DVector::from_fn(5, |k, _| {
            C64::new((k as f64).cos(), (k as f64 * 0.3).sin())
        }))
        .unwrap();
        let rho = density_matrix(&psi);
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(max_abs(&(&rho * &rho - &rho)) < 1e-10);

        let sp = SpinSpace::new(3).unwrap();
        let rho0 = density_matrix(&uncharged_state(&sp));
        let mut expected = Operator::zeros(4, 4);
        expected[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(rho0, expected);
    }

    #[test]
    fn rejects_negative_end_time() {
        let p = ModelParams::new(2, 0.0, 1.0, 1.0).unwrap();
        let sp = SpinSpace::new(2).unwrap();
        let cfg = EvolutionConfig {
            t_end: Some(-1.0),
            ..Default::default()
        };
        assert!(evolve(&p, &sp, &cfg).is_err());
    }

    #[test]
    fn zero_end_time_returns_initial_state() {
        let p = ModelParams::new(2, 0.0, 1.0, 1.0).unwrap();
        let sp = SpinSpace::new(2).unwrap();
        let cfg = EvolutionConfig {
            t_end: Some(0.0),
            ..Default::default()
        };
        let traj = evolve(&p, &sp, &cfg).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], uncharged_state(&sp));
    }

    #[test]
    fn spectral_decomposition_reused_for_unchanged_hamiltonian() {
        let p = ModelParams::new(3, 1.0, 2.0, 1.0).unwrap().with_tau(2.0).unwrap();
        let mut stepper = Stepper::new(&p, StepKernel::Spectral).unwrap();
        let mut psi = DVector::from_element(4, C64::new(0.5, 0.0));
        stepper.step(&mut psi, 0.3, 0.01).unwrap();
        stepper.step(&mut psi, 0.3, 0.01).unwrap();
        assert_eq!(stepper.decompositions(), 1);
        stepper.step(&mut psi, 0.4, 0.01).unwrap();
        assert_eq!(stepper.decompositions(), 2);
        // past T the drive is off: H is diagonal and needs no decomposition
        stepper.step(&mut psi, 1.5, 0.01).unwrap();
        stepper.step(&mut psi, 2.5, 0.01).unwrap();
        assert_eq!(stepper.decompositions(), 2);
        assert!((psi.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trajectory_csv_round_trips_amplitudes() {
        let p = ModelParams::new(3, 1.0, 20.0, 0.1 * PI).unwrap();
        let space = SpinSpace::new(3).unwrap();
        let traj = evolve(&p, &space, &EvolutionConfig::fixed(64, p.period)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, &traj.header()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        assert_eq!(lines.next().unwrap(), "t,re_0,im_0,re_1,im_1,re_2,im_2,re_3,im_3");
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), traj.len());
        let last = rows.last().unwrap();
        for (k, z) in traj.last_state().amplitudes().iter().enumerate() {
            assert_eq!((last[1 + 2 * k], last[2 + 2 * k]), (z.re, z.im));
        }
        assert!(text.contains("# basis: dicke"));
    }
}
