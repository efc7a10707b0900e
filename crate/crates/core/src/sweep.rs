//! Parameter sweeps over independent cells.
//!
//! Cells share only immutable inputs. Results are collected in grid order, so
//! the output does not depend on the worker count.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::io::{write_table, Header};
use crate::metrics::{diagonal_entropy, fluctuation, stored_energy_from_populations, Backend};
use crate::model::ModelParams;
use crate::propagator::{evolve, EvolutionConfig};
use crate::spin::SpinSpace;
use crate::{Error, Result};

/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let a = Self { min, max, steps };
        a.validate("axis")?;
        Ok(a)
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid(name, "grid needs at least one step"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::invalid(
                name,
                format!("need finite min <= max, got [{}, {}]", self.min, self.max),
            ));
        }
        if self.steps == 1 && self.max != self.min {
            return Err(Error::invalid(name, "a one-step grid needs min == max"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.max
                } else {
                    self.min + k as f64 * h
                }
            })
            .collect()
    }

    /// Spacing between neighbours; 0 for a single point.
    pub fn spacing(&self) -> f64 {
        if self.steps < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.steps - 1) as f64
        }
    }
}

/// Evaluates `f(0..n)` on `workers` threads and returns results in index order.
/// On failure the error of the lowest failing index is returned.
pub fn run_cells<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers == 0 {
        return Err(Error::invalid("workers", "need at least one worker"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Peak and terminal observables of one numeric evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremes {
    pub e_max: f64,
    pub t_max: f64,
    pub p_max: f64,
    pub sigma_max: f64,
    pub s_max: f64,
    pub e_final: f64,
    pub sigma_final: f64,
    pub s_final: f64,
}

/// Runs the integrator and reduces the stored snapshots to [`Extremes`].
pub fn numeric_extremes(p: &ModelParams, cfg: &EvolutionConfig) -> Result<Extremes> {
    let space = SpinSpace::new(p.n_atoms)?;
    let traj = evolve(p, &space, cfg)?;
    let mut x = Extremes {
        e_max: f64::MIN,
        t_max: 0.0,
        p_max: 0.0,
        sigma_max: 0.0,
        s_max: 0.0,
        e_final: 0.0,
        sigma_final: 0.0,
        s_final: 0.0,
    };
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        let e = stored_energy_from_populations(state, p);
        let sigma = fluctuation(state, p)?;
        let s = diagonal_entropy(state);
        if e > x.e_max {
            x.e_max = e;
            x.t_max = t;
        }
        if t > 0.0 {
            x.p_max = x.p_max.max(e / t);
        }
        x.sigma_max = x.sigma_max.max(sigma);
        x.s_max = x.s_max.max(s);
        (x.e_final, x.sigma_final, x.s_final) = (e, sigma, s);
    }
    Ok(x)
}

/// One `(v₀, T)` cell of a 2-D sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub v0: f64,
    pub period: f64,
    pub e_max: f64,
    pub e_final: f64,
    pub sigma_final: f64,
    pub s_final: f64,
    pub t_max: f64,
    /// Within half a grid cell of `v₀T = 2π`.
    pub near_critical: bool,
    /// Within half a grid cell of `v₀T = (4n+2)π`.
    pub near_resonance: bool,
}

impl SweepCell {
    pub fn pulse_area(&self) -> f64 {
        self.v0 * self.period
    }
}

/// Template parameters and axes for a `(v₀, T)` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep2d {
    /// Supplies `N`, `Δ`, `λ`; its `v₀` and `T` are overridden per cell.
    pub base: ModelParams,
    pub v0: Axis,
    pub period: Axis,
    pub backend: Backend,
    pub evolution: EvolutionConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub spec: Sweep2d,
    /// Row-major: `T` varies slowest, `v₀` fastest.
    pub cells: Vec<SweepCell>,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "v0", "T", "v0T", "E_max", "E_tau", "Sigma_tau", "S_tau", "t_max", "near_critical", "near_resonance",
];

/// `|v₀T − target|` is within half the local cell extent in `v₀T`.
fn near(area: f64, target: f64, half_width: f64) -> bool {
    (area - target).abs() <= half_width
}

fn near_resonance(area: f64, half_width: f64) -> bool {
    // (4n+2)π closest to the area, n ≥ 0
    let n = ((area / PI - 2.0) / 4.0).round().max(0.0);
    near(area, (4.0 * n + 2.0) * PI, half_width)
}

pub fn sweep2d(spec: &Sweep2d, workers: usize) -> Result<SweepResult> {
    spec.base.validate()?;
    spec.v0.validate("v0")?;
    spec.period.validate("period")?;
    if spec.period.min <= 0.0 {
        return Err(Error::invalid("period", "grid must stay above 0"));
    }
    if spec.v0.min < 0.0 {
        return Err(Error::invalid("v0", "grid must stay at or above 0"));
    }
    if spec.backend == Backend::Analytic && spec.base.n_atoms < 2 {
        return Err(Error::invalid("n_atoms", "analytic entropy needs N >= 2"));
    }
    let v0s = spec.v0.values();
    let ts = spec.period.values();
    let (dv, dt) = (spec.v0.spacing(), spec.period.spacing());
    let cells = run_cells(workers, v0s.len() * ts.len(), |idx| {
        let (v0, t) = (v0s[idx % v0s.len()], ts[idx / v0s.len()]);
        let mut p = spec.base.clone();
        p.v0 = v0;
        p.period = t;
        p.tau = None;
        let half_width = 0.5 * (dv * t + v0 * dt);
        let area = v0 * t;
        let (e_max, e_final, sigma_final, s_final, t_max) = match spec.backend {
            Backend::Analytic => (
                analytic::e_max(&p),
                analytic::e_final(&p),
                analytic::sigma_final(&p),
                analytic::s_final(&p)?,
                analytic::t_max(&p),
            ),
            Backend::Numeric => {
                let x = numeric_extremes(&p, &spec.evolution)?;
                (x.e_max, x.e_final, x.sigma_final, x.s_final, x.t_max)
            }
        };
        Ok(SweepCell {
            v0,
            period: t,
            e_max,
            e_final,
            sigma_final,
            s_final,
            t_max,
            near_critical: near(area, 2.0 * PI, half_width),
            near_resonance: near_resonance(area, half_width),
        })
    })?;
    Ok(SweepResult {
        spec: spec.clone(),
        cells,
    })
}

impl SweepResult {
    pub fn header(&self) -> Header {
        let s = &self.spec;
        let mut h = Header::new("sweep2d")
            .entry("backend", s.backend)
            .entry("params", serde_json::to_string(&s.base).expect("params serialize"))
            .entry("v0_axis", serde_json::to_string(&s.v0).expect("axis serialize"))
            .entry("T_axis", serde_json::to_string(&s.period).expect("axis serialize"))
            .entry("order", "T slowest, v0 fastest");
        if s.backend == Backend::Numeric {
            h.push("evolution", serde_json::to_string(&s.evolution).expect("config serialize"));
        }
        h
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.cells.iter().map(|c| {
            vec![
                c.v0,
                c.period,
                c.pulse_area(),
                c.e_max,
                c.e_final,
                c.sigma_final,
                c.s_final,
                c.t_max,
                c.near_critical as u8 as f64,
                c.near_resonance as u8 as f64,
            ]
        })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, header: &Header) -> Result<()> {
        write_table(w, header, &SWEEP_COLUMNS, self.rows())
    }
}

/// Numeric peaks over a grid of atom numbers and interactions.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub n_values: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub delta: f64,
    pub v0: f64,
    pub period: f64,
    pub evolution: EvolutionConfig,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCell {
    pub n_atoms: usize,
    pub lambda: f64,
    pub e_max: f64,
    pub p_max: f64,
    pub sigma_max: f64,
    pub s_max: f64,
}

/// Least-squares line through `(ln N, S_max)` plus monotonicity flags for one `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub lambda: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub e_monotone: bool,
    pub p_monotone: bool,
    pub s_monotone: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub spec: Scaling,
    /// `λ` slowest, `N` fastest.
    pub cells: Vec<ScalingCell>,
    pub fits: Vec<ScalingFit>,
}

pub const SCALING_COLUMNS: [&str; 6] = ["N", "lambda", "E_max", "P_max", "Sigma_max", "S_max"];

/// Ordinary least squares `y = a + b x`; returns `(b, a, R²)`. `R²` is 1 for a
/// perfect fit and NaN when `y` is constant.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    (slope, intercept, sxy * sxy / (sxx * syy))
}

/// Nondecreasing up to `tol`.
pub fn is_monotone(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - tol)
}

/// Slack allowed in the monotonicity flags.
pub const MONOTONE_TOL: f64 = 1e-9;

pub fn scaling(spec: &Scaling, workers: usize) -> Result<ScalingResult> {
    if spec.n_values.is_empty() || spec.lambdas.is_empty() {
        return Err(Error::invalid("grid", "N and lambda lists must be non-empty"));
    }
    if spec.n_values.contains(&0) {
        return Err(Error::invalid("n_values", "N must be >= 1"));
    }
    let nn = spec.n_values.len();
    let cells = run_cells(workers, nn * spec.lambdas.len(), |idx| {
        let (n, lambda) = (spec.n_values[idx % nn], spec.lambdas[idx / nn]);
        let p = ModelParams::new(n, lambda, spec.v0, spec.period)?.with_delta(spec.delta)?;
        let x = numeric_extremes(&p, &spec.evolution)?;
        Ok(ScalingCell {
            n_atoms: n,
            lambda,
            e_max: x.e_max,
            p_max: x.p_max,
            sigma_max: x.sigma_max,
            s_max: x.s_max,
        })
    })?;
    let fits = spec
        .lambdas
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let row = &cells[j * nn..(j + 1) * nn];
            let ln_n: Vec<f64> = row.iter().map(|c| (c.n_atoms as f64).ln()).collect();
            let s: Vec<f64> = row.iter().map(|c| c.s_max).collect();
            let (slope, intercept, r_squared) = linear_fit(&ln_n, &s);
            let column = |f: fn(&ScalingCell) -> f64| row.iter().map(f).collect::<Vec<_>>();
            ScalingFit {
                lambda,
                slope,
                intercept,
                r_squared,
                e_monotone: is_monotone(&column(|c| c.e_max), MONOTONE_TOL),
                p_monotone: is_monotone(&column(|c| c.p_max), MONOTONE_TOL),
                s_monotone: is_monotone(&s, MONOTONE_TOL),
            }
        })
        .collect();
    Ok(ScalingResult {
        spec: spec.clone(),
        cells,
        fits,
    })
}

impl ScalingResult {
    /// Header including one `fit` line per `λ`.
    pub fn header(&self) -> Header {
        let s = &self.spec;
        let mut h = Header::new("scaling")
            .entry("backend", Backend::Numeric)
            .entry("delta", s.delta)
            .entry("v0", s.v0)
            .entry("T", s.period)
            .entry("evolution", serde_json::to_string(&s.evolution).expect("config serialize"))
            .entry("order", "lambda slowest, N fastest");
        for f in &self.fits {
            h.push(
                format!("fit lambda={}", f.lambda),
                format!(
                    "S_max = {} + {} ln N, R2 = {}; monotone E_max={} P_max={} S_max={}",
                    f.intercept, f.slope, f.r_squared, f.e_monotone, f.p_monotone, f.s_monotone
                ),
            );
        }
        h
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.cells.iter().map(|c| {
            vec![c.n_atoms as f64, c.lambda, c.e_max, c.p_max, c.sigma_max, c.s_max]
        })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, header: &Header) -> Result<()> {
        write_table(w, header, &SCALING_COLUMNS, self.rows())
    }
}
