use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rzbattery::analytic::AnalyticModel;
use rzbattery::io::{fmt_f64, write_text_table, Header};
use rzbattery::metrics::{self, MetricSeries};
use rzbattery::propagator::{evolve, Trajectory};
use rzbattery::spectrum::{lambda_sweep, spectrum_header, steepest_step, write_spectrum_csv, DynamicJoin};
use rzbattery::sweep::{run_cells, scaling, sweep2d, Axis, Scaling, Sweep2d};
use rzbattery::{Backend, ModelParams, SpinSpace};

use crate::config::{BackendChoice, RunConfig};
use crate::CliError;

/// `E` deviation bound, in units of `NΔ`.
pub const ENERGY_TOL: f64 = 0.05;
/// `Σ` (units of `ħω₀`) and `S` (bits) deviation bound.
pub const OVERLAY_TOL: f64 = 0.1;
/// Comparisons are asserted only for `ω₀T` at or below this value.
pub const ASSERT_PERIOD_LIMIT: f64 = 0.3 * PI;

/// Files written by one command plus lines for the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Both backends for one `v₀`, either possibly absent.
#[derive(Clone, Debug)]
pub struct SeriesPair {
    /// `v₀/Δ`.
    pub v0: f64,
    pub numeric: Option<MetricSeries>,
    pub analytic: Option<MetricSeries>,
    /// Kept only when the config asks for amplitudes.
    pub trajectory: Option<Trajectory>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deviation {
    /// `max |E_num − E_ana| / NΔ`.
    pub energy_max: f64,
    /// RMS of `|E_num − E_ana| / NΔ`.
    pub energy_rms: f64,
    pub sigma_max: f64,
    /// Against the numeric diagonal entropy.
    pub entropy_max: f64,
}

/// Both series must share their time grid.
pub fn deviation(numeric: &MetricSeries, analytic: &MetricSeries) -> Deviation {
    assert_eq!(numeric.times, analytic.times, "series must share time points");
    let scale = numeric.params.full_charge();
    let n = numeric.len() as f64;
    let de: Vec<f64> = numeric
        .energy
        .iter()
        .zip(&analytic.energy)
        .map(|(a, b)| (a - b).abs() / scale)
        .collect();
    let max_abs = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Deviation {
        energy_max: de.iter().copied().fold(0.0, f64::max),
        energy_rms: (de.iter().map(|d| d * d).sum::<f64>() / n).sqrt(),
        sigma_max: max_abs(&numeric.fluctuation, &analytic.fluctuation),
        entropy_max: max_abs(&numeric.diag_entropy, &analytic.diag_entropy),
    }
}

fn core_error(e: rzbattery::Error, params: Option<&ModelParams>) -> CliError {
    match (e.is_numerical(), params) {
        (true, Some(p)) => CliError::Numerical(format!(
            "{e} (params {})",
            serde_json::to_string(p).expect("params serialize")
        )),
        (true, None) => CliError::Numerical(e.to_string()),
        (false, _) => match e {
            rzbattery::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        },
    }
}

fn check_analytic(p: &ModelParams) -> Result<(), CliError> {
    if p.n_atoms < 2 {
        return Err(CliError::Config(
            "analytic backend needs n_atoms >= 2; use --backend numeric for N = 1".into(),
        ));
    }
    if p.charge_end() != p.period {
        return Err(CliError::Config("analytic backend requires tau = T".into()));
    }
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Time series for every `v₀` in the config. With both backends the analytic
/// series is sampled at the numeric snapshot times.
pub fn series(cfg: &RunConfig, backend: BackendChoice, workers: usize) -> Result<Vec<SeriesPair>, CliError> {
    let ratios = cfg.model.v0.values();
    let params = cfg.model.params()?;
    if backend.includes(Backend::Analytic) {
        for p in &params {
            check_analytic(p)?;
        }
    }
    let cells = run_cells(workers, params.len(), |i| {
        let p = &params[i];
        Ok((|| {
            let (numeric, trajectory) = if backend.includes(Backend::Numeric) {
                let space = SpinSpace::new(p.n_atoms).map_err(|e| core_error(e, Some(p)))?;
                let traj = evolve(p, &space, &cfg.evolution).map_err(|e| core_error(e, Some(p)))?;
                let m = metrics::from_trajectory(&traj, &space).map_err(|e| core_error(e, Some(p)))?;
                (Some(m), cfg.write_trajectory.then_some(traj))
            } else {
                (None, None)
            };
            let analytic = if backend.includes(Backend::Analytic) {
                let times = match &numeric {
                    Some(s) => s.times.clone(),
                    None => linspace(0.0, p.period, cfg.samples),
                };
                let model = AnalyticModel::new(p).map_err(|e| core_error(e, Some(p)))?;
                Some(model.series(&times).map_err(|e| core_error(e, Some(p)))?)
            } else {
                None
            };
            Ok(SeriesPair {
                v0: ratios[i],
                numeric,
                analytic,
                trajectory,
            })
        })())
    })
    .map_err(|e| core_error(e, None))?;
    cells.into_iter().collect()
}

fn stamp(header: Header, command: &str, cfg: &RunConfig) -> Header {
    header.entry("command", command).entry("config", cfg.resolved_json())
}

fn write_file(dir: &Path, name: &str, bytes: Vec<u8>) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn render<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> rzbattery::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| core_error(e, None))?;
    Ok(buf)
}

pub const DEVIATION_COLUMNS: [&str; 6] = ["v0", "T", "E_max_dev", "E_rms_dev", "Sigma_max_dev", "S_max_dev"];

pub fn cmd_evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pairs = series(cfg, cfg.backend, cfg.worker_count()?)?;
    let dir = cfg.out_dir();
    let mut out = Outcome::default();
    let mut deviations = Vec::new();
    for pair in &pairs {
        for s in [&pair.numeric, &pair.analytic].into_iter().flatten() {
            let header = stamp(s.header(), "evolve", cfg);
            let bytes = render(|w| s.write_csv(w, &header))?;
            out.files.push(write_file(&dir, &format!("v0={}.{}.csv", fmt_f64(pair.v0), s.backend), bytes)?);
        }
        if let Some(traj) = &pair.trajectory {
            let header = stamp(traj.header(), "evolve", cfg);
            let bytes = render(|w| traj.write_csv(w, &header))?;
            out.files.push(write_file(&dir, &format!("v0={}.trajectory.csv", fmt_f64(pair.v0)), bytes)?);
        }
        if let (Some(n), Some(a)) = (&pair.numeric, &pair.analytic) {
            let d = deviation(n, a);
            out.summary.push(format!(
                "v0/delta={}: max |dE|/N delta = {:.3e}, rms = {:.3e}",
                fmt_f64(pair.v0),
                d.energy_max,
                d.energy_rms
            ));
            deviations.push((pair.v0, n.params.period, d));
        }
    }
    if !deviations.is_empty() {
        let header = stamp(Header::new("deviation"), "evolve", cfg)
            .entry("definition", "E columns are |E_num - E_ana|/(N*delta); Sigma, S are absolute");
        let rows = deviations.iter().map(|(v0, t, d)| {
            [*v0, *t, d.energy_max, d.energy_rms, d.sigma_max, d.entropy_max]
                .map(fmt_f64)
                .to_vec()
        });
        let bytes = render(|w| write_text_table(w, &header, &DEVIATION_COLUMNS, rows))?;
        out.files.push(write_file(&dir, "deviation.csv", bytes)?);
    }
    Ok(out)
}

/// Verdict for one comparison row.
pub fn verdict(period: f64, deviation: f64, tol: f64) -> &'static str {
    if period > ASSERT_PERIOD_LIMIT * (1.0 + 1e-12) {
        "not-asserted"
    } else if deviation <= tol {
        "pass"
    } else {
        "fail"
    }
}

pub const COMPARE_COLUMNS: [&str; 8] = [
    "v0",
    "T",
    "E_max_dev",
    "E_rms_dev",
    "Sigma_max_dev",
    "S_max_dev",
    "status",
    "overlay_status",
];

/// Always runs both backends. Failed comparisons are reported, not raised.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pairs = series(cfg, BackendChoice::Both, cfg.worker_count()?)?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for pair in &pairs {
        let (n, a) = (pair.numeric.as_ref().unwrap(), pair.analytic.as_ref().unwrap());
        let d = deviation(n, a);
        let t = n.params.period;
        let status = verdict(t, d.energy_max, ENERGY_TOL);
        let overlay = verdict(t, d.sigma_max.max(d.entropy_max), OVERLAY_TOL);
        out.summary.push(format!(
            "v0/delta={}: E {status} ({:.3e}), Sigma/S overlay {overlay} ({:.3e}, {:.3e})",
            fmt_f64(pair.v0),
            d.energy_max,
            d.sigma_max,
            d.entropy_max
        ));
        let mut row: Vec<String> = [pair.v0, t, d.energy_max, d.energy_rms, d.sigma_max, d.entropy_max]
            .map(fmt_f64)
            .to_vec();
        row.push(status.into());
        row.push(overlay.into());
        rows.push(row);
    }
    let header = stamp(Header::new("compare"), "compare", cfg)
        .entry("energy_tol", ENERGY_TOL)
        .entry("overlay_tol", OVERLAY_TOL)
        .entry("asserted_for", "omega0*T <= 0.3*pi");
    let bytes = render(|w| write_text_table(w, &header, &COMPARE_COLUMNS, rows))?;
    out.files.push(write_file(&cfg.out_dir(), "compare.csv", bytes)?);
    Ok(out)
}

fn missing(block: &str) -> CliError {
    CliError::Config(format!("this command needs a `{block}` block in the config"))
}

fn base_params(cfg: &RunConfig) -> Result<ModelParams, CliError> {
    let values = cfg.model.v0.values();
    if values.len() != 1 {
        return Err(CliError::Config("model.v0: this command takes a single value".into()));
    }
    cfg.model.params_with(values[0], cfg.model.period.0, cfg.model.lambda.0)
}

/// One file per selected backend, `sweep2d.<backend>.csv`.
pub fn cmd_sweep2d(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.sweep2d.as_ref().ok_or_else(|| missing("sweep2d"))?;
    let delta = cfg.model.delta.0;
    let v = spec.v0.axis("sweep2d.v0")?;
    let v0 = Axis::new(v.min * delta, v.max * delta, v.steps).map_err(|e| CliError::Config(format!("sweep2d.v0: {e}")))?;
    let period = spec.period.axis("sweep2d.period")?;
    let base = cfg.model.params_with(0.0, 1.0, cfg.model.lambda.0)?;
    let mut out = Outcome::default();
    for backend in [Backend::Analytic, Backend::Numeric] {
        if !cfg.backend.includes(backend) {
            continue;
        }
        let job = Sweep2d {
            base: base.clone(),
            v0: v0.clone(),
            period: period.clone(),
            backend,
            evolution: cfg.evolution.clone(),
        };
        let result = sweep2d(&job, cfg.worker_count()?).map_err(|e| core_error(e, Some(&base)))?;
        let header = stamp(result.header(), "sweep2d", cfg);
        let bytes = render(|w| result.write_csv(w, &header))?;
        out.files.push(write_file(&cfg.out_dir(), &format!("sweep2d.{backend}.csv"), bytes)?);
        out.summary.push(format!("{backend}: {} cells", result.cells.len()));
    }
    Ok(out)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
    let grid = spec.lambda.values()?;
    let (n, delta) = (cfg.model.n_atoms, cfg.model.delta.0);
    let join = spec.join.as_ref().map(|j| DynamicJoin {
        v0: j.v0.0 * delta,
        period: j.period.0,
        evolution: cfg.evolution.clone(),
    });
    let points = lambda_sweep(n, delta, &grid, spec.transverse.0, join.as_ref(), cfg.worker_count()?)
        .map_err(|e| core_error(e, None))?;
    let mut header = stamp(spectrum_header(n, delta, spec.transverse.0, join.as_ref()), "spectrum", cfg);
    let mut out = Outcome::default();
    if let Some(i) = steepest_step(&points) {
        let at = 0.5 * (points[i].lambda + points[i - 1].lambda);
        header.push("steepest_order_step_lambda", fmt_f64(at));
        out.summary.push(format!("order parameter changes fastest near lambda = {}", fmt_f64(at)));
    }
    let bytes = render(|w| write_spectrum_csv(w, &header, &points))?;
    out.files.push(write_file(&cfg.out_dir(), "spectrum.csv", bytes)?);
    Ok(out)
}

/// Numeric only; `v₀/Δ`, `ω₀T` and `Δ` come from the model block.
pub fn cmd_scaling(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.scaling.as_ref().ok_or_else(|| missing("scaling"))?;
    let base = base_params(cfg)?;
    let job = Scaling {
        n_values: spec.n.values(),
        lambdas: spec.lambda.iter().map(|l| l.0).collect(),
        delta: base.delta,
        v0: base.v0,
        period: base.period,
        evolution: cfg.evolution.clone(),
    };
    let result = scaling(&job, cfg.worker_count()?).map_err(|e| core_error(e, Some(&base)))?;
    let header = stamp(result.header(), "scaling", cfg);
    let bytes = render(|w| result.write_csv(w, &header))?;
    let mut out = Outcome::default();
    out.files.push(write_file(&cfg.out_dir(), "scaling.csv", bytes)?);
    for f in &result.fits {
        out.summary.push(format!(
            "lambda={}: S_max = {:.4} + {:.4} ln N (R2 {:.4}); monotone E={} P={} S={}",
            fmt_f64(f.lambda),
            f.intercept,
            f.slope,
            f.r_squared,
            f.e_monotone,
            f.p_monotone,
            f.s_monotone
        ));
    }
    Ok(out)
}
