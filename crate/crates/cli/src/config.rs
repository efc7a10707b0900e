//! Run configuration: one JSON document per run.
//!
//! Physical inputs are dimensionless: `v0` is `v₀/Δ`, `period` is `ω₀T`, and
//! `lambda` is `λ`. Any number may be written as a string with a `pi` factor,
//! e.g. `"0.1pi"`, `"pi/10"` or `"2*pi"`.
//!
//! Precedence: command-line flags, then the config document, then defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use rzbattery::io::Header;
use rzbattery::propagator::EvolutionConfig;
use rzbattery::sweep::Axis;
use rzbattery::{Backend, ModelParams};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::CliError;

/// A real number read from JSON as a number or a `pi`-scaled string.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"0.1pi\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                parse_num(v).map(Num).map_err(E::custom)
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

/// Parses `x`, `xpi`, `x*pi`, `pi`, `pi/y`, `xpi/y`.
pub fn parse_num(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read `{text}` as a number (examples: 0.3, \"0.1pi\", \"pi/10\")");
    let (head, divisor) = match s.split_once('/') {
        Some((h, d)) => (h.to_string(), d.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let value = if let Some(coef) = head.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        c * std::f64::consts::PI
    } else {
        head.parse::<f64>().map_err(|_| bad())?
    };
    let v = value / divisor;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(Num),
    Many(Vec<Num>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(n) => vec![n.0],
            OneOrMany::Many(v) => v.iter().map(|n| n.0).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Numeric,
    Analytic,
    Both,
}

impl BackendChoice {
    pub fn includes(self, b: Backend) -> bool {
        matches!(
            (self, b),
            (BackendChoice::Both, _)
                | (BackendChoice::Numeric, Backend::Numeric)
                | (BackendChoice::Analytic, Backend::Analytic)
        )
    }
}

/// Model block; defaults are `N = 10`, `Δ = 1`, `λ = 2`, `v₀/Δ = 20`, `ω₀T = 0.1π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub n_atoms: usize,
    pub delta: Num,
    pub lambda: Num,
    /// `v₀/Δ`, one value or a list.
    pub v0: OneOrMany,
    /// `ω₀T`.
    pub period: Num,
    /// `ω₀τ`; absent means `τ = T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Num>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            n_atoms: 10,
            delta: Num(1.0),
            lambda: Num(2.0),
            v0: OneOrMany::One(Num(20.0)),
            period: Num(0.1 * std::f64::consts::PI),
            tau: None,
        }
    }
}

impl ModelSpec {
    /// One validated parameter set per `v0` entry.
    pub fn params(&self) -> Result<Vec<ModelParams>, CliError> {
        let v0s = self.v0.values();
        if v0s.is_empty() {
            return Err(CliError::Config("model.v0: list must be non-empty".into()));
        }
        v0s.into_iter()
            .map(|v| self.params_with(v, self.period.0, self.lambda.0))
            .collect()
    }

    pub fn params_with(&self, v0_ratio: f64, period: f64, lambda: f64) -> Result<ModelParams, CliError> {
        let d = self.delta.0;
        let mut p = ModelParams::new(self.n_atoms, lambda, v0_ratio * d, period)
            .and_then(|p| p.with_delta(d))
            .map_err(|e| CliError::Config(format!("model: {e}")))?;
        if let Some(tau) = self.tau {
            p = p.with_tau(tau.0).map_err(|e| CliError::Config(format!("model: {e}")))?;
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: Num,
    pub max: Num,
    pub steps: usize,
}

impl AxisSpec {
    pub fn axis(&self, name: &str) -> Result<Axis, CliError> {
        Axis::new(self.min.0, self.max.0, self.steps).map_err(|e| CliError::Config(format!("{name}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep2dSpec {
    /// `v₀/Δ` axis.
    pub v0: AxisSpec,
    /// `ω₀T` axis.
    pub period: AxisSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinSpec {
    pub v0: Num,
    pub period: Num,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub lambda: LambdaGrid,
    #[serde(default = "zero")]
    pub transverse: Num,
    /// Attach numeric `E_max` of the driven model at these `v₀/Δ`, `ω₀T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join: Option<JoinSpec>,
}

fn zero() -> Num {
    Num(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaGrid {
    List(Vec<Num>),
    Axis(AxisSpec),
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            LambdaGrid::List(v) => v.iter().map(|n| n.0).collect(),
            LambdaGrid::Axis(a) => a.axis("spectrum.lambda")?.values(),
        };
        if v.is_empty() {
            return Err(CliError::Config("spectrum.lambda: grid must be non-empty".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomGrid {
    List(Vec<usize>),
    Range { min: usize, max: usize },
}

impl AtomGrid {
    pub fn values(&self) -> Vec<usize> {
        match self {
            AtomGrid::List(v) => v.clone(),
            AtomGrid::Range { min, max } => (*min..=*max).collect(),
        }
    }
}

/// `v₀/Δ`, `ω₀T` and `Δ` come from the model block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub n: AtomGrid,
    pub lambda: Vec<Num>,
}

/// The full run document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub backend: BackendChoice,
    pub evolution: EvolutionConfig,
    /// Time samples for analytic-only series over `[0, T]`.
    pub samples: usize,
    /// `evolve` also writes the numeric amplitudes, `v0=<v>.trajectory.csv`.
    pub write_trajectory: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep2d: Option<Sweep2dSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
    /// Output directory; never embedded in file headers.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Worker threads; never embedded in file headers.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            backend: BackendChoice::Both,
            evolution: EvolutionConfig::default(),
            samples: 257,
            write_trajectory: false,
            sweep2d: None,
            spectrum: None,
            scaling: None,
            out: None,
            workers: None,
        }
    }
}

pub const DEFAULT_OUT: &str = "rzbattery-out";

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "config field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    /// Reads a JSON document, or the `config` header line of a CSV written by this tool.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.starts_with('#') {
            let header = Header::read_from(text.as_bytes()).map_err(|e| CliError::Config(e.to_string()))?;
            let json = header.get("config").ok_or_else(|| {
                CliError::Config(format!("{} has no `config` header line", path.display()))
            })?;
            return Self::from_json(json);
        }
        Self::from_json(&text)
    }

    /// JSON embedded in output headers: everything that affects file contents.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn worker_count(&self) -> Result<usize, CliError> {
        match self.workers.unwrap_or(1) {
            0 => Err(CliError::Config("workers: must be >= 1".into())),
            w => Ok(w),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples < 2 {
            return Err(CliError::Config("samples: need at least 2".into()));
        }
        self.evolution
            .validate()
            .map_err(|e| CliError::Config(format!("evolution: {e}")))?;
        self.worker_count()?;
        self.model.params()?;
        Ok(())
    }
}
