//! Parameter ingestion: command-line flags over a JSON config file over the
//! built-in cantilever reference values.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Args;
use qems_core::device::{constants, required_bias_product, DeviceParams, HeatingModel};
use qems_core::params::SystemParams;
use qems_core::protocols::Experiment;
use serde::{Deserialize, Deserializer};

use crate::error::CliError;
use crate::units::{parse_frequency, parse_length, parse_number, parse_time, UnitError};

/// Relative mismatch tolerated between `Q` and `gamma_a` given together.
const CONSISTENCY_TOL: f64 = 1e-9;

pub const DEFAULT_NBAR_A0: f64 = 4000.0;
pub const DEFAULT_KAPPA: f64 = 2.0 * PI * 52.5e3;
pub const DEFAULT_FREQUENCY: f64 = 2.0 * PI * 19.7e6;
pub const DEFAULT_Q: f64 = 30_000.0;

/// Model and device overrides. Every field is optional; unset fields fall
/// through to the config file and then to the reference values.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    /// Oscillator bath occupation
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub nbar_a0: Option<String>,
    /// Initial ion occupation
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub nbar_b0: Option<String>,
    /// Coupling strength, e.g. 52.5kHz (bare numbers are rad/s)
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub kappa: Option<String>,
    /// Oscillator frequency, e.g. 19.7MHz
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub frequency: Option<String>,
    /// Oscillator quality factor
    #[arg(long = "q", global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub q: Option<String>,
    /// Oscillator damping rate (1/s); must agree with --q if both are given
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub gamma_a: Option<String>,
    /// Detuning between oscillator and ion secular frequency
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub delta: Option<String>,
    /// Ion downward rate (1/s)
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub mu1: Option<String>,
    /// Ion upward (heating) rate (1/s)
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub mu2: Option<String>,
    /// Oscillator bath temperature (K)
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub temperature: Option<String>,
    /// Oscillator mass (kg)
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub cantilever_mass: Option<String>,
    /// Ion mass in atomic mass units
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub ion_mass_u: Option<String>,
    /// Ion–oscillator separation, e.g. 50um
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub distance: Option<String>,
    /// Oscillator bias voltage (V)
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub bias_voltage: Option<String>,
    /// Sideband laser wavelength, e.g. 214.5nm
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub wavelength: Option<String>,
    /// Carrier Rabi frequency, e.g. 1MHz
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "quantity")]
    pub rabi: Option<String>,
}

fn quantity<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(serde_json::Number),
        Text(String),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|r| match r {
        Raw::Number(n) => n.to_string(),
        Raw::Text(s) => s,
    }))
}

macro_rules! merge_fields {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        ParamSet { $($f: $hi.$f.clone().or_else(|| $lo.$f.clone())),* }
    };
}

impl ParamSet {
    /// Fields of `self`, falling back to `lower` where unset.
    pub fn over(&self, lower: &ParamSet) -> ParamSet {
        merge_fields!(
            self, lower, nbar_a0, nbar_b0, kappa, frequency, q, gamma_a, delta, mu1, mu2, temperature, cantilever_mass, ion_mass_u,
            distance, bias_voltage, wavelength, rabi
        )
    }
}

/// Contents of a `--config` JSON file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub params: ParamSet,
    pub seed: Option<u64>,
    #[serde(default, deserialize_with = "quantity")]
    pub t_max: Option<String>,
    pub points: Option<usize>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A row of the resolved parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: &'static str,
    pub value: f64,
    pub unit: &'static str,
}

/// Fully resolved model and device parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub system: SystemParams,
    pub temperature: f64,
}

impl Resolved {
    pub fn table(&self) -> Vec<Entry> {
        let s = &self.system;
        let d = &self.experiment.device;
        let e = |name, value, unit| Entry { name, value, unit };
        vec![
            e("nbar_a0", s.nbar_a0, ""),
            e("nbar_b0", self.experiment.nbar_b0, ""),
            e("kappa", s.kappa, "rad/s"),
            e("omega", d.omega, "rad/s"),
            e("nu", d.nu, "rad/s"),
            e("delta", s.delta, "rad/s"),
            e("q", d.quality_factor, ""),
            e("gamma_a", s.gamma_a, "1/s"),
            e("mu1", s.mu1, "1/s"),
            e("mu2", s.mu2, "1/s"),
            e("temperature", self.temperature, "K"),
            e("cantilever_mass", d.cantilever_mass, "kg"),
            e("ion_mass", d.ion_mass, "kg"),
            e("distance", d.distance, "m"),
            e("bias_voltage", d.bias_voltage, "V"),
            e("capacitance", d.capacitance, "F"),
            e("laser_wavevector", d.laser_wavevector, "rad/m"),
            e("rabi_frequency", d.rabi_frequency, "rad/s"),
        ]
    }
}

fn get(value: &Option<String>, parse: fn(&str) -> Result<f64, UnitError>, default: f64) -> Result<f64, CliError> {
    match value {
        Some(s) => parse(s).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(default),
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64, CliError> {
    if v < 0.0 {
        return Err(CliError::Config(format!("{name} must be non-negative, got {v}")));
    }
    Ok(v)
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if !(v > 0.0) {
        return Err(CliError::Config(format!("{name} must be positive, got {v}")));
    }
    Ok(v)
}

/// Resolves a merged parameter set against the reference defaults.
pub fn resolve(p: &ParamSet) -> Result<Resolved, CliError> {
    let nbar_a0 = non_negative("nbar_a0", get(&p.nbar_a0, parse_number, DEFAULT_NBAR_A0)?)?;
    let nbar_b0 = non_negative("nbar_b0", get(&p.nbar_b0, parse_number, 0.0)?)?;
    let kappa = non_negative("kappa", get(&p.kappa, parse_frequency, DEFAULT_KAPPA)?)?;
    let omega = positive("frequency", get(&p.frequency, parse_frequency, DEFAULT_FREQUENCY)?)?;
    let delta = get(&p.delta, parse_frequency, 0.0)?;

    let q = match (&p.q, &p.gamma_a) {
        (Some(_), Some(_)) => {
            let q = positive("q", get(&p.q, parse_number, 0.0)?)?;
            let gamma = non_negative("gamma_a", get(&p.gamma_a, parse_frequency, 0.0)?)?;
            if ((omega / q) - gamma).abs() > CONSISTENCY_TOL * gamma.max(omega / q) {
                return Err(CliError::Config(format!(
                    "q = {q} and gamma_a = {gamma} 1/s are inconsistent (omega / q = {} 1/s); give only one",
                    omega / q
                )));
            }
            q
        }
        (None, Some(_)) => omega / non_negative("gamma_a", get(&p.gamma_a, parse_frequency, 0.0)?)?,
        _ => positive("q", get(&p.q, parse_number, DEFAULT_Q)?)?,
    };

    let mu1 = non_negative("mu1", get(&p.mu1, parse_frequency, 0.0)?)?;
    let mu2 = non_negative("mu2", get(&p.mu2, parse_frequency, 0.0)?)?;
    if mu1 < mu2 {
        return Err(CliError::Config(format!("mu1 = {mu1} must not be below mu2 = {mu2}")));
    }

    let reference = DeviceParams::cantilever_reference();
    let temperature = non_negative("temperature", get(&p.temperature, parse_number, reference.bath_temperature)?)?;
    let bias = non_negative("bias_voltage", get(&p.bias_voltage, parse_number, reference.bias_voltage)?)?;
    let nu = omega - delta;
    if !(nu > 0.0) {
        return Err(CliError::Config(format!("detuning {delta} rad/s leaves a non-positive ion frequency")));
    }
    let mut device = DeviceParams {
        ion_mass: positive("ion_mass_u", get(&p.ion_mass_u, parse_number, reference.ion_mass / constants::ATOMIC_MASS)?)? * constants::ATOMIC_MASS,
        cantilever_mass: positive("cantilever_mass", get(&p.cantilever_mass, parse_number, reference.cantilever_mass)?)?,
        nu,
        omega,
        bias_voltage: bias,
        capacitance: 0.0,
        distance: positive("distance", get(&p.distance, parse_length, reference.distance)?)?,
        quality_factor: q,
        bath_temperature: temperature,
        laser_wavevector: 2.0 * PI / positive("wavelength", get(&p.wavelength, parse_length, 2.0 * PI / reference.laser_wavevector)?)?,
        rabi_frequency: positive("rabi", get(&p.rabi, parse_frequency, reference.rabi_frequency)?)?,
        trap_dimension: reference.trap_dimension,
        heating_time: reference.heating_time,
    };
    // the capacitance is whatever realizes the requested coupling
    let charge = required_bias_product(kappa, &device)?;
    if charge > 0.0 && bias == 0.0 {
        return Err(CliError::Config("a non-zero kappa needs a non-zero bias_voltage".into()));
    }
    device.capacitance = if charge == 0.0 { 0.0 } else { charge / bias };

    let experiment = Experiment { device, nbar_a0, nbar_b0, heating: HeatingModel::Rates { mu1, mu2 } };
    let system = experiment.system_params()?;
    Ok(Resolved { experiment, system, temperature })
}

/// Output grid `[0, t_max]` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_max: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(t_max: f64, points: usize) -> Result<Self, CliError> {
        if points < 2 {
            return Err(CliError::Config(format!("grid needs at least 2 points, got {points}")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(CliError::Config(format!("t_max must be positive, got {t_max}")));
        }
        Ok(Self { t_max, points })
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n).map(|i| self.t_max * i as f64 / n as f64).collect()
    }

    pub fn parse(t_max: Option<&str>, points: Option<usize>, default_t_max: f64, default_points: usize) -> Result<Self, CliError> {
        let t = match t_max {
            Some(s) => parse_time(s).map_err(|e| CliError::Config(e.to_string()))?,
            None => default_t_max,
        };
        Self::new(t, points.unwrap_or(default_points))
    }
}
