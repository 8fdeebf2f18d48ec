//! Sectioned key-value run configuration.
//!
//! The file format is deliberately strict: unknown sections, unknown keys
//! and duplicate keys are all rejected so that physics typos fail loudly
//! instead of silently running with defaults.
//!
//! ```text
//! [physics]
//! g_over_2pi_hz = 25e3       # atom-cavity coupling, g/2π in Hz
//! delta_ratio = 10.0         # δ_eg expressed as a multiple of g
//! delta_det_hz = 3.2e9       # transition-frequency difference /2π in Hz
//! cavity_T_s = 1e-3          # photon storage time (alternative: kappa_hz)
//! fock_dim = 5               # photon levels, n_max + 1
//! g_f_over_2pi_hz = 0.0      # leakage coupling, 0 disables
//!
//! [protocol]
//! backend = ideal_algebra    # ideal_algebra | dispersive_analytic |
//!                            # dispersive_numeric | full_unitary | full_lindblad
//! lambda_t1 = 1.5707963267948966
//! lambda_t2 = 0.7853981633974483
//! timing_delta = 0.0
//! timing_model = closed_form # closed_form | physical
//! calibrate = true
//!
//! [numerics]
//! steps_per_pi = 2000
//! tolerance = 1e-8
//!
//! [output]
//! path = -                   # '-' writes to stdout
//! format = json              # json | csv
//! ```
//!
//! All `*_hz` keys are `/2π` values converted to rad/s internally, except
//! `kappa_hz`, which is a plain decay rate in 1/s (the inverse of
//! `cavity_T_s`).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::path::Path;

use qutrit_cavity::dynamics::StepControl;
use qutrit_cavity::hamiltonians::PhysParams;
use qutrit_cavity::protocol::{Backend, ProtocolConfig, TimingModel};

use crate::CliError;

/// Output format of a subcommand.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(CliError::config(format!(
                "unknown output format '{other}' (expected 'json' or 'csv')"
            ))),
        }
    }
}

/// Parsed and validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub g_over_2pi_hz: f64,
    pub delta_ratio: f64,
    pub delta_det_hz: f64,
    /// Cavity decay rate in 1/s; 0 disables decay.
    pub kappa_per_s: f64,
    pub fock_dim: usize,
    pub g_f_over_2pi_hz: f64,
    pub backend: Backend,
    pub lambda_t1: f64,
    pub lambda_t2: f64,
    pub timing_delta: f64,
    pub timing_model: TimingModel,
    pub calibrate: bool,
    pub steps_per_pi: usize,
    pub tolerance: f64,
    pub output_path: String,
    pub output_format: Option<OutputFormat>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            g_over_2pi_hz: 25e3,
            delta_ratio: 10.0,
            delta_det_hz: 3.2e9,
            kappa_per_s: 0.0,
            fock_dim: 5,
            g_f_over_2pi_hz: 0.0,
            backend: Backend::IdealAlgebra,
            lambda_t1: FRAC_PI_2,
            lambda_t2: FRAC_PI_4,
            timing_delta: 0.0,
            timing_model: TimingModel::ClosedForm,
            calibrate: true,
            steps_per_pi: 2000,
            tolerance: 1e-8,
            output_path: "-".into(),
            output_format: None,
        }
    }
}

fn parse_backend(s: &str) -> Result<Backend, CliError> {
    Backend::ALL
        .into_iter()
        .find(|b| b.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = Backend::ALL.iter().map(|b| b.name()).collect();
            CliError::config(format!(
                "unknown backend '{s}' (expected one of {})",
                names.join(", ")
            ))
        })
}

fn parse_timing_model(s: &str) -> Result<TimingModel, CliError> {
    match s {
        "closed_form" => Ok(TimingModel::ClosedForm),
        "physical" => Ok(TimingModel::Physical),
        other => Err(CliError::config(format!(
            "unknown timing_model '{other}' (expected 'closed_form' or 'physical')"
        ))),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::config(format!("key '{key}': cannot parse '{value}' as a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|_| CliError::config(format!("key '{key}': cannot parse '{value}' as an integer")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(CliError::config(format!(
            "key '{key}': cannot parse '{other}' as a boolean (use 'true' or 'false')"
        ))),
    }
}

impl RunConfig {
    /// Read and validate a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        Self::parse_str(&text)
    }

    /// Parse configuration text; every key is optional, unknown keys are
    /// errors.
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        let mut seen: Vec<String> = Vec::new();
        let mut saw_kappa = false;
        let mut saw_cavity_t = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        CliError::config(format!("line {}: malformed section header", lineno + 1))
                    })?
                    .trim();
                if !["physics", "protocol", "numerics", "output"].contains(&name) {
                    return Err(CliError::config(format!(
                        "line {}: unknown section '[{name}]'",
                        lineno + 1
                    )));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(CliError::config(format!(
                    "line {}: key '{key}' appears before any section header",
                    lineno + 1
                )));
            }
            let qualified = format!("{section}.{key}");
            if seen.contains(&qualified) {
                return Err(CliError::config(format!(
                    "line {}: duplicate key '{qualified}'",
                    lineno + 1
                )));
            }
            seen.push(qualified.clone());

            match qualified.as_str() {
                "physics.g_over_2pi_hz" => cfg.g_over_2pi_hz = parse_f64(key, value)?,
                "physics.delta_ratio" => cfg.delta_ratio = parse_f64(key, value)?,
                "physics.delta_det_hz" => cfg.delta_det_hz = parse_f64(key, value)?,
                "physics.kappa_hz" => {
                    cfg.kappa_per_s = parse_f64(key, value)?;
                    saw_kappa = true;
                }
                "physics.cavity_T_s" => {
                    let t = parse_f64(key, value)?;
                    if t <= 0.0 {
                        return Err(CliError::config(
                            "cavity_T_s must be positive".to_string(),
                        ));
                    }
                    cfg.kappa_per_s = 1.0 / t;
                    saw_cavity_t = true;
                }
                "physics.fock_dim" => cfg.fock_dim = parse_usize(key, value)?,
                "physics.g_f_over_2pi_hz" => cfg.g_f_over_2pi_hz = parse_f64(key, value)?,
                "protocol.backend" => cfg.backend = parse_backend(value)?,
                "protocol.lambda_t1" => cfg.lambda_t1 = parse_f64(key, value)?,
                "protocol.lambda_t2" => cfg.lambda_t2 = parse_f64(key, value)?,
                "protocol.timing_delta" => cfg.timing_delta = parse_f64(key, value)?,
                "protocol.timing_model" => cfg.timing_model = parse_timing_model(value)?,
                "protocol.calibrate" => cfg.calibrate = parse_bool(key, value)?,
                "numerics.steps_per_pi" => cfg.steps_per_pi = parse_usize(key, value)?,
                "numerics.tolerance" => cfg.tolerance = parse_f64(key, value)?,
                "output.path" => cfg.output_path = value.to_string(),
                "output.format" => cfg.output_format = Some(OutputFormat::parse(value)?),
                _ => {
                    return Err(CliError::config(format!(
                        "line {}: unknown key '{qualified}'",
                        lineno + 1
                    )));
                }
            }
        }

        if saw_kappa && saw_cavity_t {
            return Err(CliError::config(
                "kappa_hz and cavity_T_s are mutually exclusive".to_string(),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    // Negated comparisons are deliberate: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.g_over_2pi_hz > 0.0) {
            return Err(CliError::config("g_over_2pi_hz must be positive"));
        }
        if !(self.delta_ratio > 0.0) {
            return Err(CliError::config("delta_ratio must be positive"));
        }
        if self.kappa_per_s < 0.0 {
            return Err(CliError::config("kappa_hz must be non-negative"));
        }
        if self.fock_dim < 2 {
            return Err(CliError::config(format!(
                "fock_dim must be at least 2, got {}",
                self.fock_dim
            )));
        }
        if self.g_f_over_2pi_hz < 0.0 {
            return Err(CliError::config("g_f_over_2pi_hz must be non-negative"));
        }
        if self.steps_per_pi == 0 {
            return Err(CliError::config("steps_per_pi must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::config("tolerance must be positive"));
        }
        // Range checks on the protocol fields are repeated by the executor;
        // doing them here gives config-shaped error messages.
        self.to_protocol_config().validate().map_err(CliError::from)
    }

    /// Physical parameters in rad/s units.
    pub fn to_phys_params(&self) -> PhysParams<f64> {
        let g = TAU * self.g_over_2pi_hz;
        PhysParams {
            g,
            delta_eg: self.delta_ratio * g,
            delta_det: TAU * self.delta_det_hz,
            kappa: self.kappa_per_s,
            g_f: TAU * self.g_f_over_2pi_hz,
            fock_dim: self.fock_dim,
        }
    }

    /// Full protocol configuration for the executor.
    pub fn to_protocol_config(&self) -> ProtocolConfig<f64> {
        let params = self.to_phys_params();
        let ctrl = StepControl {
            steps_per_pi: self.steps_per_pi,
            tolerance: self.tolerance,
            phase_rate: params.lambda(),
        };
        ProtocolConfig {
            backend: self.backend,
            lambda_t1: self.lambda_t1,
            lambda_t2: self.lambda_t2,
            timing_delta: self.timing_delta,
            timing_model: self.timing_model,
            calibrate: self.calibrate,
            params,
            ctrl,
        }
    }
}
