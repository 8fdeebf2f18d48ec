//! Result serialization: JSON for single runs, CSV for sweeps.
//!
//! Every float in CSV output is written with 12 significant digits
//! (`{:.11e}`), a `.` decimal separator and `\n` line endings, and the first
//! line carries the schema version as a comment. Identical configurations
//! produce byte-identical files.

use std::collections::BTreeMap;

use serde::Serialize;

use qutrit_cavity::analysis::{
    physical_report, schmidt_entropy_base3, schmidt_entropy_nats, PhysicalReport, SweepRow,
};
use qutrit_cavity::hamiltonians::PhysParams;
use qutrit_cavity::protocol::{FinalState, ProtocolConfig, ProtocolResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Format a float with 12 significant digits.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

#[derive(Serialize)]
struct PhasesDto {
    atom1: BTreeMap<&'static str, f64>,
    atom2: BTreeMap<&'static str, f64>,
}

fn phases_dto(phases: &qutrit_cavity::protocol::CalibrationPhases<f64>) -> PhasesDto {
    let levels = ["f", "g", "e"];
    PhasesDto {
        atom1: levels.iter().copied().zip(phases.atom1).collect(),
        atom2: levels.iter().copied().zip(phases.atom2).collect(),
    }
}

#[derive(Serialize)]
struct PhysicalDto {
    g_rad_per_s: f64,
    delta_eg_rad_per_s: f64,
    lambda_rad_per_s: f64,
    t1_s: f64,
    t2_s: f64,
    t_total_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cavity_length_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    velocity_m_per_s: Option<f64>,
    radiative_time_s: f64,
    photon_lifetime_s: f64,
    t_total_over_radiative: f64,
    t_total_over_photon_lifetime: f64,
}

impl From<PhysicalReport<f64>> for PhysicalDto {
    fn from(r: PhysicalReport<f64>) -> Self {
        Self {
            g_rad_per_s: r.g_rad_per_s,
            delta_eg_rad_per_s: r.delta_eg_rad_per_s,
            lambda_rad_per_s: r.lambda_rad_per_s,
            t1_s: r.t1_s,
            t2_s: r.t2_s,
            t_total_s: r.t_total_s,
            cavity_length_m: r.cavity_length_m,
            velocity_m_per_s: r.velocity_m_per_s,
            radiative_time_s: r.radiative_time_s,
            photon_lifetime_s: r.photon_lifetime_s,
            t_total_over_radiative: r.t_total_over_radiative,
            t_total_over_photon_lifetime: r.t_total_over_photon_lifetime,
        }
    }
}

#[derive(Serialize)]
struct RunDto {
    schema_version: u32,
    backend: &'static str,
    timing_model: &'static str,
    timing_delta: f64,
    state_kind: &'static str,
    fidelity_raw: f64,
    fidelity_calibrated: Option<f64>,
    calibration_phases: Option<PhasesDto>,
    schmidt_coefficients: [f64; 3],
    schmidt_entropy_nats: f64,
    schmidt_entropy_base3: f64,
    populations: BTreeMap<String, f64>,
    photon_population: Option<f64>,
    trace_error: Option<f64>,
    physical: PhysicalDto,
}

/// Render a protocol run as pretty JSON (with a trailing newline).
pub fn run_to_json(cfg: &ProtocolConfig<f64>, result: &ProtocolResult<f64>) -> String {
    let dto = RunDto {
        schema_version: SCHEMA_VERSION,
        backend: cfg.backend.name(),
        timing_model: cfg.timing_model.name(),
        timing_delta: cfg.timing_delta,
        state_kind: match result.final_atom_state {
            FinalState::Pure(_) => "pure",
            FinalState::Mixed(_) => "mixed",
        },
        fidelity_raw: result.fidelity_raw,
        fidelity_calibrated: result.fidelity_calibrated,
        calibration_phases: result.calibration_phases.as_ref().map(phases_dto),
        schmidt_coefficients: result.schmidt,
        schmidt_entropy_nats: schmidt_entropy_nats(&result.schmidt),
        schmidt_entropy_base3: schmidt_entropy_base3(&result.schmidt),
        populations: result.populations.iter().cloned().collect(),
        photon_population: result.photon_population,
        trace_error: result.trace_error,
        physical: physical_report(&cfg.params, None).into(),
    };
    let mut text = serde_json::to_string_pretty(&dto).expect("serializable report");
    text.push('\n');
    text
}

/// Render a protocol run as a single-row CSV.
pub fn run_to_csv(cfg: &ProtocolConfig<f64>, result: &ProtocolResult<f64>) -> String {
    let mut out = format!("# schema_version {SCHEMA_VERSION}\n");
    out.push_str(
        "backend,fidelity_raw,fidelity_calibrated,schmidt_1,schmidt_2,schmidt_3,photon_population,trace_error\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        cfg.backend.name(),
        fmt_sig12(result.fidelity_raw),
        fmt_opt(result.fidelity_calibrated),
        fmt_sig12(result.schmidt[0]),
        fmt_sig12(result.schmidt[1]),
        fmt_sig12(result.schmidt[2]),
        fmt_opt(result.photon_population),
        fmt_opt(result.trace_error),
    ));
    out
}

/// Which sweep produced a set of rows; selects the CSV column layout.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Timing,
    Detuning,
    Kappa,
    Convergence,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Timing => "timing",
            SweepKind::Detuning => "detuning",
            SweepKind::Kappa => "kappa",
            SweepKind::Convergence => "convergence",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            SweepKind::Timing => "delta,fidelity_sim,fidelity_law,abs_err",
            SweepKind::Detuning => {
                "delta_ratio,fidelity_raw,fidelity_calibrated,photon_population,schmidt_entropy"
            }
            SweepKind::Kappa => {
                "kappa_per_s,fidelity_raw,fidelity_calibrated,photon_population,schmidt_entropy"
            }
            SweepKind::Convergence => "n_max,fidelity_raw,fidelity_calibrated,delta_prev",
        }
    }
}

/// Render sweep rows as CSV with the documented per-sweep header.
pub fn sweep_to_csv(kind: SweepKind, rows: &[SweepRow<f64>]) -> String {
    let mut out = format!("# schema_version {SCHEMA_VERSION}\n");
    out.push_str(kind.header());
    out.push('\n');
    let mut prev_calibrated: Option<f64> = None;
    for row in rows {
        let line = match kind {
            SweepKind::Timing => {
                let law = row.fidelity_analytic.unwrap_or(f64::NAN);
                format!(
                    "{},{},{},{}",
                    fmt_sig12(row.param),
                    fmt_sig12(row.fidelity_raw),
                    fmt_sig12(law),
                    fmt_sig12((row.fidelity_raw - law).abs()),
                )
            }
            SweepKind::Detuning | SweepKind::Kappa => format!(
                "{},{},{},{},{}",
                fmt_sig12(row.param),
                fmt_sig12(row.fidelity_raw),
                fmt_opt(row.fidelity_calibrated),
                fmt_opt(row.photon_population),
                fmt_opt(row.schmidt_entropy),
            ),
            SweepKind::Convergence => {
                let cal = row.fidelity_calibrated.unwrap_or(f64::NAN);
                let delta_prev = prev_calibrated.map(|p| (cal - p).abs()).unwrap_or(0.0);
                prev_calibrated = Some(cal);
                format!(
                    "{},{},{},{}",
                    fmt_sig12(row.param),
                    fmt_sig12(row.fidelity_raw),
                    fmt_sig12(cal),
                    fmt_sig12(delta_prev),
                )
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SweepDto {
    schema_version: u32,
    sweep: &'static str,
    rows: Vec<SweepRowDto>,
}

#[derive(Serialize)]
struct SweepRowDto {
    param: f64,
    fidelity_raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity_calibrated: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity_law: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    photon_population: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schmidt_entropy: Option<f64>,
}

/// Render sweep rows as JSON.
pub fn sweep_to_json(kind: SweepKind, rows: &[SweepRow<f64>]) -> String {
    let dto = SweepDto {
        schema_version: SCHEMA_VERSION,
        sweep: kind.name(),
        rows: rows
            .iter()
            .map(|r| SweepRowDto {
                param: r.param,
                fidelity_raw: r.fidelity_raw,
                fidelity_calibrated: r.fidelity_calibrated,
                fidelity_law: r.fidelity_analytic,
                photon_population: r.photon_population,
                schmidt_entropy: r.schmidt_entropy,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&dto).expect("serializable sweep");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct ParamsDto {
    schema_version: u32,
    #[serde(flatten)]
    physical: PhysicalDto,
}

/// Render the physical-units report as JSON.
pub fn params_to_json(params: &PhysParams<f64>, cavity_length_m: Option<f64>) -> String {
    let dto = ParamsDto {
        schema_version: SCHEMA_VERSION,
        physical: physical_report(params, cavity_length_m).into(),
    };
    let mut text = serde_json::to_string_pretty(&dto).expect("serializable params");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formatting() {
        assert_eq!(fmt_sig12(5.0 / 9.0), "5.55555555556e-1");
        assert_eq!(fmt_sig12(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig12(1.5e-4), "1.50000000000e-4");
        // Round-trips through parsing at 12 significant digits.
        let x: f64 = fmt_sig12(0.9991234567891).parse().unwrap();
        assert!((x - 0.9991234567891).abs() < 1e-12);
    }

    #[test]
    fn csv_headers_are_stable() {
        assert_eq!(
            SweepKind::Timing.header(),
            "delta,fidelity_sim,fidelity_law,abs_err"
        );
        assert_eq!(
            SweepKind::Convergence.header(),
            "n_max,fidelity_raw,fidelity_calibrated,delta_prev"
        );
    }

    #[test]
    fn sweep_csv_shape() {
        let rows = vec![
            SweepRow {
                param: 0.0,
                fidelity_raw: 1.0,
                fidelity_calibrated: None,
                fidelity_analytic: Some(1.0),
                photon_population: None,
                schmidt_entropy: Some(3.0f64.ln()),
            },
            SweepRow {
                param: 0.25,
                fidelity_raw: 5.0 / 9.0,
                fidelity_calibrated: None,
                fidelity_analytic: Some(5.0 / 9.0),
                photon_population: None,
                schmidt_entropy: Some(0.9),
            },
        ];
        let text = sweep_to_csv(SweepKind::Timing, &rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "# schema_version 1");
        assert_eq!(lines[1], "delta,fidelity_sim,fidelity_law,abs_err");
        assert!(lines[3].starts_with("2.50000000000e-1,5.55555555556e-1"));
    }
}
