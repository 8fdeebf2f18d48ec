//! Fidelities, entanglement measures, the timing-error fidelity law,
//! parameter sweeps and the physical-units report.

use num_traits::Zero;

use crate::hamiltonians::PhysParams;
use crate::linalg::{eigh, CMatrix, CVector};
use crate::protocol::{run_protocol, Backend, ProtocolConfig, ProtocolResult};
use crate::{real, Cplx, Error, Real, Result};

/// Radiative lifetime of the circular Rydberg levels used here (s).
pub const RADIATIVE_TIME_S: f64 = 3.0e-2;

/// Photon storage time of the reference cavity (s), used for comparison
/// whenever no decay rate is configured.
pub const DEFAULT_PHOTON_LIFETIME_S: f64 = 1.0e-3;

/// Pure-state fidelity `|⟨φ|ψ⟩|²`.
pub fn fidelity<T: Real>(psi: &CVector<T>, phi: &CVector<T>) -> Result<T> {
    if psi.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            expected: phi.dim(),
            found: psi.dim(),
        });
    }
    Ok(phi.inner(psi).norm_sqr())
}

/// Mixed-state fidelity `⟨φ|ρ|φ⟩` against a pure target.
pub fn fidelity_mixed<T: Real>(rho: &CMatrix<T>, phi: &CVector<T>) -> Result<T> {
    if !rho.is_square() || rho.rows() != phi.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity_mixed",
            expected: phi.dim(),
            found: rho.rows(),
        });
    }
    Ok(phi.inner(&rho.matvec(phi)).re)
}

/// Closed-form fidelity of the timing-error state against the target:
/// `F(Δ) = (5 + 4 cos 2πΔ)/9`.
pub fn timing_fidelity_law<T: Real>(delta: T) -> T {
    (real::<T>(5.0) + real::<T>(4.0) * (real::<T>(2.0) * T::PI() * delta).cos()) / real::<T>(9.0)
}

/// Schmidt coefficients of a two-qutrit pure state, descending.
///
/// These are the square roots of the eigenvalues of the atom-1 reduced
/// density matrix; their squares sum to 1 for a normalized input.
pub fn schmidt_coefficients<T: Real>(psi9: &CVector<T>) -> Result<[T; 3]> {
    if psi9.dim() != 9 {
        return Err(Error::DimensionMismatch {
            context: "schmidt_coefficients",
            expected: 9,
            found: psi9.dim(),
        });
    }
    // Gram matrix of the amplitude rows: G = M M† with M[a1][a2] = ψ[3·a1+a2].
    let gram = CMatrix::from_fn(3, 3, |i, j| {
        (0..3)
            .map(|k| psi9[3 * i + k] * psi9[3 * j + k].conj())
            .fold(Cplx::<T>::zero(), |a, b| a + b)
    });
    let (evals, _) = eigh(&gram)?;
    let mut out = [T::zero(); 3];
    for (slot, ev) in out.iter_mut().zip(evals.iter().rev()) {
        *slot = ev.max(T::zero()).sqrt();
    }
    Ok(out)
}

/// Entanglement entropy `-Σ s² ln s²` of a Schmidt spectrum, in nats.
pub fn schmidt_entropy_nats<T: Real>(schmidt: &[T; 3]) -> T {
    let mut acc = T::zero();
    for s in schmidt {
        let p = *s * *s;
        if p > T::zero() {
            acc -= p * p.ln();
        }
    }
    acc
}

/// Entanglement entropy normalized to base 3, so a maximally entangled
/// two-qutrit state scores 1.
pub fn schmidt_entropy_base3<T: Real>(schmidt: &[T; 3]) -> T {
    schmidt_entropy_nats(schmidt) / real::<T>(3.0).ln()
}

/// Derived times, rates and laboratory comparisons for a parameter set.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PhysicalReport<T> {
    pub g_rad_per_s: T,
    pub delta_eg_rad_per_s: T,
    /// Collision rate `λ = g²/δ_eg`.
    pub lambda_rad_per_s: T,
    /// First collision time `π/(2λ)`.
    pub t1_s: T,
    /// Second collision time `π/(4λ)`.
    pub t2_s: T,
    /// Total cavity time `3π/(4λ)`.
    pub t_total_s: T,
    /// Atom velocity needed to cross a cavity of the given length within
    /// `t_total`.
    pub velocity_m_per_s: Option<T>,
    pub cavity_length_m: Option<T>,
    pub radiative_time_s: T,
    /// `1/κ` when decay is configured, otherwise the reference storage time.
    pub photon_lifetime_s: T,
    pub t_total_over_radiative: T,
    pub t_total_over_photon_lifetime: T,
}

/// Compute the physical-units report for a parameter set, optionally with a
/// cavity length for the velocity estimate.
pub fn physical_report<T: Real>(
    params: &PhysParams<T>,
    cavity_length_m: Option<T>,
) -> PhysicalReport<T> {
    let lambda = params.lambda();
    let t1 = T::FRAC_PI_2() / lambda;
    let t2 = T::FRAC_PI_4() / lambda;
    let t_total = t1 + t2;
    let photon_lifetime = if params.kappa > T::zero() {
        T::one() / params.kappa
    } else {
        real::<T>(DEFAULT_PHOTON_LIFETIME_S)
    };
    PhysicalReport {
        g_rad_per_s: params.g,
        delta_eg_rad_per_s: params.delta_eg,
        lambda_rad_per_s: lambda,
        t1_s: t1,
        t2_s: t2,
        t_total_s: t_total,
        velocity_m_per_s: cavity_length_m.map(|l| l / t_total),
        cavity_length_m,
        radiative_time_s: real::<T>(RADIATIVE_TIME_S),
        photon_lifetime_s: photon_lifetime,
        t_total_over_radiative: t_total / real::<T>(RADIATIVE_TIME_S),
        t_total_over_photon_lifetime: t_total / photon_lifetime,
    }
}

/// One grid point of a parameter sweep.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    /// The swept parameter value.
    pub param: T,
    pub fidelity_raw: T,
    pub fidelity_calibrated: Option<T>,
    /// Closed-form prediction, where one applies (timing sweeps).
    pub fidelity_analytic: Option<T>,
    pub photon_population: Option<T>,
    pub schmidt_entropy: Option<T>,
}

fn row_from_result<T: Real>(param: T, result: &ProtocolResult<T>) -> SweepRow<T> {
    SweepRow {
        param,
        fidelity_raw: result.fidelity_raw,
        fidelity_calibrated: result.fidelity_calibrated,
        fidelity_analytic: None,
        photon_population: result.photon_population,
        schmidt_entropy: Some(schmidt_entropy_nats(&result.schmidt)),
    }
}

/// Sweep the entry-time mismatch Δ. The analytic column carries the
/// closed-form law; with the closed-form timing model the two columns agree
/// to machine precision.
pub fn timing_sweep<T: Real>(base: &ProtocolConfig<T>, grid: &[T]) -> Result<Vec<SweepRow<T>>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("timing sweep needs a non-empty grid".into()));
    }
    grid.iter()
        .map(|&delta| {
            let mut cfg = base.clone();
            cfg.timing_delta = delta;
            let result = run_protocol(&cfg)?;
            let mut row = row_from_result(delta, &result);
            row.fidelity_analytic = Some(timing_fidelity_law(delta));
            Ok(row)
        })
        .collect()
}

/// Promote the 9-dimensional engines to the full unitary one; sweeps of
/// field-level parameters are meaningless without the cavity in the model.
fn promote_to_full<T: Real>(cfg: &mut ProtocolConfig<T>) {
    if !matches!(cfg.backend, Backend::FullUnitary | Backend::FullLindblad) {
        cfg.backend = Backend::FullUnitary;
    }
}

/// Sweep the detuning ratio `δ_eg/g` with a full engine (a configured
/// `full_lindblad` backend is kept, anything else runs `full_unitary`).
pub fn detuning_sweep<T: Real>(base: &ProtocolConfig<T>, ratios: &[T]) -> Result<Vec<SweepRow<T>>> {
    if ratios.is_empty() {
        return Err(Error::InvalidConfig(
            "detuning sweep needs a non-empty grid".into(),
        ));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let mut cfg = base.clone();
            promote_to_full(&mut cfg);
            cfg.params.delta_eg = ratio * cfg.params.g;
            cfg.ctrl.phase_rate = cfg.params.lambda();
            let result = run_protocol(&cfg)?;
            Ok(row_from_result(ratio, &result))
        })
        .collect()
}

/// Sweep the cavity decay rate κ (1/s) with the Lindblad engine.
pub fn kappa_sweep<T: Real>(base: &ProtocolConfig<T>, kappas: &[T]) -> Result<Vec<SweepRow<T>>> {
    if kappas.is_empty() {
        return Err(Error::InvalidConfig("kappa sweep needs a non-empty grid".into()));
    }
    kappas
        .iter()
        .map(|&kappa| {
            let mut cfg = base.clone();
            cfg.backend = Backend::FullLindblad;
            cfg.params.kappa = kappa;
            let result = run_protocol(&cfg)?;
            Ok(row_from_result(kappa, &result))
        })
        .collect()
}

/// Sweep the Fock cutoff `n_max` with a full engine to demonstrate
/// convergence in the photon-number truncation.
pub fn fock_convergence<T: Real>(
    base: &ProtocolConfig<T>,
    n_maxes: &[usize],
) -> Result<Vec<SweepRow<T>>> {
    if n_maxes.is_empty() {
        return Err(Error::InvalidConfig(
            "convergence sweep needs a non-empty grid".into(),
        ));
    }
    n_maxes
        .iter()
        .map(|&n_max| {
            let mut cfg = base.clone();
            promote_to_full(&mut cfg);
            cfg.params.fock_dim = n_max + 1;
            let result = run_protocol(&cfg)?;
            Ok(row_from_result(T::from_usize(n_max).unwrap(), &result))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{ideal_stage_state, Stage, TimingModel};
    use crate::test_util::random_state;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    #[test]
    fn fidelity_of_a_state_with_itself_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_state(&mut rng, 9);
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_state_has_fidelity_one_ninth() {
        let rho = CMatrix::<f64>::identity(9).scale(C64::new(1.0 / 9.0, 0.0));
        let target = ideal_stage_state::<f64>(Stage::Target);
        let fid = fidelity_mixed(&rho, &target).unwrap();
        assert!((fid - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn timing_law_reference_points() {
        assert!((timing_fidelity_law(0.0f64) - 1.0).abs() < 1e-15);
        // Rounded to three decimals the small-mismatch point reads 0.999.
        let f = timing_fidelity_law(0.01f64);
        assert!((f - 0.999).abs() < 5e-4, "{f}");
        assert!(f < 1.0);
        assert!((timing_fidelity_law(0.25f64) - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn timing_law_matches_the_error_state_overlap() {
        let target = ideal_stage_state::<f64>(Stage::Target);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let delta: f64 = rng.random::<f64>() * 0.5;
            let state = ideal_stage_state::<f64>(Stage::TimingError { delta });
            let direct = fidelity(&state, &target).unwrap();
            assert!((direct - timing_fidelity_law(delta)).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_of_the_target_is_flat() {
        let target = ideal_stage_state::<f64>(Stage::Target);
        let s = schmidt_coefficients(&target).unwrap();
        for v in s {
            assert!((v - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
        }
        assert!((schmidt_entropy_nats(&s) - 3.0f64.ln()).abs() < 1e-10);
        assert!((schmidt_entropy_base3(&s) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schmidt_of_a_product_state_is_sharp() {
        let ff = CVector::<f64>::basis(9, 0);
        let s = schmidt_coefficients(&ff).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12 && s[2].abs() < 1e-12);
    }

    #[test]
    fn schmidt_matches_the_reduced_density_matrix_route() {
        // Independent route: reduce the full density matrix and compare
        // eigenvalues against the squared Schmidt coefficients.
        let psi = ideal_stage_state::<f64>(Stage::TimingError { delta: 0.1 });
        let s = schmidt_coefficients(&psi).unwrap();
        let rho = psi.outer(&psi);
        let reduced = crate::linalg::partial_trace(&rho, &[3, 3], &[0]).unwrap();
        let (evals, _) = eigh(&reduced).unwrap();
        for (a, b) in evals.iter().rev().zip(s.iter()) {
            assert!((a - b * b).abs() < 1e-10);
        }
        let sq_sum: f64 = s.iter().map(|x| x * x).sum();
        assert!((sq_sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn physical_report_reference_numbers() {
        let params = PhysParams::<f64>::reference();
        let report = physical_report(&params, Some(0.0275));
        // λ = g/10 at δ_eg = 10 g.
        assert!((report.lambda_rad_per_s - params.g / 10.0).abs() < 1e-9);
        // Total cavity time 1.50e-4 s within 1%.
        assert!((report.t_total_s - 1.5e-4).abs() / 1.5e-4 < 0.01, "{}", report.t_total_s);
        // Velocity within 6% of 192 m/s (the coarser rounding of 1/t_total).
        let v = report.velocity_m_per_s.unwrap();
        assert!((v - 192.0).abs() / 192.0 < 0.06, "{v}");
        // Comfortably inside both lifetimes.
        assert!((report.t_total_over_photon_lifetime - 0.15).abs() < 0.01);
        assert!(report.t_total_over_radiative < 0.01);
    }

    fn base_config(backend: Backend) -> ProtocolConfig<f64> {
        ProtocolConfig::new(backend, PhysParams::reference())
    }

    #[test]
    fn timing_sweep_reproduces_the_law() {
        let base = base_config(Backend::IdealAlgebra);
        let rows = timing_sweep(&base, &[0.0, 0.01, 0.05, 0.1]).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            let err = (row.fidelity_raw - row.fidelity_analytic.unwrap()).abs();
            assert!(err < 1e-12, "delta {} err {err}", row.param);
        }
    }

    #[test]
    fn detuning_sweep_is_monotone() {
        let mut base = base_config(Backend::FullUnitary);
        base.params.fock_dim = 3;
        let rows = detuning_sweep(&base, &[5.0, 10.0, 20.0, 40.0]).unwrap();
        let mut last = 0.0;
        for row in &rows {
            let fid = row.fidelity_calibrated.unwrap();
            assert!(
                fid >= last,
                "calibrated fidelity not monotone at ratio {}: {fid} < {last}",
                row.param
            );
            last = fid;
        }
        assert!(last > 0.99, "largest-detuning fidelity {last}");
    }

    #[test]
    fn kappa_sweep_degrades_gently() {
        let mut base = base_config(Backend::FullLindblad);
        base.params.fock_dim = 3;
        let rows = kappa_sweep(&base, &[0.0, 1.0e3]).unwrap();
        let f0 = rows[0].fidelity_calibrated.unwrap();
        let f1 = rows[1].fidelity_calibrated.unwrap();
        assert!(f1 <= f0 + 1e-12, "decay should not improve fidelity");
        assert!(f0 - f1 < 0.05, "drop {}", f0 - f1);
    }

    #[test]
    fn fock_convergence_rows_are_stable() {
        let base = base_config(Backend::FullUnitary);
        let rows = fock_convergence(&base, &[2, 3, 4]).unwrap();
        for pair in rows.windows(2) {
            let d = (pair[1].fidelity_calibrated.unwrap() - pair[0].fidelity_calibrated.unwrap())
                .abs();
            assert!(d < 1e-6, "fidelity moved by {d} between cutoffs");
        }
    }

    #[test]
    fn empty_grids_are_rejected() {
        let base = base_config(Backend::IdealAlgebra);
        assert!(timing_sweep(&base, &[]).is_err());
        assert!(detuning_sweep(&base, &[]).is_err());
        assert!(kappa_sweep(&base, &[]).is_err());
        assert!(fock_convergence(&base, &[]).is_err());
    }

    #[test]
    fn physical_timing_sweep_reports_no_error() {
        // The naive early-entry model is a global phase: the sweep stays
        // pinned at fidelity 1 while the closed-form law decays.
        let mut base = base_config(Backend::IdealAlgebra);
        base.timing_model = TimingModel::Physical;
        let rows = timing_sweep(&base, &[0.0, 0.1, 0.3]).unwrap();
        for row in rows {
            assert!((row.fidelity_raw - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fidelity_is_symmetric_and_bounded(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_state(&mut rng, 9);
            let b = random_state(&mut rng, 9);
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            prop_assert!((fab - fba).abs() < 1e-14);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fab));
        }
    }
}
