//! The entanglement-generation sequence.
//!
//! Two atoms start in `|e₁e₂⟩`. Atom 1 is rotated into
//! `√(1/3)|f₁⟩ - √(2/3)|g₁⟩` by two classical pulses, both atoms undergo a
//! cavity-assisted collision for a phase `λt₁ = π/2`, atom 2 is flipped on
//! `e ↔ f`, a second collision runs for `λt₂ = π/4`, and a final pulse on
//! atom 2 maps the result onto the maximally entangled two-qutrit target
//! `√(1/3)(|ff⟩ + |ee⟩ + |gg⟩)`.
//!
//! Five interchangeable engines execute the sequence. `IdealAlgebra`
//! reproduces the closed-form bookkeeping in which a lone excited atom is
//! completely unaffected by the cavity; `DispersiveAnalytic` and
//! `DispersiveNumeric` keep the vacuum Stark phase that this bookkeeping
//! drops on the `|f₁e₂⟩` branch, which is why their raw fidelity ends at 5/9
//! and is restored to 1 by per-level phase calibration. The full engines
//! simulate the cavity explicitly and trace it out at the end.

use num_traits::{One, Zero};

use crate::analysis::{fidelity, fidelity_mixed, schmidt_coefficients};
use crate::dynamics::{evolve_lindblad_split, SpectralPropagator, StepControl};
use crate::hamiltonians::{
    collapse_ops, frame_rotation, h_dispersive_vacuum, h_static_frame, PhysParams,
};
use crate::hilbert::{
    basis_state, embed_atom_op, pair_index, pair_labels, pair_name, partial_trace_space, Atom,
    BasisLabel, Level, SpaceSpec, Subsystem,
};
use crate::linalg::{kron, CMatrix, CVector};
use crate::{real, Cplx, Error, Real, Result};

/// Atomic transition addressed by a classical pulse, as an ordered
/// (lower, upper) level pair.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Transition {
    FG,
    GE,
    FE,
}

impl Transition {
    pub fn lower(self) -> Level {
        match self {
            Transition::FG | Transition::FE => Level::F,
            Transition::GE => Level::G,
        }
    }

    pub fn upper(self) -> Level {
        match self {
            Transition::FG => Level::G,
            Transition::GE | Transition::FE => Level::E,
        }
    }
}

/// An instantaneous classical pulse on one atom.
///
/// Pulses are treated as ideal rotations: the driving field is assumed
/// strong enough that the atom-atom interaction during the pulse is
/// negligible, and each atom is addressable individually.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PulseSpec<T> {
    pub atom: Atom,
    pub transition: Transition,
    /// Rotation angle θ (rad).
    pub theta: T,
    /// Drive phase φ (rad).
    pub phi: T,
}

/// The 3×3 unitary realized by a pulse:
/// `|lower⟩ ↦ cos(θ/2)|lower⟩ - i e^{iφ} sin(θ/2)|upper⟩`,
/// `|upper⟩ ↦ -i e^{-iφ} sin(θ/2)|lower⟩ + cos(θ/2)|upper⟩`,
/// identity on the spectator level.
pub fn rotation_unitary<T: Real>(p: &PulseSpec<T>) -> CMatrix<T> {
    let l = p.transition.lower().index();
    let u = p.transition.upper().index();
    let half = p.theta / real::<T>(2.0);
    let cos = Cplx::new(half.cos(), T::zero());
    let msin = Cplx::new(T::zero(), -half.sin()); // -i sin(θ/2)
    let mut m = CMatrix::identity(3);
    m[(l, l)] = cos;
    m[(u, u)] = cos;
    m[(u, l)] = msin * Cplx::from_polar(T::one(), p.phi);
    m[(l, u)] = msin * Cplx::from_polar(T::one(), -p.phi);
    m
}

/// The two pulses that prepare atom 1: a π rotation on `g ↔ e` followed by
/// a partial rotation on `f ↔ g`, together mapping
/// `|e⟩ ↦ √(1/3)|f⟩ - √(2/3)|g⟩`.
pub fn prep_pulses_atom1<T: Real>() -> [PulseSpec<T>; 2] {
    let third_angle = real::<T>(2.0) * real::<T>(1.0 / 3.0).sqrt().asin();
    [
        PulseSpec {
            atom: Atom::One,
            transition: Transition::GE,
            theta: T::PI(),
            phi: T::FRAC_PI_2(),
        },
        PulseSpec {
            atom: Atom::One,
            transition: Transition::FG,
            theta: third_angle,
            phi: T::FRAC_PI_2(),
        },
    ]
}

/// Mid-sequence pulse on atom 2: `|e⟩ ↦ |f⟩`, `|f⟩ ↦ -|e⟩`.
pub fn mid_pulse_atom2<T: Real>() -> PulseSpec<T> {
    PulseSpec {
        atom: Atom::Two,
        transition: Transition::FE,
        theta: T::PI(),
        phi: -T::FRAC_PI_2(),
    }
}

/// Final pulse on atom 2: `|e⟩ ↦ -e^{-iπ/4}|g⟩`, `|g⟩ ↦ e^{iπ/4}|e⟩`.
pub fn final_pulse_atom2<T: Real>() -> PulseSpec<T> {
    PulseSpec {
        atom: Atom::Two,
        transition: Transition::GE,
        theta: T::PI(),
        phi: real::<T>(3.0) * T::FRAC_PI_4(),
    }
}

/// Closed-form stage states of the ideal sequence.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Stage<T> {
    /// During the first collision, at dimensionless phase `λt`.
    FirstCollision { lambda_t: T },
    /// End of the first collision at `λt₁ = π/2`.
    AfterFirstCollision,
    /// After the mid-sequence pulse on atom 2.
    AfterMidPulse,
    /// During the second collision, at dimensionless phase `λt`.
    SecondCollision { lambda_t: T },
    /// End of the second collision at `λt₂ = π/4`.
    AfterSecondCollision,
    /// The maximally entangled target.
    Target,
    /// Final state when atom 2 enters the cavity early by the fraction
    /// `delta` of an exchange period `τ = π/λ` (closed-form error model).
    TimingError { delta: T },
}

/// The ideal (bookkeeping) state at a protocol stage, on the 9-dimensional
/// two-atom space. Normalized by construction.
///
/// These closed forms treat a lone excited atom next to an `f`-level partner
/// as completely unaffected by the collision; the honest dispersive
/// evolution adds a vacuum Stark phase on that branch.
pub fn ideal_stage_state<T: Real>(stage: Stage<T>) -> CVector<T> {
    let mut amps = [Cplx::<T>::zero(); 9];
    let r3 = real::<T>(1.0 / 3.0).sqrt();
    let r23 = (real::<T>(2.0) / real::<T>(3.0)).sqrt();
    match stage {
        Stage::FirstCollision { lambda_t } => {
            let ph = Cplx::from_polar(T::one(), -lambda_t);
            amps[pair_index(Level::F, Level::E)] = Cplx::new(r3, T::zero());
            amps[pair_index(Level::G, Level::E)] = -ph.scale(r23 * lambda_t.cos());
            amps[pair_index(Level::E, Level::G)] = ph.scale(r23 * lambda_t.sin()) * Cplx::i();
        }
        Stage::AfterFirstCollision => {
            amps[pair_index(Level::F, Level::E)] = Cplx::new(r3, T::zero());
            amps[pair_index(Level::E, Level::G)] = Cplx::new(r23, T::zero());
        }
        Stage::AfterMidPulse => {
            amps[pair_index(Level::F, Level::F)] = Cplx::new(r3, T::zero());
            amps[pair_index(Level::E, Level::G)] = Cplx::new(r23, T::zero());
        }
        Stage::SecondCollision { lambda_t } => {
            let ph = Cplx::from_polar(T::one(), -lambda_t);
            amps[pair_index(Level::F, Level::F)] = Cplx::new(r3, T::zero());
            amps[pair_index(Level::E, Level::G)] = ph.scale(r23 * lambda_t.cos());
            amps[pair_index(Level::G, Level::E)] = -(ph.scale(r23 * lambda_t.sin()) * Cplx::i());
        }
        Stage::AfterSecondCollision => {
            let ph = Cplx::from_polar(r3, -T::FRAC_PI_4());
            amps[pair_index(Level::F, Level::F)] = Cplx::new(r3, T::zero());
            amps[pair_index(Level::E, Level::G)] = ph;
            amps[pair_index(Level::G, Level::E)] = -(ph * Cplx::i());
        }
        Stage::Target => {
            for level in Level::ALL {
                amps[pair_index(level, level)] = Cplx::new(r3, T::zero());
            }
        }
        Stage::TimingError { delta } => {
            let dpi = delta * T::PI();
            let ph = Cplx::from_polar(r23, dpi);
            amps[pair_index(Level::F, Level::F)] = Cplx::new(r3, T::zero());
            amps[pair_index(Level::E, Level::E)] = ph.scale((T::FRAC_PI_4() - dpi).cos());
            amps[pair_index(Level::G, Level::G)] = ph.scale((T::FRAC_PI_4() - dpi).sin());
        }
    }
    CVector::from_slice(&amps)
}

/// Which engine executes the sequence.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Closed-form bookkeeping with inert spectator levels.
    IdealAlgebra,
    /// Closed-form dispersive evolution (keeps every Stark phase).
    DispersiveAnalytic,
    /// Numerical spectral evolution under the dispersive vacuum Hamiltonian.
    DispersiveNumeric,
    /// Unitary evolution of atoms ⊗ cavity under the exchange coupling,
    /// propagated exactly in the static frame; cavity traced out at the end.
    FullUnitary,
    /// Density-matrix evolution including cavity decay `κ`.
    FullLindblad,
}

impl Backend {
    pub const ALL: [Backend; 5] = [
        Backend::IdealAlgebra,
        Backend::DispersiveAnalytic,
        Backend::DispersiveNumeric,
        Backend::FullUnitary,
        Backend::FullLindblad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::IdealAlgebra => "ideal_algebra",
            Backend::DispersiveAnalytic => "dispersive_analytic",
            Backend::DispersiveNumeric => "dispersive_numeric",
            Backend::FullUnitary => "full_unitary",
            Backend::FullLindblad => "full_lindblad",
        }
    }
}

/// How a nonzero entry-time mismatch `Δ` is modeled.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TimingModel {
    /// Report the closed-form error state directly; its fidelity to the
    /// target follows the law `(5 + 4 cos 2πΔ)/9` exactly.
    ClosedForm,
    /// Evolve atom 2 alone under its vacuum Stark shift for the extra time
    /// `Δ·τ` before the joint sequence. Because atom 2 is still in an
    /// energy eigenstate at that point, this produces only a global phase
    /// and leaves every fidelity unchanged — quantifying that the naive
    /// early-entry picture does not reproduce the closed-form error law.
    Physical,
}

impl TimingModel {
    pub fn name(self) -> &'static str {
        match self {
            TimingModel::ClosedForm => "closed_form",
            TimingModel::Physical => "physical",
        }
    }
}

/// Full configuration of one protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolConfig<T> {
    pub backend: Backend,
    /// Dimensionless phase `λt₁` of the first collision.
    pub lambda_t1: T,
    /// Dimensionless phase `λt₂` of the second collision.
    pub lambda_t2: T,
    /// Entry-time mismatch as a fraction of the exchange period `τ = π/λ`.
    pub timing_delta: T,
    pub timing_model: TimingModel,
    /// Whether to report the fidelity after per-level phase calibration.
    pub calibrate: bool,
    pub params: PhysParams<T>,
    pub ctrl: StepControl<T>,
}

impl<T: Real> ProtocolConfig<T> {
    /// Defaults: `λt₁ = π/2`, `λt₂ = π/4`, no timing error, calibration on.
    pub fn new(backend: Backend, params: PhysParams<T>) -> Self {
        Self {
            backend,
            lambda_t1: T::FRAC_PI_2(),
            lambda_t2: T::FRAC_PI_4(),
            timing_delta: T::zero(),
            timing_model: TimingModel::ClosedForm,
            calibrate: true,
            params,
            ctrl: StepControl::for_rate(params.lambda()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let tau = real::<T>(2.0) * T::PI();
        for (name, v) in [("lambda_t1", self.lambda_t1), ("lambda_t2", self.lambda_t2)] {
            if v < T::zero() || v > tau {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 2π], got {v}"
                )));
            }
        }
        if self.timing_delta < T::zero() || self.timing_delta > real::<T>(0.5) {
            return Err(Error::InvalidConfig(format!(
                "timing_delta must lie in [0, 0.5], got {}",
                self.timing_delta
            )));
        }
        if self.backend == Backend::FullLindblad
            && self.timing_model == TimingModel::ClosedForm
            && self.timing_delta > T::zero()
        {
            return Err(Error::InvalidConfig(
                "the closed-form timing model produces a pure state and cannot be combined \
                 with the full_lindblad backend; use the physical timing model"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Per-level calibration phases, `(f, g, e)` order for each atom.
///
/// Only the sums `atom1[k] + atom2[k]` affect any fidelity, so the chosen
/// assignment puts everything on atom 1.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CalibrationPhases<T> {
    pub atom1: [T; 3],
    pub atom2: [T; 3],
}

/// Final two-atom state of a run.
#[derive(Clone, Debug)]
pub enum FinalState<T> {
    Pure(CVector<T>),
    Mixed(CMatrix<T>),
}

/// A recorded intermediate state (pure 9-dimensional engines only).
#[derive(Clone, Debug)]
pub struct StageRecord<T> {
    pub name: &'static str,
    pub state: CVector<T>,
}

/// Everything a protocol run reports.
#[derive(Clone, Debug)]
pub struct ProtocolResult<T> {
    pub final_atom_state: FinalState<T>,
    /// `|⟨target|ψ⟩|²` (or `⟨target|ρ|target⟩`) against the maximally
    /// entangled target.
    pub fidelity_raw: T,
    /// Fidelity after optimizing per-level phases, when requested.
    pub fidelity_calibrated: Option<T>,
    pub calibration_phases: Option<CalibrationPhases<T>>,
    /// Schmidt coefficients of the final state (descending). For mixed
    /// states these are taken from the dominant eigenvector.
    pub schmidt: [T; 3],
    /// Probability of each two-atom level pair, in basis order `ff..ee`.
    pub populations: Vec<(String, T)>,
    /// Intermediate states, for the pure 9-dimensional engines.
    pub stages: Vec<StageRecord<T>>,
    /// Mean photon number left in the cavity before tracing it out
    /// (full engines only).
    pub photon_population: Option<T>,
    /// `|tr ρ - 1|` of the reduced state (full_lindblad only).
    pub trace_error: Option<T>,
}

/// Stark phase acquired by the excited level of an early atom:
/// `exp(-i λ · Δτ) = exp(-i π Δ)` since `τ = π/λ`.
pub fn early_entry_phase<T: Real>(delta: T) -> Cplx<T> {
    Cplx::from_polar(T::one(), -T::PI() * delta)
}

/// Apply the physical early-entry transform on the 9-dimensional space:
/// the phase [`early_entry_phase`] on every component with atom 2 excited.
pub fn apply_early_entry<T: Real>(psi: &CVector<T>, delta: T) -> CVector<T> {
    let ph = early_entry_phase(delta);
    let mut out = psi.clone();
    for a1 in Level::ALL {
        let k = pair_index(a1, Level::E);
        out[k] *= ph;
    }
    out
}

/// The same transform embedded in the full atom ⊗ atom ⊗ field space.
pub fn early_entry_operator<T: Real>(space: &SpaceSpec, delta: T) -> CMatrix<T> {
    let ph = early_entry_phase(delta);
    let mut single = CMatrix::identity(3);
    single[(Level::E.index(), Level::E.index())] = ph;
    embed_atom_op(space, Atom::Two, &single)
}

/// Align the per-level phases of `psi` with `target` and report the
/// resulting fidelity.
///
/// The optimization is over diagonal phase unitaries `P₁ ⊗ P₂`; because only
/// the diagonal components `⟨kk|ψ⟩` enter the overlap with the diagonal
/// target, the maximum has the closed form `(Σ_k |c_kk|)²/3` for the
/// canonical target. For states with support outside the diagonal pairs the
/// same alignment is applied and the value is a lower bound on what general
/// local unitaries could reach.
pub fn calibrate_local_phases<T: Real>(
    psi: &CVector<T>,
    target: &CVector<T>,
) -> Result<(CalibrationPhases<T>, T)> {
    if psi.dim() != 9 || target.dim() != 9 {
        return Err(Error::DimensionMismatch {
            context: "calibrate_local_phases",
            expected: 9,
            found: psi.dim().max(target.dim()),
        });
    }
    let mut phases = [T::zero(); 3];
    let mut total = T::zero();
    for (k, level) in Level::ALL.iter().enumerate() {
        let c = psi[pair_index(*level, *level)];
        let t = target[pair_index(*level, *level)];
        total += c.norm();
        if c.norm() > T::epsilon() {
            phases[k] = wrap_angle(t.arg() - c.arg());
        }
    }
    if total <= T::epsilon() {
        return Err(Error::DegenerateInput(
            "state has no support on the diagonal level pairs",
        ));
    }
    let calibrated = apply_level_phases(psi, &phases);
    let fid = fidelity(&calibrated, target)?;
    Ok((
        CalibrationPhases {
            atom1: phases,
            atom2: [T::zero(); 3],
        },
        fid,
    ))
}

fn wrap_angle<T: Real>(x: T) -> T {
    let tau = real::<T>(2.0) * T::PI();
    let mut out = x % tau;
    if out > T::PI() {
        out -= tau;
    } else if out < -T::PI() {
        out += tau;
    }
    out
}

/// Apply per-level phases on atom 1 to a 9-dimensional state.
fn apply_level_phases<T: Real>(psi: &CVector<T>, phases: &[T; 3]) -> CVector<T> {
    let mut out = psi.clone();
    for (k, ph) in phases.iter().enumerate() {
        let factor = Cplx::from_polar(T::one(), *ph);
        for a2 in 0..3 {
            out[3 * k + a2] *= factor;
        }
    }
    out
}

/// Phase calibration for a density matrix: coordinate ascent on the
/// compressed 3×3 matrix `M_kl = ⟨kk|ρ|ll⟩`, seeded by its dominant
/// eigenvector. Reduces to [`calibrate_local_phases`] for pure states.
pub fn calibrate_local_phases_mixed<T: Real>(
    rho: &CMatrix<T>,
    target: &CVector<T>,
) -> Result<(CalibrationPhases<T>, T)> {
    if !rho.is_square() || rho.rows() != 9 || target.dim() != 9 {
        return Err(Error::DimensionMismatch {
            context: "calibrate_local_phases_mixed",
            expected: 9,
            found: rho.rows(),
        });
    }
    let diag_idx: Vec<usize> = Level::ALL.iter().map(|&l| pair_index(l, l)).collect();
    let m = CMatrix::from_fn(3, 3, |k, l| rho[(diag_idx[k], diag_idx[l])]);
    if m.trace().norm() <= T::epsilon() {
        return Err(Error::DegenerateInput(
            "density matrix has no support on the diagonal level pairs",
        ));
    }
    let (_, vecs) = crate::linalg::eigh(&m)?;
    let mut z: Vec<Cplx<T>> = (0..3)
        .map(|k| {
            let v = vecs[(k, 2)];
            if v.norm() > T::epsilon() {
                v.scale(T::one() / v.norm())
            } else {
                Cplx::one()
            }
        })
        .collect();
    // Coordinate ascent on F(z) = Σ_kl z_k M_kl z̄_l / 3.
    for _ in 0..32 {
        let mut moved = T::zero();
        for k in 0..3 {
            let mut w = Cplx::<T>::zero();
            for l in 0..3 {
                if l != k {
                    w += m[(k, l)] * z[l].conj();
                }
            }
            if w.norm() > T::epsilon() {
                let new = w.conj().scale(T::one() / w.norm());
                moved = moved.max((new - z[k]).norm());
                z[k] = new;
            }
        }
        if moved < T::epsilon() * real::<T>(16.0) {
            break;
        }
    }
    let mut acc = Cplx::<T>::zero();
    for k in 0..3 {
        for l in 0..3 {
            acc += z[k] * m[(k, l)] * z[l].conj();
        }
    }
    let fid = acc.re / real::<T>(3.0);
    let phases = [z[0].arg(), z[1].arg(), z[2].arg()];
    Ok((
        CalibrationPhases {
            atom1: phases,
            atom2: [T::zero(); 3],
        },
        fid,
    ))
}

/// Which collision engine the pure 9-dimensional paths use.
enum CollisionEngine<T> {
    Ideal,
    Analytic,
    Numeric(SpectralPropagator<T>),
}

impl<T: Real> CollisionEngine<T> {
    fn collide(&self, psi: &CVector<T>, lambda: T, t: T) -> Result<CVector<T>> {
        match self {
            CollisionEngine::Ideal => {
                let mut out = crate::dynamics::evolve_dispersive_analytic(psi, lambda, t)?;
                // Inert spectator bookkeeping: drop the vacuum Stark phase
                // on the single-excitation spectator branches.
                let fe = pair_index(Level::F, Level::E);
                let ef = pair_index(Level::E, Level::F);
                out[fe] = psi[fe];
                out[ef] = psi[ef];
                Ok(out)
            }
            CollisionEngine::Analytic => crate::dynamics::evolve_dispersive_analytic(psi, lambda, t),
            CollisionEngine::Numeric(prop) => Ok(prop.apply(t, psi)),
        }
    }
}

/// Execute the configured protocol run.
pub fn run_protocol<T: Real>(cfg: &ProtocolConfig<T>) -> Result<ProtocolResult<T>> {
    cfg.validate()?;
    match cfg.backend {
        Backend::IdealAlgebra => run_pure(cfg, CollisionEngine::Ideal),
        Backend::DispersiveAnalytic => run_pure(cfg, CollisionEngine::Analytic),
        Backend::DispersiveNumeric => {
            let prop = SpectralPropagator::new(&h_dispersive_vacuum(cfg.params.lambda()))?;
            run_pure(cfg, CollisionEngine::Numeric(prop))
        }
        Backend::FullUnitary => run_full_unitary(cfg),
        Backend::FullLindblad => run_full_lindblad(cfg),
    }
}

fn pulse_on_pair<T: Real>(psi: &CVector<T>, pulse: &PulseSpec<T>) -> CVector<T> {
    let u3 = rotation_unitary(pulse);
    let i3 = CMatrix::identity(3);
    let embedded = match pulse.atom {
        Atom::One => kron(&u3, &i3),
        Atom::Two => kron(&i3, &u3),
    };
    embedded.matvec(psi)
}

fn run_pure<T: Real>(
    cfg: &ProtocolConfig<T>,
    engine: CollisionEngine<T>,
) -> Result<ProtocolResult<T>> {
    let lambda = cfg.params.lambda();
    let t1 = cfg.lambda_t1 / lambda;
    let t2 = cfg.lambda_t2 / lambda;

    let mut stages = Vec::new();
    let mut psi = CVector::basis(9, pair_index(Level::E, Level::E));
    stages.push(StageRecord {
        name: "initial",
        state: psi.clone(),
    });

    for pulse in prep_pulses_atom1::<T>() {
        psi = pulse_on_pair(&psi, &pulse);
    }
    if cfg.timing_model == TimingModel::Physical && cfg.timing_delta > T::zero() {
        psi = apply_early_entry(&psi, cfg.timing_delta);
    }
    stages.push(StageRecord {
        name: "prepared",
        state: psi.clone(),
    });

    psi = engine.collide(&psi, lambda, t1)?;
    stages.push(StageRecord {
        name: "after_first_collision",
        state: psi.clone(),
    });

    psi = pulse_on_pair(&psi, &mid_pulse_atom2());
    stages.push(StageRecord {
        name: "after_mid_pulse",
        state: psi.clone(),
    });

    psi = engine.collide(&psi, lambda, t2)?;
    stages.push(StageRecord {
        name: "after_second_collision",
        state: psi.clone(),
    });

    psi = pulse_on_pair(&psi, &final_pulse_atom2());

    if cfg.timing_model == TimingModel::ClosedForm && cfg.timing_delta > T::zero() {
        // The closed-form error model supersedes the executed final state.
        psi = ideal_stage_state(Stage::TimingError {
            delta: cfg.timing_delta,
        });
    }
    stages.push(StageRecord {
        name: "final",
        state: psi.clone(),
    });

    finish_pure(cfg, psi, stages, None)
}

fn finish_pure<T: Real>(
    cfg: &ProtocolConfig<T>,
    psi: CVector<T>,
    stages: Vec<StageRecord<T>>,
    photon_population: Option<T>,
) -> Result<ProtocolResult<T>> {
    let target = ideal_stage_state::<T>(Stage::Target);
    let fidelity_raw = fidelity(&psi, &target)?;
    let (calibration_phases, fidelity_calibrated) = if cfg.calibrate {
        let (phases, fid) = calibrate_local_phases(&psi, &target)?;
        (Some(phases), Some(fid))
    } else {
        (None, None)
    };
    let schmidt = schmidt_coefficients(&psi)?;
    let populations = pair_labels()
        .iter()
        .map(|&(a1, a2)| (pair_name(a1, a2), psi[pair_index(a1, a2)].norm_sqr()))
        .collect();
    Ok(ProtocolResult {
        final_atom_state: FinalState::Pure(psi),
        fidelity_raw,
        fidelity_calibrated,
        calibration_phases,
        schmidt,
        populations,
        stages,
        photon_population,
        trace_error: None,
    })
}

fn initial_full_state<T: Real>(cfg: &ProtocolConfig<T>, space: &SpaceSpec) -> Result<CVector<T>> {
    let mut psi = basis_state(
        space,
        BasisLabel {
            a1: Level::E,
            a2: Level::E,
            n: 0,
        },
    )?;
    for pulse in prep_pulses_atom1::<T>() {
        psi = embed_atom_op(space, pulse.atom, &rotation_unitary(&pulse)).matvec(&psi);
    }
    if cfg.timing_model == TimingModel::Physical && cfg.timing_delta > T::zero() {
        psi = early_entry_operator(space, cfg.timing_delta).matvec(&psi);
    }
    Ok(psi)
}

fn mean_photon_number<T: Real>(space: &SpaceSpec, weights: impl Fn(usize) -> T) -> T {
    let mut acc = T::zero();
    for (idx, label) in space.labels().enumerate() {
        acc += weights(idx) * T::from_usize(label.n).unwrap();
    }
    acc
}

fn run_full_unitary<T: Real>(cfg: &ProtocolConfig<T>) -> Result<ProtocolResult<T>> {
    let space = cfg.params.space()?;
    let lambda = cfg.params.lambda();
    let t1 = cfg.lambda_t1 / lambda;
    let t2 = cfg.lambda_t2 / lambda;

    let mut psi = initial_full_state(cfg, &space)?;
    let hs = h_static_frame(&space, &cfg.params);
    let prop = SpectralPropagator::new(&hs)?;

    // First collision over [0, t1]: ψ ← R(t1)† e^{-i H_s t1} ψ.
    psi = frame_rotation(&space, &cfg.params, t1)
        .adjoint()
        .matvec(&prop.apply(t1, &psi));
    psi = embed_atom_op(&space, Atom::Two, &rotation_unitary(&mid_pulse_atom2())).matvec(&psi);
    // Second collision over [t1, t1 + t2].
    let t_end = t1 + t2;
    psi = frame_rotation(&space, &cfg.params, t_end)
        .adjoint()
        .matvec(&prop.apply(t2, &frame_rotation(&space, &cfg.params, t1).matvec(&psi)));
    psi = embed_atom_op(&space, Atom::Two, &rotation_unitary(&final_pulse_atom2())).matvec(&psi);

    if cfg.timing_model == TimingModel::ClosedForm && cfg.timing_delta > T::zero() {
        // The closed-form error model supersedes the executed final state.
        let ideal = ideal_stage_state(Stage::TimingError {
            delta: cfg.timing_delta,
        });
        return finish_pure(cfg, ideal, Vec::new(), None);
    }

    let photon = mean_photon_number(&space, |idx| psi[idx].norm_sqr());
    let rho_full = psi.outer(&psi);
    let reduced = partial_trace_space(&rho_full, &space, &[Subsystem::Atom1, Subsystem::Atom2])?;
    finish_mixed(cfg, reduced, Some(photon), false)
}

fn run_full_lindblad<T: Real>(cfg: &ProtocolConfig<T>) -> Result<ProtocolResult<T>> {
    let space = cfg.params.space()?;
    let lambda = cfg.params.lambda();
    let t1 = cfg.lambda_t1 / lambda;
    let t2 = cfg.lambda_t2 / lambda;

    let psi0 = initial_full_state(cfg, &space)?;
    let mut rho = psi0.outer(&psi0);
    let hs = h_static_frame(&space, &cfg.params);
    let ls = collapse_ops(&space, &cfg.params);

    let conj = |rho: &CMatrix<T>, u: &CMatrix<T>| u.matmul(rho).matmul(&u.adjoint());

    rho = evolve_lindblad_split(&hs, &ls, t1, &rho, &cfg.ctrl)?;
    // Pulses act in the interaction picture: undo the frame, pulse, redo it.
    let r1 = frame_rotation(&space, &cfg.params, t1);
    rho = conj(&rho, &r1.adjoint());
    rho = conj(
        &rho,
        &embed_atom_op(&space, Atom::Two, &rotation_unitary(&mid_pulse_atom2())),
    );
    rho = conj(&rho, &r1);
    rho = evolve_lindblad_split(&hs, &ls, t2, &rho, &cfg.ctrl)?;
    let r_end = frame_rotation(&space, &cfg.params, t1 + t2);
    rho = conj(&rho, &r_end.adjoint());
    rho = conj(
        &rho,
        &embed_atom_op(&space, Atom::Two, &rotation_unitary(&final_pulse_atom2())),
    );

    let photon = mean_photon_number(&space, |idx| rho[(idx, idx)].re);
    let reduced = partial_trace_space(&rho, &space, &[Subsystem::Atom1, Subsystem::Atom2])?;
    finish_mixed(cfg, reduced, Some(photon), true)
}

fn finish_mixed<T: Real>(
    cfg: &ProtocolConfig<T>,
    reduced: CMatrix<T>,
    photon_population: Option<T>,
    report_trace: bool,
) -> Result<ProtocolResult<T>> {
    let target = ideal_stage_state::<T>(Stage::Target);
    let fidelity_raw = fidelity_mixed(&reduced, &target)?;
    let (calibration_phases, fidelity_calibrated) = if cfg.calibrate {
        let (phases, fid) = calibrate_local_phases_mixed(&reduced, &target)?;
        (Some(phases), Some(fid))
    } else {
        (None, None)
    };

    // Schmidt data from the dominant eigenvector of the reduced state.
    let (_evals, vecs) = crate::linalg::eigh(&reduced)?;
    let dominant = vecs.column(8).normalized();
    let schmidt = schmidt_coefficients(&dominant)?;

    let populations = pair_labels()
        .iter()
        .map(|&(a1, a2)| {
            let k = pair_index(a1, a2);
            (pair_name(a1, a2), reduced[(k, k)].re)
        })
        .collect();
    let trace_error = if report_trace {
        Some((reduced.trace() - Cplx::one()).norm())
    } else {
        None
    };
    Ok(ProtocolResult {
        final_atom_state: FinalState::Mixed(reduced),
        fidelity_raw,
        fidelity_calibrated,
        calibration_phases,
        schmidt,
        populations,
        stages: Vec::new(),
        photon_population,
        trace_error,
    })
}
