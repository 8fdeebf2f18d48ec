//! Hamiltonian and collapse-operator builders.
//!
//! Frequencies are angular (rad/s) throughout; times are seconds. Conversion
//! from `/2π` values in Hz happens at the configuration boundary, never here.
//!
//! Three descriptions of the same physics are provided:
//!
//! - [`h_interaction_picture`]: the explicitly time-dependent exchange
//!   coupling `g[e^{-iδ_eg t} a†(σ₁₋+σ₂₋) + h.c.]`, optionally with a weak
//!   `f ↔ g` leakage channel detuned by `δ_gf = δ_eg + δ_det`.
//! - [`h_static_frame`]: a time-independent equivalent, related to the
//!   interaction picture by the diagonal frame rotation [`frame_rotation`].
//! - [`h_dispersive_full`] / [`h_dispersive_vacuum`]: the second-order
//!   effective Hamiltonian valid for `δ_eg ≫ g`, on the full space and
//!   restricted to the photon vacuum respectively.

use num_complex::Complex;

use crate::hilbert::{
    embed_atom_op, field_op, lowering_single, sigma, sigma_single, Atom, FieldKind,
    Level, SigmaKind, SpaceSpec,
};
use crate::linalg::{kron, CMatrix};
use crate::{real, Error, Real, Result};

/// Physical parameters of the atom-cavity system.
///
/// `kappa` is a decay rate in 1/s (the inverse photon storage time), not an
/// angular frequency.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PhysParams<T> {
    /// Atom-cavity coupling strength (rad/s).
    pub g: T,
    /// Detuning of the cavity from the `g ↔ e` transition (rad/s).
    pub delta_eg: T,
    /// Frequency difference between the `g ↔ e` and `f ↔ g` transitions
    /// (rad/s); sets the leakage detuning `δ_gf = δ_eg + δ_det`.
    pub delta_det: T,
    /// Cavity decay rate (1/s); 0 disables dissipation.
    pub kappa: T,
    /// Coupling of the cavity to the `f ↔ g` transition (rad/s); 0 disables
    /// the leakage channel.
    pub g_f: T,
    /// Fock-space dimension `n_max + 1`.
    pub fock_dim: usize,
}

impl<T: Real> PhysParams<T> {
    /// Parameters with the given coupling and detuning and all optional
    /// channels disabled.
    pub fn new(g: T, delta_eg: T) -> Self {
        Self {
            g,
            delta_eg,
            delta_det: real::<T>(std::f64::consts::TAU) * real::<T>(3.2e9),
            kappa: T::zero(),
            g_f: T::zero(),
            fock_dim: 5,
        }
    }

    /// Reference experimental operating point: `g/2π = 25 kHz`,
    /// `δ_eg = 10 g`, `δ_det/2π = 3.2 GHz`, no decay, no leakage.
    pub fn reference() -> Self {
        let g = real::<T>(std::f64::consts::TAU * 25e3);
        Self::new(g, real::<T>(10.0) * g)
    }

    // Negated comparisons are deliberate: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.g > T::zero()) {
            return Err(Error::InvalidConfig("coupling g must be positive".into()));
        }
        if !(self.delta_eg > T::zero()) {
            return Err(Error::InvalidConfig(
                "detuning delta_eg must be positive".into(),
            ));
        }
        if self.kappa < T::zero() {
            return Err(Error::InvalidConfig(
                "decay rate kappa must be non-negative".into(),
            ));
        }
        if self.g_f < T::zero() {
            return Err(Error::InvalidConfig(
                "leakage coupling g_f must be non-negative".into(),
            ));
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "fock_dim must be at least 2, got {}",
                self.fock_dim
            )));
        }
        Ok(())
    }

    /// Effective collision rate `λ = g²/δ_eg` (rad/s).
    pub fn lambda(&self) -> T {
        self.g * self.g / self.delta_eg
    }

    /// Whether the dispersive approximation is considered valid
    /// (`δ_eg ≥ 5 g`).
    pub fn is_dispersive(&self) -> bool {
        self.delta_eg >= real::<T>(5.0) * self.g
    }

    /// Leakage detuning `δ_gf = δ_eg + δ_det`.
    pub fn delta_gf(&self) -> T {
        self.delta_eg + self.delta_det
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        if self.fock_dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "fock_dim must be at least 2, got {}",
                self.fock_dim
            )));
        }
        SpaceSpec::new(self.fock_dim - 1)
    }
}

/// Which Hamiltonian a builder call refers to.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum HamiltonianKind<T> {
    /// Time-dependent interaction-picture coupling, sampled at time `t`.
    InteractionPicture { t: T },
    /// Time-independent rotated-frame equivalent.
    StaticFrame,
    /// Dispersive effective Hamiltonian on the full atom ⊗ field space.
    DispersiveFull,
    /// Dispersive effective Hamiltonian restricted to the photon vacuum
    /// (9-dimensional atomic space).
    DispersiveVacuum,
}

/// Build the requested Hamiltonian.
pub fn build_hamiltonian<T: Real>(
    kind: HamiltonianKind<T>,
    space: &SpaceSpec,
    params: &PhysParams<T>,
) -> CMatrix<T> {
    match kind {
        HamiltonianKind::InteractionPicture { t } => h_interaction_picture(space, params, t),
        HamiltonianKind::StaticFrame => h_static_frame(space, params),
        HamiltonianKind::DispersiveFull => h_dispersive_full(space, params),
        HamiltonianKind::DispersiveVacuum => h_dispersive_vacuum(params.lambda()),
    }
}

/// Precomputed pieces of the interaction-picture Hamiltonian, for repeated
/// sampling by time steppers.
pub struct InteractionHamiltonian<T> {
    /// `a† (σ₁₋ + σ₂₋)` on the full space.
    exchange: CMatrix<T>,
    /// `a† (|f₁⟩⟨g₁| + |f₂⟩⟨g₂|)` on the full space, when leakage is enabled.
    leakage: Option<CMatrix<T>>,
    g: T,
    delta_eg: T,
    g_f: T,
    delta_gf: T,
}

impl<T: Real> InteractionHamiltonian<T> {
    pub fn new(space: &SpaceSpec, params: &PhysParams<T>) -> Self {
        let adag = field_op(space, FieldKind::Create);
        let s_minus = sigma(space, Atom::One, SigmaKind::Minus)
            .add(&sigma(space, Atom::Two, SigmaKind::Minus));
        let exchange = adag.matmul(&s_minus);
        let leakage = if params.g_f > T::zero() {
            let f_minus = embed_atom_op(space, Atom::One, &lowering_single(Level::F, Level::G))
                .add(&embed_atom_op(
                    space,
                    Atom::Two,
                    &lowering_single(Level::F, Level::G),
                ));
            Some(adag.matmul(&f_minus))
        } else {
            None
        };
        Self {
            exchange,
            leakage,
            g: params.g,
            delta_eg: params.delta_eg,
            g_f: params.g_f,
            delta_gf: params.delta_gf(),
        }
    }

    /// Sample the Hamiltonian at time `t` (seconds). Hermitian by
    /// construction.
    pub fn at(&self, t: T) -> CMatrix<T> {
        let drive = self
            .exchange
            .scale(Complex::from_polar(self.g, -self.delta_eg * t));
        let mut h = drive.add(&drive.adjoint());
        if let Some(leak) = &self.leakage {
            let lk = leak.scale(Complex::from_polar(self.g_f, -self.delta_gf * t));
            h = h.add(&lk).add(&lk.adjoint());
        }
        h
    }
}

/// Interaction-picture coupling at time `t`.
pub fn h_interaction_picture<T: Real>(
    space: &SpaceSpec,
    params: &PhysParams<T>,
    t: T,
) -> CMatrix<T> {
    InteractionHamiltonian::new(space, params).at(t)
}

/// Frame constant of the static frame: the photon-number rotation rate
/// that absorbs the drive phase. Evolution under the interaction picture
/// from `t0` to `t1` equals `R(t1)† · exp(-i H_s (t1-t0)) · R(t0)` with
/// `R(t) = ` [`frame_rotation`]`(t)`.
pub fn frame_delta<T: Real>(params: &PhysParams<T>) -> T {
    -params.delta_eg
}

/// Diagonal generator of the frame rotation.
///
/// With leakage disabled this is `Δ_f a†a`; with leakage enabled an
/// `f`-level shift `-δ_det (P_f1 + P_f2)` is added so that both couplings
/// become static in the rotated frame.
pub fn frame_generator<T: Real>(space: &SpaceSpec, params: &PhysParams<T>) -> CMatrix<T> {
    let mut gen = field_op::<T>(space, FieldKind::Number).scale(Complex::new(
        frame_delta(params),
        T::zero(),
    ));
    if params.g_f > T::zero() {
        let pf = |atom| {
            let mut p = CMatrix::zeros(3, 3);
            p[(Level::F.index(), Level::F.index())] = Complex::new(T::one(), T::zero());
            embed_atom_op(space, atom, &p)
        };
        let shift = pf(Atom::One).add(&pf(Atom::Two)).scale(Complex::new(
            -params.delta_det,
            T::zero(),
        ));
        gen = gen.add(&shift);
    }
    gen
}

/// Frame rotation `R(t) = exp(-i G t)` with `G = ` [`frame_generator`].
/// Exact, since the generator is diagonal.
pub fn frame_rotation<T: Real>(space: &SpaceSpec, params: &PhysParams<T>, t: T) -> CMatrix<T> {
    let gen = frame_generator(space, params);
    CMatrix::from_fn(space.dim(), space.dim(), |i, j| {
        if i == j {
            Complex::from_polar(T::one(), -gen[(i, i)].re * t)
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Time-independent Hamiltonian in the rotated frame:
/// `H_s = Δ_f a†a + g (a† S₋ + a S₊)`, extended by the leakage coupling and
/// its frame shift when `g_f > 0`. Commutes exactly with the total
/// excitation number when leakage is disabled.
pub fn h_static_frame<T: Real>(space: &SpaceSpec, params: &PhysParams<T>) -> CMatrix<T> {
    let adag = field_op(space, FieldKind::Create);
    let s_minus =
        sigma(space, Atom::One, SigmaKind::Minus).add(&sigma(space, Atom::Two, SigmaKind::Minus));
    let drive = adag
        .matmul(&s_minus)
        .scale(Complex::new(params.g, T::zero()));
    let mut h = frame_generator(space, params)
        .add(&drive)
        .add(&drive.adjoint());
    if params.g_f > T::zero() {
        let f_minus = embed_atom_op(space, Atom::One, &lowering_single(Level::F, Level::G)).add(
            &embed_atom_op(space, Atom::Two, &lowering_single(Level::F, Level::G)),
        );
        let leak = adag
            .matmul(&f_minus)
            .scale(Complex::new(params.g_f, T::zero()));
        h = h.add(&leak).add(&leak.adjoint());
    }
    h
}

/// Dispersive effective Hamiltonian on the full space:
/// `λ Σ_{i,j} (σ_{i+} σ_{j-} a a† - σ_{i-} σ_{j+} a† a)`, with the operator
/// ordering kept exactly as written (including the single-atom Stark terms
/// `i = j`). Block-diagonal in photon number.
pub fn h_dispersive_full<T: Real>(space: &SpaceSpec, params: &PhysParams<T>) -> CMatrix<T> {
    let lam = Complex::new(params.lambda(), T::zero());
    let a = field_op(space, FieldKind::Annihilate);
    let adag = field_op(space, FieldKind::Create);
    let a_adag = a.matmul(&adag);
    let adag_a = adag.matmul(&a);
    let sp = [
        sigma(space, Atom::One, SigmaKind::Plus),
        sigma(space, Atom::Two, SigmaKind::Plus),
    ];
    let sm = [
        sigma(space, Atom::One, SigmaKind::Minus),
        sigma(space, Atom::Two, SigmaKind::Minus),
    ];
    let mut h = CMatrix::zeros(space.dim(), space.dim());
    for i in 0..2 {
        for j in 0..2 {
            let up = sp[i].matmul(&sm[j]).matmul(&a_adag);
            let down = sm[i].matmul(&sp[j]).matmul(&adag_a);
            h = h.add(&up.sub(&down).scale(lam));
        }
    }
    h
}

/// Dispersive Hamiltonian in the photon vacuum, on the 9-dimensional
/// two-atom space:
/// `λ (σ₁₊σ₁₋ + σ₂₊σ₂₋ + σ₁₊σ₂₋ + σ₂₊σ₁₋)`.
///
/// The first two terms are the vacuum Stark shifts of each excited atom; the
/// cross terms exchange the excitation between the atoms. The spectrum is
/// `{0 ×5, λ ×2, 2λ ×2}`.
pub fn h_dispersive_vacuum<T: Real>(lambda: T) -> CMatrix<T> {
    let i3 = CMatrix::identity(3);
    let s1p = kron(&sigma_single::<T>(SigmaKind::Plus), &i3);
    let s1m = kron(&sigma_single::<T>(SigmaKind::Minus), &i3);
    let s2p = kron(&i3, &sigma_single::<T>(SigmaKind::Plus));
    let s2m = kron(&i3, &sigma_single::<T>(SigmaKind::Minus));
    s1p.matmul(&s1m)
        .add(&s2p.matmul(&s2m))
        .add(&s1p.matmul(&s2m))
        .add(&s2p.matmul(&s1m))
        .scale(Complex::new(lambda, T::zero()))
}

/// Collapse operators for the Lindblad equation: `[√κ a]` when `κ > 0`,
/// empty otherwise.
pub fn collapse_ops<T: Real>(space: &SpaceSpec, params: &PhysParams<T>) -> Vec<CMatrix<T>> {
    if params.kappa > T::zero() {
        vec![field_op(space, FieldKind::Annihilate)
            .scale(Complex::new(params.kappa.sqrt(), T::zero()))]
    } else {
        Vec::new()
    }
}
