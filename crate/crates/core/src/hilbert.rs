//! The composite Hilbert space of two three-level atoms and one cavity mode.
//!
//! Each atom carries the levels `f`, `g`, `e` in increasing energy order
//! (indices 0, 1, 2); the cavity mode is truncated at a maximum photon
//! number `n_max`. Basis states are ordered atom 1 ⊗ atom 2 ⊗ field, so the
//! flat index of `(a1, a2, n)` is `a1·3·fock_dim + a2·fock_dim + n`.

use num_complex::Complex;
use num_traits::One;

use crate::linalg::{kron_all, CMatrix, CVector};
use crate::{Error, Real, Result};

/// Electronic level of a single atom, ordered by energy.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    F,
    G,
    E,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::F, Level::G, Level::E];

    pub fn index(self) -> usize {
        match self {
            Level::F => 0,
            Level::G => 1,
            Level::E => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Level::F => 'f',
            Level::G => 'g',
            Level::E => 'e',
        }
    }
}

/// Which of the two atoms an operator acts on.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    One,
    Two,
}

/// Label of a product basis state `|a1, a2, n⟩`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BasisLabel {
    pub a1: Level,
    pub a2: Level,
    pub n: usize,
}

/// Tensor structure of the two-atom ⊗ field space.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SpaceSpec {
    fock_dim: usize,
}

impl SpaceSpec {
    /// Space with photon numbers `0..=n_max`. Requires `n_max ≥ 1`.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidConfig(format!(
                "Fock cutoff n_max must be at least 1, got {n_max}"
            )));
        }
        Ok(Self {
            fock_dim: n_max + 1,
        })
    }

    pub fn n_max(&self) -> usize {
        self.fock_dim - 1
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    /// Total dimension `9 · fock_dim`.
    pub fn dim(&self) -> usize {
        9 * self.fock_dim
    }

    /// Factor dimensions in tensor order, for partial traces.
    pub fn dims(&self) -> [usize; 3] {
        [3, 3, self.fock_dim]
    }

    /// Flat index of a basis label.
    pub fn index_of(&self, label: BasisLabel) -> usize {
        (label.a1.index() * 3 + label.a2.index()) * self.fock_dim + label.n
    }

    /// Basis label at a flat index.
    pub fn label_of(&self, index: usize) -> BasisLabel {
        debug_assert!(index < self.dim());
        let n = index % self.fock_dim;
        let pair = index / self.fock_dim;
        BasisLabel {
            a1: Level::ALL[pair / 3],
            a2: Level::ALL[pair % 3],
            n,
        }
    }

    /// All labels in index order.
    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(|i| self.label_of(i))
    }
}

/// Flat index of a two-atom level pair in the 9-dimensional atomic space.
pub fn pair_index(a1: Level, a2: Level) -> usize {
    a1.index() * 3 + a2.index()
}

/// All two-atom level pairs in index order.
pub fn pair_labels() -> [(Level, Level); 9] {
    let mut out = [(Level::F, Level::F); 9];
    let mut k = 0;
    for a1 in Level::ALL {
        for a2 in Level::ALL {
            out[k] = (a1, a2);
            k += 1;
        }
    }
    out
}

/// Two-letter name of a level pair, e.g. `"fe"`.
pub fn pair_name(a1: Level, a2: Level) -> String {
    format!("{}{}", a1.letter(), a2.letter())
}

/// Unit basis vector `|a1, a2, n⟩` on the full space.
pub fn basis_state<T: Real>(space: &SpaceSpec, label: BasisLabel) -> Result<CVector<T>> {
    if label.n > space.n_max() {
        return Err(Error::PhotonOutOfRange {
            n: label.n,
            n_max: space.n_max(),
        });
    }
    Ok(CVector::basis(space.dim(), space.index_of(label)))
}

/// Raising or lowering on the `g ↔ e` transition.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SigmaKind {
    /// `σ₋ = |g⟩⟨e|`
    Minus,
    /// `σ₊ = |e⟩⟨g|`
    Plus,
}

/// Cavity ladder operators on the truncated Fock space.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Annihilate,
    Create,
    Number,
}

/// Single-atom `σ±` on 3 levels; the `f` level is untouched.
pub fn sigma_single<T: Real>(kind: SigmaKind) -> CMatrix<T> {
    let mut m = CMatrix::zeros(3, 3);
    match kind {
        SigmaKind::Minus => m[(Level::G.index(), Level::E.index())] = Complex::one(),
        SigmaKind::Plus => m[(Level::E.index(), Level::G.index())] = Complex::one(),
    }
    m
}

/// Single-atom lowering operator `|lower⟩⟨upper|` for an arbitrary transition.
pub fn lowering_single<T: Real>(lower: Level, upper: Level) -> CMatrix<T> {
    let mut m = CMatrix::zeros(3, 3);
    m[(lower.index(), upper.index())] = Complex::one();
    m
}

/// `σ±` of one atom embedded in the full space.
pub fn sigma<T: Real>(space: &SpaceSpec, atom: Atom, kind: SigmaKind) -> CMatrix<T> {
    embed_atom_op(space, atom, &sigma_single(kind))
}

/// Embed a 3×3 single-atom operator into atom ⊗ atom ⊗ field.
pub fn embed_atom_op<T: Real>(space: &SpaceSpec, atom: Atom, op: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(op.rows(), 3);
    assert_eq!(op.cols(), 3);
    let i3 = CMatrix::identity(3);
    let i_f = CMatrix::identity(space.fock_dim());
    match atom {
        Atom::One => kron_all(&[op, &i3, &i_f]),
        Atom::Two => kron_all(&[&i3, op, &i_f]),
    }
}

/// Embed a field operator into atom ⊗ atom ⊗ field.
pub fn embed_field_op<T: Real>(space: &SpaceSpec, op: &CMatrix<T>) -> CMatrix<T> {
    assert_eq!(op.rows(), space.fock_dim());
    let i9 = CMatrix::identity(9);
    kron_all(&[&i9, op])
}

/// Ladder operator on the bare Fock space, hard-truncated at `n_max`:
/// `a|n⟩ = √n |n-1⟩` and `a†|n_max⟩ = 0`.
pub fn field_single<T: Real>(space: &SpaceSpec, kind: FieldKind) -> CMatrix<T> {
    let f = space.fock_dim();
    let mut m = CMatrix::zeros(f, f);
    match kind {
        FieldKind::Annihilate => {
            for n in 1..f {
                m[(n - 1, n)] = Complex::new(T::from_usize(n).unwrap().sqrt(), T::zero());
            }
        }
        FieldKind::Create => {
            for n in 0..f - 1 {
                m[(n + 1, n)] = Complex::new(T::from_usize(n + 1).unwrap().sqrt(), T::zero());
            }
        }
        FieldKind::Number => {
            for n in 0..f {
                m[(n, n)] = Complex::new(T::from_usize(n).unwrap(), T::zero());
            }
        }
    }
    m
}

/// Field operator embedded in the full space.
pub fn field_op<T: Real>(space: &SpaceSpec, kind: FieldKind) -> CMatrix<T> {
    embed_field_op(space, &field_single(space, kind))
}

/// One tensor factor of the composite space.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subsystem {
    Atom1,
    Atom2,
    Field,
}

impl Subsystem {
    fn factor(self) -> usize {
        match self {
            Subsystem::Atom1 => 0,
            Subsystem::Atom2 => 1,
            Subsystem::Field => 2,
        }
    }
}

/// Partial trace over the composite space, keeping the named subsystems.
/// `keep` must be sorted and non-empty.
pub fn partial_trace_space<T: Real>(
    rho: &CMatrix<T>,
    space: &SpaceSpec,
    keep: &[Subsystem],
) -> Result<CMatrix<T>> {
    let factors: Vec<usize> = keep.iter().map(|s| s.factor()).collect();
    crate::linalg::partial_trace(rho, &space.dims(), &factors)
}

/// Total excitation number `a†a + σ₁₊σ₁₋ + σ₂₊σ₂₋`.
pub fn excitation_number<T: Real>(space: &SpaceSpec) -> CMatrix<T> {
    let num = field_op(space, FieldKind::Number);
    let p1 = sigma(space, Atom::One, SigmaKind::Plus)
        .matmul(&sigma(space, Atom::One, SigmaKind::Minus));
    let p2 = sigma(space, Atom::Two, SigmaKind::Plus)
        .matmul(&sigma(space, Atom::Two, SigmaKind::Minus));
    num.add(&p1).add(&p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn space() -> SpaceSpec {
        SpaceSpec::new(2).unwrap()
    }

    #[test]
    fn index_formula() {
        let s = space();
        let ff0 = BasisLabel {
            a1: Level::F,
            a2: Level::F,
            n: 0,
        };
        assert_eq!(s.index_of(ff0), 0);
        let ee0 = BasisLabel {
            a1: Level::E,
            a2: Level::E,
            n: 0,
        };
        assert_eq!(s.index_of(ee0), 24);
        for i in 0..s.dim() {
            assert_eq!(s.index_of(s.label_of(i)), i);
        }
    }

    #[test]
    fn basis_states_are_orthonormal_and_complete() {
        let s = space();
        let all: Vec<CVector<f64>> = s
            .labels()
            .map(|l| basis_state(&s, l).unwrap())
            .collect();
        assert_eq!(all.len(), s.dim());
        for (i, v) in all.iter().enumerate() {
            for (j, w) in all.iter().enumerate() {
                let ip = v.inner(w);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(ip, C64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn photon_out_of_range_is_rejected() {
        let s = space();
        let label = BasisLabel {
            a1: Level::F,
            a2: Level::F,
            n: 3,
        };
        assert!(matches!(
            basis_state::<f64>(&s, label),
            Err(crate::Error::PhotonOutOfRange { n: 3, n_max: 2 })
        ));
    }

    #[test]
    fn sigma_lowers_the_addressed_atom() {
        let s = space();
        let sm1 = sigma::<f64>(&s, Atom::One, SigmaKind::Minus);
        let eg0 = basis_state(
            &s,
            BasisLabel {
                a1: Level::E,
                a2: Level::G,
                n: 0,
            },
        )
        .unwrap();
        let gg0 = basis_state(
            &s,
            BasisLabel {
                a1: Level::G,
                a2: Level::G,
                n: 0,
            },
        )
        .unwrap();
        assert!(sm1.matvec(&eg0).max_abs_diff(&gg0) == 0.0);
    }

    #[test]
    fn sigma_annihilates_the_f_level() {
        let s = space();
        let sm2 = sigma::<f64>(&s, Atom::Two, SigmaKind::Minus);
        let ef0 = basis_state(
            &s,
            BasisLabel {
                a1: Level::E,
                a2: Level::F,
                n: 0,
            },
        )
        .unwrap();
        assert_eq!(sm2.matvec(&ef0).norm(), 0.0);
    }

    #[test]
    fn excitation_count_on_doubly_excited_state() {
        let s = space();
        for n in 0..=2 {
            let een = basis_state::<f64>(
                &s,
                BasisLabel {
                    a1: Level::E,
                    a2: Level::E,
                    n,
                },
            )
            .unwrap();
            let p1 = sigma(&s, Atom::One, SigmaKind::Plus)
                .matmul(&sigma(&s, Atom::One, SigmaKind::Minus));
            let p2 = sigma(&s, Atom::Two, SigmaKind::Plus)
                .matmul(&sigma(&s, Atom::Two, SigmaKind::Minus));
            let total = p1.add(&p2);
            let expect = een.inner(&total.matvec(&een));
            assert_eq!(expect, C64::new(2.0, 0.0));
        }
    }

    #[test]
    fn field_ops_act_as_truncated_ladders() {
        let s = space();
        let a = field_op::<f64>(&s, FieldKind::Annihilate);
        let ff1 = basis_state(
            &s,
            BasisLabel {
                a1: Level::F,
                a2: Level::F,
                n: 1,
            },
        )
        .unwrap();
        let ff0 = basis_state(
            &s,
            BasisLabel {
                a1: Level::F,
                a2: Level::F,
                n: 0,
            },
        )
        .unwrap();
        assert!(a.matvec(&ff1).max_abs_diff(&ff0) < 1e-15);

        let num = field_op::<f64>(&s, FieldKind::Number);
        let gg2 = basis_state(
            &s,
            BasisLabel {
                a1: Level::G,
                a2: Level::G,
                n: 2,
            },
        )
        .unwrap();
        assert!(num.matvec(&gg2).max_abs_diff(&gg2.scale(C64::new(2.0, 0.0))) < 1e-15);

        // number = a†a on the truncated space (one rounding of √n·√n)
        let adag = field_op::<f64>(&s, FieldKind::Create);
        assert!(adag.matmul(&a).max_abs_diff(&num) < 1e-14);
    }

    #[test]
    fn ladder_commutator_deviates_only_at_the_cutoff() {
        let s = space();
        let a = field_single::<f64>(&s, FieldKind::Annihilate);
        let adag = field_single::<f64>(&s, FieldKind::Create);
        let comm = a.matmul(&adag).sub(&adag.matmul(&a));
        // [a, a†] = 1 on n < n_max; the last diagonal entry is -n_max.
        for n in 0..s.n_max() {
            assert!((comm[(n, n)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(
            (comm[(s.n_max(), s.n_max())] + C64::new(s.n_max() as f64, 0.0)).norm() < 1e-14
        );
    }

    #[test]
    fn operators_on_different_atoms_commute() {
        let s = space();
        for k1 in [SigmaKind::Minus, SigmaKind::Plus] {
            for k2 in [SigmaKind::Minus, SigmaKind::Plus] {
                let a = sigma::<f64>(&s, Atom::One, k1);
                let b = sigma::<f64>(&s, Atom::Two, k2);
                assert_eq!(a.commutator(&b).max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn sigma_plus_minus_is_the_excited_projector() {
        let s = space();
        let p = sigma::<f64>(&s, Atom::One, SigmaKind::Plus)
            .matmul(&sigma(&s, Atom::One, SigmaKind::Minus));
        assert_eq!(p.hermiticity_error(), 0.0);
        assert_eq!(p.matmul(&p).max_abs_diff(&p), 0.0);
        for label in s.labels() {
            let v = basis_state::<f64>(&s, label).unwrap();
            let expect = if label.a1 == Level::E { 1.0 } else { 0.0 };
            assert_eq!(v.inner(&p.matvec(&v)), C64::new(expect, 0.0));
        }
    }

    #[test]
    fn excitation_number_has_integer_spectrum() {
        let s = space();
        let n_exc = excitation_number::<f64>(&s);
        assert_eq!(n_exc.hermiticity_error(), 0.0);
        let (w, _) = crate::linalg::eigh(&n_exc).unwrap();
        for x in w {
            assert!((x - x.round()).abs() < 1e-12);
            assert!(x > -1e-12);
        }
    }

    #[test]
    fn space_requires_at_least_one_photon() {
        assert!(SpaceSpec::new(0).is_err());
        assert!(SpaceSpec::new(1).is_ok());
    }
}
