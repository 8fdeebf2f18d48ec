//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for the spaces this crate actually builds
//! (45-dimensional at the default Fock cutoff), so the storage is plain
//! row-major `Vec<Complex<T>>` and the Hermitian eigensolver is a cyclic
//! Jacobi iteration. No attempt is made at sparse storage or large-scale
//! performance.

use num_traits::{One, Zero};

use crate::{real, Cplx, Error, Real, Result};

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

/// Dense complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector<T> {
    data: Vec<Cplx<T>>,
}

impl<T: Real> CMatrix<T> {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Cplx::zero(); rows * cols],
        }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cplx::one();
        }
        m
    }

    /// Build a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from complex entries.
    pub fn from_diag(diag: &[Cplx<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Cplx<T>] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Matrix trace.
    pub fn trace(&self) -> Cplx<T> {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Infinity norm (largest absolute row sum).
    pub fn norm_inf(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)].norm();
            }
            worst = worst.max(acc);
        }
        worst
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Largest entrywise deviation from another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Reject matrices that are not Hermitian within `HERM_TOL`, scaled by
    /// the matrix magnitude so that rad/s-sized Hamiltonians are judged
    /// relative to their entries.
    pub fn check_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                context: "hermiticity check",
                expected: self.rows,
                found: self.cols,
            });
        }
        let scale = T::one().max(self.max_abs());
        let tol = T::HERM_TOL * scale;
        let dev = self.hermiticity_error();
        if dev > tol {
            return Err(Error::NonHermitianInput {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
                tolerance: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik.is_zero() {
                    continue;
                }
                let lhs_row = i * out.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += aik * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &CVector<T>) -> CVector<T> {
        assert_eq!(self.cols, v.dim(), "matvec shape mismatch");
        let mut out = CVector::zeros(self.rows);
        for i in 0..self.rows {
            let row = i * self.cols;
            let mut acc = Cplx::zero();
            for j in 0..self.cols {
                acc += self.data[row + j] * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    /// Entrywise scaling.
    pub fn scale(&self, factor: Cplx<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> CVector<T> {
        CVector {
            data: (0..self.rows).map(|i| self[(i, j)]).collect(),
        }
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Cplx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> CVector<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Self {
            data: vec![Cplx::zero(); dim],
        }
    }

    /// Computational basis vector with a single 1 at `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut v = Self::zeros(dim);
        v.data[index] = Cplx::one();
        v
    }

    pub fn from_slice(data: &[Cplx<T>]) -> Self {
        assert!(!data.is_empty());
        Self {
            data: data.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Cplx<T>] {
        &self.data
    }

    /// Euclidean norm.
    pub fn norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Inner product `⟨self|other⟩` (conjugate-linear in `self`).
    pub fn inner(&self, other: &Self) -> Cplx<T> {
        assert_eq!(self.dim(), other.dim(), "inner product shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: Cplx<T>) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > T::zero(), "cannot normalize the zero vector");
        self.scale(Cplx::new(T::one() / n, T::zero()))
    }

    /// Rank-one outer product `|self⟩⟨other|`.
    pub fn outer(&self, other: &Self) -> CMatrix<T> {
        CMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.data[i] * other.data[j].conj()
        })
    }
}

impl<T: Real> std::ops::Index<usize> for CVector<T> {
    type Output = Cplx<T>;
    fn index(&self, i: usize) -> &Cplx<T> {
        &self.data[i]
    }
}

impl<T: Real> std::ops::IndexMut<usize> for CVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut Cplx<T> {
        &mut self.data[i]
    }
}

/// Kronecker product `A ⊗ B`.
///
/// `(A ⊗ B)[i·rB + k, j·cB + l] = A[i, j] · B[k, l]`.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij.is_zero() {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<T: Real>(factors: &[&CMatrix<T>]) -> CMatrix<T> {
    assert!(!factors.is_empty());
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and a unitary matrix whose columns
/// are the matching eigenvectors, so that `H · V = V · diag(w)`. No phase
/// convention is imposed on the eigenvectors, and for degenerate eigenvalues
/// any orthonormal basis of the eigenspace may be returned.
pub fn eigh<T: Real>(h: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    h.check_hermitian()?;
    let n = h.rows;
    // Work on the explicitly Hermitized copy so the diagonal is exactly real.
    let mut m = CMatrix::from_fn(n, n, |i, j| {
        let avg = (h[(i, j)] + h[(j, i)].conj()).scale(real::<T>(0.5));
        if i == j {
            Cplx::new(avg.re, T::zero())
        } else {
            avg
        }
    });
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius().max(T::min_positive_value());
    let target = scale * T::epsilon() * real::<T>(n as f64);

    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        if off_norm(&m) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&a, &b| evals[a].partial_cmp(&evals[b]).expect("NaN eigenvalue"));

    let w: Vec<T> = order.iter().map(|&i| evals[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((w, vecs))
}

fn off_norm<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.rows;
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One complex Jacobi rotation zeroing the (p, q) entry of `m`, accumulated
/// into `v`.
fn jacobi_rotate<T: Real>(m: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let abs_apq = apq.norm();
    if abs_apq <= T::min_positive_value() {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Phase that makes the 2x2 block real, then a standard real rotation.
    let phase = apq.scale(T::one() / abs_apq);
    let tau = (aqq - app) / (real::<T>(2.0) * abs_apq);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    // Combined 2x2 unitary J = [[c, s], [-s·e^{-iθ}, c·e^{-iθ}]] with
    // e^{iθ} = phase; update is m ← J† m J, v ← v J.
    let jpp = Cplx::new(c, T::zero());
    let jpq = Cplx::new(s, T::zero());
    let jqp = phase.conj().scale(-s);
    let jqq = phase.conj().scale(c);

    let n = m.rows;
    // Column update: m ← m J.
    for i in 0..n {
        let mip = m[(i, p)];
        let miq = m[(i, q)];
        m[(i, p)] = mip * jpp + miq * jqp;
        m[(i, q)] = mip * jpq + miq * jqq;
    }
    // Row update: m ← J† m.
    for j in 0..n {
        let mpj = m[(p, j)];
        let mqj = m[(q, j)];
        m[(p, j)] = jpp.conj() * mpj + jqp.conj() * mqj;
        m[(q, j)] = jpq.conj() * mpj + jqq.conj() * mqj;
    }
    // The rotation annihilates these analytically; pin them to keep the
    // iteration strictly Hermitian.
    m[(p, q)] = Cplx::zero();
    m[(q, p)] = Cplx::zero();
    let dpp = m[(p, p)].re;
    let dqq = m[(q, q)].re;
    m[(p, p)] = Cplx::new(dpp, T::zero());
    m[(q, q)] = Cplx::new(dqq, T::zero());

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
}

/// Propagator `exp(-i H t)` of a Hermitian generator, computed spectrally.
///
/// `t` is in seconds when `H` is in rad/s; the result is unitary to the
/// accuracy of the eigendecomposition.
pub fn matexp_hermitian<T: Real>(h: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
    let (w, v) = eigh(h)?;
    let n = h.rows;
    // U = V e^{-i w t} V†
    let mut scaled = v.clone();
    for (j, wj) in w.iter().enumerate() {
        let ph = Cplx::from_polar(T::one(), -*wj * t);
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    Ok(scaled.matmul(&v.adjoint()))
}

/// Partial trace over an arbitrary tensor factorization.
///
/// `dims` lists the factor dimensions in tensor order (leftmost factor is the
/// most significant index) and `keep` selects, in strictly increasing order,
/// the factors retained in the output. The input must be square with
/// dimension `prod(dims)`. Linear and trace-preserving by construction.
pub fn partial_trace<T: Real>(
    rho: &CMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<CMatrix<T>> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows != total {
        return Err(Error::DimensionMismatch {
            context: "partial trace input",
            expected: total,
            found: rho.rows,
        });
    }
    if keep.is_empty()
        || keep.windows(2).any(|w| w[0] >= w[1])
        || keep.iter().any(|&f| f >= dims.len())
    {
        return Err(Error::DimensionMismatch {
            context: "partial trace kept factors",
            expected: dims.len(),
            found: keep.len(),
        });
    }

    let mut strides = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();

    let kept_offsets = factor_offsets(dims, &strides, keep);
    let traced_offsets = factor_offsets(dims, &strides, &traced);

    let dk = kept_offsets.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (r, &ro) in kept_offsets.iter().enumerate() {
        for (c, &co) in kept_offsets.iter().enumerate() {
            let mut acc = Cplx::zero();
            for &to in &traced_offsets {
                acc += rho[(ro + to, co + to)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Flat-index offsets of every multi-index over the chosen factors.
fn factor_offsets(dims: &[usize], strides: &[usize], factors: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(offsets.len() * dims[f]);
        for &base in &offsets {
            for k in 0..dims[f] {
                next.push(base + k * strides[f]);
            }
        }
        offsets = next;
    }
    offsets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_hermitian, random_state};
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = CMatrix::<f64>::identity(2);
        let i3 = CMatrix::<f64>::identity(3);
        let k = kron(&i2, &i3);
        assert_eq!(k.max_abs_diff(&CMatrix::identity(6)), 0.0);
    }

    #[test]
    fn kron_diag_with_nilpotent() {
        let a = CMatrix::from_diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let mut b = CMatrix::<f64>::zeros(2, 2);
        b[(0, 1)] = c(1.0, 0.0);
        let k = kron(&a, &b);
        let mut expect = CMatrix::<f64>::zeros(4, 4);
        expect[(0, 1)] = c(1.0, 0.0);
        expect[(2, 3)] = c(2.0, 0.0);
        assert_eq!(k.max_abs_diff(&expect), 0.0);
    }

    #[test]
    fn kron_matches_index_formula() {
        // Lowering operator on 3 levels tensored with a Fock ladder: check
        // every entry against the direct double-loop expansion.
        let mut sm = CMatrix::<f64>::zeros(3, 3);
        sm[(1, 2)] = c(1.0, 0.0);
        let mut a = CMatrix::<f64>::zeros(3, 3);
        for n in 1..3usize {
            a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
        }
        let k = kron(&sm, &a);
        for i in 0..3 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..3 {
                        let expect = sm[(i, j)] * a[(p, q)];
                        assert_eq!(k[(3 * i + p, 3 * j + q)], expect);
                    }
                }
            }
        }
    }

    #[test]
    fn matexp_of_zero_is_identity() {
        let h = CMatrix::<f64>::zeros(4, 4);
        let u = matexp_hermitian(&h, 0.7).unwrap();
        assert!(u.max_abs_diff(&CMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn matexp_diagonal_phases() {
        let h = CMatrix::from_diag(&[c(1.0, 0.0), c(-2.0, 0.0), c(0.5, 0.0)]);
        let t = 0.37;
        let u = matexp_hermitian(&h, t).unwrap();
        for (i, w) in [1.0, -2.0, 0.5].iter().enumerate() {
            let expect = C64::from_polar(1.0, -w * t);
            assert!((u[(i, i)] - expect).norm() < 1e-12);
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(u[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    /// Tenth-order Taylor series of exp(-iHt), used as an independent check.
    fn taylor_exp(h: &CMatrix<f64>, t: f64, order: usize) -> CMatrix<f64> {
        let n = h.rows();
        let mut acc = CMatrix::<f64>::identity(n);
        let mut term = CMatrix::<f64>::identity(n);
        for k in 1..=order {
            term = term.matmul(h).scale(c(0.0, -t / k as f64));
            acc = acc.add(&term);
        }
        acc
    }

    #[test]
    fn matexp_exchange_block_matches_taylor() {
        // λ(I + X) on two dimensions: the closed form is
        // e^{-iλt}[cos(λt)·I - i sin(λt)·X].
        let lam = 0.9;
        let mut h = CMatrix::<f64>::zeros(2, 2);
        h[(0, 0)] = c(lam, 0.0);
        h[(1, 1)] = c(lam, 0.0);
        h[(0, 1)] = c(lam, 0.0);
        h[(1, 0)] = c(lam, 0.0);
        let t = 0.6;
        let u = matexp_hermitian(&h, t).unwrap();

        // Remainder of the 10th-order series is ~‖Ht‖¹¹/11! ≈ 6e-8 here.
        let taylor = taylor_exp(&h, t, 10);
        assert!(u.max_abs_diff(&taylor) < 2e-7);

        let ph = C64::from_polar(1.0, -lam * t);
        let cos = c((lam * t).cos(), 0.0);
        let isin = c(0.0, (lam * t).sin());
        assert!((u[(0, 0)] - ph * cos).norm() < 1e-12);
        assert!((u[(0, 1)] + ph * isin).norm() < 1e-12);
    }

    #[test]
    fn matexp_rejects_non_hermitian() {
        let mut h = CMatrix::<f64>::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        match matexp_hermitian(&h, 1.0) {
            Err(Error::NonHermitianInput { .. }) => {}
            other => panic!("expected NonHermitianInput, got {other:?}"),
        }
    }

    #[test]
    fn eigh_sorts_a_permuted_diagonal() {
        let h = CMatrix::from_diag(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let (w, v) = eigh(&h).unwrap();
        assert_eq!(w, vec![1.0, 2.0, 3.0]);
        // Eigenvectors are permutation columns up to phase.
        for (j, &row) in [1usize, 2, 0].iter().enumerate() {
            assert!((v[(row, j)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_exchange_block() {
        // Hand diagonalization: eigenvalues {0, 2λ}, eigenvectors (|01⟩ ∓ |10⟩)/√2.
        let lam = 1.3;
        let mut h = CMatrix::<f64>::zeros(2, 2);
        h[(0, 0)] = c(lam, 0.0);
        h[(1, 1)] = c(lam, 0.0);
        h[(0, 1)] = c(lam, 0.0);
        h[(1, 0)] = c(lam, 0.0);
        let (w, v) = eigh(&h).unwrap();
        assert!((w[0] - 0.0).abs() < 1e-12);
        assert!((w[1] - 2.0 * lam).abs() < 1e-12);
        // Ground vector is the singlet up to phase: components equal magnitude,
        // opposite sign.
        let g = v.column(0);
        assert!((g[0].norm() - (0.5f64).sqrt()).abs() < 1e-10);
        assert!((g[0] + g[1]).norm() < 1e-10);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let h = random_hermitian(&mut rng, 9);
            let (w, v) = eigh(&h).unwrap();
            // H = V diag(w) V†
            let d = CMatrix::from_diag(&w.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
            let rebuilt = v.matmul(&d).matmul(&v.adjoint());
            assert!(rebuilt.max_abs_diff(&h) < 1e-10);
            // V unitary
            let vv = v.adjoint().matmul(&v);
            assert!(vv.max_abs_diff(&CMatrix::identity(9)) < 1e-10);
            // ascending
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_state(&mut rng, 9);
        let rho_a = a.outer(&a);
        let vac = CVector::<f64>::basis(3, 0);
        let rho = kron(&rho_a, &vac.outer(&vac));
        let reduced = partial_trace(&rho, &[3, 3, 3], &[0, 1]).unwrap();
        assert!(reduced.max_abs_diff(&rho_a) < 1e-14);
    }

    #[test]
    fn partial_trace_of_maximally_entangled_qutrits() {
        let mut psi = CVector::<f64>::zeros(9);
        let w = c(1.0 / 3.0f64.sqrt(), 0.0);
        for k in 0..3 {
            psi[4 * k] = w; // |00⟩ + |11⟩ + |22⟩
        }
        let rho = psi.outer(&psi);
        let reduced = partial_trace(&rho, &[3, 3], &[0]).unwrap();
        let expect = CMatrix::<f64>::identity(3).scale(c(1.0 / 3.0, 0.0));
        assert!(reduced.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn partial_trace_matches_gram_matrix_oracle() {
        // For a random pure tripartite state, the reduced matrix on factor 0
        // must equal the Gram matrix of the amplitude rows.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dims = [3usize, 3, 4];
        let total: usize = dims.iter().product();
        let psi = random_state(&mut rng, total);
        let rho = psi.outer(&psi);
        let reduced = partial_trace(&rho, &dims, &[0]).unwrap();

        let block = dims[1] * dims[2];
        let gram = CMatrix::from_fn(3, 3, |i, j| {
            (0..block)
                .map(|k| psi[i * block + k] * psi[j * block + k].conj())
                .sum()
        });
        assert!(reduced.max_abs_diff(&gram) < 1e-12);

        let (ev_red, _) = eigh(&reduced).unwrap();
        let (ev_gram, _) = eigh(&gram).unwrap();
        for (a, b) in ev_red.iter().zip(&ev_gram) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = CMatrix::<f64>::identity(6);
        assert!(matches!(
            partial_trace(&rho, &[3, 3], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matexp_f32_smoke() {
        let mut h = CMatrix::<f32>::zeros(2, 2);
        h[(0, 1)] = Cplx::new(0.5f32, 0.0);
        h[(1, 0)] = Cplx::new(0.5f32, 0.0);
        let u = matexp_hermitian(&h, 1.0f32).unwrap();
        let uu = u.adjoint().matmul(&u);
        assert!(uu.max_abs_diff(&CMatrix::identity(2)) < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn matexp_is_unitary_and_grouplike(seed in 0u64..1000, t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(&mut rng, 5);
            let u1 = matexp_hermitian(&h, t1).unwrap();
            let uu = u1.adjoint().matmul(&u1);
            prop_assert!(uu.max_abs_diff(&CMatrix::identity(5)) < 1e-10);

            let u2 = matexp_hermitian(&h, t2).unwrap();
            let u12 = matexp_hermitian(&h, t1 + t2).unwrap();
            prop_assert!(u1.matmul(&u2).max_abs_diff(&u12) < 1e-9);
        }

        #[test]
        fn kron_is_associative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, 2);
            let b = random_hermitian(&mut rng, 3);
            let d = random_hermitian(&mut rng, 2);
            let left = kron(&kron(&a, &b), &d);
            let right = kron(&a, &kron(&b, &d));
            // Entrywise equal up to one complex-multiplication rounding.
            prop_assert!(left.max_abs_diff(&right) < 1e-15);
        }

        #[test]
        fn partial_trace_is_linear_and_trace_preserving(seed in 0u64..1000, alpha in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = [3usize, 3, 2];
            let total: usize = dims.iter().product();
            let x = random_hermitian(&mut rng, total);
            let y = random_hermitian(&mut rng, total);

            let combined = x.scale(c(alpha, 0.0)).add(&y);
            let lhs = partial_trace(&combined, &dims, &[0, 1]).unwrap();
            let rhs = partial_trace(&x, &dims, &[0, 1]).unwrap()
                .scale(c(alpha, 0.0))
                .add(&partial_trace(&y, &dims, &[0, 1]).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);

            let tr_in = x.trace();
            let tr_out = partial_trace(&x, &dims, &[1]).unwrap().trace();
            prop_assert!((tr_in - tr_out).norm() < 1e-10);
        }
    }
}
