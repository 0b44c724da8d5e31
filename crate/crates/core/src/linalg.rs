//! Small dense complex linear algebra for two-qubit states.
//!
//! Everything here is specialized to the 4x4 Hermitian problems of the
//! two-qubit pipeline: a cyclic Jacobi eigensolver, a reverse Cholesky
//! factorization for the likelihood parameterization, and a partial-pivot
//! Gaussian solver for the (real) design systems of the fitter and the
//! tomographic inversion.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Complex scalar over the working float type.
pub type Cplx<T> = Complex<T>;

/// Dense 4x4 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix4<T> {
    pub m: [[Cplx<T>; 4]; 4],
}

/// Dense complex 4-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector4<T>(pub [Cplx<T>; 4]);

impl<T: Real> Matrix4<T> {
    pub fn zeros() -> Self {
        Self {
            m: [[Cplx::new(T::zero(), T::zero()); 4]; 4],
        }
    }

    pub fn identity() -> Self {
        let mut a = Self::zeros();
        for i in 0..4 {
            a.m[i][i] = Cplx::new(T::one(), T::zero());
        }
        a
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> Cplx<T>) -> Self {
        let mut a = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                a.m[i][j] = f(i, j);
            }
        }
        a
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(|i, j| self.m[i][j] + other.m[i][j])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(|i, j| self.m[i][j] - other.m[i][j])
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self::from_fn(|i, j| self.m[i][j] * s)
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(Cplx::new(s, T::zero()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.m[i][k];
                for j in 0..4 {
                    out.m[i][j] += a * other.m[k][j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &Vector4<T>) -> Vector4<T> {
        let mut out = [Cplx::new(T::zero(), T::zero()); 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += self.m[i][j] * v.0[j];
            }
        }
        Vector4(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.m[j][i].conj())
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.m[i][j].conj())
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..4).fold(Cplx::new(T::zero(), T::zero()), |acc, i| acc + self.m[i][i])
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        for i in 0..4 {
            for j in 0..4 {
                let d = self.m[i][j] - self.m[j][i].conj();
                if d.norm_sqr() > tol * tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                s += self.m[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// |psi><psi| for a (not necessarily normalized) vector.
    pub fn outer(v: &Vector4<T>) -> Self {
        Self::from_fn(|i, j| v.0[i] * v.0[j].conj())
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns eigenvalues ascending with matching eigenvector
    /// columns; `a ~= V diag(w) V^dagger`.
    pub fn eigh(&self) -> ([T; 4], Matrix4<T>) {
        let mut a = *self;
        let mut v = Matrix4::identity();
        let tol = T::epsilon() * real(16.0) * (self.frobenius_norm() + T::one());
        for _sweep in 0..64 {
            let mut off = T::zero();
            for p in 0..3 {
                for q in (p + 1)..4 {
                    off += a.m[p][q].norm_sqr();
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..3 {
                for q in (p + 1)..4 {
                    let apq = a.m[p][q];
                    let mag = apq.norm();
                    if mag <= tol * real(0.01) {
                        continue;
                    }
                    // Phase that makes the pivot real, then a real rotation.
                    let phase = apq / Cplx::new(mag, T::zero());
                    let app = a.m[p][p].re;
                    let aqq = a.m[q][q].re;
                    let tau = (aqq - app) / (real::<T>(2.0) * mag);
                    let t = {
                        let s = if tau >= T::zero() {
                            T::one()
                        } else {
                            -T::one()
                        };
                        s / (tau.abs() + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    // Column rotation: J has J[pp]=c, J[pq]=s*phase,
                    // J[qp]=-s*conj(phase), J[qq]=c; apply A <- J^H A J.
                    let jp = Cplx::new(c, T::zero());
                    let jpq = phase * Cplx::new(s, T::zero());
                    let jqp = -phase.conj() * Cplx::new(s, T::zero());
                    for k in 0..4 {
                        let akp = a.m[k][p];
                        let akq = a.m[k][q];
                        a.m[k][p] = akp * jp + akq * jqp;
                        a.m[k][q] = akp * jpq + akq * jp;
                    }
                    for k in 0..4 {
                        let apk = a.m[p][k];
                        let aqk = a.m[q][k];
                        a.m[p][k] = jp.conj() * apk + jqp.conj() * aqk;
                        a.m[q][k] = jpq.conj() * apk + jp.conj() * aqk;
                    }
                    for k in 0..4 {
                        let vkp = v.m[k][p];
                        let vkq = v.m[k][q];
                        v.m[k][p] = vkp * jp + vkq * jqp;
                        v.m[k][q] = vkp * jpq + vkq * jp;
                    }
                }
            }
        }
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&i, &j| a.m[i][i].re.partial_cmp(&a.m[j][j].re).unwrap());
        let mut w = [T::zero(); 4];
        let mut vecs = Matrix4::zeros();
        for (col, &src) in order.iter().enumerate() {
            w[col] = a.m[src][src].re;
            for row in 0..4 {
                vecs.m[row][col] = v.m[row][src];
            }
        }
        (w, vecs)
    }

    /// Hermitian square root via the eigendecomposition; eigenvalues below
    /// zero are clipped (they only arise from floating-point noise).
    pub fn sqrt_psd(&self) -> Matrix4<T> {
        let (w, v) = self.eigh();
        let mut out = Matrix4::zeros();
        for k in 0..4 {
            let s = w[k].max(T::zero()).sqrt();
            for i in 0..4 {
                for j in 0..4 {
                    out.m[i][j] += v.m[i][k] * v.m[j][k].conj() * Cplx::new(s, T::zero());
                }
            }
        }
        out
    }

    /// Lower-triangular `L` with `L^dagger L = G` for a positive-definite
    /// Hermitian `G` (reverse-order Cholesky: the factor builds from the last
    /// row up).
    pub fn lower_factor_adjoint(&self) -> Result<Matrix4<T>> {
        // Compute the upper-triangular U with U U^dagger = G, then L = U^dagger.
        let g = &self.m;
        let mut u = Matrix4::<T>::zeros();
        for i in (0..4).rev() {
            let mut d = g[i][i].re;
            for k in (i + 1)..4 {
                d -= u.m[i][k].norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(Error::numerical(format!(
                    "reverse Cholesky pivot {d} at index {i}: matrix not positive definite"
                )));
            }
            let dii = d.sqrt();
            u.m[i][i] = Cplx::new(dii, T::zero());
            for j in 0..i {
                let mut s = g[j][i];
                for k in (i + 1)..4 {
                    s -= u.m[j][k] * u.m[i][k].conj();
                }
                u.m[j][i] = s / Cplx::new(dii, T::zero());
            }
        }
        Ok(u.adjoint())
    }
}

impl<T: Real> Vector4<T> {
    pub fn zeros() -> Self {
        Self([Cplx::new(T::zero(), T::zero()); 4])
    }

    pub fn from_re(v: [T; 4]) -> Self {
        Self(v.map(|x| Cplx::new(x, T::zero())))
    }

    /// Conjugating inner product `<self|other>`.
    pub fn dot(&self, other: &Self) -> Cplx<T> {
        let mut s = Cplx::new(T::zero(), T::zero());
        for i in 0..4 {
            s += self.0[i].conj() * other.0[i];
        }
        s
    }

    pub fn norm(&self) -> T {
        self.dot(self).re.sqrt()
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self(self.0.map(|x| x * s))
    }

    /// Tensor product of two 2-vectors in the (first ⊗ second) ordering.
    pub fn kron2(a: &[Cplx<T>; 2], b: &[Cplx<T>; 2]) -> Self {
        Self([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }
}

/// Solve the dense real system `a x = b` by Gaussian elimination with partial
/// pivoting. `a` is consumed as a row-major square matrix.
pub fn solve_real<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("solve_real: non-square system"));
    }
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pivot <= T::epsilon() * real(64.0) {
            return Err(Error::numerical(format!(
                "singular design matrix (pivot {pivot} at column {col})"
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let bf = b[col];
            b[r] -= f * bf;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in (row + 1)..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}
