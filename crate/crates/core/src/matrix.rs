//! Small dense complex matrices and the spectral tools built on them.
//!
//! Everything in this crate runs on matrices of dimension 9 or less, so the
//! representation is a plain row-major `Vec` and the Hermitian eigensolver is
//! a cyclic Jacobi iteration. No attempt is made to be fast beyond that.

use num_complex::Complex;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;

/// Default tolerance for Hermiticity and positivity checks (absolute, max-norm).
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-10;

/// Jacobi sweep termination: off-diagonal Frobenius norm relative to the input norm.
const JACOBI_CONVERGENCE: f64 = 1e-14;

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Zero matrix of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    /// Identity matrix of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Build a matrix by evaluating `f` at every (row, col) index pair.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from real row data; imaginary parts are zero.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All entries finite (no NaN or infinity).
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Raw entries in row-major order.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// Sum of diagonal elements.
    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Square root of the sum of squared entry magnitudes.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm of `A - A†`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Entry-wise scaling by a complex factor.
    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= factor;
        }
        out
    }

    /// Entry-wise scaling by a real factor.
    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(C64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self::from_fn(self.dim, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self::from_fn(self.dim, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `(A + A†)/2`, used to scrub round-off asymmetry off nominally Hermitian results.
    pub fn symmetrized(&self) -> Self {
        self.add(&self.adjoint()).scaled_re(0.5)
    }

    /// Integer matrix power (p small; p = 0 gives the identity).
    pub fn pow(&self, p: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..p {
            out = out.mul(self);
        }
        out
    }

    /// Kronecker product; `self` carries the slow (block) index.
    ///
    /// `(A ⊗ B)[(i*db + k, j*db + l)] = A[(i, j)] * B[(k, l)]` with `db = B.dim()`.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let mut out = Self::zeros(da * db);
        for i in 0..da {
            for j in 0..da {
                let aij = self[(i, j)];
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k, j * db + l)] = aij * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    fn require_hermitian(&self, tol: f64) -> Result<()> {
        let dev = self.hermiticity_error();
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev, tolerance: tol });
        }
        Ok(())
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Eigenvalues are returned in descending order with matching orthonormal
    /// eigenvector columns. Fails with `NotHermitian` when `‖A - A†‖_max > tol`.
    pub fn eig_hermitian(&self, tol: f64) -> Result<Spectrum> {
        self.require_hermitian(tol)?;
        let n = self.dim;
        let mut a = self.symmetrized();
        let mut v = Self::identity(n);
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);

        // Cyclic sweeps; quadratic convergence makes ~15 sweeps ample at dim <= 9,
        // the larger cap covers the real symmetric systems reused by tomography.
        for _sweep in 0..60 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= JACOBI_CONVERGENCE * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

        let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let eigenvectors = Self::from_fn(n, |i, j| v[(i, order[j])]);
        Ok(Spectrum { eigenvalues, eigenvectors })
    }

    /// Positive-semidefiniteness check; also reports the smallest eigenvalue.
    pub fn is_psd(&self, tol: f64) -> Result<PsdCheck> {
        let spectrum = self.eig_hermitian(tol)?;
        let min_eigenvalue = *spectrum
            .eigenvalues
            .last()
            .expect("matrix dimension is positive");
        Ok(PsdCheck { psd: min_eigenvalue >= -tol, min_eigenvalue })
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix(dim={})", self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// One complex Jacobi rotation zeroing the (p, q) entry of the Hermitian `a`,
/// accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag; // e^{i arg(apq)}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let tau = (app - aqq) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let s_ph = phase * s; // s e^{i theta}
    let s_ph_conj = s_ph.conj();

    a[(p, p)] = C64::new(app + t * mag, 0.0);
    a[(q, q)] = C64::new(aqq - t * mag, 0.0);
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);

    let n = a.dim();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * s_ph_conj;
        a[(k, q)] = akq * c - akp * s_ph;
        a[(p, k)] = a[(k, p)].conj();
        a[(q, k)] = a[(k, q)].conj();
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * s_ph_conj;
        v[(k, q)] = vkq * c - vkp * s_ph;
    }
}

/// Result of a Hermitian eigendecomposition.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Real eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvector columns in matching order.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    /// `V f(D) V†` for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let flam = f(lambda);
            for i in 0..n {
                let vik = v[(i, k)] * flam;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    /// `V D V†`, reassembling the original matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|lambda| C64::new(lambda, 0.0))
    }

    /// Outer product `v_k v_k†` of the k-th eigenvector.
    pub fn projector(&self, k: usize) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, |i, j| v[(i, k)] * v[(j, k)].conj())
    }
}

/// Outcome of [`ComplexMatrix::is_psd`].
#[derive(Clone, Copy, Debug)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// `exp(-i phi A)` for Hermitian `A`, computed through the spectral decomposition.
///
/// Exact for the generators used here (the spectrum is computed, not truncated),
/// and unitary by construction up to round-off.
pub fn unitary_from_generator(a: &ComplexMatrix, phi: f64, tol: f64) -> Result<ComplexMatrix> {
    let spectrum = a.eig_hermitian(tol)?;
    Ok(spectrum.apply(|lambda| {
        let arg = -phi * lambda;
        C64::new(arg.cos(), arg.sin())
    }))
}
