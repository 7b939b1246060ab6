//! Real symmetric eigensolver and normal-equation least squares.
//!
//! Backs the tomography fits: systems up to 80 unknowns, solved through the
//! eigendecomposition of the Gram matrix so that rank deficiency, condition
//! gating, and null-space projection all come from one decomposition.

/// Eigendecomposition of a real symmetric matrix; values descending,
/// `vectors[i * n + j]` is component i of eigenvector j.
pub(crate) struct SymEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.vectors[i * self.n + j])
    }
}

/// Cyclic Jacobi on a real symmetric matrix (row-major `a`, length n*n).
pub(crate) fn sym_eigen(n: usize, a: &[f64]) -> SymEigen {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // scrub asymmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if (2.0 * off).sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_j] = v[i * n + old_j];
        }
    }
    SymEigen { n, values, vectors }
}

fn rotate(m: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let tau = (app - aqq) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    m[p * n + p] = app + t * apq;
    m[q * n + q] = aqq - t * apq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        m[k * n + p] = c * akp + s * akq;
        m[k * n + q] = c * akq - s * akp;
        m[p * n + k] = m[k * n + p];
        m[q * n + k] = m[k * n + q];
    }
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp + s * vkq;
        v[k * n + q] = c * vkq - s * vkp;
    }
}

/// Normal equations `AᵀA x = Aᵀy`, accumulated row by row.
pub(crate) struct NormalSystem {
    pub n: usize,
    pub rows: usize,
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

impl NormalSystem {
    pub fn new(n: usize) -> Self {
        Self { n, rows: 0, gram: vec![0.0; n * n], rhs: vec![0.0; n] }
    }

    pub fn add_row(&mut self, row: &[f64], y: f64) {
        assert_eq!(row.len(), self.n);
        for (i, &ri) in row.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for (j, &rj) in row.iter().enumerate() {
                self.gram[i * self.n + j] += ri * rj;
            }
            self.rhs[i] += ri * y;
        }
        self.rows += 1;
    }
}

/// Minimum-norm least-squares solution through the Gram eigendecomposition.
pub(crate) struct LsSolution {
    pub coeffs: Vec<f64>,
    pub rank: usize,
    /// 2-norm condition estimate of the design matrix, sqrt(λmax/λmin) of
    /// the Gram matrix; infinite when rank-deficient.
    pub condition: f64,
    pub eigen: SymEigen,
}

/// Eigenvalues below `λmax * RANK_TOL` count as zero.
const RANK_TOL: f64 = 1e-12;

pub(crate) fn solve_min_norm(sys: &NormalSystem) -> LsSolution {
    let n = sys.n;
    let eigen = sym_eigen(n, &sys.gram);
    let lambda_max = eigen.values.first().copied().unwrap_or(0.0).max(0.0);
    let threshold = lambda_max * RANK_TOL;

    let mut coeffs = vec![0.0; n];
    let mut rank = 0;
    for (j, &lambda) in eigen.values.iter().enumerate() {
        if lambda <= threshold {
            continue;
        }
        rank += 1;
        let mut proj = 0.0;
        for (i, u) in eigen.column(j).enumerate() {
            proj += u * sys.rhs[i];
        }
        let amount = proj / lambda;
        for (i, u) in eigen.column(j).enumerate() {
            coeffs[i] += amount * u;
        }
    }

    let lambda_min = eigen.values.last().copied().unwrap_or(0.0);
    let condition = if rank < n || lambda_min <= 0.0 {
        f64::INFINITY
    } else {
        (lambda_max / lambda_min).sqrt()
    };
    LsSolution { coeffs, rank, condition, eigen }
}

impl LsSolution {
    /// Indices of eigenvectors spanning the (numerical) null space.
    pub fn null_columns(&self) -> Vec<usize> {
        let lambda_max = self.eigen.values.first().copied().unwrap_or(0.0).max(0.0);
        let threshold = lambda_max * RANK_TOL;
        (0..self.eigen.n).filter(|&j| self.eigen.values[j] <= threshold).collect()
    }

    /// Project `x` onto the affine set of least-squares minimizers:
    /// the solution plus the null-space component of `x - solution`.
    pub fn project_onto_minimizers(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.coeffs.clone();
        for j in self.null_columns() {
            let mut dot = 0.0;
            for (i, u) in self.eigen.column(j).enumerate() {
                dot += u * (x[i] - self.coeffs[i]);
            }
            for (i, u) in self.eigen.column(j).enumerate() {
                out[i] += dot * u;
            }
        }
        out
    }
}
