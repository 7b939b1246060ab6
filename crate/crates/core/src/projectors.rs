//! Beam projectors for the three-outcome magnet, built two independent ways.
//!
//! [`beam_projectors`] uses the closed quadratic form in `a·S`;
//! [`lagrange_projectors`] rebuilds spectral projectors of any non-degenerate
//! Hermitian matrix from its moment expansion through a Vandermonde solve.
//! The two routes must agree on `a·S`, which the tests enforce.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::spin::{spin_projection, Direction};

/// Relative eigenvalue-gap threshold below which the Vandermonde system is
/// treated as singular.
pub const DEGENERACY_GAP: f64 = 1e-6;

/// A complete set of mutually orthogonal projectors labeled by outcomes.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    outcomes: Vec<f64>,
    projectors: Vec<ComplexMatrix>,
}

impl ProjectorSet {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Outcome labels in the set's fixed order.
    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn projector(&self, index: usize) -> &ComplexMatrix {
        &self.projectors[index]
    }

    /// The projector whose outcome label matches `outcome` exactly.
    pub fn for_outcome(&self, outcome: f64) -> Option<&ComplexMatrix> {
        self.outcomes
            .iter()
            .position(|&o| o == outcome)
            .map(|i| &self.projectors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.outcomes.iter().copied().zip(self.projectors.iter())
    }
}

/// Beam projectors `M_k(a)` for `k = +1, 0, -1`, in that order:
/// `M_k(a) = 1 - (a·S)² + (k/2)(a·S) + (k²/2)(3(a·S)² - 2·1)`.
pub fn beam_projectors(a: Direction) -> ProjectorSet {
    let k1 = spin_projection(a);
    let k2 = k1.mul(&k1);
    let one = ComplexMatrix::identity(3);
    let mk = |k: f64| {
        one.sub(&k2)
            .add(&k1.scaled_re(k / 2.0))
            .add(&k2.scaled_re(3.0).sub(&one.scaled_re(2.0)).scaled_re(k * k / 2.0))
            .symmetrized()
    };
    ProjectorSet {
        outcomes: vec![1.0, 0.0, -1.0],
        projectors: vec![mk(1.0), mk(0.0), mk(-1.0)],
    }
}

/// Spectral projectors of a non-degenerate Hermitian matrix via the
/// Vandermonde route: `P_i = Σ_n (Vᵀ)⁻¹[i][n] A^n` with `V[k][n] = λ_k^n`.
///
/// Outcomes are the eigenvalues in descending order. Fails with
/// `DegenerateSpectrum` when the smallest eigenvalue gap is below
/// [`DEGENERACY_GAP`] times the spectral spread.
pub fn lagrange_projectors(a: &ComplexMatrix, tol: f64) -> Result<ProjectorSet> {
    let n = a.dim();
    let spectrum = a.eig_hermitian(tol)?;
    let lambdas = &spectrum.eigenvalues;

    let spread = lambdas[0] - lambdas[n - 1];
    let mut gap = f64::INFINITY;
    for w in lambdas.windows(2) {
        gap = gap.min(w[0] - w[1]);
    }
    let threshold = DEGENERACY_GAP * spread;
    if gap <= threshold || spread == 0.0 {
        return Err(Error::DegenerateSpectrum { gap: gap.min(spread), threshold });
    }

    // b = (V^T)^-1 row by row; column n of V^T holds powers of lambda_n.
    let mut vt = vec![vec![0.0_f64; n]; n];
    for (k, &lambda) in lambdas.iter().enumerate() {
        let mut power = 1.0;
        for row in vt.iter_mut() {
            row[k] = power;
            power *= lambda;
        }
    }
    let binv = invert_real(&vt).ok_or(Error::DegenerateSpectrum { gap, threshold })?;

    let powers: Vec<ComplexMatrix> = (0..n as u32).map(|p| a.pow(p)).collect();
    let projectors = (0..n)
        .map(|i| {
            let mut p = ComplexMatrix::zeros(n);
            for (coeff, apow) in binv[i].iter().zip(&powers) {
                p = p.add(&apow.scaled_re(*coeff));
            }
            p.symmetrized()
        })
        .collect();

    Ok(ProjectorSet { outcomes: lambdas.clone(), projectors })
}

/// Invert a small real matrix by Gauss-Jordan with partial pivoting.
fn invert_real(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            aug[i][col].abs().partial_cmp(&aug[j][col].abs()).expect("finite")
        })?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        let lead = aug[col][col];
        for v in &mut aug[col] {
            *v /= lead;
        }
        let pivot_row = aug[col].clone();
        for (row, cells) in aug.iter_mut().enumerate() {
            if row == col {
                continue;
            }
            let factor = cells[col];
            if factor == 0.0 {
                continue;
            }
            for (dst, src) in cells.iter_mut().zip(&pivot_row) {
                *dst -= factor * src;
            }
        }
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Rebuild the observable from a beam projector set:
/// `M_{+1} - M_{-1} = a·S` and `M_{+1} + M_{-1} = (a·S)²`.
///
/// Expects the fixed (+1, 0, -1) outcome order produced by [`beam_projectors`].
pub fn reconstruct_observable(ps: &ProjectorSet) -> (ComplexMatrix, ComplexMatrix) {
    let plus = ps.for_outcome(1.0).expect("beam set carries outcome +1");
    let minus = ps.for_outcome(-1.0).expect("beam set carries outcome -1");
    (plus.sub(minus), plus.add(minus))
}
