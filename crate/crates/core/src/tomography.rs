//! Source reconstruction from moment data, and the separability test that
//! distinguishes quantum-representable frequency data from data that merely
//! has consistent marginals.
//!
//! The forward direction (source to statistics) lives in [`crate::experiment`];
//! this module inverts it: expansion over the operator basis, least-squares
//! moment fits on a measurement design, and a PSD-constrained fit whose
//! residual is the separability signal.

use crate::error::{Error, Result};
use crate::experiment::{pair_index, PairFrequencies, PairMoments, OUTCOMES, PAIR_OUTCOMES};
use crate::lstsq::{solve_min_norm, NormalSystem};
use crate::matrix::{ComplexMatrix, C64};
use crate::projectors::beam_projectors;
use crate::spin::{operator_basis, Direction};

/// Validation tolerance for source matrices: Hermiticity, trace, and
/// negative-eigenvalue slack. Looser than the matrix-kernel default so that
/// file-round-tripped inputs validate cleanly.
pub const SOURCE_TOL: f64 = 1e-9;

/// Condition-number gate for reconstruction designs.
pub const CONDITION_GATE: f64 = 1e6;

/// Largest clipped eigenvalue mass a noisy reconstruction may repair away.
pub const PSD_REPAIR_LIMIT: f64 = 0.05;

/// Hermitian, positive-semidefinite, trace-one matrix describing a source.
/// Validated on construction (tolerance [`SOURCE_TOL`]).
#[derive(Clone, Debug, PartialEq)]
pub struct SourceState {
    matrix: ComplexMatrix,
}

impl SourceState {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::InvalidSource { reason: "non-finite entries".into() });
        }
        let herm = matrix.hermiticity_error();
        if herm > SOURCE_TOL {
            return Err(Error::InvalidSource {
                reason: format!("Hermiticity deviation {herm:.3e} exceeds {SOURCE_TOL:.1e}"),
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > SOURCE_TOL || trace.im.abs() > SOURCE_TOL {
            return Err(Error::InvalidSource { reason: format!("trace {trace} is not 1") });
        }
        let check = matrix.is_psd(SOURCE_TOL)?;
        if !check.psd {
            return Err(Error::InvalidSource {
                reason: format!("min eigenvalue {:.3e} is negative", check.min_eigenvalue),
            });
        }
        Ok(Self { matrix })
    }

    /// Rank-one source `ψψ†` from a state vector (normalized within 1e-9).
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { norm });
        }
        let n = amplitudes.len();
        let m = ComplexMatrix::from_fn(n, |i, j| {
            amplitudes[i] * amplitudes[j].conj() / C64::new(norm * norm, 0.0)
        });
        Self::new(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// The total-spin-zero two-particle pure state, `(|-1,+1> - |0,0> + |+1,-1>)/√3`
/// in row-major pair indexing.
pub fn singlet_source() -> SourceState {
    let amp = 1.0 / 3.0_f64.sqrt();
    let mut psi = vec![C64::new(0.0, 0.0); 9];
    psi[pair_index(-1, 1)] = C64::new(amp, 0.0);
    psi[pair_index(0, 0)] = C64::new(-amp, 0.0);
    psi[pair_index(1, -1)] = C64::new(amp, 0.0);
    SourceState::pure(&psi).expect("normalized by construction")
}

/// Real expansion coefficients of a source over the operator basis:
/// 9 values `f_i` for one particle, 81 values `f_{i,j}` (row-major in i)
/// for two.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionCoefficients {
    values: Vec<f64>,
}

impl ExpansionCoefficients {
    pub fn single(values: [f64; 9]) -> Self {
        Self { values: values.to_vec() }
    }

    pub fn pair(values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 81, "pair expansion has 81 coefficients");
        Self { values }
    }

    pub fn is_pair(&self) -> bool {
        self.values.len() == 81
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `f_{i,j}` for the pair case.
    pub fn pair_value(&self, i: usize, j: usize) -> f64 {
        debug_assert!(self.is_pair());
        self.values[i * 9 + j]
    }
}

/// Imaginary parts above this are an error; below, they are dropped.
const COEFF_IMAG_ERROR: f64 = 1e-8;

/// Expand a source over the operator basis: `f_i = trace(B_i† F)` or
/// `f_{i,j} = trace((B_i ⊗ B_j)† F)`. All coefficients of a valid source
/// are real; residual imaginary parts above 1e-8 abort.
pub fn expand_source(f: &SourceState) -> Result<ExpansionCoefficients> {
    let basis = operator_basis();
    let take_real = |index: usize, z: C64| -> Result<f64> {
        if z.im.abs() > COEFF_IMAG_ERROR {
            return Err(Error::NonRealCoefficient { index, imaginary: z.im });
        }
        Ok(z.re)
    };
    match f.dim() {
        3 => {
            let mut values = [0.0; 9];
            for (i, b) in basis.iter().enumerate() {
                values[i] = take_real(i, b.adjoint().mul(f.matrix()).trace())?;
            }
            Ok(ExpansionCoefficients::single(values))
        }
        9 => {
            let mut values = vec![0.0; 81];
            for i in 0..9 {
                for j in 0..9 {
                    let bij = basis[i].kron(&basis[j]);
                    values[i * 9 + j] =
                        take_real(i * 9 + j, bij.adjoint().mul(f.matrix()).trace())?;
                }
            }
            Ok(ExpansionCoefficients::pair(values))
        }
        d => Err(Error::InvalidSource { reason: format!("unsupported dimension {d}") }),
    }
}

fn assemble_single_raw(values: &[f64]) -> ComplexMatrix {
    let basis = operator_basis();
    let mut m = ComplexMatrix::zeros(3);
    for (i, &c) in values.iter().enumerate() {
        if c != 0.0 {
            m = m.add(&basis[i].scaled_re(c));
        }
    }
    m
}

fn assemble_pair_raw(values: &[f64]) -> ComplexMatrix {
    let basis = operator_basis();
    let mut m = ComplexMatrix::zeros(9);
    for i in 0..9 {
        for j in 0..9 {
            let c = values[i * 9 + j];
            if c != 0.0 {
                m = m.add(&basis[i].kron(&basis[j]).scaled_re(c));
            }
        }
    }
    m
}

/// Rebuild a source from expansion coefficients. The trace constraint pins
/// `f_0 = 1/√3` (single) or `f_{0,0} = 1/3` (pair); coefficients violating
/// it, or describing a matrix with a significant negative eigenvalue, are
/// rejected.
pub fn assemble_source(c: &ExpansionCoefficients) -> Result<SourceState> {
    let matrix = if c.is_pair() {
        let f00 = c.values[0];
        if (f00 - 1.0 / 3.0).abs() > 1e-12 {
            return Err(Error::InvalidSource {
                reason: format!("f_00 = {f00} but the unit trace requires 1/3"),
            });
        }
        assemble_pair_raw(&c.values)
    } else {
        let f0 = c.values[0];
        let expect = 1.0 / 3.0_f64.sqrt();
        if (f0 - expect).abs() > 1e-12 {
            return Err(Error::InvalidSource {
                reason: format!("f_0 = {f0} but the unit trace requires 1/sqrt(3)"),
            });
        }
        assemble_single_raw(&c.values)
    };
    let check = matrix.is_psd(SOURCE_TOL)?;
    if check.min_eigenvalue < -SOURCE_TOL {
        return Err(Error::NotPsd { min_eigenvalue: check.min_eigenvalue });
    }
    SourceState::new(matrix)
}

/// `trace(B_i (a·S)^p)` for p = 0, 1, 2 in closed form.
///
/// Only B_0 survives p = 0 (trace √3); only B_1..B_3 survive p = 1; p = 2
/// takes contributions from B_0 (trace 2/√3) and the quadratic elements
/// B_4..B_8.
fn basis_moment_traces(a: Direction) -> [[f64; 9]; 3] {
    let (ax, ay, az) = (a.x(), a.y(), a.z());
    let r2 = std::f64::consts::SQRT_2;
    let mut t = [[0.0; 9]; 3];
    t[0][0] = 3.0_f64.sqrt();
    t[1][1] = r2 * ax;
    t[1][2] = r2 * ay;
    t[1][3] = r2 * az;
    t[2][0] = 2.0 / 3.0_f64.sqrt();
    t[2][4] = (2.0_f64 / 3.0).sqrt() * ax * ax - (ay * ay + az * az) / 6.0_f64.sqrt();
    t[2][5] = (az * az - ay * ay) / r2;
    t[2][6] = r2 * ax * ay;
    t[2][7] = r2 * ax * az;
    t[2][8] = r2 * ay * az;
    t
}

/// First moment predicted by single-particle coefficients:
/// `<k> = √2 (a_x f_1 + a_y f_2 + a_z f_3)`.
pub fn predict_first_moment(c: &ExpansionCoefficients, a: Direction) -> f64 {
    assert!(!c.is_pair(), "first-moment prediction takes single-particle coefficients");
    let v = &c.values;
    std::f64::consts::SQRT_2 * (a.x() * v[1] + a.y() * v[2] + a.z() * v[3])
}

/// Second moment predicted by single-particle coefficients.
///
/// The constant term is the B_0 contribution `f_0 · trace(B_0 (a·S)²)`
/// = `(1/√3)(2/√3)` = 2/3, anchored by the isotropic source where
/// `<k²> = 2/3` for every setting; the remaining terms are the quadratic
/// basis elements weighted by f_4..f_8.
pub fn predict_second_moment(c: &ExpansionCoefficients, a: Direction) -> f64 {
    assert!(!c.is_pair(), "second-moment prediction takes single-particle coefficients");
    let t = basis_moment_traces(a);
    let v = &c.values;
    2.0 / 3.0 + (4..9).map(|i| v[i] * t[2][i]).sum::<f64>()
}

/// One measured direction with its first and second moments.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub direction: Direction,
    pub m1: f64,
    pub m2: f64,
}

/// A reconstructed source along with the eigenvalue mass the PSD repair
/// removed (zero for exact data).
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub source: SourceState,
    pub psd_adjustment: f64,
}

/// Five directions whose first-moment system has rank 3 and whose
/// second-moment system has rank 5 (condition numbers 2.0 and 2.7).
pub fn canonical_design() -> Vec<Direction> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        Direction::EZ,
        Direction::EX,
        Direction::new(h, h, 0.0).expect("unit"),
        Direction::new(h, 0.0, h).expect("unit"),
        Direction::new(0.0, h, h).expect("unit"),
    ]
}

/// Cartesian square of [`canonical_design`]: 25 setting pairs, under which
/// the 80-coefficient pair system has full rank (condition 68).
pub fn canonical_pair_design() -> Vec<(Direction, Direction)> {
    let d = canonical_design();
    d.iter().flat_map(|&a| d.iter().map(move |&b| (a, b))).collect()
}

fn gate_design(sol: &crate::lstsq::LsSolution, unknowns: usize, what: &str) -> Result<()> {
    if sol.rank < unknowns {
        return Err(Error::SingularDesign {
            reason: format!("{what}: rank {} of {unknowns} unknowns", sol.rank),
        });
    }
    if sol.condition > CONDITION_GATE {
        return Err(Error::SingularDesign {
            reason: format!("{what}: condition {:.3e} exceeds {CONDITION_GATE:.1e}", sol.condition),
        });
    }
    Ok(())
}

/// Clip negative eigenvalues, renormalize the trace to one, and report the
/// clipped mass.
fn psd_repair(matrix: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let spectrum = matrix.eig_hermitian(1e-8)?;
    let clipped: f64 = spectrum.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let positive_trace: f64 = spectrum.eigenvalues.iter().filter(|&&l| l > 0.0).sum();
    let repaired = spectrum
        .apply(|l| C64::new(l.max(0.0) / positive_trace, 0.0))
        .symmetrized();
    Ok((repaired, clipped))
}

/// Recover a 3x3 source from first and second moments observed at a set of
/// directions: two least-squares systems (f_1..f_3 from first moments,
/// f_4..f_8 from second moments), assembly over the basis, then PSD repair.
///
/// Fails with `SingularDesign` when either system is rank-deficient or has
/// condition above [`CONDITION_GATE`], and with `NotPsd` when the repair
/// clips more than [`PSD_REPAIR_LIMIT`] of eigenvalue mass.
pub fn reconstruct_source(observations: &[Observation]) -> Result<Reconstruction> {
    if observations.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut first = NormalSystem::new(3);
    let mut second = NormalSystem::new(5);
    for obs in observations {
        let t = basis_moment_traces(obs.direction);
        first.add_row(&t[1][1..4], obs.m1);
        second.add_row(&t[2][4..9], obs.m2 - 2.0 / 3.0);
    }
    let first_sol = solve_min_norm(&first);
    gate_design(&first_sol, 3, "first-moment system")?;
    let second_sol = solve_min_norm(&second);
    gate_design(&second_sol, 5, "second-moment system")?;

    let mut values = [0.0; 9];
    values[0] = 1.0 / 3.0_f64.sqrt();
    values[1..4].copy_from_slice(&first_sol.coeffs);
    values[4..9].copy_from_slice(&second_sol.coeffs);

    let raw = assemble_single_raw(&values);
    finish_reconstruction(raw)
}

fn finish_reconstruction(raw: ComplexMatrix) -> Result<Reconstruction> {
    let spectrum = raw.eig_hermitian(1e-8)?;
    let min_eigenvalue = *spectrum.eigenvalues.last().expect("non-empty");
    let (repaired, clipped) = psd_repair(&raw)?;
    if clipped > PSD_REPAIR_LIMIT {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(Reconstruction { source: SourceState::new(repaired)?, psd_adjustment: clipped })
}

/// One setting pair with its nine mixed moments.
#[derive(Clone, Copy, Debug)]
pub struct PairObservation {
    pub a: Direction,
    pub b: Direction,
    pub moments: PairMoments,
}

/// Recover a 9x9 source from mixed moments `<k^p l^q>` over setting pairs.
///
/// The 80 free coefficients (f_{0,0} is pinned to 1/3 by the trace) are fit
/// by least squares over the 8 moment equations each pair contributes.
pub fn reconstruct_pair_source(observations: &[PairObservation]) -> Result<Reconstruction> {
    if observations.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sys = NormalSystem::new(80);
    let mut row = vec![0.0; 80];
    for obs in observations {
        let ta = basis_moment_traces(obs.a);
        let tb = basis_moment_traces(obs.b);
        for (p, ta_p) in ta.iter().enumerate() {
            for (q, tb_q) in tb.iter().enumerate() {
                if p == 0 && q == 0 {
                    continue;
                }
                for (col, r) in row.iter_mut().enumerate() {
                    let (i, j) = ((col + 1) / 9, (col + 1) % 9);
                    *r = ta_p[i] * tb_q[j];
                }
                let offset = ta_p[0] * tb_q[0] / 3.0;
                sys.add_row(&row, obs.moments.get(p, q) - offset);
            }
        }
    }
    let sol = solve_min_norm(&sys);
    gate_design(&sol, 80, "pair-moment system")?;

    let mut values = vec![0.0; 81];
    values[0] = 1.0 / 3.0;
    values[1..].copy_from_slice(&sol.coeffs);
    finish_reconstruction(assemble_pair_raw(&values))
}

/// Result of the separability fit: the best PSD source for the whole
/// dataset, the root-mean-square misfit of its predicted frequencies, and
/// the eigenvalue mass clipped at the final PSD projection.
#[derive(Clone, Debug)]
pub struct SeparabilityReport {
    pub fitted: SourceState,
    pub residual: f64,
    pub psd_adjustment: f64,
}

/// Alternating-projection rounds for the PSD-constrained fit.
const SEPARABILITY_ROUNDS: usize = 100;

/// Fit one 9x9 source to pair frequency tables taken at several setting
/// pairs and report how well the best PSD source explains them all.
///
/// Frequencies are linear in the source, so the unconstrained fit is a
/// least-squares solve for the 80 free coefficients; positivity is then
/// enforced by alternating projection between the affine set of
/// least-squares minimizers and the PSD cone (clipped-eigenvalue
/// projections, at most [`SEPARABILITY_ROUNDS`] rounds), warm-started at the
/// per-pair diagonal construction, which already realizes any single table.
/// A large residual is a property of the data, not an error: it signals that
/// no single source reproduces the tables.
pub fn separability_residual(
    dataset: &[((Direction, Direction), PairFrequencies)],
) -> Result<SeparabilityReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let basis = operator_basis();
    let kron_basis: Vec<ComplexMatrix> = (0..81)
        .map(|t| basis[t / 9].kron(&basis[t % 9]))
        .collect();
    let expand80 = |m: &ComplexMatrix| -> Vec<f64> {
        (1..81).map(|t| trace_product(&kron_basis[t], m).re).collect()
    };
    let assemble80 = |c: &[f64]| -> ComplexMatrix {
        let mut values = vec![0.0; 81];
        values[0] = 1.0 / 3.0;
        values[1..].copy_from_slice(c);
        assemble_pair_raw(&values)
    };

    // Linear model per table entry, projector products, data vector, and the
    // warm start built from the per-pair diagonal construction.
    let mut sys = NormalSystem::new(80);
    let mut row = vec![0.0; 80];
    let mut products: Vec<ComplexMatrix> = Vec::with_capacity(9 * dataset.len());
    let mut data: Vec<f64> = Vec::with_capacity(9 * dataset.len());
    let mut warm = ComplexMatrix::zeros(9);
    for ((a, b), table) in dataset {
        let pa = beam_projectors(*a);
        let pb = beam_projectors(*b);
        let traces_a: Vec<[f64; 9]> = OUTCOMES
            .iter()
            .map(|&k| {
                let m = pa.for_outcome(k as f64).expect("beam outcomes fixed");
                std::array::from_fn(|i| trace_product(&basis[i], m).re)
            })
            .collect();
        let traces_b: Vec<[f64; 9]> = OUTCOMES
            .iter()
            .map(|&l| {
                let m = pb.for_outcome(l as f64).expect("beam outcomes fixed");
                std::array::from_fn(|i| trace_product(&basis[i], m).re)
            })
            .collect();
        for &(k, l) in PAIR_OUTCOMES.iter() {
            let (ki, li) = ((1 - k) as usize, (1 - l) as usize);
            for (col, r) in row.iter_mut().enumerate() {
                let (i, j) = ((col + 1) / 9, (col + 1) % 9);
                *r = traces_a[ki][i] * traces_b[li][j];
            }
            let f = table.get(k, l);
            sys.add_row(&row, f - 1.0 / 9.0);
            let product = pa
                .for_outcome(k as f64)
                .expect("beam outcomes fixed")
                .kron(pb.for_outcome(l as f64).expect("beam outcomes fixed"));
            warm = warm.add(&product.scaled_re(f / dataset.len() as f64));
            products.push(product);
            data.push(f);
        }
    }

    let sol = solve_min_norm(&sys);
    let unconstrained_only = sol.null_columns().is_empty();

    let mut coeffs = expand80(&warm);
    let mut fitted = assemble80(&coeffs);
    let mut adjustment = 0.0;
    for _round in 0..SEPARABILITY_ROUNDS {
        coeffs = sol.project_onto_minimizers(&coeffs);
        let candidate = assemble80(&coeffs);
        let (repaired, clipped) = psd_repair(&candidate)?;
        adjustment = clipped;
        if clipped <= 1e-12 {
            fitted = candidate;
            break;
        }
        fitted = repaired;
        if unconstrained_only {
            // the affine set is a single point; further rounds cannot move
            break;
        }
        coeffs = expand80(&fitted);
    }

    let residual = {
        let sum_sq: f64 = products
            .iter()
            .zip(&data)
            .map(|(m, &f)| {
                let predicted = trace_product(m, &fitted).re;
                (predicted - f) * (predicted - f)
            })
            .sum();
        (sum_sq / data.len() as f64).sqrt()
    };

    Ok(SeparabilityReport {
        fitted: SourceState::new(fitted)?,
        residual,
        psd_adjustment: adjustment,
    })
}

/// `trace(X Y)` without forming the product.
fn trace_product(x: &ComplexMatrix, y: &ComplexMatrix) -> C64 {
    let n = x.dim();
    debug_assert_eq!(n, y.dim());
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            acc += x[(r, c)] * y[(c, r)];
        }
    }
    acc
}
