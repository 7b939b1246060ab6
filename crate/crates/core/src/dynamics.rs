//! Unitary parameter evolution of a source matrix.
//!
//! The generator is a traceless Hermitian combination of the basis elements
//! B_1..B_8 with coefficients h_i(λ). The propagator is advanced one step at
//! a time by the exact exponential of the midpoint generator, which keeps it
//! unitary at every grid point and is exact for constant generators.

use crate::error::{Error, Result};
use crate::matrix::{unitary_from_generator, C64, ComplexMatrix};
use crate::spin::operator_basis;
use crate::tomography::SourceState;

/// Unitarity gate applied at every grid point.
pub const UNITARITY_GATE: f64 = 1e-10;

/// Generator coefficients h_1..h_8 as a function of the evolution parameter,
/// either constant or tabulated with linear interpolation. (hbar = 1; the
/// parameter is dimensionless.)
#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianSchedule {
    Constant([f64; 8]),
    Tabulated { lambdas: Vec<f64>, coefficients: Vec<[f64; 8]> },
}

impl HamiltonianSchedule {
    /// Tabulated schedule; grid must be strictly ascending with matching rows.
    pub fn tabulated(lambdas: Vec<f64>, coefficients: Vec<[f64; 8]>) -> Result<Self> {
        if lambdas.len() != coefficients.len() || lambdas.len() < 2 {
            return Err(Error::InsufficientPoints { needed: 2, got: lambdas.len() });
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format { line: 0, message: "schedule grid must ascend".into() });
        }
        if coefficients.iter().flatten().any(|h| !h.is_finite()) {
            return Err(Error::Format { line: 0, message: "non-finite coefficient".into() });
        }
        Ok(Self::Tabulated { lambdas, coefficients })
    }

    /// Coefficients at `lambda`, linearly interpolated for tabulated schedules.
    pub fn coefficients_at(&self, lambda: f64) -> Result<[f64; 8]> {
        match self {
            HamiltonianSchedule::Constant(h) => Ok(*h),
            HamiltonianSchedule::Tabulated { lambdas, coefficients } => {
                let (min, max) = (lambdas[0], *lambdas.last().expect("len >= 2"));
                if lambda < min - 1e-12 || lambda > max + 1e-12 {
                    return Err(Error::OutOfDomain { lambda, min, max });
                }
                let lambda = lambda.clamp(min, max);
                let seg = match lambdas.binary_search_by(|x| x.partial_cmp(&lambda).expect("finite")) {
                    Ok(i) => return Ok(coefficients[i]),
                    Err(i) => (i.max(1) - 1).min(lambdas.len() - 2),
                };
                let (l0, l1) = (lambdas[seg], lambdas[seg + 1]);
                let w = (lambda - l0) / (l1 - l0);
                let mut out = [0.0; 8];
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (1.0 - w) * coefficients[seg][i] + w * coefficients[seg + 1][i];
                }
                Ok(out)
            }
        }
    }
}

/// `H(λ) = Σ_{i=1..8} h_i(λ) B_i`: Hermitian and traceless by construction.
pub fn hamiltonian_at(schedule: &HamiltonianSchedule, lambda: f64) -> Result<ComplexMatrix> {
    let h = schedule.coefficients_at(lambda)?;
    let basis = operator_basis();
    let mut out = ComplexMatrix::zeros(3);
    for (i, &hi) in h.iter().enumerate() {
        if hi != 0.0 {
            out = out.add(&basis[i + 1].scaled_re(hi));
        }
    }
    Ok(out)
}

/// Propagator samples on a uniform grid starting at λ = 0.
#[derive(Clone, Debug)]
pub struct PropagatorSolution {
    grid: Vec<f64>,
    unitaries: Vec<ComplexMatrix>,
}

impl PropagatorSolution {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn unitary(&self, index: usize) -> &ComplexMatrix {
        &self.unitaries[index]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn final_unitary(&self) -> &ComplexMatrix {
        self.unitaries.last().expect("grid starts at 0")
    }

    /// Largest `‖V†V - 1‖_max` over the grid.
    pub fn unitarity_defect(&self) -> f64 {
        let one = ComplexMatrix::identity(3);
        self.unitaries
            .iter()
            .map(|v| v.adjoint().mul(v).sub(&one).max_norm())
            .fold(0.0, f64::max)
    }
}

/// Integrate `i dV/dλ = H(λ) V` from the identity up to `lambda_max`.
///
/// The requested step is rounded to a uniform grid that hits `lambda_max`
/// exactly; each step applies the exact exponential of the midpoint
/// generator. Aborts if a grid point violates the unitarity gate.
pub fn evolve_propagator(
    schedule: &HamiltonianSchedule,
    lambda_max: f64,
    step: f64,
) -> Result<PropagatorSolution> {
    assert!(lambda_max > 0.0 && step > 0.0, "lambda_max and step must be positive");
    let n_steps = ((lambda_max / step).round() as usize).max(1);
    let delta = lambda_max / n_steps as f64;

    let one = ComplexMatrix::identity(3);
    let mut grid = Vec::with_capacity(n_steps + 1);
    let mut unitaries = Vec::with_capacity(n_steps + 1);
    grid.push(0.0);
    unitaries.push(one.clone());

    let mut v = one.clone();
    for i in 0..n_steps {
        let lambda = i as f64 * delta;
        let h_mid = hamiltonian_at(schedule, lambda + delta / 2.0)?;
        let step_u = unitary_from_generator(&h_mid, delta, 1e-10)?;
        v = step_u.mul(&v);
        let lambda_next = (i + 1) as f64 * delta;
        let defect = v.adjoint().mul(&v).sub(&one).max_norm();
        if defect > UNITARITY_GATE {
            return Err(Error::UnitarityLost {
                lambda: lambda_next,
                defect,
                gate: UNITARITY_GATE,
            });
        }
        grid.push(lambda_next);
        unitaries.push(v.clone());
    }
    Ok(PropagatorSolution { grid, unitaries })
}

/// Diagnostics accumulated along an evolution.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvolutionReport {
    /// Max over the grid of the eigenvalue deviation from λ = 0.
    pub spectrum_drift: f64,
    /// Max central-difference estimate of `|trace(dF/dλ)|` at interior points.
    pub trace_derivative_residual: f64,
    /// Max `‖V†V - 1‖_max` over the grid.
    pub unitarity_defect: f64,
}

/// Evolve a source matrix: `F(λ) = V(λ) F(0) V†(λ)` on the grid, along with
/// the diagnostics that certify the evolution stayed unitary (constant
/// spectrum, traceless derivative).
pub fn evolve_source(
    f0: &SourceState,
    schedule: &HamiltonianSchedule,
    lambda_max: f64,
    step: f64,
) -> Result<(Vec<(f64, SourceState)>, EvolutionReport)> {
    let propagator = evolve_propagator(schedule, lambda_max, step)?;
    let mut trajectory = Vec::with_capacity(propagator.len());
    for (i, &lambda) in propagator.grid().iter().enumerate() {
        let v = propagator.unitary(i);
        let f = v.mul(f0.matrix()).mul(&v.adjoint()).symmetrized();
        trajectory.push((lambda, SourceState::new(f)?));
    }
    let h = propagator.grid()[1] - propagator.grid()[0];
    let mut report = evolution_diagnostics(&trajectory, h)?;
    report.unitarity_defect = propagator.unitarity_defect();
    Ok((trajectory, report))
}

/// Evolve a pure state: `ψ(λ) = V(λ) ψ0`. The outer product `ψψ†` follows the
/// same trajectory as [`evolve_source`] started from it.
pub fn evolve_pure_state(
    psi0: &[C64],
    schedule: &HamiltonianSchedule,
    lambda_max: f64,
    step: f64,
) -> Result<Vec<(f64, Vec<C64>)>> {
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    let propagator = evolve_propagator(schedule, lambda_max, step)?;
    Ok(propagator
        .grid()
        .iter()
        .enumerate()
        .map(|(i, &lambda)| (lambda, propagator.unitary(i).mul_vec(psi0)))
        .collect())
}

/// Spectrum drift and traceless-derivative residual of a trajectory sampled
/// with uniform spacing `h` (central differences at interior points).
pub fn evolution_diagnostics(
    trajectory: &[(f64, SourceState)],
    h: f64,
) -> Result<EvolutionReport> {
    if trajectory.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: trajectory.len() });
    }
    let reference = trajectory[0].1.matrix().eig_hermitian(1e-9)?.eigenvalues;
    let mut spectrum_drift = 0.0_f64;
    for (_, f) in trajectory.iter().skip(1) {
        let eig = f.matrix().eig_hermitian(1e-9)?.eigenvalues;
        for (got, want) in eig.iter().zip(&reference) {
            spectrum_drift = spectrum_drift.max((got - want).abs());
        }
    }
    let mut trace_derivative_residual = 0.0_f64;
    for window in trajectory.windows(3) {
        let forward = window[2].1.matrix().trace();
        let backward = window[0].1.matrix().trace();
        let derivative = (forward - backward) / C64::new(2.0 * h, 0.0);
        trace_derivative_residual = trace_derivative_residual.max(derivative.norm());
    }
    Ok(EvolutionReport { spectrum_drift, trace_derivative_residual, unitarity_defect: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ComplexMatrix;
    use crate::spin::{spin1_matrices, spin_projection, Direction};
    use crate::testutil::{max_dev, SplitMix64};
    use crate::projectors::beam_projectors;

    const PI: f64 = std::f64::consts::PI;

    /// h_3 = sqrt(2) makes H = Sz.
    fn sz_schedule() -> HamiltonianSchedule {
        let mut h = [0.0; 8];
        h[2] = std::f64::consts::SQRT_2;
        HamiltonianSchedule::Constant(h)
    }

    /// h_2 = sqrt(2) makes H = Sy.
    fn sy_schedule() -> HamiltonianSchedule {
        let mut h = [0.0; 8];
        h[1] = std::f64::consts::SQRT_2;
        HamiltonianSchedule::Constant(h)
    }

    #[test]
    fn hamiltonian_from_coefficients() {
        let s = spin1_matrices();
        let h = hamiltonian_at(&sz_schedule(), 0.3).unwrap();
        assert!(max_dev(&h, &s.sz) <= 1e-15);

        let zero = hamiltonian_at(&HamiltonianSchedule::Constant([0.0; 8]), 0.0).unwrap();
        assert!(zero.max_norm() == 0.0);

        let mut rng = SplitMix64::new(3);
        for _ in 0..10 {
            let mut h = [0.0; 8];
            for v in &mut h {
                *v = rng.next_normal();
            }
            let m = hamiltonian_at(&HamiltonianSchedule::Constant(h), 0.0).unwrap();
            assert!(m.trace().norm() <= 1e-13);
            assert!(m.hermiticity_error() <= 1e-14);
        }
    }

    #[test]
    fn tabulated_schedule_interpolates_and_gates_domain() {
        let rows = vec![[0.0; 8], [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]];
        let s = HamiltonianSchedule::tabulated(vec![0.0, 1.0], rows).unwrap();
        let mid = s.coefficients_at(0.25).unwrap();
        assert!((mid[0] - 0.25).abs() <= 1e-15);
        assert!(matches!(s.coefficients_at(2.0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(s.coefficients_at(-0.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn propagator_constant_generator_closed_form() {
        let sol = evolve_propagator(&sz_schedule(), PI, 1e-3 * PI).unwrap();
        assert_eq!(sol.grid()[0], 0.0);
        assert!(max_dev(sol.unitary(0), &ComplexMatrix::identity(3)) == 0.0);
        let v = sol.final_unitary();
        // diag(e^{-i pi}, 1, e^{i pi}) = diag(-1, 1, -1)
        let expect = ComplexMatrix::diagonal(&[-1.0, 1.0, -1.0]);
        assert!(max_dev(v, &expect) <= 1e-11);
        assert!(sol.unitarity_defect() <= 1e-12);

        // exactness for constant H: halving the step changes nothing
        let coarse = evolve_propagator(&sz_schedule(), 1.0, 0.5).unwrap();
        let fine = evolve_propagator(&sz_schedule(), 1.0, 0.25).unwrap();
        assert!(max_dev(coarse.final_unitary(), fine.final_unitary()) <= 1e-12);
    }

    #[test]
    fn propagator_composition() {
        // piecewise-constant schedule aligned to the step grid
        let rows = vec![
            [1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0],
        ];
        let s = HamiltonianSchedule::tabulated(vec![0.0, 1.0, 1.0 + 1e-9, 2.0], rows).unwrap();
        let full = evolve_propagator(&s, 2.0, 0.01).unwrap();

        // second half transported back by the first half
        let first = evolve_propagator(&s, 1.0, 0.01).unwrap();
        let shifted = HamiltonianSchedule::tabulated(
            vec![0.0, 1e-9, 1.0],
            vec![
                [1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
                [0.0, 2.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0],
                [0.0, 2.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        let second = evolve_propagator(&shifted, 1.0, 0.01).unwrap();
        let composed = second.final_unitary().mul(first.final_unitary());
        assert!(max_dev(&composed, full.final_unitary()) <= 1e-10);
    }

    #[test]
    fn evolve_source_commuting_case() {
        let f0 = SourceState::new(ComplexMatrix::diagonal(&[1.0, 0.0, 0.0])).unwrap();
        let (traj, report) = evolve_source(&f0, &sz_schedule(), 2.0, 0.01).unwrap();
        for (_, f) in &traj {
            assert!(max_dev(f.matrix(), f0.matrix()) <= 1e-12);
        }
        assert!(report.spectrum_drift <= 1e-10);
        assert!(report.trace_derivative_residual <= 1e-10);
        assert!(report.unitarity_defect <= 1e-10);
    }

    #[test]
    fn evolve_source_rotates_filter_state() {
        // H = Sy turns the +z filter into the filter along (sin λ, 0, cos λ)
        let ps = beam_projectors(Direction::EZ);
        let f0 = SourceState::new(ps.for_outcome(1.0).unwrap().clone()).unwrap();
        let (traj, report) = evolve_source(&f0, &sy_schedule(), 1.5, 1e-3).unwrap();
        for &(lambda, ref f) in traj.iter().step_by(150) {
            let w = Direction::new(lambda.sin(), 0.0, lambda.cos()).unwrap();
            let expect = beam_projectors(w);
            assert!(
                max_dev(f.matrix(), expect.for_outcome(1.0).unwrap()) <= 1e-9,
                "lambda = {lambda}"
            );
        }
        assert!(report.spectrum_drift <= 1e-10);
    }

    #[test]
    fn evolve_source_preserves_spectrum() {
        let mut rng = SplitMix64::new(13);
        let f0 = crate::testutil::rand_source(&mut rng, 3);
        let mut h = [0.0; 8];
        for v in &mut h {
            *v = rng.next_normal();
        }
        let schedule = HamiltonianSchedule::Constant(h);
        let (traj, report) = evolve_source(&f0, &schedule, 1.0, 1e-3).unwrap();
        let initial = f0.matrix().eig_hermitian(1e-10).unwrap().eigenvalues;
        for (_, f) in traj.iter().step_by(100) {
            let eig = f.matrix().eig_hermitian(1e-10).unwrap().eigenvalues;
            for (got, want) in eig.iter().zip(&initial) {
                assert!((got - want).abs() <= 1e-10);
            }
        }
        assert!(report.spectrum_drift <= 1e-10);
        assert!((traj.last().unwrap().1.matrix().trace().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pure_state_matches_density_trajectory() {
        let s = spin1_matrices();
        let _ = s;
        let psi0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let states = evolve_pure_state(&psi0, &sz_schedule(), 1.0, 1e-3).unwrap();
        for (lambda, psi) in states.iter().step_by(200) {
            // eigenstate picks up a phase e^{-i lambda} only
            let expect = C64::new(lambda.cos(), -lambda.sin());
            assert!((psi[0] - expect).norm() <= 1e-11);
            assert!(psi[1].norm() <= 1e-12 && psi[2].norm() <= 1e-12);
        }

        // Sx has integer spectrum: period 2 pi
        let mut h = [0.0; 8];
        h[0] = std::f64::consts::SQRT_2; // H = Sx
        let schedule = HamiltonianSchedule::Constant(h);
        let states = evolve_pure_state(&psi0, &schedule, 2.0 * PI, 1e-3).unwrap();
        let last = &states.last().unwrap().1;
        for (a, b) in last.iter().zip(&psi0) {
            assert!((a - b).norm() <= 1e-10);
        }

        // random state: outer product equals the evolved density matrix
        let mut rng = SplitMix64::new(29);
        let mut psi: Vec<C64> =
            (0..3).map(|_| C64::new(rng.next_normal(), rng.next_normal())).collect();
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut psi {
            *z /= norm;
        }
        let mut h = [0.0; 8];
        for v in &mut h {
            *v = rng.next_normal();
        }
        let schedule = HamiltonianSchedule::Constant(h);
        let f0 = SourceState::pure(&psi).unwrap();
        let states = evolve_pure_state(&psi, &schedule, 1.0, 1e-3).unwrap();
        let (traj, _) = evolve_source(&f0, &schedule, 1.0, 1e-3).unwrap();
        for ((_, psi_l), (_, f_l)) in states.iter().zip(&traj).step_by(100) {
            let outer = ComplexMatrix::from_fn(3, |i, j| psi_l[i] * psi_l[j].conj());
            assert!(max_dev(&outer, f_l.matrix()) <= 1e-10);
            let norm: f64 = psi_l.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn pure_state_requires_normalization() {
        let psi = [C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!(matches!(
            evolve_pure_state(&psi, &sz_schedule(), 1.0, 0.1),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn adding_identity_component_leaves_source_unchanged() {
        // conjugating by exp(-i lambda (H + c 1)) only shifts a global phase
        let mut rng = SplitMix64::new(31);
        let f0 = crate::testutil::rand_source(&mut rng, 3);
        let mut h = [0.0; 8];
        for v in &mut h {
            *v = rng.next_normal();
        }
        let basis = operator_basis();
        let plain = hamiltonian_at(&HamiltonianSchedule::Constant(h), 0.0).unwrap();
        let shifted = plain.add(&basis[0].scaled_re(2.5));

        let lambda = 0.8;
        let u_plain = unitary_from_generator(&plain, lambda, 1e-10).unwrap();
        let u_shift = unitary_from_generator(&shifted, lambda, 1e-10).unwrap();
        let f_plain = u_plain.mul(f0.matrix()).mul(&u_plain.adjoint());
        let f_shift = u_shift.mul(f0.matrix()).mul(&u_shift.adjoint());
        assert!(max_dev(&f_plain, &f_shift) <= 1e-11);
    }

    #[test]
    fn diagnostics_flag_non_unitary_trajectory() {
        let fa = SourceState::new(ComplexMatrix::diagonal(&[1.0, 0.0, 0.0])).unwrap();
        let fb = SourceState::new(ComplexMatrix::diagonal(&[0.5, 0.3, 0.2])).unwrap();
        let traj: Vec<(f64, SourceState)> = (0..5)
            .map(|i| {
                let w = i as f64 / 4.0;
                let m = fa.matrix().scaled_re(1.0 - w).add(&fb.matrix().scaled_re(w));
                (w, SourceState::new(m).unwrap())
            })
            .collect();
        let report = evolution_diagnostics(&traj, 0.25).unwrap();
        assert!(report.spectrum_drift > 0.1);
        // trace stays 1 along the interpolation
        assert!(report.trace_derivative_residual <= 1e-12);

        assert!(matches!(
            evolution_diagnostics(&traj[..2], 0.25),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn step_halving_second_order() {
        // smooth tabulated schedule: error(step) ~ step^2, ratio ~ 4
        let n = 33;
        let lambdas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let rows: Vec<[f64; 8]> = lambdas
            .iter()
            .map(|&l| {
                let mut h = [0.0; 8];
                h[0] = (2.0 * l).sin();
                h[2] = 1.0 + l * l;
                h[4] = (3.0 * l).cos();
                h
            })
            .collect();
        let s = HamiltonianSchedule::tabulated(lambdas, rows).unwrap();
        let reference = evolve_propagator(&s, 1.0, 1.0 / 4096.0).unwrap();
        let coarse = evolve_propagator(&s, 1.0, 1.0 / 32.0).unwrap();
        let fine = evolve_propagator(&s, 1.0, 1.0 / 64.0).unwrap();
        let err_coarse = max_dev(coarse.final_unitary(), reference.final_unitary());
        let err_fine = max_dev(fine.final_unitary(), reference.final_unitary());
        let ratio = err_coarse / err_fine;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn propagator_consistent_with_moment_transport() {
        // trace(F(λ) (a·S)^p) = trace(F0 V†(λ) (a·S)^p V(λ))
        let mut rng = SplitMix64::new(37);
        let f0 = crate::testutil::rand_source(&mut rng, 3);
        let mut h = [0.0; 8];
        for v in &mut h {
            *v = rng.next_normal();
        }
        let schedule = HamiltonianSchedule::Constant(h);
        let (traj, _) = evolve_source(&f0, &schedule, 1.0, 1e-3).unwrap();
        let prop = evolve_propagator(&schedule, 1.0, 1e-3).unwrap();
        let a = crate::testutil::rand_direction(&mut rng);
        let k = spin_projection(a);
        let last = prop.len() - 1;
        let v = prop.unitary(last);
        for p in 1..3u32 {
            let lhs = traj[last].1.matrix().mul(&k.pow(p)).trace().re;
            let transported = v.adjoint().mul(&k.pow(p)).mul(v);
            let rhs = f0.matrix().mul(&transported).trace().re;
            assert!((lhs - rhs).abs() <= 1e-11);
        }
    }
}
