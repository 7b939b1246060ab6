//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime (run with `--nocapture` to see them).

use std::time::Instant;

use sgsim_core::dynamics::{
    evolve_propagator, evolve_pure_state, evolve_source, HamiltonianSchedule,
};
use sgsim_core::experiment::{
    counterexample_frequencies, double_sg_frequencies, eprb_frequencies, eprb_moments,
    frequencies_from_moments, moments_from_events, relative_frequencies, sample_events,
    ExperimentConfig, ExperimentKind, FrequencyTable, SingleFrequencies, OUTCOMES, PAIR_OUTCOMES,
};
use sgsim_core::matrix::{C64, ComplexMatrix};
use sgsim_core::projectors::{beam_projectors, lagrange_projectors, reconstruct_observable};
use sgsim_core::rng::SplitMix64;
use sgsim_core::spin::{
    axis_angle_between, rodrigues_rotate, spin_projection, Direction,
};
use sgsim_core::testutil::{max_dev, rand_direction, rand_source};
use sgsim_core::tomography::{
    canonical_design, canonical_pair_design, reconstruct_pair_source, reconstruct_source,
    separability_residual, singlet_source, Observation, PairObservation, SourceState,
};

/// Separability threshold for the r = 4 counterexample on the 25-pair
/// design, frozen from the pre-build brute-force fit (independent
/// least-squares solve plus eigenvalue clipping): unconstrained residual
/// 2.19e-2, PSD-enforced residual 8.17e-2. Any correct fit must sit above
/// this line.
const TAU: f64 = 1e-2;

fn pass(criterion: u32, what: &str, started: Instant, budget_ms: u128) {
    let elapsed = started.elapsed().as_millis();
    println!("PASS criterion {criterion}: {what} ({elapsed} ms)");
    assert!(
        elapsed < budget_ms,
        "criterion {criterion} exceeded its runtime budget: {elapsed} ms >= {budget_ms} ms"
    );
}

fn isotropic(dim: usize) -> SourceState {
    SourceState::new(ComplexMatrix::identity(dim).scaled_re(1.0 / dim as f64)).unwrap()
}

/// A pair (a, b) with a·b equal to `x` up to round-off.
fn pair_with_overlap(rng: &mut SplitMix64, x: f64) -> (Direction, Direction) {
    let a = rand_direction(rng);
    let b = rodrigues_rotate(a, a.canonical_perpendicular(), x.clamp(-1.0, 1.0).acos());
    (a, b)
}

#[test]
fn criterion_1_double_sg_closed_forms() {
    let started = Instant::now();
    let f = isotropic(3);
    let mut rng = SplitMix64::new(0xC1);
    for i in 0..12 {
        let x = -1.0 + 2.0 * i as f64 / 11.0;
        let (a, b) = pair_with_overlap(&mut rng, x);
        let x = a.dot(&b);
        let table = double_sg_frequencies(&f, a, b).unwrap();
        for &(k, l) in PAIR_OUTCOMES.iter() {
            let expect = if k == l && k != 0 {
                (1.0 + x) * (1.0 + x) / 12.0
            } else if k == 0 && l == 0 {
                x * x / 3.0
            } else if k != 0 && l != 0 {
                (1.0 - x) * (1.0 - x) / 12.0
            } else {
                (1.0 - x * x) / 6.0
            };
            assert!(
                (table.get(k, l) - expect).abs() <= 1e-12,
                "entry ({k},{l}) at a.b = {x}"
            );
        }
    }
    pass(1, "double-SG tables match the isotropic closed forms", started, 1000);
}

#[test]
fn criterion_2_singlet_moments() {
    let started = Instant::now();
    let f = singlet_source();
    let mut rng = SplitMix64::new(0xC2);
    for _ in 0..50 {
        let a = rand_direction(&mut rng);
        let b = rand_direction(&mut rng);
        let m = eprb_moments(&f, a, b).unwrap();
        let ab = a.dot(&b);
        assert!((m.get(1, 1) + 2.0 / 3.0 * ab).abs() <= 1e-12);
        assert!((m.get(2, 2) - (1.0 + ab * ab) / 3.0).abs() <= 1e-12);
        for &(p, q) in &[(1usize, 0usize), (0, 1), (2, 1), (1, 2)] {
            assert!(m.get(p, q).abs() <= 1e-12);
        }
    }
    // invariance under simultaneous rotations of both settings
    for _ in 0..20 {
        let a = rand_direction(&mut rng);
        let b = rand_direction(&mut rng);
        let axis = rand_direction(&mut rng);
        let phi = std::f64::consts::TAU * rng.next_f64();
        let (ra, rb) = (rodrigues_rotate(a, axis, phi), rodrigues_rotate(b, axis, phi));
        let m0 = eprb_moments(&f, a, b).unwrap();
        let m1 = eprb_moments(&f, ra, rb).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                assert!((m0.get(p, q) - m1.get(p, q)).abs() <= 1e-10);
            }
        }
    }
    pass(2, "singlet moments and rotation invariance", started, 1000);
}

#[test]
fn criterion_3_projector_dual_construction() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC3);
    for _ in 0..100 {
        let a = rand_direction(&mut rng);
        let beam = beam_projectors(a);
        let lagrange = lagrange_projectors(&spin_projection(a), 1e-10).unwrap();
        let mut sum = ComplexMatrix::zeros(3);
        for ((ob, pb), (ol, pl)) in beam.iter().zip(lagrange.iter()) {
            assert!((ob - ol).abs() <= 1e-11);
            assert!(pb.sub(pl).max_norm() <= 1e-11);
            assert!((pb.trace().re - 1.0).abs() <= 1e-11);
            sum = sum.add(pb);
        }
        assert!(max_dev(&sum, &ComplexMatrix::identity(3)) <= 1e-11);
        for i in 0..3 {
            for j in 0..3 {
                let prod = beam.projector(i).mul(beam.projector(j));
                let expect =
                    if i == j { beam.projector(i).clone() } else { ComplexMatrix::zeros(3) };
                assert!(max_dev(&prod, &expect) <= 1e-11);
            }
        }
        let (first, second) = reconstruct_observable(&beam);
        let k = spin_projection(a);
        assert!(max_dev(&first, &k) <= 1e-11);
        assert!(max_dev(&second, &k.mul(&k)) <= 1e-11);
    }
    pass(3, "closed-form and Vandermonde projectors agree", started, 1000);
}

#[test]
fn criterion_4_rotation_identity() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC4);
    let mut pairs: Vec<(Direction, Direction)> = Vec::with_capacity(100);
    for _ in 0..92 {
        pairs.push((rand_direction(&mut rng), rand_direction(&mut rng)));
    }
    // degenerate and near-degenerate pairs
    for _ in 0..2 {
        let u = rand_direction(&mut rng);
        let flip = Direction::new(-u.x(), -u.y(), -u.z()).unwrap();
        let perp = u.canonical_perpendicular();
        pairs.push((u, u));
        pairs.push((u, flip));
        pairs.push((u, rodrigues_rotate(u, perp, 1e-8)));
        pairs.push((u, rodrigues_rotate(flip, perp, 1e-8)));
    }
    assert_eq!(pairs.len(), 100);
    for (u, w) in pairs {
        let aa = axis_angle_between(u, w);
        let rot =
            sgsim_core::matrix::unitary_from_generator(&spin_projection(aa.axis), aa.angle, 1e-10)
                .unwrap();
        let conjugated = rot.mul(&spin_projection(u)).mul(&rot.adjoint());
        let dev = max_dev(&conjugated, &spin_projection(w));
        assert!(dev <= 1e-10, "u = {u:?}, w = {w:?}: deviation {dev:.3e}");
    }
    pass(4, "spin-space rotation reproduces w.S for 100 pairs", started, 1000);
}

#[test]
fn criterion_5_tomography_round_trip() {
    let started = Instant::now();
    let design = canonical_design();
    let mut rng = SplitMix64::new(0xC5);

    // exact moments
    for _ in 0..20 {
        let f = rand_source(&mut rng, 3);
        let observations: Vec<Observation> = design
            .iter()
            .map(|&d| {
                let k = spin_projection(d);
                Observation {
                    direction: d,
                    m1: f.matrix().mul(&k).trace().re,
                    m2: f.matrix().mul(&k.mul(&k)).trace().re,
                }
            })
            .collect();
        let rec = reconstruct_source(&observations).unwrap();
        let err = rec.source.matrix().sub(f.matrix()).frobenius_norm();
        assert!(err <= 1e-9, "exact recovery error {err:.3e}");
    }

    // sampled moments at N = 1e6 per direction, fixed seeds
    for trial in 0..20u64 {
        let f = rand_source(&mut rng, 3);
        let observations: Vec<Observation> = design
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let freq = sgsim_core::experiment::single_sg_frequencies(&f, d).unwrap();
                let config = ExperimentConfig::new(
                    ExperimentKind::SingleSg,
                    d,
                    None,
                    1_000_000,
                    1_000 * (trial + 1) + i as u64,
                )
                .unwrap();
                let log = sample_events(config, &FrequencyTable::Single(freq)).unwrap();
                let m = moments_from_events(&log).unwrap();
                let m = m.as_single().unwrap();
                Observation { direction: d, m1: m.m1, m2: m.m2 }
            })
            .collect();
        let rec = reconstruct_source(&observations).unwrap();
        let err = rec.source.matrix().sub(f.matrix()).frobenius_norm();
        assert!(err <= 0.05, "sampled recovery error {err:.3e}");
    }

    // pair version: exact singlet moments over the 25-pair design
    let singlet = singlet_source();
    let pairs = canonical_pair_design();
    let observations: Vec<PairObservation> = pairs
        .iter()
        .map(|&(a, b)| PairObservation { a, b, moments: eprb_moments(&singlet, a, b).unwrap() })
        .collect();
    let rec = reconstruct_pair_source(&observations).unwrap();
    assert!(max_dev(rec.source.matrix(), singlet.matrix()) <= 1e-9);

    pass(5, "tomography round-trips (exact, sampled, pair)", started, 30_000);
}

#[test]
fn criterion_6_sampling_statistics() {
    let started = Instant::now();
    let n = 1_000_000u64;
    let freq = SingleFrequencies::from_values([1.0 / 3.0; 3]).unwrap();
    let config =
        ExperimentConfig::new(ExperimentKind::SingleSg, Direction::EZ, None, n, 42).unwrap();
    let log = sample_events(config, &FrequencyTable::Single(freq)).unwrap();
    let table = relative_frequencies(&log).unwrap();
    let table = table.as_single().unwrap();
    let bound = 5.0 * ((1.0 / 3.0) * (2.0 / 3.0) / n as f64).sqrt();
    for k in OUTCOMES {
        assert!(
            (table.get(k) - 1.0 / 3.0).abs() <= bound,
            "empirical f({k}) = {} outside 5-sigma band {bound:.3e}",
            table.get(k)
        );
    }
    let moments = moments_from_events(&log).unwrap();
    let inverted = frequencies_from_moments(moments.as_single().unwrap()).unwrap();
    assert_eq!(table.values(), inverted.values(), "moment inversion must be bit-exact");
    pass(6, "1e6-event sampling within 5-sigma, inversion bit-exact", started, 5000);
}

#[test]
fn criterion_7_separability_discrimination() {
    let started = Instant::now();
    let pairs = canonical_pair_design();
    let mut rng = SplitMix64::new(0xC7);

    for _ in 0..5 {
        let f = rand_source(&mut rng, 9);
        let dataset: Vec<_> = pairs
            .iter()
            .map(|&(a, b)| ((a, b), eprb_frequencies(&f, a, b).unwrap()))
            .collect();
        let report = separability_residual(&dataset).unwrap();
        assert!(report.residual <= 1e-8, "quantum dataset residual {:.3e}", report.residual);
    }

    let counterexample: Vec<_> = pairs
        .iter()
        .map(|&(a, b)| ((a, b), counterexample_frequencies(a, b, 4)))
        .collect();
    let report = separability_residual(&counterexample).unwrap();
    assert!(
        report.residual >= TAU,
        "counterexample residual {:.3e} fell below tau = {TAU}",
        report.residual
    );

    let single_pair = vec![counterexample[7].clone()];
    let report = separability_residual(&single_pair).unwrap();
    assert!(report.residual <= 1e-10, "single-pair residual {:.3e}", report.residual);

    pass(7, "separability separates quantum from r=4 data", started, 60_000);
}

#[test]
fn criterion_8_dynamics() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC8);

    // constant H = c (u.S): propagator matches the closed-form exponential
    // exp(-i x K) = 1 - i sin(x) K + (cos(x) - 1) K^2 for spectrum (1,0,-1)
    for _ in 0..3 {
        let u = rand_direction(&mut rng);
        let strength = 0.5 + rng.next_f64();
        let r2 = std::f64::consts::SQRT_2;
        let mut h = [0.0; 8];
        h[0] = r2 * strength * u.x();
        h[1] = r2 * strength * u.y();
        h[2] = r2 * strength * u.z();
        let schedule = HamiltonianSchedule::Constant(h);
        let lambda_max = 1.7;
        let sol = evolve_propagator(&schedule, lambda_max, 1e-3 * lambda_max).unwrap();
        let k = spin_projection(u);
        let x = strength * lambda_max;
        let closed = ComplexMatrix::identity(3)
            .add(&k.scaled(C64::new(0.0, -x.sin())))
            .add(&k.mul(&k).scaled_re(x.cos() - 1.0));
        assert!(max_dev(sol.final_unitary(), &closed) <= 1e-11);
    }

    // unitary trajectory diagnostics on a random source
    let f0 = rand_source(&mut rng, 3);
    let mut h = [0.0; 8];
    for v in &mut h {
        *v = rng.next_normal();
    }
    let schedule = HamiltonianSchedule::Constant(h);
    let (_, report) = evolve_source(&f0, &schedule, 1.0, 1e-3).unwrap();
    assert!(report.spectrum_drift <= 1e-10);
    assert!(report.trace_derivative_residual <= 1e-10);

    // commuting case: H = Sz leaves the +z filter fixed
    let mut hz = [0.0; 8];
    hz[2] = std::f64::consts::SQRT_2;
    let f0 = SourceState::new(ComplexMatrix::diagonal(&[1.0, 0.0, 0.0])).unwrap();
    let (traj, _) = evolve_source(&f0, &HamiltonianSchedule::Constant(hz), 2.0, 1e-2).unwrap();
    for (_, f) in &traj {
        assert!(max_dev(f.matrix(), f0.matrix()) <= 1e-12);
    }

    // pure-state / density-matrix equivalence
    let mut psi: Vec<C64> = (0..3).map(|_| C64::new(rng.next_normal(), rng.next_normal())).collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut psi {
        *z /= norm;
    }
    let f0 = SourceState::pure(&psi).unwrap();
    let states = evolve_pure_state(&psi, &schedule, 1.0, 1e-3).unwrap();
    let (traj, _) = evolve_source(&f0, &schedule, 1.0, 1e-3).unwrap();
    for ((_, psi_l), (_, f_l)) in states.iter().zip(&traj).step_by(50) {
        let outer = ComplexMatrix::from_fn(3, |i, j| psi_l[i] * psi_l[j].conj());
        assert!(max_dev(&outer, f_l.matrix()) <= 1e-10);
    }

    // step-halving convergence ratio ~ 4 for a smooth tabulated schedule
    let n = 65;
    let lambdas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let rows: Vec<[f64; 8]> = lambdas
        .iter()
        .map(|&l| {
            let mut h = [0.0; 8];
            h[0] = (2.0 * l).sin();
            h[2] = 1.0 + l * l;
            h[5] = 0.5 * (3.0 * l).cos();
            h
        })
        .collect();
    let schedule = HamiltonianSchedule::tabulated(lambdas, rows).unwrap();
    let reference = evolve_propagator(&schedule, 1.0, 1.0 / 4096.0).unwrap();
    let coarse = evolve_propagator(&schedule, 1.0, 1.0 / 32.0).unwrap();
    let fine = evolve_propagator(&schedule, 1.0, 1.0 / 64.0).unwrap();
    let ratio = max_dev(coarse.final_unitary(), reference.final_unitary())
        / max_dev(fine.final_unitary(), reference.final_unitary());
    assert!((3.0..=5.0).contains(&ratio), "step-halving ratio {ratio}");

    pass(8, "propagator, diagnostics, and convergence order", started, 10_000);
}

#[test]
fn criterion_9_counterexample_marginals() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC9);
    for r in [2u32, 3, 4] {
        for _ in 0..50 {
            let a = rand_direction(&mut rng);
            let b = rand_direction(&mut rng);
            let table = counterexample_frequencies(a, b, r);
            assert!(table.values().iter().all(|&v| v >= 0.0));
            let sum: f64 = table.values().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-14);
            for k in OUTCOMES {
                assert!((table.marginal_first(k) - 1.0 / 3.0).abs() <= 1e-14);
            }
        }
    }
    pass(9, "counterexample tables keep exact 1/3 marginals", started, 1000);
}
