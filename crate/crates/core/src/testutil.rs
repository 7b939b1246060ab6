//! Random fixtures shared by unit, property, and acceptance tests.

#![doc(hidden)]

pub use crate::rng::SplitMix64;

use crate::matrix::{C64, ComplexMatrix};
use crate::spin::Direction;
use crate::tomography::SourceState;

/// Uniform random unit vector.
pub fn rand_direction(rng: &mut SplitMix64) -> Direction {
    loop {
        let (x, y, z) = (rng.next_normal(), rng.next_normal(), rng.next_normal());
        let n = (x * x + y * y + z * z).sqrt();
        if n > 1e-3 {
            return Direction::new(x / n, y / n, z / n).expect("normalized input");
        }
    }
}

/// Random Hermitian matrix with entries of order one.
pub fn rand_hermitian(rng: &mut SplitMix64, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| C64::new(rng.next_normal(), rng.next_normal()));
    g.add(&g.adjoint()).scaled_re(0.5)
}

/// Random valid source matrix: `X X† / trace`, Hermitian, PSD, trace one.
pub fn rand_source(rng: &mut SplitMix64, dim: usize) -> SourceState {
    let x = ComplexMatrix::from_fn(dim, |_, _| C64::new(rng.next_normal(), rng.next_normal()));
    let f = x.mul(&x.adjoint());
    let tr = f.trace().re;
    SourceState::new(f.scaled_re(1.0 / tr)).expect("construction is valid by design")
}

/// Largest entry-wise deviation between two matrices.
pub fn max_dev(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.sub(b).max_norm()
}
