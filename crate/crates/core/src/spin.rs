//! Spin-1 operators, 3-space rotations, and their spin-space correspondence.
//!
//! The rotation machinery culminates in [`rotate_spin_projection`]: a rotation
//! taking the unit vector `u` to `w` in 3-space conjugates the projection
//! `u·S` into `w·S`.

use crate::error::{Error, Result};
use crate::matrix::{unitary_from_generator, C64, ComplexMatrix};

/// Tolerance on `|x² + y² + z² - 1|` accepted by [`Direction::new`];
/// inputs inside it are re-normalized before use.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Unit vector in 3-space: a magnet setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    pub const EX: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };
    pub const EY: Direction = Direction { x: 0.0, y: 1.0, z: 0.0 };
    pub const EZ: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };

    /// Validate and re-normalize. `NotUnit` when the norm is off by more than
    /// [`UNIT_NORM_TOL`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    /// Normalize an arbitrary non-zero vector.
    pub fn from_vector(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    fn cross(&self, other: &Direction) -> (f64, f64, f64) {
        (
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    /// Deterministic unit vector perpendicular to `self`: the normalized
    /// projection of `e_x` off `self`, falling back to `e_y` when `self` is
    /// nearly parallel to `e_x`.
    pub fn canonical_perpendicular(&self) -> Direction {
        let reference = if self.x.abs() > 0.9 { Self::EY } else { Self::EX };
        let along = self.dot(&reference);
        Direction::from_vector(
            reference.x - along * self.x,
            reference.y - along * self.y,
            reference.z - along * self.z,
        )
        .expect("reference chosen non-parallel")
    }
}

/// The three spin-1 matrices.
#[derive(Clone, Debug)]
pub struct SpinTriple {
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
}

/// Spin-1 matrices in the Sz eigenbasis.
///
/// `Sx = [[0,1,0],[1,0,1],[0,1,0]]/√2`, `Sy = [[0,-i,0],[i,0,-i],[0,i,0]]/√2`,
/// `Sz = diag(+1, 0, -1)`, satisfying `[Sx, Sy] = i Sz` and cyclic permutations.
pub fn spin1_matrices() -> SpinTriple {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sx = ComplexMatrix::from_real_rows(&[&[0.0, r, 0.0], &[r, 0.0, r], &[0.0, r, 0.0]]);
    let sy = ComplexMatrix::from_fn(3, |i, j| match (i, j) {
        (0, 1) | (1, 2) => C64::new(0.0, -r),
        (1, 0) | (2, 1) => C64::new(0.0, r),
        _ => C64::new(0.0, 0.0),
    });
    let sz = ComplexMatrix::diagonal(&[1.0, 0.0, -1.0]);
    SpinTriple { sx, sy, sz }
}

/// Projection `a·S` of the spin on the direction `a`. Hermitian with
/// eigenvalues (1, 0, -1) for every unit `a`.
pub fn spin_projection(a: Direction) -> ComplexMatrix {
    let s = spin1_matrices();
    s.sx.scaled_re(a.x())
        .add(&s.sy.scaled_re(a.y()))
        .add(&s.sz.scaled_re(a.z()))
}

/// Rotate `u` about `axis` by `phi` (Rodrigues' formula).
pub fn rodrigues_rotate(u: Direction, axis: Direction, phi: f64) -> Direction {
    let (cx, cy, cz) = axis.cross(&u);
    let (cos, sin) = (phi.cos(), phi.sin());
    let proj = axis.dot(&u) * (1.0 - cos);
    Direction::from_vector(
        u.x() * cos + cx * sin + axis.x() * proj,
        u.y() * cos + cy * sin + axis.y() * proj,
        u.z() * cos + cz * sin + axis.z() * proj,
    )
    .expect("rotation preserves the norm")
}

/// Rotation axis and angle.
#[derive(Clone, Copy, Debug)]
pub struct AxisAngle {
    pub axis: Direction,
    pub angle: f64,
}

/// The rotation taking `u` to `w`: axis `u×w / ‖u×w‖`, angle `arccos(u·w)`.
///
/// Degenerate cases use a fixed convention so the result is deterministic:
/// `u = w` gives angle 0 and `u = -w` gives angle pi, both with the canonical
/// perpendicular axis (any perpendicular axis realizes the rotation).
///
/// The angle is evaluated as `atan2(‖u×w‖, u·w)` and the axis is projected
/// exactly perpendicular to `u`; both are identities in exact arithmetic but
/// keep near-parallel and near-antiparallel pairs accurate to round-off
/// (arccos alone loses half the digits there).
pub fn axis_angle_between(u: Direction, w: Direction) -> AxisAngle {
    let (cx, cy, cz) = u.cross(&w);
    let sin_norm = (cx * cx + cy * cy + cz * cz).sqrt();
    let cos = u.dot(&w).clamp(-1.0, 1.0);
    if sin_norm < 1e-12 {
        let angle = if cos >= 0.0 { 0.0 } else { std::f64::consts::PI };
        return AxisAngle { axis: u.canonical_perpendicular(), angle };
    }
    let along = cx * u.x + cy * u.y + cz * u.z;
    AxisAngle {
        axis: Direction::from_vector(cx - along * u.x, cy - along * u.y, cz - along * u.z)
            .expect("non-degenerate cross product"),
        angle: sin_norm.atan2(cos),
    }
}

/// Conjugate `u·S` by the spin-space rotation that takes `u` to `w`, which
/// must reproduce `w·S`. The deviation from `spin_projection(w)` is checked
/// against `tol` and reported as `IdentityMismatch` if exceeded.
pub fn rotate_spin_projection(u: Direction, w: Direction, tol: f64) -> Result<ComplexMatrix> {
    let AxisAngle { axis, angle } = axis_angle_between(u, w);
    let generator = spin_projection(axis);
    let rotation = unitary_from_generator(&generator, angle, 1e-10)?;
    let rotated = rotation.mul(&spin_projection(u)).mul(&rotation.adjoint());
    let deviation = rotated.sub(&spin_projection(w)).max_norm();
    if deviation > tol {
        return Err(Error::IdentityMismatch { deviation, tolerance: tol });
    }
    Ok(rotated)
}

/// Orthonormal Hermitian basis of the 3x3 matrices under the trace inner
/// product: B0 = 1/√3, B1..B3 the normalized spin matrices, B4..B5 diagonal
/// quadratics, B6..B8 symmetrized products.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    elements: Vec<ComplexMatrix>,
}

/// The nine basis elements B0..B8.
pub fn operator_basis() -> OperatorBasis {
    let s = spin1_matrices();
    let one = ComplexMatrix::identity(3);
    let sx2 = s.sx.mul(&s.sx);
    let sz2 = s.sz.mul(&s.sz);
    let r2 = std::f64::consts::SQRT_2;
    let elements = vec![
        one.scaled_re(1.0 / 3.0_f64.sqrt()),
        s.sx.scaled_re(1.0 / r2),
        s.sy.scaled_re(1.0 / r2),
        s.sz.scaled_re(1.0 / r2),
        one.scaled_re(-(2.0_f64 / 3.0).sqrt()).add(&sx2.scaled_re((3.0_f64 / 2.0).sqrt())),
        one.scaled_re(-r2).add(&sx2.scaled_re(1.0 / r2)).add(&sz2.scaled_re(r2)),
        s.sx.mul(&s.sy).add(&s.sy.mul(&s.sx)).scaled_re(1.0 / r2),
        s.sx.mul(&s.sz).add(&s.sz.mul(&s.sx)).scaled_re(1.0 / r2),
        s.sy.mul(&s.sz).add(&s.sz.mul(&s.sy)).scaled_re(1.0 / r2),
    ];
    OperatorBasis { elements }
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.elements.iter()
    }
}

impl std::ops::Index<usize> for OperatorBasis {
    type Output = ComplexMatrix;
    fn index(&self, i: usize) -> &ComplexMatrix {
        &self.elements[i]
    }
}
