//! The restricted Bogoliubov group: unitaries U = [[u, v], [v̄, ū]] on H ⊕ H̄
//! with v Hilbert–Schmidt, and its Lie algebra of X = [[x1, x2], [x̄2, x̄1]]
//! with x1 skew-adjoint and x2 antisymmetric.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blockmat::{
    bar, hs_norm, identity, mat_exp, mat_log_near_id, op_norm, singular_values, BlockOp, CMat,
    C64, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, rng_from};

/// Singular values of `u` at or below this are counted in the kernel.
pub const KERNEL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogUnitary {
    #[serde(with = "crate::blockmat::cmat_serde")]
    pub u: CMat,
    #[serde(with = "crate::blockmat::cmat_serde")]
    pub v: CMat,
}

impl BogUnitary {
    pub fn new(u: CMat, v: CMat) -> Result<Self> {
        let n = u.nrows();
        for m in [&u, &v] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.ncols().max(m.nrows()) });
            }
        }
        Ok(Self { u, v })
    }

    pub fn identity(n: usize) -> Self {
        Self { u: identity(n), v: CMat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn to_block(&self) -> BlockOp {
        BlockOp { x11: self.u.clone(), x12: self.v.clone(), x21: bar(&self.v), x22: bar(&self.u) }
    }

    pub fn to_full(&self) -> CMat {
        self.to_block().to_full()
    }

    /// Reads `u` and `v` from the top row of blocks; the bottom row is not
    /// inspected.
    pub fn from_block(b: &BlockOp) -> Self {
        Self { u: b.x11.clone(), v: b.x12.clone() }
    }

    pub fn from_full(m: &CMat) -> Result<Self> {
        Ok(Self::from_block(&BlockOp::from_full(m)?))
    }

    pub fn adjoint(&self) -> Self {
        Self { u: self.u.adjoint(), v: self.v.transpose() }
    }

    /// Product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            u: &self.u * &other.u + &self.v * bar(&other.v),
            v: &self.u * &other.v + &self.v * bar(&other.u),
        }
    }

    pub fn res_norm(&self) -> f64 {
        2.0 * op_norm(&self.u).max(hs_norm(&self.v))
    }
}

/// Largest Frobenius norm among the defining relations
/// u u* + v v* = 1, u v^T + v u^T = 0, u* u + v^T v̄ = 1, u* v + v^T ū = 0.
pub fn validate_unitary(g: &BogUnitary) -> f64 {
    let n = g.dim();
    let id = identity(n);
    let (u, v) = (&g.u, &g.v);
    let r1 = u * u.adjoint() + v * v.adjoint() - &id;
    let r2 = u * v.transpose() + v * u.transpose();
    let r3 = u.adjoint() * u + v.transpose() * bar(v) - &id;
    let r4 = u.adjoint() * v + v.transpose() * bar(u);
    [r1, r2, r3, r4].iter().map(|m| m.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogAlgebra {
    #[serde(with = "crate::blockmat::cmat_serde")]
    pub x1: CMat,
    #[serde(with = "crate::blockmat::cmat_serde")]
    pub x2: CMat,
}

impl BogAlgebra {
    pub fn new(x1: CMat, x2: CMat) -> Result<Self> {
        let n = x1.nrows();
        for m in [&x1, &x2] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.ncols().max(m.nrows()) });
            }
        }
        Ok(Self { x1, x2 })
    }

    pub fn zeros(n: usize) -> Self {
        Self { x1: CMat::zeros(n, n), x2: CMat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.x1.nrows()
    }

    pub fn to_block(&self) -> BlockOp {
        BlockOp { x11: self.x1.clone(), x12: self.x2.clone(), x21: bar(&self.x2), x22: bar(&self.x1) }
    }

    pub fn to_full(&self) -> CMat {
        self.to_block().to_full()
    }

    /// Nearest algebra element to a block operator: averages each block with
    /// its I-conjugate partner and then takes the skew parts.
    pub fn project_block(b: &BlockOp) -> Self {
        let half = C64::new(0.5, 0.0);
        let x1 = (&b.x11 + bar(&b.x22)) * half;
        let x2 = (&b.x12 + bar(&b.x21)) * half;
        Self { x1: (&x1 - x1.adjoint()) * half, x2: (&x2 - x2.transpose()) * half }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { x1: &self.x1 + &other.x1, x2: &self.x2 + &other.x2 }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { x1: &self.x1 - &other.x1, x2: &self.x2 - &other.x2 }
    }

    pub fn scale(&self, t: f64) -> Self {
        let c = C64::new(t, 0.0);
        Self { x1: &self.x1 * c, x2: &self.x2 * c }
    }

    /// Lie bracket, computed blockwise.
    pub fn bracket(&self, other: &Self) -> Self {
        let (a1, a2, b1, b2) = (&self.x1, &self.x2, &other.x1, &other.x2);
        Self {
            x1: a1 * b1 + a2 * bar(b2) - b1 * a1 - b2 * bar(a2),
            x2: a1 * b2 + a2 * bar(b1) - b1 * a2 - b2 * bar(a1),
        }
    }

    pub fn res_norm(&self) -> f64 {
        2.0 * op_norm(&self.x1).max(hs_norm(&self.x2))
    }

    pub fn max_abs(&self) -> f64 {
        crate::blockmat::max_abs(&self.x1).max(crate::blockmat::max_abs(&self.x2))
    }

    /// Real dimension 2n² - n.
    pub fn real_dim(n: usize) -> usize {
        2 * n * n - n
    }

    /// Coordinates in the basis returned by [`BogAlgebra::basis`].
    pub fn coords(&self) -> Vec<f64> {
        let n = self.dim();
        let mut c = Vec::with_capacity(Self::real_dim(n));
        for k in 0..n {
            c.push(self.x1[(k, k)].im);
        }
        for j in 0..n {
            for k in j + 1..n {
                c.push(self.x1[(j, k)].re);
                c.push(self.x1[(j, k)].im);
            }
        }
        for j in 0..n {
            for k in j + 1..n {
                c.push(self.x2[(j, k)].re);
                c.push(self.x2[(j, k)].im);
            }
        }
        c
    }

    pub fn from_coords(n: usize, c: &[f64]) -> Result<Self> {
        if c.len() != Self::real_dim(n) {
            return Err(Error::DimensionMismatch { expected: Self::real_dim(n), got: c.len() });
        }
        let mut x = Self::zeros(n);
        let mut it = c.iter().copied();
        for k in 0..n {
            x.x1[(k, k)] = C64::new(0.0, it.next().unwrap());
        }
        for j in 0..n {
            for k in j + 1..n {
                let z = C64::new(it.next().unwrap(), it.next().unwrap());
                x.x1[(j, k)] = z;
                x.x1[(k, j)] = -z.conj();
            }
        }
        for j in 0..n {
            for k in j + 1..n {
                let z = C64::new(it.next().unwrap(), it.next().unwrap());
                x.x2[(j, k)] = z;
                x.x2[(k, j)] = -z;
            }
        }
        Ok(x)
    }

    /// Real basis whose coordinate vectors are the standard unit vectors.
    pub fn basis(n: usize) -> Vec<Self> {
        let d = Self::real_dim(n);
        (0..d)
            .map(|i| {
                let mut c = vec![0.0; d];
                c[i] = 1.0;
                Self::from_coords(n, &c).unwrap()
            })
            .collect()
    }
}

/// Largest deviation from skew-adjointness of x1 and antisymmetry of x2.
pub fn validate_algebra(x: &BogAlgebra) -> f64 {
    (&x.x1 + x.x1.adjoint()).norm().max((&x.x2 + x.x2.transpose()).norm())
}

pub fn exp_alg(x: &BogAlgebra) -> BogUnitary {
    BogUnitary::from_block(&BlockOp::from_full(&mat_exp(&x.to_full())).unwrap())
}

/// Logarithm of a group element within restricted distance 1 of the identity.
pub fn log_near_id(g: &BogUnitary) -> Result<BogAlgebra> {
    Ok(BogAlgebra::project_block(&mat_log_near_id(&g.to_block())?))
}

/// Component index: parity of the kernel dimension of `u`.
pub fn z2_index(g: &BogUnitary, tol: f64) -> Result<u8> {
    let sv = singular_values(&g.u);
    let upper = 10.0 * tol;
    if let Some(&s) = sv.iter().find(|&&s| s > tol && s < upper) {
        return Err(Error::IllConditioned { sigma: s, tol, upper });
    }
    Ok((sv.iter().filter(|&&s| s <= tol).count() % 2) as u8)
}

/// Exchange of mode `k` (0-based) with its conjugate: u = 1 - e_k e_k*,
/// v = e_k e_k*. Lies in the non-identity component.
pub fn swap_s1(n: usize, k: usize) -> Result<BogUnitary> {
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    let mut g = BogUnitary::identity(n);
    g.u[(k, k)] = ZERO;
    g.v[(k, k)] = ONE;
    Ok(g)
}

/// Random algebra element with Gaussian entries of standard deviation `scale`.
pub fn random_algebra(n: usize, seed: u64, scale: f64) -> BogAlgebra {
    let mut r = rng_from(seed);
    let a = complex_gaussian(&mut r, n, n);
    let b = complex_gaussian(&mut r, n, n);
    let s = C64::new(scale * std::f64::consts::FRAC_1_SQRT_2, 0.0);
    BogAlgebra { x1: (&a - a.adjoint()) * s, x2: (&b - b.transpose()) * s }
}

/// Random group element in the requested component (0 or 1).
pub fn random_unitary(n: usize, seed: u64, component: u8) -> Result<BogUnitary> {
    let g = exp_alg(&random_algebra(n, seed, 1.0));
    match component {
        0 => Ok(g),
        1 => Ok(g.compose(&swap_s1(n, 0)?)),
        c => Err(Error::InvalidInput(format!("component must be 0 or 1, got {c}"))),
    }
}

/// Real orthogonal 2n x 2n matrix of a Bogoliubov unitary with respect to the
/// interleaved real basis (φ_1, iφ_1, φ_2, iφ_2, ...), acting as
/// ψ ↦ u ψ + v ψ̄.
pub fn to_orthogonal(g: &BogUnitary) -> DMatrix<f64> {
    let n = g.dim();
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (u, v) = (g.u[(j, k)], g.v[(j, k)]);
            o[(2 * j, 2 * k)] = u.re + v.re;
            o[(2 * j, 2 * k + 1)] = -u.im + v.im;
            o[(2 * j + 1, 2 * k)] = u.im + v.im;
            o[(2 * j + 1, 2 * k + 1)] = u.re - v.re;
        }
    }
    o
}

pub fn from_orthogonal(o: &DMatrix<f64>, tol: f64) -> Result<BogUnitary> {
    if o.nrows() != o.ncols() || !o.nrows().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: o.nrows() + o.nrows() % 2, got: o.ncols() });
    }
    let residual = (o.transpose() * o - DMatrix::<f64>::identity(o.nrows(), o.nrows())).norm();
    if residual > tol {
        return Err(Error::NotOrthogonal { residual });
    }
    let n = o.nrows() / 2;
    let mut g = BogUnitary { u: CMat::zeros(n, n), v: CMat::zeros(n, n) };
    for j in 0..n {
        for k in 0..n {
            let m11 = o[(2 * j, 2 * k)];
            let m12 = o[(2 * j, 2 * k + 1)];
            let m21 = o[(2 * j + 1, 2 * k)];
            let m22 = o[(2 * j + 1, 2 * k + 1)];
            g.u[(j, k)] = C64::new(0.5 * (m11 + m22), 0.5 * (m21 - m12));
            g.v[(j, k)] = C64::new(0.5 * (m11 - m22), 0.5 * (m12 + m21));
        }
    }
    Ok(g)
}

/// Real antisymmetric matrix of an algebra element in the interleaved basis.
pub fn algebra_to_real(x: &BogAlgebra) -> DMatrix<f64> {
    to_orthogonal(&BogUnitary { u: x.x1.clone(), v: x.x2.clone() })
}

/// The complex structure of the interleaved real basis (multiplication by i).
pub fn real_complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// The Lie-algebra cocycle of the restricted orthogonal group,
/// α(A, B) = 2 Tr(A_a B_a J0) with A_a the J0-antilinear part of A.
pub fn vershik_cocycle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let j0 = real_complex_structure(a.nrows() / 2);
    let aa = (a + &j0 * a * &j0) * 0.5;
    let ba = (b + &j0 * b * &j0) * 0.5;
    2.0 * (aa * ba * j0).trace()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_swap_are_valid() {
        assert!(validate_unitary(&BogUnitary::identity(4)) < 1e-15);
        assert!(validate_unitary(&swap_s1(4, 2).unwrap()) < 1e-15);
    }

    #[test]
    fn swap_is_in_nontrivial_component() {
        assert_eq!(z2_index(&swap_s1(3, 0).unwrap(), KERNEL_TOL).unwrap(), 1);
        assert_eq!(z2_index(&BogUnitary::identity(3), KERNEL_TOL).unwrap(), 0);
    }

    #[test]
    fn swap_index_out_of_range() {
        assert!(matches!(swap_s1(3, 3), Err(Error::IndexOutOfRange { index: 3, n: 3 })));
    }

    #[test]
    fn exp_lands_in_group() {
        for seed in 0..5 {
            let x = random_algebra(4, seed, 1.5);
            assert!(validate_algebra(&x) < 1e-14);
            let g = exp_alg(&x);
            assert!(validate_unitary(&g) < 1e-12);
            assert!((g.to_full() - mat_exp(&x.to_full())).norm() < 1e-12);
        }
    }

    #[test]
    fn compose_and_adjoint_match_full_matrices() {
        let a = random_unitary(3, 1, 0).unwrap();
        let b = random_unitary(3, 2, 1).unwrap();
        assert!((a.compose(&b).to_full() - a.to_full() * b.to_full()).norm() < 1e-12);
        assert!((a.adjoint().to_full() - a.to_full().adjoint()).norm() < 1e-14);
        assert!((a.compose(&a.adjoint()).to_full() - identity(6)).norm() < 1e-12);
    }

    #[test]
    fn bracket_matches_matrix_commutator() {
        let x = random_algebra(3, 3, 1.0);
        let y = random_algebra(3, 4, 1.0);
        let lhs = x.bracket(&y).to_full();
        let rhs = x.to_full() * y.to_full() - y.to_full() * x.to_full();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn coords_roundtrip_and_basis_size() {
        let x = random_algebra(4, 5, 1.0);
        let y = BogAlgebra::from_coords(4, &x.coords()).unwrap();
        assert!(x.sub(&y).max_abs() < 1e-15);
        assert_eq!(BogAlgebra::basis(4).len(), 28);
    }

    #[test]
    fn log_inverts_exp() {
        let x = random_algebra(3, 6, 0.1);
        let l = log_near_id(&exp_alg(&x)).unwrap();
        assert!(l.sub(&x).max_abs() < 1e-12);
    }

    #[test]
    fn orthogonal_roundtrip() {
        let g = random_unitary(3, 7, 1).unwrap();
        let o = to_orthogonal(&g);
        let h = from_orthogonal(&o, 1e-10).unwrap();
        assert!((h.u - &g.u).norm() < 1e-13 && (h.v - &g.v).norm() < 1e-13);
        assert!((o.determinant() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn from_orthogonal_rejects_non_orthogonal() {
        let m = DMatrix::from_element(4, 4, 1.0);
        assert!(matches!(from_orthogonal(&m, 1e-10), Err(Error::NotOrthogonal { .. })));
    }

    #[test]
    fn real_matrix_commutes_with_i_for_linear_part() {
        let x = BogAlgebra { x1: random_algebra(2, 8, 1.0).x1, x2: CMat::zeros(2, 2) };
        let a = algebra_to_real(&x);
        let j0 = real_complex_structure(2);
        assert!((&a * &j0 - &j0 * &a).norm() < 1e-14);
    }
}
