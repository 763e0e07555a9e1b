//! Dense 2x2 block operators on H ⊕ H̄ with H = C^n, and the matrix functions
//! the rest of the crate is built on.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[cfg(feature = "fault-injection")]
pub mod fault {
    //! Test hook that makes [`super::bar`] return its argument unchanged.
    use std::sync::atomic::{AtomicBool, Ordering};

    static BAR_IS_IDENTITY: AtomicBool = AtomicBool::new(false);

    pub fn set_bar_fault(on: bool) {
        BAR_IS_IDENTITY.store(on, Ordering::SeqCst);
    }

    pub fn bar_fault() -> bool {
        BAR_IS_IDENTITY.load(Ordering::SeqCst)
    }
}

/// Entrywise complex conjugate. In the standard basis this is the matrix of
/// x̄ = J x J with J the complex conjugation on C^n.
pub fn bar(x: &CMat) -> CMat {
    #[cfg(feature = "fault-injection")]
    if fault::bar_fault() {
        return x.clone();
    }
    x.map(|z| z.conj())
}

/// Plain transpose (no conjugation).
pub fn transpose_t(x: &CMat) -> CMat {
    x.transpose()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn singular_values(x: &CMat) -> Vec<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Vec::new();
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return vec![f64::NAN; x.nrows().min(x.ncols())];
    }
    x.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Operator (spectral) norm. NaN if any entry is not finite.
pub fn op_norm(x: &CMat) -> f64 {
    singular_values(x).into_iter().fold(0.0, |m, s| if s.is_nan() || m.is_nan() { f64::NAN } else { m.max(s) })
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(x: &CMat) -> f64 {
    x.norm()
}

pub fn trace_norm(x: &CMat) -> f64 {
    singular_values(x).into_iter().sum()
}

pub fn max_abs(x: &CMat) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Frobenius inner product Tr(a* b).
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn hermitian_part(x: &CMat) -> CMat {
    (x + x.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
/// The input is symmetrized first, so slightly non-Hermitian round-off is
/// tolerated.
pub fn eigh(x: &CMat) -> (Vec<f64>, CMat) {
    let n = x.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(x));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Operator on H ⊕ H̄ stored as four n x n blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockOp {
    #[serde(with = "cmat_serde")]
    pub x11: CMat,
    #[serde(with = "cmat_serde")]
    pub x12: CMat,
    #[serde(with = "cmat_serde")]
    pub x21: CMat,
    #[serde(with = "cmat_serde")]
    pub x22: CMat,
}

fn check_square(m: &CMat, n: usize) -> Result<()> {
    if m.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    Ok(())
}

impl BlockOp {
    pub fn new(x11: CMat, x12: CMat, x21: CMat, x22: CMat) -> Result<Self> {
        let n = x11.nrows();
        for m in [&x11, &x12, &x21, &x22] {
            check_square(m, n)?;
        }
        Ok(Self { x11, x12, x21, x22 })
    }

    pub fn zeros(n: usize) -> Self {
        Self { x11: zeros(n), x12: zeros(n), x21: zeros(n), x22: zeros(n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { x11: identity(n), x12: zeros(n), x21: zeros(n), x22: identity(n) }
    }

    /// Projection onto the first summand H.
    pub fn p_plus(n: usize) -> Self {
        Self { x11: identity(n), x12: zeros(n), x21: zeros(n), x22: zeros(n) }
    }

    /// Projection onto the second summand H̄.
    pub fn p_minus(n: usize) -> Self {
        Self { x11: zeros(n), x12: zeros(n), x21: zeros(n), x22: identity(n) }
    }

    /// The grading operator P₊ - P₋.
    pub fn grading(n: usize) -> Self {
        Self { x11: identity(n), x12: zeros(n), x21: zeros(n), x22: -identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.x11.nrows()
    }

    pub fn to_full(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.x11);
        m.view_mut((0, n), (n, n)).copy_from(&self.x12);
        m.view_mut((n, 0), (n, n)).copy_from(&self.x21);
        m.view_mut((n, n), (n, n)).copy_from(&self.x22);
        m
    }

    pub fn from_full(m: &CMat) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "block operator needs an even square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows() / 2;
        Ok(Self {
            x11: m.view((0, 0), (n, n)).into_owned(),
            x12: m.view((0, n), (n, n)).into_owned(),
            x21: m.view((n, 0), (n, n)).into_owned(),
            x22: m.view((n, n), (n, n)).into_owned(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            x11: self.x11.adjoint(),
            x12: self.x21.adjoint(),
            x21: self.x12.adjoint(),
            x22: self.x22.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            x11: &self.x11 * &other.x11 + &self.x12 * &other.x21,
            x12: &self.x11 * &other.x12 + &self.x12 * &other.x22,
            x21: &self.x21 * &other.x11 + &self.x22 * &other.x21,
            x22: &self.x21 * &other.x12 + &self.x22 * &other.x22,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            x11: &self.x11 + &other.x11,
            x12: &self.x12 + &other.x12,
            x21: &self.x21 + &other.x21,
            x22: &self.x22 + &other.x22,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            x11: &self.x11 - &other.x11,
            x12: &self.x12 - &other.x12,
            x21: &self.x21 - &other.x21,
            x22: &self.x22 - &other.x22,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { x11: &self.x11 * c, x12: &self.x12 * c, x21: &self.x21 * c, x22: &self.x22 * c }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> C64 {
        self.x11.trace() + self.x22.trace()
    }

    pub fn max_abs(&self) -> f64 {
        [&self.x11, &self.x12, &self.x21, &self.x22]
            .into_iter()
            .map(max_abs)
            .fold(0.0, f64::max)
    }
}

/// Norm of the restricted algebra: twice the largest of the operator norms of
/// the diagonal blocks and the Hilbert–Schmidt norms of the off-diagonal ones.
pub fn restricted_norm(x: &BlockOp) -> f64 {
    2.0 * op_norm(&x.x11).max(op_norm(&x.x22)).max(hs_norm(&x.x12)).max(hs_norm(&x.x21))
}

/// Norm of the trace-class-diagonal subalgebra: trace norms on the diagonal,
/// Hilbert–Schmidt norms off the diagonal.
pub fn norm_12(x: &BlockOp) -> f64 {
    2.0 * trace_norm(&x.x11)
        .max(trace_norm(&x.x22))
        .max(hs_norm(&x.x12))
        .max(hs_norm(&x.x21))
}

/// The conjugation X ↦ I X I, where I swaps the two summands and conjugates.
pub fn conj_i(x: &BlockOp) -> BlockOp {
    BlockOp { x11: bar(&x.x22), x12: bar(&x.x21), x21: bar(&x.x12), x22: bar(&x.x11) }
}

/// The same conjugation acting on a full 2n x 2n matrix.
pub fn conj_i_full(m: &CMat) -> CMat {
    let b = BlockOp::from_full(m).expect("even dimension");
    conj_i(&b).to_full()
}

/// Apply the antiunitary I to a vector (a, b) ∈ H ⊕ H̄, giving (b̄, ā).
pub fn apply_i(v: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
    let n = v.len() / 2;
    nalgebra::DVector::from_fn(2 * n, |k, _| if k < n { v[k + n].conj() } else { v[k - n].conj() })
}

/// Unitary factor of the polar decomposition G = Ω |G|.
pub fn polar_unitary(g: &CMat, tol: f64) -> Result<CMat> {
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), got: g.ncols() });
    }
    if g.nrows() == 0 {
        return Ok(g.clone());
    }
    let svd = g.clone().svd(true, true);
    let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if sigma_min <= tol {
        return Err(Error::SingularInput { sigma_min, tol });
    }
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    Ok(u * v_t)
}

pub fn polar_unitary_block(g: &BlockOp, tol: f64) -> Result<BlockOp> {
    BlockOp::from_full(&polar_unitary(&g.to_full(), tol)?)
}

/// Max column sum, a cheap upper bound for the spectral norm.
fn norm_1(x: &CMat) -> f64 {
    (0..x.ncols())
        .map(|j| x.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn mat_exp(x: &CMat) -> CMat {
    let n = x.nrows();
    let norm = norm_1(x);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let a = x * C64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=30 {
        term = &term * &a * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        if norm_1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn inverse(x: &CMat) -> Result<CMat> {
    x.clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("matrix inverse failed".into()))
}

/// Principal logarithm of a matrix close to the identity, by inverse scaling
/// and squaring: Denman–Beavers square roots until the argument is within 0.2
/// of the identity, then the Mercator series.
pub fn mat_log(g: &CMat) -> Result<CMat> {
    let n = g.nrows();
    let id = CMat::identity(n, n);
    let mut y = g.clone();
    let mut roots = 0u32;
    while (&y - &id).norm() > 0.2 {
        if roots >= 40 {
            return Err(Error::NumericalFailure("square-root iteration did not converge".into()));
        }
        let mut z = id.clone();
        for _ in 0..100 {
            let y_inv = inverse(&y)?;
            let z_inv = inverse(&z)?;
            let y_next = (&y + z_inv) * C64::new(0.5, 0.0);
            let z_next = (&z + y_inv) * C64::new(0.5, 0.0);
            let delta = (&y_next - &y).norm();
            y = y_next;
            z = z_next;
            if delta <= 1e-15 * y.norm().max(1.0) {
                break;
            }
        }
        roots += 1;
    }
    let a = &y - &id;
    let mut result = CMat::zeros(n, n);
    let mut power = id.clone();
    for k in 1..=80 {
        power = &power * &a;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = &power * C64::new(sign / k as f64, 0.0);
        result += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    Ok(result * C64::new(2f64.powi(roots as i32), 0.0))
}

/// Logarithm of an operator with ||G - 1||_res < 1.
pub fn mat_log_near_id(g: &BlockOp) -> Result<BlockOp> {
    let n = g.dim();
    let dist = restricted_norm(&g.sub(&BlockOp::identity(n)));
    if dist >= 1.0 {
        return Err(Error::LogDomain { norm: dist });
    }
    BlockOp::from_full(&mat_log(&g.to_full())?)
}

/// Serde adapter for `CMat` as `{"n": rows, "cols": cols, "re": [...], "im": [...]}`
/// with row-major real and imaginary parts. `cols` may be omitted for square
/// matrices.
pub mod cmat_serde {
    use super::*;
    use serde::de::Error as _;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cols: Option<usize>,
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        let cols = (m.ncols() != m.nrows()).then_some(m.ncols());
        Repr { n: m.nrows(), cols, re, im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let r = Repr::deserialize(d)?;
        let cols = r.cols.unwrap_or(r.n);
        let len = r.n * cols;
        if r.re.len() != len || r.im.len() != len {
            return Err(D::Error::custom(format!(
                "expected {len} real and imaginary entries, got {} and {}",
                r.re.len(),
                r.im.len()
            )));
        }
        if r.re.iter().chain(r.im.iter()).any(|x| !x.is_finite()) {
            return Err(D::Error::custom("matrix entries must be finite"));
        }
        Ok(CMat::from_fn(r.n, cols, |i, j| C64::new(r.re[i * cols + j], r.im[i * cols + j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, rng_from};

    fn rand_block(n: usize, seed: u64) -> BlockOp {
        let mut r = rng_from(seed);
        BlockOp::new(
            complex_gaussian(&mut r, n, n),
            complex_gaussian(&mut r, n, n),
            complex_gaussian(&mut r, n, n),
            complex_gaussian(&mut r, n, n),
        )
        .unwrap()
    }

    #[test]
    fn restricted_norm_of_identity_is_two() {
        assert!((restricted_norm(&BlockOp::identity(3)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn restricted_norm_sees_hs_norm_off_diagonal() {
        let mut x = BlockOp::zeros(3);
        x.x12 = identity(3);
        assert!((restricted_norm(&x) - 2.0 * 3f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn norm_12_uses_trace_norm_on_diagonal() {
        let mut x = BlockOp::zeros(2);
        x.x22 = identity(2);
        assert!((norm_12(&x) - 4.0).abs() < 1e-13);
        assert!((restricted_norm(&x) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn conj_i_is_involutive_and_antilinear() {
        let x = rand_block(3, 1);
        assert!(conj_i(&conj_i(&x)).sub(&x).max_abs() < 1e-15);
        let ix = conj_i(&x.scale(I));
        assert!(ix.sub(&conj_i(&x).scale(-I)).max_abs() < 1e-15);
    }

    #[test]
    fn conj_i_matches_vector_action() {
        let x = rand_block(2, 2);
        let v = nalgebra::DVector::from_fn(4, |k, _| C64::new(k as f64 + 1.0, 0.5 - k as f64));
        let lhs = conj_i(&x).to_full() * &v;
        let rhs = apply_i(&(x.to_full() * apply_i(&v)));
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&zeros(4));
        assert!((e - identity(4)).norm() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 2.0),
            C64::new(-3.0, 0.5),
        ]));
        let e = mat_exp(&d);
        for k in 0..3 {
            assert!((e[(k, k)] - d[(k, k)].exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn exp_of_skew_hermitian_is_unitary() {
        let mut r = rng_from(5);
        let a = complex_gaussian(&mut r, 5, 5) * C64::new(3.0, 0.0);
        let x = &a - a.adjoint();
        let u = mat_exp(&x);
        assert!((u.adjoint() * &u - identity(5)).norm() < 1e-12);
    }

    #[test]
    fn log_inverts_exp_near_identity() {
        let mut r = rng_from(6);
        let x = complex_gaussian(&mut r, 4, 4) * C64::new(0.3, 0.0);
        let l = mat_log(&mat_exp(&x)).unwrap();
        assert!((l - x).norm() < 1e-12);
    }

    #[test]
    fn log_near_id_rejects_far_points() {
        let g = BlockOp::identity(2).scale(C64::new(-1.0, 0.0));
        assert!(matches!(mat_log_near_id(&g), Err(Error::LogDomain { .. })));
    }

    #[test]
    fn polar_unitary_of_unitary_times_positive() {
        let mut r = rng_from(8);
        let a = complex_gaussian(&mut r, 4, 4);
        let u = mat_exp(&(&a - a.adjoint()));
        let b = complex_gaussian(&mut r, 4, 4);
        let p = &b * b.adjoint() + identity(4);
        let omega = polar_unitary(&(&u * &p), 1e-12).unwrap();
        assert!((omega - u).norm() < 1e-11);
    }

    #[test]
    fn polar_unitary_rejects_singular() {
        let mut m = identity(3);
        m[(2, 2)] = ZERO;
        assert!(matches!(polar_unitary(&m, 1e-12), Err(Error::SingularInput { .. })));
    }

    #[test]
    fn block_roundtrip_and_product() {
        let x = rand_block(3, 9);
        let y = rand_block(3, 10);
        assert_eq!(BlockOp::from_full(&x.to_full()).unwrap(), x);
        assert!((x.mul(&y).to_full() - x.to_full() * y.to_full()).norm() < 1e-12);
        assert!((x.adjoint().to_full() - x.to_full().adjoint()).norm() < 1e-15);
    }

    #[test]
    fn cmat_json_roundtrip() {
        let x = rand_block(2, 11);
        let s = serde_json::to_string(&x).unwrap();
        let y: BlockOp = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn cmat_json_rejects_bad_lengths() {
        let s = r#"{"x11":{"n":1,"re":[1.0],"im":[]},"x12":{"n":1,"re":[0],"im":[0]},
                    "x21":{"n":1,"re":[0],"im":[0]},"x22":{"n":1,"re":[0],"im":[0]}}"#;
        assert!(serde_json::from_str::<BlockOp>(s).is_err());
    }

    #[test]
    fn eigh_sorts_ascending() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let (vals, vecs) = eigh(&m);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }
}
