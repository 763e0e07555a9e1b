//! Geometry of the orbit of a diagonal g1-pdm Γ = diag(Λ, 1 - Λ): isotropy
//! algebra and conditional expectation, the derivation δ_Γ = [iΓ, ·],
//! closed-range constants, the local cross section and geodesics through P₋.

use serde::Serialize;

use crate::blockmat::{
    eigh, polar_unitary, restricted_norm, singular_values, BlockOp, CMat, C64, I, ZERO,
};
use crate::boggroup::{exp_alg, random_algebra, swap_s1, BogAlgebra, BogUnitary};
use crate::error::{Error, Result};
use crate::g1pdm::{act, spectral_data, G1pdm, SpectralData};

/// A diagonal base point Γ = diag(Λ, 1 - Λ) with its clustered spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct BasePoint {
    pub lambda: Vec<f64>,
    pub spec: SpectralData,
    pub gamma: G1pdm,
    pub tol: f64,
}

impl BasePoint {
    /// Eigenvalues are snapped to their cluster representatives.
    pub fn new(lambda: &[f64], tol: f64) -> Result<Self> {
        let spec = spectral_data(lambda, tol)?;
        let lambda = spec.snapped.clone();
        let gamma = G1pdm::diagonal(&lambda);
        Ok(Self { lambda, spec, gamma, tol })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn has_half(&self) -> bool {
        self.spec.has_half()
    }

    pub fn gamma_full(&self) -> CMat {
        self.gamma.to_full()
    }

    fn same_block(&self, i: usize, j: usize) -> bool {
        self.spec.block_of[i] == self.spec.block_of[j]
    }

    fn half_pair(&self, i: usize, j: usize) -> bool {
        self.spec.is_half(i) && self.spec.is_half(j)
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: n });
        }
        Ok(())
    }
}

fn mask(x: &CMat, keep: impl Fn(usize, usize) -> bool) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| if keep(i, j) { x[(i, j)] } else { ZERO })
}

/// Conditional expectation of u_Bog onto the isotropy algebra of Γ.
pub fn cond_expectation(b: &BasePoint, x: &BogAlgebra) -> Result<BogAlgebra> {
    b.check(x.dim())?;
    Ok(BogAlgebra {
        x1: mask(&x.x1, |i, j| b.same_block(i, j)),
        x2: mask(&x.x2, |i, j| b.half_pair(i, j)),
    })
}

/// Extension of the conditional expectation to arbitrary block operators:
/// compression onto the commutant of Γ.
pub fn cond_expectation_full(b: &BasePoint, x: &BlockOp) -> Result<BlockOp> {
    b.check(x.dim())?;
    Ok(BlockOp {
        x11: mask(&x.x11, |i, j| b.same_block(i, j)),
        x12: mask(&x.x12, |i, j| b.half_pair(i, j)),
        x21: mask(&x.x21, |i, j| b.half_pair(i, j)),
        x22: mask(&x.x22, |i, j| b.same_block(i, j)),
    })
}

/// δ_Γ(X) = [iΓ, X].
pub fn derivation(g: &G1pdm, x: &BogAlgebra) -> Result<BogAlgebra> {
    if g.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: x.dim() });
    }
    Ok(BogAlgebra::project_block(&derivation_full(g, &x.to_block())?))
}

pub fn derivation_full(g: &G1pdm, x: &BlockOp) -> Result<BlockOp> {
    if g.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: x.dim() });
    }
    let ig = g.to_block().scale(I);
    Ok(ig.commutator(x))
}

/// Projection onto m_Γ = ker E_Γ.
pub fn tangent_project(b: &BasePoint, x: &BogAlgebra) -> Result<BogAlgebra> {
    Ok(x.sub(&cond_expectation(b, x)?))
}

/// Real basis of the isotropy algebra drawn from [`BogAlgebra::basis`].
pub fn isotropy_basis(b: &BasePoint) -> Vec<BogAlgebra> {
    BogAlgebra::basis(b.n())
        .into_iter()
        .filter(|e| cond_expectation(b, e).unwrap().max_abs() > 0.0)
        .collect()
}

/// Real basis of the reductive complement m_Γ drawn from [`BogAlgebra::basis`].
pub fn complement_basis(b: &BasePoint) -> Vec<BogAlgebra> {
    BogAlgebra::basis(b.n())
        .into_iter()
        .filter(|e| cond_expectation(b, e).unwrap().max_abs() == 0.0)
        .collect()
}

/// Random element exp(E_Γ(X)) of the identity component of the isotropy group.
pub fn random_isotropy_element(b: &BasePoint, seed: u64) -> BogUnitary {
    let x = random_algebra(b.n(), seed, 1.0);
    exp_alg(&cond_expectation(b, &x).unwrap())
}

/// The two inverse-gap sums over the distinct eigenvalues present in Γ:
/// Σ_{i≠j} |λi - λj|⁻¹ and Σ_{i,j} |λi + λj - 1|⁻¹ (the pair (½, ½) omitted).
pub fn inverse_gap_sums(spec: &SpectralData, tol: f64) -> Result<(f64, f64)> {
    let vals = spec.present_values();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (i, &a) in vals.iter().enumerate() {
        for (j, &b) in vals.iter().enumerate() {
            if i != j {
                let d = (a - b).abs();
                if d <= tol {
                    return Err(Error::DegenerateSpectrum { i, j, denominator: d });
                }
                s1 += 1.0 / d;
            }
            if a == 0.5 && b == 0.5 {
                continue;
            }
            let d = (a + b - 1.0).abs();
            if d <= tol {
                return Err(Error::DegenerateSpectrum { i, j, denominator: d });
            }
            s2 += 1.0 / d;
        }
    }
    Ok((s1, s2))
}

fn recip(s: f64) -> f64 {
    if s == 0.0 {
        f64::INFINITY
    } else {
        1.0 / s
    }
}

/// (c̃_Γ, c⁰_Γ). Empty sums give +∞.
pub fn closed_range_constants(spec: &SpectralData) -> Result<(f64, f64)> {
    let (s1, s2) = inverse_gap_sums(spec, 1e-12)?;
    Ok((recip(s1).min(recip(s2)), 0.5 * recip(s1 + s2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectionConstants {
    pub c_tilde: f64,
    pub c_zero: f64,
    pub c_one: f64,
    pub big_k: f64,
    pub radius: f64,
}

impl SectionConstants {
    /// C₁, K and the section radius from c̃, c⁰, ‖Λ‖₂ and rank(1 - p₀).
    pub fn from_parts(c_tilde: f64, c_zero: f64, lambda_hs: f64, rank: usize) -> Self {
        let r = (rank as f64).sqrt();
        let c_zero_term = if c_zero.is_finite() { c_zero / 6.0 } else { 0.0 };
        let c_one = c_zero_term + 2.0 * lambda_hs + 2.0 * r;
        let big_k = 9.0 / 65f64.sqrt() * c_one + 2.0 * r;
        let radius = (0.5 * (c_zero / 3.0).min(c_tilde / (big_k * big_k))).min(1.0);
        Self { c_tilde, c_zero, c_one, big_k, radius }
    }
}

pub fn section_constants(b: &BasePoint) -> Result<SectionConstants> {
    let (c_tilde, c_zero) = closed_range_constants(&b.spec)?;
    let lambda_hs = b.lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(SectionConstants::from_parts(c_tilde, c_zero, lambda_hs, b.n() - b.spec.kernel_mult))
}

/// ‖UΓU* - Γ‖_res.
pub fn orbit_distance(b: &BasePoint, u: &BogUnitary) -> Result<f64> {
    b.check(u.dim())?;
    let moved = act(u, &b.gamma)?;
    Ok(restricted_norm(&moved.to_block().sub(&b.gamma.to_block())))
}

/// s(UΓU*) = U Ω(Ẽ_Γ(U*)), defined for orbit points within the section radius.
pub fn local_cross_section(b: &BasePoint, u: &BogUnitary) -> Result<BogUnitary> {
    let consts = section_constants(b)?;
    let distance = orbit_distance(b, u)?;
    if distance >= consts.radius {
        return Err(Error::OutsideRadius { distance, radius: consts.radius });
    }
    cross_section_unchecked(b, u)
}

/// The section formula without the radius check.
pub fn cross_section_unchecked(b: &BasePoint, u: &BogUnitary) -> Result<BogUnitary> {
    let compressed = cond_expectation_full(b, &u.adjoint().to_block())?.to_full();
    let sigma_min = singular_values(&compressed).into_iter().fold(f64::INFINITY, f64::min);
    if sigma_min <= 1e-12 {
        return Err(Error::SingularCompression { sigma_min });
    }
    let omega = polar_unitary(&compressed, 0.0).map_err(|_| Error::SingularCompression { sigma_min })?;
    BogUnitary::from_full(&(u.to_full() * omega))
}

/// Ad_U X = U X U*.
pub fn adjoint_action(u: &BogUnitary, x: &BogAlgebra) -> BogAlgebra {
    let uf = u.to_full();
    BogAlgebra::project_block(&BlockOp::from_full(&(&uf * x.to_full() * uf.adjoint())).unwrap())
}

/// Projection onto m_{Γ₁} = U m_Γ U* along the isotropy algebra of Γ₁ = UΓU*.
#[derive(Clone, Debug)]
pub struct ReductiveComplement {
    base: BasePoint,
    witness: BogUnitary,
}

impl ReductiveComplement {
    pub fn apply(&self, x: &BogAlgebra) -> Result<BogAlgebra> {
        let pulled = adjoint_action(&self.witness.adjoint(), x);
        let e = cond_expectation(&self.base, &pulled)?;
        Ok(x.sub(&adjoint_action(&self.witness, &e)))
    }
}

pub fn reductive_complement(b: &BasePoint, u: &BogUnitary) -> Result<ReductiveComplement> {
    b.check(u.dim())?;
    Ok(ReductiveComplement { base: b.clone(), witness: u.clone() })
}

/// Apply f to the positive square root of the positive matrix `m`.
fn sqrt_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| C64::new(f(x.max(0.0).sqrt()), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Closed form of exp(tX) P₋ exp(-tX) for X = [[0, y], [ȳ, 0]], y antisymmetric:
/// γ = a a*, α = a c with a = t y sinc(t|y|), c = cos(t|y|), |y| = (y*y)^½.
pub fn geodesic_pminus(y: &CMat, t: f64) -> Result<G1pdm> {
    let n = y.nrows();
    if y.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.ncols() });
    }
    let asym = crate::blockmat::max_abs(&(y + y.transpose()));
    if asym > 1e-12 * (1.0 + crate::blockmat::max_abs(y)) {
        return Err(Error::InvalidInput(format!("y is not antisymmetric (residual {asym:e})")));
    }
    let yy = y.adjoint() * y;
    let c = sqrt_function(&yy, |s| (t * s).cos());
    let a = y * sqrt_function(&yy, |s| t * sinc(t * s));
    G1pdm::new(&a * a.adjoint(), &a * &c)
}

/// The generator X = [[0, y], [ȳ, 0]] of the geodesic through P₋.
pub fn geodesic_generator(y: &CMat) -> BogAlgebra {
    BogAlgebra { x1: CMat::zeros(y.nrows(), y.nrows()), x2: y.clone() }
}

/// Element of the non-identity component that fixes Γ, when ½ ∈ σ(Γ).
pub fn connectivity_witness(b: &BasePoint) -> Option<BogUnitary> {
    let k = (0..b.n()).find(|&k| b.spec.is_half(k))?;
    swap_s1(b.n(), k).ok()
}

/// Γ₁ transported back to the base point by a cross-section element.
pub fn section_residual(b: &BasePoint, u: &BogUnitary, s: &BogUnitary) -> Result<f64> {
    let target = act(u, &b.gamma)?;
    let got = act(s, &b.gamma)?;
    Ok(crate::blockmat::max_abs(&(target.to_full() - got.to_full())))
}
