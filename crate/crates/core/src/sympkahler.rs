//! Invariant 2-cocycles on u_Bog, the symplectic form they induce on orbits,
//! and Kähler polarizations of the complexified algebra.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::blockmat::{bar, hs_norm, max_abs, BlockOp, CMat, C64, I, ZERO};
use crate::boggroup::{BogAlgebra, BogUnitary};
use crate::error::{Error, Result};
use crate::g1pdm::G1pdm;
use crate::orbitgeo::{adjoint_action, complement_basis, isotropy_basis, tangent_project, BasePoint};

/// s₊(X, Y) = Tr(X[iP₊, Y]) = 2 Im Tr(x₂ ȳ₂).
pub fn cocycle_splus(x: &BogAlgebra, y: &BogAlgebra) -> f64 {
    2.0 * (&x.x2 * bar(&y.x2)).trace().im
}

/// Tr(X[iΓ, Y]) evaluated with dense 2n x 2n matrices.
pub fn cocycle_trace(gamma: &CMat, x: &CMat, y: &CMat) -> C64 {
    let ig = gamma * I;
    (x * (&ig * y - y * &ig)).trace()
}

/// s_Γ(X, Y) = Tr(X[iΓ, Y]).
pub fn cocycle_gamma(g: &G1pdm, x: &BogAlgebra, y: &BogAlgebra) -> f64 {
    cocycle_trace(&g.to_full(), &x.to_full(), &y.to_full()).re
}

/// The same cocycle from the blocks z₁, z₂ of Z = [Γ, Y]:
/// s_Γ(X, Y) = -2 Im(Tr(x₁ z₁) + Tr(x̄₂ z₂)).
pub fn cocycle_gamma_blocks(g: &G1pdm, x: &BogAlgebra, y: &BogAlgebra) -> f64 {
    let gb = g.to_block();
    let yb = y.to_block();
    let z = gb.mul(&yb).sub(&yb.mul(&gb));
    -2.0 * ((&x.x1 * &z.x11).trace() + (bar(&x.x2) * &z.x12).trace()).im
}

/// f_{Γ₀}(Z) = -Tr(Z iΓ₀) with Γ₀ = Γ - P₋.
pub fn coboundary_f(g: &G1pdm, z: &BogAlgebra) -> f64 {
    let n = g.dim();
    let gamma0 = g.to_block().sub(&BlockOp::p_minus(n)).to_full();
    -(z.to_full() * gamma0 * I).trace().re
}

/// Value of the symplectic form at Γ₁ = UΓU* on the tangent vectors
/// [X, Γ₁], [Y, Γ₁]: s_Γ(U* X U, U* Y U).
pub fn symplectic_form(b: &BasePoint, u: &BogUnitary, x: &BogAlgebra, y: &BogAlgebra) -> f64 {
    let ui = u.adjoint();
    cocycle_gamma(&b.gamma, &adjoint_action(&ui, x), &adjoint_action(&ui, y))
}

#[derive(Clone, Debug, Serialize)]
pub struct RadicalReport {
    pub algebra_dim: usize,
    pub null_dim: usize,
    pub isotropy_dim: usize,
    /// Σ m_i² (kernel included) plus h(h - 1) when ½ has multiplicity h.
    pub block_count_dim: usize,
    /// Sine of the largest principal angle between the null space and the
    /// isotropy algebra (1 when the dimensions differ).
    pub max_principal_angle_sin: f64,
    /// Smallest nonzero singular value of the Gram matrix restricted to m_Γ.
    pub complement_sigma_min: f64,
}

impl RadicalReport {
    pub fn passed(&self, angle_tol: f64) -> bool {
        self.null_dim == self.isotropy_dim
            && self.isotropy_dim == self.block_count_dim
            && self.max_principal_angle_sin <= angle_tol
    }
}

fn gram(gamma: &CMat, basis: &[CMat]) -> DMatrix<f64> {
    let ig = gamma * I;
    let comm: Vec<CMat> = basis.iter().map(|e| &ig * e - e * &ig).collect();
    let d = basis.len();
    DMatrix::from_fn(d, d, |a, b| {
        // Re Tr(e_a c_b) without forming the product.
        basis[a].transpose().iter().zip(comm[b].iter()).map(|(p, q)| (p * q).re).sum()
    })
}

/// Orthonormal basis (columns) of the numerical null space, with the guard
/// band (tol, 10·tol) on singular values reported as ambiguous.
fn null_space(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.unwrap();
    let scale = svd.singular_values.iter().copied().fold(1.0, f64::max);
    let mut cols = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let s = s / scale;
        if s > tol && s < 10.0 * tol {
            return Err(Error::RankAmbiguity { sigma: s });
        }
        if s <= tol {
            cols.push(v_t.row(k).transpose());
        }
    }
    Ok(if cols.is_empty() { DMatrix::zeros(m.nrows(), 0) } else { DMatrix::from_columns(&cols) })
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10).count();
    u.columns(0, rank).into_owned()
}

/// sin of the largest principal angle between two subspaces given by
/// orthonormal columns; 1 when their dimensions differ.
pub fn max_principal_angle_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = b - a * (a.transpose() * b);
    resid.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

fn coords_matrix(elems: &[BogAlgebra]) -> DMatrix<f64> {
    let d = elems.first().map(|e| e.coords().len()).unwrap_or(0);
    DMatrix::from_fn(d, elems.len(), |i, j| elems[j].coords()[i])
}

/// Radical of s_Γ at a diagonal base point versus its isotropy algebra.
pub fn radical_check(b: &BasePoint, tol: f64) -> Result<RadicalReport> {
    let n = b.n();
    let basis = BogAlgebra::basis(n);
    let full: Vec<CMat> = basis.iter().map(|e| e.to_full()).collect();
    let g = gram(&b.gamma_full(), &full);
    let null = null_space(&g, tol)?;
    let iso = orthonormalize(&coords_matrix(&isotropy_basis(b)));
    let h = b.spec.mults.first().copied().filter(|_| b.has_half()).unwrap_or(0);
    let block_count_dim = (0..b.spec.block_count()).map(|k| b.spec.block_mult(k).pow(2)).sum::<usize>()
        + h * h.saturating_sub(1);

    let comp = complement_basis(b);
    let comp_full: Vec<CMat> = comp.iter().map(|e| e.to_full()).collect();
    let gc = gram(&b.gamma_full(), &comp_full);
    let complement_sigma_min = if comp.is_empty() {
        f64::INFINITY
    } else {
        gc.svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(RadicalReport {
        algebra_dim: basis.len(),
        null_dim: null.ncols(),
        isotropy_dim: iso.ncols(),
        block_count_dim,
        max_principal_angle_sin: max_principal_angle_sin(&iso, &null),
        complement_sigma_min,
    })
}

/// Radical check for an arbitrary g1-pdm: the isotropy algebra is computed
/// as the null space of X ↦ [Γ, X] instead of from the block pattern.
pub fn radical_check_general(g: &G1pdm, tol: f64) -> Result<RadicalReport> {
    let n = g.dim();
    let basis = BogAlgebra::basis(n);
    let full: Vec<CMat> = basis.iter().map(|e| e.to_full()).collect();
    let gamma = g.to_full();
    let gm = gram(&gamma, &full);
    let null = null_space(&gm, tol)?;
    let rows = 2 * (2 * n) * (2 * n);
    let brackets: Vec<CMat> = full.iter().map(|e| &gamma * e - e * &gamma).collect();
    let comm = DMatrix::from_fn(rows, basis.len(), |r, c| {
        let z = brackets[c][r / 2];
        if r % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    let iso = null_space(&comm, tol)?;
    Ok(RadicalReport {
        algebra_dim: basis.len(),
        null_dim: null.ncols(),
        isotropy_dim: iso.ncols(),
        block_count_dim: iso.ncols(),
        max_principal_angle_sin: max_principal_angle_sin(&iso, &null),
        complement_sigma_min: f64::NAN,
    })
}

/// Element [[x, z], [y, -x^T]] of the complexified algebra, z and y antisymmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct GComplexElem {
    pub x: CMat,
    pub z: CMat,
    pub y: CMat,
}

impl GComplexElem {
    pub fn zeros(n: usize) -> Self {
        Self { x: CMat::zeros(n, n), z: CMat::zeros(n, n), y: CMat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn to_full(&self) -> CMat {
        BlockOp { x11: self.x.clone(), x12: self.z.clone(), x21: self.y.clone(), x22: -self.x.transpose() }
            .to_full()
    }

    /// Reads x, z, y from a full matrix, antisymmetrizing z and y and
    /// reporting how far the input was from the algebra.
    pub fn from_full(m: &CMat) -> Result<(Self, f64)> {
        let b = BlockOp::from_full(m)?;
        let half = C64::new(0.5, 0.0);
        let residual = max_abs(&(&b.x22 + b.x11.transpose()))
            .max(max_abs(&(&b.x12 + b.x12.transpose())))
            .max(max_abs(&(&b.x21 + b.x21.transpose())));
        let e = Self {
            x: b.x11,
            z: (&b.x12 - b.x12.transpose()) * half,
            y: (&b.x21 - b.x21.transpose()) * half,
        };
        Ok((e, residual))
    }

    pub fn from_algebra(x: &BogAlgebra) -> Self {
        Self { x: x.x1.clone(), z: x.x2.clone(), y: bar(&x.x2) }
    }

    /// The real-form element, if this is fixed by the involution.
    pub fn to_algebra(&self) -> BogAlgebra {
        let half = C64::new(0.5, 0.0);
        let fixed = self.add(&self.conj());
        BogAlgebra { x1: &fixed.x * half, x2: &fixed.z * half }
    }

    /// The involution X ↦ X̄ = -X*.
    pub fn conj(&self) -> Self {
        Self { x: -self.x.adjoint(), z: -self.y.adjoint(), y: -self.z.adjoint() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { x: &self.x + &o.x, z: &self.z + &o.z, y: &self.y + &o.y }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { x: &self.x - &o.x, z: &self.z - &o.z, y: &self.y - &o.y }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { x: &self.x * c, z: &self.z * c, y: &self.y * c }
    }

    /// Complex coordinates: all of x, then the strict upper triangles of z and y.
    pub fn coords(&self) -> Vec<C64> {
        let n = self.dim();
        let mut c: Vec<C64> = self.x.iter().copied().collect();
        for m in [&self.z, &self.y] {
            for j in 0..n {
                for k in j + 1..n {
                    c.push(m[(j, k)]);
                }
            }
        }
        c
    }
}

/// Complex-bilinear extension Tr(X[iΓ, Y]) to the complexified algebra.
pub fn s_complex(g: &G1pdm, x: &GComplexElem, y: &GComplexElem) -> C64 {
    cocycle_trace(&g.to_full(), &x.to_full(), &y.to_full())
}

fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

fn anti_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = unit(n, i, j);
    m[(j, i)] = C64::new(-1.0, 0.0);
    m
}

/// Kähler polarization P of the complexified algebra at a diagonal base point.
/// Blocks are ordered by decreasing eigenvalue with the kernel last.
#[derive(Clone, Debug)]
pub struct Polarization {
    pub base: BasePoint,
    pub half: bool,
    /// Basis of P.
    pub basis: Vec<GComplexElem>,
    /// Basis of the complexified isotropy algebra k_ℂ ⊂ P.
    pub kc_basis: Vec<GComplexElem>,
    /// Basis elements of P not in k_ℂ (a basis of P modulo k_ℂ).
    pub quotient_basis: Vec<GComplexElem>,
}

pub fn polarization_build(b: &BasePoint) -> Polarization {
    let n = b.n();
    let blk = |i: usize| b.spec.block_of[i];
    let half = b.has_half();
    let hh = |i: usize, j: usize| b.spec.is_half(i) && b.spec.is_half(j);
    let mut basis = Vec::new();
    let mut kc = Vec::new();
    let mut quotient = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if blk(i) <= blk(j) {
                let e = GComplexElem { x: unit(n, i, j), ..GComplexElem::zeros(n) };
                if blk(i) == blk(j) {
                    kc.push(e.clone());
                } else {
                    quotient.push(e.clone());
                }
                basis.push(e);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let e = GComplexElem { y: anti_unit(n, i, j), ..GComplexElem::zeros(n) };
            if hh(i, j) {
                kc.push(e.clone());
            } else {
                quotient.push(e.clone());
            }
            basis.push(e);
            if hh(i, j) {
                let e = GComplexElem { z: anti_unit(n, i, j), ..GComplexElem::zeros(n) };
                kc.push(e.clone());
                basis.push(e);
            }
        }
    }
    Polarization { base: b.clone(), half, basis, kc_basis: kc, quotient_basis: quotient }
}

impl Polarization {
    fn blk(&self, i: usize) -> usize {
        self.base.spec.block_of[i]
    }

    fn hh(&self, i: usize, j: usize) -> bool {
        self.base.spec.is_half(i) && self.base.spec.is_half(j)
    }

    /// Size of the entries of X that are forbidden in P.
    pub fn in_p_residual(&self, x: &GComplexElem) -> f64 {
        let n = x.dim();
        let mut r = max_abs(&(&x.z + x.z.transpose())).max(max_abs(&(&x.y + x.y.transpose())));
        for i in 0..n {
            for j in 0..n {
                if self.blk(i) > self.blk(j) {
                    r = r.max(x.x[(i, j)].norm());
                }
                if !self.hh(i, j) {
                    r = r.max(x.z[(i, j)].norm());
                }
            }
        }
        r
    }

    /// Projection of X onto k_ℂ (block-diagonal x; ½-corners of z and y).
    pub fn kc_part(&self, x: &GComplexElem) -> GComplexElem {
        let n = x.dim();
        let keep = |m: &CMat, f: &dyn Fn(usize, usize) -> bool| {
            CMat::from_fn(n, n, |i, j| if f(i, j) { m[(i, j)] } else { ZERO })
        };
        GComplexElem {
            x: keep(&x.x, &|i, j| self.blk(i) == self.blk(j)),
            z: keep(&x.z, &|i, j| self.hh(i, j)),
            y: keep(&x.y, &|i, j| self.hh(i, j)),
        }
    }

    /// Distance (Frobenius, on the 2n x 2n picture) from X to k_ℂ.
    pub fn kc_distance(&self, x: &GComplexElem) -> f64 {
        hs_norm(&x.sub(&self.kc_part(x)).to_full())
    }

    /// Split a real-form element as X = a + ā with a ∈ P.
    pub fn split(&self, x: &BogAlgebra) -> GComplexElem {
        let n = x.dim();
        let half = C64::new(0.5, 0.0);
        let ax = CMat::from_fn(n, n, |i, j| match self.blk(i).cmp(&self.blk(j)) {
            std::cmp::Ordering::Less => x.x1[(i, j)],
            std::cmp::Ordering::Equal => x.x1[(i, j)] * half,
            std::cmp::Ordering::Greater => ZERO,
        });
        let az = CMat::from_fn(n, n, |i, j| if self.hh(i, j) { x.x2[(i, j)] * half } else { ZERO });
        let ay = bar(&x.x2) - bar(&az);
        GComplexElem { x: ax, z: az, y: ay }
    }

    /// Dimension bookkeeping for P + P̄ = g and P ∩ P̄ = k_ℂ.
    pub fn span_report(&self, tol: f64) -> SpanReport {
        let n = self.base.n();
        let dim_g = 2 * n * n - n;
        let cols: Vec<Vec<C64>> = self
            .basis
            .iter()
            .map(|e| e.coords())
            .chain(self.basis.iter().map(|e| e.conj().coords()))
            .collect();
        let m = CMat::from_fn(dim_g, cols.len(), |i, j| cols[j][i]);
        let rank_sum = crate::blockmat::singular_values(&m).iter().filter(|&&s| s > tol).count();
        let dim_p = self.basis.len();
        let kc_in_both = self
            .kc_basis
            .iter()
            .map(|e| self.in_p_residual(e).max(self.in_p_residual(&e.conj())))
            .fold(0.0, f64::max);
        SpanReport {
            dim_g,
            dim_p,
            rank_sum,
            dim_intersection: 2 * dim_p - rank_sum,
            dim_kc: self.kc_basis.len(),
            kc_in_both_residual: kc_in_both,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanReport {
    pub dim_g: usize,
    pub dim_p: usize,
    /// Rank of P ∪ P̄.
    pub rank_sum: usize,
    pub dim_intersection: usize,
    pub dim_kc: usize,
    pub kc_in_both_residual: f64,
}

impl SpanReport {
    pub fn passed(&self) -> bool {
        self.rank_sum == self.dim_g && self.dim_intersection == self.dim_kc && self.kc_in_both_residual == 0.0
    }
}

/// max |s_Γ(a, b)| over pairs of basis elements of P.
pub fn polarization_isotropy_residual(b: &BasePoint, p: &Polarization) -> f64 {
    let gamma = b.gamma_full();
    let full: Vec<CMat> = p.basis.iter().map(|e| e.to_full()).collect();
    let mut worst = 0.0f64;
    for a in &full {
        for c in &full {
            worst = worst.max(cocycle_trace(&gamma, a, c).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    /// -i s_Γ(X, X̄) from the trace.
    pub value: f64,
    /// A + B + C.
    pub closed_form: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// (1 - 2λ_top)‖y'‖₂² with y' = y (no ½) or (1 - p₁)y (½ present),
    /// plus the exact A term.
    pub lower_bound: f64,
}

pub fn kaehler_positivity(b: &BasePoint, p: &Polarization, x: &GComplexElem, tol: f64) -> Result<PositivityReport> {
    let residual = p.in_p_residual(x);
    if residual > tol {
        return Err(Error::NotInPolarization { residual });
    }
    let distance = p.kc_distance(x);
    if distance <= tol {
        return Err(Error::InKernel { distance });
    }
    let gamma = b.gamma_full();
    let value = (cocycle_trace(&gamma, &x.to_full(), &x.conj().to_full()) * C64::new(0.0, -1.0)).re;

    let n = b.n();
    let spec = &b.spec;
    let mut a = 0.0;
    for bi in 0..spec.block_count() {
        for bj in bi + 1..spec.block_count() {
            let pi = spec.projector(bi);
            let pj = spec.projector(bj);
            let gap = spec.block_value(bi) - spec.block_value(bj);
            a += 2.0 * gap * (&pi * &x.x * &pj).norm_squared();
        }
    }
    let lam = CMat::from_fn(n, n, |i, j| if i == j { C64::new(b.lambda[i], 0.0) } else { ZERO });
    let yy = &x.y * x.y.adjoint();
    let bterm = (&yy - (x.y.adjoint() * &x.y + &yy) * &lam).trace().re;
    let id = CMat::identity(n, n);
    let cterm = -(&x.z * ((&id - &lam) * x.z.adjoint() - x.z.adjoint() * &lam)).trace().re;

    let (lam_top, y_eff) = if b.has_half() {
        let top = spec.lambdas.get(1).copied().unwrap_or(0.0);
        (top, (&id - spec.projector(0)) * &x.y)
    } else {
        (spec.lambdas.first().copied().unwrap_or(0.0), x.y.clone())
    };
    let lower_bound = a + (1.0 - 2.0 * lam_top) * y_eff.norm_squared();
    Ok(PositivityReport { value, closed_form: a + bterm + cterm, a, b: bterm, c: cterm, lower_bound })
}

/// Complex structure on the tangent space at the base point, realized on
/// m_Γ: split X = a + ā with a ∈ P and return the m_Γ-part of i(a - ā).
/// This sign makes ω(X, JX) positive.
pub fn complex_structure(b: &BasePoint, p: &Polarization, x: &BogAlgebra, tol: f64) -> Result<BogAlgebra> {
    let off = tangent_project(b, x)?;
    let residual = off.sub(x).max_abs();
    if residual > tol {
        return Err(Error::NotInComplement { residual });
    }
    let a = p.split(x);
    let jx = a.sub(&a.conj()).scale(I);
    tangent_project(b, &jx.to_algebra())
}

/// Random element of P with Gaussian entries on every allowed position.
pub fn random_polarization_element(p: &Polarization, seed: u64) -> GComplexElem {
    let mut r = crate::rng::rng_from(seed);
    let n = p.base.n();
    let mut out = GComplexElem::zeros(n);
    for e in &p.basis {
        let c = C64::new(crate::rng::gaussian(&mut r), crate::rng::gaussian(&mut r));
        out = out.add(&e.scale(c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boggroup::random_algebra;
    use crate::orbitgeo::random_isotropy_element;

    fn bp(l: &[f64]) -> BasePoint {
        BasePoint::new(l, 1e-10).unwrap()
    }

    #[test]
    fn splus_matches_trace() {
        let x = random_algebra(3, 1, 1.0);
        let y = random_algebra(3, 2, 1.0);
        let pplus = BlockOp::p_plus(3).to_full();
        let t = cocycle_trace(&pplus, &x.to_full(), &y.to_full());
        assert!((t.re - cocycle_splus(&x, &y)).abs() < 1e-12);
        assert!(t.im.abs() < 1e-12);
        assert!(cocycle_splus(&x, &x).abs() < 1e-14);
    }

    #[test]
    fn block_formula_matches_trace() {
        let g = crate::g1pdm::random_g1pdm(3, 3, &[0.4, 0.2, 0.0]).unwrap();
        let x = random_algebra(3, 4, 1.0);
        let y = random_algebra(3, 5, 1.0);
        assert!((cocycle_gamma(&g, &x, &y) - cocycle_gamma_blocks(&g, &x, &y)).abs() < 1e-12);
    }

    #[test]
    fn p_minus_cocycle_is_minus_splus() {
        let g = G1pdm::p_minus(3);
        let x = random_algebra(3, 6, 1.0);
        let y = random_algebra(3, 7, 1.0);
        assert!((cocycle_gamma(&g, &x, &y) + cocycle_splus(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn radical_is_isotropy() {
        for l in [&[0.4, 0.0][..], &[0.5, 0.5, 0.2], &[0.0, 0.0, 0.0], &[0.3, 0.3, 0.1, 0.0]] {
            let r = radical_check(&bp(l), 1e-9).unwrap();
            assert!(r.passed(1e-8), "{l:?}: {r:?}");
        }
        let r = radical_check(&bp(&[0.0, 0.0, 0.0]), 1e-9).unwrap();
        assert_eq!(r.null_dim, 9);
    }

    #[test]
    fn polarization_dimensions() {
        let p = polarization_build(&bp(&[0.4, 0.0]));
        // x upper-triangular (3 entries) plus one antisymmetric y.
        assert_eq!(p.basis.len(), 4);
        assert!(p.span_report(1e-10).passed());
        let p = polarization_build(&bp(&[0.5, 0.5, 0.3]));
        let rep = p.span_report(1e-10);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn polarization_is_isotropic() {
        for l in [&[0.4, 0.1, 0.0][..], &[0.5, 0.5, 0.2, 0.0]] {
            let b = bp(l);
            let p = polarization_build(&b);
            assert!(polarization_isotropy_residual(&b, &p) < 1e-12);
        }
    }

    #[test]
    fn single_block_positivity() {
        let b = bp(&[0.4, 0.1]);
        let p = polarization_build(&b);
        let x = GComplexElem { x: unit(2, 0, 1) * C64::new(0.7, 0.2), ..GComplexElem::zeros(2) };
        let r = kaehler_positivity(&b, &p, &x, 1e-10).unwrap();
        let expected = 2.0 * 0.3 * (0.49 + 0.04);
        assert!((r.value - expected).abs() < 1e-12);
        assert!((r.closed_form - expected).abs() < 1e-12);
    }

    #[test]
    fn kernel_elements_are_rejected() {
        let b = bp(&[0.4, 0.1]);
        let p = polarization_build(&b);
        let x = GComplexElem { x: unit(2, 1, 1), ..GComplexElem::zeros(2) };
        assert!(matches!(kaehler_positivity(&b, &p, &x, 1e-10), Err(Error::InKernel { .. })));
        let lower = GComplexElem { x: unit(2, 1, 0), ..GComplexElem::zeros(2) };
        assert!(matches!(kaehler_positivity(&b, &p, &lower, 1e-10), Err(Error::NotInPolarization { .. })));
    }

    #[test]
    fn split_reconstructs_real_element() {
        for l in [&[0.4, 0.1, 0.0][..], &[0.5, 0.5, 0.2]] {
            let b = bp(l);
            let p = polarization_build(&b);
            let x = random_algebra(3, 9, 1.0);
            let a = p.split(&x);
            assert!(p.in_p_residual(&a) < 1e-14);
            let back = a.add(&a.conj());
            assert!(back.sub(&GComplexElem::from_algebra(&x)).to_full().norm() < 1e-13);
        }
    }

    #[test]
    fn complex_structure_squares_to_minus_one_and_is_positive() {
        for l in [&[0.4, 0.1, 0.0][..], &[0.5, 0.5, 0.2]] {
            let b = bp(l);
            let p = polarization_build(&b);
            let x = tangent_project(&b, &random_algebra(3, 10, 1.0)).unwrap();
            let jx = complex_structure(&b, &p, &x, 1e-10).unwrap();
            let jjx = complex_structure(&b, &p, &jx, 1e-10).unwrap();
            assert!(jjx.add(&x).max_abs() < 1e-12);
            assert!(cocycle_gamma(&b.gamma, &x, &jx) > 0.0);
        }
    }

    #[test]
    fn polarization_is_ad_invariant_under_isotropy() {
        let b = bp(&[0.5, 0.5, 0.2, 0.0]);
        let p = polarization_build(&b);
        let v = random_isotropy_element(&b, 11).to_full();
        let a = random_polarization_element(&p, 12);
        let moved = &v * a.to_full() * v.adjoint();
        let (m, res) = GComplexElem::from_full(&moved).unwrap();
        assert!(res < 1e-12);
        assert!(p.in_p_residual(&m) < 1e-12);
    }
}
