//! Brute-force fermionic Fock space over C^n (Jordan–Wigner, n ≤ 6): CAR
//! operators, Bogoliubov implementers, quasi-free density matrices, Wick
//! pairings and particle-number statistics.
//!
//! Basis states are bit strings: bit k of the index is the occupation of
//! mode k, and c*_k carries the sign (-1)^(number of occupied modes j < k).
//! Mode indices are 0-based.

use nalgebra::DVector;
use serde::Serialize;

use crate::blockmat::{eigh, max_abs, CMat, C64, ONE, ZERO};
use crate::boggroup::BogUnitary;
use crate::error::{Error, Result};
use crate::g1pdm::{diagonalize, G1pdm};

pub const DEFAULT_MODE_CAP: usize = 6;

/// Dense operator on the 2ⁿ-dimensional Fock space.
pub type FockOp = CMat;

#[derive(Clone, Debug)]
pub struct FockSpace {
    n: usize,
    cre: Vec<CMat>,
    ann: Vec<CMat>,
}

/// Normal state ω(A) = Tr(ρA).
#[derive(Clone, Debug)]
pub struct QfState {
    pub n: usize,
    pub rho: CMat,
}

impl QfState {
    pub fn expectation(&self, a: &CMat) -> C64 {
        (&self.rho * a).trace()
    }

    /// Largest of |Tr ρ - 1|, the non-Hermitian part and the negative part
    /// of the spectrum.
    pub fn validation_residual(&self) -> f64 {
        let tr = (self.rho.trace() - ONE).norm();
        let herm = max_abs(&(&self.rho - self.rho.adjoint()));
        let (vals, _) = eigh(&self.rho);
        let neg = vals.iter().fold(0.0f64, |m, &x| m.max(-x));
        tr.max(herm).max(neg)
    }

    /// Number of eigenvalues of ρ above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        eigh(&self.rho).0.iter().filter(|&&x| x > tol).count()
    }
}

fn parity_below(b: usize, k: usize) -> f64 {
    if (b & ((1 << k) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl FockSpace {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_MODE_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        if n > cap {
            return Err(Error::CapExceeded { modes: n, cap });
        }
        let dim = 1usize << n;
        let cre: Vec<CMat> = (0..n)
            .map(|k| {
                let mut m = CMat::zeros(dim, dim);
                for b in 0..dim {
                    if b & (1 << k) == 0 {
                        m[(b | (1 << k), b)] = C64::new(parity_below(b, k), 0.0);
                    }
                }
                m
            })
            .collect();
        let ann = cre.iter().map(|m| m.adjoint()).collect();
        Ok(Self { n, cre, ann })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.dim(), self.dim())
    }

    pub fn creation(&self, k: usize) -> Result<&CMat> {
        self.cre.get(k).ok_or(Error::IndexOutOfRange { index: k, n: self.n })
    }

    pub fn annihilation(&self, k: usize) -> Result<&CMat> {
        self.ann.get(k).ok_or(Error::IndexOutOfRange { index: k, n: self.n })
    }

    /// c*(f) = Σ f_k c*_k.
    pub fn cdag(&self, f: &DVector<C64>) -> CMat {
        let mut m = CMat::zeros(self.dim(), self.dim());
        for (k, c) in self.cre.iter().enumerate() {
            if f[k] != ZERO {
                m += c * f[k];
            }
        }
        m
    }

    /// c(f) = Σ f̄_k c_k (antilinear in f).
    pub fn c(&self, f: &DVector<C64>) -> CMat {
        let mut m = CMat::zeros(self.dim(), self.dim());
        for (k, a) in self.ann.iter().enumerate() {
            if f[k] != ZERO {
                m += a * f[k].conj();
            }
        }
        m
    }

    pub fn number_operator(&self) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| if i == j { C64::new(i.count_ones() as f64, 0.0) } else { ZERO })
    }

    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = ONE;
        v
    }

    /// Largest anticommutator residual over all pairs of modes.
    pub fn car_residual(&self) -> f64 {
        let id = self.identity();
        let mut worst = 0.0f64;
        for j in 0..self.n {
            for k in 0..self.n {
                let (cj, ck) = (&self.ann[j], &self.ann[k]);
                let (dj, dk) = (&self.cre[j], &self.cre[k]);
                let delta = if j == k { id.clone() } else { CMat::zeros(self.dim(), self.dim()) };
                worst = worst
                    .max(max_abs(&(cj * dk + dk * cj - delta)))
                    .max(max_abs(&(cj * ck + ck * cj)))
                    .max(max_abs(&(dj * dk + dk * dj)));
            }
        }
        worst
    }

    /// d_k = c*(u φ_k) + c(v φ̄_k), the transformed creation operators.
    pub fn transformed_creations(&self, u: &BogUnitary) -> Vec<CMat> {
        (0..self.n)
            .map(|k| {
                let uk: DVector<C64> = u.u.column(k).into_owned();
                let vk: DVector<C64> = u.v.column(k).into_owned();
                self.cdag(&uk) + self.c(&vk)
            })
            .collect()
    }

    /// Unitary 𝕌 with 𝕌 c*(f) 𝕌* = c*(uf) + c(v f̄). The phase is fixed by
    /// making the largest-magnitude entry of the first column real positive.
    pub fn implementer(&self, u: &BogUnitary) -> Result<CMat> {
        if u.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: u.dim() });
        }
        let d = self.transformed_creations(u);
        let dim = self.dim();
        let mut count = CMat::zeros(dim, dim);
        for dk in &d {
            count += dk * dk.adjoint();
        }
        let (vals, vecs) = eigh(&count);
        let next = vals.get(1).copied().unwrap_or(f64::INFINITY);
        if vals[0].abs() > 1e-10 || next < 0.5 {
            return Err(Error::VacuumDegeneracy { lowest: vals[0], next });
        }
        let mut out = CMat::zeros(dim, dim);
        out.set_column(0, &vecs.column(0));
        for b in 1..dim {
            let k = b.trailing_zeros() as usize;
            let prev: DVector<C64> = out.column(b & (b - 1)).into_owned();
            out.set_column(b, &(&d[k] * prev));
        }
        let col = out.column(0);
        let (imax, _) = col.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
            if z.norm() > acc.1 {
                (i, z.norm())
            } else {
                acc
            }
        });
        let z = col[imax];
        let phase = z.conj() / z.norm();
        Ok(out * phase)
    }

    /// The state ρ_diag = Π_k (λ_k n_k + (1 - λ_k)(1 - n_k)).
    pub fn diagonal_state(&self, lambda: &[f64]) -> Result<QfState> {
        if lambda.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: lambda.len() });
        }
        let dim = self.dim();
        let rho = CMat::from_fn(dim, dim, |i, j| {
            if i != j {
                return ZERO;
            }
            let p: f64 = (0..self.n).map(|k| if i & (1 << k) != 0 { lambda[k] } else { 1.0 - lambda[k] }).product();
            C64::new(p, 0.0)
        });
        Ok(QfState { n: self.n, rho })
    }

    /// ρ = 𝕌_W* ρ_diag 𝕌_W for Γ = W* diag(Λ, 1 - Λ) W.
    pub fn quasifree_from_diag(&self, w: &BogUnitary, lambda: &[f64]) -> Result<QfState> {
        let diag = self.diagonal_state(lambda)?;
        let uw = self.implementer(w)?;
        Ok(QfState { n: self.n, rho: uw.adjoint() * diag.rho * uw })
    }

    /// The quasi-free state whose g1-pdm is `g`.
    pub fn quasifree_state(&self, g: &G1pdm, tol: f64) -> Result<QfState> {
        if g.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: g.dim() });
        }
        let d = diagonalize(g, tol)?;
        self.quasifree_from_diag(&d.w, &d.lambda)
    }

    /// γ_mk = ω(c*_k c_m), α_km = ω(c_m c_k).
    pub fn g1pdm_of_state(&self, state: &QfState) -> G1pdm {
        let n = self.n;
        let mut gamma = CMat::zeros(n, n);
        let mut alpha = CMat::zeros(n, n);
        for m in 0..n {
            for k in 0..n {
                gamma[(m, k)] = state.expectation(&(&self.cre[k] * &self.ann[m]));
                alpha[(k, m)] = state.expectation(&(&self.ann[m] * &self.ann[k]));
            }
        }
        G1pdm { gamma, alpha }
    }

    pub fn number_stats(&self, state: &QfState) -> NumberStats {
        let num = self.number_operator();
        let mean = state.expectation(&num).re;
        let second = state.expectation(&(&num * &num)).re;
        let g = self.g1pdm_of_state(state);
        NumberStats {
            mean,
            variance: second - mean * mean,
            two_tr_alpha: 2.0 * (g.alpha.adjoint() * &g.alpha).trace().re,
            trace_gamma: g.gamma.trace().re,
        }
    }

    pub fn field_matrix(&self, op: &FieldOp) -> CMat {
        if op.dagger {
            self.cdag(&op.f)
        } else {
            self.c(&op.f)
        }
    }

    /// Compare ω(e_1 ⋯ e_2m) with the signed sum over pairings of two-point
    /// functions. Odd monomials are compared against zero.
    pub fn wick_residual(&self, state: &QfState, ops: &[FieldOp]) -> Result<WickReport> {
        if ops.len() > 8 {
            return Err(Error::InvalidInput(format!("at most 8 field operators, got {}", ops.len())));
        }
        let mats: Vec<CMat> = ops.iter().map(|o| self.field_matrix(o)).collect();
        let mut prod = self.identity();
        for m in &mats {
            prod *= m;
        }
        let direct = state.expectation(&prod);
        if ops.len() % 2 == 1 {
            return Ok(WickReport { direct, pairing_sum: ZERO, residual: direct.norm(), pairings: 0 });
        }
        let len = ops.len();
        let mut two = vec![vec![ZERO; len]; len];
        for a in 0..len {
            for b in a + 1..len {
                two[a][b] = state.expectation(&(&mats[a] * &mats[b]));
            }
        }
        let pairings = ordered_pairings(len);
        let pairing_sum: C64 = pairings
            .iter()
            .map(|(pairs, sign)| pairs.iter().map(|&(a, b)| two[a][b]).product::<C64>() * *sign)
            .sum();
        Ok(WickReport { direct, pairing_sum, residual: (direct - pairing_sum).norm(), pairings: pairings.len() })
    }
}

/// A creation (`dagger`) or annihilation operator smeared with `f`.
#[derive(Clone, Debug)]
pub struct FieldOp {
    pub dagger: bool,
    pub f: DVector<C64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NumberStats {
    pub mean: f64,
    pub variance: f64,
    pub two_tr_alpha: f64,
    pub trace_gamma: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct WickReport {
    pub direct: C64,
    pub pairing_sum: C64,
    pub residual: f64,
    pub pairings: usize,
}

/// Sign of the permutation given as a sequence of distinct indices.
pub fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// All pairings {(a_1, b_1), ..., (a_m, b_m)} of 0..2m with a_i < b_i and
/// a_1 < ... < a_m, with the sign of the permutation (a_1 b_1 ... a_m b_m).
pub fn ordered_pairings(len: usize) -> Vec<(Vec<(usize, usize)>, f64)> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<(Vec<(usize, usize)>, f64)>) {
        if rest.is_empty() {
            let seq: Vec<usize> = acc.iter().flat_map(|&(a, b)| [a, b]).collect();
            out.push((acc.clone(), permutation_sign(&seq)));
            return;
        }
        let a = rest[0];
        for i in 1..rest.len() {
            let b = rest[i];
            let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&x| x != b).collect();
            acc.push((a, b));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if len.is_multiple_of(2) {
        let all: Vec<usize> = (0..len).collect();
        rec(&all, &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boggroup::{random_unitary, swap_s1};
    use crate::g1pdm::{act, random_g1pdm};

    #[test]
    fn single_mode_creation_matrix() {
        let fs = FockSpace::new(1).unwrap();
        let c = fs.creation(0).unwrap();
        assert_eq!(c[(1, 0)], ONE);
        assert_eq!(c[(0, 1)], ZERO);
        assert!(matches!(fs.creation(1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn car_holds() {
        for n in 1..=4 {
            assert!(FockSpace::new(n).unwrap().car_residual() < 1e-15);
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(FockSpace::new(7), Err(Error::CapExceeded { modes: 7, cap: 6 })));
    }

    #[test]
    fn number_operator_matches_sum() {
        let fs = FockSpace::new(3).unwrap();
        let mut sum = CMat::zeros(8, 8);
        for k in 0..3 {
            sum += fs.creation(k).unwrap() * fs.annihilation(k).unwrap();
        }
        assert_eq!(sum, fs.number_operator());
    }

    #[test]
    fn implementer_of_identity_is_identity() {
        let fs = FockSpace::new(3).unwrap();
        let u = fs.implementer(&BogUnitary::identity(3)).unwrap();
        assert!(max_abs(&(u - fs.identity())) < 1e-13);
    }

    #[test]
    fn implementer_relation_and_unitarity() {
        let fs = FockSpace::new(3).unwrap();
        for (seed, comp) in [(1, 0), (2, 1)] {
            let g = random_unitary(3, seed, comp).unwrap();
            let uu = fs.implementer(&g).unwrap();
            assert!(max_abs(&(uu.adjoint() * &uu - fs.identity())) < 1e-10);
            let d = fs.transformed_creations(&g);
            for (k, dk) in d.iter().enumerate() {
                let lhs = &uu * fs.creation(k).unwrap() * uu.adjoint();
                assert!(max_abs(&(lhs - dk)) < 1e-10);
            }
        }
    }

    #[test]
    fn swap_implementer_exchanges_occupation() {
        let fs = FockSpace::new(2).unwrap();
        let uu = fs.implementer(&swap_s1(2, 0).unwrap()).unwrap();
        let image = &uu * fs.vacuum();
        assert!((image[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_single_mode_state() {
        let fs = FockSpace::new(1).unwrap();
        let s = fs.quasifree_state(&G1pdm::diagonal(&[0.3]), 1e-10).unwrap();
        assert!((s.rho[(0, 0)].re - 0.7).abs() < 1e-14);
        assert!((s.rho[(1, 1)].re - 0.3).abs() < 1e-14);
    }

    #[test]
    fn round_trip_and_purity() {
        let fs = FockSpace::new(3).unwrap();
        let g = random_g1pdm(5, 3, &[0.5, 0.3, 0.1]).unwrap();
        let s = fs.quasifree_state(&g, 1e-10).unwrap();
        assert!(s.validation_residual() < 1e-12);
        let back = fs.g1pdm_of_state(&s);
        assert!(max_abs(&(back.to_full() - g.to_full())) < 1e-10);

        let pure = act(&random_unitary(3, 6, 0).unwrap(), &G1pdm::p_minus(3)).unwrap();
        let s = fs.quasifree_state(&pure, 1e-10).unwrap();
        assert_eq!(s.rank(1e-9), 1);
        let stats = fs.number_stats(&s);
        assert!((stats.variance - stats.two_tr_alpha).abs() < 1e-10);
        assert!((stats.mean - stats.trace_gamma).abs() < 1e-12);
    }

    #[test]
    fn pairings_count_and_signs() {
        assert_eq!(ordered_pairings(4).len(), 3);
        assert_eq!(ordered_pairings(6).len(), 15);
        assert_eq!(ordered_pairings(8).len(), 105);
        let signs: Vec<f64> = ordered_pairings(4).iter().map(|p| p.1).collect();
        assert_eq!(signs, vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn wick_on_vacuum_two_point() {
        let fs = FockSpace::new(2).unwrap();
        let vac = fs.quasifree_state(&G1pdm::p_minus(2), 1e-10).unwrap();
        let f = DVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.5, 0.0)]);
        let g = DVector::from_vec(vec![C64::new(0.0, 2.0), C64::new(1.0, -1.0)]);
        let ops = [FieldOp { dagger: false, f: f.clone() }, FieldOp { dagger: true, f: g.clone() }];
        let r = fs.wick_residual(&vac, &ops).unwrap();
        assert!((r.direct - f.dotc(&g)).norm() < 1e-14);
        assert!(r.residual < 1e-14);
    }
}
