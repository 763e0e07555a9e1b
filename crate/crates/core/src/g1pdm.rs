//! Generalized one-particle density matrices Γ = [[γ, α], [α*, 1 - γ̄]] and
//! their normal form under the Bogoliubov action U · Γ = U Γ U*.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::blockmat::{apply_i, bar, eigh, identity, max_abs, BlockOp, CMat, C64, ONE};
use crate::boggroup::{random_unitary, BogUnitary};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G1pdm {
    #[serde(with = "crate::blockmat::cmat_serde")]
    pub gamma: CMat,
    #[serde(with = "crate::blockmat::cmat_serde")]
    pub alpha: CMat,
}

impl G1pdm {
    pub fn new(gamma: CMat, alpha: CMat) -> Result<Self> {
        let n = gamma.nrows();
        for m in [&gamma, &alpha] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.ncols().max(m.nrows()) });
            }
        }
        Ok(Self { gamma, alpha })
    }

    /// Quasi-free base point diag(Λ, 1 - Λ).
    pub fn diagonal(lambda: &[f64]) -> Self {
        let n = lambda.len();
        let gamma = CMat::from_fn(n, n, |i, j| if i == j { C64::new(lambda[i], 0.0) } else { C64::new(0.0, 0.0) });
        Self { gamma, alpha: CMat::zeros(n, n) }
    }

    /// The projection onto the second summand, i.e. the Fock vacuum.
    pub fn p_minus(n: usize) -> Self {
        Self::diagonal(&vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn to_block(&self) -> BlockOp {
        BlockOp {
            x11: self.gamma.clone(),
            x12: self.alpha.clone(),
            x21: self.alpha.adjoint(),
            x22: identity(self.dim()) - bar(&self.gamma),
        }
    }

    pub fn to_full(&self) -> CMat {
        self.to_block().to_full()
    }

    /// Reads γ and α from the top row of blocks.
    pub fn from_full(m: &CMat) -> Result<Self> {
        let b = BlockOp::from_full(m)?;
        Ok(Self { gamma: b.x11, alpha: b.x12 })
    }

    /// Largest violation among: γ Hermitian, α antisymmetric, and
    /// 0 ≤ Γ ≤ 1 (reported as distance of the spectrum outside [0, 1]).
    pub fn validation_residual(&self) -> f64 {
        let herm = max_abs(&(&self.gamma - self.gamma.adjoint()));
        let anti = max_abs(&(&self.alpha + self.alpha.transpose()));
        let (mu, _) = eigh(&self.to_full());
        let spec = mu.iter().fold(0.0f64, |m, &x| m.max(-x).max(x - 1.0));
        herm.max(anti).max(spec)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.validation_residual() <= tol
    }

    /// A g1-pdm is pure (comes from a quasi-free pure state) iff Γ² = Γ.
    pub fn is_pure(&self, tol: f64) -> bool {
        let f = self.to_full();
        max_abs(&(&f * &f - &f)) <= tol
    }
}

/// The action U · Γ = U Γ U*.
pub fn act(u: &BogUnitary, g: &G1pdm) -> Result<G1pdm> {
    if u.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: u.dim() });
    }
    let uf = u.to_full();
    G1pdm::from_full(&(&uf * g.to_full() * uf.adjoint()))
}

/// W with W Γ W* = diag(Λ, 1 - Λ), Λ sorted decreasing in [0, ½].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagonalization {
    #[serde(rename = "W")]
    pub w: BogUnitary,
    pub lambda: Vec<f64>,
    pub residual: f64,
}

/// Orthonormal basis of the range of `p` (an orthogonal projector on C^d),
/// built by Gram–Schmidt on the standard basis so that the result depends
/// only on the subspace. Each vector has a positive real component at the
/// standard-basis index it was grown from.
fn canonical_basis(p: &CMat, rank: usize) -> Vec<DVector<C64>> {
    let d = p.nrows();
    let threshold = 0.5 / d as f64;
    let mut out: Vec<DVector<C64>> = Vec::with_capacity(rank);
    let mut remaining = p.clone();
    while out.len() < rank {
        let pick = (0..d).find(|&j| remaining[(j, j)].re >= threshold).unwrap_or_else(|| {
            (0..d).max_by(|&a, &b| remaining[(a, a)].re.total_cmp(&remaining[(b, b)].re)).unwrap()
        });
        let mut w: DVector<C64> = remaining.column(pick).into_owned();
        for q in &out {
            let c = q.dotc(&w);
            w -= q * c;
        }
        let nrm = w.norm();
        if nrm == 0.0 {
            break;
        }
        w /= C64::new(nrm, 0.0);
        remaining -= &w * w.adjoint();
        out.push(w);
    }
    out
}

/// Q unitary with Q Q^T = C for a complex symmetric unitary C.
pub fn takagi_symmetric_unitary(c: &CMat) -> Result<CMat> {
    let m = c.nrows();
    let re = DMatrix::from_fn(m, m, |i, j| 0.5 * (c[(i, j)].re + c[(j, i)].re));
    let im = DMatrix::from_fn(m, m, |i, j| 0.5 * (c[(i, j)].im + c[(j, i)].im));
    let mut best: Option<(f64, CMat)> = None;
    for t in [0.618_033_988_749_894_9, 0.414_213_562_373_095, 0.732_050_807_568_877_2, 0.236_067_977_499_789_7] {
        let o = SymmetricEigen::new(&re + &im * t).eigenvectors;
        let oc = o.map(|x| C64::new(x, 0.0));
        let d = oc.transpose() * c * &oc;
        let mut off = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        let q = CMat::from_fn(m, m, |i, k| oc[(i, k)] * d[(k, k)].sqrt() / d[(k, k)].norm().sqrt());
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, q));
        }
        if off < 1e-12 {
            break;
        }
    }
    let (off, q) = best.unwrap();
    if off > 1e-8 {
        return Err(Error::NumericalFailure(format!("Takagi factorization residual {off:e}")));
    }
    Ok(q)
}

/// Vectors s_1..s_h spanning a maximal subspace of the ½-eigenspace that is
/// orthogonal to its image under I.
fn half_isotropic_basis(xi: &[DVector<C64>]) -> Result<Vec<DVector<C64>>> {
    let m = xi.len();
    let ixi: Vec<_> = xi.iter().map(apply_i).collect();
    let c = CMat::from_fn(m, m, |i, j| xi[i].dotc(&ixi[j]));
    let q = takagi_symmetric_unitary(&c)?;
    let eta: Vec<DVector<C64>> = (0..m)
        .map(|k| {
            let mut v = DVector::zeros(xi[0].len());
            for (j, x) in xi.iter().enumerate() {
                v += x * q[(j, k)];
            }
            v
        })
        .collect();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok((0..m / 2)
        .map(|k| (&eta[2 * k] - &eta[2 * k + 1] * C64::new(0.0, 1.0)) * C64::new(r, 0.0))
        .collect())
}

/// Bogoliubov W with W Γ W* = diag(Λ, 1 - Λ). Λ is unique; W is unique only
/// up to right multiplication by the isotropy group of diag(Λ, 1 - Λ).
pub fn diagonalize(g: &G1pdm, tol: f64) -> Result<Diagonalization> {
    let n = g.dim();
    let full = g.to_full();
    let (mu, vecs) = eigh(&full);
    if let Some(&bad) = mu.iter().find(|&&x| x < -tol.max(1e-9) || x > 1.0 + tol.max(1e-9)) {
        return Err(Error::InvalidInput(format!("eigenvalue {bad} of Γ lies outside [0, 1]")));
    }
    let low: Vec<usize> = (0..2 * n).filter(|&k| mu[k] < 0.5 - tol).collect();
    let half: Vec<usize> = (0..2 * n).filter(|&k| (mu[k] - 0.5).abs() <= tol).collect();
    if low.len() * 2 + half.len() != 2 * n || !half.len().is_multiple_of(2) {
        return Err(Error::NumericalFailure(format!(
            "spectrum is not symmetric about 1/2: {} below, {} at 1/2",
            low.len(),
            half.len()
        )));
    }

    let mut psi: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut lambda: Vec<f64> = Vec::with_capacity(n);
    if !half.is_empty() {
        let xi: Vec<_> = half.iter().map(|&k| vecs.column(k).into_owned()).collect();
        for s in half_isotropic_basis(&xi)? {
            psi.push(s);
            lambda.push(0.5);
        }
    }
    // Eigenvalues below ½ in decreasing order, grouped into clusters.
    let mut i = low.len();
    while i > 0 {
        let top = i - 1;
        let mut j = top;
        while j > 0 && mu[low[top]] - mu[low[j - 1]] <= tol {
            j -= 1;
        }
        let members = &low[j..=top];
        let mut p = CMat::zeros(2 * n, 2 * n);
        for &k in members {
            let col = vecs.column(k);
            p += col * col.adjoint();
        }
        for v in canonical_basis(&p, members.len()) {
            psi.push(v);
        }
        for &k in members.iter().rev() {
            lambda.push(mu[k].max(0.0));
        }
        i = j;
    }

    let a = CMat::from_fn(n, n, |r, k| psi[k][r]);
    let b = CMat::from_fn(n, n, |r, k| psi[k][r + n]);
    let w = BogUnitary { u: a.adjoint(), v: b.adjoint() };
    let wf = w.to_full();
    let d = &wf * &full * wf.adjoint();
    for (k, l) in lambda.iter_mut().enumerate() {
        if *l != 0.5 {
            *l = d[(k, k)].re.clamp(0.0, 0.5);
        }
    }
    let target = G1pdm::diagonal(&lambda).to_full();
    let residual = max_abs(&(d - target));
    if residual > tol.max(1e-9) {
        return Err(Error::NumericalFailure(format!("diagonalization residual {residual:e}")));
    }
    Ok(Diagonalization { w, lambda, residual })
}

/// Clustered spectral data of a diagonal base point diag(Λ, 1 - Λ).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralData {
    /// Distinct nonzero eigenvalues, decreasing.
    pub lambdas: Vec<f64>,
    /// Multiplicity of each entry of `lambdas`.
    pub mults: Vec<usize>,
    /// Dimension of the kernel of Λ.
    pub kernel_mult: usize,
    /// Cluster of each basis index: `0..lambdas.len()` for the nonzero
    /// clusters, `lambdas.len()` for the kernel.
    pub block_of: Vec<usize>,
    /// The input entries with clusters replaced by their representative value.
    pub snapped: Vec<f64>,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    pub fn has_half(&self) -> bool {
        self.lambdas.first() == Some(&0.5)
    }

    /// Position of ½ among the nonzero clusters, if present.
    pub fn half_index(&self) -> Option<usize> {
        self.has_half().then_some(0)
    }

    pub fn kernel_block(&self) -> usize {
        self.lambdas.len()
    }

    /// Number of occupied blocks (nonzero clusters plus the kernel if present).
    pub fn block_count(&self) -> usize {
        self.lambdas.len() + usize::from(self.kernel_mult > 0)
    }

    pub fn block_value(&self, b: usize) -> f64 {
        self.lambdas.get(b).copied().unwrap_or(0.0)
    }

    pub fn block_mult(&self, b: usize) -> usize {
        self.mults.get(b).copied().unwrap_or(self.kernel_mult)
    }

    pub fn is_half(&self, k: usize) -> bool {
        self.has_half() && self.block_of[k] == 0
    }

    /// Diagonal projector onto cluster `b`.
    pub fn projector(&self, b: usize) -> CMat {
        let n = self.n();
        CMat::from_fn(n, n, |i, j| if i == j && self.block_of[i] == b { ONE } else { C64::new(0.0, 0.0) })
    }

    /// Distinct eigenvalues actually present, including 0 when the kernel is
    /// nontrivial.
    pub fn present_values(&self) -> Vec<f64> {
        let mut v = self.lambdas.clone();
        if self.kernel_mult > 0 {
            v.push(0.0);
        }
        v
    }
}

pub fn spectral_data(lambda: &[f64], tol: f64) -> Result<SpectralData> {
    let n = lambda.len();
    if let Some(&bad) = lambda.iter().find(|&&x| !x.is_finite() || x < -tol || x > 0.5 + tol) {
        return Err(Error::BadSpec(format!("eigenvalue {bad} is outside [0, 1/2]")));
    }
    let snap: Vec<f64> = lambda
        .iter()
        .map(|&x| if (x - 0.5).abs() <= tol { 0.5 } else if x <= tol { 0.0 } else { x })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| snap[b].total_cmp(&snap[a]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        if pos > 0 {
            let prev = snap[order[pos - 1]];
            let gap = prev - snap[k];
            if gap <= tol {
                groups.last_mut().unwrap().push(k);
                continue;
            }
            if gap < 2.0 * tol {
                return Err(Error::ClusterAmbiguity { a: prev, b: snap[k] });
            }
        }
        groups.push(vec![k]);
    }

    let mut data = SpectralData {
        lambdas: Vec::new(),
        mults: Vec::new(),
        kernel_mult: 0,
        block_of: vec![0; n],
        snapped: snap.clone(),
    };
    let mut kernel: Vec<usize> = Vec::new();
    for grp in groups {
        let value = if grp.iter().any(|&k| snap[k] == 0.5) {
            0.5
        } else if grp.iter().any(|&k| snap[k] == 0.0) {
            0.0
        } else {
            grp.iter().map(|&k| snap[k]).sum::<f64>() / grp.len() as f64
        };
        if value == 0.0 {
            kernel = grp;
            continue;
        }
        let b = data.lambdas.len();
        for &k in &grp {
            data.block_of[k] = b;
            data.snapped[k] = value;
        }
        data.lambdas.push(value);
        data.mults.push(grp.len());
    }
    let kb = data.lambdas.len();
    for &k in &kernel {
        data.block_of[k] = kb;
        data.snapped[k] = 0.0;
    }
    data.kernel_mult = kernel.len();
    Ok(data)
}

/// Decide whether two g1-pdms lie on the same orbit; if so return U with
/// U · Γ2 = Γ1.
pub fn same_orbit(g1: &G1pdm, g2: &G1pdm, tol: f64) -> Result<Option<BogUnitary>> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch { expected: g1.dim(), got: g2.dim() });
    }
    let d1 = diagonalize(g1, tol)?;
    let d2 = diagonalize(g2, tol)?;
    let close = d1.lambda.iter().zip(&d2.lambda).all(|(a, b)| (a - b).abs() <= 10.0 * tol);
    Ok(close.then(|| d1.w.adjoint().compose(&d2.w)))
}

/// U · diag(Λ, 1 - Λ) for a random U in the identity component.
pub fn random_g1pdm(seed: u64, n: usize, lambda: &[f64]) -> Result<G1pdm> {
    if lambda.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lambda.len() });
    }
    spectral_data(lambda, DEFAULT_TOL)?;
    act(&random_unitary(n, seed, 0)?, &G1pdm::diagonal(lambda))
}
