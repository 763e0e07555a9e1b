//! Small Hubbard-type Hamiltonians on Fock space and minimization of the
//! Hartree–Fock–Bogoliubov energy E(Γ) = ω_Γ(ℍ) over g1-pdms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockmat::{eigh, hs_norm, mat_exp, CMat, C64, ZERO};
use crate::boggroup::{random_unitary, BogAlgebra, BogUnitary};
use crate::error::{Error, Result};
use crate::fockoracle::{FockSpace, DEFAULT_MODE_CAP};
use crate::g1pdm::{diagonalize, G1pdm};
use crate::rng::sub_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConvention {
    /// One mode per site; interaction u Σ n_i n_{i+1}.
    Spinless,
    /// Modes 2i (up) and 2i + 1 (down) per site; interaction u Σ n_i↑ n_i↓.
    SpinHalf,
}

/// ℍ = Σ h_ij c*_i c_j + Σ_(a,b) V_ab n_a n_b on an open chain.
#[derive(Clone, Debug)]
pub struct LatticeHamiltonian {
    pub sites: usize,
    pub t: f64,
    pub u_int: f64,
    pub mu: f64,
    pub convention: ModeConvention,
    /// One-body matrix, chemical potential included.
    pub one_body: CMat,
    /// Density-density couplings (a, b, V) with a ≠ b.
    pub density_pairs: Vec<(usize, usize, f64)>,
    pub matrix: CMat,
}

impl LatticeHamiltonian {
    pub fn modes(&self) -> usize {
        self.one_body.nrows()
    }

    /// Energy of the quasi-free state with g1-pdm Γ, from Wick's theorem:
    /// Tr(hγ) + Σ V_ab (γ_aa γ_bb - |γ_ab|² + |α_ab|²).
    pub fn quasifree_energy(&self, g: &G1pdm) -> f64 {
        let mut e = (&self.one_body * &g.gamma).trace().re;
        for &(a, b, v) in &self.density_pairs {
            e += v
                * (g.gamma[(a, a)].re * g.gamma[(b, b)].re - g.gamma[(a, b)].norm_sqr()
                    + g.alpha[(a, b)].norm_sqr());
        }
        e
    }

    /// Derivative of [`Self::quasifree_energy`] at Γ in the direction
    /// δΓ = [X, Γ], i.e. along s ↦ e^{sX} Γ e^{-sX}.
    pub fn quasifree_derivative(&self, g: &G1pdm, x: &BogAlgebra) -> f64 {
        let xf = x.to_full();
        let gf = g.to_full();
        let d = G1pdm::from_full(&(&xf * &gf - &gf * &xf)).unwrap();
        let mut e = (&self.one_body * &d.gamma).trace().re;
        for &(a, b, v) in &self.density_pairs {
            e += v
                * (d.gamma[(a, a)].re * g.gamma[(b, b)].re + g.gamma[(a, a)].re * d.gamma[(b, b)].re
                    - 2.0 * (g.gamma[(a, b)].conj() * d.gamma[(a, b)]).re
                    + 2.0 * (g.alpha[(a, b)].conj() * d.alpha[(a, b)]).re);
        }
        e
    }
}

pub fn build_hubbard(
    sites: usize,
    t: f64,
    u_int: f64,
    mu: f64,
    convention: ModeConvention,
) -> Result<LatticeHamiltonian> {
    build_hubbard_with_cap(sites, t, u_int, mu, convention, DEFAULT_MODE_CAP)
}

pub fn build_hubbard_with_cap(
    sites: usize,
    t: f64,
    u_int: f64,
    mu: f64,
    convention: ModeConvention,
    cap: usize,
) -> Result<LatticeHamiltonian> {
    if sites == 0 {
        return Err(Error::InvalidInput("a lattice needs at least one site".into()));
    }
    let (n, spins) = match convention {
        ModeConvention::Spinless => (sites, 1),
        ModeConvention::SpinHalf => (2 * sites, 2),
    };
    let fs = FockSpace::with_cap(n, cap)?;
    let mode = |site: usize, spin: usize| site * spins + spin;
    let mut h = CMat::zeros(n, n);
    for k in 0..n {
        h[(k, k)] = C64::new(-mu, 0.0);
    }
    for i in 0..sites.saturating_sub(1) {
        for s in 0..spins {
            let (a, b) = (mode(i, s), mode(i + 1, s));
            h[(a, b)] = C64::new(-t, 0.0);
            h[(b, a)] = C64::new(-t, 0.0);
        }
    }
    let density_pairs: Vec<(usize, usize, f64)> = if u_int == 0.0 {
        Vec::new()
    } else {
        match convention {
            ModeConvention::SpinHalf => (0..sites).map(|i| (mode(i, 0), mode(i, 1), u_int)).collect(),
            ModeConvention::Spinless => (0..sites.saturating_sub(1)).map(|i| (i, i + 1, u_int)).collect(),
        }
    };
    let dim = fs.dim();
    let mut matrix = CMat::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            if h[(i, j)] != ZERO {
                matrix += fs.creation(i)? * fs.annihilation(j)? * h[(i, j)];
            }
        }
    }
    for &(a, b, v) in &density_pairs {
        let na = fs.creation(a)? * fs.annihilation(a)?;
        let nb = fs.creation(b)? * fs.annihilation(b)?;
        matrix += na * nb * C64::new(v, 0.0);
    }
    Ok(LatticeHamiltonian { sites, t, u_int, mu, convention, one_body: h, density_pairs, matrix })
}

/// E(Γ) = Tr(ρ_Γ ℍ) through the Fock-space quasi-free state.
pub fn hfb_energy(h: &LatticeHamiltonian, fs: &FockSpace, g: &G1pdm, tol: f64) -> Result<f64> {
    let state = fs.quasifree_state(g, tol)?;
    Ok(state.expectation(&h.matrix).re)
}

/// Smallest eigenvalue of ℍ on the full Fock space.
pub fn ground_energy(h: &LatticeHamiltonian) -> f64 {
    eigh(&h.matrix).0[0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HfbParams {
    pub step: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
    /// Random restarts in addition to the supplied initial point; they
    /// alternate between the two components of the group.
    pub restarts: usize,
    /// Alternations between orbit descent and eigenvalue search.
    pub outer_iter: usize,
    pub fd_step: f64,
}

impl Default for HfbParams {
    fn default() -> Self {
        Self { step: 0.5, max_iter: 400, grad_tol: 1e-8, seed: 0, restarts: 4, outer_iter: 12, fd_step: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HfbResult {
    pub gamma_star: G1pdm,
    pub lambda: Vec<f64>,
    /// Energy from the Wick closed form.
    pub energy: f64,
    /// Energy of the same Γ through the Fock-space state.
    pub oracle_energy: f64,
    pub ground_energy: f64,
    pub gap: f64,
    pub pairing_norm: f64,
    pub projection_residual: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted step of the winning run.
    pub history: Vec<f64>,
}

/// Orbit point Γ = V diag(Λ, 1 - Λ) V*.
#[derive(Clone, Debug)]
struct Point {
    v: CMat,
    lambda: Vec<f64>,
}

impl Point {
    fn g1pdm(&self) -> G1pdm {
        let d = G1pdm::diagonal(&self.lambda).to_full();
        G1pdm::from_full(&(&self.v * d * self.v.adjoint())).unwrap()
    }
}

/// Real basis of m_Γ at diag(Λ, 1 - Λ), with exact equality deciding the
/// isotropy pattern.
fn complement_directions(lambda: &[f64]) -> Vec<BogAlgebra> {
    let n = lambda.len();
    let half = |k: usize| lambda[k] == 0.5;
    BogAlgebra::basis(n)
        .into_iter()
        .filter(|e| {
            for j in 0..n {
                for k in 0..n {
                    if e.x1[(j, k)] != ZERO && lambda[j] != lambda[k] {
                        return true;
                    }
                    if e.x2[(j, k)] != ZERO && !(half(j) && half(k)) {
                        return true;
                    }
                }
            }
            false
        })
        .collect()
}

struct Descent<'a> {
    h: &'a LatticeHamiltonian,
    params: &'a HfbParams,
}

impl Descent<'_> {
    fn energy(&self, p: &Point) -> f64 {
        self.h.quasifree_energy(&p.g1pdm())
    }

    fn moved(&self, p: &Point, y: &CMat, s: f64) -> Point {
        Point { v: &p.v * mat_exp(&(y * C64::new(s, 0.0))), lambda: p.lambda.clone() }
    }

    /// Central finite-difference gradient along the given directions.
    fn gradient(&self, p: &Point, dirs: &[CMat]) -> Vec<f64> {
        let h = self.params.fd_step;
        dirs.iter()
            .map(|y| (self.energy(&self.moved(p, y, h)) - self.energy(&self.moved(p, y, -h))) / (2.0 * h))
            .collect()
    }

    /// Riemannian descent on the orbit of fixed Λ with Armijo backtracking.
    /// Search directions are Polak-Ribière conjugate gradients in the fixed
    /// right-invariant basis, reset to steepest descent when not downhill.
    fn orbit_descent(&self, mut p: Point, history: &mut Vec<f64>) -> (Point, usize, f64) {
        let dirs: Vec<CMat> = complement_directions(&p.lambda).iter().map(|e| e.to_full()).collect();
        let mut e0 = self.energy(&p);
        let mut step = self.params.step;
        let mut gnorm = 0.0;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for it in 0..self.params.max_iter {
            if dirs.is_empty() {
                return (p, it, 0.0);
            }
            let g = self.gradient(&p, &dirs);
            let g2: f64 = g.iter().map(|x| x * x).sum();
            gnorm = g2.sqrt();
            if gnorm <= self.params.grad_tol {
                return (p, it, gnorm);
            }
            let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
            if let Some((gp, dp)) = &prev {
                let gp2: f64 = gp.iter().map(|x| x * x).sum();
                let beta = (g.iter().zip(gp).map(|(a, b)| a * (a - b)).sum::<f64>() / gp2).max(0.0);
                for (dk, dpk) in d.iter_mut().zip(dp) {
                    *dk += beta * dpk;
                }
            }
            let mut slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            if slope >= 0.0 {
                d = g.iter().map(|x| -x).collect();
                slope = -g2;
            }
            let mut z = CMat::zeros(dirs[0].nrows(), dirs[0].ncols());
            for (dk, y) in d.iter().zip(&dirs) {
                z += y * C64::new(*dk, 0.0);
            }
            let mut accepted = false;
            while step > 1e-14 {
                let trial = self.moved(&p, &z, step);
                let e1 = self.energy(&trial);
                if e1 <= e0 + 1e-4 * step * slope {
                    p = trial;
                    e0 = e1;
                    history.push(e0);
                    accepted = true;
                    step = (step * 2.0).min(8.0 * self.params.step);
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                if prev.is_none() {
                    return (p, it, gnorm);
                }
                prev = None;
                step = self.params.step;
                continue;
            }
            prev = Some((g, d));
        }
        (p, self.params.max_iter, gnorm)
    }

    /// Minimize over one eigenvalue on [0, ½] by grid plus golden section.
    fn line_search_lambda(&self, p: &mut Point, k: usize) -> f64 {
        let eval = |p: &Point, x: f64| {
            let mut q = p.clone();
            q.lambda[k] = x;
            self.energy(&q)
        };
        let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| eval(p, x)).collect();
        let best = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        let mut lo = grid[best.saturating_sub(1)];
        let mut hi = grid[(best + 1).min(grid.len() - 1)];
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - r * (hi - lo);
        let mut x2 = lo + r * (hi - lo);
        let mut f1 = eval(p, x1);
        let mut f2 = eval(p, x2);
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = eval(p, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = eval(p, x2);
            }
        }
        let mut cands = vec![(grid[best], vals[best]), (x1, f1), (x2, f2), (p.lambda[k], eval(p, p.lambda[k]))];
        cands.push((0.0, vals[0]));
        cands.push((0.5, vals[vals.len() - 1]));
        let (x, f) = cands.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        p.lambda[k] = x;
        f
    }

    fn run(&self, start: Point) -> (Point, usize, f64, Vec<f64>) {
        let mut history = vec![self.energy(&start)];
        let mut p = start;
        let mut iterations = 0;
        let mut gnorm = f64::INFINITY;
        for _ in 0..self.params.outer_iter.max(1) {
            let before = self.energy(&p);
            let (q, it, g) = self.orbit_descent(p, &mut history);
            p = q;
            iterations += it;
            gnorm = g;
            for k in 0..p.lambda.len() {
                let e = self.line_search_lambda(&mut p, k);
                if e < *history.last().unwrap() {
                    history.push(e);
                }
            }
            if before - self.energy(&p) < 1e-13 {
                break;
            }
        }
        let (q, it, g) = self.orbit_descent(p, &mut history);
        (q, iterations + it, g.min(gnorm.max(g)), history)
    }
}

/// Minimize E(Γ) over all g1-pdms, starting from `init` and from random
/// points in both components of the group.
pub fn minimize_hfb(h: &LatticeHamiltonian, init: &G1pdm, params: &HfbParams) -> Result<HfbResult> {
    let n = h.modes();
    if init.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: init.dim() });
    }
    let d = diagonalize(init, 1e-10)?;
    let mut starts = vec![Point { v: d.w.adjoint().to_full(), lambda: d.lambda.clone() }];
    for r in 0..params.restarts {
        let u: BogUnitary = random_unitary(n, sub_seed(params.seed, 0x4846_4221, r as u64), (r % 2) as u8)?;
        starts.push(Point { v: u.to_full(), lambda: vec![0.0; n] });
    }
    let descent = Descent { h, params };
    let runs: Vec<(Point, usize, f64, Vec<f64>)> = starts.into_par_iter().map(|s| descent.run(s)).collect();
    let (best, iterations, gnorm, history) = runs
        .into_iter()
        .min_by(|a, b| descent.energy(&a.0).total_cmp(&descent.energy(&b.0)))
        .unwrap();
    let gamma_star = best.g1pdm();
    let energy = h.quasifree_energy(&gamma_star);
    let fs = FockSpace::new(n)?;
    let oracle_energy = hfb_energy(h, &fs, &gamma_star, 1e-9)?;
    let e_gs = ground_energy(h);
    let full = gamma_star.to_full();
    Ok(HfbResult {
        lambda: best.lambda.clone(),
        energy,
        oracle_energy,
        ground_energy: e_gs,
        gap: energy - e_gs,
        pairing_norm: hs_norm(&gamma_star.alpha),
        projection_residual: hs_norm(&(&full * &full - &full)),
        gradient_norm: gnorm,
        iterations,
        converged: gnorm <= params.grad_tol,
        history,
        gamma_star,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub directions: usize,
    pub analytic_norm: f64,
    /// ‖analytic - finite difference‖ / ‖analytic‖ over all directions.
    pub relative_error: f64,
}

/// Compare the closed-form directional derivatives of E along [X, Γ] for X
/// in a real basis of u_Bog with central differences of the Fock-space
/// energy along e^{sX} Γ e^{-sX}.
pub fn gradient_check(h: &LatticeHamiltonian, fs: &FockSpace, g: &G1pdm, fd_step: f64) -> Result<GradientCheck> {
    let n = g.dim();
    let mut diff2 = 0.0;
    let mut norm2 = 0.0;
    let basis = BogAlgebra::basis(n);
    for x in &basis {
        let analytic = h.quasifree_derivative(g, x);
        let shift = |s: f64| -> Result<f64> {
            let u = crate::boggroup::exp_alg(&x.scale(s));
            hfb_energy(h, fs, &crate::g1pdm::act(&u, g)?, 1e-9)
        };
        let fd = (shift(fd_step)? - shift(-fd_step)?) / (2.0 * fd_step);
        diff2 += (analytic - fd).powi(2);
        norm2 += analytic * analytic;
    }
    let analytic_norm = norm2.sqrt();
    Ok(GradientCheck {
        directions: basis.len(),
        analytic_norm,
        relative_error: diff2.sqrt() / analytic_norm.max(1e-300),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g1pdm::random_g1pdm;

    #[test]
    fn number_operator_hamiltonian() {
        let h = build_hubbard(2, 0.0, 0.0, -1.0, ModeConvention::SpinHalf).unwrap();
        let fs = FockSpace::new(4).unwrap();
        assert!(crate::blockmat::max_abs(&(&h.matrix - fs.number_operator())) < 1e-15);
        assert!(ground_energy(&h).abs() < 1e-12);
    }

    #[test]
    fn two_site_spinless_hopping() {
        let h = build_hubbard(2, 1.0, 0.0, 0.0, ModeConvention::Spinless).unwrap();
        assert!((ground_energy(&h) + 1.0).abs() < 1e-12);
        let (vals, _) = eigh(&h.one_body);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cap_exceeded() {
        assert!(matches!(
            build_hubbard(4, 1.0, 1.0, 0.0, ModeConvention::SpinHalf),
            Err(Error::CapExceeded { modes: 8, .. })
        ));
    }

    #[test]
    fn closed_form_matches_oracle() {
        let h = build_hubbard(2, 1.0, 3.0, 0.4, ModeConvention::SpinHalf).unwrap();
        let fs = FockSpace::new(4).unwrap();
        for seed in 0..3 {
            let g = random_g1pdm(seed, 4, &[0.5, 0.35, 0.2, 0.0]).unwrap();
            let oracle = hfb_energy(&h, &fs, &g, 1e-10).unwrap();
            assert!((oracle - h.quasifree_energy(&g)).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_check_small() {
        let h = build_hubbard(2, 1.0, 2.0, 0.3, ModeConvention::Spinless).unwrap();
        let fs = FockSpace::new(2).unwrap();
        let g = random_g1pdm(4, 2, &[0.3, 0.1]).unwrap();
        let chk = gradient_check(&h, &fs, &g, 1e-5).unwrap();
        assert!(chk.relative_error < 1e-6, "{chk:?}");
    }

    #[test]
    fn quadratic_two_site_reaches_ground_state() {
        let h = build_hubbard(2, 1.0, 0.0, 0.3, ModeConvention::Spinless).unwrap();
        let params = HfbParams { restarts: 2, ..HfbParams::default() };
        let r = minimize_hfb(&h, &G1pdm::p_minus(2), &params).unwrap();
        assert!(r.gap.abs() < 1e-6, "{r:?}");
        assert!(r.projection_residual < 1e-6);
    }

    #[test]
    fn number_operator_minimum_is_vacuum() {
        let h = build_hubbard(1, 0.0, 0.0, -1.0, ModeConvention::SpinHalf).unwrap();
        let params = HfbParams { restarts: 0, ..HfbParams::default() };
        let r = minimize_hfb(&h, &G1pdm::p_minus(2), &params).unwrap();
        assert!(r.energy.abs() < 1e-12);
        assert!(r.converged);
    }
}
