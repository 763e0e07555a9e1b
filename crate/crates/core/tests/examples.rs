use hfbgeo::blockmat::{mat_exp, max_abs, norm_12, polar_unitary, restricted_norm, BlockOp, CMat, C64};
use hfbgeo::boggroup::{exp_alg, log_near_id, swap_s1, validate_unitary, z2_index, BogAlgebra, BogUnitary, KERNEL_TOL};
use hfbgeo::error::Error;
use hfbgeo::fockoracle::FockSpace;
use hfbgeo::g1pdm::{act, diagonalize, random_g1pdm, same_orbit, spectral_data, G1pdm};
use hfbgeo::hfbopt::{build_hubbard, ground_energy, hfb_energy, ModeConvention};
use hfbgeo::orbitgeo::{closed_range_constants, geodesic_pminus, section_constants, BasePoint, SectionConstants};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn restricted_norm_of_antisymmetric_pairing_block() {
    let mut x = BlockOp::zeros(2);
    x.x12 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
    assert!((restricted_norm(&x) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn trace_class_norm_examples() {
    assert!((norm_12(&BlockOp::identity(3)) - 6.0).abs() < 1e-13);
    let mut x = BlockOp::zeros(3);
    x.x11[(0, 0)] = c(1.0, 0.0);
    assert!((norm_12(&x) - 2.0).abs() < 1e-14);
}

#[test]
fn polar_part_of_complex_diagonal() {
    let g = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
    let u = polar_unitary(&g, 1e-12).unwrap();
    let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    assert!((u[(0, 0)] - phase).norm() < 1e-14);
    assert!((u[(1, 1)] - c(1.0, 0.0)).norm() < 1e-14);
    assert!(u[(0, 1)].norm() < 1e-14 && u[(1, 0)].norm() < 1e-14);
}

#[test]
fn pairing_rotation_matches_dense_exponential() {
    let t = 0.7;
    let x2 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(t, 0.0), c(-t, 0.0), c(0.0, 0.0)]);
    let x = BogAlgebra::new(CMat::zeros(2, 2), x2).unwrap();
    let u = exp_alg(&x);
    let dense = mat_exp(&x.to_full());
    assert!(max_abs(&(u.to_full() - dense)) < 1e-14);
    assert!((u.u[(0, 0)] - c(t.cos(), 0.0)).norm() < 1e-14);
    assert!((u.v[(0, 1)] - c(t.sin(), 0.0)).norm() < 1e-14);
    assert!((u.v[(1, 0)] + c(t.sin(), 0.0)).norm() < 1e-14);
}

#[test]
fn log_outside_unit_ball_is_rejected() {
    let s = swap_s1(1, 0).unwrap();
    assert!(matches!(log_near_id(&s), Err(Error::LogDomain { .. })));
}

#[test]
fn single_mode_swap() {
    let s = swap_s1(1, 0).unwrap();
    assert_eq!(s.u[(0, 0)], c(0.0, 0.0));
    assert_eq!(s.v[(0, 0)], c(1.0, 0.0));
    assert!(validate_unitary(&s) < 1e-15);
    assert_eq!(z2_index(&s, KERNEL_TOL).unwrap(), 1);
    let sq = s.compose(&s);
    assert!(max_abs(&(sq.to_full() - BogUnitary::identity(1).to_full())) < 1e-15);
}

#[test]
fn spectral_data_examples() {
    let s = spectral_data(&[0.4, 0.4, 0.0], 1e-10).unwrap();
    assert_eq!(s.lambdas, vec![0.4]);
    assert_eq!(s.mults, vec![2]);
    assert_eq!(s.kernel_mult, 1);
    let s = spectral_data(&[0.0, 0.0], 1e-10).unwrap();
    assert!(s.lambdas.is_empty());
    assert_eq!(s.kernel_mult, 2);
    let s = spectral_data(&[0.5, 0.3], 1e-10).unwrap();
    assert_eq!(s.half_index(), Some(0));
}

/// The inverse-gap sums written out by hand for the distinct eigenvalues
/// present (zero included when Γ has a kernel).
fn hand_constants(values: &[f64]) -> (f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for (j, b) in values.iter().enumerate() {
            if i != j {
                s1 += 1.0 / (a - b).abs();
            }
            if !(*a == 0.5 && *b == 0.5) {
                s2 += 1.0 / (a + b - 1.0).abs();
            }
        }
    }
    let inv = |s: f64| if s == 0.0 { f64::INFINITY } else { 1.0 / s };
    (inv(s1).min(inv(s2)), 0.5 * inv(s1 + s2))
}

#[test]
fn closed_range_constants_with_kernel() {
    let (ct, c0) = closed_range_constants(&spectral_data(&[0.4, 0.0], 1e-10).unwrap()).unwrap();
    let (ht, h0) = hand_constants(&[0.4, 0.0]);
    assert!((ct - ht).abs() < 1e-14 && (c0 - h0).abs() < 1e-14);
    // sum₁ = 5, sum₂ = 5 + 10/3 + 1
    assert!((ct - 3.0 / 28.0).abs() < 1e-14);
    assert!((c0 - 3.0 / 86.0).abs() < 1e-14);
    assert!((ct - 0.107142857142857).abs() < 1e-12);
    assert!((c0 - 0.034883720930233).abs() < 1e-12);
}

#[test]
fn closed_range_constants_half_branch() {
    let (ct, _) = closed_range_constants(&spectral_data(&[0.5, 0.0], 1e-10).unwrap()).unwrap();
    assert!((ct - hand_constants(&[0.5, 0.0]).0).abs() < 1e-14);
    assert!((ct - 0.2).abs() < 1e-14);
}

#[test]
fn closed_range_constants_vacuum() {
    let (ct, c0) = closed_range_constants(&spectral_data(&[0.0, 0.0], 1e-10).unwrap()).unwrap();
    assert_eq!(ct, 1.0);
    assert_eq!(c0, 0.5);
}

#[test]
fn degenerate_pairing_denominator_is_an_error() {
    let s = spectral_data(&[0.5, 0.5], 1e-10).unwrap();
    assert!(closed_range_constants(&s).is_ok());
    let s = spectral_data(&[0.5, 0.5 - 1e-13], 1e-14);
    assert!(s.is_err() || closed_range_constants(&s.unwrap()).is_err());
}

#[test]
fn section_constants_at_vacuum() {
    let b = BasePoint::new(&[0.0, 0.0], 1e-10).unwrap();
    let k = section_constants(&b).unwrap();
    let c1 = 0.5 / 6.0;
    assert!((k.c_one - c1).abs() < 1e-15);
    assert!((k.big_k - 9.0 / 65f64.sqrt() * c1).abs() < 1e-15);
    assert!(k.radius > 0.0 && k.radius <= 1.0);
}

#[test]
fn section_constants_one_eigenvalue_with_kernel() {
    let b = BasePoint::new(&[0.4, 0.0], 1e-10).unwrap();
    let k = section_constants(&b).unwrap();
    let (ct, c0) = hand_constants(&[0.4, 0.0]);
    let c1 = c0 / 6.0 + 2.0 * 0.4 + 2.0;
    let big_k = 9.0 / 65f64.sqrt() * c1 + 2.0;
    let radius = 0.5 * (c0 / 3.0).min(ct / (big_k * big_k));
    assert!((k.c_one - c1).abs() < 1e-14);
    assert!((k.big_k - big_k).abs() < 1e-14);
    assert!((k.radius - radius).abs() < 1e-15);
}

#[test]
fn radius_shrinks_with_c_zero_when_that_term_is_active() {
    let a = SectionConstants::from_parts(0.1, 0.003, 0.0, 0);
    let b = SectionConstants::from_parts(0.1, 0.001, 0.0, 0);
    assert!(b.radius < a.radius);
}

#[test]
fn radius_can_grow_as_c_zero_shrinks() {
    // c⁰ also enters K, so with the c̃/K² term active a smaller c⁰ gives a
    // larger radius.
    let a = SectionConstants::from_parts(0.1, 0.03, 0.4, 1);
    let b = SectionConstants::from_parts(0.1, 0.02, 0.4, 1);
    assert!(b.big_k < a.big_k);
    assert!(b.radius > a.radius);
}

#[test]
fn geodesic_examples() {
    let theta = 0.8;
    let y = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(theta, 0.0), c(-theta, 0.0), c(0.0, 0.0)]);
    let pm = G1pdm::p_minus(2);
    for t in [0.1, 1.0, 3.7] {
        let g = geodesic_pminus(&y, t).unwrap();
        let u = mat_exp(&(BogAlgebra::new(CMat::zeros(2, 2), y.clone()).unwrap().to_full() * c(t, 0.0)));
        let dense = &u * pm.to_full() * u.adjoint();
        assert!(max_abs(&(g.to_full() - dense)) < 1e-12, "t = {t}");
    }
    assert_eq!(geodesic_pminus(&y, 0.0).unwrap().to_full(), pm.to_full());
    let bad = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    assert!(geodesic_pminus(&bad, 1.0).is_err());
}

#[test]
fn orbit_membership() {
    let lambda = [0.4, 0.2, 0.0];
    let a = random_g1pdm(1, 3, &lambda).unwrap();
    let b = random_g1pdm(2, 3, &lambda).unwrap();
    let w = same_orbit(&a, &b, 1e-9).unwrap().expect("same spectrum");
    assert!(max_abs(&(act(&w, &b).unwrap().to_full() - a.to_full())) < 1e-9);
    let other = random_g1pdm(3, 3, &[0.4, 0.1, 0.0]).unwrap();
    assert!(same_orbit(&a, &other, 1e-9).unwrap().is_none());
    assert!(same_orbit(&G1pdm::p_minus(3), &a, 1e-9).unwrap().is_none());
}

#[test]
fn diagonalize_recovers_requested_spectrum() {
    let lambda = [0.5, 0.5, 0.3, 0.3, 0.0];
    let g = random_g1pdm(11, 5, &lambda).unwrap();
    let d = diagonalize(&g, 1e-10).unwrap();
    let mut got = d.lambda.clone();
    got.sort_by(|a, b| b.total_cmp(a));
    for (x, y) in got.iter().zip(lambda) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!(d.residual < 1e-9);
}

#[test]
fn single_mode_thermal_state() {
    let fs = FockSpace::new(1).unwrap();
    let st = fs.quasifree_state(&G1pdm::diagonal(&[0.3]), 1e-10).unwrap();
    assert!((st.rho[(0, 0)] - c(0.7, 0.0)).norm() < 1e-14);
    assert!((st.rho[(1, 1)] - c(0.3, 0.0)).norm() < 1e-14);
}

#[test]
fn vacuum_state_of_p_minus() {
    let fs = FockSpace::new(3).unwrap();
    let st = fs.quasifree_state(&G1pdm::p_minus(3), 1e-10).unwrap();
    let omega = fs.vacuum();
    let proj = &omega * omega.adjoint();
    assert!(max_abs(&(st.rho - proj)) < 1e-14);
}

#[test]
fn hubbard_examples() {
    let h = build_hubbard(2, 1.0, 0.0, 0.0, ModeConvention::Spinless).unwrap();
    assert!((ground_energy(&h) + 1.0).abs() < 1e-12);
    let n = build_hubbard(1, 0.0, 0.0, 1.0, ModeConvention::SpinHalf).unwrap();
    assert!((ground_energy(&n) + 2.0).abs() < 1e-12);
    let fs = FockSpace::new(2).unwrap();
    let vac = hfb_energy(&build_hubbard(1, 0.0, 0.0, -1.0, ModeConvention::SpinHalf).unwrap(), &fs, &G1pdm::p_minus(2), 1e-10);
    assert!(vac.unwrap().abs() < 1e-14);
}

#[test]
fn two_site_hubbard_ground_energy() {
    // Half-filled two-site Hubbard: E = (U - sqrt(U² + 16 t²)) / 2 - 2μ.
    let (t, u, mu) = (1.0, 4.0, 0.3);
    let h = build_hubbard(2, t, u, mu, ModeConvention::SpinHalf).unwrap();
    let exact: f64 = (u - (u * u + 16.0 * t * t).sqrt()) / 2.0 - 2.0 * mu;
    assert!((ground_energy(&h) - exact).abs() < 1e-12);
}
