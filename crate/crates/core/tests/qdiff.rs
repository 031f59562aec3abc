use std::f64::consts::PI;

use collarkit::collar::{dz2_norms, half_extent};
use collarkit::qdiff::*;
use collarkit::quadrature::QuadratureSpec;
use num_complex::Complex64;
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default().with_rel_error(1e-12)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn build(ell: f64, scaled: &[(i32, Complex64)]) -> FourierQD {
    let mut u = FourierQD::zero(ell, 4).unwrap();
    for &(n, b) in scaled {
        u.set_scaled(n, b).unwrap();
    }
    u
}

#[test]
fn real_and_imaginary_dz2_are_orthogonal() {
    for ell in [2.0, 0.5, 0.05] {
        let u = FourierQD::dz2(ell, 4).unwrap();
        let v = u.scale(c(0.0, 1.0));
        assert!(real_inner_product(&u, &v, &spec()).unwrap().abs() < 1e-12);
        let l2 = dz2_norms(ell, &spec()).unwrap().l2;
        assert!((real_inner_product(&u, &u, &spec()).unwrap() - 0.5 * l2 * l2).abs() < 1e-10 * l2 * l2);
    }
}

#[test]
fn principal_part_is_bounded_by_the_norm() {
    let ell = 0.3;
    let w = ModeWeights::compute(ell, 4, &spec()).unwrap();
    let u = build(ell, &[(-2, c(0.2, 0.1)), (0, c(0.7, -0.4)), (1, c(1.5, 0.0)), (4, c(-0.3, 0.3))]);
    let dz2 = w.dz2_l2_sq().sqrt();
    assert!(u.principal_part().norm() * dz2 <= w.norm(&u).unwrap());
}

#[test]
fn twist_pairing_ignores_decaying_modes() {
    let ell = 0.2;
    let x = half_extent(ell).unwrap();
    let u = build(ell, &[(1, c(1.0, 0.0)), (-3, c(0.0, 2.0))]);
    for p in TwistProfile::alternates_for(x) {
        assert!(twist_pairing(&u, &p, &spec()).unwrap().norm() < 1e-10);
    }
    let v = build(ell, &[(0, c(0.3, -0.2)), (2, c(1.0, 1.0))]);
    let want = 8.0 * PI * c(0.0, 1.0) * v.principal_part();
    let got = twist_pairing(&v, &TwistProfile::default_for(x), &spec()).unwrap();
    assert!((got - want).norm() < 1e-10 * want.norm());
}

#[test]
fn single_mode_sup_norm_matches_one_dimensional_maximum() {
    let ell = 0.5;
    let x = half_extent(ell).unwrap();
    let beta = 0.8;
    let u = build(ell, &[(2, c(0.0, beta))]);
    // |β| e^{2s − 2X} · 2ρ⁻²(s), maximized by a fine scan and golden refinement
    let k2 = (2.0 * PI / ell).powi(2);
    let f = |s: f64| beta * (2.0 * s - 2.0 * x).exp() * 2.0 * k2 * (ell * s / (2.0 * PI)).cos().powi(2);
    let n = 20000;
    let k = (0..=n)
        .max_by(|&a, &b| {
            let (sa, sb) = (-x + 2.0 * x * a as f64 / n as f64, -x + 2.0 * x * b as f64 / n as f64);
            f(sa).total_cmp(&f(sb))
        })
        .unwrap();
    let want = f(-x + 2.0 * x * k as f64 / n as f64);
    let got = linf_norm(&u, None, LinfGrid::default()).unwrap();
    assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
    let sub = linf_norm(&u, Some((-x, 0.0)), LinfGrid::default()).unwrap();
    assert!((sub - f(0.0)).abs() < 1e-12 * f(0.0));
}

#[test]
fn json_record_uses_boundary_scaling() {
    let u = build(0.01, &[(3, c(1.0, -1.0))]);
    let rec = FourierQDRecord::from(&u);
    assert_eq!(rec.scaling, BOUNDARY_SCALING);
    let text = serde_json::to_string(&rec).unwrap();
    let back: FourierQDRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(FourierQD::try_from(back).unwrap(), u);
}

proptest! {
    #[test]
    fn pairing_is_hermitian(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        ell in 0.01f64..3.0,
    ) {
        let mk = |v: &[(f64, f64)]| FourierQD::from_scaled(ell, v.iter().map(|&(r, i)| c(r, i)).collect()).unwrap();
        let (u, v) = (mk(&a), mk(&b));
        let w = ModeWeights::compute(ell, 4, &QuadratureSpec::default()).unwrap();
        let uv = w.inner_product(&u, &v).unwrap();
        let vu = w.inner_product(&v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() <= 1e-12 * (1.0 + uv.norm()));
        prop_assert!(w.inner_product(&u, &u).unwrap().re >= 0.0);
    }
}
