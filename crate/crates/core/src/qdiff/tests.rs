use super::*;
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default().with_rel_error(1e-12)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sample(ell: f64) -> FourierQD {
    let scaled = [
        (-2, c(0.3, -0.1)),
        (-1, c(-0.7, 0.2)),
        (0, c(1.1, 0.4)),
        (1, c(0.05, 0.9)),
        (3, c(-0.2, 0.0)),
    ];
    let mut u = FourierQD::zero(ell, 3).unwrap();
    for (n, b) in scaled {
        u.set_scaled(n, b).unwrap();
    }
    u
}

// Direct 2-D quadrature of 4∫∫ u conj(v) ρ⁻² ds dθ from pointwise values.
fn pairing_by_quadrature(u: &FourierQD, v: &FourierQD) -> Complex64 {
    let m = 4 * u.truncation().max(v.truncation()) + 3;
    let thetas = circle_nodes(m);
    let dt = 2.0 * PI / m as f64;
    let x = u.half_extent();
    let ell = u.ell();
    let f = |s: f64| {
        let r = ell / (2.0 * PI * (ell * s / (2.0 * PI)).cos());
        thetas
            .iter()
            .map(|&t| u.eval(s, t) * v.eval(s, t).conj())
            .sum::<Complex64>()
            * dt
            / (r * r)
    };
    4.0 * integrate_complex(f, -x, x, &spec()).unwrap().value
}

#[test]
fn first_mode_weight_matches_antiderivative() {
    // ρ⁻² = k² cos²(as), a = ℓ/2π, k = 2π/ℓ, and
    // ∫ e^{2s} cos²(as) ds = e^{2s}/4 + e^{2s}(cos 2as + a sin 2as)/(4(1 + a²)).
    let ell = 1.0;
    let a = ell / (2.0 * PI);
    let k = 2.0 * PI / ell;
    let x = half_extent(ell).unwrap();
    let prim = |s: f64| {
        (2.0 * s).exp() / 4.0
            + (2.0 * s).exp() * ((2.0 * a * s).cos() + a * (2.0 * a * s).sin()) / (4.0 * (1.0 + a * a))
    };
    let exact = 8.0 * PI * k * k * (prim(x) - prim(-x));
    let w = mode_weight(ell, 1, &spec()).unwrap();
    assert!((w / exact - 1.0).abs() < 1e-12, "{w} vs {exact}");
    assert_eq!(mode_weight(ell, -1, &spec()).unwrap(), w);
}

#[test]
fn zeroth_weight_is_dz2_norm() {
    for ell in [0.01, 0.3, 2.0] {
        let w = ModeWeights::compute(ell, 2, &spec()).unwrap();
        let norms = crate::collar::dz2_norms(ell, &spec()).unwrap();
        assert!((w.dz2_l2_sq().sqrt() / norms.l2 - 1.0).abs() < 1e-11);
    }
}

#[test]
fn inner_product_matches_pointwise_quadrature() {
    for ell in [0.4, 1.0, 3.0] {
        let u = sample(ell);
        let v = FourierQD::from_raw(ell, 3, &[(0, c(0.2, -1.0)), (1, c(1.0, 1.0)), (-2, c(0.0, 0.5))]).unwrap();
        let fast = inner_product(&u, &v, &spec()).unwrap();
        let slow = pairing_by_quadrature(&u, &v);
        assert!((fast - slow).norm() < 1e-9 * slow.norm(), "ℓ={ell}: {fast} vs {slow}");
    }
}

#[test]
fn scaled_storage_survives_tiny_collars() {
    // X(1e-3) ≈ 9862: raw weights of mode 1 overflow, scaled ones do not.
    let ell = 1e-3;
    let w = ModeWeights::compute(ell, 2, &spec()).unwrap();
    assert!(w.raw(1).is_infinite());
    assert!(mode_weight(ell, 1, &spec()).is_err());
    let mut u = FourierQD::zero(ell, 2).unwrap();
    u.set_scaled(1, c(1.0, 0.0)).unwrap();
    let n = w.norm(&u).unwrap();
    assert!(n.is_finite() && n > 0.0);
    // A mode is largest at the end it grows toward: 2ρ⁻²(X)|β|.
    let linf = linf_norm(&u, None, LinfGrid::default()).unwrap();
    let x = u.half_extent();
    let expected = 2.0 * rho_inv_sq_unchecked(ell, x);
    assert!((linf / expected - 1.0).abs() < 1e-12);
    assert!(FourierQD::from_raw(ell, 2, &[(2, c(1.0, 0.0))]).is_err());
}

#[test]
fn chart_mismatch_is_an_error() {
    let u = FourierQD::dz2(0.5, 1).unwrap();
    let v = FourierQD::dz2(0.6, 1).unwrap();
    assert!(matches!(inner_product(&u, &v, &spec()), Err(Error::ChartMismatch(..))));
    assert!(matches!(u.axpy(c(1.0, 0.0), &v), Err(Error::ChartMismatch(..))));
}

#[test]
fn length_derivatives() {
    let ell = 0.25;
    let u = sample(ell);
    let b0 = u.principal_part();
    assert_eq!(u.d_ell_complex(), -(PI * PI / ell) * b0);
    assert_eq!(u.d_ell_real(), -(2.0 * PI * PI / ell) * b0.re);
    assert_eq!(u.decay_part().d_ell_real(), 0.0);
}

#[test]
fn twist_pairing_sees_only_principal_part() {
    for ell in [0.1, 1.0] {
        let u = sample(ell);
        let expect = 8.0 * PI * I * u.principal_part();
        for p in TwistProfile::alternates_for(u.half_extent()) {
            let got = twist_pairing(&u, &p, &spec()).unwrap();
            assert!((got - expect).norm() < 1e-9 * expect.norm(), "{p:?}: {got} vs {expect}");
        }
    }
    let u = sample(1.0);
    let bad = TwistProfile::new(TwistShape::Trigonometric, -1.0, 2.0 * u.half_extent()).unwrap();
    assert!(twist_pairing(&u, &bad, &spec()).is_err());
}

#[test]
fn length_tensor_pairing_matches_pointwise_quadrature() {
    // ⟨Re u, ξ₁(ds²−dθ²) + ξ₂(ds²+dθ²)⟩ = 2∫∫ Re(u) ξ₁ ρ⁻² ds dθ; the trace part
    // is orthogonal to every trace-free tensor.
    let ell = 0.7;
    let u = sample(ell);
    let x = u.half_extent();
    let h = LengthTensorProfile::bump(-0.6 * x, 0.4 * x, 1.3, 5.0).unwrap();
    let thetas = circle_nodes(16);
    let f = |s: f64| {
        let mean = thetas.iter().map(|&t| u.eval(s, t).re).sum::<f64>() / 16.0;
        2.0 * 2.0 * PI * mean * h.xi1(s) * rho_inv_sq_unchecked(ell, s)
    };
    let slow = integrate(f, h.start, h.end, &spec()).unwrap().value;
    let fast = length_tensor_pairing(&u, &h, &spec()).unwrap();
    assert!((fast - slow).abs() < 1e-10 * slow.abs());
}

#[test]
fn dz2_norms_by_grid() {
    let ell = 0.3;
    let u = FourierQD::dz2(ell, 0).unwrap();
    let norms = crate::collar::dz2_norms(ell, &spec()).unwrap();
    let linf = linf_norm(&u, None, LinfGrid::default()).unwrap();
    assert!((linf / norms.linf - 1.0).abs() < 1e-12);
    let l1 = l1_norm(&u, &spec(), 4).unwrap();
    assert!((l1 / norms.l1 - 1.0).abs() < 1e-10);
    // |dz²| = 2ρ⁻² peaks at the core curve.
    let off = linf_norm(&u, Some((1.0, 2.0)), LinfGrid::default()).unwrap();
    assert!(off < linf);
    assert!(linf_norm(&u, Some((0.0, 2.0 * u.half_extent())), LinfGrid::default()).is_err());
}

#[test]
fn json_roundtrip() {
    let u = sample(0.05);
    let s = serde_json::to_string(&u).unwrap();
    assert!(s.contains("\"scaling\":\"boundary\""));
    let back: FourierQD = serde_json::from_str(&s).unwrap();
    assert_eq!(back, u);
    let bad = s.replace("boundary", "raw");
    assert!(serde_json::from_str::<FourierQD>(&bad).is_err());
}

fn arb_qd() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<(f64, f64)>, (f64, f64))> {
    let v = || prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 5);
    (v(), v(), (-2.0f64..2.0, -2.0f64..2.0))
}

fn build(ell: f64, v: &[(f64, f64)]) -> FourierQD {
    FourierQD::from_scaled(ell, v.iter().map(|&(a, b)| c(a, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairing_is_hermitian_and_sesquilinear((a, b, (ar, ai)) in arb_qd(), ell in 0.01f64..3.0) {
        let w = ModeWeights::compute(ell, 2, &QuadratureSpec::default()).unwrap();
        let (u, v) = (build(ell, &a), build(ell, &b));
        let uv = w.inner_product(&u, &v).unwrap();
        let vu = w.inner_product(&v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() <= 1e-12 * (1.0 + uv.norm()));
        let alpha = c(ar, ai);
        let lhs = w.inner_product(&u.axpy(alpha, &v).unwrap(), &v).unwrap();
        let rhs = alpha * uv + w.inner_product(&v, &v).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm() + rhs.norm()));
        prop_assert!(w.inner_product(&u, &u).unwrap().re >= 0.0);
    }
}
