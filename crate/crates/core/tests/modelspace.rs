use collarkit::linalg::{c, CVector};
use collarkit::modelspace::*;
use collarkit::quadrature::QuadratureSpec;
use collarkit::verify::fit_rate;
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn off_diagonal_gram_shrinks_with_the_short_collar() {
    // Cross terms of e_0 are of size ℓ_0^{3/2}, so |G_01| decays at least that fast.
    let pts: Vec<_> = [0.2, 0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&l| {
            let g = build_generators(&ModelSurface::with_collars(vec![l, 0.5]), &spec()).unwrap();
            (l, g.gram[(0, 1)].norm())
        })
        .collect();
    let f = fit_rate(&pts).unwrap();
    assert!(f.slope > 1.4, "{f:?}");
}

#[test]
fn normalized_principal_parts_stay_near_one() {
    let cfg = ModelSurface::with_collars(vec![0.01, 0.1, 0.5, 1.0]);
    let g = build_generators(&cfg, &spec()).unwrap();
    for j in 0..g.k() {
        let beta = g.principal[(j, j)].re * g.dz2_l2(j);
        assert!(beta > 0.5 && beta <= 1.0, "{j}: {beta}");
    }
}

#[test]
fn generators_reproduce_from_seed() {
    let mut cfg = ModelSurface::with_collars(vec![0.05, 0.3]);
    cfg.seed = 99;
    let a = build_generators(&cfg, &spec()).unwrap();
    let b = build_generators(&cfg, &spec()).unwrap();
    assert_eq!(serde_json::to_string(&a.dump()).unwrap(), serde_json::to_string(&b.dump()).unwrap());
    cfg.seed = 100;
    let other = build_generators(&cfg, &spec()).unwrap();
    assert_ne!(other.generators, a.generators);
}

#[test]
fn coefficient_and_element_pairings_agree() {
    let g = build_generators(&ModelSurface::with_collars(vec![0.1, 0.3, 0.5]), &spec()).unwrap();
    let t = CVector::from_vec(vec![c(1.0, -0.5), c(0.2, 0.3), c(-0.7, 0.0)]);
    let s = CVector::from_vec(vec![c(0.0, 1.0), c(-1.0, 0.4), c(0.5, 0.5)]);
    let (u, v) = (g.element(&t).unwrap(), g.element(&s).unwrap());
    let z = g.inner(&u, &v).unwrap();
    assert!((z - g.inner_coeffs(&t, &s)).norm() < 1e-12 * (1.0 + z.norm()));
    let b = g.principal_parts(&t);
    for i in 0..3 {
        assert!((u.principal_part(i) - b[i]).norm() < 1e-14);
    }
}

#[test]
fn dump_has_schema_and_boundary_scaled_coefficients() {
    let g = build_generators(&ModelSurface::with_collars(vec![0.02]), &spec()).unwrap();
    let v: serde_json::Value = serde_json::to_value(g.dump()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["generators"][0]["collars"][0]["scaling"], "boundary");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn principal_part_is_linear(
        a in (-2.0f64..2.0, -2.0f64..2.0),
        t in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2),
        s in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2),
    ) {
        let g = build_generators(&ModelSurface::with_collars(vec![0.1, 0.4]), &spec()).unwrap();
        let mk = |v: &[(f64, f64)]| CVector::from_iterator(2, v.iter().map(|&(r, i)| c(r, i)));
        let (t, s, a) = (mk(&t), mk(&s), c(a.0, a.1));
        let lhs = g.principal_parts(&(&t * a + &s));
        let rhs = g.principal_parts(&t) * a + g.principal_parts(&s);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }
}
