use std::f64::consts::PI;

use collarkit::collar::rho;
use collarkit::dualbasis::*;
use collarkit::linalg::{CMatrix, CVector};
use collarkit::modelspace::{build_generators, GeneratorSet, ModelElement, ModelSurface};
use collarkit::qdiff::{FourierQD, LinfGrid};
use collarkit::quadrature::{circle_nodes, integrate_complex, QuadratureSpec};
use collarkit::verify::fit_rate;
use nalgebra::DMatrix;
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn model() -> ModelSurface {
    ModelSurface::with_collars(vec![0.1, 0.3, 0.5])
}

// 4∫∫ u conj(v) ρ⁻² ds dθ from point values.
fn collar_pairing(u: &FourierQD, v: &FourierQD) -> Complex64 {
    let m = 4 * u.truncation() + 3;
    let thetas = circle_nodes(m);
    let dt = 2.0 * PI / m as f64;
    let x = u.half_extent();
    let ell = u.ell();
    let f = |s: f64| {
        let r = rho(ell, s).unwrap();
        thetas.iter().map(|&t| u.eval(s, t) * v.eval(s, t).conj()).sum::<Complex64>() * dt / (r * r)
    };
    4.0 * integrate_complex(f, -x, x, &QuadratureSpec::default().with_rel_error(1e-13)).unwrap().value
}

// Mean over the core circle s = 0.
fn core_average(u: &FourierQD) -> Complex64 {
    let m = 4 * u.truncation() + 3;
    circle_nodes(m).iter().map(|&t| u.eval(0.0, t)).sum::<Complex64>() / m as f64
}

fn pairing(gens: &GeneratorSet, u: &ModelElement, v: &ModelElement) -> Complex64 {
    let mut z: Complex64 = u.collars.iter().zip(&v.collars).map(|(a, b)| collar_pairing(a, b)).sum();
    let g = &gens.surface.thick_gram_matrix().unwrap();
    for a in 0..u.thick.len() {
        for b in 0..v.thick.len() {
            z += u.thick[a] * g[(a, b)] * v.thick[b].conj();
        }
    }
    z
}

struct Oracle {
    gram: CMatrix,
    principal: CMatrix,
}

impl Oracle {
    fn new(gens: &GeneratorSet) -> Self {
        let k = gens.k();
        let e = &gens.generators;
        Self {
            gram: CMatrix::from_fn(k, k, |m, n| pairing(gens, &e[m], &e[n])),
            principal: CMatrix::from_fn(k, k, |i, m| core_average(&e[m].collars[i])),
        }
    }
}

#[test]
fn bases_agree_with_pointwise_oracle() {
    let gens = build_generators(&model(), &spec()).unwrap();
    let o = Oracle::new(&gens);
    let k = gens.k();
    assert!((&o.gram - &gens.gram).norm() < 1e-10 * o.gram.norm());
    assert!((&o.principal - &gens.principal).norm() < 1e-12 * o.principal.norm());

    let set = DualBasisSet::compute(&gens, 1).unwrap();
    // ∂ℓ_i(Θ^j) = −(π²/ℓ_i) B_im t_m = δ_ij
    let a = DMatrix::from_fn(k, k, |i, m| -(PI * PI / gens.ell(i)) * o.principal[(i, m)]);
    let theta = a.try_inverse().unwrap();
    // Σ_n G_mn conj(p_n) = 8πi B_jm
    let ginv = o.gram.clone().try_inverse().unwrap();
    for j in 0..k {
        let t = theta.column(j).into_owned();
        assert!((&t - &set.theta[j]).norm() < 1e-9 * t.norm(), "Θ^{j}");
        let r = CVector::from_fn(k, |m, _| 8.0 * PI * I * o.principal[(j, m)]);
        let p = (&ginv * r).map(|z| z.conj());
        assert!((&p - &set.psi[j]).norm() < 1e-9 * p.norm(), "Ψ^{j}");
        // Ω^j = −Θ^j/‖Θ^j‖ with the oracle norm
        let el = gens.element(&t).unwrap();
        let n = pairing(&gens, &el, &el).re.sqrt();
        let w = &t * Complex64::new(-1.0 / n, 0.0);
        assert!((&w - &set.omega[j]).norm() < 1e-9 * w.norm(), "Ω^{j}");
    }
}

#[test]
fn real_and_complex_duality_on_model_matrix() {
    for collars in [vec![0.05, 0.5], vec![0.01, 0.02, 0.04], vec![0.4, 0.2, 0.1, 0.9]] {
        let gens = build_generators(&ModelSurface::with_collars(collars.clone()), &spec()).unwrap();
        let set = DualBasisSet::compute(&gens, 7).unwrap();
        assert!(set.theta_duality_residual < 1e-10, "{collars:?}");
        assert!(set.psi_pairing_residual < 1e-10 * 8.0 * PI, "{collars:?}");
        for d in &set.diagnostics {
            assert!(d.lambda_duality_residual < 1e-12, "{collars:?}");
            assert!(d.decomposition.realness_residual < 1e-8);
            // ∂ℓ_i(Θ^j) is real, so Re Θ^j is dual to the lengths as well.
            let real = d_ell_real(&gens, &set.theta[d.j]);
            for (i, v) in real.iter().enumerate() {
                let want = if i == d.j { 2.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn lambda_coefficient_magnitudes() {
    let gens = build_generators(&model(), &spec()).unwrap();
    for j in 0..gens.k() {
        let c = sample_lambda_coefficients(&gens, j, 11);
        for (k, ck) in c.iter().enumerate() {
            assert!((ck.abs() - gens.ell(j) * gens.ell(k).powf(1.5)).abs() < 1e-15);
        }
        assert_eq!(c, sample_lambda_coefficients(&gens, j, 11));
    }
}

#[test]
fn omega_principal_part_scales_like_ell_three_halves() {
    let pts: Vec<_> = [0.2, 0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&l| {
            let gens = build_generators(&model_at(&model(), 0, l).unwrap(), &spec()).unwrap();
            let set = DualBasisSet::compute(&gens, 1).unwrap();
            (l, set.diagnostics[0].omega_principal)
        })
        .collect();
    let f = fit_rate(&pts).unwrap();
    assert!((f.slope - 1.5).abs() < 0.1, "{f:?}");
}

#[test]
fn gram_of_omega_dominates_principal_bound() {
    for cross in [0.0, 0.5, 1.0] {
        let mut m = model();
        m.cross_scale = cross;
        let gens = build_generators(&m, &spec()).unwrap();
        let set = DualBasisSet::compute(&gens, 1).unwrap();
        assert!(set.omega_gram_min_eigenvalue + 1e-10 >= set.omega_gram_lower_bound, "cross {cross}");
    }
}

#[test]
fn epsilon_is_positive_and_shrinks_with_cross_terms() {
    let eps = |cross: f64| {
        let mut m = model();
        m.cross_scale = cross;
        epsilon_report(&[m], &[0.05], &spec()).unwrap()[0].epsilon.unwrap()
    };
    let (small, large) = (eps(0.25), eps(1.0));
    assert!(large > 0.0 && small >= large, "{small} vs {large}");
    assert!(eps(0.0) >= small);
}

#[test]
fn tilde_basis_is_normalized() {
    let gens = build_generators(&model(), &spec()).unwrap();
    let short = gens.surface.short_indices();
    for t in tilde_basis(&gens, &short, &spec()).unwrap() {
        // Projecting away W can only raise the principal part.
        assert!(t.principal_scaled >= t.omega_principal_scaled - 1e-12, "{t:?}");
        let leading = gens.ell(t.j) / (PI * PI) * gens.dz2_l2(t.j);
        let rel = t.norm_residual / leading;
        assert!((rel - (1.0 / t.principal_scaled - 1.0)).abs() < 1e-10, "{t:?}");
    }
}

#[test]
fn sweep_slopes_do_not_depend_on_seed() {
    let grid = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let slopes = |seed: u64| {
        let mut m = model();
        m.seed = seed;
        let t = dual_sweep(&m, 0, &grid, &spec(), LinfGrid::default()).unwrap();
        ["psi_omega_linf", "one_minus_a", "lambda_theta_linf"].map(|q| t.fit(q).unwrap().slope)
    };
    let (a, b) = (slopes(1), slopes(2024));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 0.2, "{a:?} vs {b:?}");
    }
    assert!((a[0] - 1.5).abs() < 0.2 && (a[1] - 3.0).abs() < 0.3 && (a[2] - 1.0).abs() < 0.2, "{a:?}");
}
