//! Dual bases of the length and twist differentials in the model space.
//!
//! Everything is computed on coefficient vectors `t ∈ ℂ^k` standing for
//! `Σ t_m e_m`:
//!
//! * `Θ^j` solves `∂ℓ_i(Θ^j) = δ_i^j`, `Ω^j = −Θ^j/‖Θ^j‖`;
//! * `Ψ^j` solves `⟨e_m, Ψ^j⟩ = 8πi b₀(e_m, collar j)` for every `m`;
//! * `Ψ^j/‖Ψ^j‖ = −a_j iΩ^j + iΣ_{k≠j} c_k Ω^k` with real `a_j, c_k`;
//! * `Λ^j = ½Θ^j + iΣ_k c_k Ω^k` for supplied real `c`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::modelspace::{build_generators, unit, GeneratorSet, ModelSurface};
use crate::qdiff::{length_tensor_pairing, LengthTensorProfile, LinfGrid};
use crate::quadrature::QuadratureSpec;
use crate::verify::{config_hash, run_sweep, SweepPlan, SweepQuantity, SweepRow, SweepTable};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `∂ℓ_i(u) = −(π²/ℓ_i) b₀(u, collar i)` for every collar.
pub fn d_ell_complex(gens: &GeneratorSet, t: &CVector) -> CVector {
    let b = gens.principal_parts(t);
    CVector::from_fn(gens.k(), |i, _| -(PI * PI / gens.ell(i)) * b[i])
}

/// `dℓ_i(Re u) = −(2π²/ℓ_i) Re b₀(u, collar i)`.
pub fn d_ell_real(gens: &GeneratorSet, t: &CVector) -> Vec<f64> {
    let b = gens.principal_parts(t);
    (0..gens.k()).map(|i| -(2.0 * PI * PI / gens.ell(i)) * b[i].re).collect()
}

/// `Θ^1, …, Θ^k` and the condition number of the length matrix.
pub fn solve_theta(gens: &GeneratorSet) -> Result<(Vec<CVector>, f64)> {
    let k = gens.k();
    let a = CMatrix::from_fn(k, k, |i, m| -(PI * PI / gens.ell(i)) * gens.principal[(i, m)]);
    let s = linalg::solve(&a, &CMatrix::identity(k, k), "length matrix (isomorphism failure)")?;
    Ok(((0..k).map(|j| s.x.column(j).into_owned()).collect(), s.condition))
}

pub fn solve_omega(gens: &GeneratorSet, theta: &[CVector]) -> Result<Vec<CVector>> {
    theta
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let n = gens.norm_coeffs(t);
            if !(n > 0.0) {
                return Err(Error::Singular(format!("Θ^{j} vanishes")));
            }
            let w = t * re(-1.0 / n);
            let b = gens.principal_parts(&w)[j];
            if !(b.re > 0.0) {
                return Err(Error::ModelConsistency(format!("b₀(Ω^{j}) = {b} is not positive")));
            }
            Ok(w)
        })
        .collect()
}

/// `Ψ^1, …, Ψ^k` from the Gram system.
pub fn solve_psi(gens: &GeneratorSet) -> Result<Vec<CVector>> {
    let k = gens.k();
    // ⟨e_m, Ψ⟩ = Σ_n G_mn conj(p_n) = 8πi B_jm, so p = conj(G⁻¹ r).
    let rhs = CMatrix::from_fn(k, k, |m, j| 8.0 * PI * I * gens.principal[(j, m)]);
    let s = linalg::solve(&gens.gram, &rhs, "generator Gram")?;
    Ok((0..k).map(|j| s.x.column(j).map(|z| z.conj())).collect())
}

/// `max_m |⟨e_m, Ψ^j⟩ − 8πi b₀(e_m, collar j)|` over all `j`.
pub fn psi_pairing_residual(gens: &GeneratorSet, psi: &[CVector]) -> f64 {
    let k = gens.k();
    let mut worst = 0.0f64;
    for (j, p) in psi.iter().enumerate() {
        for m in 0..k {
            let lhs = gens.inner_coeffs(&unit(k, m), p);
            worst = worst.max((lhs - 8.0 * PI * I * gens.principal[(j, m)]).norm());
        }
    }
    worst
}

/// `max_{i,j} |∂ℓ_i(Θ^j) − δ_i^j|`.
pub fn theta_duality_residual(gens: &GeneratorSet, theta: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (j, t) in theta.iter().enumerate() {
        for (i, v) in d_ell_complex(gens, t).iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - delta).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiDecomposition {
    pub a: f64,
    /// `c_k`, with `c_j = 0`.
    pub c: Vec<f64>,
    /// Largest imaginary part discarded from `a` and the `c_k`.
    pub realness_residual: f64,
}

pub fn decompose_psi(gens: &GeneratorSet, psi_j: &CVector, j: usize, omega: &[CVector]) -> Result<PsiDecomposition> {
    let k = gens.k();
    let w = CMatrix::from_fn(k, k, |m, l| omega[l][m]);
    let unit_psi = psi_j * re(1.0 / gens.norm_coeffs(psi_j));
    let (x, _) = linalg::solve_vec(&w, &unit_psi, "Ω basis")?;
    // x_j = −i a, x_l = i c_l.
    let a = I * x[j];
    let mut c = vec![0.0; k];
    let mut residual = a.im.abs();
    for l in (0..k).filter(|&l| l != j) {
        let cl = -I * x[l];
        residual = residual.max(cl.im.abs());
        c[l] = cl.re;
    }
    if residual > 1e-8 {
        return Err(Error::ModelConsistency(format!(
            "Ψ^{j} decomposition has imaginary residual {residual:.3e}"
        )));
    }
    if !(a.re > 0.0) {
        return Err(Error::ModelConsistency(format!("Ψ^{j} decomposition has a = {} ≤ 0", a.re)));
    }
    Ok(PsiDecomposition {
        a: a.re,
        c,
        realness_residual: residual,
    })
}

/// `Λ^j = ½Θ^j + iΣ_k c_k Ω^k`; `c` must be real.
pub fn assemble_lambda(theta_j: &CVector, omega: &[CVector], c: &[Complex64]) -> Result<CVector> {
    if c.len() != omega.len() {
        return Err(Error::Config(format!("need {} coefficients, got {}", omega.len(), c.len())));
    }
    if let Some(z) = c.iter().find(|z| z.im != 0.0 || !z.re.is_finite()) {
        return Err(Error::Config(format!("Λ coefficients must be real, got {z}")));
    }
    let mut out = theta_j * re(0.5);
    for (ck, w) in c.iter().zip(omega) {
        out += w * (I * ck);
    }
    Ok(out)
}

/// `max_i |dℓ_i(Re Λ^j) − δ_i^j|`.
pub fn lambda_duality_residual(gens: &GeneratorSet, lambda_j: &CVector, j: usize) -> f64 {
    d_ell_real(gens, lambda_j)
        .iter()
        .enumerate()
        .map(|(i, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

/// Coefficients at the magnitudes `|c_k| = ℓ_j ℓ_k^{3/2}` with seeded signs.
pub fn sample_lambda_coefficients(gens: &GeneratorSet, j: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..gens.k())
        .map(|k| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * gens.ell(j) * gens.ell(k).powf(1.5)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RieszResult {
    /// Coefficients of the representative `y`; `Re y` represents `h`.
    #[serde(skip)]
    pub coeffs: CVector,
    /// `dℓ_i(Re y)`.
    pub d_ell: Vec<f64>,
    /// Least-squares real `c` in `y ≈ ½Θ^j + iΣ c_k Ω^k`.
    pub ansatz_c: Vec<f64>,
    /// `‖y − ansatz‖ / ‖y‖`.
    pub ansatz_residual: f64,
}

/// Riesz representative, in the real span of `{e_m, i e_m}`, of the
/// functional `v ↦ ⟨Re v, h^j⟩` where `h^j` is the collar-core tensor
/// `profile` on collar `j` plus a thick part paired through the thick Gram.
pub fn riesz_of_h(
    gens: &GeneratorSet,
    j: usize,
    profile: &LengthTensorProfile,
    thick_part: &[f64],
    spec: &QuadratureSpec,
) -> Result<RieszResult> {
    let k = gens.k();
    if thick_part.len() != gens.surface.thick_dim {
        return Err(Error::Config(format!(
            "thick part has length {}, expected {}",
            thick_part.len(),
            gens.surface.thick_dim
        )));
    }
    let basis: Vec<CVector> = (0..2 * k)
        .map(|a| if a < k { unit(k, a) } else { unit(k, a - k) * I })
        .collect();
    let real_gram = DMatrix::from_fn(2 * k, 2 * k, |a, b| 0.5 * gens.inner_coeffs(&basis[a], &basis[b]).re);
    let tau = DVector::from_column_slice(thick_part);
    let mut rhs = DVector::zeros(2 * k);
    for a in 0..2 * k {
        let g = gens.element(&basis[a])?;
        let collar = length_tensor_pairing(&g.collars[j], profile, spec)?;
        let t_re = DVector::from_iterator(g.thick.len(), g.thick.iter().map(|z| z.re));
        let thick = 0.5 * t_re.dot(&(&gens.thick_gram * &tau));
        rhs[a] = collar + thick;
    }
    let x = linalg::solve_real(&real_gram, &rhs, "real Gram")?;
    let y = CVector::from_fn(k, |m, _| Complex64::new(x[m], x[k + m]));

    let (theta, _) = solve_theta(gens)?;
    let omega = solve_omega(gens, &theta)?;
    let d = &y - &theta[j] * re(0.5);
    // min_c ‖d − Σ c_l iΩ^l‖ over real c: normal equations in the real pairing.
    let cols: Vec<CVector> = omega.iter().map(|w| w * I).collect();
    let normal = DMatrix::from_fn(k, k, |a, b| gens.inner_coeffs(&cols[a], &cols[b]).re);
    let proj = DVector::from_fn(k, |a, _| gens.inner_coeffs(&d, &cols[a]).re);
    let c = linalg::solve_real(&normal, &proj, "ansatz normal equations")?;
    let mut fit = d.clone();
    for (cl, col) in c.iter().zip(&cols) {
        fit -= col * re(*cl);
    }
    let ny = gens.norm_coeffs(&y);
    Ok(RieszResult {
        d_ell: d_ell_real(gens, &y),
        ansatz_c: c.iter().copied().collect(),
        ansatz_residual: if ny > 0.0 { gens.norm_coeffs(&fit) / ny } else { 0.0 },
        coeffs: y,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TildeEntry {
    pub j: usize,
    #[serde(skip)]
    pub omega_tilde: CVector,
    #[serde(skip)]
    pub theta_tilde: CVector,
    /// `b₀(Ω̃^j)‖dz²‖_{L²(C_j)}`.
    pub principal_scaled: f64,
    /// `b₀(Ω^j)‖dz²‖_{L²(C_j)}`, for comparison.
    pub omega_principal_scaled: f64,
    /// `‖Θ̃^j‖ − (ℓ_j/π²)‖dz²‖_{L²(C_j)}`.
    pub norm_residual: f64,
    /// `‖Θ̃^j‖_{L¹}`.
    pub l1: f64,
}

/// `Ω̃^j = (Ω^j − P_W Ω^j)/‖·‖` and `Θ̃^j = −ℓ_j/(π² b₀(Ω̃^j)) Ω̃^j` for `j ∈ S`,
/// with `W` the common kernel of the principal parts on `S`.
pub fn tilde_basis(gens: &GeneratorSet, short: &[usize], spec: &QuadratureSpec) -> Result<Vec<TildeEntry>> {
    if short.is_empty() {
        return Err(Error::Config("short index set must be nonempty".into()));
    }
    let (theta, _) = solve_theta(gens)?;
    let omega = solve_omega(gens, &theta)?;
    short
        .iter()
        .map(|&j| {
            let w = &omega[j];
            let perp = w - gens.project_to_w(w, short)?;
            let n = gens.norm_coeffs(&perp);
            if !(n > 0.0) {
                return Err(Error::Singular(format!("Ω^{j} lies in W")));
            }
            let ot = perp * re(1.0 / n);
            let b0 = gens.principal_parts(&ot)[j];
            let tt = &ot * re(-gens.ell(j) / (PI * PI * b0.re));
            let l1 = gens.l1(&gens.element(&tt)?, spec, 64)?;
            let dz2 = gens.dz2_l2(j);
            Ok(TildeEntry {
                j,
                principal_scaled: b0.re * dz2,
                omega_principal_scaled: gens.principal_parts(w)[j].re * dz2,
                norm_residual: gens.norm_coeffs(&tt) - gens.ell(j) / (PI * PI) * dz2,
                l1,
                omega_tilde: ot,
                theta_tilde: tt,
            })
        })
        .collect()
}

/// Smallest eigenvalue of the Gram matrix of `{Ω^j}` and the bound
/// `(min_j b₀(Ω^j)‖dz²‖)²` it must dominate.
pub fn omega_gram_bound(gens: &GeneratorSet, omega: &[CVector]) -> (f64, f64) {
    let k = omega.len();
    let h = CMatrix::from_fn(k, k, |a, b| gens.inner_coeffs(&omega[a], &omega[b]));
    let lambda_min = linalg::hermitian_eigenvalues(&h)[0];
    let eps1 = (0..k)
        .map(|j| gens.principal_parts(&omega[j])[j].re * gens.dz2_l2(j))
        .fold(f64::INFINITY, f64::min);
    (lambda_min, eps1 * eps1)
}

#[derive(Debug, Clone, Serialize)]
pub struct DualDiagnostics {
    pub j: usize,
    pub ell: f64,
    pub theta_norm: f64,
    /// `b₀(Ω^j, collar j)`.
    pub omega_principal: f64,
    pub psi_norm: f64,
    /// `(Re, Im) b₀(Ψ^j, collar i)` for every `i`.
    pub psi_principal: Vec<(f64, f64)>,
    pub decomposition: PsiDecomposition,
    pub lambda_c: Vec<f64>,
    pub lambda_duality_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualBasisSet {
    #[serde(skip)]
    pub theta: Vec<CVector>,
    #[serde(skip)]
    pub omega: Vec<CVector>,
    #[serde(skip)]
    pub psi: Vec<CVector>,
    #[serde(skip)]
    pub lambda: Vec<CVector>,
    pub length_matrix_condition: f64,
    pub theta_duality_residual: f64,
    pub psi_pairing_residual: f64,
    pub psi_max_real_principal: f64,
    pub omega_gram_min_eigenvalue: f64,
    pub omega_gram_lower_bound: f64,
    pub diagnostics: Vec<DualDiagnostics>,
}

impl DualBasisSet {
    /// All four bases; `Λ^j` uses coefficients sampled at the magnitudes
    /// `ℓ_j ℓ_k^{3/2}` from `lambda_seed`.
    pub fn compute(gens: &GeneratorSet, lambda_seed: u64) -> Result<Self> {
        let k = gens.k();
        let (theta, cond) = solve_theta(gens)?;
        let omega = solve_omega(gens, &theta)?;
        let psi = solve_psi(gens)?;
        let mut lambda = Vec::with_capacity(k);
        let mut diagnostics = Vec::with_capacity(k);
        let mut max_re = 0.0f64;
        for j in 0..k {
            let bpsi = gens.principal_parts(&psi[j]);
            max_re = bpsi.iter().map(|z| z.re.abs()).fold(max_re, f64::max);
            let decomposition = decompose_psi(gens, &psi[j], j, &omega)?;
            let c = sample_lambda_coefficients(gens, j, lambda_seed);
            let cz: Vec<Complex64> = c.iter().map(|&x| re(x)).collect();
            let l = assemble_lambda(&theta[j], &omega, &cz)?;
            diagnostics.push(DualDiagnostics {
                j,
                ell: gens.ell(j),
                theta_norm: gens.norm_coeffs(&theta[j]),
                omega_principal: gens.principal_parts(&omega[j])[j].re,
                psi_norm: gens.norm_coeffs(&psi[j]),
                psi_principal: bpsi.iter().map(|z| (z.re, z.im)).collect(),
                decomposition,
                lambda_duality_residual: lambda_duality_residual(gens, &l, j),
                lambda_c: c,
            });
            lambda.push(l);
        }
        let (lmin, bound) = omega_gram_bound(gens, &omega);
        Ok(Self {
            length_matrix_condition: cond,
            theta_duality_residual: theta_duality_residual(gens, &theta),
            psi_pairing_residual: psi_pairing_residual(gens, &psi),
            psi_max_real_principal: max_re,
            omega_gram_min_eigenvalue: lmin,
            omega_gram_lower_bound: bound,
            theta,
            omega,
            psi,
            lambda,
            diagnostics,
        })
    }

    /// `‖Ψ^j/‖Ψ^j‖ + iΩ^j‖_{L∞}`.
    pub fn psi_omega_linf(&self, gens: &GeneratorSet, j: usize, grid: LinfGrid) -> Result<f64> {
        let p = &self.psi[j] * re(1.0 / gens.norm_coeffs(&self.psi[j])) + &self.omega[j] * I;
        gens.linf(&gens.element(&p)?, grid)
    }

    /// `‖Λ^j − ½Θ^j‖_{L∞}`.
    pub fn lambda_theta_linf(&self, gens: &GeneratorSet, j: usize, grid: LinfGrid) -> Result<f64> {
        let d = &self.lambda[j] - &self.theta[j] * re(0.5);
        gens.linf(&gens.element(&d)?, grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonBucket {
    pub ell_min: f64,
    /// `min b₀(Ω^j)‖dz²‖_{L²(C_j)}` over collars with `ℓ_j ≥ ell_min`;
    /// `None` when no collar qualifies.
    pub epsilon: Option<f64>,
}

/// Measured stand-in for the lower bounds on normalized principal parts.
pub fn epsilon_report(configs: &[ModelSurface], buckets: &[f64], spec: &QuadratureSpec) -> Result<Vec<EpsilonBucket>> {
    if configs.is_empty() {
        return Err(Error::Config("epsilon report needs at least one model".into()));
    }
    let mut samples = Vec::new();
    for cfg in configs {
        let gens = build_generators(cfg, spec)?;
        let (theta, _) = solve_theta(&gens)?;
        let omega = solve_omega(&gens, &theta)?;
        for (j, w) in omega.iter().enumerate() {
            samples.push((gens.ell(j), gens.principal_parts(w)[j].re * gens.dz2_l2(j)));
        }
    }
    Ok(buckets
        .iter()
        .map(|&ell_min| EpsilonBucket {
            ell_min,
            epsilon: samples
                .iter()
                .filter(|(l, _)| *l >= ell_min)
                .map(|(_, e)| *e)
                .reduce(f64::min),
        })
        .collect())
}

/// Quantities recorded by [`dual_sweep`], in column order.
pub const DUAL_QUANTITIES: [&str; 5] = [
    "theta_norm_sq_residual",
    "psi_norm_residual",
    "psi_omega_linf",
    "one_minus_a",
    "lambda_theta_linf",
];

/// `base` with collar `swept` set to `ell`.
pub fn model_at(base: &ModelSurface, swept: usize, ell: f64) -> Result<ModelSurface> {
    if swept >= base.k() {
        return Err(Error::Config(format!("swept collar {swept} out of range for k = {}", base.k())));
    }
    let mut m = base.clone();
    m.collars[swept] = ell;
    Ok(m)
}

/// The five asymptotic quantities for collar `swept` at length `ell`:
/// `|‖Θ‖² − 32π/ℓ|`, `|‖Ψ‖ − 8π/‖dz²‖|`, `‖Ψ/‖Ψ‖ + iΩ‖_{L∞}`, `|1 − a|`
/// and `‖Λ − ½Θ‖_{L∞}`.
pub fn dual_sweep_point(
    base: &ModelSurface,
    swept: usize,
    ell: f64,
    spec: &QuadratureSpec,
    grid: LinfGrid,
) -> Result<[f64; 5]> {
    let cfg = model_at(base, swept, ell)?;
    let gens = build_generators(&cfg, spec)?;
    let set = DualBasisSet::compute(&gens, cfg.seed)?;
    let d = &set.diagnostics[swept];
    Ok([
        (d.theta_norm * d.theta_norm - 32.0 * PI / ell).abs(),
        (d.psi_norm - 8.0 * PI / gens.dz2_l2(swept)).abs(),
        set.psi_omega_linf(&gens, swept, grid)?,
        (1.0 - d.decomposition.a).abs(),
        set.lambda_theta_linf(&gens, swept, grid)?,
    ])
}

/// [`dual_sweep_point`] over a grid, points evaluated in parallel.
pub fn dual_sweep(
    base: &ModelSurface,
    swept: usize,
    ell_grid: &[f64],
    spec: &QuadratureSpec,
    grid: LinfGrid,
) -> Result<SweepTable> {
    let plan = SweepPlan {
        grid: ell_grid.to_vec(),
        quantities: vec![SweepQuantity::new("all", |_| Ok(0.0))],
        config_hash: config_hash(base.canonical_json().as_bytes()),
        seed: base.seed,
        output: None,
    };
    // validates the grid
    run_sweep(&plan)?;
    let points: Vec<[f64; 5]> = ell_grid
        .par_iter()
        .map(|&ell| dual_sweep_point(base, swept, ell, spec, grid))
        .collect::<Result<_>>()?;
    let rows = ell_grid
        .iter()
        .zip(points)
        .flat_map(|(&ell, v)| {
            DUAL_QUANTITIES.iter().zip(v).map(move |(q, value)| SweepRow {
                ell,
                quantity: q.to_string(),
                value,
            })
        })
        .collect();
    Ok(SweepTable {
        config_hash: plan.config_hash,
        seed: plan.seed,
        rows,
    })
}
