//! A finite-dimensional stand-in for the space of holomorphic quadratic
//! differentials: the complex span of `k` generators, each given by Fourier
//! data on `k` collar charts plus coordinates in an abstract thick block.
//!
//! Generator `e_j` has a real positive principal part on collar `j` and none
//! on the other collars, collar-decay modes on collar `j` of sup norm at most
//! `decay_scale·ℓ_j^{3/2}`, and zero-principal-part content on the other
//! collars and in the thick block of size at most `cross_scale·ℓ_j^{3/2}`.
//!
//! All generators share one phase per (collar, mode) and use real thick
//! coordinates against a real thick Gram matrix, so the Gram matrix of the
//! generators is real symmetric.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collar::{half_extent, rho_inv_sq_unchecked};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::qdiff::{l1_norm, linf_norm, FourierQD, FourierQDRecord, LinfGrid, ModeWeights, DEFAULT_TRUNCATION};
use crate::quadrature::QuadratureSpec;

pub const DEFAULT_SEED: u64 = 20_240_601;

fn default_thick_dim() -> usize {
    2
}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_one() -> f64 {
    1.0
}

fn default_l_bar() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSurface {
    /// Collar lengths `ℓ_1, …, ℓ_k`.
    pub collars: Vec<f64>,
    #[serde(default = "default_thick_dim")]
    pub thick_dim: usize,
    /// Real symmetric positive definite, `thick_dim × thick_dim`; identity if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thick_gram: Option<Vec<Vec<f64>>>,
    /// Short-geodesic threshold.
    #[serde(default = "default_one")]
    pub eta: f64,
    #[serde(default = "default_l_bar")]
    pub l_bar: f64,
    #[serde(default = "default_one")]
    pub decay_scale: f64,
    #[serde(default = "default_one")]
    pub cross_scale: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

impl ModelSurface {
    pub fn with_collars(collars: Vec<f64>) -> Self {
        Self {
            collars,
            thick_dim: default_thick_dim(),
            thick_gram: None,
            eta: 1.0,
            l_bar: default_l_bar(),
            decay_scale: 1.0,
            cross_scale: 1.0,
            seed: DEFAULT_SEED,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn k(&self) -> usize {
        self.collars.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.collars.is_empty() {
            return Err(Error::Config("model needs at least one collar".into()));
        }
        if !(self.l_bar > 0.0 && self.l_bar.is_finite()) {
            return Err(Error::Config(format!("L̄ must be positive, got {}", self.l_bar)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("η must be positive, got {}", self.eta)));
        }
        for &l in &self.collars {
            if !(l > 0.0 && l <= self.l_bar) {
                return Err(Error::Config(format!("collar length {l} outside (0, L̄ = {}]", self.l_bar)));
            }
        }
        for (name, v) in [("decay_scale", self.decay_scale), ("cross_scale", self.cross_scale)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        let g = self.thick_gram_matrix()?;
        if g.clone().cholesky().is_none() {
            return Err(Error::Config("thick_gram is not positive definite".into()));
        }
        Ok(())
    }

    pub fn thick_gram_matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.thick_dim;
        match &self.thick_gram {
            None => Ok(DMatrix::identity(d, d)),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Config(format!("thick_gram must be {d}×{d}")));
                }
                let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                if (0..d).any(|i| (0..d).any(|j| m[(i, j)] != m[(j, i)])) {
                    return Err(Error::Config("thick_gram must be symmetric".into()));
                }
                Ok(m)
            }
        }
    }

    /// Collars counted as short: `ℓ_j ≤ 2η`.
    pub fn short_indices(&self) -> Vec<usize> {
        (0..self.k()).filter(|&j| self.collars[j] <= 2.0 * self.eta).collect()
    }

    /// Canonical rendering used for configuration hashes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("model surface serializes")
    }
}

/// Per-collar Fourier data plus thick coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelElement {
    pub collars: Vec<FourierQD>,
    pub thick: Vec<Complex64>,
}

impl ModelElement {
    pub fn principal_part(&self, collar: usize) -> Complex64 {
        self.collars[collar].principal_part()
    }

    pub fn axpy(&self, alpha: Complex64, other: &Self) -> Result<Self> {
        Ok(Self {
            collars: self
                .collars
                .iter()
                .zip(&other.collars)
                .map(|(u, v)| u.axpy(alpha, v))
                .collect::<Result<_>>()?,
            thick: self.thick.iter().zip(&other.thick).map(|(a, b)| alpha * a + b).collect(),
        })
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self {
            collars: self.collars.iter().map(|u| u.scale(alpha)).collect(),
            thick: self.thick.iter().map(|t| alpha * t).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelElementRecord {
    pub collars: Vec<FourierQDRecord>,
    pub thick: Vec<(f64, f64)>,
}

impl From<&ModelElement> for ModelElementRecord {
    fn from(e: &ModelElement) -> Self {
        Self {
            collars: e.collars.iter().map(FourierQDRecord::from).collect(),
            thick: e.thick.iter().map(|z| (z.re, z.im)).collect(),
        }
    }
}

/// Generators, their Gram matrix and principal-part matrix.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub surface: ModelSurface,
    pub weights: Vec<ModeWeights>,
    pub thick_gram: DMatrix<f64>,
    /// Unit-norm generators.
    pub generators: Vec<ModelElement>,
    /// Generators before unit normalization.
    pub unnormalized: Vec<ModelElement>,
    /// `‖·‖` of the unnormalized generators.
    pub unnormalized_norms: Vec<f64>,
    /// `G_{mn} = ⟨e_m, e_n⟩`.
    pub gram: CMatrix,
    /// `B_{ij} = b₀(e_j, collar i)`.
    pub principal: CMatrix,
}

/// `2ρ⁻²(X)`: sup over the chart of `|e^{n(s+iθ) − |n|X}|·2ρ⁻²`.
fn end_weight(ell: f64) -> Result<f64> {
    Ok(2.0 * rho_inv_sq_unchecked(ell, half_extent(ell)?))
}

/// Fills the modes `n ≠ 0` of `u` with amplitudes whose positive and
/// negative halves each sum to `budget/2`.
fn fill_decay(u: &mut FourierQD, shape: &[f64], phases: &[f64], budget: f64) -> Result<()> {
    let n = u.truncation();
    if n == 0 || budget == 0.0 {
        return Ok(());
    }
    let pos: f64 = shape[n..].iter().sum();
    let neg: f64 = shape[..n].iter().sum();
    for (k, (&w, &phi)) in shape.iter().zip(phases).enumerate() {
        let mode = if k < n { k as i32 - n as i32 } else { (k - n + 1) as i32 };
        let half = if mode > 0 { pos } else { neg };
        u.set_scaled(mode, Complex64::from_polar(0.5 * budget * w / half, phi))?;
    }
    Ok(())
}

pub fn build_generators(cfg: &ModelSurface, spec: &QuadratureSpec) -> Result<GeneratorSet> {
    cfg.validate()?;
    let k = cfg.k();
    let n = cfg.truncation;
    let d = cfg.thick_dim;
    let thick_gram = cfg.thick_gram_matrix()?;
    let weights = cfg
        .collars
        .iter()
        .map(|&l| ModeWeights::compute(l, n, spec))
        .collect::<Result<Vec<_>>>()?;

    // Draw order is fixed and independent of the lengths: phases per
    // (collar, mode), then per generator its own-collar shape, its shapes
    // on the other collars, and its thick direction.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phases: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..2 * n).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
        .collect();
    let shape = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..2 * n)
            .map(|idx| {
                let mode = if idx < n { n - idx } else { idx - n + 1 };
                rng.random_range(0.5..1.0) * 0.5f64.powi(mode as i32 - 1)
            })
            .collect()
    };

    let mut unnormalized = Vec::with_capacity(k);
    for j in 0..k {
        let ell_j = cfg.collars[j];
        let rate = ell_j.powf(1.5);
        let mut collars = Vec::with_capacity(k);
        for i in 0..k {
            let ell_i = cfg.collars[i];
            let mut u = FourierQD::zero(ell_i, n)?;
            let s = shape(&mut rng);
            if i == j {
                u.set_scaled(0, Complex64::new(1.0 / weights[i].dz2_l2_sq().sqrt(), 0.0))?;
                fill_decay(&mut u, &s, &phases[i], cfg.decay_scale * rate / end_weight(ell_i)?)?;
            } else {
                fill_decay(&mut u, &s, &phases[i], cfg.cross_scale * rate / end_weight(ell_i)?)?;
            }
            collars.push(u);
        }
        let dir: DVector<f64> = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let amp: f64 = rng.random_range(0.5..1.0);
        let gnorm = dir.dot(&(&thick_gram * &dir)).sqrt();
        let thick = if d == 0 || gnorm == 0.0 || cfg.cross_scale == 0.0 {
            vec![Complex64::new(0.0, 0.0); d]
        } else {
            dir.iter()
                .map(|x| Complex64::new(cfg.cross_scale * rate * amp * x / gnorm, 0.0))
                .collect()
        };
        unnormalized.push(ModelElement { collars, thick });
    }

    let mut set = GeneratorSet {
        surface: cfg.clone(),
        weights,
        thick_gram,
        generators: Vec::new(),
        unnormalized_norms: Vec::new(),
        unnormalized,
        gram: CMatrix::zeros(k, k),
        principal: CMatrix::zeros(k, k),
    };
    for j in 0..k {
        let norm = set.norm(&set.unnormalized[j])?;
        set.unnormalized_norms.push(norm);
        let e = set.unnormalized[j].scale(Complex64::new(1.0 / norm, 0.0));
        let lower = e.principal_part(j).re * set.dz2_l2(j);
        if lower < 0.5 {
            return Err(Error::Config(format!(
                "decay/cross budget too large on collar {j}: normalized principal part {lower:.3} < 1/2"
            )));
        }
        set.generators.push(e);
    }
    for m in 0..k {
        for l in 0..k {
            set.gram[(m, l)] = set.inner(&set.generators[m], &set.generators[l])?;
        }
        for i in 0..k {
            set.principal[(i, m)] = set.generators[m].principal_part(i);
        }
    }
    if linalg::hermitian_eigenvalues(&set.gram)[0] <= 0.0 {
        return Err(Error::ModelConsistency("generator Gram matrix is not positive definite".into()));
    }
    Ok(set)
}

impl GeneratorSet {
    pub fn k(&self) -> usize {
        self.surface.k()
    }

    pub fn ell(&self, i: usize) -> f64 {
        self.surface.collars[i]
    }

    /// `‖dz²‖_{L²}` on collar `i`.
    pub fn dz2_l2(&self, i: usize) -> f64 {
        self.weights[i].dz2_l2_sq().sqrt()
    }

    /// Hermitian pairing of two model elements.
    pub fn inner(&self, u: &ModelElement, v: &ModelElement) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (w, (a, b)) in self.weights.iter().zip(u.collars.iter().zip(&v.collars)) {
            total += w.inner_product(a, b)?;
        }
        Ok(total + self.thick_inner(&u.thick, &v.thick))
    }

    fn thick_inner(&self, t: &[Complex64], s: &[Complex64]) -> Complex64 {
        let d = t.len();
        let mut z = Complex64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                z += t[a] * self.thick_gram[(a, b)] * s[b].conj();
            }
        }
        z
    }

    pub fn norm(&self, u: &ModelElement) -> Result<f64> {
        Ok(self.inner(u, u)?.re.max(0.0).sqrt())
    }

    /// `Σ_m t_m e_m`.
    pub fn element(&self, t: &CVector) -> Result<ModelElement> {
        let mut acc = self.generators[0].scale(t[0]);
        for m in 1..self.k() {
            acc = self.generators[m].axpy(t[m], &acc)?;
        }
        Ok(acc)
    }

    /// `⟨Σ t_m e_m, Σ s_n e_n⟩ = Σ t_m G_{mn} conj(s_n)`.
    pub fn inner_coeffs(&self, t: &CVector, s: &CVector) -> Complex64 {
        let gs = &self.gram * s.map(|z| z.conj());
        t.iter().zip(gs.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_coeffs(&self, t: &CVector) -> f64 {
        self.inner_coeffs(t, t).re.max(0.0).sqrt()
    }

    /// `b₀(Σ t_m e_m, collar i)` for every `i`.
    pub fn principal_parts(&self, t: &CVector) -> CVector {
        &self.principal * t
    }

    /// Coefficients `r_i` with `⟨v, r_i⟩ = b₀(v, collar i)` for all `v`.
    pub fn principal_riesz(&self, i: usize) -> Result<CVector> {
        let rhs = self.principal.row(i).transpose();
        let (x, _) = linalg::solve_vec(&self.gram, &rhs, "generator Gram")?;
        Ok(x.map(|z| z.conj()))
    }

    /// Orthogonal projection onto `W_S = {v : b₀(v, collar i) = 0 for i ∈ S}`.
    pub fn project_to_w(&self, t: &CVector, indices: &[usize]) -> Result<CVector> {
        if indices.is_empty() {
            return Ok(t.clone());
        }
        let r: Vec<CVector> = indices.iter().map(|&i| self.principal_riesz(i)).collect::<Result<_>>()?;
        let s = r.len();
        // Σ_a α_a ⟨r_a, r_b⟩ = ⟨t, r_b⟩.
        let m = CMatrix::from_fn(s, s, |b, a| self.inner_coeffs(&r[a], &r[b]));
        let rhs = CVector::from_fn(s, |b, _| self.inner_coeffs(t, &r[b]));
        let (alpha, _) = linalg::solve_vec(&m, &rhs, "reduced Gram")?;
        let mut out = t.clone();
        for (a, ra) in alpha.iter().zip(&r) {
            out -= ra * *a;
        }
        Ok(out)
    }

    /// Sup norm: the largest collar grid maximum or the thick norm.
    pub fn linf(&self, u: &ModelElement, grid: LinfGrid) -> Result<f64> {
        let mut m = self.thick_inner(&u.thick, &u.thick).re.max(0.0).sqrt();
        for q in &u.collars {
            m = m.max(linf_norm(q, None, grid)?);
        }
        Ok(m)
    }

    /// Sup norm of the content away from the principal part on collar `j`.
    pub fn linf_off_principal(&self, u: &ModelElement, j: usize, grid: LinfGrid) -> Result<f64> {
        let mut v = u.clone();
        v.collars[j] = v.collars[j].decay_part();
        self.linf(&v, grid)
    }

    /// `L¹` norm: collar quadratures plus the thick norm.
    pub fn l1(&self, u: &ModelElement, spec: &QuadratureSpec, theta_points: usize) -> Result<f64> {
        let mut total = self.thick_inner(&u.thick, &u.thick).re.max(0.0).sqrt();
        for q in &u.collars {
            total += l1_norm(q, spec, theta_points)?;
        }
        Ok(total)
    }

    pub fn dump(&self) -> GeneratorSetDump {
        let mat = |m: &CMatrix| -> Vec<Vec<(f64, f64)>> {
            m.row_iter().map(|r| r.iter().map(|z| (z.re, z.im)).collect()).collect()
        };
        GeneratorSetDump {
            schema: 1,
            surface: self.surface.clone(),
            generators: self.generators.iter().map(ModelElementRecord::from).collect(),
            gram: mat(&self.gram),
            principal: mat(&self.principal),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorSetDump {
    pub schema: u32,
    pub surface: ModelSurface,
    pub generators: Vec<ModelElementRecord>,
    pub gram: Vec<Vec<(f64, f64)>>,
    pub principal: Vec<Vec<(f64, f64)>>,
}

pub fn unit(k: usize, j: usize) -> CVector {
    CVector::from_fn(k, |i, _| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}
