//! Quadratic differentials on a collar as truncated Fourier series
//! `Σ b_n e^{n(s+iθ)} dz²`, their hermitian `L²` pairing, the length
//! functionals, and the Dehn-twist generator `K = −i ξ′ ρ² dz²`.
//!
//! Coefficients are stored boundary-scaled: `β_n = b_n e^{|n|X(ℓ)}`. A mode
//! `β_n e^{n s − |n| X}` is then of size `|β_n|` at the chart end it grows
//! toward, which keeps every quantity finite even when `X(ℓ)` is several
//! hundred. Modes beyond the truncation `N` are identically zero.

mod profile;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use profile::{LengthTensorProfile, TwistProfile, TwistShape};

use crate::collar::{half_extent, rho_inv_sq_unchecked, rho_unchecked};
use crate::error::{Error, Result};
use crate::quadrature::{circle_nodes, integrate, integrate_complex, QuadratureSpec};

/// Default Fourier truncation.
pub const DEFAULT_TRUNCATION: usize = 8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A quadratic differential on one collar chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierQD {
    ell: f64,
    half_extent: f64,
    truncation: usize,
    /// `β_{−N}, …, β_N`.
    scaled: Vec<Complex64>,
}

impl FourierQD {
    /// The zero differential.
    pub fn zero(ell: f64, truncation: usize) -> Result<Self> {
        Ok(Self {
            ell,
            half_extent: half_extent(ell)?,
            truncation,
            scaled: vec![Complex64::new(0.0, 0.0); 2 * truncation + 1],
        })
    }

    /// `dz²`, i.e. `b₀ = 1` and all other modes zero.
    pub fn dz2(ell: f64, truncation: usize) -> Result<Self> {
        let mut u = Self::zero(ell, truncation)?;
        u.scaled[truncation] = Complex64::new(1.0, 0.0);
        Ok(u)
    }

    /// Builds from boundary-scaled coefficients `β_{−N..=N}`.
    pub fn from_scaled(ell: f64, scaled: Vec<Complex64>) -> Result<Self> {
        if scaled.len() % 2 == 0 {
            return Err(Error::Config(format!(
                "coefficient vector must have odd length 2N+1, got {}",
                scaled.len()
            )));
        }
        Ok(Self {
            ell,
            half_extent: half_extent(ell)?,
            truncation: scaled.len() / 2,
            scaled,
        })
    }

    /// Builds from raw coefficients `(n, b_n)`. Fails if a raw coefficient
    /// cannot be represented after scaling by `e^{|n|X}`.
    pub fn from_raw(ell: f64, truncation: usize, raw: &[(i32, Complex64)]) -> Result<Self> {
        let mut u = Self::zero(ell, truncation)?;
        for &(n, b) in raw {
            let k = u.index(n).ok_or_else(|| {
                Error::Config(format!("mode {n} beyond truncation {truncation}"))
            })?;
            let beta = b * (n.unsigned_abs() as f64 * u.half_extent).exp();
            if !(beta.re.is_finite() && beta.im.is_finite()) {
                return Err(Error::Domain(format!("mode {n} overflows on collar of length {ell}")));
            }
            u.scaled[k] += beta;
        }
        Ok(u)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn index(&self, n: i32) -> Option<usize> {
        let k = n + self.truncation as i32;
        (k >= 0 && (k as usize) < self.scaled.len()).then_some(k as usize)
    }

    /// Boundary-scaled coefficient `β_n` (zero outside the truncation).
    pub fn scaled(&self, n: i32) -> Complex64 {
        self.index(n).map_or(Complex64::new(0.0, 0.0), |k| self.scaled[k])
    }

    /// Raw Fourier coefficient `b_n = β_n e^{−|n|X}`; may underflow to zero.
    pub fn coefficient(&self, n: i32) -> Complex64 {
        self.scaled(n) * (-(n.unsigned_abs() as f64) * self.half_extent).exp()
    }

    pub fn scaled_coefficients(&self) -> &[Complex64] {
        &self.scaled
    }

    pub fn set_scaled(&mut self, n: i32, value: Complex64) -> Result<()> {
        let k = self
            .index(n)
            .ok_or_else(|| Error::Config(format!("mode {n} beyond truncation {}", self.truncation)))?;
        self.scaled[k] = value;
        Ok(())
    }

    /// Iterator over `(n, β_n)`.
    pub fn modes(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        let n0 = self.truncation as i32;
        self.scaled.iter().enumerate().map(move |(k, &b)| (k as i32 - n0, b))
    }

    /// Value of the coefficient function `Σ b_n e^{n(s+iθ)}` at `(s, θ)`.
    pub fn eval(&self, s: f64, theta: f64) -> Complex64 {
        self.modes()
            .filter(|(_, b)| *b != Complex64::new(0.0, 0.0))
            .map(|(n, b)| {
                let nf = n as f64;
                let growth = (nf * s - nf.abs() * self.half_extent).exp();
                b * Complex64::from_polar(growth, nf * theta)
            })
            .sum()
    }

    /// The principal part `b₀`.
    pub fn principal_part(&self) -> Complex64 {
        self.scaled(0)
    }

    /// The collar decay part `u − b₀ dz²`.
    pub fn decay_part(&self) -> Self {
        let mut d = self.clone();
        d.scaled[self.truncation] = Complex64::new(0.0, 0.0);
        d
    }

    fn same_chart(&self, other: &Self) -> Result<()> {
        if self.ell == other.ell {
            Ok(())
        } else {
            Err(Error::ChartMismatch(self.ell, other.ell))
        }
    }

    fn widened(&self, truncation: usize) -> Self {
        if truncation <= self.truncation {
            return self.clone();
        }
        let pad = truncation - self.truncation;
        let mut scaled = vec![Complex64::new(0.0, 0.0); 2 * truncation + 1];
        scaled[pad..pad + self.scaled.len()].copy_from_slice(&self.scaled);
        Self {
            scaled,
            truncation,
            ..*self
        }
    }

    /// `αu + v` on the common chart.
    pub fn axpy(&self, alpha: Complex64, v: &Self) -> Result<Self> {
        self.same_chart(v)?;
        let n = self.truncation.max(v.truncation);
        let (mut a, b) = (self.widened(n), v.widened(n));
        for (x, y) in a.scaled.iter_mut().zip(&b.scaled) {
            *x = alpha * *x + y;
        }
        Ok(a)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut a = self.clone();
        a.scaled.iter_mut().for_each(|x| *x *= alpha);
        a
    }

    /// `∂ℓ(u) = −(π²/ℓ) b₀`.
    pub fn d_ell_complex(&self) -> Complex64 {
        -(PI * PI / self.ell) * self.principal_part()
    }

    /// `dℓ(Re u) = −(2π²/ℓ) Re b₀`.
    pub fn d_ell_real(&self) -> f64 {
        -(2.0 * PI * PI / self.ell) * self.principal_part().re
    }
}

/// Scaled mode weights `Ŵ_n = e^{−2|n|X} W_n` with
/// `W_n = ⟨e^{nz}dz², e^{nz}dz²⟩ = 8π ∫ e^{2ns} ρ⁻² ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeWeights {
    ell: f64,
    half_extent: f64,
    scaled: Vec<f64>,
}

impl ModeWeights {
    pub fn compute(ell: f64, truncation: usize, spec: &QuadratureSpec) -> Result<Self> {
        let x = half_extent(ell)?;
        let scaled = (0..=truncation)
            .map(|n| scaled_mode_weight(ell, x, n as u32, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ell,
            half_extent: x,
            scaled,
        })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn truncation(&self) -> usize {
        self.scaled.len() - 1
    }

    /// `Ŵ_{|n|}`; `W_n = W_{−n}` by the symmetry `s ↦ −s` of `ρ`.
    pub fn scaled(&self, n: i32) -> f64 {
        self.scaled[n.unsigned_abs() as usize]
    }

    /// `W_0 = ‖dz²‖²_{L²}`.
    pub fn dz2_l2_sq(&self) -> f64 {
        self.scaled[0]
    }

    /// Unscaled `W_n`; infinite when `e^{2|n|X}` overflows.
    pub fn raw(&self, n: i32) -> f64 {
        self.scaled(n) * (2.0 * n.unsigned_abs() as f64 * self.half_extent).exp()
    }

    /// `⟨u, v⟩ = Σ_n b_n(u) conj(b_n(v)) W_n`, linear in `u`.
    pub fn inner_product(&self, u: &FourierQD, v: &FourierQD) -> Result<Complex64> {
        u.same_chart(v)?;
        if u.ell != self.ell {
            return Err(Error::ChartMismatch(u.ell, self.ell));
        }
        let n = u.truncation.max(v.truncation);
        if n > self.truncation() {
            return Err(Error::Config(format!(
                "weights computed to mode {} but differential uses mode {n}",
                self.truncation()
            )));
        }
        let n = n as i32;
        Ok((-n..=n)
            .map(|k| u.scaled(k) * v.scaled(k).conj() * self.scaled(k))
            .sum())
    }

    /// `⟨Re u, Re v⟩ = ½ Re⟨u, v⟩`.
    pub fn real_inner_product(&self, u: &FourierQD, v: &FourierQD) -> Result<f64> {
        Ok(0.5 * self.inner_product(u, v)?.re)
    }

    pub fn norm(&self, u: &FourierQD) -> Result<f64> {
        Ok(self.inner_product(u, u)?.re.max(0.0).sqrt())
    }
}

fn scaled_mode_weight(ell: f64, x: f64, n: u32, spec: &QuadratureSpec) -> Result<f64> {
    let n = n as f64;
    let f = |s: f64| (2.0 * n * (s - x)).exp() * rho_inv_sq_unchecked(ell, s);
    Ok(8.0 * PI * integrate(f, -x, x, spec)?.value)
}

/// Unscaled `W_n = 8π ∫_{−X}^{X} e^{2ns} ρ⁻²(s) ds`.
pub fn mode_weight(ell: f64, n: i32, spec: &QuadratureSpec) -> Result<f64> {
    let x = half_extent(ell)?;
    let w = scaled_mode_weight(ell, x, n.unsigned_abs(), spec)?
        * (2.0 * n.unsigned_abs() as f64 * x).exp();
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::Domain(format!("W_{n} overflows on collar of length {ell}")))
    }
}

/// Hermitian `L²` pairing on the collar, computing mode weights on the fly.
pub fn inner_product(u: &FourierQD, v: &FourierQD, spec: &QuadratureSpec) -> Result<Complex64> {
    u.same_chart(v)?;
    ModeWeights::compute(u.ell, u.truncation.max(v.truncation), spec)?.inner_product(u, v)
}

/// `½ Re⟨u, v⟩`, the pairing of the real parts as symmetric 2-tensors.
pub fn real_inner_product(u: &FourierQD, v: &FourierQD, spec: &QuadratureSpec) -> Result<f64> {
    Ok(0.5 * inner_product(u, v, spec)?.re)
}

/// `⟨u, K⟩` for `K = −i ξ′(s) ρ²(s) dz²`, by two-dimensional quadrature of
/// `4 ∫∫ u · conj(K) · ρ⁻² ds dθ` over the support of `ξ′`.
///
/// Only the principal part survives the `θ` integration and `∫ξ′ = 1`, so
/// the result is `8πi b₀(u)` for every admissible profile.
pub fn twist_pairing(u: &FourierQD, profile: &TwistProfile, spec: &QuadratureSpec) -> Result<Complex64> {
    if !profile.fits(u.half_extent) {
        return Err(Error::Domain(format!(
            "twist profile support [{}, {}] not inside the chart (X = {})",
            profile.start, profile.end, u.half_extent
        )));
    }
    // Trapezoid in θ is exact for |n| < m.
    let thetas = circle_nodes(2 * u.truncation + 2);
    let dtheta = 2.0 * PI / thetas.len() as f64;
    let ell = u.ell;
    let circle = |s: f64| {
        let rho = rho_unchecked(ell, s);
        let k = -I * profile.xi_prime(s) * rho * rho;
        let w = k.conj() / (rho * rho);
        thetas.iter().map(|&t| u.eval(s, t) * w).sum::<Complex64>() * dtheta
    };
    let (a, b) = profile.support();
    // The θ sum cancels every non-principal mode, leaving rounding noise that
    // no relative target can resolve; measure error against the size of the
    // integrand before cancellation instead.
    let x = u.half_extent;
    let size = |s: f64| {
        let m: f64 = u.modes().map(|(n, b)| b.norm() * (n as f64 * s - (n.abs() as f64) * x).exp()).sum();
        m * profile.xi_prime(s).abs()
    };
    let magnitude = integrate(size, a, b, spec)?.value * 2.0 * PI;
    let spec = QuadratureSpec {
        abs_floor: spec.abs_floor.max(magnitude),
        ..*spec
    };
    Ok(4.0 * integrate_complex(circle, a, b, &spec)?.value)
}

/// `⟨Re u, h⟩` for `h = ξ₁(ds² − dθ²) + ξ₂(ds² + dθ²)` supported in the
/// collar core. Only the principal part pairs with the trace-free part:
/// `4π Re(b₀) ∫ ξ₁ ρ⁻² ds`.
pub fn length_tensor_pairing(u: &FourierQD, profile: &LengthTensorProfile, spec: &QuadratureSpec) -> Result<f64> {
    if !(profile.start > -u.half_extent && profile.end < u.half_extent) {
        return Err(Error::Domain("length tensor profile not supported inside the chart".into()));
    }
    let b0 = u.principal_part().re;
    if b0 == 0.0 {
        return Ok(0.0);
    }
    Ok(4.0 * PI * b0 * profile.weighted_trace_free_integral(u.ell, spec)?)
}

/// Grid used for sup norms: clustered toward the chart ends, closed at `±X`
/// (the sup over the open chart equals the value of the continuous extension).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinfGrid {
    pub s_points: usize,
    pub theta_points: usize,
}

impl Default for LinfGrid {
    fn default() -> Self {
        Self {
            s_points: 2048,
            theta_points: 64,
        }
    }
}

/// Sup over a dense `(s, θ)` grid of `|u|_g = |Σ b_n e^{n(s+iθ)}| · 2ρ⁻²(s)`,
/// optionally restricted to `s ∈ [lo, hi]`.
pub fn linf_norm(u: &FourierQD, sub_interval: Option<(f64, f64)>, grid: LinfGrid) -> Result<f64> {
    let x = u.half_extent;
    let (lo, hi) = sub_interval.unwrap_or((-x, x));
    if !(lo <= hi && lo >= -x && hi <= x) {
        return Err(Error::Domain(format!("range [{lo}, {hi}] outside the chart (X = {x})")));
    }
    let active: Vec<(f64, Complex64)> = u
        .modes()
        .filter(|(_, b)| *b != Complex64::new(0.0, 0.0))
        .map(|(n, b)| (n as f64, b))
        .collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let rotations: Vec<Vec<Complex64>> = circle_nodes(grid.theta_points)
        .iter()
        .map(|&t| active.iter().map(|(n, _)| Complex64::from_polar(1.0, n * t)).collect())
        .collect();
    let ss = clustered_points(lo, hi, grid.s_points);
    let mut best = 0.0f64;
    let mut amps = vec![Complex64::new(0.0, 0.0); active.len()];
    for s in ss {
        for (a, (n, b)) in amps.iter_mut().zip(&active) {
            *a = b * (n * s - n.abs() * x).exp();
        }
        let w = 2.0 * rho_inv_sq_unchecked(u.ell, s);
        for rot in &rotations {
            let v: Complex64 = amps.iter().zip(rot).map(|(a, r)| a * r).sum();
            best = best.max(v.norm() * w);
        }
    }
    Ok(best)
}

/// `n` points on `[lo, hi]` with sine clustering toward both ends, always
/// including the endpoints and (when inside) `s = 0`.
pub(crate) fn clustered_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut pts: Vec<f64> = (0..n)
        .map(|k| {
            let t = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
            mid + half * (0.5 * PI * t).sin()
        })
        .collect();
    pts[0] = lo;
    pts[n - 1] = hi;
    if lo < 0.0 && hi > 0.0 {
        pts.push(0.0);
    }
    pts
}

/// `‖u‖_{L¹}` on the collar, `∫∫ |u| · 2ρ⁻² · ρ² ds dθ`, by quadrature.
pub fn l1_norm(u: &FourierQD, spec: &QuadratureSpec, theta_points: usize) -> Result<f64> {
    let thetas = circle_nodes(theta_points);
    let dtheta = 2.0 * PI / theta_points as f64;
    let x = u.half_extent;
    let circle = |s: f64| 2.0 * thetas.iter().map(|&t| u.eval(s, t).norm()).sum::<f64>() * dtheta;
    Ok(integrate(circle, -x, x, spec)?.value)
}

/// JSON record of a [`FourierQD`]: `{"ell", "N", "scaling", "pairs": [[n, re, im], …]}`
/// where `(re, im)` are the boundary-scaled coefficients `β_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierQDRecord {
    pub ell: f64,
    #[serde(rename = "N")]
    pub truncation: usize,
    pub scaling: String,
    pub pairs: Vec<(i32, f64, f64)>,
}

pub const BOUNDARY_SCALING: &str = "boundary";

impl From<&FourierQD> for FourierQDRecord {
    fn from(u: &FourierQD) -> Self {
        Self {
            ell: u.ell,
            truncation: u.truncation,
            scaling: BOUNDARY_SCALING.to_string(),
            pairs: u.modes().map(|(n, b)| (n, b.re, b.im)).collect(),
        }
    }
}

impl TryFrom<FourierQDRecord> for FourierQD {
    type Error = Error;

    fn try_from(r: FourierQDRecord) -> Result<Self> {
        if r.scaling != BOUNDARY_SCALING {
            return Err(Error::Serde(format!("unsupported coefficient scaling {:?}", r.scaling)));
        }
        let mut u = FourierQD::zero(r.ell, r.truncation)?;
        for (n, re, im) in r.pairs {
            u.set_scaled(n, Complex64::new(re, im))?;
        }
        Ok(u)
    }
}

impl Serialize for FourierQD {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FourierQDRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierQD {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FourierQDRecord::deserialize(d)?;
        FourierQD::try_from(r).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests;
