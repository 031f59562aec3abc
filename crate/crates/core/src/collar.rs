//! Closed-form geometry of a standard hyperbolic collar and quadrature
//! checks of every closed form.
//!
//! A collar around a simple closed geodesic of length `ℓ` is the cylinder
//! `(−X(ℓ), X(ℓ)) × S¹` with metric `ρ²(s)(ds² + dθ²)`, where
//! `ρ(s) = ℓ / (2π cos(ℓs/2π))` and
//! `X(ℓ) = (2π/ℓ)(π/2 − arctan sinh(ℓ/2))`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special;

fn check_ell(ell: f64) -> Result<()> {
    if ell > 0.0 && ell.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("collar length must be positive, got {ell}")))
    }
}

/// `Y₀(ℓ) = arctan sinh(ℓ/2)`, the angle complementary to `ℓX(ℓ)/2π`.
pub fn y_zero(ell: f64) -> f64 {
    (0.5 * ell).sinh().atan()
}

/// Half extent `X(ℓ)` of the collar chart.
pub fn half_extent(ell: f64) -> Result<f64> {
    check_ell(ell)?;
    // π/2 − arctan(sinh(ℓ/2)) = arctan(1/sinh(ℓ/2)), free of cancellation.
    Ok(2.0 * PI / ell * (1.0 / (0.5 * ell).sinh()).atan())
}

/// Conformal factor without the chart check. Valid (finite, positive) on
/// the closed interval `[−X, X]`.
#[inline]
pub(crate) fn rho_unchecked(ell: f64, s: f64) -> f64 {
    ell / (2.0 * PI * (ell * s / (2.0 * PI)).cos())
}

/// `ρ⁻²(s)` without the chart check.
#[inline]
pub(crate) fn rho_inv_sq_unchecked(ell: f64, s: f64) -> f64 {
    let c = 2.0 * PI / ell * (ell * s / (2.0 * PI)).cos();
    c * c
}

/// Conformal factor `ρ_ℓ(s)` on the open chart `|s| < X(ℓ)`.
pub fn rho(ell: f64, s: f64) -> Result<f64> {
    let x = half_extent(ell)?;
    if !(s.abs() < x) {
        return Err(Error::Domain(format!("|s| = {} outside the collar chart (X = {x})", s.abs())));
    }
    Ok(rho_unchecked(ell, s))
}

/// Collar width `w_ℓ = 2 arsinh(1/sinh(ℓ/2))`, i.e. `sinh(w/2)·sinh(ℓ/2) = 1`.
pub fn collar_width(ell: f64) -> Result<f64> {
    check_ell(ell)?;
    Ok(2.0 * special::asinh(1.0 / (0.5 * ell).sinh()))
}

/// The width as the quadrature `∫ρ ds` over the chart.
pub fn collar_width_by_quadrature(ell: f64, spec: &QuadratureSpec) -> Result<f64> {
    let x = half_extent(ell)?;
    Ok(integrate(|s| rho_unchecked(ell, s), -x, x, spec)?.value)
}

/// The curve at distance `c` inside the collar boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffsetCurve {
    /// `Y_c(ℓ) = 2 arctan(e^c tan(Y₀(ℓ)/2))`.
    pub y: f64,
    /// Chart coordinate `Z_c(ℓ) = (2π/ℓ)(π/2 − Y_c(ℓ))` of the curve.
    pub z: f64,
}

/// Offset angle `Y_c(ℓ)` and position `Z_c(ℓ)` of the curve at distance `c`
/// from the collar boundary.
pub fn boundary_offset_angle(c: f64, ell: f64) -> Result<OffsetCurve> {
    check_ell(ell)?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("offset must be non-negative, got {c}")));
    }
    let t = c.exp() * (0.5 * y_zero(ell)).tan();
    if t >= 1.0 {
        return Err(Error::Domain(format!(
            "offset {c} leaves the collar of length {ell} (Y_c would reach π/2)"
        )));
    }
    let y = 2.0 * t.atan();
    Ok(OffsetCurve {
        y,
        z: 2.0 * PI / ell * (FRAC_PI_2 - y),
    })
}

/// Geodesic curvature `−sin(ℓs/2π)` of the circle `{s} × S¹`.
pub fn circle_curvature(ell: f64, s: f64) -> Result<f64> {
    let x = half_extent(ell)?;
    if !(s.abs() < x) {
        return Err(Error::Domain(format!("|s| = {} outside the collar chart (X = {x})", s.abs())));
    }
    Ok(-(ell * s / (2.0 * PI)).sin())
}

/// Norms of `dz²` on a collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dz2Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// `‖dz²‖` in `L¹`, `L²` and `L∞`. `L¹ = 8πX(ℓ)` and `L∞ = 8π²/ℓ²` are closed
/// forms; `L²` is the quadrature `sqrt(8π ∫ρ⁻² ds)`.
pub fn dz2_norms(ell: f64, spec: &QuadratureSpec) -> Result<Dz2Norms> {
    let x = half_extent(ell)?;
    let l2_sq = 8.0 * PI * integrate(|s| rho_inv_sq_unchecked(ell, s), -x, x, spec)?.value;
    Ok(Dz2Norms {
        l1: 8.0 * PI * x,
        l2: l2_sq.sqrt(),
        linf: 8.0 * PI * PI / (ell * ell),
    })
}

/// `∫|dz²|_g dv_g` over the collar by quadrature, with `|dz²|_g = 2ρ⁻²` and
/// `dv_g = ρ² ds dθ`.
pub fn dz2_l1_by_quadrature(ell: f64, spec: &QuadratureSpec) -> Result<f64> {
    let x = half_extent(ell)?;
    let per_circle = |s: f64| {
        let r = rho_unchecked(ell, s);
        2.0 / (r * r) * r * r * 2.0 * PI
    };
    Ok(integrate(per_circle, -x, x, spec)?.value)
}

/// `‖dz²‖²_{L²} − 32π⁵/ℓ³`, evaluated without cancellation.
///
/// `32π⁵/ℓ³` is `8π ∫ρ⁻²` over the extended interval `|s| < π²/ℓ`, so the
/// difference is minus twice the integral over the tail `[X, π²/ℓ]`.
pub fn dz2_l2_sq_deficit(ell: f64, spec: &QuadratureSpec) -> Result<f64> {
    let x = half_extent(ell)?;
    let tail = integrate(|s| rho_inv_sq_unchecked(ell, s), x, PI * PI / ell, spec)?.value;
    Ok(-16.0 * PI * tail)
}

/// `ρ(X − Λ)`, the conformal factor at distance `Λ` (in `s`) from the chart end.
pub fn rho_near_end(ell: f64, lambda: f64) -> Result<f64> {
    let x = half_extent(ell)?;
    if !(lambda > 0.0 && lambda < x) {
        return Err(Error::Domain(format!("Λ = {lambda} must lie in (0, X = {x})")));
    }
    Ok(rho_unchecked(ell, x - lambda))
}

/// Closed-form data of one collar chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarGeometry {
    pub ell: f64,
    pub half_extent: f64,
    pub width: f64,
}

impl CollarGeometry {
    pub fn new(ell: f64) -> Result<Self> {
        Ok(Self {
            ell,
            half_extent: half_extent(ell)?,
            width: collar_width(ell)?,
        })
    }

    pub fn rho(&self, s: f64) -> Result<f64> {
        if !(s.abs() < self.half_extent) {
            return Err(Error::Domain(format!(
                "|s| = {} outside the collar chart (X = {})",
                s.abs(),
                self.half_extent
            )));
        }
        Ok(rho_unchecked(self.ell, s))
    }

    /// `ρ` at the chart ends, where it attains its maximum `ℓ/(2π sin Y₀)`.
    pub fn rho_at_end(&self) -> f64 {
        self.ell / (2.0 * PI * y_zero(self.ell).sin())
    }
}
