//! Radial profiles on a collar: the twist cut-off `ξ` and the length
//! tensor coefficients `ξ₁, ξ₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

/// Shape of the transition of `ξ` from `−½` to `+½`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwistShape {
    /// `ξ′ ∝ (1 − x²)³` on the support.
    PolynomialBump,
    /// `ξ′ ∝ sin²(πx)` on the support.
    Trigonometric,
    /// `ξ = −½ + 6x⁵ − 15x⁴ + 10x³`.
    PiecewiseQuintic,
}

/// Cut-off `ξ(s)` with `ξ ≡ −½` left of the support, `ξ ≡ +½` right of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistProfile {
    pub shape: TwistShape,
    pub start: f64,
    pub end: f64,
}

impl TwistProfile {
    pub fn new(shape: TwistShape, start: f64, end: f64) -> Result<Self> {
        if !(start < end) {
            return Err(Error::Config(format!("empty twist support [{start}, {end}]")));
        }
        Ok(Self { shape, start, end })
    }

    /// Default polynomial-bump profile on `[−0.8X, 0.8X]`.
    pub fn default_for(half_extent: f64) -> Self {
        Self {
            shape: TwistShape::PolynomialBump,
            start: -0.8 * half_extent,
            end: 0.8 * half_extent,
        }
    }

    /// Three profiles with distinct shapes and supports, all inside the chart.
    pub fn alternates_for(half_extent: f64) -> [Self; 3] {
        [
            Self::default_for(half_extent),
            Self {
                shape: TwistShape::Trigonometric,
                start: -0.5 * half_extent,
                end: 0.3 * half_extent,
            },
            Self {
                shape: TwistShape::PiecewiseQuintic,
                start: -0.2 * half_extent,
                end: 0.9 * half_extent,
            },
        ]
    }

    pub fn support(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn local(&self, s: f64) -> f64 {
        (s - self.start) / (self.end - self.start)
    }

    pub fn xi(&self, s: f64) -> f64 {
        if s <= self.start {
            return -0.5;
        }
        if s >= self.end {
            return 0.5;
        }
        let t = self.local(s);
        match self.shape {
            TwistShape::PolynomialBump => {
                let x = 2.0 * t - 1.0;
                let x2 = x * x;
                let p = x * (1.0 - x2 + x2 * x2 * (0.6 - x2 / 7.0)) + 16.0 / 35.0;
                -0.5 + 35.0 / 32.0 * p
            }
            TwistShape::Trigonometric => {
                let tau = std::f64::consts::TAU;
                -0.5 + t - (tau * t).sin() / tau
            }
            TwistShape::PiecewiseQuintic => -0.5 + t * t * t * (10.0 + t * (6.0 * t - 15.0)),
        }
    }

    pub fn xi_prime(&self, s: f64) -> f64 {
        if s <= self.start || s >= self.end {
            return 0.0;
        }
        let len = self.end - self.start;
        let t = self.local(s);
        match self.shape {
            TwistShape::PolynomialBump => {
                let x = 2.0 * t - 1.0;
                let b = 1.0 - x * x;
                35.0 / 32.0 * b * b * b * 2.0 / len
            }
            TwistShape::Trigonometric => {
                let v = (std::f64::consts::PI * t).sin();
                2.0 * v * v / len
            }
            TwistShape::PiecewiseQuintic => 30.0 * t * t * (1.0 - t) * (1.0 - t) / len,
        }
    }

    /// Whether the transition region lies strictly inside `(−X, X)`.
    pub fn fits(&self, half_extent: f64) -> bool {
        self.start > -half_extent && self.end < half_extent
    }
}

/// Coefficients of the collar-core tensor
/// `h = ξ₁(s)(ds² − dθ²) + ξ₂(s)(ds² + dθ²)`.
///
/// Both coefficients are multiples of the bump `(1 − x²)³` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthTensorProfile {
    pub trace_free_amplitude: f64,
    pub trace_amplitude: f64,
    pub start: f64,
    pub end: f64,
}

impl LengthTensorProfile {
    pub fn bump(start: f64, end: f64, trace_free_amplitude: f64, trace_amplitude: f64) -> Result<Self> {
        if !(start < end) {
            return Err(Error::Config(format!("empty profile support [{start}, {end}]")));
        }
        Ok(Self {
            trace_free_amplitude,
            trace_amplitude,
            start,
            end,
        })
    }

    fn shape(&self, s: f64) -> f64 {
        if s <= self.start || s >= self.end {
            return 0.0;
        }
        let x = 2.0 * (s - self.start) / (self.end - self.start) - 1.0;
        let b = 1.0 - x * x;
        b * b * b
    }

    pub fn xi1(&self, s: f64) -> f64 {
        self.trace_free_amplitude * self.shape(s)
    }

    pub fn xi2(&self, s: f64) -> f64 {
        self.trace_amplitude * self.shape(s)
    }

    /// `∫ ξ₁ ρ⁻² ds` over the support.
    pub fn weighted_trace_free_integral(&self, ell: f64, spec: &QuadratureSpec) -> Result<f64> {
        let f = |s: f64| self.xi1(s) * crate::collar::rho_inv_sq_unchecked(ell, s);
        Ok(integrate(f, self.start, self.end, spec)?.value)
    }

    /// Rescales `ξ₁` so that `∫ ξ₁ ρ⁻² ds` equals `target`.
    pub fn scaled_to_integral(&self, ell: f64, target: f64, spec: &QuadratureSpec) -> Result<Self> {
        let unit = Self {
            trace_free_amplitude: 1.0,
            ..*self
        };
        let i = unit.weighted_trace_free_integral(ell, spec)?;
        Ok(Self {
            trace_free_amplitude: target / i,
            ..*self
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            trace_free_amplitude: factor * self.trace_free_amplitude,
            trace_amplitude: factor * self.trace_amplitude,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twist_profiles_step_from_minus_half_to_half() {
        let spec = QuadratureSpec::default().with_rel_error(1e-13);
        for p in TwistProfile::alternates_for(10.0) {
            assert!(p.fits(10.0));
            assert_eq!(p.xi(-10.0), -0.5);
            assert_eq!(p.xi(10.0), 0.5);
            let total = integrate(|s| p.xi_prime(s), p.start, p.end, &spec).unwrap().value;
            assert!((total - 1.0).abs() < 1e-13, "{p:?}");
            // ξ′ is the derivative of ξ
            for k in 1..20 {
                let s = p.start + (p.end - p.start) * k as f64 / 20.0;
                let h = 1e-5;
                let fd = (p.xi(s + h) - p.xi(s - h)) / (2.0 * h);
                assert!((fd - p.xi_prime(s)).abs() < 1e-8, "{p:?} at {s}");
            }
        }
    }

    #[test]
    fn length_profile_rescaling() {
        let spec = QuadratureSpec::default();
        let p = LengthTensorProfile::bump(-2.0, 2.0, 1.0, 0.3).unwrap();
        let q = p.scaled_to_integral(0.5, -4.0, &spec).unwrap();
        assert!((q.weighted_trace_free_integral(0.5, &spec).unwrap() + 4.0).abs() < 1e-10);
        assert_eq!(q.trace_amplitude, 0.3);
        assert_eq!(p.xi1(3.0), 0.0);
    }
}
