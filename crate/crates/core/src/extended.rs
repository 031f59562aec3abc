//! Thin wrapper over arbitrary-precision floats, used as an accuracy
//! reference for the binary64 formulas.

use astro_float::{BigFloat, Consts, RoundingMode};

const RM: RoundingMode = RoundingMode::ToEven;

/// Evaluation context: working precision in bits plus the constants cache.
pub struct Ext {
    p: usize,
    cc: Consts,
}

impl Ext {
    pub fn new(bits: usize) -> Self {
        Self {
            p: bits,
            cc: Consts::new().expect("astro-float constants cache"),
        }
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.p, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }

    pub fn sinh(&mut self, a: &BigFloat) -> BigFloat {
        a.sinh(self.p, RM, &mut self.cc)
    }

    pub fn cosh(&mut self, a: &BigFloat) -> BigFloat {
        a.cosh(self.p, RM, &mut self.cc)
    }

    pub fn asinh(&mut self, a: &BigFloat) -> BigFloat {
        a.asinh(self.p, RM, &mut self.cc)
    }

    pub fn acosh(&mut self, a: &BigFloat) -> BigFloat {
        a.acosh(self.p, RM, &mut self.cc)
    }

    pub fn atan(&mut self, a: &BigFloat) -> BigFloat {
        a.atan(self.p, RM, &mut self.cc)
    }

    pub fn tan(&mut self, a: &BigFloat) -> BigFloat {
        a.tan(self.p, RM, &mut self.cc)
    }

    pub fn cos(&mut self, a: &BigFloat) -> BigFloat {
        a.cos(self.p, RM, &mut self.cc)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, RM)
    }

    /// Nearest binary64 value.
    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        a.to_string().parse().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_constants() {
        let mut e = Ext::new(256);
        assert_eq!(e.to_f64(&e.num(0.1)), 0.1);
        assert_eq!(e.to_f64(&e.num(-3.5e-200)), -3.5e-200);
        let pi = e.pi();
        assert_eq!(e.to_f64(&pi), std::f64::consts::PI);
        let one = e.num(1.0);
        let x = e.asinh(&one);
        assert_eq!(e.to_f64(&x), 1f64.asinh());
    }
}
