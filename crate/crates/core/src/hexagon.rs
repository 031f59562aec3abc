//! Right-angled geodesic hexagons with alternating sides `γ_a, Γ_c, γ_b,
//! Γ_a, γ_c, Γ_b`, the offset curves `β` at distance `c₅` inside the collars
//! of the `γ` sides, and the distances `dist(q_i, q_{i+1})` along the `Γ`
//! sides between consecutive offset curves.
//!
//! The varying side has length `c_t = (ℓ + t)/2` (and `b_t = c_t` in the
//! one-pant family); `γ_x` is half of a closed geodesic of length `2x`, so
//! its collar has width `w_{2x}`.

use serde::{Deserialize, Serialize};

use crate::collar::{boundary_offset_angle, collar_width};
use crate::error::{Error, Result};
use crate::extended::Ext;
use crate::verify::{fit_rate, RateFit};

/// Which hexagon family the parameter `t` moves along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HexagonMode {
    /// `a`, `b` fixed, `c_t` varies.
    TwoPants,
    /// `a` fixed, `b_t = c_t` vary together.
    OnePant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HexagonConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub mode: HexagonMode,
    pub l_bar: f64,
    /// `w_{L̄}/4`.
    pub c5: f64,
}

impl HexagonConfig {
    pub fn new(a: f64, b: f64, c: f64, mode: HexagonMode, l_bar: f64) -> Result<Self> {
        if !(l_bar > 0.0 && l_bar.is_finite()) {
            return Err(Error::Config(format!("L̄ must be positive, got {l_bar}")));
        }
        for (name, x) in [("a", a), ("b", b), ("c", c)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("side {name} must be positive, got {x}")));
            }
            if x > 0.5 * l_bar {
                return Err(Error::Config(format!("side {name} = {x} exceeds L̄/2 = {}", 0.5 * l_bar)));
            }
        }
        if mode == HexagonMode::OnePant && b != c {
            return Err(Error::Config(format!("one-pant family needs b = c, got {b} and {c}")));
        }
        let c5 = 0.25 * collar_width(l_bar)?;
        for x in [a, b, c] {
            if !(c5 < 0.5 * collar_width(2.0 * x)?) {
                return Err(Error::Config(format!("offset c₅ = {c5} leaves the collar of side {x}")));
            }
        }
        Ok(Self { a, b, c, mode, l_bar, c5 })
    }

    /// Family member with varying curve of length `ell` (`c = ℓ/2`).
    pub fn two_pants(a: f64, b: f64, ell: f64, l_bar: f64) -> Result<Self> {
        Self::new(a, b, 0.5 * ell, HexagonMode::TwoPants, l_bar)
    }

    pub fn one_pant(a: f64, ell: f64, l_bar: f64) -> Result<Self> {
        Self::new(a, 0.5 * ell, 0.5 * ell, HexagonMode::OnePant, l_bar)
    }

    /// Same family, other base length.
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        match self.mode {
            HexagonMode::TwoPants => Self::two_pants(self.a, self.b, ell, self.l_bar),
            HexagonMode::OnePant => Self::one_pant(self.a, ell, self.l_bar),
        }
    }

    /// Length `ℓ = 2c` of the closed curve the varying side belongs to.
    pub fn ell(&self) -> f64 {
        2.0 * self.c
    }

    /// Member `H_t` of the family. Bounds are not re-checked so that
    /// difference quotients can straddle the `L̄/2` limit.
    pub fn at(&self, t: f64) -> Self {
        let c = self.c + 0.5 * t;
        let b = match self.mode {
            HexagonMode::TwoPants => self.b,
            HexagonMode::OnePant => c,
        };
        Self { b, c, ..*self }
    }

    fn sides(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

/// Index of a `Γ` side, named after the opposite `γ` side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
    C,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::A, Side::B, Side::C];

    fn index(self) -> usize {
        self as usize
    }

    /// `(x, y, z)`: this side's opposite and the two adjacent `γ` lengths.
    fn pick(self, s: [f64; 3]) -> (f64, f64, f64) {
        match self {
            Side::A => (s[0], s[1], s[2]),
            Side::B => (s[1], s[2], s[0]),
            Side::C => (s[2], s[0], s[1]),
        }
    }

    /// The pair `(q_i, q_{i+1})` delimiting the inner part of this side.
    pub fn q_pair(self) -> (u8, u8) {
        match self {
            Side::C => (2, 3),
            Side::A => (4, 5),
            Side::B => (6, 1),
        }
    }
}

/// Offset curve `β` at distance `c₅` inside the boundary of a collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaData {
    /// `κ = −cos Y_{c₅}(ℓ)`.
    pub curvature: f64,
    /// `L(β) = ℓ / (2 sin Y_{c₅}(ℓ))`.
    pub length: f64,
}

/// Offset curve of the half-collar around a curve of length `ell`.
pub fn beta_data(ell: f64, c5: f64) -> Result<BetaData> {
    let y = boundary_offset_angle(c5, ell)?.y;
    Ok(BetaData {
        curvature: -y.cos(),
        length: ell / (2.0 * y.sin()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HexagonSolution {
    pub config: HexagonConfig,
    /// `L(Γ_a), L(Γ_b), L(Γ_c)`.
    pub gamma_sides: [f64; 3],
    /// Offset curves in the collars of `γ_a, γ_b, γ_c`.
    pub beta: [BetaData; 3],
    /// Inner distances along `Γ_a, Γ_b, Γ_c`, stable forms.
    pub q_distances: [f64; 3],
}

impl HexagonSolution {
    pub fn gamma(&self, side: Side) -> f64 {
        self.gamma_sides[side.index()]
    }

    pub fn q_distance(&self, side: Side) -> f64 {
        self.q_distances[side.index()]
    }

    /// `|cosh L(Γ_c) sinh a sinh b − cosh c − cosh a cosh b|` relative to
    /// `cosh c + cosh a cosh b`.
    pub fn identity_residual(&self) -> f64 {
        let HexagonConfig { a, b, c, .. } = self.config;
        let rhs = c.cosh() + a.cosh() * b.cosh();
        (self.gamma(Side::C).cosh() * a.sinh() * b.sinh() - rhs).abs() / rhs
    }
}

/// `L(Γ_x) = arcosh((cosh x + cosh y cosh z)/(sinh y sinh z))` written as
/// `log(P + √((P−Q)(P+Q))) − log Q`; `P − Q = cosh x + cosh(y−z) ≥ 2`.
fn gamma_by_cosh(x: f64, y: f64, z: f64) -> f64 {
    let p = x.cosh() + y.cosh() * z.cosh();
    let q = y.sinh() * z.sinh();
    let pm = x.cosh() + (y - z).cosh();
    (p + (pm * (p + q)).sqrt()).ln() - q.ln()
}

pub fn solve_hexagon(cfg: &HexagonConfig) -> Result<HexagonSolution> {
    let HexagonConfig { a, b, c, .. } = *cfg;
    let arg = (c.cosh() + a.cosh() * b.cosh()) / (a.sinh() * b.sinh());
    if !(arg >= 1.0) {
        return Err(Error::Domain(format!("arcosh argument {arg} < 1")));
    }
    let gc = gamma_by_cosh(c, a, b);
    // Sine law: sinh L(Γ_x) / sinh x is the same for all three sides.
    let ratio = gc.sinh() / c.sinh();
    let ga = crate::special::asinh(ratio * a.sinh());
    let gb = crate::special::asinh(ratio * b.sinh());
    let beta = [
        beta_data(2.0 * a, cfg.c5)?,
        beta_data(2.0 * b, cfg.c5)?,
        beta_data(2.0 * c, cfg.c5)?,
    ];
    let mut sol = HexagonSolution {
        config: *cfg,
        gamma_sides: [ga, gb, gc],
        beta,
        q_distances: [0.0; 3],
    };
    for side in Side::ALL {
        sol.q_distances[side.index()] = q_distance(&sol, side, DistanceForm::Stable)?;
    }
    Ok(sol)
}

/// How `dist(q_i, q_{i+1}) = L(Γ_x) + 2c₅ − w_{2y}/2 − w_{2z}/2` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceForm {
    /// Cancellation-free expansion: the `log sinh` terms of the side length
    /// and the two half widths cancel analytically.
    Stable,
    /// Literal difference of the side length and the half widths.
    Naive,
}

pub fn q_distance(sol: &HexagonSolution, side: Side, form: DistanceForm) -> Result<f64> {
    let cfg = &sol.config;
    let (x, y, z) = side.pick(cfg.sides());
    let d = match form {
        DistanceForm::Naive => {
            sol.gamma(side) + 2.0 * cfg.c5 - 0.5 * collar_width(2.0 * y)? - 0.5 * collar_width(2.0 * z)?
        }
        DistanceForm::Stable => match (cfg.mode, side) {
            (HexagonMode::TwoPants, Side::A | Side::B) => {
                // Side between γ_c and the fixed γ; the sine law gives
                // sinh L(Γ_x) = S / sinh c with S = sinh L(Γ_c) sinh x.
                let c = cfg.c;
                let fixed = if side == Side::A { cfg.b } else { cfg.a };
                let s = sol.gamma(Side::C).sinh() * x.sinh();
                let r = c.sinh() / s;
                2.0 * cfg.c5 - 0.5 * collar_width(2.0 * fixed)? + s.ln() + (1.0 + (1.0 + r * r).sqrt()).ln()
                    - (1.0 + c.cosh()).ln()
            }
            _ => q_distance_symmetric(x, y, z, cfg.c5),
        },
    };
    if d < 0.0 {
        return Err(Error::Config(format!(
            "negative distance {d} on side {side:?}: offset regions overlap"
        )));
    }
    Ok(d)
}

/// Stable form for any side: with `P = cosh x + cosh y cosh z`,
/// `Q = sinh y sinh z` and `w_{2y}/2 = log(1 + cosh y) − log sinh y`,
/// `dist = log(P + √(P² − Q²)) − log(1 + cosh y) − log(1 + cosh z) + 2c₅`.
pub fn q_distance_symmetric(x: f64, y: f64, z: f64, c5: f64) -> f64 {
    let p = x.cosh() + y.cosh() * z.cosh();
    let q = y.sinh() * z.sinh();
    let pm = x.cosh() + (y - z).cosh();
    (p + (pm * (p + q)).sqrt()).ln() - (1.0 + y.cosh()).ln() - (1.0 + z.cosh()).ln() + 2.0 * c5
}

/// Literal distance formula evaluated with `bits` of working precision.
pub fn q_distance_extended(cfg: &HexagonConfig, side: Side, bits: usize) -> f64 {
    let mut e = Ext::new(bits);
    let (x, y, z) = side.pick(cfg.sides());
    let (x, y, z) = (e.num(x), e.num(y), e.num(z));
    let (cx, cy, cz) = (e.cosh(&x), e.cosh(&y), e.cosh(&z));
    let (sy, sz) = (e.sinh(&y), e.sinh(&z));
    let p = e.add(&cx, &e.mul(&cy, &cz));
    let q = e.mul(&sy, &sz);
    let gamma = e.acosh(&e.div(&p, &q));
    let half_width = |e: &mut Ext, s: &astro_float::BigFloat| {
        let inv = e.div(&e.num(1.0), s);
        e.asinh(&inv)
    };
    let wy = half_width(&mut e, &sy);
    let wz = half_width(&mut e, &sz);
    // 2c₅ = w_{L̄}/2 = arsinh(1/sinh(L̄/2)); halving is exact in binary64.
    let sl = e.sinh(&e.num(0.5 * cfg.l_bar));
    let two_c5 = half_width(&mut e, &sl);
    let d = e.sub(&e.sub(&e.add(&gamma, &two_c5), &wy), &wz);
    e.to_f64(&d)
}

/// Quantities whose `t`-derivatives the family controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HexQuantity {
    GammaC,
    GammaA,
    KappaC,
    BetaLengthC,
    DistQ4Q5,
    DistQ6Q1,
}

impl HexQuantity {
    pub const ALL: [HexQuantity; 6] = [
        HexQuantity::GammaC,
        HexQuantity::GammaA,
        HexQuantity::KappaC,
        HexQuantity::BetaLengthC,
        HexQuantity::DistQ4Q5,
        HexQuantity::DistQ6Q1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HexQuantity::GammaC => "L(Gamma_c)",
            HexQuantity::GammaA => "L(Gamma_a)",
            HexQuantity::KappaC => "kappa_c",
            HexQuantity::BetaLengthC => "L(beta_c)",
            HexQuantity::DistQ4Q5 => "dist(q4,q5)",
            HexQuantity::DistQ6Q1 => "dist(q6,q1)",
        }
    }

    pub fn value(self, sol: &HexagonSolution) -> f64 {
        match self {
            HexQuantity::GammaC => sol.gamma(Side::C),
            HexQuantity::GammaA => sol.gamma(Side::A),
            HexQuantity::KappaC => sol.beta[2].curvature,
            HexQuantity::BetaLengthC => sol.beta[2].length,
            HexQuantity::DistQ4Q5 => sol.q_distance(Side::A),
            HexQuantity::DistQ6Q1 => sol.q_distance(Side::B),
        }
    }
}

/// Initial step of the extrapolated difference: a quarter of the distance
/// to the degenerate hexagon `c_t = 0`.
pub fn fd_step(ell: f64) -> f64 {
    0.25 * ell
}

/// Central differences at `t = 0` with steps `h₀, h₀/1.4, …`, extrapolated
/// to `h → 0` in a Neville tableau. Returns the estimate and its error.
pub fn ridders_derivative(f: impl Fn(f64) -> Result<f64>, h0: f64) -> Result<(f64, f64)> {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::Domain(format!("difference step {h0} unusable")));
    }
    let central = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = central(h)?;
    let (mut best, mut err) = (a[0][0], f64::INFINITY);
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = central(h)?;
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok((best, err))
}

/// Extrapolated central difference of `quantity` at `t = 0`.
pub fn fd_derivative(cfg: &HexagonConfig, quantity: HexQuantity) -> Result<f64> {
    let eval = |t: f64| Ok(quantity.value(&solve_hexagon(&cfg.at(t))?));
    Ok(ridders_derivative(eval, fd_step(cfg.ell()))?.0)
}

/// Closed-form `t`-derivative at `t = 0` in the two-pants family.
pub fn analytic_derivative(cfg: &HexagonConfig, quantity: HexQuantity) -> Option<f64> {
    if cfg.mode != HexagonMode::TwoPants {
        return None;
    }
    let HexagonConfig { a, b, c, c5, .. } = *cfg;
    let ell = 2.0 * c;
    let gc = gamma_by_cosh(c, a, b);
    // d/dt L(Γ_c), with dc/dt = ½.
    let dgc = c.sinh() / (2.0 * a.sinh() * b.sinh() * gc.sinh());
    // sinh L(Γ_x) = sinh L(Γ_c) sinh x / sinh c for x = a, b.
    let dgx = |x: f64| {
        let gx = crate::special::asinh(gc.sinh() * x.sinh() / c.sinh());
        (gc.cosh() * dgc * x.sinh() / c.sinh() - gc.sinh() * x.sinh() * c.cosh() / (2.0 * c.sinh() * c.sinh()))
            / gx.cosh()
    };
    // d/dt of w_{2c}/2 = arsinh(1/sinh c) is −1/(2 sinh c).
    let dhalf_wc = -1.0 / (2.0 * c.sinh());
    let y0 = crate::collar::y_zero(ell);
    let tq = (0.5 * y0).tan();
    let y = 2.0 * (c5.exp() * tq).atan();
    let sec2 = 1.0 / (0.5 * y0).cos().powi(2);
    let dy = c5.exp() * sec2 / (1.0 + (2.0 * c5).exp() * tq * tq) / (2.0 * (0.5 * ell).cosh());
    Some(match quantity {
        HexQuantity::GammaC => dgc,
        HexQuantity::GammaA => dgx(a),
        HexQuantity::KappaC => y.sin() * dy,
        HexQuantity::BetaLengthC => (y.sin() - ell * dy * y.cos()) / (2.0 * y.sin().powi(2)),
        HexQuantity::DistQ4Q5 => dgx(a) - dhalf_wc,
        HexQuantity::DistQ6Q1 => dgx(b) - dhalf_wc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeSample {
    pub ell: f64,
    pub step: f64,
    pub derivative: f64,
    pub analytic: Option<f64>,
}

/// Difference derivatives of one quantity over a grid and the log-log fit
/// of their magnitudes against `ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HexRate {
    pub quantity: HexQuantity,
    pub samples: Vec<DerivativeSample>,
    pub fit: RateFit,
    /// `|derivative|` is monotone in `ℓ` along the grid.
    pub monotone: bool,
}

impl HexRate {
    /// Largest relative deviation from the closed-form derivative.
    pub fn max_analytic_rel_error(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.analytic.map(|a| ((s.derivative - a) / a).abs()))
            .reduce(f64::max)
    }
}

pub fn fd_rates(cfg: &HexagonConfig, quantity: HexQuantity, ell_grid: &[f64]) -> Result<HexRate> {
    let (lo, hi) = ell_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if ell_grid.len() < 3 || !(hi / lo >= 100.0 * (1.0 - 1e-12)) {
        return Err(Error::Config("derivative rates need at least 3 lengths spanning 2 decades".into()));
    }
    let samples = ell_grid
        .iter()
        .map(|&ell| {
            let member = cfg.with_ell(ell)?;
            Ok(DerivativeSample {
                ell,
                step: fd_step(ell),
                derivative: fd_derivative(&member, quantity)?,
                analytic: analytic_derivative(&member, quantity),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_ell: Vec<(f64, f64)> = samples.iter().map(|s| (s.ell, s.derivative.abs())).collect();
    by_ell.sort_by(|p, q| p.0.total_cmp(&q.0));
    let monotone = by_ell.windows(2).all(|w| w[0].1 <= w[1].1) || by_ell.windows(2).all(|w| w[0].1 >= w[1].1);
    Ok(HexRate {
        quantity,
        fit: fit_rate(&by_ell)?,
        samples,
        monotone,
    })
}

/// Rows `ell,quantity,derivative,analytic,fitted_slope,r_squared`; `analytic`
/// is empty where no closed form is available.
pub fn rates_csv(rates: &[HexRate]) -> Result<String> {
    let err = |e: csv::Error| Error::Serde(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ell", "quantity", "derivative", "analytic", "fitted_slope", "r_squared"])
        .map_err(err)?;
    for r in rates {
        for s in &r.samples {
            w.write_record([
                s.ell.to_string(),
                r.quantity.name().to_string(),
                s.derivative.to_string(),
                s.analytic.map_or_else(String::new, |a| a.to_string()),
                r.fit.slope.to_string(),
                r.fit.r_squared.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

/// Geometric grid of `n` points from `hi` down to `lo`, endpoints exact.
pub fn geometric_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let r = (lo / hi).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| hi * (r * k as f64).exp()).collect();
    g[n - 1] = lo;
    g
}
