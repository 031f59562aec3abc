//! Globally adaptive composite Gauss–Legendre quadrature.
//!
//! The interval is covered by panels. Every panel carries a coarse estimate
//! (one Gauss–Legendre rule on the whole panel) and a refined estimate (the
//! same rule on both halves); their difference is the panel error. The panel
//! with the largest error is bisected until the summed error falls below the
//! requested relative tolerance. Panels therefore cluster dyadically wherever
//! the integrand varies fastest, e.g. toward the collar ends `s = ±X` for the
//! exponentially growing Fourier modes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Description of the composite rule and its stopping criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Number of Gauss–Legendre nodes per panel.
    pub order: usize,
    pub target_rel_error: f64,
    /// Absolute floor on the error, for integrals that vanish by cancellation.
    pub abs_floor: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 20,
            target_rel_error: 1e-10,
            abs_floor: 1e-300,
            initial_panels: 4,
            max_panels: 20_000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_error(mut self, tol: f64) -> Self {
        self.target_rel_error = tol;
        self
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the three-term Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let mut rules = RULES
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    rules
        .entry(order)
        .or_insert_with(|| Box::leak(Box::new(gauss_legendre(order))))
}

struct Panel {
    a: f64,
    b: f64,
    fine: Complex64,
    abs: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn apply<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let v = f(mid + half * x);
        sum += v * *w;
        abs += v.norm() * w;
    }
    (sum * half, abs * half.abs())
}

fn make_panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, r: &(Vec<f64>, Vec<f64>)) -> Panel {
    let mid = 0.5 * (a + b);
    let (coarse, _) = apply(f, a, b, r);
    let (left, la) = apply(f, a, mid, r);
    let (right, ra) = apply(f, mid, b, r);
    let fine = left + right;
    Panel {
        a,
        b,
        fine,
        abs: la + ra,
        err: (coarse - fine).norm(),
    }
}

/// Integrates a complex-valued function over `[a, b]`.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            panels: 0,
        });
    }
    let r = rule(spec.order);
    let n0 = spec.initial_panels.max(1);
    let mut heap = BinaryHeap::with_capacity(spec.max_panels + 2);
    for i in 0..n0 {
        let pa = a + (b - a) * i as f64 / n0 as f64;
        let pb = if i + 1 == n0 { b } else { a + (b - a) * (i + 1) as f64 / n0 as f64 };
        heap.push(make_panel(&f, pa, pb, r));
    }
    loop {
        let (mut total, mut abs, mut err) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for p in heap.iter() {
            total += p.fine;
            abs += p.abs;
            err += p.err;
        }
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Quadrature("integrand produced non-finite values".into()));
        }
        let scale = total.norm().max(spec.abs_floor);
        // Rounding in the panel sums is of order eps * ∫|f|; do not chase it.
        let noise = 64.0 * f64::EPSILON * abs;
        if err <= spec.target_rel_error * scale || err <= noise {
            return Ok(Estimate {
                value: total,
                error: err,
                panels: heap.len(),
            });
        }
        if heap.len() >= spec.max_panels {
            return Err(Error::Quadrature(format!(
                "{} panels exhausted on [{a}, {b}] with error {err:e} vs value {scale:e}",
                spec.max_panels
            )));
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!("panel underflow near s = {mid}")));
        }
        heap.push(make_panel(&f, worst.a, mid, r));
        heap.push(make_panel(&f, mid, worst.b, r));
    }
}

/// Integrates a real-valued function over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<f64>>
where
    F: Fn(f64) -> f64,
{
    let est = integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, spec)?;
    Ok(Estimate {
        value: est.value.re,
        error: est.error,
        panels: est.panels,
    })
}

/// Uniform trapezoid nodes on the circle `[0, 2π)`. The rule with `m` nodes
/// integrates `e^{inθ}` exactly for `|n| < m`.
pub fn circle_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / m as f64)
        .collect()
}
