//! Quadrature and lattice-sum helpers.

use std::f64::consts::PI;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_rec(f, a, b, fa, fb, fc, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, fc: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1) + simpson_rec(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

/// Integral over `[a, b]` (0 < a < b) split into panels of ratio 2, each
/// integrated by adaptive Simpson to a tolerance relative to a coarse panel
/// estimate.
pub(crate) fn geometric_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        let mid = 0.5 * (lo + hi);
        let rough = (hi - lo) / 6.0 * (f(lo).abs() + 4.0 * f(mid).abs() + f(hi).abs());
        let tol = (rel_tol * rough).max(f64::MIN_POSITIVE);
        total += adaptive_simpson(f, lo, hi, tol);
        lo = hi;
    }
    total
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre over geometric panels of ratio 2 on `[a, b]`.
pub(crate) struct GeometricGauss {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GeometricGauss {
    pub(crate) fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    fn panel(&self, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }

    pub(crate) fn integrate(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let hi = (2.0 * lo).min(b);
            total += self.panel(f, lo, hi);
            lo = hi;
        }
        total
    }

    /// `∫_a^∞ f` for `a > 0` and `f` decaying at least like `x^{-1-δ}`;
    /// stops once a panel adds less than `1e-18` of the running total.
    pub(crate) fn integrate_to_inf(&self, f: &dyn Fn(f64) -> f64, a: f64) -> f64 {
        let mut total = 0.0;
        let mut lo = a;
        for _ in 0..1000 {
            let hi = 2.0 * lo;
            let piece = self.panel(f, lo, hi);
            total += piece;
            if piece.abs() <= 1e-18 * total.abs() || !hi.is_finite() {
                break;
            }
            lo = hi;
        }
        total
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
