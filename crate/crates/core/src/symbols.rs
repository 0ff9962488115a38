//! Univariate symbols: the generator profiles λ and β, the cutoff ϑ, the
//! ratio G = λ/β, and the tail functionals J_m and ε_m.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{geometric_simpson, GeometricGauss};

/// `sup |ϑ''|` for the quintic-smoothstep cutoff, `40/√3`.
pub const THETA_D2_SUP: f64 = 23.094_010_767_585_03;

/// The bounded factor `F` in the mask and exponent kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    /// `F(u) = c`.
    Const { c: f64 },
    /// `F(u) = 1/(1 + a·u)`, `a ≥ 0`.
    Reciprocal { a: f64 },
    /// `F(u) = 1 + amp·sin(freq·u)`.
    Sinusoid { amp: f64, freq: f64 },
}

impl Default for FSpec {
    fn default() -> Self {
        FSpec::Const { c: 1.0 }
    }
}

impl FSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            FSpec::Const { c } if !c.is_finite() || c == 0.0 => invalid("F constant must be finite and nonzero"),
            FSpec::Reciprocal { a } if !(a >= 0.0) || !a.is_finite() => {
                invalid("F = 1/(1 + a u) is unbounded on u >= 0 unless a >= 0")
            }
            FSpec::Sinusoid { amp, freq } if !amp.is_finite() || !freq.is_finite() => invalid("F parameters must be finite"),
            _ => Ok(()),
        }
    }

    /// Value at `u ≥ 0`.
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            FSpec::Const { c } => c,
            FSpec::Reciprocal { a } => 1.0 / (1.0 + a * u),
            FSpec::Sinusoid { amp, freq } => 1.0 + amp * (freq * u).sin(),
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match *self {
            FSpec::Const { .. } => 0.0,
            FSpec::Reciprocal { a } => -a / (1.0 + a * u).powi(2),
            FSpec::Sinusoid { amp, freq } => amp * freq * (freq * u).cos(),
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match *self {
            FSpec::Const { .. } => 0.0,
            FSpec::Reciprocal { a } => 2.0 * a * a / (1.0 + a * u).powi(3),
            FSpec::Sinusoid { amp, freq } => -amp * freq * freq * (freq * u).sin(),
        }
    }

    /// `(sup|F|, sup|F'|, sup|F''|)` over `u ≥ 0`.
    pub fn bounds(&self) -> (f64, f64, f64) {
        match *self {
            FSpec::Const { c } => (c.abs(), 0.0, 0.0),
            FSpec::Reciprocal { a } => (1.0, a, 2.0 * a * a),
            FSpec::Sinusoid { amp, freq } => (1.0 + amp.abs(), (amp * freq).abs(), (amp * freq * freq).abs()),
        }
    }

    /// The constant `a₁` bounding `F`, `F'`, `F''`.
    pub fn a1(&self) -> f64 {
        let (b0, b1, b2) = self.bounds();
        b0.max(b1).max(b2)
    }

    /// `inf F` over `u ≥ 0` when positive, otherwise `None`.
    fn positive_floor(&self) -> Option<f64> {
        match *self {
            FSpec::Const { c } => (c > 0.0).then_some(c),
            // decays to 0 without reaching it
            FSpec::Reciprocal { .. } => Some(0.0),
            FSpec::Sinusoid { amp, .. } => (amp.abs() < 1.0).then_some(1.0 - amp.abs()),
        }
    }

    fn is_decreasing_positive(&self) -> bool {
        match *self {
            FSpec::Const { c } => c > 0.0,
            FSpec::Reciprocal { a } => a >= 0.0,
            FSpec::Sinusoid { amp, .. } => amp == 0.0,
        }
    }
}

impl fmt::Display for FSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FSpec::Const { c } => write!(f, "const({c})"),
            FSpec::Reciprocal { a } => write!(f, "recip({a})"),
            FSpec::Sinusoid { amp, freq } => write!(f, "sin({amp},{freq})"),
        }
    }
}

impl FromStr for FSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid F spec '{s}'"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<f64> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let spec = match (name.trim(), args.as_slice()) {
            ("const", [c]) => FSpec::Const { c: *c },
            ("recip", [a]) => FSpec::Reciprocal { a: *a },
            ("sin", [amp, freq]) => FSpec::Sinusoid { amp: *amp, freq: *freq },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Public classification of a symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolKind {
    Mask { r: f64, kappa: f64, f: FSpec },
    Exponent { s: f64, f: FSpec },
    Cutoff,
    Custom,
}

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied symbol with analytic derivatives.
pub struct CustomSymbol {
    pub name: String,
    pub eval: Box<RealFn>,
    pub d1: Box<RealFn>,
    pub d2: Box<RealFn>,
    /// Bound on `∫_X^∞ (|ψ|/m + |xψ''|) dx` as a function of `(X, m)`.
    pub tail: Option<Box<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

#[derive(Clone)]
enum Repr {
    Korobov { r: f64 },
    Mask { r: f64, kappa: f64, f: FSpec, ext: [f64; 3] },
    Exponent { s: f64, f: FSpec },
    Cutoff,
    Custom(Arc<CustomSymbol>),
}

/// `(ln|ψ|, sign ψ, ψ'/ψ, ψ''/ψ)` at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogDerivs {
    ln: f64,
    sign: f64,
    l1: f64,
    l2: f64,
}

/// An even, twice differentiable real function with a kind tag.
#[derive(Clone)]
pub struct Symbol {
    repr: Repr,
    nonzero_everywhere: bool,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({self})")
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Korobov { r } => write!(f, "korobov:r={r}"),
            Repr::Mask { r, kappa, f: ff, .. } => write!(f, "mask:r={r},kappa={kappa},f={ff}"),
            Repr::Exponent { s, f: ff } => write!(f, "exponent:s={s},f={ff}"),
            Repr::Cutoff => write!(f, "theta"),
            Repr::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

/// `|t|^{-r}` for `t ≠ 0`, `1` at the origin.
pub fn make_korobov(r: f64) -> Result<Symbol> {
    if !(r > 1.0) || !r.is_finite() {
        return invalid(format!("Korobov exponent r = {r} must satisfy r > 1"));
    }
    Ok(Symbol {
        repr: Repr::Korobov { r },
        nonzero_everywhere: true,
    })
}

/// `|t|^{-r} (ln(|t|+1))^{-κ} F(ln|t|)` for `|t| ≥ 1`, extended to `|t| < 1`
/// by the even polynomial `a + bt² + ct⁴` matching value, slope and
/// curvature at `t = 1`.
pub fn make_mask(r: f64, kappa: f64, f: FSpec) -> Result<Symbol> {
    if !(r > 1.0) || !r.is_finite() {
        return invalid(format!("mask exponent r = {r} must satisfy r > 1"));
    }
    if !kappa.is_finite() {
        return invalid("mask log exponent must be finite");
    }
    f.validate()?;
    let at_one = mask_outer(r, kappa, &f, 1.0);
    let v = at_one.sign * at_one.ln.exp();
    let (d, e) = (v * at_one.l1, v * at_one.l2);
    let c = (e - d) / 8.0;
    let b = (d - 4.0 * c) / 2.0;
    let a = v - b - c;
    // q(s) = a + b s + c s² on s = t² ∈ [0, 1]
    let mut qmin = a.min(a + b + c);
    if c != 0.0 {
        let s = -b / (2.0 * c);
        if (0.0..=1.0).contains(&s) {
            let q = a + b * s + c * s * s;
            qmin = qmin.min(q);
        }
    }
    let inner_nonzero = qmin > 0.0;
    let outer_nonzero = f.positive_floor().is_some();
    Ok(Symbol {
        repr: Repr::Mask {
            r,
            kappa,
            f,
            ext: [a, b, c],
        },
        nonzero_everywhere: inner_nonzero && outer_nonzero,
    })
}

/// `e^{-s|t|} F(|t|)` with `F` positive and nonincreasing.
pub fn make_exponent(s: f64, f: FSpec) -> Result<Symbol> {
    if !(s > 0.0) || !s.is_finite() {
        return invalid(format!("exponent rate s = {s} must be positive"));
    }
    f.validate()?;
    if !f.is_decreasing_positive() {
        return invalid(format!("F = {f} must be positive and nonincreasing"));
    }
    Ok(Symbol {
        repr: Repr::Exponent { s, f },
        nonzero_everywhere: true,
    })
}

/// The C² cutoff: 1 on `|x| ≤ 1/2`, 0 on `|x| ≥ 1`, `1 − S(2|x| − 1)` between,
/// with `S(u) = 6u⁵ − 15u⁴ + 10u³`.
pub fn make_theta() -> Symbol {
    Symbol {
        repr: Repr::Cutoff,
        nonzero_everywhere: false,
    }
}

/// Wraps user closures as a symbol of custom kind.
pub fn make_custom(custom: CustomSymbol, nonzero_everywhere: bool) -> Symbol {
    Symbol {
        repr: Repr::Custom(Arc::new(custom)),
        nonzero_everywhere,
    }
}

#[inline]
pub fn theta(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let u = 2.0 * a - 1.0;
        1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

fn theta_d1(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 || a >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * a - 1.0;
    -2.0 * 30.0 * u * u * (1.0 - u) * (1.0 - u) * x.signum()
}

fn theta_d2(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 || a >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * a - 1.0;
    -4.0 * 60.0 * u * (2.0 * u - 1.0) * (u - 1.0)
}

fn mask_outer(r: f64, kappa: f64, f: &FSpec, t: f64) -> LogDerivs {
    let u = t.ln();
    let big_l = (t + 1.0).ln();
    let fv = f.value(u);
    let (f1, f2) = (f.d1(u), f.d2(u));
    let a1 = -r / t;
    let a2 = r * (r + 1.0) / (t * t);
    let b1 = -kappa / (big_l * (t + 1.0));
    let b2 = (kappa * (kappa + 1.0) / (big_l * big_l) + kappa / big_l) / ((t + 1.0) * (t + 1.0));
    let c1 = f1 / (fv * t);
    let c2 = (f2 - f1) / (fv * t * t);
    LogDerivs {
        ln: -r * u - kappa * big_l.ln() + fv.abs().ln(),
        sign: fv.signum(),
        l1: a1 + b1 + c1,
        l2: a2 + b2 + c2 + 2.0 * (a1 * b1 + a1 * c1 + b1 * c1),
    }
}

impl Symbol {
    pub fn kind(&self) -> SymbolKind {
        match &self.repr {
            Repr::Korobov { r } => SymbolKind::Mask {
                r: *r,
                kappa: 0.0,
                f: FSpec::default(),
            },
            Repr::Mask { r, kappa, f, .. } => SymbolKind::Mask {
                r: *r,
                kappa: *kappa,
                f: *f,
            },
            Repr::Exponent { s, f } => SymbolKind::Exponent { s: *s, f: *f },
            Repr::Cutoff => SymbolKind::Cutoff,
            Repr::Custom(_) => SymbolKind::Custom,
        }
    }

    pub fn is_korobov(&self) -> bool {
        matches!(self.repr, Repr::Korobov { .. })
    }

    pub fn nonzero_everywhere(&self) -> bool {
        self.nonzero_everywhere
    }

    /// The log exponent κ for mask kinds, 0 otherwise.
    pub fn kappa(&self) -> f64 {
        match self.kind() {
            SymbolKind::Mask { kappa, .. } => kappa,
            _ => 0.0,
        }
    }

    /// Algebraic decay exponent `r` for mask kinds.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self.kind() {
            SymbolKind::Mask { r, .. } => Some(r),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        match &self.repr {
            Repr::Korobov { r } => {
                if a == 0.0 {
                    1.0
                } else {
                    a.powf(-r)
                }
            }
            Repr::Mask { r, kappa, f, ext } => {
                if a >= 1.0 {
                    a.powf(-r) * (a + 1.0).ln().powf(-kappa) * f.value(a.ln())
                } else {
                    let s = a * a;
                    ext[0] + s * (ext[1] + s * ext[2])
                }
            }
            Repr::Exponent { s, f } => (-s * a).exp() * f.value(a),
            Repr::Cutoff => theta(t),
            Repr::Custom(c) => (c.eval)(t),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Cutoff => theta_d1(t),
            Repr::Custom(c) => (c.d1)(t),
            _ => match self.log_derivs(t) {
                Some(ld) => self.eval(t) * ld.l1,
                None => 0.0,
            },
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Cutoff => theta_d2(t),
            Repr::Custom(c) => (c.d2)(t),
            _ => match self.log_derivs(t) {
                Some(ld) => self.eval(t) * ld.l2,
                None => 0.0,
            },
        }
    }

    /// Log-space description for the kinds that never vanish off a null set.
    /// At the symmetry point `t = 0` of the kinked kinds the one-sided
    /// derivatives are averaged, giving zero slope.
    pub(crate) fn log_derivs(&self, t: f64) -> Option<LogDerivs> {
        let a = t.abs();
        let sg = if t < 0.0 { -1.0 } else { 1.0 };
        let ld = match &self.repr {
            Repr::Korobov { r } => {
                if a == 0.0 {
                    LogDerivs {
                        ln: 0.0,
                        sign: 1.0,
                        l1: 0.0,
                        l2: 0.0,
                    }
                } else {
                    LogDerivs {
                        ln: -r * a.ln(),
                        sign: 1.0,
                        l1: -r / a,
                        l2: r * (r + 1.0) / (a * a),
                    }
                }
            }
            Repr::Mask { r, kappa, f, ext } => {
                if a >= 1.0 {
                    mask_outer(*r, *kappa, f, a)
                } else {
                    let s = a * a;
                    let p = ext[0] + s * (ext[1] + s * ext[2]);
                    let p1 = 2.0 * ext[1] * a + 4.0 * ext[2] * a * s;
                    let p2 = 2.0 * ext[1] + 12.0 * ext[2] * s;
                    LogDerivs {
                        ln: p.abs().ln(),
                        sign: p.signum(),
                        l1: p1 / p,
                        l2: p2 / p,
                    }
                }
            }
            Repr::Exponent { s, f } => {
                let fv = f.value(a);
                let q1 = f.d1(a) / fv;
                let q2 = f.d2(a) / fv;
                LogDerivs {
                    ln: -s * a + fv.ln(),
                    sign: 1.0,
                    l1: if a == 0.0 { 0.0 } else { -s + q1 },
                    l2: s * s - 2.0 * s * q1 + q2,
                }
            }
            Repr::Cutoff | Repr::Custom(_) => return None,
        };
        Some(LogDerivs { l1: sg * ld.l1, ..ld })
    }

    /// `ln|ψ(t)|`.
    pub fn ln_abs(&self, t: f64) -> f64 {
        match self.log_derivs(t) {
            Some(ld) => ld.ln,
            None => self.eval(t).abs().ln(),
        }
    }

    /// `(sup|F|, sup|F'|, sup|F''|)` of the bounded factor, with the log
    /// factor folded in for masks (`(ln 2)^{-κ}` on `|t| ≥ 1`, `κ ≥ 0`).
    fn envelope_constant(&self) -> Result<f64> {
        match &self.repr {
            Repr::Korobov { .. } => Ok(1.0),
            Repr::Mask { kappa, f, .. } => {
                if *kappa < 0.0 {
                    return Err(Error::NoTailBound);
                }
                Ok(f.bounds().0 * LN_2.powf(-kappa))
            }
            Repr::Exponent { f, .. } => Ok(f.bounds().0),
            Repr::Cutoff => Ok(1.0),
            Repr::Custom(_) => Err(Error::NoTailBound),
        }
    }

    /// Bound on `Σ_{t ≥ 0} |ψ(x0 + t·step)|^q` for `x0 ≥ 1`, `q ∈ {1, 2}`.
    pub(crate) fn lattice_tail_bound(&self, x0: f64, step: f64, q: i32) -> Result<f64> {
        let cq = self.envelope_constant()?.powi(q);
        let qf = q as f64;
        match &self.repr {
            Repr::Korobov { r } | Repr::Mask { r, .. } => {
                let e = qf * r;
                Ok(cq * (x0.powf(-e) + x0.powf(1.0 - e) / ((e - 1.0) * step)))
            }
            Repr::Exponent { s, .. } => Ok(cq * (-qf * s * x0).exp() / (1.0 - (-qf * s * step).exp())),
            Repr::Cutoff => Ok(if x0 >= 1.0 { 0.0 } else { 1.0 }),
            Repr::Custom(_) => Err(Error::NoTailBound),
        }
    }

    /// Bound on `Σ_{|j| > N} |ψ(j)|`.
    pub fn coeff_tail_bound(&self, n: u64) -> Result<f64> {
        if matches!(self.repr, Repr::Custom(_)) || (matches!(self.repr, Repr::Mask { kappa, .. } if kappa < 0.0)) {
            return Err(Error::NotSummable(format!("no summability certificate for {self}")));
        }
        let n = n.max(1) as f64;
        let c = self.envelope_constant()?;
        match &self.repr {
            Repr::Korobov { r } | Repr::Mask { r, .. } => Ok(2.0 * c * n.powf(1.0 - r) / (r - 1.0)),
            Repr::Exponent { s, .. } => Ok(2.0 * c * (-s * (n + 1.0)).exp() / (1.0 - (-s).exp())),
            Repr::Cutoff => Ok(0.0),
            Repr::Custom(_) => unreachable!(),
        }
    }

    /// Smallest certified truncation `N` with `Σ_{|j|>N}|ψ(j)| < tol`, and
    /// the certified bound.
    pub fn truncation_for(&self, tol: f64) -> Result<(u64, f64)> {
        if !(tol > 0.0) {
            return invalid("tail tolerance must be positive");
        }
        let c = match self.envelope_constant() {
            Ok(c) => c,
            Err(_) => return Err(Error::NotSummable(format!("no summability certificate for {self}"))),
        };
        let guess = match &self.repr {
            Repr::Korobov { r } | Repr::Mask { r, .. } => (2.0 * c / ((r - 1.0) * tol)).powf(1.0 / (r - 1.0)),
            Repr::Exponent { s, .. } => ((2.0 * c / tol).ln() - (1.0 - (-s).exp()).ln()) / s,
            _ => 1.0,
        };
        if !(guess < 1e18) {
            return Err(Error::NotSummable(format!("truncation for tolerance {tol} exceeds 1e18 terms")));
        }
        let mut n = (guess.ceil() as u64).max(1);
        while n > 1 && self.coeff_tail_bound(n - 1)? < tol {
            n -= 1;
        }
        while self.coeff_tail_bound(n)? >= tol {
            n += 1;
        }
        Ok((n, self.coeff_tail_bound(n)?))
    }

    /// Bound on `∫_X^∞ (|ψ(x)|/m + |xψ''(x)|) dx` for `X ≥ max(m, 1)`.
    pub fn j_tail_bound(&self, x: f64, m: f64) -> Result<f64> {
        match &self.repr {
            Repr::Korobov { r } => Ok(x.powf(1.0 - r) / ((r - 1.0) * m) + (r + 1.0) * x.powf(-r)),
            Repr::Mask { r, kappa, f, .. } => {
                if *kappa < 0.0 {
                    return Err(Error::NoTailBound);
                }
                let (f0, f1, f2) = f.bounds();
                let k = *kappa;
                let ell = LN_2;
                let scale = ell.powf(-k);
                let big_k = scale
                    * (r * (r + 1.0) * f0
                        + (k * (k + 1.0) / (ell * ell) + k / ell) * f0
                        + (f1 + f2)
                        + 2.0 * (r * k / ell * f0 + r * f1 + k / ell * f1));
                Ok(f0 * scale * x.powf(1.0 - r) / ((r - 1.0) * m) + big_k * x.powf(-r) / r)
            }
            Repr::Exponent { s, f } => {
                let (f0, f1, f2) = f.bounds();
                let k2 = s * s * f0 + 2.0 * s * f1 + f2;
                Ok((-s * x).exp() * (f0 / (s * m) + k2 * (x / s + 1.0 / (s * s))))
            }
            Repr::Cutoff => Ok(0.0),
            Repr::Custom(c) => c.tail.as_ref().map(|t| t(x, m)).ok_or(Error::NoTailBound),
        }
    }

    /// `Σ_{j ≡ ρ (mod L), |j| ≤ N} ψ(j)` for every residue `ρ ∈ [0, L)`;
    /// `n = None` sums the whole lattice.
    ///
    /// Terms with `|j| ≤ max(16L, 2^16)` are summed directly. The rest of
    /// each residue class uses Euler–Maclaurin with the first derivative
    /// correction, with the integrals taken from one long-range quadrature
    /// plus unit-step primitives over the two end windows.
    pub fn residue_sums(&self, n: Option<u64>, l: usize) -> Vec<f64> {
        use rayon::prelude::*;
        let lu = l as u64;
        let base = (16 * lu).max(1 << 16);
        let direct_max = match n {
            Some(n) if n <= base + 2 * lu => n,
            _ => base,
        };
        let mut half = vec![0.0f64; l];
        half.par_iter_mut().enumerate().for_each(|(rho, slot)| {
            let first = if rho == 0 { lu } else { rho as u64 };
            if first > direct_max {
                return;
            }
            let last = first + (direct_max - first) / lu * lu;
            let mut acc = 0.0;
            let mut j = last;
            loop {
                acc += self.eval(j as f64);
                if j < first + lu {
                    break;
                }
                j -= lu;
            }
            *slot = acc;
        });
        let far = n.is_none_or(|n| n > direct_max);
        if far {
            let gg = GeometricGauss::new(16);
            let lf = l as f64;
            let a0 = direct_max + 1;
            let lower = self.unit_step_primitive(a0 as f64, l);
            let (b0, upper, middle) = match n {
                Some(n) => {
                    let b0 = n - lu + 1;
                    (b0, self.unit_step_primitive(b0 as f64, l), self.integral(&gg, a0 as f64, b0 as f64))
                }
                None => (0, Vec::new(), self.integral_to_inf(&gg, a0 as f64)),
            };
            half.par_iter_mut().enumerate().for_each(|(rho, slot)| {
                let rho = rho as u64;
                let j0 = a0 + (rho + lu - a0 % lu) % lu;
                let x0 = j0 as f64;
                let ia = lower[(j0 - a0) as usize];
                let (integral, end_val, end_slope) = match n {
                    Some(n) => {
                        let j1 = j0 + (n - j0) / lu * lu;
                        let x1 = j1 as f64;
                        (middle + upper[(j1 - b0) as usize] - ia, self.eval(x1), self.d1(x1))
                    }
                    None => (middle - ia, 0.0, 0.0),
                };
                *slot += integral / lf + 0.5 * (self.eval(x0) + end_val) + lf * (end_slope - self.d1(x0)) / 12.0;
            });
        }
        (0..l)
            .map(|rho| {
                let neg = (l - rho) % l;
                let zero = if rho == 0 { self.eval(0.0) } else { 0.0 };
                half[rho] + half[neg] + zero
            })
            .collect()
    }

    /// `Σ_{k ≡ c (mod L)} ψ(k)²` over all integers `k`.
    pub(crate) fn lattice_sum_sq(&self, c: i64, l: u64) -> f64 {
        let li = l as i64;
        let c = c.rem_euclid(li);
        let (zero, pos, neg) = if c == 0 {
            (self.eval(0.0).powi(2), li, li)
        } else {
            (0.0, c, li - c)
        };
        zero + self.one_sided_sum_sq(pos as f64, l as f64) + self.one_sided_sum_sq(neg as f64, l as f64)
    }

    /// `Σ_{t ≥ 0} ψ(a + t·step)²`: 32 terms directly, the rest by
    /// Euler–Maclaurin.
    fn one_sided_sum_sq(&self, a: f64, step: f64) -> f64 {
        const DIRECT: usize = 32;
        let mut acc = 0.0;
        for t in (0..DIRECT).rev() {
            acc += self.eval(a + t as f64 * step).powi(2);
        }
        let x0 = a + DIRECT as f64 * step;
        let v = self.eval(x0);
        let slope = 2.0 * v * self.d1(x0);
        let integral = match &self.repr {
            Repr::Korobov { r } => x0.powf(1.0 - 2.0 * r) / (2.0 * r - 1.0),
            _ => GeometricGauss::new(16).integrate_to_inf(&|x| self.eval(x).powi(2), x0),
        };
        acc + integral / step + 0.5 * v * v - step * slope / 12.0
    }

    /// `P[u] = ∫_a^{a+u} ψ` for `u = 0..len`, by unit-step Euler–Maclaurin.
    fn unit_step_primitive(&self, a: f64, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let d1a = self.d1(a);
        let mut trap = 0.0;
        let mut prev = self.eval(a);
        for u in 0..len {
            let x = a + u as f64;
            out.push(trap - (self.d1(x) - d1a) / 12.0);
            let next = self.eval(x + 1.0);
            trap += 0.5 * (prev + next);
            prev = next;
        }
        out
    }

    /// `∫_a^b ψ` for `1 ≤ a ≤ b`.
    fn integral(&self, gg: &GeometricGauss, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        match &self.repr {
            Repr::Korobov { r } => (a.powf(1.0 - r) - b.powf(1.0 - r)) / (r - 1.0),
            _ => gg.integrate(&|x| self.eval(x), a, b),
        }
    }

    /// `∫_a^∞ ψ` for `a ≥ 1`.
    fn integral_to_inf(&self, gg: &GeometricGauss, a: f64) -> f64 {
        match &self.repr {
            Repr::Korobov { r } => a.powf(1.0 - r) / (r - 1.0),
            _ => gg.integrate_to_inf(&|x| self.eval(x), a),
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;

    /// `korobov:r=2`, `mask:r=2,kappa=1,f=recip(1)`, `exponent:s=1`, `theta`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let mut r = None;
        let mut kappa = 0.0;
        let mut sv = None;
        let mut f = FSpec::default();
        let mut rest = params.trim();
        while !rest.is_empty() {
            let (key, tail) = rest
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in '{s}'")))?;
            let tail = tail.trim_start();
            // values may contain commas inside parentheses
            let mut depth = 0;
            let mut end = tail.len();
            for (i, ch) in tail.char_indices() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    ',' if depth == 0 => {
                        end = i;
                        break;
                    }
                    _ => {}
                }
            }
            let value = tail[..end].trim();
            rest = tail.get(end + 1..).unwrap_or("").trim_start();
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("invalid number '{value}' in '{s}'")))
            };
            match key.trim() {
                "r" => r = Some(num()?),
                "kappa" => kappa = num()?,
                "s" => sv = Some(num()?),
                "f" | "F" => f = value.parse()?,
                other => return Err(Error::Parse(format!("unknown parameter '{other}' in '{s}'"))),
            }
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::Parse(format!("'{s}' requires {k}=")));
        match name.trim() {
            "korobov" => make_korobov(need(r, "r")?),
            "mask" => make_mask(need(r, "r")?, kappa, f),
            "exponent" => make_exponent(need(sv, "s")?, f),
            "theta" => Ok(make_theta()),
            other => Err(Error::Parse(format!("unknown symbol kind '{other}'"))),
        }
    }
}

/// `G = λ/β` with derivatives.
#[derive(Debug, Clone)]
pub struct RatioSymbol {
    pub numerator: Symbol,
    pub denominator: Symbol,
}

impl RatioSymbol {
    pub fn new(numerator: Symbol, denominator: Symbol) -> Result<Self> {
        if !denominator.nonzero_everywhere() {
            return invalid(format!("denominator {denominator} may vanish"));
        }
        Ok(Self { numerator, denominator })
    }

    /// `(G, G', G'')` at `t`. In log space when both symbols allow it, so
    /// `λ = β` yields exactly `(1, 0, 0)`.
    pub fn derivs(&self, t: f64) -> (f64, f64, f64) {
        if let (Some(a), Some(b)) = (self.numerator.log_derivs(t), self.denominator.log_derivs(t)) {
            let g = a.sign * b.sign * (a.ln - b.ln).exp();
            let l1 = a.l1 - b.l1;
            let l2 = l1 * l1 + (a.l2 - a.l1 * a.l1) - (b.l2 - b.l1 * b.l1);
            return (g, g * l1, g * l2);
        }
        let (a, a1, a2) = (self.numerator.eval(t), self.numerator.d1(t), self.numerator.d2(t));
        let (b, b1, b2) = (self.denominator.eval(t), self.denominator.d1(t), self.denominator.d2(t));
        let g = a / b;
        let w = (a1 * b - a * b1) / (b * b);
        let g2 = (a2 * b - a * b2) / (b * b) - 2.0 * b1 * w / b;
        (g, w, g2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivs(t).0
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.derivs(t).1
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.derivs(t).2
    }
}

/// `J_m(ψ) = ∫_{|x|≥m} (|ψ(x)|/m + |xψ''(x)|) dx`, truncated at the first
/// `X = 2^i m` whose certified tail (both sides) is below `tail_tol`.
#[allow(non_snake_case)]
pub fn J_m(psi: &Symbol, m: u64, tail_tol: f64) -> Result<f64> {
    if m == 0 {
        return invalid("m must be positive");
    }
    if !(tail_tol > 0.0) {
        return invalid("tail tolerance must be positive");
    }
    let mf = m as f64;
    let mut x = 2.0 * mf;
    while 2.0 * psi.j_tail_bound(x, mf)? >= tail_tol {
        x *= 2.0;
        if !x.is_finite() || x > 1e300 {
            return Err(Error::Numeric(format!("J_m tail of {psi} does not fall below {tail_tol}")));
        }
    }
    J_m_to(psi, m, x)
}

/// `J_m` truncated at an explicit cutoff `X`, without a tail certificate.
#[allow(non_snake_case)]
pub fn J_m_to(psi: &Symbol, m: u64, x_max: f64) -> Result<f64> {
    if m == 0 {
        return invalid("m must be positive");
    }
    let mf = m as f64;
    if !(x_max >= mf) {
        return invalid(format!("cutoff X = {x_max} below m = {m}"));
    }
    let integrand = |x: f64| psi.eval(x).abs() / mf + (x * psi.d2(x)).abs();
    Ok(2.0 * geometric_simpson(&integrand, mf, x_max, 1e-11))
}

/// `ε_m = J_m(λ) + (sup_{|x|≤m}|G| + m²·sup_{|x|≤m}|G''|)·J_m(β)`, with the
/// sups sampled on `64m + 1` equispaced points.
pub fn epsilon_m(lambda: &Symbol, beta: &Symbol, m: u64, tail_tol: f64) -> Result<f64> {
    let ratio = RatioSymbol::new(lambda.clone(), beta.clone())?;
    let (sup_g, sup_g2) = ratio_sups(&ratio, m);
    let mf = m as f64;
    Ok(J_m(lambda, m, tail_tol)? + (sup_g + mf * mf * sup_g2) * J_m(beta, m, tail_tol)?)
}

pub(crate) fn ratio_sups(ratio: &RatioSymbol, m: u64) -> (f64, f64) {
    let mf = m as f64;
    let n = 64 * m as usize;
    let mut sup_g: f64 = 0.0;
    let mut sup_g2: f64 = 0.0;
    for i in 0..=n {
        let t = -mf + 2.0 * mf * i as f64 / n as f64;
        let (g, _, g2) = ratio.derivs(t);
        sup_g = sup_g.max(g.abs());
        sup_g2 = sup_g2.max(g2.abs());
    }
    (sup_g, sup_g2)
}

/// Empirical monotone-type constant: the smallest ratio `|ψ(x)|/|ψ(y)|` and
/// `|ψ''(x)|/|ψ''(y)|` over sampled `y ∈ [t_lo, t_hi]`, `x ∈ [y/2, 2y]`.
pub fn monotone_constant(psi: &Symbol, t_lo: f64, t_hi: f64, samples: usize) -> f64 {
    let mut c0 = f64::INFINITY;
    let ratio = t_hi / t_lo;
    for i in 0..=samples {
        let y = t_lo * ratio.powf(i as f64 / samples as f64);
        let (vy, dy) = (psi.eval(y).abs(), psi.d2(y).abs());
        for k in 0..=16 {
            let x = y * 2f64.powf(-1.0 + k as f64 / 8.0);
            if vy > 0.0 {
                c0 = c0.min(psi.eval(x).abs() / vy);
            }
            if dy > 0.0 {
                c0 = c0.min(psi.d2(x).abs() / dy);
            }
        }
    }
    c0
}
