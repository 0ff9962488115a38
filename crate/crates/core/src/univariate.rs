//! The univariate translate operator `Q_{m,β}` and its spectral oracle.
//!
//! A function enters as its generator `g`, with `f = φ_λ * g`, i.e.
//! `f̂(k) = λ(k)·ĝ(k)`. `Q_{m,β}(f)` is the combination
//! `(2m+1)^{-1} Σ_k V_m(g)(x_k)·φ_β(· − x_k)` over the centres
//! `x_k = 2πk/(2m+1)`, where `V_m(g)` has coefficients `ϑ(k/m)·G(k)·ĝ(k)`
//! and `G = λ/β`. In coefficient space this is
//! `Q̂(k) = ϑ(k_m/m)·G(k_m)·β(k)·ĝ(k_m)`, with `k_m` the residue of `k`
//! modulo `2m+1` in `[−m, m]`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{invalid, Error, Result};
use crate::quad::lcm;
use crate::spectral::{dense_eval_1d, dense_grid_values_1d, fft_axes, norm_of_values, refine_sup, Norm, SpectralCoefficients};
use crate::symbols::{RatioSymbol, Symbol, SymbolKind};

/// Default relative size of the dropped alias tail in [`approx_error`].
pub const DEFAULT_ALIAS_REL_TOL: f64 = 1e-3;

/// Largest alias block count tried before [`approx_error`] gives up.
const MAX_ALIAS_BLOCKS: u64 = 1 << 26;

/// `Π_l λ(j_l)`.
pub fn lambda_d(lambda: &Symbol, j: &[i64]) -> f64 {
    j.iter().map(|&v| lambda.eval(v as f64)).product()
}

/// `f = φ_{λ,d} * g`, stored through `g` with `f` cached.
#[derive(Debug, Clone)]
pub struct HLambdaFunction {
    g: SpectralCoefficients,
    lambda: Symbol,
    f: SpectralCoefficients,
}

impl HLambdaFunction {
    pub fn new(g: SpectralCoefficients, lambda: Symbol) -> Result<Self> {
        if !lambda.nonzero_everywhere() {
            return invalid(format!("λ = {lambda} must not vanish"));
        }
        let f = g.map_multiplier(|j| lambda_d(&lambda, j));
        Ok(Self { g, lambda, f })
    }

    pub fn g(&self) -> &SpectralCoefficients {
        &self.g
    }

    pub fn f(&self) -> &SpectralCoefficients {
        &self.f
    }

    pub fn lambda(&self) -> &Symbol {
        &self.lambda
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Largest deviation of the cached `f̂` from `λ_d·ĝ`.
    pub fn check(&self) -> f64 {
        self.g
            .iter()
            .map(|(j, c)| (self.f.coeff(j) - c * lambda_d(&self.lambda, j)).norm())
            .fold(0.0, f64::max)
    }

    /// `‖f‖_{H_{λ,p}} = ‖g‖_p`.
    pub fn class_norm(&self, p: Norm) -> f64 {
        use crate::spectral::LpNorm;
        self.g.lp_norm(p)
    }
}

fn require_1d(c: &SpectralCoefficients) -> Result<()> {
    if c.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: c.dim(),
        });
    }
    Ok(())
}

pub(crate) fn require_cutoff(theta: &Symbol) -> Result<()> {
    if theta.kind() != SymbolKind::Cutoff {
        return invalid(format!("{theta} is not the cutoff ϑ"));
    }
    Ok(())
}

pub(crate) fn require_m(m: u64) -> Result<()> {
    if m == 0 {
        return invalid("m must be positive");
    }
    Ok(())
}

/// `k_m ∈ [−m, m]` with `k ≡ k_m (mod 2m+1)`.
pub fn nearest_residue(k: i64, m: u64) -> i64 {
    let m = m as i64;
    (k + m).rem_euclid(2 * m + 1) - m
}

/// `H_m(x) = Σ_k ϑ(k/m)·G(k)·e^{ikx}`.
#[allow(non_snake_case)]
pub fn build_Hm(lambda: &Symbol, beta: &Symbol, theta: &Symbol, m: u64) -> Result<SpectralCoefficients> {
    require_m(m)?;
    require_cutoff(theta)?;
    let ratio = RatioSymbol::new(lambda.clone(), beta.clone())?;
    let mf = m as f64;
    let top = m as i64 - 1;
    let map: BTreeMap<Vec<i64>, Complex64> = (-top..=top)
        .map(|k| (vec![k], Complex64::new(theta.eval(k as f64 / mf) * ratio.eval(k as f64), 0.0)))
        .collect();
    SpectralCoefficients::from_map_unchecked(1, map).with_support_bound(vec![top as usize])
}

/// `V̂_m(g)(j)` for `j ∈ [−m, m]` as a dense vector indexed by `j + m`.
fn v_dense(func: &HLambdaFunction, beta: &Symbol, theta: &Symbol, m: u64) -> Result<Vec<Complex64>> {
    require_1d(func.g())?;
    require_m(m)?;
    require_cutoff(theta)?;
    let ratio = RatioSymbol::new(func.lambda().clone(), beta.clone())?;
    let mi = m as i64;
    let mf = m as f64;
    Ok((-mi..=mi)
        .map(|j| {
            let w = theta.eval(j as f64 / mf);
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                func.g().coeff(&[j]) * (w * ratio.eval(j as f64))
            }
        })
        .collect())
}

/// `V_m(g) = H_m * g`.
#[allow(non_snake_case)]
pub fn apply_Vm(func: &HLambdaFunction, beta: &Symbol, theta: &Symbol, m: u64) -> Result<SpectralCoefficients> {
    let v = v_dense(func, beta, theta, m)?;
    let mi = m as i64;
    let map = v
        .iter()
        .enumerate()
        .map(|(i, c)| (vec![i as i64 - mi], *c))
        .collect();
    let bound = (m as usize - 1).min(func.g().support_bound()[0]);
    SpectralCoefficients::from_map_unchecked(1, map).with_support_bound(vec![bound])
}

/// `2m+1` translates of the truncated generator `φ_β^{(N)}` with weights.
#[derive(Debug, Clone)]
pub struct TranslateApproximant {
    generator: Symbol,
    m: u64,
    weights: Vec<f64>,
    truncation: u64,
    tail_bound: f64,
}

impl TranslateApproximant {
    /// Weights on the centres `2πk/(2m+1)`, generator truncated at `N` with
    /// certified tail `Σ_{|j|>N}|β(j)|`.
    pub fn from_weights(generator: Symbol, m: u64, weights: Vec<f64>, truncation: u64) -> Result<Self> {
        require_m(m)?;
        if weights.len() as u64 != 2 * m + 1 {
            return invalid(format!("expected {} weights, got {}", 2 * m + 1, weights.len()));
        }
        if truncation == 0 {
            return invalid("generator truncation must be positive");
        }
        let tail_bound = generator.coeff_tail_bound(truncation).unwrap_or(f64::INFINITY);
        Ok(Self {
            generator,
            m,
            weights,
            truncation,
            tail_bound,
        })
    }

    pub fn generator(&self) -> &Symbol {
        &self.generator
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Number of translates, `2m + 1`.
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn centers(&self) -> Vec<f64> {
        centers(self.m)
    }

    /// `Ĉ(ρ) = Σ_k c_k e^{−2πiρk/(2m+1)}`.
    fn weight_dft(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        let n = data.len();
        fft_axes(&mut data, &[n], FftDirection::Forward);
        data
    }

    /// Fourier coefficient of the approximant: `β(k)·Ĉ(k mod (2m+1))` for
    /// `|k| ≤ N`, zero beyond.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() > self.truncation {
            return Complex64::new(0.0, 0.0);
        }
        let md = self.weights.len() as i64;
        let phase: Complex64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &c)| c * Complex64::from_polar(1.0, -TAU * ((k * i as i64).rem_euclid(md)) as f64 / md as f64))
            .sum();
        phase * self.generator.eval(k as f64)
    }

    /// Spectrum of the approximant restricted to `|k| ≤ bound`.
    pub fn spectrum(&self, bound: u64) -> SpectralCoefficients {
        let dft = self.weight_dft();
        let md = dft.len() as i64;
        let top = bound.min(self.truncation) as i64;
        let map = (-top..=top)
            .map(|k| (vec![k], dft[k.rem_euclid(md) as usize] * self.generator.eval(k as f64)))
            .collect();
        SpectralCoefficients::from_map_unchecked(1, map)
    }

    /// Text form: header `m N tail generator`, then `k center weight` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {:e} {}", self.m, self.truncation, self.tail_bound, self.generator);
        for (k, (x, w)) in self.centers().iter().zip(&self.weights).enumerate() {
            let _ = writeln!(out, "{k} {x:e} {w:e}");
        }
        out
    }

    /// Inverse of [`to_text`](Self::to_text); centres are recomputed from `m`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty approximant".into()))?;
        let mut parts = header.split_whitespace();
        let mut field = |name: &str| parts.next().ok_or_else(|| Error::Parse(format!("header lacks {name}")));
        let m: u64 = field("m")?.parse().map_err(|e| Error::Parse(format!("m: {e}")))?;
        let n: u64 = field("N")?.parse().map_err(|e| Error::Parse(format!("N: {e}")))?;
        let _tail = field("tail")?;
        let generator: Symbol = field("generator")?.parse()?;
        let mut weights = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 || cols[0].parse::<usize>().ok() != Some(i) {
                return Err(Error::Parse(format!("bad approximant line '{line}'")));
            }
            weights.push(cols[2].parse().map_err(|e| Error::Parse(format!("weight: {e}")))?);
        }
        Self::from_weights(generator, m, weights, n)
    }
}

/// The translate centres `2πk/(2m+1)`, `k = 0..2m`.
pub fn centers(m: u64) -> Vec<f64> {
    let md = (2 * m + 1) as f64;
    (0..=2 * m).map(|k| TAU * k as f64 / md).collect()
}

/// Builds `Q_{m,β}(f)`: weights `V_m(g)(x_k)/(2m+1)` and a generator
/// truncation certified against `tail_tol`.
#[allow(non_snake_case)]
pub fn assemble_Q(func: &HLambdaFunction, beta: &Symbol, theta: &Symbol, m: u64, tail_tol: f64) -> Result<TranslateApproximant> {
    let (truncation, tail_bound) = beta.truncation_for(tail_tol)?;
    let v = v_dense(func, beta, theta, m)?;
    let md = v.len();
    let weights = dense_grid_values_1d(&v, md).into_iter().map(|x| x / md as f64).collect();
    Ok(TranslateApproximant {
        generator: beta.clone(),
        m,
        weights,
        truncation,
        tail_bound,
    })
}

/// `Σ_k c_k φ_β^{(N)}(x − x_k)` by direct summation over `|j| ≤ N`.
/// Costs O(N) per point; use [`eval_approximant_grid`] for large `N`.
pub fn eval_approximant(a: &TranslateApproximant, x: f64) -> f64 {
    let dft = a.weight_dft();
    let md = dft.len() as u64;
    let mut acc = (dft[0] * a.generator.eval(0.0)).re;
    let step = Complex64::from_polar(1.0, x);
    let mut w = step;
    for j in 1..=a.truncation {
        if j % 1024 == 0 {
            w = Complex64::from_polar(1.0, (j as f64) * x);
        }
        acc += 2.0 * (dft[(j % md) as usize] * w).re * a.generator.eval(j as f64);
        w *= step;
    }
    acc
}

/// Values of the approximant at `2πs/G`, `s = 0..G−1`, exact for the
/// truncated generator. Residue-class sums of `β` modulo `lcm(2m+1, G)`
/// replace the `O(N)` sum.
pub fn eval_approximant_grid(a: &TranslateApproximant, grid: usize) -> Result<Vec<f64>> {
    if grid == 0 {
        return invalid("grid size must be positive");
    }
    let dft = a.weight_dft();
    let md = dft.len();
    let l = lcm(md as u64, grid as u64) as usize;
    let sums = a.generator.residue_sums(Some(a.truncation), l);
    let mut data = vec![Complex64::new(0.0, 0.0); grid];
    for (rho, s) in sums.iter().enumerate() {
        data[rho % grid] += dft[rho % md] * *s;
    }
    fft_axes(&mut data, &[grid], FftDirection::Inverse);
    Ok(data.into_iter().map(|z| z.re).collect())
}

/// Coefficients of `Q_{m,β}(f)` from the aliasing identity
/// `Q̂(k) = ϑ(k_m/m)·G(k_m)·β(k)·ĝ(k_m)`, for `|k| ≤ J_max·(2m+1) + m`.
#[allow(non_snake_case)]
pub fn spectral_oracle_Q(func: &HLambdaFunction, beta: &Symbol, theta: &Symbol, m: u64, j_max: u64) -> Result<SpectralCoefficients> {
    let v = v_dense(func, beta, theta, m)?;
    let mi = m as i64;
    let md = 2 * mi + 1;
    let jm = j_max as i64;
    let mut map = BTreeMap::new();
    for (i, a) in v.iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let j = i as i64 - mi;
        for t in -jm..=jm {
            let k = j + t * md;
            map.insert(vec![k], a * beta.eval(k as f64));
        }
    }
    let bound = (jm * md + mi) as usize;
    SpectralCoefficients::from_map_unchecked(1, map).with_support_bound(vec![bound])
}

/// The oracle series on the grid `2πs/G`, summed over all `|k| ≤ N`
/// (`None`: the untruncated series) through residue classes modulo
/// `lcm(2m+1, G)`.
#[allow(non_snake_case)]
pub fn spectral_oracle_Q_grid(
    func: &HLambdaFunction,
    beta: &Symbol,
    theta: &Symbol,
    m: u64,
    truncation: Option<u64>,
    grid: usize,
) -> Result<Vec<f64>> {
    let data = oracle_folded(func, beta, theta, m, truncation, grid)?;
    Ok(inverse_real(data))
}

fn oracle_folded(
    func: &HLambdaFunction,
    beta: &Symbol,
    theta: &Symbol,
    m: u64,
    truncation: Option<u64>,
    grid: usize,
) -> Result<Vec<Complex64>> {
    if grid == 0 {
        return invalid("grid size must be positive");
    }
    let v = v_dense(func, beta, theta, m)?;
    let md = 2 * m + 1;
    let l = lcm(md, grid as u64) as usize;
    let sums = beta.residue_sums(truncation, l);
    let mut data = vec![Complex64::new(0.0, 0.0); grid];
    for (rho, s) in sums.iter().enumerate() {
        let km = nearest_residue(rho as i64, m);
        data[rho % grid] += v[(km + m as i64) as usize] * *s;
    }
    Ok(data)
}

fn inverse_real(mut data: Vec<Complex64>) -> Vec<f64> {
    let n = data.len();
    fft_axes(&mut data, &[n], FftDirection::Inverse);
    data.into_iter().map(|z| z.re).collect()
}

/// A profile `h` for the multiplier operator `σ_m(h; ·)`.
pub trait Multiplier {
    fn at(&self, x: f64) -> f64;
}

impl Multiplier for Symbol {
    fn at(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

impl<F: Fn(f64) -> f64> Multiplier for F {
    fn at(&self, x: f64) -> f64 {
        self(x)
    }
}

/// `σ_m(h; f)`: multiplies `f̂(k)` by `h(k/m)`.
pub fn sigma_m<H: Multiplier + ?Sized>(h: &H, f: &SpectralCoefficients, m: u64) -> Result<SpectralCoefficients> {
    require_1d(f)?;
    require_m(m)?;
    let mf = m as f64;
    Ok(f.map_multiplier(|k| h.at(k[0] as f64 / mf)))
}

/// Knobs for [`approx_error_with`].
#[derive(Debug, Clone, Copy)]
pub struct ErrorOptions {
    /// The dropped alias tail must fall below this fraction of the error.
    pub alias_rel_tol: f64,
    /// Sampling grid for `p ≠ 2`; `None` picks `max(4096, 8·max(D, m))`
    /// rounded up to a power of two.
    pub grid: Option<usize>,
}

impl Default for ErrorOptions {
    fn default() -> Self {
        Self {
            alias_rel_tol: DEFAULT_ALIAS_REL_TOL,
            grid: None,
        }
    }
}

/// `‖f − Q_{m,β}(f)‖_p` for the untruncated generator.
pub fn approx_error(func: &HLambdaFunction, beta: &Symbol, theta: &Symbol, m: u64, p: Norm) -> Result<f64> {
    approx_error_with(func, beta, theta, m, p, ErrorOptions::default())
}

/// [`approx_error`] with explicit options.
///
/// `p = 2` uses Parseval with alias blocks `|t| ≤ J`, doubling `J` until the
/// certified remainder is below `alias_rel_tol` of the error. Other `p`
/// evaluate `f − Q` on a grid through exact residue-class sums of `β`, so no
/// alias block is dropped; `p = ∞` then refines the maximum on the grid's
/// trigonometric interpolant.
pub fn approx_error_with(func: &HLambdaFunction, beta: &Symbol, theta: &Symbol, m: u64, p: Norm, opts: ErrorOptions) -> Result<f64> {
    let v = v_dense(func, beta, theta, m)?;
    if func.g().is_empty() {
        return Ok(0.0);
    }
    if p.is_two() {
        return l2_error(func, beta, &v, m, opts.alias_rel_tol);
    }
    let d = func.g().support_bound()[0];
    let grid = opts
        .grid
        .unwrap_or_else(|| (8 * d.max(m as usize)).max(4096).next_power_of_two());
    let mut data = oracle_folded(func, beta, theta, m, None, grid)?;
    for c in data.iter_mut() {
        *c = -*c;
    }
    for (j, c) in func.f().iter() {
        data[j[0].rem_euclid(grid as i64) as usize] += c;
    }
    let values = inverse_real(data.clone());
    let norm = norm_of_values(&values, p);
    if p != Norm::Inf {
        return Ok(norm);
    }
    // centred coefficients of the grid interpolant, Nyquist split evenly
    let half = grid / 2;
    let mut centred = vec![Complex64::new(0.0, 0.0); grid + 1];
    for (rho, c) in data.iter().enumerate() {
        if rho < half {
            centred[rho + half] += c;
        } else if rho > half {
            centred[rho - half] += c;
        } else {
            centred[0] += c * 0.5;
            centred[grid] += c * 0.5;
        }
    }
    Ok(refine_sup(&values, &[grid], norm, |x| dense_eval_1d(&centred, x[0])))
}

fn l2_error(func: &HLambdaFunction, beta: &Symbol, v: &[Complex64], m: u64, rel_tol: f64) -> Result<f64> {
    let mi = m as i64;
    let md = 2 * mi + 1;
    let d = func.g().support_bound()[0] as i64;
    let a2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let mut blocks: u64 = 4;
    loop {
        let jb = blocks as i64;
        // f − Q inside |k| ≤ D, then Q alone on the alias blocks beyond
        let mut energy = 0.0;
        for k in -d..=d {
            let km = nearest_residue(k, m);
            let t = (k - km) / md;
            let q = if t.abs() <= jb {
                v[(km + mi) as usize] * beta.eval(k as f64)
            } else {
                Complex64::new(0.0, 0.0)
            };
            energy += (func.f().coeff(&[k]) - q).norm_sqr();
        }
        for (i, a) in v.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let j = i as i64 - mi;
            for t in -jb..=jb {
                let k = j + t * md;
                if k.abs() > d {
                    energy += w * beta.eval(k as f64).powi(2);
                }
            }
        }
        let x0 = ((blocks + 1) * md as u64 - m) as f64;
        let tail2 = a2 * 2.0 * beta.lattice_tail_bound(x0, md as f64, 2)?;
        if tail2 <= rel_tol * rel_tol * energy || (energy == 0.0 && tail2 == 0.0) {
            return Ok(energy.sqrt());
        }
        if blocks >= MAX_ALIAS_BLOCKS {
            return Err(Error::Numeric(format!(
                "alias tail {:.3e} not below {rel_tol} of error {:.3e}",
                tail2.sqrt(),
                energy.sqrt()
            )));
        }
        blocks *= 2;
    }
}
