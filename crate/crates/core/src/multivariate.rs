//! Tensor-product operators, Smolyak combinations and sparse grids.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{invalid, Error, Result};
use crate::quad::gcd;
use crate::spectral::{fft_axes, LpNorm, Norm, SpectralCoefficients};
use crate::symbols::{RatioSymbol, Symbol};
use crate::univariate::{lambda_d, nearest_residue, require_cutoff, require_m};

type CoeffMap = BTreeMap<Vec<i64>, Complex64>;
type KeyedWeights = Vec<(Vec<(u64, u64)>, f64)>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<i64>);

impl MultiIndex {
    pub fn new(entries: Vec<i64>) -> Self {
        Self(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    /// `|k| = Σ|k_j|`.
    pub fn abs_sum(&self) -> i64 {
        self.0.iter().map(|k| k.abs()).sum()
    }

    /// `Π (k_j + 2)^{-κ}`.
    pub fn kappa_weight(&self, kappa: f64) -> f64 {
        self.0.iter().map(|&k| ((k + 2) as f64).powf(-kappa)).product()
    }
}

/// All `k ∈ Z^d_+` with `|k| ≤ m`, lexicographic.
pub fn simplex(d: usize, m: u32) -> Vec<MultiIndex> {
    fn rec(d: usize, left: u32, cur: &mut Vec<i64>, out: &mut Vec<MultiIndex>) {
        if cur.len() == d {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for k in 0..=left {
            cur.push(k as i64);
            rec(d, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        rec(d, m, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

/// How far along an axis a `Q` operator spreads its aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Alias blocks `|t| ≤ J` around each residue.
    Blocks(u64),
    /// Output frequencies `|k| ≤ N`.
    Band(u64),
}

/// One factor of a tensor-product operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisOp {
    Identity,
    /// `Q_m` with `β = λ`.
    Q(u64),
}

/// Along `axis`, read `ĝ` as generator coefficients and write coefficients
/// of `Q_{m,β}` applied in that variable: `γ(k)·ĝ(…, k_m, …)` with
/// `γ(k) = ϑ(k_m/m)·G(k_m)·β(k)`. Other slots are untouched, so applying
/// every axis once yields the coefficients of `Q_𝐦(f)`.
#[allow(non_snake_case, clippy::too_many_arguments)]
pub fn apply_Q_axis(
    g: &SpectralCoefficients,
    axis: usize,
    lambda: &Symbol,
    beta: &Symbol,
    theta: &Symbol,
    m: u64,
    trunc: Truncation,
) -> Result<SpectralCoefficients> {
    let d = g.dim();
    if axis == 0 || axis > d {
        return invalid(format!("axis {axis} out of range 1..={d}"));
    }
    require_m(m)?;
    require_cutoff(theta)?;
    let ratio = RatioSymbol::new(lambda.clone(), beta.clone())?;
    let out = q_axis_map(g.coeffs(), axis - 1, m, trunc, |jm, k| {
        let w = theta.eval(jm as f64 / m as f64);
        if w == 0.0 {
            0.0
        } else {
            w * ratio.eval(jm as f64) * beta.eval(k as f64)
        }
    });
    Ok(SpectralCoefficients::from_map_unchecked(d, out))
}

fn q_axis_map(input: &CoeffMap, axis: usize, m: u64, trunc: Truncation, gamma: impl Fn(i64, i64) -> f64) -> CoeffMap {
    let mi = m as i64;
    let big = 2 * mi + 1;
    let mut out = CoeffMap::new();
    for (j, c) in input {
        let jm = j[axis];
        if jm.abs() > mi {
            continue;
        }
        let (lo, hi) = match trunc {
            Truncation::Blocks(b) => (-(b as i64), b as i64),
            Truncation::Band(n) => {
                let n = n as i64;
                ((-n - jm).div_euclid(big) + i64::from((-n - jm).rem_euclid(big) != 0), (n - jm).div_euclid(big))
            }
        };
        for t in lo..=hi {
            let k = jm + t * big;
            let w = gamma(jm, k);
            if w != 0.0 {
                let mut key = j.clone();
                key[axis] = k;
                *out.entry(key).or_insert(ZERO) += c * w;
            }
        }
    }
    out
}

fn identity_axis_map(input: &CoeffMap, axis: usize, lambda: &Symbol, trunc: Truncation) -> CoeffMap {
    input
        .iter()
        .filter(|(j, _)| match trunc {
            Truncation::Band(n) => j[axis].unsigned_abs() <= n,
            Truncation::Blocks(_) => true,
        })
        .map(|(j, c)| (j.clone(), c * lambda.eval(j[axis] as f64)))
        .collect()
}

fn apply_ops(g: &CoeffMap, ops: &[AxisOp], lambda: &Symbol, theta: &Symbol, trunc: Truncation) -> CoeffMap {
    let mut cur = g.clone();
    for (axis, op) in ops.iter().enumerate() {
        cur = match *op {
            AxisOp::Identity => identity_axis_map(&cur, axis, lambda, trunc),
            AxisOp::Q(m) => q_axis_map(&cur, axis, m, trunc, |jm, k| {
                let w = theta.eval(jm as f64 / m as f64);
                if w == 0.0 {
                    0.0
                } else {
                    w * lambda.eval(k as f64)
                }
            }),
        };
    }
    cur
}

/// A real linear combination of tensor-product operators.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    dim: usize,
    terms: BTreeMap<Vec<AxisOp>, f64>,
}

impl OperatorSum {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::product(vec![vec![(AxisOp::Identity, 1.0)]; dim])
    }

    pub fn q_tensor(ms: &[u64]) -> Result<Self> {
        for &m in ms {
            require_m(m)?;
        }
        Ok(Self::product(ms.iter().map(|&m| vec![(AxisOp::Q(m), 1.0)]).collect()))
    }

    /// `T_𝐤 = ⊗ T_{k_j}` with `T_k = I − Q_{2^k}` and `T_{-1} = I`.
    pub fn t_op(k: &MultiIndex) -> Result<Self> {
        let factors = k
            .entries()
            .iter()
            .map(|&kj| match kj {
                -1 => Ok(vec![(AxisOp::Identity, 1.0)]),
                k if k >= 0 => Ok(vec![(AxisOp::Identity, 1.0), (AxisOp::Q(level(k)?), -1.0)]),
                _ => invalid(format!("T index entries must be ≥ -1, got {kj}")),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::product(factors))
    }

    /// `q_𝐤 = ⊗ q_{k_j}` with `q_0 = Q_1` and `q_k = Q_{2^k} − Q_{2^{k−1}}`.
    pub fn q_op(k: &MultiIndex) -> Result<Self> {
        let factors = k
            .entries()
            .iter()
            .map(|&kj| match kj {
                0 => Ok(vec![(AxisOp::Q(1), 1.0)]),
                k if k > 0 => Ok(vec![(AxisOp::Q(level(k)?), 1.0), (AxisOp::Q(level(k - 1)?), -1.0)]),
                _ => invalid(format!("q index entries must be ≥ 0, got {kj}")),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::product(factors))
    }

    /// `P_m = Σ_{|𝐤| ≤ m} q_𝐤`, collected into combination-technique form.
    pub fn p_op(dim: usize, m: u32) -> Result<Self> {
        let mut out = Self::zero(dim);
        for k in simplex(dim, m) {
            out.add_scaled(&Self::q_op(&k)?, 1.0)?;
        }
        Ok(out)
    }

    fn product(factors: Vec<Vec<(AxisOp, f64)>>) -> Self {
        let dim = factors.len();
        let mut terms: BTreeMap<Vec<AxisOp>, f64> = BTreeMap::new();
        terms.insert(Vec::new(), 1.0);
        for f in factors {
            let mut next = BTreeMap::new();
            for (ops, c) in &terms {
                for (op, w) in &f {
                    let mut key = ops.clone();
                    key.push(*op);
                    *next.entry(key).or_insert(0.0) += c * w;
                }
            }
            terms = next;
        }
        let mut out = Self { dim, terms };
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn add_scaled(&mut self, other: &Self, c: f64) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        for (ops, w) in &other.terms {
            *self.terms.entry(ops.clone()).or_insert(0.0) += c * w;
        }
        self.prune();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<Vec<AxisOp>, f64> {
        &self.terms
    }

    /// Coefficients of the operator applied to `f = φ_{λ,d} * g`.
    pub fn apply(&self, g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol, trunc: Truncation) -> Result<SpectralCoefficients> {
        self.check_input(g, theta)?;
        let parts: Vec<CoeffMap> = self
            .terms
            .par_iter()
            .map(|(ops, _)| apply_ops(g.coeffs(), ops, lambda, theta, trunc))
            .collect();
        let mut out = CoeffMap::new();
        for (part, c) in parts.iter().zip(self.terms.values()) {
            for (k, v) in part {
                *out.entry(k.clone()).or_insert(ZERO) += v * *c;
            }
        }
        Ok(SpectralCoefficients::from_map_unchecked(self.dim, out))
    }

    /// Exact `‖A(f)‖₂` for `f = φ_{λ,d} * g`, summing every alias through
    /// per-axis Gram matrices `Σ_k a(k, j)·a'(k, j')`.
    pub fn l2_norm(&self, g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol) -> Result<f64> {
        self.check_input(g, theta)?;
        if self.terms.is_empty() || g.is_empty() {
            return Ok(0.0);
        }
        let d = self.dim;
        let deg = g.iter().flat_map(|(j, _)| j.iter().map(|x| x.abs())).max().unwrap_or(0);
        let n = (2 * deg + 1) as usize;
        let mut dense = vec![ZERO; n.pow(d as u32)];
        for (j, c) in g.iter() {
            dense[dense_index(j, deg, n)] = *c;
        }
        let conj: Vec<Complex64> = dense.iter().map(|c| c.conj()).collect();

        let ops: BTreeSet<AxisOp> = self.terms.keys().flatten().copied().collect();
        let pairs: Vec<(AxisOp, AxisOp)> = ops.iter().flat_map(|a| ops.iter().map(move |b| (*a, *b))).collect();
        let grams: HashMap<(AxisOp, AxisOp), Vec<f64>> = pairs
            .par_iter()
            .map(|&(a, b)| ((a, b), gram(lambda, theta, a, b, deg)))
            .collect();

        let terms: Vec<(&Vec<AxisOp>, f64)> = self.terms.iter().map(|(k, v)| (k, *v)).collect();
        let rows: Vec<f64> = terms
            .par_iter()
            .map(|(t, ct)| {
                let mut row = 0.0;
                for (u, cu) in &terms {
                    let mut y = conj.clone();
                    for axis in 0..d {
                        y = mode_product(&y, n, d, axis, &grams[&(t[axis], u[axis])]);
                    }
                    let s: Complex64 = dense.iter().zip(&y).map(|(a, b)| a * b).sum();
                    row += ct * cu * s.re;
                }
                row
            })
            .collect();
        let sq: f64 = rows.iter().sum();
        Ok(sq.max(0.0).sqrt())
    }

    fn check_input(&self, g: &SpectralCoefficients, theta: &Symbol) -> Result<()> {
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: g.dim() });
        }
        require_cutoff(theta)
    }
}

fn level(k: i64) -> Result<u64> {
    if !(0..63).contains(&k) {
        return invalid(format!("level {k} out of range"));
    }
    Ok(1u64 << k)
}

fn dense_index(j: &[i64], deg: i64, n: usize) -> usize {
    j.iter().fold(0, |acc, &x| acc * n + (x + deg) as usize)
}

/// Applies the `n × n` matrix `a` along `axis` of a row-major `n^d` array.
fn mode_product(data: &[Complex64], n: usize, d: usize, axis: usize, a: &[f64]) -> Vec<Complex64> {
    let stride = n.pow((d - 1 - axis) as u32);
    let outer = data.len() / (n * stride);
    let mut out = vec![ZERO; data.len()];
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * n * stride + inner;
            for r in 0..n {
                let mut acc = ZERO;
                for c in 0..n {
                    let w = a[r * n + c];
                    if w != 0.0 {
                        acc += data[base + c * stride] * w;
                    }
                }
                out[base + r * stride] = acc;
            }
        }
    }
    out
}

/// `Σ_k a(k, j)·b(k, j')` for `|j|, |j'| ≤ deg`, where `I` has kernel
/// `λ(k)·[k = j]` and `Q_m` has `ϑ(j/m)·λ(k)·[k_m = j]`.
fn gram(lambda: &Symbol, theta: &Symbol, a: AxisOp, b: AxisOp, deg: i64) -> Vec<f64> {
    let n = (2 * deg + 1) as usize;
    let mut out = vec![0.0; n * n];
    let at = |r: i64, c: i64| (r + deg) as usize * n + (c + deg) as usize;
    let lam2 = |k: i64| lambda.eval(k as f64).powi(2);
    let cut = |j: i64, m: u64| theta.eval(j as f64 / m as f64);
    match (a, b) {
        (AxisOp::Identity, AxisOp::Identity) => {
            for j in -deg..=deg {
                out[at(j, j)] = lam2(j);
            }
        }
        (AxisOp::Identity, AxisOp::Q(m)) | (AxisOp::Q(m), AxisOp::Identity) => {
            for j in -deg..=deg {
                let jm = nearest_residue(j, m);
                if jm.abs() <= deg {
                    let v = lam2(j) * cut(jm, m);
                    if a == AxisOp::Identity {
                        out[at(j, jm)] = v;
                    } else {
                        out[at(jm, j)] = v;
                    }
                }
            }
        }
        (AxisOp::Q(ma), AxisOp::Q(mb)) => {
            let (bma, bmb) = (2 * ma + 1, 2 * mb + 1);
            let ra = (ma as i64 - 1).min(deg);
            let rb = (mb as i64 - 1).min(deg);
            for j in -ra..=ra {
                let wa = cut(j, ma);
                if wa == 0.0 {
                    continue;
                }
                for jp in -rb..=rb {
                    let wb = cut(jp, mb);
                    if wb == 0.0 {
                        continue;
                    }
                    if let Some((c, l)) = crt(j, bma, jp, bmb) {
                        out[at(j, jp)] = wa * wb * lambda.lattice_sum_sq(c, l);
                    }
                }
            }
        }
    }
    out
}

/// `k ≡ a (mod p)`, `k ≡ b (mod q)` as `k ≡ c (mod lcm)`.
fn crt(a: i64, p: u64, b: i64, q: u64) -> Option<(i64, u64)> {
    let g = gcd(p, q);
    let diff = (b - a) as i128;
    if diff.rem_euclid(g as i128) != 0 {
        return None;
    }
    let (p, q, g) = (p as i128, q as i128, g as i128);
    let qg = q / g;
    let inv = mod_inverse((p / g).rem_euclid(qg), qg);
    let t = ((diff / g).rem_euclid(qg) * inv).rem_euclid(qg);
    let l = p / g * q;
    Some(((a as i128 + p * t).rem_euclid(l) as i64, l as u64))
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    if m == 1 {
        return 0;
    }
    let (mut r0, mut r1, mut s0, mut s1) = (a, m, 1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    s0.rem_euclid(m)
}

/// `Q_𝐦(f)` with `β = λ` on every axis.
#[allow(non_snake_case)]
pub fn Q_tensor(g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol, ms: &[u64], trunc: Truncation) -> Result<SpectralCoefficients> {
    if ms.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: ms.len() });
    }
    OperatorSum::q_tensor(ms)?.apply(g, lambda, theta, trunc)
}

#[allow(non_snake_case)]
pub fn T_op(g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol, k: &MultiIndex, trunc: Truncation) -> Result<SpectralCoefficients> {
    OperatorSum::t_op(k)?.apply(g, lambda, theta, trunc)
}

pub fn q_op(g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol, k: &MultiIndex, trunc: Truncation) -> Result<SpectralCoefficients> {
    OperatorSum::q_op(k)?.apply(g, lambda, theta, trunc)
}

#[allow(non_snake_case)]
pub fn P_op(g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol, m: u32, trunc: Truncation) -> Result<SpectralCoefficients> {
    OperatorSum::p_op(g.dim(), m)?.apply(g, lambda, theta, trunc)
}

/// `‖f − P_m(f)‖_p`. Exact for `p = 2`; otherwise the error spectrum is
/// cut to `|k_j| ≤ 2(2^{m+1}+1)` and normed on a grid.
#[allow(non_snake_case)]
pub fn P_error(g: &SpectralCoefficients, lambda: &Symbol, theta: &Symbol, m: u32, p: Norm) -> Result<f64> {
    let d = g.dim();
    let mut e = OperatorSum::identity(d);
    e.add_scaled(&OperatorSum::p_op(d, m)?, -1.0)?;
    if p.is_two() {
        return e.l2_norm(g, lambda, theta);
    }
    let band = 2 * ((2u64 << m) + 1);
    Ok(e.apply(g, lambda, theta, Truncation::Band(band))?.lp_norm(p))
}

/// `s/M` in lowest terms.
fn reduced(s: u64, big: u64) -> (u64, u64) {
    if s == 0 {
        return (0, 1);
    }
    let g = gcd(s, big);
    (s / g, big / g)
}

/// Number of points of `G^d(m)` counted with multiplicity.
pub fn sum_cardinality(d: usize, m: u32) -> u128 {
    simplex(d, m)
        .iter()
        .map(|k| k.entries().iter().map(|&kj| (2u128 << kj) + 1).product::<u128>())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub k: Vec<u32>,
    pub s: Vec<u64>,
    pub x: Vec<f64>,
}

impl GridPoint {
    /// Per-axis `(s, 2^{k+1}+1)` reduced to lowest terms.
    pub fn key(&self) -> Vec<(u64, u64)> {
        self.k.iter().zip(&self.s).map(|(&k, &s)| reduced(s, (2u64 << k) + 1)).collect()
    }
}

/// The sparse grid `G^d(m)` with per-point provenance.
#[derive(Debug, Clone)]
pub struct SmolyakGrid {
    pub d: usize,
    pub m: u32,
    pub points: Vec<GridPoint>,
    pub sum_cardinality: u128,
    pub distinct_cardinality: u128,
}

pub fn smolyak_grid(d: usize, m: u32) -> Result<SmolyakGrid> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let mut points = Vec::new();
    for k in simplex(d, m) {
        let ks: Vec<u32> = k.entries().iter().map(|&x| x as u32).collect();
        let sizes: Vec<u64> = ks.iter().map(|&kj| (2u64 << kj) + 1).collect();
        let mut s = vec![0u64; d];
        loop {
            let x = s.iter().zip(&sizes).map(|(&sj, &mj)| 2.0 * PI * sj as f64 / mj as f64).collect();
            points.push(GridPoint { k: ks.clone(), s: s.clone(), x });
            let mut axis = d;
            loop {
                if axis == 0 {
                    break;
                }
                axis -= 1;
                s[axis] += 1;
                if s[axis] < sizes[axis] {
                    break;
                }
                s[axis] = 0;
                if axis == 0 {
                    axis = usize::MAX;
                    break;
                }
            }
            if axis == usize::MAX {
                break;
            }
        }
    }
    let distinct: BTreeSet<Vec<(u64, u64)>> = points.iter().map(GridPoint::key).collect();
    Ok(SmolyakGrid {
        d,
        m,
        sum_cardinality: points.len() as u128,
        distinct_cardinality: distinct.len() as u128,
        points,
    })
}

impl SmolyakGrid {
    /// One line per point: `k_1 … k_d s_1 … s_d s_1/M_1 … x_1 … [weight]`.
    pub fn to_text(&self, weights: Option<&TranslateRepresentation>) -> String {
        let mut out = format!("# d={} m={} sum={} distinct={}\n", self.d, self.m, self.sum_cardinality, self.distinct_cardinality);
        for p in &self.points {
            let mut cols: Vec<String> = p.k.iter().map(|k| k.to_string()).collect();
            cols.extend(p.s.iter().map(|s| s.to_string()));
            cols.extend(p.k.iter().zip(&p.s).map(|(&k, s)| format!("{s}/{}", (2u64 << k) + 1)));
            cols.extend(p.x.iter().map(|x| format!("{x:.17e}")));
            if let Some(w) = weights {
                cols.push(format!("{:.17e}", w.weight(&p.key())));
            }
            let _ = writeln!(out, "{}", cols.join(" "));
        }
        out
    }
}

/// `P_m(f) = Σ_y w_y·φ_{λ,d}(· − y)` with `y ∈ G^d(m)` keyed by reduced
/// rational coordinates `y_j = 2π·num/den`.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslateRepresentation {
    pub d: usize,
    pub m: u32,
    pub weights: BTreeMap<Vec<(u64, u64)>, f64>,
}

impl TranslateRepresentation {
    pub fn weight(&self, key: &[(u64, u64)]) -> f64 {
        self.weights.get(key).copied().unwrap_or(0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.values().filter(|w| **w != 0.0).count()
    }

    pub fn point(key: &[(u64, u64)]) -> Vec<f64> {
        key.iter().map(|&(a, b)| 2.0 * PI * a as f64 / b as f64).collect()
    }

    /// `λ_d(k)·Σ_y w_y e^{−i(k, y)}`.
    pub fn coefficient(&self, lambda: &Symbol, k: &[i64]) -> Complex64 {
        let mut acc = ZERO;
        for (key, w) in &self.weights {
            // phase reduced exactly before scaling by 2π
            let phase: f64 = key
                .iter()
                .zip(k)
                .map(|(&(a, b), &kj)| (kj as i128 * a as i128).rem_euclid(b as i128) as f64 / b as f64)
                .sum();
            acc += Complex64::from_polar(*w, -2.0 * PI * phase);
        }
        acc * lambda_d(lambda, k)
    }
}

/// Weights of `P_m(f)` on `G^d(m)`: each combination term `c·Q_𝐦`
/// contributes `c·V_𝐦(g)(x_𝐬)/Π(2m_j+1)`, merged at coincident points.
pub fn translate_representation(g: &SpectralCoefficients, theta: &Symbol, m: u32) -> Result<TranslateRepresentation> {
    require_cutoff(theta)?;
    let d = g.dim();
    let op = OperatorSum::p_op(d, m)?;
    let terms: Vec<(&Vec<AxisOp>, f64)> = op.terms().iter().map(|(k, v)| (k, *v)).collect();
    let parts: Vec<KeyedWeights> = terms
        .par_iter()
        .map(|(ops, c)| {
            let ms: Vec<u64> = ops
                .iter()
                .map(|o| match o {
                    AxisOp::Q(m) => *m,
                    AxisOp::Identity => unreachable!("P_m has no identity factor"),
                })
                .collect();
            lattice_weights(g, theta, &ms, *c)
        })
        .collect();
    let mut weights: BTreeMap<Vec<(u64, u64)>, f64> = BTreeMap::new();
    for part in parts {
        for (key, w) in part {
            *weights.entry(key).or_insert(0.0) += w;
        }
    }
    Ok(TranslateRepresentation { d, m, weights })
}

fn lattice_weights(g: &SpectralCoefficients, theta: &Symbol, ms: &[u64], scale: f64) -> KeyedWeights {
    let dims: Vec<usize> = ms.iter().map(|&m| (2 * m + 1) as usize).collect();
    let total: usize = dims.iter().product();
    let mut data = vec![ZERO; total];
    for (j, c) in g.iter() {
        let mut w = 1.0;
        let mut idx = 0usize;
        for ((&jj, &m), &n) in j.iter().zip(ms).zip(&dims) {
            w *= theta.eval(jj as f64 / m as f64);
            idx = idx * n + jj.rem_euclid(n as i64) as usize;
        }
        if w != 0.0 {
            data[idx] += c * w;
        }
    }
    fft_axes(&mut data, &dims, FftDirection::Inverse);
    let norm = scale / total as f64;
    let mut out = Vec::with_capacity(total);
    for (flat, v) in data.iter().enumerate() {
        let mut rem = flat;
        let mut key = vec![(0, 1); dims.len()];
        for axis in (0..dims.len()).rev() {
            let s = rem % dims[axis];
            rem /= dims[axis];
            key[axis] = reduced(s as u64, dims[axis] as u64);
        }
        out.push((key, v.re * norm));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{make_exponent, make_korobov, make_theta, FSpec};
    use crate::univariate::{assemble_Q, spectral_oracle_Q, HLambdaFunction};
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn unit(d: usize) -> SpectralCoefficients {
        SpectralCoefficients::constant(d, 1.0).unwrap()
    }

    fn sample_g2(deg: i64) -> SpectralCoefficients {
        let mut half = Vec::new();
        for a in -deg..=deg {
            for b in -deg..=deg {
                if (a, b) >= (0, 0) {
                    let re = ((a * 7 + b * 3) as f64).sin() / (1 + a.abs() + b.abs()) as f64;
                    let im = if (a, b) == (0, 0) { 0.0 } else { ((a - 2 * b) as f64).cos() * 0.3 };
                    half.push((vec![a, b], Complex64::new(re, im)));
                }
            }
        }
        SpectralCoefficients::from_half(2, half).unwrap()
    }

    #[test]
    fn grid_cardinalities() {
        let g = smolyak_grid(1, 0).unwrap();
        assert_eq!((g.sum_cardinality, g.distinct_cardinality), (3, 3));
        let g = smolyak_grid(2, 1).unwrap();
        assert_eq!((g.sum_cardinality, g.distinct_cardinality), (39, 33));
        assert_eq!(sum_cardinality(2, 1), 39);
        for p in &g.points {
            for ((&k, &s), &x) in p.k.iter().zip(&p.s).zip(&p.x) {
                assert_eq!(x, 2.0 * PI * s as f64 / ((2u64 << k) + 1) as f64);
            }
        }
        for m in 0..6 {
            assert_eq!(smolyak_grid(2, m).unwrap().sum_cardinality, sum_cardinality(2, m));
        }
    }

    #[test]
    fn grid_dump_has_rational_columns() {
        let text = smolyak_grid(2, 1).unwrap().to_text(None);
        assert!(text.starts_with("# d=2 m=1 sum=39 distinct=33\n"));
        assert_eq!(text.lines().count(), 40);
        assert!(text.lines().nth(1).unwrap().contains("0/3 0/3"));
    }

    #[test]
    fn q_tensor_alias_values() {
        let lam = make_korobov(2.0).unwrap();
        let q = Q_tensor(&unit(2), &lam, &make_theta(), &[2, 2], Truncation::Blocks(2)).unwrap();
        assert_relative_eq!(q.coeff(&[5, 0]).re, 1.0 / 25.0, max_relative = 1e-15);
        assert_relative_eq!(q.coeff(&[5, 5]).re, 1.0 / 625.0, max_relative = 1e-15);
        assert_eq!(q.coeff(&[1, 0]), ZERO);
    }

    #[test]
    fn axes_commute_and_match_univariate_tensor() {
        let lam = make_korobov(2.0).unwrap();
        let beta = make_exponent(1.0, FSpec::default()).unwrap();
        let th = make_theta();
        let g = sample_g2(4);
        let t = Truncation::Blocks(2);
        let ab = apply_Q_axis(&apply_Q_axis(&g, 1, &lam, &beta, &th, 5, t).unwrap(), 2, &lam, &beta, &th, 3, t).unwrap();
        let ba = apply_Q_axis(&apply_Q_axis(&g, 2, &lam, &beta, &th, 3, t).unwrap(), 1, &lam, &beta, &th, 5, t).unwrap();
        assert!(ab.max_abs_diff(&ba) < 1e-15);
        assert!(apply_Q_axis(&g, 3, &lam, &beta, &th, 3, t).is_err());

        let g1 = SpectralCoefficients::from_half(1, vec![(vec![0], c(0.5)), (vec![1], Complex64::new(0.2, -0.1)), (vec![3], c(0.4))]).unwrap();
        let g2 = SpectralCoefficients::from_half(1, vec![(vec![0], c(1.0)), (vec![2], Complex64::new(0.0, 0.3))]).unwrap();
        let mut prod = CoeffMap::new();
        for (a, ca) in g1.iter() {
            for (b, cb) in g2.iter() {
                prod.insert(vec![a[0], b[0]], ca * cb);
            }
        }
        let g12 = SpectralCoefficients::from_map(2, prod).unwrap();
        let q = Q_tensor(&g12, &lam, &th, &[4, 3], t).unwrap();
        let u1 = spectral_oracle_Q(&HLambdaFunction::new(g1, lam.clone()).unwrap(), &lam, &th, 4, 2).unwrap();
        let u2 = spectral_oracle_Q(&HLambdaFunction::new(g2, lam.clone()).unwrap(), &lam, &th, 3, 2).unwrap();
        for (a, ca) in u1.iter() {
            for (b, cb) in u2.iter() {
                assert!((q.coeff(&[a[0], b[0]]) - ca * cb).norm() < 1e-15);
            }
        }
        assert_eq!(q.len(), u1.len() * u2.len());
    }

    #[test]
    fn one_dimensional_reductions() {
        let lam = make_korobov(2.0).unwrap();
        let th = make_theta();
        let g = SpectralCoefficients::from_half(1, vec![(vec![0], c(0.3)), (vec![2], c(0.5)), (vec![7], Complex64::new(0.1, 0.2))]).unwrap();
        let func = HLambdaFunction::new(g.clone(), lam.clone()).unwrap();
        let q = Q_tensor(&g, &lam, &th, &[8], Truncation::Blocks(3)).unwrap();
        let u = spectral_oracle_Q(&func, &lam, &th, 8, 3).unwrap();
        assert!(q.max_abs_diff(&u) < 1e-15);

        let p = P_op(&g, &lam, &th, 3, Truncation::Blocks(3)).unwrap();
        assert!(p.max_abs_diff(&u) < 1e-15);

        let t0 = T_op(&g, &lam, &th, &MultiIndex::new(vec![0]), Truncation::Blocks(3)).unwrap();
        let q1 = Q_tensor(&g, &lam, &th, &[1], Truncation::Blocks(3)).unwrap();
        assert!(t0.max_abs_diff(&func.f().sub(&q1).unwrap()) < 1e-15);
        let id = T_op(&sample_g2(2), &lam, &th, &MultiIndex::new(vec![-1, -1]), Truncation::Blocks(1)).unwrap();
        let f2 = sample_g2(2).map_multiplier(|j| lambda_d(&lam, j));
        assert!(id.max_abs_diff(&f2) < 1e-15);

        let rep = translate_representation(&g, &th, 3).unwrap();
        let a = assemble_Q(&func, &lam, &th, 8, 1e-6).unwrap();
        for (s, w) in a.weights().iter().enumerate() {
            assert!((rep.weight(&[reduced(s as u64, 17)]) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn p_zero_in_two_dimensions() {
        let op = OperatorSum::p_op(2, 0).unwrap();
        assert_eq!(op, OperatorSum::q_tensor(&[1, 1]).unwrap());
        let rep = translate_representation(&unit(2), &make_theta(), 0).unwrap();
        assert_eq!(rep.weights.len(), 9);
        for w in rep.weights.values() {
            assert_relative_eq!(*w, 1.0 / 9.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn combination_technique_coefficients() {
        // P_m in d = 2 is Σ_{|l|=m} Q_{2^l} − Σ_{|l|=m−1} Q_{2^l}
        let op = OperatorSum::p_op(2, 3).unwrap();
        assert_eq!(op.terms().len(), 4 + 3);
        for (ops, c) in op.terms() {
            let lv: u32 = ops.iter().map(|o| if let AxisOp::Q(m) = o { m.trailing_zeros() } else { 99 }).sum();
            assert_eq!(*c, if lv == 3 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn representation_reproduces_p_spectrum() {
        let lam = make_korobov(2.0).unwrap();
        let th = make_theta();
        let g = sample_g2(5);
        let band = 40;
        let p = P_op(&g, &lam, &th, 3, Truncation::Band(band)).unwrap();
        let rep = translate_representation(&g, &th, 3).unwrap();
        assert!(rep.nonzero_count() as u128 <= smolyak_grid(2, 3).unwrap().distinct_cardinality);
        let scale = p.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        for a in -(band as i64)..=band as i64 {
            for b in -(band as i64)..=band as i64 {
                let diff = (rep.coefficient(&lam, &[a, b]) - p.coeff(&[a, b])).norm();
                assert!(diff < 1e-13 * scale, "({a},{b}) {diff}");
            }
        }
    }

    #[test]
    fn gram_norm_matches_truncated_sum() {
        let lam = make_korobov(2.0).unwrap();
        let th = make_theta();
        let g = sample_g2(3);
        for op in [
            OperatorSum::t_op(&MultiIndex::new(vec![1, 0])).unwrap(),
            OperatorSum::q_tensor(&[2, 4]).unwrap(),
            OperatorSum::identity(2),
        ] {
            let exact = op.l2_norm(&g, &lam, &th).unwrap();
            let cut = op.apply(&g, &lam, &th, Truncation::Band(1000)).unwrap().energy().sqrt();
            // the band misses aliases of size about Σ_{|k|>1000} k^{-4}
            assert_relative_eq!(exact, cut, max_relative = 1e-8);
        }
        let id = OperatorSum::identity(2).l2_norm(&g, &lam, &th).unwrap();
        let f = g.map_multiplier(|j| lambda_d(&lam, j));
        assert_relative_eq!(id, f.energy().sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn constant_generator_error_closed_form() {
        // f ≡ 1 and Q_𝐦 aliases the constant with weight λ(k) at every
        // k ≡ 0 (mod M_j) on each axis; the error energy is
        // Π_j (1 + 2ζ(4)/M_j^4) − 1 per term.
        let lam = make_korobov(2.0).unwrap();
        let th = make_theta();
        let z4 = PI.powi(4) / 90.0;
        let e = {
            let mut op = OperatorSum::identity(2);
            op.add_scaled(&OperatorSum::q_tensor(&[2, 4]).unwrap(), -1.0).unwrap();
            op.l2_norm(&unit(2), &lam, &th).unwrap()
        };
        let expect = ((1.0 + 2.0 * z4 / 625.0) * (1.0 + 2.0 * z4 / 9f64.powi(4)) - 1.0).sqrt();
        assert_relative_eq!(e, expect, max_relative = 1e-10);
    }

    #[test]
    fn crt_solutions() {
        for (a, p, b, q) in [(2i64, 5u64, 1i64, 9u64), (-3, 17, 4, 33), (0, 3, 0, 3), (1, 9, 4, 33)] {
            match crt(a, p, b, q) {
                Some((c, l)) => {
                    assert_eq!((c - a).rem_euclid(p as i64), 0);
                    assert_eq!((c - b).rem_euclid(q as i64), 0);
                    assert_eq!(l, crate::quad::lcm(p, q));
                }
                None => assert_ne!((a - b).rem_euclid(gcd(p, q) as i64), 0),
            }
        }
        assert!(crt(1, 9, 2, 33).is_none());
    }
}
