//! Truncated Fourier series on the d-torus.
//!
//! Functions are stored through their Fourier coefficients
//! `f̂(j) = (2π)^{-d} ∫ f(x) e^{-i(j,x)} dx`, so that `f = Σ f̂(j) e^{i(j,x)}`.
//! Norms carry the `(2π)^{-d/p}` normalization, which makes `‖1‖_p = 1` for
//! every `p`, and convolution is normalized so that coefficients multiply.
//!
//! Only real-valued functions are represented: every coefficient set is
//! Hermitian-symmetric, `f̂(-j) = conj(f̂(j))`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Relative tolerance for the Hermitian-symmetry check at construction.
const HERMITIAN_TOL: f64 = 1e-10;

/// Upper bound on the number of grid points used for norm sampling.
const MAX_GRID_POINTS: usize = 1 << 22;

/// Norm index `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    P(f64),
    Inf,
}

impl Norm {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(Norm::Inf);
        }
        if !(p >= 1.0) {
            return invalid(format!("norm index p = {p} must satisfy p >= 1"));
        }
        Ok(Norm::P(p))
    }

    pub fn exponent(&self) -> f64 {
        match self {
            Norm::P(p) => *p,
            Norm::Inf => f64::INFINITY,
        }
    }

    pub fn is_two(&self) -> bool {
        matches!(self, Norm::P(p) if *p == 2.0)
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "inf" || t == "infinity" || t == "∞" {
            return Ok(Norm::Inf);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("invalid norm index '{s}'")))?;
        Norm::new(p)
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Norm::P(p) => write!(f, "{p}"),
            Norm::Inf => write!(f, "inf"),
        }
    }
}

/// A finite, Hermitian-symmetric set of Fourier coefficients on `T^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
    support_bound: Vec<usize>,
}

impl SpectralCoefficients {
    /// The zero function.
    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self {
            dim,
            coeffs: BTreeMap::new(),
            support_bound: vec![0; dim],
        })
    }

    /// The constant function `value`.
    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        let mut map = BTreeMap::new();
        map.insert(vec![0; dim], Complex64::new(value, 0.0));
        Self::from_map(dim, map)
    }

    /// Builds a coefficient set, validating dimension and Hermitian symmetry.
    /// The support bound is the tightest one containing every stored index.
    pub fn from_map(dim: usize, coeffs: BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        let scale = coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        for (j, c) in &coeffs {
            if j.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: j.len(),
                });
            }
            let neg: Vec<i64> = j.iter().map(|v| -v).collect();
            let mirror = coeffs.get(&neg).copied().unwrap_or_default();
            if (mirror - c.conj()).norm() > HERMITIAN_TOL * scale.max(1e-300) {
                return Err(Error::NotHermitian(j.clone()));
            }
        }
        Ok(Self::from_map_unchecked(dim, coeffs))
    }

    /// Builds from `(index, value)` pairs given on a half space; the mirrored
    /// conjugates are filled in. A zero index must carry a real value.
    pub fn from_half(dim: usize, half: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (j, c) in half {
            if j.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: j.len(),
                });
            }
            let neg: Vec<i64> = j.iter().map(|v| -v).collect();
            if neg == j {
                map.insert(j, Complex64::new(c.re, 0.0));
            } else {
                map.insert(neg, c.conj());
                map.insert(j, c);
            }
        }
        Self::from_map(dim, map)
    }

    pub(crate) fn from_map_unchecked(dim: usize, mut coeffs: BTreeMap<Vec<i64>, Complex64>) -> Self {
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        let mut support_bound = vec![0usize; dim];
        for j in coeffs.keys() {
            for (b, v) in support_bound.iter_mut().zip(j) {
                *b = (*b).max(v.unsigned_abs() as usize);
            }
        }
        Self {
            dim,
            coeffs,
            support_bound,
        }
    }

    /// Widens the declared support bound; stored indices are unchanged.
    pub fn with_support_bound(mut self, bound: Vec<usize>) -> Result<Self> {
        if bound.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: bound.len(),
            });
        }
        for j in self.coeffs.keys() {
            for (b, v) in bound.iter().zip(j) {
                if v.unsigned_abs() as usize > *b {
                    return invalid(format!("index {j:?} exceeds support bound {bound:?}"));
                }
            }
        }
        self.support_bound = bound;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_bound(&self) -> &[usize] {
        &self.support_bound
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The coefficient at `j` (zero when absent).
    pub fn coeff(&self, j: &[i64]) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    /// `Σ_j |f̂(j)|`, an upper bound for the sup norm.
    pub fn abs_sum(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `Σ_j |f̂(j)|²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    /// Point evaluation; `x` is reduced mod 2π implicitly by periodicity.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.coeffs
            .iter()
            .map(|(j, c)| {
                let phase: f64 = j.iter().zip(x).map(|(&jl, &xl)| jl as f64 * xl.rem_euclid(TAU)).sum();
                c.re * phase.cos() - c.im * phase.sin()
            })
            .sum()
    }

    /// Full complex value of the series at `x`; the imaginary part vanishes up
    /// to roundoff for Hermitian coefficients.
    pub fn evaluate_complex(&self, x: &[f64]) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(j, c)| {
                let phase: f64 = j.iter().zip(x).map(|(&jl, &xl)| jl as f64 * xl.rem_euclid(TAU)).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    /// Applies `coeff(j) ↦ m(j)·coeff(j)`; `m` must be even in `j` to keep
    /// the result real-valued.
    pub fn map_multiplier(&self, mut m: impl FnMut(&[i64]) -> f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(j, c)| (j.clone(), c * m(j))).collect();
        let mut out = Self::from_map_unchecked(self.dim, coeffs);
        out.support_bound = self.support_bound.clone();
        out
    }

    /// Keeps only indices with `|j_l| ≤ bound_l` on every axis.
    pub fn truncate(&self, bound: &[usize]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(j, _)| j.iter().zip(bound).all(|(v, b)| v.unsigned_abs() as usize <= *b))
            .map(|(j, c)| (j.clone(), *c))
            .collect();
        Self::from_map_unchecked(self.dim, coeffs)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_multiplier(|_| a)
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut map: BTreeMap<Vec<i64>, Complex64> = self.coeffs.iter().map(|(j, c)| (j.clone(), c * a)).collect();
        for (j, c) in &other.coeffs {
            *map.entry(j.clone()).or_default() += c * b;
        }
        let mut out = Self::from_map_unchecked(self.dim, map);
        for (l, s) in out.support_bound.iter_mut().enumerate() {
            *s = (*s).max(self.support_bound[l].max(other.support_bound[l]));
        }
        // the declared bound must still contain every index
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    /// Largest coefficient difference, `max_j |a(j) − b(j)|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, c) in &self.coeffs {
            worst = worst.max((c - other.coeff(j)).norm());
        }
        for (j, c) in &other.coeffs {
            if !self.coeffs.contains_key(j) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Samples the series on the uniform grid with `m` points per axis.
    pub fn sample(&self, m: usize) -> Result<GridSamples> {
        let n = vec![m; self.dim];
        let values = grid_values(self, &n)?;
        GridSamples::new(self.dim, m, values)
    }

    /// Line-based text form: one `j_1 … j_d re im` line per stored index.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (j, c) in &self.coeffs {
            for v in j {
                let _ = write!(out, "{v} ");
            }
            let _ = writeln!(out, "{:e} {:e}", c.re, c.im);
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Blank lines and `#` comments
    /// are skipped; the dimension is inferred from the column count.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 3 {
                return Err(Error::Parse(format!("line {}: expected 'j_1 … j_d re im'", lineno + 1)));
            }
            let d = fields.len() - 2;
            if *dim.get_or_insert(d) != d {
                return Err(Error::Parse(format!("line {}: inconsistent dimension", lineno + 1)));
            }
            let j = fields[..d]
                .iter()
                .map(|s| s.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            map.insert(j, Complex64::new(parse(fields[d])?, parse(fields[d + 1])?));
        }
        let dim = dim.ok_or_else(|| Error::Parse("no coefficients".into()))?;
        Self::from_map(dim, map)
    }
}

/// Real samples on the uniform grid `(2πs/M : s = 0..M−1)^d`, row-major with
/// the first axis varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    dim: usize,
    points_per_axis: usize,
    values: Vec<f64>,
}

impl GridSamples {
    pub fn new(dim: usize, points_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if points_per_axis == 0 {
            return invalid("points per axis must be positive");
        }
        let expected = points_per_axis
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        if values.len() != expected {
            return invalid(format!("expected {expected} samples, got {}", values.len()));
        }
        Ok(Self {
            dim,
            points_per_axis,
            values,
        })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(dim: usize, points_per_axis: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let total = points_per_axis.pow(dim as u32);
        let h = TAU / points_per_axis as f64;
        let mut x = vec![0.0; dim];
        let values = (0..total)
            .map(|flat| {
                let mut rem = flat;
                for l in (0..dim).rev() {
                    x[l] = (rem % points_per_axis) as f64 * h;
                    rem /= points_per_axis;
                }
                f(&x)
            })
            .collect();
        Self::new(dim, points_per_axis, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Discrete Fourier coefficients of grid samples. Exact (up to roundoff) for
/// trigonometric polynomials of per-axis degree below `M/2`.
pub fn coeffs_from_samples(samples: &GridSamples) -> Result<SpectralCoefficients> {
    let m = samples.points_per_axis;
    let d = samples.dim;
    if samples.values.is_empty() || m == 0 {
        return invalid("empty samples");
    }
    let dims = vec![m; d];
    let mut data: Vec<Complex64> = samples.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_axes(&mut data, &dims, FftDirection::Forward);
    let norm = 1.0 / (samples.values.len() as f64);
    let half = ((m - 1) / 2) as i64;
    let mut map = BTreeMap::new();
    let mut idx = vec![0i64; d];
    for (flat, v) in data.iter().enumerate() {
        let mut rem = flat;
        let mut keep = true;
        for l in (0..d).rev() {
            let s = (rem % m) as i64;
            rem /= m;
            let j = if s <= half { s } else { s - m as i64 };
            if j.abs() > half {
                keep = false;
            }
            idx[l] = j;
        }
        if keep {
            map.insert(idx.clone(), v * norm);
        }
    }
    // symmetrize away roundoff so the result is exactly Hermitian
    let sym: BTreeMap<Vec<i64>, Complex64> = map
        .iter()
        .map(|(j, c)| {
            let neg: Vec<i64> = j.iter().map(|v| -v).collect();
            let mirror = map.get(&neg).copied().unwrap_or_default();
            (j.clone(), (c + mirror.conj()) * 0.5)
        })
        .collect();
    SpectralCoefficients::from_map_unchecked(d, sym).with_support_bound(vec![half as usize; d])
}

/// Normalized convolution: `(a*b)ˆ(j) = â(j)·b̂(j)`.
pub fn convolve(a: &SpectralCoefficients, b: &SpectralCoefficients) -> Result<SpectralCoefficients> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let map = a
        .coeffs
        .iter()
        .filter_map(|(j, ca)| b.coeffs.get(j).map(|cb| (j.clone(), ca * cb)))
        .collect();
    let bound: Vec<usize> = a
        .support_bound
        .iter()
        .zip(&b.support_bound)
        .map(|(x, y)| *x.min(y))
        .collect();
    SpectralCoefficients::from_map_unchecked(a.dim, map).with_support_bound(bound)
}

/// Anything with a normalized `L^p` norm.
pub trait LpNorm {
    fn lp_norm(&self, p: Norm) -> f64;
}

impl LpNorm for GridSamples {
    fn lp_norm(&self, p: Norm) -> f64 {
        norm_of_values(&self.values, p)
    }
}

impl LpNorm for SpectralCoefficients {
    fn lp_norm(&self, p: Norm) -> f64 {
        if p.is_two() {
            return self.energy().sqrt();
        }
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let dims = default_grid(&self.support_bound);
        let values = grid_values(self, &dims).expect("grid dimensions derived from support");
        let mut norm = norm_of_values(&values, p);
        if p == Norm::Inf {
            norm = refine_sup(&values, &dims, norm, |x| self.evaluate(x));
        }
        norm
    }
}

/// Normalized `L^p` norm; `p < 1` is rejected.
pub fn lp_norm<F: LpNorm + ?Sized>(f: &F, p: f64) -> Result<f64> {
    Ok(f.lp_norm(Norm::new(p)?))
}

/// `(mean |v|^p)^{1/p}`, or `max |v|`.
pub(crate) fn norm_of_values(values: &[f64], p: Norm) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    match p {
        Norm::Inf => values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        Norm::P(p) => {
            let n = values.len() as f64;
            if p == 1.0 {
                values.iter().map(|v| v.abs()).sum::<f64>() / n
            } else if p == 2.0 {
                (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
            } else {
                (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p)
            }
        }
    }
}

/// Per-axis sample counts for norm estimation: at least `8·N_l`, at least
/// 4096 points in one dimension (64 per axis otherwise), powers of two, with
/// the total capped at [`MAX_GRID_POINTS`].
pub(crate) fn default_grid(support: &[usize]) -> Vec<usize> {
    let d = support.len();
    let floor = if d == 1 { 4096 } else { 64 };
    let mut dims: Vec<usize> = support
        .iter()
        .map(|&n| (8 * n).max(floor).next_power_of_two())
        .collect();
    while dims.iter().product::<usize>() > MAX_GRID_POINTS {
        let (imax, _) = dims.iter().enumerate().max_by_key(|(_, v)| **v).expect("d >= 1");
        if dims[imax] <= floor.min(64) {
            break;
        }
        dims[imax] /= 2;
    }
    dims
}

/// Values of the series on the grid with `dims[l]` points on axis `l`.
/// Coefficients are folded modulo the grid size before the inverse FFT, which
/// is exact at the grid points regardless of the spectral support.
pub fn grid_values(c: &SpectralCoefficients, dims: &[usize]) -> Result<Vec<f64>> {
    if dims.len() != c.dim {
        return Err(Error::DimensionMismatch {
            expected: c.dim,
            got: dims.len(),
        });
    }
    let total: usize = dims.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    for (j, v) in &c.coeffs {
        let mut flat = 0usize;
        for (l, &jl) in j.iter().enumerate() {
            flat = flat * dims[l] + jl.rem_euclid(dims[l] as i64) as usize;
        }
        data[flat] += v;
    }
    fft_axes(&mut data, dims, FftDirection::Inverse);
    Ok(data.into_iter().map(|z| z.re).collect())
}

/// Dense 1-D series `Σ_{k=-K}^{K} c[k+K] e^{ikx}` folded onto `n` grid points.
pub(crate) fn dense_grid_values_1d(coeffs: &[Complex64], n: usize) -> Vec<f64> {
    let k0 = (coeffs.len() / 2) as i64;
    let mut data = vec![Complex64::new(0.0, 0.0); n];
    for (i, c) in coeffs.iter().enumerate() {
        let k = i as i64 - k0;
        data[k.rem_euclid(n as i64) as usize] += c;
    }
    fft_axes(&mut data, &[n], FftDirection::Inverse);
    data.into_iter().map(|z| z.re).collect()
}

/// Real part of a dense 1-D series at one point (phase recurrence).
pub(crate) fn dense_eval_1d(coeffs: &[Complex64], x: f64) -> f64 {
    let k0 = (coeffs.len() / 2) as i64;
    let step = Complex64::from_polar(1.0, x);
    let mut w = Complex64::from_polar(1.0, -(k0 as f64) * x);
    let mut acc = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        if i % 1024 == 0 {
            // re-anchor to keep the recurrence from drifting
            w = Complex64::from_polar(1.0, (i as i64 - k0) as f64 * x);
        }
        acc += (c * w).re;
        w *= step;
    }
    acc
}

/// Golden-section refinement of `max |f|` around the discrete argmax,
/// coordinate-wise over one grid cell on each side.
pub(crate) fn refine_sup(values: &[f64], dims: &[usize], grid_max: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let Some((imax, _)) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    else {
        return grid_max;
    };
    let d = dims.len();
    let mut x = vec![0.0; d];
    let mut rem = imax;
    for l in (0..d).rev() {
        x[l] = (rem % dims[l]) as f64 * TAU / dims[l] as f64;
        rem /= dims[l];
    }
    let mut best = grid_max;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _sweep in 0..2 {
        for l in 0..d {
            let h = TAU / dims[l] as f64;
            let (mut a, mut b) = (x[l] - h, x[l] + h);
            let mut probe = x.clone();
            let mut g = |t: f64| {
                probe[l] = t;
                f(&probe).abs()
            };
            let mut c = b - inv_phi * (b - a);
            let mut e = a + inv_phi * (b - a);
            let (mut fc, mut fe) = (g(c), g(e));
            for _ in 0..60 {
                if fc > fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - inv_phi * (b - a);
                    fc = g(c);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + inv_phi * (b - a);
                    fe = g(e);
                }
                if (b - a).abs() < 1e-13 * PI {
                    break;
                }
            }
            let (t, v) = if fc > fe { (c, fc) } else { (e, fe) };
            if v > best {
                best = v;
                x[l] = t;
            }
        }
    }
    best
}

/// In-place multidimensional FFT over a row-major array.
pub(crate) fn fft_axes(data: &mut [Complex64], dims: &[usize], dir: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let total = data.len();
    let mut stride = 1usize;
    for l in (0..dims.len()).rev() {
        let n = dims[l];
        if n > 1 {
            let fft = planner.plan_fft(n, dir);
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    if stride == 1 {
                        fft.process_with_scratch(&mut data[base..base + n], &mut scratch);
                        continue;
                    }
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}
