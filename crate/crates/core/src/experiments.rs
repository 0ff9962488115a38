//! Configuration, reproducible generators, convergence sweeps and output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multivariate::{sum_cardinality, P_error};
use crate::spectral::{LpNorm, Norm, SpectralCoefficients};
use crate::symbols::{epsilon_m, make_theta, Symbol};
use crate::univariate::{approx_error_with, ErrorOptions, HLambdaFunction, DEFAULT_ALIAS_REL_TOL};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// `p` as a TOML number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PValue", into = "PValue")]
pub struct NormSpec(pub Norm);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PValue {
    Num(f64),
    Text(String),
}

impl TryFrom<PValue> for NormSpec {
    type Error = Error;

    fn try_from(v: PValue) -> Result<Self> {
        match v {
            PValue::Num(p) => Ok(Self(Norm::new(p)?)),
            PValue::Text(s) => Ok(Self(s.parse()?)),
        }
    }
}

impl From<NormSpec> for PValue {
    fn from(p: NormSpec) -> Self {
        match p.0 {
            Norm::P(x) => PValue::Num(x),
            Norm::Inf => PValue::Text("inf".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phases {
    /// Independent uniform `[−1, 1]` real and imaginary parts.
    #[default]
    Random,
    /// All coefficients real and positive.
    Cosine,
    /// `−i/2` on the positive half space, `0` at the origin.
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub index: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GSpec {
    #[serde(default)]
    pub seed: u64,
    /// Per-axis degree; defaults to `2·max(m_list)`.
    #[serde(default)]
    pub max_degree: Option<u64>,
    /// Envelope `Π max(|j_i|, 1)^{-decay}`.
    #[serde(default)]
    pub decay: f64,
    #[serde(default)]
    pub phases: Phases,
    /// Half-space coefficients; mirrored conjugates are implied.
    #[serde(default)]
    pub coefficients: Option<Vec<CoeffEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_alias_rel_tol")]
    pub alias_rel_tol: f64,
}

fn default_tail_tol() -> f64 {
    1e-10
}

fn default_alias_rel_tol() -> f64 {
    DEFAULT_ALIAS_REL_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tail_tol: default_tail_tol(),
            alias_rel_tol: default_alias_rel_tol(),
        }
    }
}

fn default_d() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Symbol in the `korobov:r=2` syntax.
    pub lambda: String,
    /// Defaults to `lambda`.
    #[serde(default)]
    pub beta: Option<String>,
    #[serde(default = "default_d")]
    pub d: usize,
    pub p: NormSpec,
    pub m_list: Vec<u64>,
    #[serde(default)]
    pub g_spec: GSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(config_err("d must be at least 1"));
        }
        if self.m_list.is_empty() || self.m_list[0] == 0 {
            return Err(config_err("m_list must be non-empty and positive"));
        }
        if self.m_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("m_list must be strictly increasing"));
        }
        if self.g_spec.max_degree == Some(0) {
            return Err(config_err("max_degree must be at least 1"));
        }
        if !(self.g_spec.decay.is_finite() && self.g_spec.decay >= 0.0) {
            return Err(config_err("decay must be finite and non-negative"));
        }
        let t = &self.tolerances;
        if !(t.tail_tol > 0.0 && t.alias_rel_tol > 0.0) {
            return Err(config_err("tolerances must be positive"));
        }
        self.lambda()?;
        self.beta()?;
        Ok(())
    }

    pub fn lambda(&self) -> Result<Symbol> {
        self.lambda.parse().map_err(|e: Error| config_err(format!("lambda: {e}")))
    }

    pub fn beta(&self) -> Result<Symbol> {
        match &self.beta {
            Some(b) => b.parse().map_err(|e: Error| config_err(format!("beta: {e}"))),
            None => self.lambda(),
        }
    }

    pub fn norm(&self) -> Norm {
        self.p.0
    }

    pub fn max_degree(&self) -> u64 {
        self.g_spec
            .max_degree
            .unwrap_or_else(|| 2 * self.m_list.last().copied().unwrap_or(1))
    }
}

/// splitmix64: `state += 0x9E3779B97F4A7C15`, then xor-shift-multiply with
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[−1, 1)` from the top 53 bits.
    pub fn next_signed(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * 2f64.powi(-53) * 2.0 - 1.0
    }
}

/// Generator coefficients with `‖g‖_p = 1`, a pure function of `spec`.
pub fn gen_g(spec: &GSpec, d: usize, max_degree: u64, p: Norm) -> Result<SpectralCoefficients> {
    if d == 0 || max_degree == 0 {
        return Err(config_err("gen_g needs d ≥ 1 and max_degree ≥ 1"));
    }
    let raw = match &spec.coefficients {
        Some(list) => {
            SpectralCoefficients::from_half(d, list.iter().map(|e| (e.index.clone(), Complex64::new(e.re, e.im))))?
        }
        None => {
            let mut seed = spec.seed;
            loop {
                let g = draw(spec, seed, d, max_degree as i64)?;
                if !g.is_empty() {
                    break g;
                }
                seed = seed.wrapping_add(1);
            }
        }
    };
    let norm = raw.lp_norm(p);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Numeric(format!("generator has norm {norm}")));
    }
    Ok(raw.scale(1.0 / norm))
}

/// Visits the half space `j > 0` (lexicographic) plus the origin in
/// row-major order over `[−D, D]^d`.
fn draw(spec: &GSpec, seed: u64, d: usize, deg: i64) -> Result<SpectralCoefficients> {
    let mut rng = SplitMix64::new(seed);
    let mut half = Vec::new();
    let mut j = vec![-deg; d];
    loop {
        let origin = j.iter().all(|&x| x == 0);
        let positive = j.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0);
        if origin || positive {
            let env: f64 = j.iter().map(|&x| (x.unsigned_abs().max(1) as f64).powf(-spec.decay)).product();
            let c = match spec.phases {
                Phases::Random if origin => Complex64::new(rng.next_signed(), 0.0),
                Phases::Random => {
                    let re = rng.next_signed();
                    Complex64::new(re, rng.next_signed())
                }
                Phases::Cosine => Complex64::new(1.0, 0.0),
                Phases::Sine if origin => Complex64::new(0.0, 0.0),
                Phases::Sine => Complex64::new(0.0, -0.5),
            };
            half.push((j.clone(), c * env));
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                let g = SpectralCoefficients::from_half(d, half)?;
                return Ok(SpectralCoefficients::from_map_unchecked(d, g.coeffs().clone()));
            }
            axis -= 1;
            j[axis] += 1;
            if j[axis] <= deg {
                break;
            }
            j[axis] = -deg;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub m: u64,
    pub n: u128,
    pub error: f64,
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFitResult {
    pub fitted_rate: f64,
    pub log_log_correction_used: bool,
    /// RMS residual of the fit.
    pub residual: f64,
    pub table: Vec<Row>,
}

/// Least squares `y ≈ a + b·x`; returns `(a, b, rms residual)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Fits `log e = a − ρ·log x + c·log log x` with `c` pinned.
fn fit_rate(xs: &[f64], errors: &[f64], loglog: f64) -> Result<(f64, f64)> {
    if xs.len() < 3 {
        return Err(config_err(format!("rate fit needs at least 3 points, got {}", xs.len())));
    }
    if xs.iter().any(|&x| x <= 1.0) {
        return Err(config_err("rate fit needs every m and n above 1"));
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Numeric("rate fit needs positive finite errors".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let y: Vec<f64> = errors.iter().zip(&lx).map(|(e, l)| e.ln() - loglog * l.ln()).collect();
    let (_, slope, rms) = linear_fit(&lx, &y);
    Ok((-slope, rms))
}

/// Sweep of `‖f − Q_{m,β}(f)‖_p` over `m_list`, with `ε_m` as reference.
pub fn run_univariate(cfg: &ExperimentConfig) -> Result<RateFitResult> {
    cfg.validate()?;
    if cfg.d != 1 {
        return Err(config_err(format!("univariate run needs d = 1, got {}", cfg.d)));
    }
    let lambda = cfg.lambda()?;
    let beta = cfg.beta()?;
    let theta = make_theta();
    let p = cfg.norm();
    let g = gen_g(&cfg.g_spec, 1, cfg.max_degree(), p)?;
    let func = HLambdaFunction::new(g, lambda.clone())?;
    let opts = ErrorOptions {
        alias_rel_tol: cfg.tolerances.alias_rel_tol,
        grid: None,
    };
    let table = cfg
        .m_list
        .par_iter()
        .map(|&m| {
            let error = approx_error_with(&func, &beta, &theta, m, p, opts)?;
            let reference = epsilon_m(&lambda, &beta, m, cfg.tolerances.tail_tol)?;
            Ok(Row {
                m,
                n: 2 * m as u128 + 1,
                error,
                reference,
                ratio: error / reference,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kappa = lambda.kappa();
    let ms: Vec<f64> = table.iter().map(|r| r.m as f64).collect();
    let errors: Vec<f64> = table.iter().map(|r| r.error).collect();
    let (rate, residual) = fit_rate(&ms, &errors, -kappa)?;
    Ok(RateFitResult {
        fitted_rate: rate,
        log_log_correction_used: kappa != 0.0,
        residual,
        table,
    })
}

/// Sweep of `‖f − P_m(f)‖_p` over levels, against `n = |G^d(m)|` counted
/// with multiplicity; reference `2^{−rm}·m^{d−1−κ}`.
pub fn run_multivariate(cfg: &ExperimentConfig) -> Result<RateFitResult> {
    cfg.validate()?;
    if cfg.d < 2 {
        return Err(config_err(format!("multivariate run needs d ≥ 2, got {}", cfg.d)));
    }
    let lambda = cfg.lambda()?;
    if cfg.beta()?.to_string() != lambda.to_string() {
        return Err(config_err("multivariate runs use beta = lambda"));
    }
    let r = lambda
        .decay_exponent()
        .ok_or_else(|| config_err("multivariate runs need a power-decay lambda"))?;
    let kappa = lambda.kappa();
    let theta = make_theta();
    let p = cfg.norm();
    let d = cfg.d;
    let g = gen_g(&cfg.g_spec, d, cfg.max_degree(), p)?;
    let levels = cfg
        .m_list
        .iter()
        .map(|&m| u32::try_from(m).ok().filter(|&l| l < 60).ok_or_else(|| config_err(format!("level {m} too large"))))
        .collect::<Result<Vec<_>>>()?;
    let table = levels
        .par_iter()
        .map(|&m| {
            let error = P_error(&g, &lambda, &theta, m, p)?;
            let mf = m as f64;
            let reference = 2f64.powf(-r * mf) * mf.powf(d as f64 - 1.0 - kappa);
            Ok(Row {
                m: m as u64,
                n: sum_cardinality(d, m),
                error,
                reference,
                ratio: error / reference,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pinned = r * (d as f64 - 1.0) - kappa;
    let ns: Vec<f64> = table.iter().map(|row| row.n as f64).collect();
    let errors: Vec<f64> = table.iter().map(|row| row.error).collect();
    let (rate, residual) = fit_rate(&ns, &errors, pinned)?;
    Ok(RateFitResult {
        fitted_rate: rate,
        log_log_correction_used: pinned != 0.0,
        residual,
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Parse(format!("unknown format {s:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

impl RateFitResult {
    /// `m,n,error,reference,ratio` with shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,error,reference,ratio\n");
        for r in &self.table {
            out.push_str(&format!("{},{},{:?},{:?},{:?}\n", r.m, r.n, r.error, r.reference, r.ratio));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => Ok(self.to_csv()),
            Format::Json => self.to_json().map(|s| s + "\n"),
        }
    }
}

pub fn emit(result: &RateFitResult, format: Format, path: &Path) -> Result<()> {
    fs::write(path, result.render(format)?)?;
    Ok(())
}
