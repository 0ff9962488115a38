//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use shiftapprox::experiments::{gen_g, run_multivariate, run_univariate, ExperimentConfig, GSpec, RateFitResult};
use shiftapprox::multivariate::{q_op, simplex, smolyak_grid, sum_cardinality, MultiIndex, Q_tensor, Truncation};
use shiftapprox::spectral::Norm;
use shiftapprox::symbols::{make_exponent, make_korobov, make_theta, FSpec, J_m, Symbol};
use shiftapprox::univariate::{
    approx_error, assemble_Q, eval_approximant_grid, sigma_m, spectral_oracle_Q, spectral_oracle_Q_grid, HLambdaFunction,
};
use shiftapprox::Result;

type Outcome = Result<(bool, String)>;

fn korobov2() -> Symbol {
    make_korobov(2.0).unwrap()
}

fn seeded_g(d: usize, degree: u64, p: Norm) -> Result<shiftapprox::spectral::SpectralCoefficients> {
    gen_g(&GSpec::default(), d, degree, p)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let lam = korobov2();
    let theta = make_theta();
    let mut worst: f64 = 0.0;
    for m in [4u64, 8, 16] {
        let func = HLambdaFunction::new(seeded_g(1, 3 * m, Norm::P(2.0))?, lam.clone())?;
        let a = assemble_Q(&func, &lam, &theta, m, 1e-10)?;
        let direct = eval_approximant_grid(&a, 1024)?;
        let oracle = spectral_oracle_Q_grid(&func, &lam, &theta, m, Some(a.truncation()), 1024)?;
        for (x, y) in direct.iter().zip(&oracle) {
            worst = worst.max((x - y).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst < 1e-8 && secs < 30.0, format!("max grid difference {worst:.2e} (< 1e-8), {secs:.1}s (< 30s)")))
}

fn in_band_exactness() -> Outcome {
    let lam = korobov2();
    let exp1 = make_exponent(1.0, FSpec::default())?;
    let theta = make_theta();
    let mut worst: f64 = 0.0;
    for m in [8u64, 16, 32] {
        let func = HLambdaFunction::new(seeded_g(1, m / 2, Norm::P(2.0))?, lam.clone())?;
        for beta in [&lam, &exp1] {
            let q = spectral_oracle_Q(&func, beta, &theta, m, 1)?;
            let a = assemble_Q(&func, beta, &theta, m, 1e-10)?;
            for k in -(m as i64 / 2)..=(m as i64 / 2) {
                let f = func.f().coeff(&[k]);
                worst = worst.max((f - q.coeff(&[k])).norm()).max((f - a.coefficient(k)).norm());
            }
        }
    }
    Ok((worst < 1e-12, format!("max |(f - Q)^(k)| over |k| <= m/2 is {worst:.2e} (< 1e-12)")))
}

fn constant_alias_value() -> Outcome {
    let lam = korobov2();
    let func = HLambdaFunction::new(shiftapprox::spectral::SpectralCoefficients::constant(1, 1.0)?, lam.clone())?;
    let e = approx_error(&func, &lam, &make_theta(), 2, Norm::Inf)?;
    let want = PI * PI / 75.0;
    let diff = (e - want).abs();
    Ok((diff <= 1e-6, format!("sup error {e:.12} vs pi^2/75 = {want:.12}, diff {diff:.1e}")))
}

/// Criteria 4 and 5 share the generator per norm and the brackets.
fn univariate_rates(lambda: &str, beta: &str) -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, g_spec) in [
        ("1", "decay = 0.0\nphases = \"cosine\""),
        ("2", "decay = 0.5\nphases = \"random\"\nseed = 0"),
        ("\"inf\"", "decay = 1.0\nphases = \"sine\""),
    ] {
        let cfg: ExperimentConfig = format!(
            "lambda = \"{lambda}\"\nbeta = \"{beta}\"\np = {p}\nm_list = [16, 32, 64, 128, 256]\n[g_spec]\n{g_spec}\n"
        )
        .parse()?;
        let kappa = cfg.lambda()?.kappa();
        let res = run_univariate(&cfg)?;
        let scaled: Vec<f64> = res
            .table
            .iter()
            .map(|r| r.error * (r.m as f64).powi(2) * (r.m as f64).ln().powf(kappa))
            .collect();
        let spread = spread(&scaled);
        let good = (res.fitted_rate - 2.0).abs() <= 0.2 && spread <= 4.0;
        ok &= good;
        parts.push(format!("p={}: rate {:.3}, ratio {:.2}", p.trim_matches('"'), res.fitted_rate, spread));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    Ok((ok, format!("{} (rate 2 +/- 0.2, ratio <= 4), {secs:.1}s (< 120s)", parts.join("; "))))
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

fn jm_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [1.5, 2.0, 3.0] {
        let psi = make_korobov(r)?;
        for m in [1u64, 4, 16] {
            let mf = m as f64;
            let want = 2.0 * (mf.powf(-r) / (r - 1.0) + (r + 1.0) * mf.powf(-r));
            let got = J_m(&psi, m, 1e-12 * want)?;
            worst = worst.max((got - want).abs() / want);
        }
    }
    Ok((worst <= 1e-6, format!("max relative deviation {worst:.2e} (<= 1e-6)")))
}

fn telescoping() -> Outcome {
    let lam = korobov2();
    let theta = make_theta();
    let g = seeded_g(2, 8, Norm::P(2.0))?;
    let band = Truncation::Band(80);
    let mut worst: f64 = 0.0;
    for k in simplex(2, 4) {
        let target = Q_tensor(&g, &lam, &theta, &[1 << k.0[0], 1 << k.0[1]], band)?;
        let mut acc = shiftapprox::spectral::SpectralCoefficients::zero(2)?;
        for s0 in 0..=k.0[0] {
            for s1 in 0..=k.0[1] {
                acc = acc.add(&q_op(&g, &lam, &theta, &MultiIndex::new(vec![s0, s1]), band)?)?;
            }
        }
        worst = worst.max(acc.max_abs_diff(&target));
    }
    Ok((worst <= 1e-10, format!("max coefficient difference {worst:.2e} over |k| <= 4 (<= 1e-10)")))
}

fn cardinalities() -> Outcome {
    let a = smolyak_grid(2, 1)?;
    let b = smolyak_grid(1, 0)?;
    let ratios: Vec<f64> = (2..=10u32)
        .map(|m| sum_cardinality(2, m) as f64 / (2f64.powi(m as i32) * m as f64))
        .collect();
    let band = spread(&ratios);
    let ok = (a.sum_cardinality, a.distinct_cardinality) == (39, 33) && (b.sum_cardinality, b.distinct_cardinality) == (3, 3) && band <= 4.0;
    Ok((
        ok,
        format!(
            "G^2(1) {}/{}, G^1(0) {}/{}, sum/(2^m m) spread {band:.2} over m = 2..10 (<= 4)",
            a.sum_cardinality, a.distinct_cardinality, b.sum_cardinality, b.distinct_cardinality
        ),
    ))
}

fn multivariate_rate() -> Outcome {
    let start = Instant::now();
    let cfg: ExperimentConfig = "lambda = \"korobov:r=2\"\nd = 2\np = 2\nm_list = [3, 4, 5, 6, 7]\n[g_spec]\nseed = 0\n".parse()?;
    let res: RateFitResult = run_multivariate(&cfg)?;
    let ratios: Vec<f64> = res.table.iter().map(|r| r.ratio).collect();
    let band = spread(&ratios);
    let secs = start.elapsed().as_secs_f64();
    let ok = band <= 6.0 && (1.6..=2.4).contains(&res.fitted_rate) && secs < 180.0;
    Ok((ok, format!("error 2^(2m)/m spread {band:.2} (<= 6), rate {:.3} in [1.6, 2.4], {secs:.1}s (< 180s)", res.fitted_rate)))
}

fn sigma_identity() -> Outcome {
    let theta = make_theta();
    let mut ok = true;
    for m in [8u64, 16, 32] {
        let f = seeded_g(1, 2 * m, Norm::P(2.0))?;
        let s = sigma_m(&theta, &f, m)?;
        for k in -(2 * m as i64)..=(2 * m as i64) {
            let want = if k.unsigned_abs() * 2 <= m {
                f.coeff(&[k])
            } else if k.unsigned_abs() >= m {
                num_complex::Complex64::new(0.0, 0.0)
            } else {
                continue;
            };
            ok &= s.coeff(&[k]) == want;
        }
    }
    Ok((ok, "sigma_m(theta; f) equals f on |k| <= m/2 and vanishes on |k| >= m, m = 8, 16, 32".into()))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut ok = true;
    let mut sizes = Vec::new();
    for (name, body, multi) in [
        ("uni.toml", "lambda = \"korobov:r=2\"\np = \"inf\"\nm_list = [16, 32, 64]\n[g_spec]\nseed = 5\n", false),
        ("multi.toml", "lambda = \"korobov:r=2\"\nd = 2\np = 2\nm_list = [2, 3, 4]\n", true),
    ] {
        let path = dir.path().join(name);
        std::fs::write(&path, body)?;
        let run = || -> Result<Vec<u8>> {
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_shiftapprox"));
            cmd.arg("convergence").arg("--config").arg(&path);
            if multi {
                cmd.arg("--multivariate");
            }
            let out = cmd.output()?;
            if !out.status.success() {
                return Err(shiftapprox::Error::Numeric(String::from_utf8_lossy(&out.stderr).into_owned()));
            }
            Ok(out.stdout)
        };
        let first = run()?;
        let second = run()?;
        ok &= first == second && first.starts_with(b"m,n,error,reference,ratio\n");
        sizes.push(first.len());
    }
    Ok((ok, format!("two convergence runs per config give identical CSV ({sizes:?} bytes)")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("in-band exactness", in_band_exactness),
        ("constant-g alias value", constant_alias_value),
        ("univariate rate, Korobov", || univariate_rates("korobov:r=2", "korobov:r=2")),
        ("univariate rate, exponent beta", || univariate_rates("mask:r=2,kappa=0", "exponent:s=1")),
        ("J_m closed form", jm_closed_form),
        ("telescoping", telescoping),
        ("Smolyak cardinalities", cardinalities),
        ("multivariate rate", multivariate_rate),
        ("sigma_m identity", sigma_identity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} [{}] {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
