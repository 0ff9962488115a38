use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use shiftapprox::experiments::{gen_g, run_univariate, ExperimentConfig, GSpec};
use shiftapprox::spectral::{Norm, SpectralCoefficients};
use shiftapprox::symbols::{make_exponent, make_korobov, make_mask, make_theta, FSpec, Symbol};
use shiftapprox::univariate::{
    assemble_Q, centers, eval_approximant, eval_approximant_grid, spectral_oracle_Q, spectral_oracle_Q_grid, HLambdaFunction,
    TranslateApproximant,
};

fn seeded(degree: u64, seed: u64) -> SpectralCoefficients {
    let spec = GSpec { seed, ..GSpec::default() };
    gen_g(&spec, 1, degree, Norm::P(2.0)).unwrap()
}

fn from_parts(parts: &[(f64, f64)]) -> SpectralCoefficients {
    let half = parts
        .iter()
        .enumerate()
        .map(|(j, &(re, im))| (vec![j as i64], Complex64::new(re, if j == 0 { 0.0 } else { im })));
    SpectralCoefficients::from_half(1, half).unwrap()
}

/// With a short generator both routes are plain finite sums.
#[test]
fn direct_sum_matches_truncated_oracle() {
    let theta = make_theta();
    let lam = make_korobov(2.0).unwrap();
    for beta in [lam.clone(), make_exponent(0.05, FSpec::default()).unwrap()] {
        for m in [3u64, 8] {
            let func = HLambdaFunction::new(seeded(2 * m, 1), lam.clone()).unwrap();
            let full = assemble_Q(&func, &beta, &theta, m, 1e-10).unwrap();
            let n = 300;
            let a = TranslateApproximant::from_weights(beta.clone(), m, full.weights().to_vec(), n).unwrap();
            let blocks = n / (2 * m + 1) + 1;
            let oracle = spectral_oracle_Q(&func, &beta, &theta, m, blocks).unwrap().truncate(&[n as usize]);
            for i in 0..37 {
                let x = 2.0 * PI * i as f64 / 37.0 + 0.01;
                let direct = eval_approximant(&a, x);
                assert!((direct - oracle.evaluate(&[x])).abs() < 1e-12, "m={m} x={x}");
            }
            let grid = eval_approximant_grid(&a, 64).unwrap();
            let og = spectral_oracle_Q_grid(&func, &beta, &theta, m, Some(n), 64).unwrap();
            for (u, v) in grid.iter().zip(&og) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn approximant_text_round_trip() {
    let lam = make_korobov(2.0).unwrap();
    let func = HLambdaFunction::new(seeded(6, 0), lam.clone()).unwrap();
    let a = assemble_Q(&func, &lam, &make_theta(), 4, 1e-6).unwrap();
    let back = TranslateApproximant::from_text(&a.to_text()).unwrap();
    assert_eq!(back.weights(), a.weights());
    assert_eq!(back.truncation(), a.truncation());
    assert_eq!(centers(4)[1], 2.0 * PI / 9.0);
}

#[test]
fn error_stays_below_epsilon_reference() {
    let cfg: ExperimentConfig = "lambda = \"korobov:r=2\"\np = 1\nm_list = [8, 16, 32, 64]\n".parse().unwrap();
    let res = run_univariate(&cfg).unwrap();
    let ratios: Vec<f64> = res.table.iter().map(|r| r.ratio).collect();
    assert!(ratios.iter().all(|&r| r > 0.0 && r < 1.0), "{ratios:?}");
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 4.0, "{ratios:?}");
}

#[test]
fn log_corrected_rate_for_kappa_mask() {
    let cfg: ExperimentConfig = "lambda = \"mask:r=2,kappa=1\"\np = 2\nm_list = [16, 32, 64, 128, 256]\n[g_spec]\ndecay = 0.5\n"
        .parse()
        .unwrap();
    let res = run_univariate(&cfg).unwrap();
    assert!(res.log_log_correction_used);
    assert!((1.8..=2.2).contains(&res.fitted_rate), "{}", res.fitted_rate);
}

fn beta_choice(which: u8, s: f64) -> Symbol {
    match which {
        0 => make_korobov(2.0).unwrap(),
        1 => make_exponent(s, FSpec::default()).unwrap(),
        _ => make_mask(2.5, 0.5, FSpec::Reciprocal { a: 1.0 }).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn q_is_linear(
        a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12),
        b in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12),
        s in -2.0f64..2.0, t in -2.0f64..2.0, m in 1u64..20, which in 0u8..3,
    ) {
        let lam = make_korobov(2.0).unwrap();
        let beta = beta_choice(which, 1.0);
        let theta = make_theta();
        let (ga, gb) = (from_parts(&a), from_parts(&b));
        let q = |g: &SpectralCoefficients| {
            spectral_oracle_Q(&HLambdaFunction::new(g.clone(), lam.clone()).unwrap(), &beta, &theta, m, 2).unwrap()
        };
        let lhs = q(&ga.lin_comb(s, &gb, t).unwrap());
        let rhs = q(&ga).lin_comb(s, &q(&gb), t).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn q_commutes_with_node_shifts(
        a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..16),
        m in 1u64..20, shift in 0u64..41, which in 0u8..3,
    ) {
        let lam = make_korobov(2.0).unwrap();
        let beta = beta_choice(which, 0.7);
        let theta = make_theta();
        let g = from_parts(&a);
        let big = 2 * m + 1;
        let x = 2.0 * PI * (shift % big) as f64 / big as f64;
        let rot = |k: i64| Complex64::from_polar(1.0, -(k as f64) * x);
        let shifted = SpectralCoefficients::from_map(1, g.iter().map(|(j, c)| (j.clone(), c * rot(j[0]))).collect()).unwrap();
        let q = |g: &SpectralCoefficients| {
            spectral_oracle_Q(&HLambdaFunction::new(g.clone(), lam.clone()).unwrap(), &beta, &theta, m, 2).unwrap()
        };
        let base = q(&g);
        let moved = q(&shifted);
        for (k, c) in base.iter() {
            prop_assert!((moved.coeff(k) - c * rot(k[0])).norm() < 1e-12);
        }
        prop_assert_eq!(moved.len(), base.len());
    }

    #[test]
    fn band_limited_input_is_reproduced(
        a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        extra in 0u64..30, which in 0u8..3, s in 0.3f64..3.0,
    ) {
        let deg = a.len() as u64 - 1;
        let m = (2 * deg).max(1) + extra;
        let lam = make_korobov(2.0).unwrap();
        let beta = beta_choice(which, s);
        let func = HLambdaFunction::new(from_parts(&a), lam).unwrap();
        let q = spectral_oracle_Q(&func, &beta, &make_theta(), m, 1).unwrap();
        for k in -(m as i64 / 2)..=(m as i64 / 2) {
            let f = func.f().coeff(&[k]);
            prop_assert!((q.coeff(&[k]) - f).norm() <= 1e-12 * f.norm().max(1.0));
        }
    }
}

#[test]
fn spectrum_agrees_between_weights_and_oracle() {
    let lam = make_korobov(3.0).unwrap();
    let theta = make_theta();
    let func = HLambdaFunction::new(seeded(10, 4), lam.clone()).unwrap();
    let a = assemble_Q(&func, &lam, &theta, 6, 1e-8).unwrap();
    let oracle = spectral_oracle_Q(&func, &lam, &theta, 6, 8).unwrap();
    for (k, c) in oracle.iter() {
        assert_relative_eq!(a.coefficient(k[0]).re, c.re, epsilon = 1e-14);
        assert_relative_eq!(a.coefficient(k[0]).im, c.im, epsilon = 1e-14);
    }
}
