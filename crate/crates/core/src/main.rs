use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shiftapprox::experiments::{gen_g, run_multivariate, run_univariate, ExperimentConfig, Format};
use shiftapprox::multivariate::{smolyak_grid, translate_representation};
use shiftapprox::symbols::{make_theta, Symbol};
use shiftapprox::univariate::{assemble_Q, build_Hm, HLambdaFunction};
use shiftapprox::{Error, Result};

#[derive(Parser)]
#[command(name = "shiftapprox", version, about = "Approximation by translates of one generator on the torus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the coefficients of the kernel H_m.
    Kernel {
        #[arg(long)]
        lambda: String,
        /// Defaults to lambda.
        #[arg(long)]
        beta: Option<String>,
        #[arg(short)]
        m: u64,
    },
    /// Build one approximant from a config and print its translates.
    Approx {
        #[arg(long)]
        config: PathBuf,
        /// m for d = 1, level for d ≥ 2; defaults to the first entry of m_list.
        #[arg(short)]
        m: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the sparse grid G^d(m) with both cardinalities.
    Grid {
        #[arg(short)]
        d: usize,
        #[arg(short)]
        m: u32,
    },
    /// Run an error sweep over m_list and fit the rate.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        multivariate: bool,
        #[arg(long, default_value_t = Format::Csv)]
        format: Format,
        /// Overrides the config's output path; stdout when neither is set.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn write_out(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_symbol(s: &str) -> Result<Symbol> {
    s.parse().map_err(|e: Error| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Kernel { lambda, beta, m } => {
            let lambda = parse_symbol(&lambda)?;
            let beta = match beta {
                Some(b) => parse_symbol(&b)?,
                None => lambda.clone(),
            };
            write_out(&build_Hm(&lambda, &beta, &make_theta(), m)?.to_text(), None)
        }
        Cmd::Approx { config, m, output } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let m = m.unwrap_or(cfg.m_list[0]);
            let lambda = cfg.lambda()?;
            let g = gen_g(&cfg.g_spec, cfg.d, cfg.max_degree(), cfg.norm())?;
            let theta = make_theta();
            let text = if cfg.d == 1 {
                let func = HLambdaFunction::new(g, lambda)?;
                assemble_Q(&func, &cfg.beta()?, &theta, m, cfg.tolerances.tail_tol)?.to_text()
            } else {
                if cfg.beta()?.to_string() != lambda.to_string() {
                    return Err(Error::Config("multivariate runs use beta = lambda".into()));
                }
                let level = u32::try_from(m).map_err(|_| Error::Config(format!("level {m} too large")))?;
                let rep = translate_representation(&g, &theta, level)?;
                smolyak_grid(cfg.d, level)?.to_text(Some(&rep))
            };
            write_out(&text, output.as_deref())
        }
        Cmd::Grid { d, m } => write_out(&smolyak_grid(d, m)?.to_text(None), None),
        Cmd::Convergence { config, multivariate, format, output } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let result = if multivariate { run_multivariate(&cfg)? } else { run_univariate(&cfg)? };
            eprintln!("fitted_rate={} residual={}", result.fitted_rate, result.residual);
            write_out(&result.render(format)?, output.as_deref().or(cfg.output.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
