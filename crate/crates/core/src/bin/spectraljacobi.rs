use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use spectraljacobi::cli::{self, Format, RunConfig, Table, VerifyOptions, CONFIG_ENV};
use spectraljacobi::Complex64;

/// Jacobi operators, orthogonal polynomials and J-matrix models.
///
/// Exit codes: 0 success, 1 verification failure, 2 domain/data error, 3 accuracy failure.
#[derive(Parser, Debug)]
#[command(name = "spectraljacobi", version)]
struct Args {
    /// RunConfig JSON file.
    #[arg(long, env = CONFIG_ENV, global = true)]
    config: Option<PathBuf>,

    /// Output format (overrides the config).
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,

    /// Output file (overrides the config); stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for randomized checks (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gauss rule from a named recurrence family.
    #[command(allow_negative_numbers = true)]
    Quad {
        /// e.g. legendre, chebyshev_t, chebyshev_u, hermite, laguerre:0.5, jacobi:0.5,1.5
        #[arg(long)]
        family: String,
        #[arg(long)]
        order: usize,
        /// Total mass; defaults to the family's own.
        #[arg(long)]
        m0: Option<f64>,
    },
    /// Orthonormal and second-kind values, derivatives and zeros.
    #[command(allow_negative_numbers = true)]
    Ops {
        #[arg(long)]
        family: String,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        x: f64,
        /// Second point for the Christoffel–Darboux kernel.
        #[arg(long)]
        y: Option<f64>,
    },
    /// Discrete spectrum of the q⁻¹-Hermite operator and N-extremal orthogonality.
    #[command(allow_negative_numbers = true)]
    Qhermite {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
        /// Window half-width; defaults to the config value.
        #[arg(long)]
        window: Option<i64>,
    },
    /// Block quadrature (and optional Markov approximant) of a block recurrence JSON file.
    #[command(allow_negative_numbers = true)]
    Mvop {
        #[arg(long)]
        recurrence: PathBuf,
        #[arg(long)]
        order: usize,
        /// Point for the Markov approximant, e.g. `0.1+1i`.
        #[arg(long, value_parser = parse_complex)]
        z: Option<Complex64>,
    },
    /// Matrix Gegenbauer squared norms: closed form vs quadrature.
    #[command(allow_negative_numbers = true)]
    Gegenbauer {
        /// Twice the spin ℓ.
        #[arg(long)]
        two_ell: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 5)]
        nmax: usize,
    },
    /// Morse bound-state table.
    #[command(allow_negative_numbers = true)]
    Morse {
        #[arg(long)]
        b: f64,
    },
    /// Tridiagonality heatmap of the Jacobi operator T.
    #[command(name = "jacobiT")]
    #[command(allow_negative_numbers = true)]
    JacobiT {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        nmax: usize,
    },
    /// Five-term coefficients and connection coefficients.
    #[command(allow_negative_numbers = true)]
    Fiveterm {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// κ² (negative for imaginary κ).
        #[arg(long)]
        kappa2: f64,
        #[arg(long, default_value_t = 10)]
        nmax: usize,
    },
    /// 2×2 folding of the five-term operator with the U_n = P_n U_0 check.
    #[command(allow_negative_numbers = true)]
    Fold {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        kappa2: f64,
        #[arg(long, default_value_t = 15)]
        len: usize,
        #[arg(long, value_parser = parse_complex, default_value = "-7")]
        lambda: Complex64,
    },
    /// Run a verification suite (or `all`).
    #[command(allow_negative_numbers = true)]
    Verify {
        suite: String,
        /// Morse parameter for the morse/expansion/cdh suites.
        #[arg(long)]
        b: Option<f64>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format '{s}' (csv|json)")),
    }
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    Complex64::from_str(s).map_err(|e| format!("bad complex number '{s}': {e}"))
}

fn config(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(table: &Table, cfg: &RunConfig) -> Result<()> {
    let text = table.render(cfg.format)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(args: Args) -> Result<u8> {
    let cfg = config(&args)?;
    let table = match args.command {
        Command::Quad { family, order, m0 } => cli::cmd_quad(&family, order, m0)?,
        Command::Ops { family, degree, x, y } => cli::cmd_ops(&family, degree, x, y)?,
        Command::Qhermite { q, alpha, nmax, window } => {
            cli::cmd_qhermite(q, alpha, nmax, window.unwrap_or(cfg.window))?
        }
        Command::Mvop { recurrence, order, z } => {
            let text = std::fs::read_to_string(&recurrence)
                .map_err(|e| spectraljacobi::Error::data(format!("{}: {e}", recurrence.display())))?;
            cli::cmd_mvop(&text, order, z)?
        }
        Command::Gegenbauer { two_ell, nu, nmax } => cli::cmd_gegenbauer(two_ell, nu, nmax, cfg.quad_order)?,
        Command::Morse { b } => cli::cmd_morse(b)?,
        Command::JacobiT {
            alpha,
            beta,
            delta,
            nmax,
        } => cli::cmd_jacobi_t(alpha, beta, delta, nmax)?,
        Command::Fiveterm {
            alpha,
            beta,
            kappa2,
            nmax,
        } => cli::cmd_fiveterm(alpha, beta, kappa2, nmax)?,
        Command::Fold {
            alpha,
            beta,
            kappa2,
            len,
            lambda,
        } => cli::cmd_fold(alpha, beta, kappa2, len, lambda)?,
        Command::Verify { suite, b } => {
            let report = cli::verify(&suite, &cfg, &VerifyOptions { b })?;
            emit(&report.table(), &cfg)?;
            if !report.passed() {
                eprintln!(
                    "verify {suite}: {} of {} checks failed",
                    report.checks.iter().filter(|c| !c.passed()).count(),
                    report.checks.len()
                );
                return Ok(1);
            }
            return Ok(0);
        }
    };
    emit(&table, &cfg)?;
    Ok(0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<spectraljacobi::Error>()
                .map(|e| e.exit_code())
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}
