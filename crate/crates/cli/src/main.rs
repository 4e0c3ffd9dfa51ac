use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weylbox_cli::commands::{self, CommandError, DomainArgs, Table, TorusArgs};
use weylbox_cli::config::{self, ExperimentConfig, Format};
use weylbox_cli::report::{emit_report, RunInfo};
use weylbox_cli::sweep::run_sweep;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "weylbox", version, about = "Magnetic Pauli/Dirac spectra and semiclassical sweeps")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for result files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Domain {
    #[arg(long, value_parser = triple::<f64>, default_value = "0,0,0")]
    lower: [f64; 3],
    #[arg(long, value_parser = triple::<f64>, default_value = "1,1,1")]
    upper: [f64; 3],
    #[arg(long, value_parser = triple::<usize>, default_value = "33,33,1")]
    points: [usize; 3],
}

impl Domain {
    fn args(&self) -> DomainArgs {
        DomainArgs {
            lower: self.lower,
            upper: self.upper,
            points: self.points,
        }
    }
}

/// Point of the configured ladder to use for single-shot commands.
#[derive(Args, Debug, Clone)]
struct At {
    /// Default: first entry of the hbar ladder.
    #[arg(long)]
    hbar: Option<f64>,
    /// Default: the mu rule evaluated at hbar.
    #[arg(long)]
    mu: Option<f64>,
}

fn triple<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let v: Vec<T> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad component '{t}'")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated values".to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weyl coefficient of a field and potential.
    Weyl {
        #[arg(long, default_value = "(0, 0, 1)")]
        b: String,
        #[arg(long, default_value = "-1", allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[command(flatten)]
        domain: Domain,
    },
    /// Phase-space constant beta_gamma.
    Beta {
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
    /// Effective field b_p at a point.
    EffectiveField {
        #[arg(long, default_value = "(0, 0, 1)")]
        b: String,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        dim: u8,
        /// Evaluation point (default: box center).
        #[arg(long, value_parser = triple::<f64>, allow_hyphen_values = true)]
        at: Option<[f64; 3]>,
        #[command(flatten)]
        domain: Domain,
    },
    /// Trace or counting bound built from the effective field.
    ShenBound {
        #[arg(long, default_value = "(0, 0, 1)")]
        b: String,
        #[arg(long, default_value = "-1", allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        /// `trace` or `count`.
        #[arg(long, default_value = "trace")]
        kind: String,
        #[command(flatten)]
        domain: Domain,
    },
    /// Assemble the configured operator; writes `operator.mtx` with --out.
    Assemble {
        #[command(flatten)]
        at: At,
    },
    /// Eigenvalues below tau of the configured operator.
    Count {
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        /// Instead of the config, check a random Hermitian matrix of this size.
        #[arg(long)]
        random: Option<usize>,
        #[command(flatten)]
        at: At,
    },
    /// Riesz mean M_gamma of the configured operator.
    Riesz {
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[command(flatten)]
        at: At,
    },
    /// Dirac eigenvalues in the gap for +V and -V.
    DiracGap {
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        at: At,
    },
    /// Zero modes of the Pauli operator on a torus.
    Torus {
        #[arg(long, allow_hyphen_values = true)]
        flux: i64,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        #[arg(long, default_value_t = 24)]
        points: usize,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        modulation: f64,
        #[arg(long, default_value_t = 0.1)]
        window: f64,
    },
    /// Bound states of the 1D square well.
    SquareWell {
        #[arg(long)]
        depth: f64,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
    },
    /// Dirichlet/IMS bracketing of the configured operator.
    Bracket {
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[command(flatten)]
        at: At,
    },
    /// Run the configured sweep and write the report.
    Sweep,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CommandError> {
    let path = path.ok_or_else(|| {
        CommandError::Config(config::ConfigError::Validation {
            field: "--config".into(),
            message: "this command needs a config file".into(),
        })
    })?;
    let text = fs::read_to_string(path).map_err(|e| {
        CommandError::Config(config::ConfigError::Validation {
            field: "--config".into(),
            message: format!("{}: {e}", path.display()),
        })
    })?;
    Ok(config::parse_config(&text)?)
}

fn emit(table: &Table, name: &str, cli: &Cli) -> Result<(), CommandError> {
    let (text, ext) = match cli.format {
        Some(OutFormat::Json) => (table.to_json(), "json"),
        _ => (table.to_csv(), "csv"),
    };
    print!("{text}");
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.{ext}")), text)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CommandError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CommandError::Numerical(e.to_string()))?;
    }
    let cfg = || load_config(cli.config.as_deref());
    match &cli.command {
        Command::Weyl {
            b,
            w,
            gamma,
            lambda,
            mu,
            hbar,
            domain,
        } => emit(&commands::weyl(b, w, *gamma, *lambda, *mu, *hbar, &domain.args())?, "weyl", cli),
        Command::Beta { gamma } => emit(&commands::beta(*gamma)?, "beta", cli),
        Command::EffectiveField { b, p, dim, at, domain } => {
            emit(&commands::effective_field(b, *p, *dim, *at, &domain.args())?, "effective-field", cli)
        }
        Command::ShenBound {
            b,
            w,
            mu,
            hbar,
            lambda,
            p,
            kind,
            domain,
        } => emit(
            &commands::shen(b, w, *mu, *hbar, *lambda, *p, kind, &domain.args())?,
            "shen-bound",
            cli,
        ),
        Command::Assemble { at } => {
            let c = cfg()?;
            let spec = commands::config_operator(&c, at.hbar, at.mu)?;
            let (t, h) = commands::assemble_info(&spec)?;
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                h.write_coordinate(std::io::BufWriter::new(fs::File::create(dir.join("operator.mtx"))?))?;
            }
            emit(&t, "assemble", cli)
        }
        Command::Count { tau, random, at } => {
            let t = match random {
                Some(n) => commands::count_random(*n, *tau, cli.seed)?,
                None => {
                    let c = cfg()?;
                    let spec = commands::config_operator(&c, at.hbar, at.mu)?;
                    commands::count(&c, &spec, *tau)?
                }
            };
            emit(&t, "count", cli)
        }
        Command::Riesz { gamma, lambda, at } => {
            let c = cfg()?;
            let spec = commands::config_operator(&c, at.hbar, at.mu)?;
            emit(&commands::riesz(&c, &spec, *gamma, *lambda)?, "riesz", cli)
        }
        Command::DiracGap { lambda, at } => {
            let c = cfg()?;
            let spec = commands::config_operator(&c, at.hbar, at.mu)?;
            emit(&commands::dirac_gap(&c, &spec, *lambda)?, "dirac-gap", cli)
        }
        Command::Torus {
            flux,
            period,
            points,
            hbar,
            mu,
            modulation,
            window,
        } => {
            let a = TorusArgs {
                flux: *flux,
                period: *period,
                points: *points,
                hbar: *hbar,
                mu: *mu,
                modulation: *modulation,
                window: *window,
            };
            emit(&commands::torus(&a)?, "torus", cli)
        }
        Command::SquareWell {
            depth,
            half_width,
            hbar,
        } => emit(&commands::square_well(*depth, *half_width, *hbar)?, "square-well", cli),
        Command::Bracket { lambda, at } => {
            let c = cfg()?;
            let spec = commands::config_operator(&c, at.hbar, at.mu)?;
            emit(&commands::bracket(&c, &spec, lambda.unwrap_or(c.lambda[0]))?, "bracket", cli)
        }
        Command::Sweep => sweep(cli),
    }
}

fn sweep(cli: &Cli) -> Result<(), CommandError> {
    let c = load_config(cli.config.as_deref())?;
    let rows = run_sweep(&c).map_err(|e| {
        CommandError::Config(config::ConfigError::Validation {
            field: "operator".into(),
            message: e.to_string(),
        })
    })?;
    let format = match cli.format {
        Some(OutFormat::Csv) => Format::Csv,
        Some(OutFormat::Json) => Format::Json,
        None => c.output.format,
    };
    let dir = cli.out.clone().unwrap_or_else(|| c.output.dir.clone());
    let info = RunInfo {
        threads: Some(rayon::current_num_threads()),
        seed: Some(cli.seed),
    };
    let written = emit_report(&rows, format, &dir, &c.output.stem, &c.echo(), &info).map_err(|e| match e {
        weylbox_cli::ReportError::Io(io) => CommandError::Io(io),
        other => CommandError::Numerical(other.to_string()),
    })?;
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    let failed: Vec<_> = rows.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        eprintln!(
            "point hbar={} mu={} gamma={} lambda={} failed: {}",
            r.hbar,
            r.mu,
            r.gamma,
            r.lambda,
            r.error.as_deref().unwrap_or("")
        );
    }
    if failed.len() == rows.len() {
        return Err(CommandError::Numerical("every sweep point failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CommandError::Config(_) => EXIT_CONFIG,
                CommandError::Numerical(_) => EXIT_NUMERICAL,
                CommandError::Io(_) => EXIT_IO,
            })
        }
    }
}
