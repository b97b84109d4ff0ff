use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gle_memlab::report::{
    gnuplot_script, run_experiment, ConfigOverrides, Experiment, ExperimentConfig,
};
use gle_memlab::validate::{run_validation, ValidateOptions};
use gle_memlab::{Error, WeightingScheme};

const THREADS_VAR: &str = "GLE_MEMLAB_THREADS";

#[derive(Parser)]
#[command(
    name = "gle-memlab",
    version,
    about = "Memory kernels of coarse-grained harmonic chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Theta_00(0) against block size, with the theorem bound and a power-law fit
    BlocksizeStudy(Common),
    /// Theta_0J(0) against block offset J, with a log-linear rate fit
    SpatialDecay(Common),
    /// Theta_00(t), its envelope exponent and the stationary-phase prediction
    TimeDecay(Common),
    /// Run the invariant suites; exit 1 if any fails
    Validate(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, allow_hyphen_values = true)]
    kappa1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa2: Option<f64>,
    /// constant or linear
    #[arg(long)]
    scheme: Option<WeightingScheme>,
    /// Comma list or 2^a..2^b
    #[arg(long)]
    blocks: Option<String>,
    /// Atom count for the dense finite-chain comparison
    #[arg(long)]
    atoms: Option<usize>,
    /// Quadrature nodes (power of two)
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tmin: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    tsteps: Option<usize>,
    #[arg(long)]
    jmax: Option<usize>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Halve grid sizes
    #[arg(long)]
    fast: bool,
    /// key=value file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV
    #[arg(long)]
    gnuplot: bool,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

impl Common {
    fn overrides(&self) -> Result<ConfigOverrides, Error> {
        let file = match &self.config {
            Some(path) => ConfigOverrides::from_file(path)?,
            None => ConfigOverrides::default(),
        };
        let flags = ConfigOverrides {
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            scheme: self.scheme,
            blocks: self
                .blocks
                .as_deref()
                .map(gle_memlab::report::parse_blocks)
                .transpose()?,
            atoms: self.atoms,
            quad_nodes: self.quad_nodes,
            t_min: self.tmin,
            t_max: self.tmax,
            t_steps: self.tsteps,
            j_max: self.jmax,
            out: self.out.clone(),
            seed: self.seed,
            fast: self.fast.then_some(true),
        };
        Ok(file.layered(flags))
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_VAR} must be a positive integer, got '{raw}'"
        ))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Domain(_)
        | Error::Unstable { .. }
        | Error::TooFewSamples { .. } => 2,
        _ => 1,
    }
}

fn validate(common: &Common) -> Result<u8, Error> {
    let cfg = ExperimentConfig::resolve(Experiment::Validate, common.overrides()?)?;
    let results = run_validation(ValidateOptions {
        fast: cfg.fast,
        inject_fault: common.inject_fault,
        seed: cfg.seed,
    });
    let mut failed = 0;
    for r in &results {
        match &r.failure {
            None => println!("PASS {:<24} ({:.1} s)", r.name, r.seconds),
            Some(msg) => {
                failed += 1;
                println!("FAIL {:<24} ({:.1} s): {msg}", r.name, r.seconds);
            }
        }
    }
    println!(
        "{} of {} suites passed",
        results.len() - failed,
        results.len()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

fn experiment(kind: Experiment, common: &Common) -> Result<u8, Error> {
    let cfg = ExperimentConfig::resolve(kind, common.overrides()?)?;
    if common.gnuplot && cfg.out.is_none() {
        return Err(Error::Config("--gnuplot needs --out".into()));
    }
    log::info!("{} with {:?}", kind.name(), cfg);
    let report = run_experiment(&cfg)?;
    let csv = report.to_csv()?;
    match &cfg.out {
        Some(path) => {
            fs::write(path, &csv)?;
            if common.gnuplot {
                fs::write(path.with_extension("gp"), gnuplot_script(kind, path))?;
            }
            for r in report.rows.iter().filter(|r| {
                r.experiment.contains(':')
                    && !r.experiment.starts_with("time:sp-envelope")
                    && !r.experiment.ends_with("log10")
            }) {
                println!("{} [{}] = {:.6e}", r.experiment, r.coordinate, r.value);
            }
        }
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::BlocksizeStudy(c) => experiment(Experiment::BlocksizeStudy, c),
        Command::SpatialDecay(c) => experiment(Experiment::SpatialDecay, c),
        Command::TimeDecay(c) => experiment(Experiment::TimeDecay, c),
        Command::Validate(c) => validate(c),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
