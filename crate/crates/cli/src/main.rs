use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frontlab::commands;
use frontlab::output::OutDir;
use frontlab::{load_config, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Spreading fronts of nonlocal free-boundary problems")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Semi-wave profile at a given speed.
    Semiwave {
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Spreading speed c0 for one value of mu.
    Speed {
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Spreading speed over a list of mu values.
    SpeedCurve {
        #[arg(long, value_delimiter = ',')]
        mus: Option<Vec<f64>>,
    },
    /// Free-boundary simulation.
    Simulate,
    /// Whole-line problem with level-set tracking.
    Cauchy,
    /// Named experiment with pass/fail checks.
    Experiment {
        /// linear-speed, accelerated, dichotomy, mu-limit or truncation; defaults to `experiment` in the configuration.
        name: Option<String>,
    },
    /// Tail class of the configured kernel.
    ClassifyKernel,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config(vec!["--threads must be positive".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(vec![format!("cannot start thread pool: {e}")]))?;
    }
    let root = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("frontlab-out"));
    let out = OutDir::create(root)?;
    log::info!("writing to {}", out.path().display());
    match cli.command {
        Command::Semiwave { c, sigma } => commands::semiwave(&cfg, c, sigma, &out),
        Command::Speed { mu } => commands::speed(&cfg, mu, &out),
        Command::SpeedCurve { mus } => commands::speed_curve(&cfg, mus.as_deref(), &out),
        Command::Simulate => commands::simulate_cmd(&cfg, &out),
        Command::Cauchy => commands::cauchy_cmd(&cfg, &out),
        Command::Experiment { name } => {
            let name = name
                .or_else(|| cfg.experiment.clone())
                .ok_or_else(|| CliError::Config(vec!["no experiment named on the command line or in the configuration".into()]))?;
            commands::experiment(&name, &cfg, &out)
        }
        Command::ClassifyKernel => commands::classify_kernel(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
