use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use antijam::experiment::{run_experiment, Figure};
use antijam::{Error, ExperimentConfig, Result, SchedulerKind};

/// Runs the figure sweeps and writes one pair of CSV files per figure.
#[derive(Debug, Parser)]
#[command(name = "antijam", version)]
struct Args {
    /// TOML config file. Missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Figure number 2..8, or `all`.
    #[arg(long, default_value = "all")]
    figure: String,

    /// oma, noma, mat, or `all` for the config's scheduler list.
    #[arg(long, default_value = "all")]
    scheduler: String,

    /// Drops per sweep point. Overrides the config.
    #[arg(long)]
    drops: Option<usize>,

    /// Base seed. Drop d uses seed + d.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads. Defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(args: Args) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = args.drops {
        config.num_drops = d;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    config.validate()?;

    let figures = match args.figure.as_str() {
        "all" => Figure::ALL.to_vec(),
        f => vec![f.parse()?],
    };
    let schedulers = match args.scheduler.as_str() {
        "all" => config.schedulers.clone(),
        s => vec![s.parse::<SchedulerKind>().map_err(Error::InvalidConfig)?],
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Error::InvalidConfig("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build()?;
    let written = pool.install(|| run_experiment(&config, &figures, &schedulers, &args.out))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
