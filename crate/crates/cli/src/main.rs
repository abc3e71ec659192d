use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavecoh::coherence::CoherenceKind;
use wavecoh_cli::config::{Overrides, PeriodAxis};
use wavecoh_cli::{run, simulate, CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "wavecoh",
    version,
    about = "Wavelet coherence of daily time series"
)]
struct Cli {
    /// Worker threads for the transforms and surrogates (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the aligned, transformed analysis series as CSV.
    Preprocess {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wavelet coherence of the driver and outcome.
    Wtc(RunArgs),
    /// Partial wavelet coherence given the conditioner.
    Pwc(RunArgs),
    /// Generate synthetic series from a simulation spec.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Redraw the heatmap of a finished run.
    Render {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        period_axis: Option<Axis>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    surrogates: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    max_period: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    ShortTop,
    ShortBottom,
}

fn absolute(p: &Path) -> PathBuf {
    std::env::current_dir()
        .map(|d| d.join(p))
        .unwrap_or_else(|_| p.to_path_buf())
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            surrogates: self.surrogates,
            level: self.level,
            max_period: self.max_period,
            out: self.out.as_deref().map(absolute),
        }
    }
}

fn analyse(args: &RunArgs, kind: CoherenceKind) -> CliResult<()> {
    let outcome = run::run_file(&args.config, &args.overrides(), kind)?;
    println!(
        "{kind}: {} observations, {} scales, {} significant cells -> {}",
        outcome.meta.n_obs,
        outcome.meta.grid.num_scales,
        outcome.meta.significant_area,
        outcome.dir.display()
    );
    if let Some(c) = &outcome.meta.comparison {
        if let Some(r) = c.area_ratio {
            println!("pwc/wtc significant area ratio: {r:.3}");
        }
    }
    Ok(())
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Preprocess { config, out } => {
            let overrides = Overrides {
                out: out.as_deref().map(absolute),
                ..Overrides::default()
            };
            for p in run::preprocess_file(&config, &overrides, false)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Wtc(args) => analyse(&args, CoherenceKind::Wtc),
        Command::Pwc(args) => analyse(&args, CoherenceKind::Pwc),
        Command::Simulate { spec, out } => {
            for p in simulate::simulate(&simulate::load_spec(&spec)?, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Render {
            dir,
            out,
            period_axis,
        } => {
            let axis = period_axis.map(|a| match a {
                Axis::ShortTop => PeriodAxis::ShortTop,
                Axis::ShortBottom => PeriodAxis::ShortBottom,
            });
            println!("{}", run::render_dir(&dir, out.as_deref(), axis)?.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
