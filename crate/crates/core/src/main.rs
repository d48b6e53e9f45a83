use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nanobeam::cli::{self, CliError, Outcome, Scenario};

#[derive(Parser)]
#[command(
    name = "nanobeam",
    version,
    about = "Diamond nanobeam cavity simulation and spectrum analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file. Without it the built-in defaults are used.
    #[arg(long, global = true, env = "NANOBEAM_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, env = "NANOBEAM_OUT")]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true, env = "NANOBEAM_THREADS")]
    threads: Option<usize>,
    /// Cells per lattice constant (overrides `grid.resolution`).
    #[arg(long, global = true, env = "NANOBEAM_RESOLUTION")]
    resolution: Option<f64>,
    /// Geometry preset: table1-base or fig7-highq.
    #[arg(long, global = true, env = "NANOBEAM_PRESET")]
    preset: Option<String>,
    /// Seed for synthetic-spectrum noise.
    #[arg(long, global = true, env = "NANOBEAM_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write the dielectric grid and an eps cross-section.
    Rasterize,
    /// Simulate each parity sector and extract resonant modes.
    Run,
    /// Band structure of the periodic (grooved and grooveless) unit cell.
    Bands,
    /// Re-extract modes from ring-down records already in the output directory.
    Analyze,
    /// Fit Lorentzians to a measured or synthetic spectrum.
    Fit,
    /// Pair fitted peaks with calculated modes.
    Compare,
    /// Run the cavity over a parameter axis.
    Sweep,
}

fn scenario(common: &Common) -> Result<Scenario, CliError> {
    let mut s = match &common.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    if let Some(dir) = &common.out {
        s.output.dir = dir.clone();
    }
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Config("`--threads` must be at least 1".into()));
        }
        s.run.threads = Some(t);
    }
    if let Some(r) = common.resolution {
        s.grid.resolution = r;
    }
    if let Some(p) = &common.preset {
        s.geometry.preset = Some(p.clone());
    }
    s.validate()?;
    std::fs::create_dir_all(&s.output.dir).map_err(|e| {
        CliError::Config(format!("output directory {}: {e}", s.output.dir.display()))
    })?;
    Ok(s)
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let s = scenario(&cli.common)?;
    match cli.command {
        Command::Rasterize => cli::rasterize_cmd(&s),
        Command::Run => cli::run(&s),
        Command::Bands => cli::bands(&s),
        Command::Analyze => cli::analyze(&s),
        Command::Fit => cli::fit(&s, cli.common.seed),
        Command::Compare => cli::compare(&s),
        Command::Sweep => cli::sweep(&s),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.flagged.is_empty() {
                ExitCode::SUCCESS
            } else {
                for reason in &outcome.flagged {
                    eprintln!("flagged: {reason}");
                }
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
