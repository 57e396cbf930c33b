use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlev::cli;
use qlev::config::RunConfig;

#[derive(Parser)]
#[command(name = "qlev", about = "Level-curve topology of quasiperiodic functions on the plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: current directory).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    svg: bool,
    /// Override the config's jitter seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Trace and classify level-set components on one plane.
    Trace(Common),
    /// Sweep a direction grid and write CSV + zone maps.
    Scan(Common),
    /// Find critical points of the restricted function.
    Crit(Common),
    /// Re-render previously written JSON results to SVG.
    Render(Common),
}

fn load(common: &Common) -> qlev::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let code = match &args.command {
        Command::Trace(c) => cli::run(|| cli::command_trace(&load(c)?, &c.out, c.svg)),
        Command::Scan(c) => cli::run(|| cli::command_scan(&load(c)?, &c.out, c.svg)),
        Command::Crit(c) => cli::run(|| cli::command_crit(&load(c)?, &c.out)),
        Command::Render(c) => cli::run(|| cli::command_render(&load(c)?, &c.out)),
    };
    ExitCode::from(code as u8)
}
