use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fujita_cli::config::load_config;
use fujita_cli::error::{CliError, Result};
use fujita_cli::plot::{render_csv, PlotOptions};
use fujita_cli::run::{run, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "fujita", version, about = "Semilinear heat equations on weighted graphs")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// RNG seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Dotted-path override, e.g. `simulate.alpha=3`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    cmd: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Render a trajectory or sweep CSV as SVG.
    Plot {
        csv: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        y_max: Option<f64>,
    },
}

fn execute(cli: Cli) -> Result<String> {
    if let Some(Sub::Plot { csv, out, title, y_max }) = cli.cmd {
        let text = std::fs::read_to_string(&csv).map_err(|e| CliError::io(&csv, e))?;
        let svg = render_csv(&text, &PlotOptions { title, y_max })?;
        let out = out.unwrap_or_else(|| csv.with_extension("svg"));
        write_atomic(&out, svg.as_bytes())?;
        return Ok(format!("wrote {}", out.display()));
    }
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("either --config FILE or the `plot` subcommand is required".into()))?;
    let mut cfg = load_config(&path, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok(run(&cfg, &out)?.summary)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
