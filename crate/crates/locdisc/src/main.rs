use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locdisc::commands;
use locdisc::config::load_config;

/// Semi-supervised kernel feature learning with locally discriminative
/// graph Laplacians.
#[derive(Parser)]
#[command(name = "locdisc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic dataset as a CSV pair.
    Gen(CommonArgs),
    /// Fit the transform and write the model file.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump the supervised and clique Laplacians as CSV.
        #[arg(long)]
        dump_laplacians: bool,
    },
    /// Project samples through a fitted model into features.csv.
    Transform(CommonArgs),
    /// Run the repeated-split evaluation for every configured method.
    Eval(CommonArgs),
    /// Evaluate along the configured parameter axis and emit a curve CSV.
    Sweep(CommonArgs),
}

fn run(cli: Cli) -> locdisc::Result<()> {
    match cli.command {
        Command::Gen(common) => {
            let config = load_config(&common.config)?;
            let out = commands::resolve_out_dir(common.out, &config);
            commands::cmd_gen(&config, &out)
        }
        Command::Fit {
            common,
            dump_laplacians,
        } => {
            let config = load_config(&common.config)?;
            let out = commands::resolve_out_dir(common.out, &config);
            commands::cmd_fit(&config, &out, dump_laplacians)
        }
        Command::Transform(common) => {
            let config = load_config(&common.config)?;
            let out = commands::resolve_out_dir(common.out, &config);
            commands::cmd_transform(&config, &out)
        }
        Command::Eval(common) => {
            let config = load_config(&common.config)?;
            let out = commands::resolve_out_dir(common.out, &config);
            commands::cmd_eval(&config, &out)
        }
        Command::Sweep(common) => {
            let config = load_config(&common.config)?;
            let out = commands::resolve_out_dir(common.out, &config);
            commands::cmd_sweep(&config, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
