use clap::{Args, Parser, Subcommand};
use maxregkit::cli::{cmd_bench, cmd_run, cmd_sweep, CliOptions};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "maxregkit", version, about = "Maximal regularity operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file describing generator, signals, and experiments.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Master seed; overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress stdout output; the exit code still reports the outcome.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiments on one grid.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Repeat the experiments over a list of grid sizes and fit
    /// convergence orders.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Ascending powers of two, comma separated.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Time the direct quadrature against the transform evaluation.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Ascending powers of two, comma separated.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Generator dimensions to benchmark, comma separated.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
}

fn options(common: CommonArgs) -> CliOptions {
    CliOptions {
        config_path: common.config,
        out: common.out,
        format: common.format,
        seed: common.seed,
        quiet: common.quiet,
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { common } => cmd_run(&options(common)),
        Command::Sweep { common, n_list } => cmd_sweep(&options(common), n_list),
        Command::Bench {
            common,
            n_list,
            dims,
        } => cmd_bench(&options(common), n_list, dims),
    };
    std::process::exit(code);
}
