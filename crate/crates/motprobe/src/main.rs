//! `motprobe` — simulate a nanofiber-probed magneto-optical trap and
//! recover its characteristics from the synthetic detector signals.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use motprobe::configfile;
use motprobe::errors::RunResult;
use motprobe::report;
use motprobe::runner::{self, FitModelArg, RunContext};

#[derive(Parser)]
#[command(
    name = "motprobe",
    version,
    about = "Digital twin of a nanofiber-probed magneto-optical trap"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; omitted keys fall back to the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Disable Poisson noise on the photon-counting channel.
    #[arg(long = "no-noise", global = true)]
    no_noise: bool,

    /// Output directory (default: $MOTPROBE_OUT, then the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write plot-ready two-column .dat files.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Switching-sequence run: dark, +repump, +cooling, +field, then reverse.
    Steps,
    /// Translate the cloud across the fiber and record the count rate.
    Scan {
        /// Report positions as times at this scan speed (mm/s).
        #[arg(long = "scan-speed")]
        scan_speed: Option<f64>,
    },
    /// Load the trap from background vapor.
    Loading,
    /// Let the trap decay after the dispenser switches off.
    Decay,
    /// Fit a model to a CSV series emitted by another command.
    Fit {
        /// Input CSV (two-line header, then x,value rows).
        #[arg(long)]
        input: PathBuf,
        /// Model family to fit.
        #[arg(long, value_enum)]
        model: FitModelArg,
        /// Pin the additive offset instead of fitting it.
        #[arg(long = "fixed-offset")]
        fixed_offset: Option<f64>,
        /// Weight samples by the Poisson variance proxy 1/max(y·gate, 1).
        #[arg(long = "poisson-weights")]
        poisson_weights: bool,
        /// Gate time for the Poisson weights (default: configured SPCM gate).
        #[arg(long)]
        gate: Option<f64>,
    },
    /// Loading + decay on both channels with fitted time constants.
    Compare,
    /// Run the full reproduction suite and report pass/fail per target.
    PaperReport,
}

fn build_context(cli: &Cli) -> RunResult<RunContext> {
    let file_cfg = configfile::load_config(cli.config.as_deref())?;
    let cfg = file_cfg.to_experiment()?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("MOTPROBE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(RunContext {
        cfg,
        seed,
        noise: !cli.no_noise,
        out_dir,
        plot: cli.plot,
    })
}

fn run(cli: Cli) -> RunResult<()> {
    let ctx = build_context(&cli)?;
    match cli.command {
        Command::Steps => runner::steps(&ctx),
        Command::Scan { scan_speed } => runner::scan(&ctx, scan_speed),
        Command::Loading => runner::loading(&ctx),
        Command::Decay => runner::decay(&ctx),
        Command::Fit {
            ref input,
            model,
            fixed_offset,
            poisson_weights,
            gate,
        } => runner::fit(&ctx, input, model, fixed_offset, poisson_weights, gate),
        Command::Compare => runner::compare(&ctx),
        Command::PaperReport => report::paper_report(&ctx),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.exit_code());
    }
}
