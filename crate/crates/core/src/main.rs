//! Command-line driver for the belief-approximation experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use membelief::report::cost_summary_lines;
use membelief::{Result, SweepConfig};

#[derive(Parser)]
#[command(
    name = "membelief",
    version,
    about = "Window-restart belief approximation experiments for linear-Gaussian control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep memory lengths: mismatch and cost per H, fits, CSVs, figures.
    Sweep(RunArgs),
    /// Compare IO-window beliefs against observation-only beliefs.
    Prop1(RunArgs),
    /// Write one rollout trajectory as CSV.
    RolloutDump {
        #[command(flatten)]
        args: RunArgs,
        /// Which seed of the sweep to dump (0-based).
        #[arg(long, default_value_t = 0)]
        seed_index: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Base preset: 'desk' (fast) or 'paper' (full scale).
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Config file with 'key = value' lines, applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports and figures.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single-key override, e.g. --set sweep.horizon=100 (repeatable,
    /// applied after the config file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Number of rollout seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Skip SVG figure generation.
    #[arg(long)]
    no_plots: bool,
    /// Worker threads for seed parallelism (0 = one per core).
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<SweepConfig> {
        let mut config = SweepConfig::preset(&self.preset)?;
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        for pair in &self.set {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                membelief::Error::Usage(format!("--set expects KEY=VALUE, got '{pair}'"))
            })?;
            config.apply_set(key.trim(), value.trim(), &format!("--set {pair}"))?;
        }
        if let Some(seeds) = self.seeds {
            config.seeds = seeds;
        }
        if self.no_plots {
            config.plots = false;
        }
        if let Some(jobs) = self.jobs {
            config.jobs = jobs;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let report = membelief::run_sweep(&config)?;
            println!("H,eps_mean,eps_stderr,J_true,J_fm,gap");
            for row in &report.rows {
                println!(
                    "{},{:.6e},{:.6e},{:.4},{:.4},{:.4e}",
                    row.memory, row.eps_mean, row.eps_stderr, row.j_true, row.j_fm, row.gap
                );
            }
            if let Some(fit) = &report.decay_fit {
                println!(
                    "decay fit: rate {:.4} per step, R^2 {:.4}",
                    fit.rho_hat, fit.r_squared
                );
            }
            if let Some(fit) = &report.gap_fit {
                println!(
                    "gap scaling fit: slope {:.3}, R^2 {:.4}",
                    fit.slope, fit.r_squared
                );
            }
            print!("{}", cost_summary_lines(&report.cost));
            println!(
                "wrote {} in {:.2}s",
                report.out_dir.display(),
                report.wall_clock.as_secs_f64()
            );
        }
        Command::Prop1(args) => {
            let config = args.resolve()?;
            let report = membelief::run_prop1_demo(&config)?;
            println!("H,io_mean,obs_only_mean,diff_mean,diff_stderr");
            for row in &report.rows {
                println!(
                    "{},{:.6e},{:.6e},{:.6e},{:.6e}",
                    row.memory, row.io_mean, row.obs_only_mean, row.diff_mean, row.diff_stderr
                );
            }
            println!(
                "wrote {} in {:.2}s",
                report.out_dir.display(),
                report.wall_clock.as_secs_f64()
            );
        }
        Command::RolloutDump { args, seed_index } => {
            let config = args.resolve()?;
            let path = membelief::run_rollout_dump(&config, seed_index)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
