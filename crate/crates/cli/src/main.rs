//! `nmqsd` experiment runner.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

mod config;
mod experiments;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Plan, RunConfig};
use experiments::{Failure, Report};
use nmqsd::noise::{generate_noise, RNG_DESCRIPTION};
use nmqsd::{kernel_from_spectral_density, SpectralDensity, TimeGrid};

#[derive(Parser)]
#[command(name = "nmqsd", version, about = "Absorption spectra and energy transfer of exciton aggregates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run { config: PathBuf },
    /// Check a configuration file and print the resolved settings.
    Validate { config: PathBuf },
    /// Describe the random number streams; optionally print leading noise samples.
    SeedInfo {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trajectory: u64,
    },
}

const CONFIG_ERROR: u8 = 1;
const NUMERICAL_FAILURE: u8 = 2;

fn load(path: &Path) -> Result<Plan, ExitCode> {
    RunConfig::load(path).and_then(Plan::resolve).map_err(|e| {
        eprintln!("configuration error: {e}");
        ExitCode::from(CONFIG_ERROR)
    })
}

fn manifest(plan: &Plan, report: &Report, wall: f64) -> String {
    let mut m = String::new();
    let c = &plan.config;
    let _ = writeln!(m, "# nmqsd run manifest");
    let _ = writeln!(m, "# version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "# experiment: {}", c.experiment);
    if let Some(seed) = c.ensemble.master_seed {
        let _ = writeln!(m, "# master_seed: {seed}");
    }
    let _ = writeln!(m, "# rng: {RNG_DESCRIPTION}");
    let _ = writeln!(m, "# calibration_factor: {}", plan.calibration_factor);
    let _ = writeln!(m, "# wall_time_s: {wall:.3}");
    let _ = writeln!(m, "# excluded_trajectories: {}", report.excluded);
    for (k, v) in &report.summary {
        let _ = writeln!(m, "# {k}: {v}");
    }
    for f in &report.failures {
        let _ = writeln!(m, "# failure: {f}");
    }
    let _ = writeln!(m, "# resolved configuration follows; this file can be passed to `nmqsd run`");
    m.push_str(&c.to_toml());
    m
}

fn run(path: &Path) -> ExitCode {
    let plan = match load(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let out = plan.config.output.clone();
    let start = Instant::now();
    let result = experiments::run(&plan, &out);
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok(report) => {
            if let Err(e) = std::fs::write(out.join("manifest.txt"), manifest(&plan, &report, wall)) {
                eprintln!("cannot write manifest: {e}");
                return ExitCode::from(CONFIG_ERROR);
            }
            for (k, v) in &report.summary {
                println!("{k}: {v}");
            }
            if report.failures.is_empty() {
                println!("results in {}", out.display());
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("numerical failure: {f}");
                }
                ExitCode::from(NUMERICAL_FAILURE)
            }
        }
        Err(Failure::Setup(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(NUMERICAL_FAILURE)
        }
    }
}

fn validate(path: &Path) -> ExitCode {
    match load(path) {
        Ok(plan) => {
            let sizes: Vec<String> = plan.aggregates.iter().map(|a| a.n_sites.to_string()).collect();
            println!("ok: {} with {} aggregate(s) [{}]", plan.config.experiment, sizes.len(), sizes.join(", "));
            println!("calibration factor: {}", plan.calibration_factor);
            print!("{}", plan.config.to_toml());
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}

fn seed_info(seed: Option<u64>, trajectory: u64) -> ExitCode {
    println!("{RNG_DESCRIPTION}");
    if let Some(seed) = seed {
        let kernel = kernel_from_spectral_density(&SpectralDensity::structured_default());
        let grid = TimeGrid::new(0.02, 2).expect("fixed grid");
        let noise = generate_noise(&kernel, 2, grid, seed, trajectory).expect("default bath is valid");
        println!("default bath, h = 0.02, master_seed = {seed}, trajectory = {trajectory}:");
        for site in 0..2 {
            for (k, z) in noise.site_samples(site).iter().enumerate() {
                println!("site {} t = {}: {} {}", site + 1, 0.01 * k as f64, z.re, z.im);
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config } => run(&config),
        Command::Validate { config } => validate(&config),
        Command::SeedInfo { seed, trajectory } => seed_info(seed, trajectory),
    }
}
