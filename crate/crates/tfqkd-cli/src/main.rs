//! `tfqkd`: simulate TF-QKD sessions, replay recorded ones, and evaluate
//! key rates, phase stabilisation and two-way post-processing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tfqkd_cli::commands::{self, StabiliseArgs};

#[derive(Parser)]
#[command(name = "tfqkd", version, about = "Twin-field QKD simulator and key-rate engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the secret key rate of a configuration, from a recorded
    /// session summary, a simulated ledger, or (for the phase-matching
    /// protocol) the channel model itself.
    Keyrate {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Recorded session summary (quantity,value CSV).
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Simulated counts ledger CSV.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Charge the even-both-off pair class at the odd-class error rate.
        #[arg(long)]
        literal_leak: bool,
        /// Also write the evaluated quantities as a CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a session and write its counts ledger.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Pulse pairs to simulate (default: session.n0 from the config).
        #[arg(long)]
        pairs: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output ledger CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the dual-band phase-stabilisation loops against a drift model.
    Stabilise {
        /// Free drift strength (rad per sqrt second).
        #[arg(long, default_value_t = 8000.0)]
        drift: f64,
        /// Deterministic drift component (rad per second).
        #[arg(long, default_value_t = 0.0)]
        linear: f64,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        fast_gain: f64,
        #[arg(long, default_value_t = 1.0)]
        slow_gain: f64,
        /// Reference photon rate at the monitor detector (cps); 0 = ideal.
        #[arg(long, default_value_t = 1.0e7)]
        photon_rate: f64,
        /// Fraction of the reference rate available as dim pulses.
        #[arg(long, default_value_t = 0.05)]
        dim_fraction: f64,
        /// Trailing fraction of each slow cycle averaged for the correction.
        #[arg(long, default_value_t = 0.2)]
        window: f64,
        /// Grid-search the loop gains before the final run.
        #[arg(long)]
        tune: bool,
    },
    /// Replay the random-pairing parity round on the keys a recorded session
    /// implies, optionally rendering key maps.
    Twcc {
        /// Recorded session summary (quantity,value CSV).
        #[arg(long)]
        counts: PathBuf,
        /// Divide the recorded counts by this factor first.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory for the portable-bitmap key maps.
        #[arg(long)]
        map_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        map_width: usize,
    },
    /// Parse, validate and echo a configuration.
    PrintConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Keyrate { config, counts, ledger, literal_leak, out } => commands::keyrate(
            config,
            counts.as_deref(),
            ledger.as_deref(),
            *literal_leak,
            out.as_deref(),
        ),
        Command::Simulate { config, pairs, seed, out } => {
            commands::simulate(config, *pairs, *seed, out)
        }
        Command::Stabilise {
            drift,
            linear,
            duration,
            seed,
            fast_gain,
            slow_gain,
            photon_rate,
            dim_fraction,
            window,
            tune,
        } => commands::stabilise(&StabiliseArgs {
            drift_rad_per_sqrt_s: *drift,
            linear_rad_per_s: *linear,
            duration_s: *duration,
            seed: *seed,
            fast_gain: *fast_gain,
            slow_gain: *slow_gain,
            photon_rate_at_d2: *photon_rate,
            dim_reference_fraction: *dim_fraction,
            slow_window_fraction: *window,
            tune: *tune,
        }),
        Command::Twcc { counts, scale, seed, map_dir, map_width } => {
            commands::twcc(counts, *scale, *seed, map_dir.as_deref(), *map_width)
        }
        Command::PrintConfig { config } => commands::print_config(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
