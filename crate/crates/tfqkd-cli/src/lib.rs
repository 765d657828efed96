//! Command-line companion for the TF-QKD simulation core: TOML run
//! configurations, CSV session summaries and ledgers, key-rate replay chains
//! and the subcommand implementations.

pub mod cal;
pub mod commands;
pub mod config;
pub mod counts;
pub mod ledger;
pub mod replay;

/// Failure class deciding the process exit code: usage and configuration
/// problems exit 2, runtime failures (infeasible estimates, no positive key,
/// write errors) exit 3.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        let (tag, err) = match self {
            Failure::Usage(e) => ("configuration error", e),
            Failure::Runtime(e) => ("runtime error", e),
        };
        format!("{tag}: {err:#}")
    }
}

pub type CmdResult = Result<(), Failure>;

/// Extension hooks classifying anyhow results.
pub trait FailureExt<T> {
    fn or_usage(self) -> Result<T, Failure>;
    fn or_runtime(self) -> Result<T, Failure>;
}

impl<T> FailureExt<T> for anyhow::Result<T> {
    fn or_usage(self) -> Result<T, Failure> {
        self.map_err(Failure::Usage)
    }

    fn or_runtime(self) -> Result<T, Failure> {
        self.map_err(Failure::Runtime)
    }
}
