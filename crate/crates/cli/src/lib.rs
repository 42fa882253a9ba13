//! Command implementations behind the `femtherm` binary.
//!
//! Each command reads one TOML file, writes CSV tables plus a
//! `manifest.json` into an output directory and returns what it computed.

pub mod config;
pub mod fit;
pub mod rc;
pub mod report;
pub mod run;
pub mod synth;

pub use config::{ConfigError, Overrides};
pub use fit::cmd_fit;
pub use rc::cmd_rc;
pub use report::Outcome;
pub use run::cmd_run;
pub use synth::cmd_synth;

/// Process exit code for a failed command: 2 for bad input or configuration,
/// 1 for failures of the computation itself.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<femtherm::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}
