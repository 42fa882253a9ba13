use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use femtherm::models::ModelKind;
use femtherm_cli::{cmd_fit, cmd_rc, cmd_run, cmd_synth, exit_code, Outcome, Overrides};

/// PV module thermal models: RC properties, coefficient fitting and
/// Filter-EWM-MBE evaluation.
#[derive(Debug, Parser)]
#[command(name = "femtherm", version)]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long, short, global = true, env = "FEMTHERM_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, env = "FEMTHERM_OUT", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// R-, C-values and time constants of a layer stack.
    Rc,
    /// Fit model coefficients and the thermal time constant.
    Fit {
        /// Comma-separated models, replacing the configured list.
        #[arg(long, env = "FEMTHERM_MODELS", value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        /// Time constant in seconds, replacing the estimate.
        #[arg(long, env = "FEMTHERM_TAU")]
        tau: Option<f64>,
    },
    /// Static, EWM and FEM predictions with KPI and energy reports.
    Run {
        #[arg(long, env = "FEMTHERM_MODELS", value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        #[arg(long, env = "FEMTHERM_TAU")]
        tau: Option<f64>,
        /// Also write per-row test predictions for plotting.
        #[arg(long, env = "FEMTHERM_EMIT_PLOT_DATA")]
        emit_plot_data: bool,
    },
    /// Generate a synthetic dataset with known coefficients.
    Synth {
        #[arg(long, env = "FEMTHERM_SEED")]
        seed: Option<u64>,
    },
}

fn execute(cli: Cli) -> anyhow::Result<Outcome> {
    let config = cli
        .config
        .ok_or_else(|| femtherm_cli::ConfigError("--config is required".into()))?;
    let out = cli.out.as_path();
    Ok(match cli.command {
        Command::Rc => cmd_rc(&config, out)?.outcome,
        Command::Fit { models, tau } => {
            let o = Overrides { models, tau_s: tau, ..Overrides::default() };
            cmd_fit(&config, out, &o)?.outcome
        }
        Command::Run { models, tau, emit_plot_data } => {
            let o = Overrides { models, tau_s: tau, emit_plot_data, ..Overrides::default() };
            cmd_run(&config, out, &o)?.outcome
        }
        Command::Synth { seed } => {
            let o = Overrides { seed, ..Overrides::default() };
            cmd_synth(&config, out, &o)?.outcome
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match execute(Cli::parse()) {
        Ok(outcome) => {
            // a closed stdout (e.g. piped into `head`) is not an error
            let mut stdout = io::stdout().lock();
            let _ = writeln!(stdout, "{}", outcome.summary);
            let _ = writeln!(stdout, "wrote {} files to {}", outcome.files.len(), outcome.out_dir.display());
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(u8::from(outcome.degraded()))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
