//! `l1margin`: simulate the L1 adaptive loop, compute its margins and check
//! the analysis against simulation.
//!
//! Exit codes: 0 success (for `simulate`, a stable run), 2 a diverged or
//! inconclusive run or a failed `verify` check, 1 any error.

mod commands;
mod manifest;
mod scenario_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l1margin::linsys::DEFAULT_L1_REL_TOL;
use l1margin::simulate::Profile;

use commands::{default_out_dir, prepare, EXIT_ERROR};
use manifest::RunOptions;

#[derive(Debug, Parser)]
#[command(name = "l1margin", version, about = "Stability margins of the L1 adaptive controller")]
struct Cli {
    /// Default adaptation gain and step size: desk or full. Overrides the
    /// scenario file's `profile`; keys set explicitly in the file win.
    #[arg(long, global = true, env = "L1MARGIN_PROFILE", value_parser = parse_profile)]
    profile: Option<Profile>,

    #[command(subcommand)]
    command: Command,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: l1margin::Error| e.to_string())
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, or a manifest written by an earlier run to replay it.
    input: PathBuf,
    /// Output directory.
    #[arg(long, default_value_os_t = default_out_dir())]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the closed loop; exit 0 when stable, 2 otherwise.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output delay in seconds.
        #[arg(long)]
        tau: Option<f64>,
        /// Static loop-gain perturbation in front of the plant input.
        #[arg(long)]
        gain: Option<f64>,
        /// Adaptation gain.
        #[arg(long)]
        gamma_c: Option<f64>,
        /// Simulated time in seconds.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Phase, time-delay and gain margins of the equivalent LTI loop.
    Margins {
        #[command(flatten)]
        common: Common,
        /// Also sweep the uncertainty sets for the worst-case delay margin.
        #[arg(long)]
        sweep: bool,
        /// Samples per parameter axis in the sweep.
        #[arg(long)]
        density: Option<usize>,
    },
    /// Bode data of the open-loop transfer function.
    Bode {
        #[command(flatten)]
        common: Common,
        /// Parameter vector, comma separated (default: the true one).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        theta: Option<Vec<f64>>,
        /// Input gain (default: the true one).
        #[arg(long)]
        omega: Option<f64>,
        /// Lowest frequency in rad/s.
        #[arg(long)]
        wmin: Option<f64>,
        /// Highest frequency in rad/s.
        #[arg(long)]
        wmax: Option<f64>,
        /// Number of log-spaced frequencies.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Check the adaptive loop against its LTI equivalent and the transient
    /// bounds; exit 2 when any applicable check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Output delay in seconds.
        #[arg(long)]
        tau: Option<f64>,
        /// Adaptation gain.
        #[arg(long)]
        gamma_c: Option<f64>,
        /// Test hook: corrupt the recorded trace before checking.
        #[arg(long, hide = true)]
        corrupt_trace: bool,
    },
    /// L1 norm of a stable proper transfer function.
    L1gain {
        /// Numerator coefficients, highest power first, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        num: Vec<f64>,
        /// Denominator coefficients, highest power first, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        den: Vec<f64>,
        /// Relative tolerance of the impulse-response integration.
        #[arg(long, default_value_t = DEFAULT_L1_REL_TOL)]
        rel_tol: f64,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let profile = cli.profile;
    match cli.command {
        Command::Simulate {
            common,
            tau,
            gain,
            gamma_c,
            t_end,
        } => {
            let opts = RunOptions {
                tau_s: tau,
                gain,
                gamma_c,
                t_end_s: t_end,
                ..RunOptions::default()
            };
            commands::simulate(prepare(&common.input, "simulate", profile, opts)?, &common.out)
        }
        Command::Margins { common, sweep, density } => {
            let opts = RunOptions {
                sweep: sweep.then_some(true),
                sweep_density: density,
                ..RunOptions::default()
            };
            commands::margins(prepare(&common.input, "margins", profile, opts)?, &common.out)
        }
        Command::Bode {
            common,
            theta,
            omega,
            wmin,
            wmax,
            points,
        } => {
            let opts = RunOptions {
                theta,
                omega,
                wmin_rad_s: wmin,
                wmax_rad_s: wmax,
                points,
                ..RunOptions::default()
            };
            commands::bode_cmd(prepare(&common.input, "bode", profile, opts)?, &common.out)
        }
        Command::Verify {
            common,
            tau,
            gamma_c,
            corrupt_trace,
        } => {
            let opts = RunOptions {
                tau_s: tau,
                gamma_c,
                ..RunOptions::default()
            };
            commands::verify(prepare(&common.input, "verify", profile, opts)?, &common.out, corrupt_trace)
        }
        Command::L1gain { num, den, rel_tol } => commands::l1gain(&num, &den, rel_tol),
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1 like every other error; 2 is reserved for unstable runs.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
