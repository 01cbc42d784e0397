use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rabi_lab::io::{execute, write_artifacts, Command, RunConfig, RunError};
use rabi_lab::resonances::ResonanceKind;

/// Floquet resonances, semiclassical packet dynamics and exact Fock-space
/// evolution of a qubit in a strongly excited field mode.
#[derive(Parser)]
#[command(name = "rabi-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rabi frequency and Fourier table of the Floquet modes.
    Floquet(Flags),
    /// Resonant detuning of each kind at one drive strength.
    Resonances(Flags),
    /// Resonance curves over a grid of drive strengths.
    Curves(Flags),
    /// Semiclassical polarization trace and splitting report.
    Dynamics(Flags),
    /// Exact quantum trace and Husimi fragment analysis.
    Oracle(Flags),
    /// Semiclassical and exact series side by side.
    Compare(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nbar: Option<f64>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Comma-separated resonance kinds (BS,TC,FC,RC,EN,VS,WS).
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<ResonanceKind>>,
    /// Comma-separated drive strengths.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mu_grid: Option<Vec<f64>>,
    /// Initial Bloch vector as x,y,z.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_negative_numbers = true)]
    polarization: Option<Vec<f64>>,
    /// Comma-separated times for the Husimi fragment analysis.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    fragment_times: Option<Vec<f64>>,
    /// Output directory; the primary table goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat JSON configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn fail(name: &str, detail: impl std::fmt::Display, code: u8) -> ExitCode {
    let detail = detail.to_string().replace(['\n', '\r'], " ");
    eprintln!("error={name} detail={}", detail.trim());
    ExitCode::from(code)
}

fn run_error(e: RunError) -> ExitCode {
    fail(e.name(), &e, e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("InvalidArguments", first, 1);
        }
    };

    if let Ok(v) = std::env::var("RABI_LAB_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    return fail("InvalidConfig", e, 1);
                }
            }
            _ => return fail("InvalidConfig", format!("RABI_LAB_THREADS must be a positive integer, got {v:?}"), 1),
        }
    }

    let (command, flags) = match cli.command {
        Cmd::Floquet(f) => (Command::Floquet, f),
        Cmd::Resonances(f) => (Command::Resonances, f),
        Cmd::Curves(f) => (Command::Curves, f),
        Cmd::Dynamics(f) => (Command::Dynamics, f),
        Cmd::Oracle(f) => (Command::Oracle, f),
        Cmd::Compare(f) => (Command::Compare, f),
    };

    let file = match &flags.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => return run_error(e.into()),
        },
        None => RunConfig::default(),
    };
    if let Some(c) = file.command {
        if c != command {
            return fail("InvalidConfig", format!("config file is for `{c}`, not `{command}`"), 1);
        }
    }
    let polarization = match flags.polarization.as_deref() {
        None => None,
        Some(&[x, y, z]) => Some([x, y, z]),
        Some(v) => return fail("InvalidArguments", format!("--polarization needs 3 components, got {}", v.len()), 1),
    };
    let overrides = RunConfig {
        command: Some(command),
        mu: flags.mu,
        delta: flags.delta,
        epsilon: flags.epsilon,
        nbar: flags.nbar,
        nmax: flags.nmax,
        cutoff: flags.cutoff,
        t_end: flags.t_end,
        dt: flags.dt,
        kinds: flags.kinds,
        mu_grid: flags.mu_grid,
        polarization,
        fragment_times: flags.fragment_times,
        out: flags.out,
    };
    let resolved = match file.overridden_by(overrides).resolve() {
        Ok(r) => r,
        Err(e) => return run_error(e.into()),
    };

    let artifacts = match execute(&resolved) {
        Ok(a) => a,
        Err(e) => return run_error(e),
    };
    match &resolved.out {
        Some(dir) => match write_artifacts(dir, &resolved, &artifacts) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
            }
            Err(e) => return run_error(e.into()),
        },
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if let Err(e) = artifacts[0].table.write_csv(&mut lock).and_then(|_| lock.flush()) {
                return fail("IoFailure", e, 2);
            }
        }
    }
    ExitCode::SUCCESS
}
