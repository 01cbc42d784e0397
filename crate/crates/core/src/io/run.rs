use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Command, Resolved};
use super::table::{Table, Tabular};
use super::IoError;
use crate::compare::{compare_collapse, CompareError};
use crate::floquet::{solve_floquet, FloquetError, FloquetParams, FloquetSolution, Mode};
use crate::oracle::{evolve, fragment_analysis, FockConfig, OracleError};
use crate::resonances::{find_resonance_with, resonance_curves, ResonanceError, ResonanceResult};
use crate::semiclassics::{collapse_time, polarization_trace, splitting, SemiclassicsError, WavePacket};

/// Upper bound on the number of output samples.
const MAX_SAMPLES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
    #[error(transparent)]
    Semiclassics(#[from] SemiclassicsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Compare(#[from] CompareError),
}

impl RunError {
    pub fn name(&self) -> &'static str {
        match self {
            RunError::Io(e) => e.name(),
            RunError::Floquet(e) => e.name(),
            RunError::Resonance(e) => e.name(),
            RunError::Semiclassics(e) => e.name(),
            RunError::Oracle(e) => e.name(),
            RunError::Compare(e) => e.name(),
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            RunError::Io(e) => e.is_validation(),
            RunError::Floquet(e) => e.is_validation(),
            RunError::Resonance(e) => e.is_validation(),
            RunError::Semiclassics(e) => e.is_validation(),
            RunError::Oracle(e) => e.is_validation(),
            RunError::Compare(e) => e.is_validation(),
        }
    }

    /// 1 for rejected input, 2 for failures during computation or output.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            1
        } else {
            2
        }
    }
}

/// Scalar summary of a Floquet solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetReport {
    pub params: FloquetParams,
    pub rabi_frequency: f64,
    pub zero_mode_frequency: f64,
    pub r0_condition: f64,
    pub convergence_gap: Option<f64>,
    pub max_real_part: f64,
}

impl From<&FloquetSolution> for FloquetReport {
    fn from(s: &FloquetSolution) -> Self {
        FloquetReport {
            params: s.params,
            rabi_frequency: s.rabi_frequency,
            zero_mode_frequency: s.zero_mode_frequency,
            r0_condition: s.r0_condition,
            convergence_gap: s.convergence_gap,
            max_real_part: s.max_real_part,
        }
    }
}

/// One entry `r̃_{k,n,a}` of the Fourier table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub k: i32,
    pub n: i64,
    /// Component 1, 2 or 3.
    pub a: usize,
    pub value: Complex64,
}

fn fourier_rows(sol: &FloquetSolution) -> Vec<FourierCoefficient> {
    let n_max = sol.n_max() as i64;
    Mode::ALL
        .into_iter()
        .flat_map(|mode| {
            (-n_max..=n_max).flat_map(move |n| {
                (0..3).map(move |a| FourierCoefficient {
                    k: mode.k(),
                    n,
                    a: a + 1,
                    value: sol.fourier_coefficient(mode, n, a),
                })
            })
        })
        .collect()
}

/// `0, dt, 2dt, …` up to `t_end`.
pub fn sample_times(t_end: f64, dt: f64) -> Result<Vec<f64>, IoError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(IoError::Config(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(IoError::Config(format!("t_end must be non-negative, got {t_end}")));
    }
    let steps = (t_end / dt + 1e-9).floor();
    if steps >= MAX_SAMPLES as f64 {
        return Err(IoError::Config(format!("t_end/dt = {steps} exceeds {MAX_SAMPLES} samples")));
    }
    Ok((0..=steps as usize).map(|i| i as f64 * dt).collect())
}

/// One output table and its file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: &'static str,
    pub table: Table,
}

fn artifact(name: &'static str, table: Table, run: &Resolved) -> Artifact {
    let mut table = table;
    let own = std::mem::take(&mut table.metadata);
    for (k, v) in run.parameters() {
        table.set_meta(&format!("param.{k}"), v);
    }
    table.metadata.extend(own);
    Artifact { name, table }
}

fn floquet_params(run: &Resolved) -> FloquetParams {
    FloquetParams::new(run.delta, run.mu).with_n_max(run.nmax)
}

fn fock_config(run: &Resolved) -> FockConfig {
    FockConfig::from_semiclassical(run.nbar, run.mu, run.delta, run.cutoff, run.dt, run.t_end)
}

/// Runs one command. The first artifact is the primary table.
pub fn execute(run: &Resolved) -> Result<Vec<Artifact>, RunError> {
    match run.command {
        Command::Floquet => {
            let sol = solve_floquet(&floquet_params(run))?;
            Ok(vec![
                artifact("floquet", FloquetReport::from(&sol).to_table(), run),
                artifact("fourier", fourier_rows(&sol).to_table(), run),
            ])
        }
        Command::Resonances => {
            let base = FloquetParams::new(0.0, run.mu).with_n_max(run.nmax);
            let results = run
                .kinds
                .par_iter()
                .map(|&k| find_resonance_with(k, &base, None))
                .collect::<Result<Vec<ResonanceResult>, _>>()?;
            Ok(vec![artifact("resonances", results.to_table(), run)])
        }
        Command::Curves => {
            if run.mu_grid.is_empty() {
                return Err(IoError::Config("mu_grid is empty".into()).into());
            }
            let points = resonance_curves(&run.kinds, &run.mu_grid);
            Ok(vec![artifact("curves", points.to_table(), run)])
        }
        Command::Dynamics => {
            let times = sample_times(run.t_end, run.dt)?;
            let sol = solve_floquet(&floquet_params(run))?;
            let packet = WavePacket::coherent(Complex64::new(1.0, 0.0), run.epsilon, run.polarization());
            let trace = polarization_trace(&sol, &packet, &times)?;
            let split = splitting(&sol, &packet)?;
            let mut table = trace.to_table();
            match collapse_time(&sol, &packet) {
                Ok(tc) => table.set_meta("collapse_time", format!("{tc:.16e}")),
                Err(SemiclassicsError::DegenerateCollapse { .. }) => table.set_meta("collapse_time", "inf"),
                Err(e) => return Err(e.into()),
            }
            Ok(vec![
                artifact("dynamics", table, run),
                artifact("splitting", split.to_table(), run),
            ])
        }
        Command::Oracle => {
            let config = fock_config(run);
            let p = run.polarization();
            let trace = evolve(&config, &p)?;
            let fragments = fragment_analysis(&config, &p, &run.fragment_times)?;
            Ok(vec![
                artifact("oracle", trace.to_table(), run),
                artifact("fragments", fragments.to_table(), run),
            ])
        }
        Command::Compare => {
            let cmp = compare_collapse(&fock_config(run), &run.polarization())?;
            Ok(vec![artifact("compare", cmp.to_table(), run)])
        }
    }
}

/// Writes `<name>.csv` and `<name>.json` for each artifact into `dir`.
pub fn write_artifacts(dir: &Path, run: &Resolved, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    let params = run.parameters();
    let mut written = Vec::new();
    for a in artifacts {
        let csv = dir.join(format!("{}.csv", a.name));
        let file = std::fs::File::create(&csv).map_err(|e| IoError::file(&csv, e))?;
        a.table
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| IoError::file(&csv, e))?;
        let json = dir.join(format!("{}.json", a.name));
        let mut sidecar = a.table.sidecar(&params);
        sidecar["csv"] = serde_json::json!(format!("{}.csv", a.name));
        let text = serde_json::to_string_pretty(&sidecar).expect("JSON values serialize");
        std::fs::write(&json, text + "\n").map_err(|e| IoError::file(&json, e))?;
        written.push(csv);
        written.push(json);
    }
    Ok(written)
}
