use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::floquet::DEFAULT_N_MAX;
use crate::oracle::FockConfig;
use crate::resonances::ResonanceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Floquet,
    Resonances,
    Curves,
    Dynamics,
    Oracle,
    Compare,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Floquet,
        Command::Resonances,
        Command::Curves,
        Command::Dynamics,
        Command::Oracle,
        Command::Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Floquet => "floquet",
            Command::Resonances => "resonances",
            Command::Curves => "curves",
            Command::Dynamics => "dynamics",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| IoError::Config(format!("unknown command {s:?}")))
    }
}

/// Flat run parameters as read from a JSON file or command-line flags.
/// Every field is optional; [`RunConfig::resolve`] fills in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<ResonanceKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<f64>>,
    /// Initial Bloch vector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarization: Option<[f64; 3]>,
    /// Times of the Husimi fragment analysis (`oracle`); default `[t_end]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fragment_times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Cutoff used when none is given: `n̄ + 16√n̄`, comfortably above the minimum.
pub fn default_cutoff(n_bar: f64) -> usize {
    (n_bar + 16.0 * n_bar.sqrt()).ceil().max(FockConfig::min_cutoff(n_bar) as f64) as usize
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            IoError::Config(m) => IoError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Field-wise override: values set in `flags` win.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            command: flags.command.or(self.command),
            mu: flags.mu.or(self.mu),
            delta: flags.delta.or(self.delta),
            epsilon: flags.epsilon.or(self.epsilon),
            nbar: flags.nbar.or(self.nbar),
            nmax: flags.nmax.or(self.nmax),
            cutoff: flags.cutoff.or(self.cutoff),
            t_end: flags.t_end.or(self.t_end),
            dt: flags.dt.or(self.dt),
            kinds: flags.kinds.or(self.kinds),
            mu_grid: flags.mu_grid.or(self.mu_grid),
            polarization: flags.polarization.or(self.polarization),
            fragment_times: flags.fragment_times.or(self.fragment_times),
            out: flags.out.or(self.out),
        }
    }

    /// Fills defaults. Physical ranges are left to the owning modules; only
    /// contradictions between fields are rejected here.
    pub fn resolve(&self) -> Result<Resolved, IoError> {
        let command = self
            .command
            .ok_or_else(|| IoError::Config("no command given".into()))?;
        let (nbar, epsilon) = match (self.nbar, self.epsilon) {
            (Some(n), Some(e)) => {
                if (n * e - 1.0).abs() > 1e-12 {
                    return Err(IoError::Config(format!("epsilon = {e} contradicts nbar = {n}; epsilon must be 1/nbar")));
                }
                (n, e)
            }
            (Some(n), None) => (n, 1.0 / n),
            (None, Some(e)) => (1.0 / e, e),
            (None, None) => (100.0, 0.01),
        };
        let t_end = self.t_end.unwrap_or(900.0);
        Ok(Resolved {
            command,
            mu: self.mu.unwrap_or(0.1),
            delta: self.delta.unwrap_or(0.0),
            epsilon,
            nbar,
            nmax: self.nmax.unwrap_or(DEFAULT_N_MAX),
            cutoff: self.cutoff.unwrap_or_else(|| default_cutoff(nbar)),
            t_end,
            dt: self.dt.unwrap_or(0.5),
            kinds: self.kinds.clone().unwrap_or_else(|| ResonanceKind::ALL.to_vec()),
            mu_grid: self
                .mu_grid
                .clone()
                .unwrap_or_else(|| (1..=25).map(|i| 0.02 * i as f64).collect()),
            polarization: self.polarization.unwrap_or([0.0, 0.0, 1.0]),
            fragment_times: self.fragment_times.clone().unwrap_or_else(|| vec![t_end]),
            out: self.out.clone(),
        })
    }
}

/// A [`RunConfig`] with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub command: Command,
    pub mu: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub nbar: f64,
    pub nmax: usize,
    pub cutoff: usize,
    pub t_end: f64,
    pub dt: f64,
    pub kinds: Vec<ResonanceKind>,
    pub mu_grid: Vec<f64>,
    pub polarization: [f64; 3],
    pub fragment_times: Vec<f64>,
    pub out: Option<PathBuf>,
}

impl Resolved {
    pub fn polarization(&self) -> Vector3<f64> {
        Vector3::from(self.polarization)
    }

    /// Parameters as `(key, value)` pairs for the metadata block.
    pub fn parameters(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let kinds = self.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",");
        vec![
            ("command".into(), self.command.to_string()),
            ("mu".into(), self.mu.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("epsilon".into(), self.epsilon.to_string()),
            ("nbar".into(), self.nbar.to_string()),
            ("nmax".into(), self.nmax.to_string()),
            ("cutoff".into(), self.cutoff.to_string()),
            ("t_end".into(), self.t_end.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("kinds".into(), kinds),
            ("mu_grid".into(), list(&self.mu_grid)),
            ("polarization".into(), list(&self.polarization)),
            ("fragment_times".into(), list(&self.fragment_times)),
        ]
    }
}
