//! Side-by-side semiclassical and exact-oracle dynamics, and envelope
//! extraction from sampled Rabi oscillations.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{solve_floquet, FloquetParams};
use crate::oracle::{evolve, FockConfig, OracleError};
use crate::semiclassics::{collapse_time, polarization_trace, SemiclassicsError, WavePacket};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Semiclassics(#[from] SemiclassicsError),
}

impl CompareError {
    pub fn name(&self) -> &'static str {
        match self {
            CompareError::Oracle(e) => e.name(),
            CompareError::Semiclassics(e) => e.name(),
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            CompareError::Oracle(e) => e.is_validation(),
            CompareError::Semiclassics(e) => e.is_validation(),
        }
    }
}

/// Centered RMS amplitude `√2 · rms` over `2·half_window + 1` samples;
/// `None` where the window does not fit.
pub fn windowed_amplitude(values: &[f64], half_window: usize) -> Vec<Option<f64>> {
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v * v;
    }
    (0..n)
        .map(|i| {
            if i < half_window || i + half_window >= n {
                return None;
            }
            let sum = prefix[i + half_window + 1] - prefix[i - half_window];
            Some((2.0 * sum / (2 * half_window + 1) as f64).sqrt())
        })
        .collect()
}

/// First time the envelope falls below `level`, linearly interpolated.
pub fn decay_time(times: &[f64], envelope: &[Option<f64>], level: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for (&t, e) in times.iter().zip(envelope) {
        let Some(e) = *e else { continue };
        if e < level {
            return Some(match prev {
                Some((t0, e0)) => t0 + (e0 - level) / (e0 - e) * (t - t0),
                None => t,
            });
        }
        prev = Some((t, e));
    }
    None
}

/// Aligned semiclassical and exact series for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseComparison {
    pub mu: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub oracle_sigma: Vec<Vector3<f64>>,
    pub semiclassical_sigma: Vec<Vector3<f64>>,
    pub oracle_purity: Vec<f64>,
    pub semiclassical_purity: Vec<f64>,
    /// `(1 + |Q(t)p|²)/2`, the purity after complete collapse.
    pub collapsed_purity: Vec<f64>,
    /// Oscillation amplitude of `σ₃ - (Qp)₃` relative to the uncollapsed flow.
    pub oracle_envelope: Vec<Option<f64>>,
    pub semiclassical_envelope: Vec<Option<f64>>,
    pub collapse_time: f64,
    pub oracle_decay_time: Option<f64>,
    pub semiclassical_decay_time: Option<f64>,
}

impl CollapseComparison {
    /// `max |σ₃,oracle - s₃,semiclassical|` over `t ≤ t_max`.
    pub fn max_sigma3_deviation(&self, t_max: f64) -> f64 {
        self.times
            .iter()
            .zip(self.oracle_sigma.iter().zip(&self.semiclassical_sigma))
            .filter(|(t, _)| **t <= t_max)
            .fold(0.0, |a, (_, (o, s))| a.max((o[2] - s[2]).abs()))
    }

    /// `max |purity_oracle - (1 + |Qp|²)/2|` over `t ∈ [t0, t1]`.
    pub fn max_collapsed_purity_deviation(&self, t0: f64, t1: f64) -> f64 {
        self.times
            .iter()
            .zip(self.oracle_purity.iter().zip(&self.collapsed_purity))
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .fold(0.0, |a, (_, (o, q))| a.max((o - q).abs()))
    }
}

/// Runs the oracle for `config` and evaluates the semiclassical prediction
/// for the matching packet (`|ζ̄| = 1`, `ε = 1/n̄`, `μ = 2g√n̄`, `δ = ν - ω`).
pub fn compare_collapse(config: &FockConfig, p: &Vector3<f64>) -> Result<CollapseComparison, CompareError> {
    if !(config.n_bar > 0.0) || (config.omega - 1.0).abs() > 0.0 {
        return Err(OracleError::InvalidParameter(
            "comparison needs n_bar > 0 and omega = 1".into(),
        )
        .into());
    }
    let quantum = evolve(config, p)?;
    let mu = config.mu();
    let delta = config.nu - config.omega;
    let epsilon = 1.0 / config.n_bar;
    let sol = solve_floquet(&FloquetParams::new(delta, mu)).map_err(SemiclassicsError::from)?;
    let packet = WavePacket::coherent(Complex64::new(1.0, 0.0), epsilon, *p);
    let trace = polarization_trace(&sol, &packet, &quantum.times)?;
    let tc = collapse_time(&sol, &packet)?;

    let times = &quantum.times;
    let q3: Vec<f64> = times.iter().map(|&t| (sol.q_matrix(t) * p)[2]).collect();
    let o3: Vec<f64> = times.iter().map(|&t| (sol.o_matrix(t) * p)[2]).collect();
    let collapsed_purity = times
        .iter()
        .map(|&t| 0.5 * (1.0 + (sol.q_matrix(t) * p).norm_squared()))
        .collect();

    let rabi_period = 2.0 * std::f64::consts::PI / sol.rabi_frequency;
    let half = ((0.5 * rabi_period / config.dt).round() as usize).max(1);
    let reference = windowed_amplitude(&o3.iter().zip(&q3).map(|(o, q)| o - q).collect::<Vec<_>>(), half);
    let relative = |series: Vec<f64>| -> Vec<Option<f64>> {
        windowed_amplitude(&series, half)
            .into_iter()
            .zip(&reference)
            .map(|(a, r)| match (a, r) {
                (Some(a), Some(r)) if *r > 0.0 => Some(a / r),
                _ => None,
            })
            .collect()
    };
    let oracle_envelope = relative(quantum.sigma.iter().zip(&q3).map(|(s, q)| s[2] - q).collect());
    let semiclassical_envelope = relative(trace.s_expectation.iter().zip(&q3).map(|(s, q)| s[2] - q).collect());
    let level = (-1f64).exp();

    Ok(CollapseComparison {
        mu,
        delta,
        epsilon,
        times: times.clone(),
        oracle_decay_time: decay_time(times, &oracle_envelope, level),
        semiclassical_decay_time: decay_time(times, &semiclassical_envelope, level),
        oracle_sigma: quantum.sigma,
        semiclassical_sigma: trace.s_expectation,
        oracle_purity: quantum.purity,
        semiclassical_purity: trace.purity,
        collapsed_purity,
        oracle_envelope,
        semiclassical_envelope,
        collapse_time: tc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_of_a_sinusoid() {
        let v: Vec<f64> = (0..1000).map(|i| 0.7 * (i as f64 * 0.05).sin()).collect();
        // window of one period: 2π/0.05 ≈ 125.66 samples
        let a = windowed_amplitude(&v, 63);
        assert!(a[10].is_none() && a[990].is_none());
        assert!((a[500].unwrap() - 0.7).abs() < 5e-3);
    }

    #[test]
    fn decay_time_interpolates() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let e = [None, Some(1.0), Some(0.5), Some(0.1)];
        assert_eq!(decay_time(&t, &e, 0.75), Some(1.5));
        assert_eq!(decay_time(&t, &e, 0.01), None);
    }
}
