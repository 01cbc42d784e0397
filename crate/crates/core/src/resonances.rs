//! The seven resonance conditions, located as extrema or roots in the
//! detuning δ at fixed drive strength μ, and the fit of their leading shift
//! `δ_res ≈ c μ²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{solve_floquet, FloquetError, FloquetParams, FloquetSolution, Mode, DEFAULT_N_MAX};
use crate::optimize::{brent_minimize, brent_root};

/// Uniform samples per field period for time averages and maxima.
pub const PERIOD_SAMPLES: usize = 256;
/// Presample points used to localize a minimum before refinement.
pub const PRESAMPLE_POINTS: usize = 21;
/// Target width of the final δ bracket for minimized objectives.
pub const MIN_XTOL: f64 = 1e-9;
/// Target residual for root objectives.
pub const ROOT_FTOL: f64 = 1e-10;

const MAX_ITER: usize = 200;
const EXPANSION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResonanceKind {
    /// Bloch–Siegert: minimum of Ω.
    BS,
    /// Shortest collapse time: maximum of `|∂_μΩ|`.
    TC,
    /// Full collapse: `Q₃₃(t) ≡ 0`.
    FC,
    /// Zero-mean residual oscillation of the population difference.
    RC,
    /// Minimal mean-square polarization (maximal entanglement).
    EN,
    /// Maximal fragment speed.
    VS,
    /// Equal-weight splitting: `n₃ = 0`.
    WS,
}

impl ResonanceKind {
    pub const ALL: [ResonanceKind; 7] = [
        ResonanceKind::BS,
        ResonanceKind::TC,
        ResonanceKind::FC,
        ResonanceKind::RC,
        ResonanceKind::EN,
        ResonanceKind::VS,
        ResonanceKind::WS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResonanceKind::BS => "BS",
            ResonanceKind::TC => "TC",
            ResonanceKind::FC => "FC",
            ResonanceKind::RC => "RC",
            ResonanceKind::EN => "EN",
            ResonanceKind::VS => "VS",
            ResonanceKind::WS => "WS",
        }
    }

    /// Root kinds are located by sign change, the rest by minimization.
    pub fn is_root(self) -> bool {
        matches!(self, ResonanceKind::RC | ResonanceKind::WS)
    }
}

impl fmt::Display for ResonanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResonanceKind {
    type Err = ResonanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResonanceKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ResonanceError::InvalidParameter(format!("unknown resonance kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResonanceError {
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{kind} objective has no interior extremum or sign change in [{lo:e}, {hi:e}]")]
    NoBracket { kind: ResonanceKind, lo: f64, hi: f64 },
    #[error("finite-difference derivative failed: {0}")]
    DerivativeStep(String),
    #[error("series fit is rank deficient (singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },
}

impl ResonanceError {
    pub fn name(&self) -> &'static str {
        match self {
            ResonanceError::Floquet(e) => e.name(),
            ResonanceError::InvalidParameter(_) => "InvalidParameter",
            ResonanceError::NoBracket { .. } => "NoBracket",
            ResonanceError::DerivativeStep(_) => "DerivativeStep",
            ResonanceError::RankDeficient { .. } => "RankDeficient",
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            ResonanceError::Floquet(e) => e.is_validation(),
            ResonanceError::InvalidParameter(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceResult {
    pub kind: ResonanceKind,
    pub mu: f64,
    pub delta_res: f64,
    /// Ω_res (BS), t_c/t_c,RWA (TC), max|Q₃₃| (FC), |avg Q₃₃| (RC),
    /// mean-square polarization (EN), |v||ζ̄|/(εμ) (VS), |n₃| (WS).
    pub value_at_res: f64,
    pub bracket: (f64, f64),
    pub objective_evaluations: usize,
}

/// `∂Ω/∂μ` at fixed δ by central differences with one Richardson step.
///
/// Ω is even in μ, so steps that cross μ = 0 are reflected.
pub fn rabi_frequency_slope(params: &FloquetParams) -> Result<f64, ResonanceError> {
    let mu = params.mu;
    let h = (1e-3 * mu).max(1e-4);
    let omega_at = |m: f64| -> Result<f64, ResonanceError> {
        let p = FloquetParams { mu: m.abs(), ..*params };
        Ok(solve_floquet(&p)?.rabi_frequency)
    };
    let central = |h: f64| -> Result<f64, ResonanceError> {
        Ok((omega_at(mu + h)? - omega_at(mu - h)?) / (2.0 * h))
    };
    let d = (4.0 * central(0.5 * h)? - central(h)?) / 3.0;
    if !d.is_finite() {
        return Err(ResonanceError::DerivativeStep(format!(
            "non-finite slope at mu = {mu}, delta = {}",
            params.delta
        )));
    }
    Ok(d)
}

fn phase_samples(sol: &FloquetSolution) -> impl Iterator<Item = f64> + '_ {
    let period = sol.params.period();
    (0..PERIOD_SAMPLES).map(move |j| period * j as f64 / PERIOD_SAMPLES as f64)
}

/// `max_t |Q₃₃(t)|` over one field period.
pub fn full_collapse_residual(sol: &FloquetSolution) -> f64 {
    phase_samples(sol)
        .map(|t| sol.q_matrix(t)[(2, 2)].abs())
        .fold(0.0, f64::max)
}

/// Period average of `Q₃₃(t)`.
pub fn mean_q33(sol: &FloquetSolution) -> f64 {
    phase_samples(sol).map(|t| sol.q_matrix(t)[(2, 2)]).sum::<f64>() / PERIOD_SAMPLES as f64
}

/// Period average of the third component of the k = 0 axis.
fn mean_axis3(sol: &FloquetSolution) -> f64 {
    phase_samples(sol).map(|t| sol.axis(t)[2]).sum::<f64>() / PERIOD_SAMPLES as f64
}

/// Long-time mean-square polarization `|Q p|²`, averaged over the field
/// phase. Since `|Q(t)p|² = (n·p)²` with `n` the k = 0 axis at `-φ/ω`,
/// this is the period average of `(axis(s)·p)²`.
pub fn mean_square_polarization(sol: &FloquetSolution, p: &Vector3<f64>) -> f64 {
    phase_samples(sol).map(|s| sol.axis(s).dot(p).powi(2)).sum::<f64>() / PERIOD_SAMPLES as f64
}

/// `|r̃_{0,n=1,a=1}| ‖r₀⁻¹‖`.
pub fn splitting_amplitude(sol: &FloquetSolution) -> f64 {
    sol.fourier_coefficient(Mode::Zero, 1, 0).norm() * sol.zero_mode_inverse_norm()
}

/// `n₃ = r⁻¹_{03}/‖r₀⁻¹‖`.
pub fn splitting_axis3(sol: &FloquetSolution) -> f64 {
    sol.inverse_row(Mode::Zero)[2].re / sol.zero_mode_inverse_norm()
}

fn objective_from(kind: ResonanceKind, sol: &FloquetSolution) -> Result<f64, ResonanceError> {
    Ok(match kind {
        ResonanceKind::BS => sol.rabi_frequency,
        ResonanceKind::TC => -rabi_frequency_slope(&sol.params)?.abs(),
        ResonanceKind::FC => full_collapse_residual(sol),
        ResonanceKind::RC => mean_axis3(sol),
        ResonanceKind::EN => mean_square_polarization(sol, &Vector3::z()),
        ResonanceKind::VS => -splitting_amplitude(sol),
        ResonanceKind::WS => splitting_axis3(sol),
    })
}

/// Scalar whose minimum (or root, for RC and WS) defines the resonance.
///
/// RC returns the period average of the axis component `n₃(t)`; the average
/// of `Q₃₃ = n₃(t) n₃(0)` has an extra root at the FC/WS resonance.
pub fn objective(kind: ResonanceKind, params: &FloquetParams) -> Result<f64, ResonanceError> {
    let sol = solve_floquet(params)?;
    objective_from(kind, &sol)
}

/// The reported value of a resonance at detuning `params.delta`.
pub fn characteristic_value(kind: ResonanceKind, params: &FloquetParams) -> Result<f64, ResonanceError> {
    let sol = solve_floquet(params)?;
    Ok(match kind {
        ResonanceKind::BS => sol.rabi_frequency,
        ResonanceKind::TC => 1.0 / rabi_frequency_slope(params)?.abs(),
        ResonanceKind::FC => full_collapse_residual(&sol),
        ResonanceKind::RC => mean_q33(&sol).abs(),
        ResonanceKind::EN => mean_square_polarization(&sol, &Vector3::z()),
        ResonanceKind::VS => 2.0 * splitting_amplitude(&sol),
        ResonanceKind::WS => splitting_axis3(&sol).abs(),
    })
}

/// Default search interval `[-2μ², 2μ²]`.
pub fn default_bracket(mu: f64) -> (f64, f64) {
    (-2.0 * mu * mu, 2.0 * mu * mu)
}

fn expand((lo, hi): (f64, f64)) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo) * EXPANSION;
    (c - r, c + r)
}

struct Search {
    x: f64,
    evaluations: usize,
}

fn search_min(
    kind: ResonanceKind,
    base: &FloquetParams,
    (lo, hi): (f64, f64),
) -> Result<Option<Search>, ResonanceError> {
    let f = |d: f64| objective(kind, &FloquetParams { delta: d, ..*base });
    let grid: Vec<f64> = (0..PRESAMPLE_POINTS)
        .map(|j| lo + (hi - lo) * j as f64 / (PRESAMPLE_POINTS - 1) as f64)
        .collect();
    let values = grid.iter().map(|&d| f(d)).collect::<Result<Vec<_>, _>>()?;
    // Lowest interior local minimum. Near the zone boundary the folded Ω
    // falls toward the bracket ends, so the global minimum can be spurious.
    let Some(best) = (1..PRESAMPLE_POINTS - 1)
        .filter(|&i| values[i] <= values[i - 1] && values[i] <= values[i + 1])
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
    else {
        return Ok(None);
    };
    let ext = brent_minimize(f, grid[best - 1], grid[best + 1], MIN_XTOL, MAX_ITER)?;
    Ok(Some(Search {
        x: ext.x,
        evaluations: PRESAMPLE_POINTS + ext.evaluations,
    }))
}

fn search_root(
    kind: ResonanceKind,
    base: &FloquetParams,
    (lo, hi): (f64, f64),
) -> Result<Option<Search>, ResonanceError> {
    let f = |d: f64| objective(kind, &FloquetParams { delta: d, ..*base });
    let root = brent_root(f, lo, hi, 1e-15, ROOT_FTOL, MAX_ITER)?;
    Ok(root.map(|r| Search {
        x: r.x,
        evaluations: r.evaluations,
    }))
}

/// Locates `δ_res(μ)` with the default truncation order.
pub fn find_resonance(
    kind: ResonanceKind,
    mu: f64,
    bracket: Option<(f64, f64)>,
) -> Result<ResonanceResult, ResonanceError> {
    find_resonance_with(kind, &FloquetParams::new(0.0, mu).with_n_max(DEFAULT_N_MAX), bracket)
}

/// Locates `δ_res` for the drive strength and truncation of `base`
/// (its `delta` is ignored). A failed bracket is widened once by 4×.
pub fn find_resonance_with(
    kind: ResonanceKind,
    base: &FloquetParams,
    bracket: Option<(f64, f64)>,
) -> Result<ResonanceResult, ResonanceError> {
    let mu = base.mu;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(ResonanceError::InvalidParameter(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let first = bracket.unwrap_or_else(|| default_bracket(mu));
    if !(first.0.is_finite() && first.1.is_finite() && first.0 < first.1) {
        return Err(ResonanceError::InvalidParameter(format!(
            "bracket must be an increasing finite interval, got {first:?}"
        )));
    }
    let search = |b| {
        if kind.is_root() {
            search_root(kind, base, b)
        } else {
            search_min(kind, base, b)
        }
    };
    let mut used = first;
    let mut found = search(first)?;
    if found.is_none() {
        used = expand(first);
        found = search(used)?;
    }
    let Some(s) = found else {
        return Err(ResonanceError::NoBracket {
            kind,
            lo: used.0,
            hi: used.1,
        });
    };
    let at = FloquetParams { delta: s.x, ..*base };
    Ok(ResonanceResult {
        kind,
        mu,
        delta_res: s.x,
        value_at_res: characteristic_value(kind, &at)?,
        bracket: used,
        objective_evaluations: s.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub kind: ResonanceKind,
    pub mu_grid: Vec<f64>,
    pub delta_values: Vec<f64>,
    /// Coefficient of μ².
    pub c: f64,
    /// Coefficient of μ³.
    pub c3: f64,
    /// Coefficient of μ⁴.
    pub c4: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
}

/// Least-squares fit of `δ_res(μ) = c μ² + c₃ μ³ + c₄ μ⁴` over `mu_grid`.
pub fn fit_shift_coefficient(kind: ResonanceKind, mu_grid: &[f64]) -> Result<SeriesFit, ResonanceError> {
    if mu_grid.len() < 5 {
        return Err(ResonanceError::InvalidParameter(format!(
            "need at least 5 mu values, got {}",
            mu_grid.len()
        )));
    }
    if mu_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ResonanceError::InvalidParameter(
            "mu grid must be strictly increasing".into(),
        ));
    }
    let delta_values = mu_grid
        .par_iter()
        .map(|&mu| find_resonance(kind, mu, None).map(|r| r.delta_res))
        .collect::<Result<Vec<_>, _>>()?;
    fit_series(kind, mu_grid, delta_values)
}

/// The least-squares step of [`fit_shift_coefficient`] on precomputed samples.
pub fn fit_series(kind: ResonanceKind, mu_grid: &[f64], delta_values: Vec<f64>) -> Result<SeriesFit, ResonanceError> {
    let m = mu_grid.len();
    // Columns scaled by the largest μ keep the design matrix well conditioned.
    let scale = mu_grid.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let a = DMatrix::from_fn(m, 3, |i, j| (mu_grid[i] / scale).powi(j as i32 + 2));
    let y = DVector::from_column_slice(&delta_values);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let ratio = smin / smax;
    if !(ratio > 1e-12) {
        return Err(ResonanceError::RankDeficient { ratio });
    }
    let x = svd
        .solve(&y, 0.0)
        .map_err(|e| ResonanceError::InvalidParameter(e.to_string()))?;
    let residual = &a * &x - &y;
    Ok(SeriesFit {
        kind,
        mu_grid: mu_grid.to_vec(),
        delta_values,
        c: x[0] / scale.powi(2),
        c3: x[1] / scale.powi(3),
        c4: x[2] / scale.powi(4),
        fit_residual: residual.norm() / (m as f64).sqrt(),
    })
}

/// One point of the resonance curves. Every column after `delta_res` is
/// evaluated at `δ_res` of this row's kind; failures leave `error` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub kind: ResonanceKind,
    pub mu: f64,
    pub delta_res: Option<f64>,
    /// Ω_res/μ.
    pub omega_ratio: Option<f64>,
    /// |v||ζ̄|/(εμ), normalized to 1 in the rotating-wave limit.
    pub speed_ratio: Option<f64>,
    /// t_c/t_c,RWA = 1/|∂_μΩ|.
    pub collapse_ratio: Option<f64>,
    pub mean_square_polarization: Option<f64>,
    pub error: Option<String>,
}

fn curve_point(kind: ResonanceKind, mu: f64) -> CurvePoint {
    let eval = || -> Result<(f64, f64, f64, f64, f64), ResonanceError> {
        let r = find_resonance(kind, mu, None)?;
        let p = FloquetParams::new(r.delta_res, mu);
        let sol = solve_floquet(&p)?;
        Ok((
            r.delta_res,
            sol.rabi_frequency / mu,
            2.0 * splitting_amplitude(&sol),
            1.0 / rabi_frequency_slope(&p)?.abs(),
            mean_square_polarization(&sol, &Vector3::z()),
        ))
    };
    match eval() {
        Ok((d, om, sp, tc, msp)) => CurvePoint {
            kind,
            mu,
            delta_res: Some(d),
            omega_ratio: Some(om),
            speed_ratio: Some(sp),
            collapse_ratio: Some(tc),
            mean_square_polarization: Some(msp),
            error: None,
        },
        Err(e) => CurvePoint {
            kind,
            mu,
            delta_res: None,
            omega_ratio: None,
            speed_ratio: None,
            collapse_ratio: None,
            mean_square_polarization: None,
            error: Some(format!("{}: {e}", e.name())),
        },
    }
}

/// `δ_res(μ)` and the derived curve quantities for every kind and μ, in
/// kind-major order. Points run in parallel; the output order is fixed.
pub fn resonance_curves(kinds: &[ResonanceKind], mu_grid: &[f64]) -> Vec<CurvePoint> {
    let jobs: Vec<(ResonanceKind, f64)> = kinds
        .iter()
        .flat_map(|&k| mu_grid.iter().map(move |&m| (k, m)))
        .collect();
    jobs.par_iter().map(|&(k, m)| curve_point(k, m)).collect()
}
