use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fock::{basis_index, observables, states_at, FockConfig};
use super::OracleError;

/// 1/e radius of the Husimi distribution of a coherent state.
pub const PACKET_WIDTH: f64 = 1.0;
/// Peaks closer than this many packet widths are not resolved.
pub const RESOLUTION: f64 = 3.0;
/// Local maxima below this fraction of the global maximum are ignored.
pub const PEAK_FLOOR: f64 = 1e-3;

/// Square phase-space window in the frame rotating with the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiGrid {
    /// Points per side.
    pub points: usize,
    /// Half-width of the window.
    pub half_width: f64,
}

impl Default for HusimiGrid {
    fn default() -> Self {
        HusimiGrid {
            points: 161,
            half_width: 8.0,
        }
    }
}

impl HusimiGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }
}

/// `ln √(n!)` for `n < len`.
fn half_log_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 0 {
            acc += 0.5 * (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// `Q(β) = (1/π) Σ_q |⟨β|ψ_q⟩|²` of the reduced field state, with
/// `⟨β|n⟩ = e^{-|β|²/2} β*ⁿ/√n!` evaluated in log space.
pub fn husimi(psi: &DVector<Complex64>, beta: Complex64) -> f64 {
    husimi_with(psi, beta, &half_log_factorials(psi.len() / 2))
}

fn husimi_with(psi: &DVector<Complex64>, beta: Complex64, lhf: &[f64]) -> f64 {
    let nf = psi.len() / 2;
    let r2 = beta.norm_sqr();
    let mut e = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    if r2 == 0.0 {
        e = psi[basis_index(0, 0)];
        g = psi[basis_index(0, 1)];
    } else {
        let ln_r = 0.5 * r2.ln();
        let arg = beta.arg();
        for n in 0..nf {
            let ln_mag = -0.5 * r2 + n as f64 * ln_r - lhf[n];
            if ln_mag < -745.0 {
                continue;
            }
            let overlap = Complex64::from_polar(ln_mag.exp(), -(n as f64) * arg);
            e += overlap * psi[basis_index(n, 0)];
            g += overlap * psi[basis_index(n, 1)];
        }
    }
    (e.norm_sqr() + g.norm_sqr()) / std::f64::consts::PI
}

/// Two dominant Husimi fragments at one time, in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fragments {
    pub time: f64,
    /// Mass centroids, larger mass first.
    pub centers: (Complex64, Complex64),
    /// Masses on either side of the perpendicular bisector of the two peaks.
    pub weights: (f64, f64),
    pub separation: f64,
}

/// Fragment analysis of one state at time t. The window is centered on
/// `⟨a⟩ e^{iωt}`, and grid point y maps to `β = y e^{-iωt}`.
pub fn analyze_state(
    psi: &DVector<Complex64>,
    t: f64,
    omega: f64,
    grid: &HusimiGrid,
) -> Result<Fragments, OracleError> {
    let rot = Complex64::cis(omega * t);
    let center = observables(psi).field_mean * rot;
    let lhf = half_log_factorials(psi.len() / 2);
    let m = grid.points;
    let point = |i: usize, j: usize| center + Complex64::new(grid.coordinate(i), grid.coordinate(j));
    let q: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|idx| husimi_with(psi, point(idx / m, idx % m) / rot, &lhf))
        .collect();
    let at = |i: usize, j: usize| q[i * m + j];

    let global = q.iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut peaks: Vec<(usize, usize)> = Vec::new();
    for i in 1..m - 1 {
        for j in 1..m - 1 {
            let v = at(i, j);
            if v < PEAK_FLOOR * global {
                continue;
            }
            let is_max = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let (a, b) = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    (di == 0 && dj == 0) || v > at(a, b) || (v == at(a, b) && (a, b) > (i, j))
                })
            });
            if is_max {
                peaks.push((i, j));
            }
        }
    }
    peaks.sort_by(|a, b| at(b.0, b.1).total_cmp(&at(a.0, a.1)));
    if peaks.len() < 2 {
        return Err(OracleError::PeaksUnresolved { time: t, separation: 0.0 });
    }
    let p0 = point(peaks[0].0, peaks[0].1);
    let p1 = point(peaks[1].0, peaks[1].1);
    let peak_gap = (p0 - p1).norm();
    if peak_gap < RESOLUTION * PACKET_WIDTH {
        return Err(OracleError::PeaksUnresolved {
            time: t,
            separation: peak_gap,
        });
    }
    let mid = 0.5 * (p0 + p1);
    let axis = p0 - p1;
    let da = grid.spacing().powi(2);
    let mut mass = [0.0; 2];
    let mut moment = [Complex64::new(0.0, 0.0); 2];
    for i in 0..m {
        for j in 0..m {
            let y = point(i, j);
            let d = y - mid;
            let side = if d.re * axis.re + d.im * axis.im >= 0.0 { 0 } else { 1 };
            let w = at(i, j) * da;
            mass[side] += w;
            moment[side] += y * w;
        }
    }
    let c = [moment[0] / mass[0], moment[1] / mass[1]];
    let (a, b) = if mass[0] >= mass[1] { (0, 1) } else { (1, 0) };
    Ok(Fragments {
        time: t,
        centers: (c[a], c[b]),
        weights: (mass[a], mass[b]),
        separation: (c[0] - c[1]).norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentAnalysis {
    pub times: Vec<f64>,
    pub peak_centers: Vec<(Complex64, Complex64)>,
    pub peak_weights: Vec<(f64, f64)>,
    pub separation: Vec<f64>,
}

/// Husimi fragment analysis of the exact state at each of `times`.
pub fn fragment_analysis(
    config: &FockConfig,
    p: &Vector3<f64>,
    times: &[f64],
) -> Result<FragmentAnalysis, OracleError> {
    fragment_analysis_on(config, p, times, &HusimiGrid::default())
}

pub fn fragment_analysis_on(
    config: &FockConfig,
    p: &Vector3<f64>,
    times: &[f64],
    grid: &HusimiGrid,
) -> Result<FragmentAnalysis, OracleError> {
    if grid.points < 3 || !(grid.half_width > 0.0) {
        return Err(OracleError::InvalidParameter(
            "Husimi grid needs at least 3 points per side and a positive width".into(),
        ));
    }
    let states = states_at(config, p, times)?;
    let mut out = FragmentAnalysis {
        times: times.to_vec(),
        peak_centers: Vec::with_capacity(times.len()),
        peak_weights: Vec::with_capacity(times.len()),
        separation: Vec::with_capacity(times.len()),
    };
    for (psi, &t) in states.iter().zip(times) {
        let f = analyze_state(psi, t, config.omega, grid)?;
        out.peak_centers.push(f.centers);
        out.peak_weights.push(f.weights);
        out.separation.push(f.separation);
    }
    Ok(out)
}
