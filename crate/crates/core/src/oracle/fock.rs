use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OracleError;

/// Largest dimension propagated by full diagonalization under [`Method::Auto`].
pub const EIGEN_LIMIT: usize = 3000;
/// Largest accepted `|⟨ψ|ψ⟩ - 1|` along a trace.
pub const NORM_TOL: f64 = 1e-8;
/// Largest accepted population of the top Fock level.
pub const TOP_TOL: f64 = 1e-6;

const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-13;

/// Rabi Hamiltonian in a truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    /// Mean photon number `|α|²` of the initial coherent state.
    pub n_bar: f64,
    /// Number of Fock levels kept, `n = 0 .. cutoff - 1`.
    pub cutoff: usize,
    /// Physical coupling g in `g(a + a†)σ₁`.
    pub g: f64,
    /// Qubit frequency ν.
    pub nu: f64,
    pub omega: f64,
    /// Output sampling interval.
    pub dt: f64,
    pub t_end: f64,
}

impl FockConfig {
    /// The quantum problem whose classical limit is drive strength μ and
    /// detuning δ at `n̄` photons: `g = μ/(2√n̄)`, so that `2g|α| = μ`.
    pub fn from_semiclassical(n_bar: f64, mu: f64, delta: f64, cutoff: usize, dt: f64, t_end: f64) -> Self {
        FockConfig {
            n_bar,
            cutoff,
            g: mu / (2.0 * n_bar.sqrt()),
            nu: 1.0 + delta,
            omega: 1.0,
            dt,
            t_end,
        }
    }

    /// Smallest cutoff accepted for `n_bar`: `n̄ + 12√n̄`.
    pub fn min_cutoff(n_bar: f64) -> usize {
        (n_bar + 12.0 * n_bar.sqrt()).ceil().max(1.0) as usize
    }

    pub fn dimension(&self) -> usize {
        2 * self.cutoff
    }

    /// Drive strength `μ = 2g√n̄` seen by the qubit.
    pub fn mu(&self) -> f64 {
        2.0 * self.g * self.n_bar.sqrt()
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |s: String| Err(OracleError::InvalidParameter(s));
        if !(self.n_bar.is_finite() && self.n_bar >= 0.0) {
            return bad(format!("n_bar must be non-negative, got {}", self.n_bar));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return bad(format!("g must be non-negative, got {}", self.g));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        let required = Self::min_cutoff(self.n_bar);
        if self.cutoff < required {
            return Err(OracleError::CutoffTooSmall {
                cutoff: self.cutoff,
                required,
            });
        }
        Ok(())
    }

    /// Sampling times `0, dt, 2dt, …` up to `t_end`.
    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_end / self.dt + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * self.dt).collect()
    }
}

/// Flat index of Fock level `n` and qubit level `q` (0 = excited, σ₃ = +1).
pub fn basis_index(n: usize, q: usize) -> usize {
    2 * n + q
}

/// Real symmetric Hamiltonian stored as its diagonal plus upper-triangle entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    pub dimension: usize,
    pub diagonal: Vec<f64>,
    /// `(i, j, value)` with `i < j`.
    pub upper: Vec<(usize, usize, f64)>,
}

impl SparseHamiltonian {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diagonal));
        for &(i, j, v) in &self.upper {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h
    }

    pub fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        let mut y = DVector::from_fn(self.dimension, |i, _| x[i] * self.diagonal[i]);
        for &(i, j, v) in &self.upper {
            y[i] += x[j] * v;
            y[j] += x[i] * v;
        }
        y
    }

    pub fn expectation(&self, x: &DVector<Complex64>) -> f64 {
        x.dotc(&self.apply(x)).re
    }
}

/// `H = ω(a†a + ½) + (ν/2)σ₃ + g(a + a†)σ₁`.
pub fn build_hamiltonian(config: &FockConfig) -> Result<SparseHamiltonian, OracleError> {
    config.validate()?;
    let nf = config.cutoff;
    let mut diagonal = vec![0.0; 2 * nf];
    let mut upper = Vec::with_capacity(2 * nf);
    for n in 0..nf {
        let field = config.omega * (n as f64 + 0.5);
        diagonal[basis_index(n, 0)] = field + 0.5 * config.nu;
        diagonal[basis_index(n, 1)] = field - 0.5 * config.nu;
        if n + 1 < nf && config.g != 0.0 {
            let c = config.g * ((n + 1) as f64).sqrt();
            upper.push((basis_index(n, 0), basis_index(n + 1, 1), c));
            upper.push((basis_index(n, 1), basis_index(n + 1, 0), c));
        }
    }
    Ok(SparseHamiltonian {
        dimension: 2 * nf,
        diagonal,
        upper,
    })
}

/// Coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!` for real `α = √n̄`,
/// renormalized over the kept levels; also returns the discarded tail mass.
pub fn coherent_amplitudes(n_bar: f64, cutoff: usize) -> (Vec<f64>, f64) {
    let mut amps = Vec::with_capacity(cutoff);
    let ln_alpha = 0.5 * n_bar.ln();
    let mut ln_fact = 0.0;
    for n in 0..cutoff {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let a = if n_bar == 0.0 {
            if n == 0 { 1.0 } else { 0.0 }
        } else {
            (-0.5 * n_bar + n as f64 * ln_alpha - 0.5 * ln_fact).exp()
        };
        amps.push(a);
    }
    let kept: f64 = amps.iter().map(|a| a * a).sum();
    let norm = kept.sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    (amps, (1.0 - kept).max(0.0))
}

/// Qubit amplitudes `(ψ_e, ψ_g)` with Bloch vector p.
pub fn qubit_state(p: &Vector3<f64>) -> (Complex64, Complex64) {
    let theta = p[2].clamp(-1.0, 1.0).acos();
    let phi = p[1].atan2(p[0]);
    (
        Complex64::new((0.5 * theta).cos(), 0.0),
        Complex64::from_polar((0.5 * theta).sin(), phi),
    )
}

/// `|α⟩ ⊗ |p⟩` and the tail mass of the truncated coherent state.
pub fn initial_state(config: &FockConfig, p: &Vector3<f64>) -> (DVector<Complex64>, f64) {
    let (amps, tail) = coherent_amplitudes(config.n_bar, config.cutoff);
    let (e, g) = qubit_state(p);
    let mut psi = DVector::from_element(config.dimension(), Complex64::new(0.0, 0.0));
    for (n, a) in amps.iter().enumerate() {
        psi[basis_index(n, 0)] = e * *a;
        psi[basis_index(n, 1)] = g * *a;
    }
    (psi, tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Diagonalization up to [`EIGEN_LIMIT`], Krylov above.
    Auto,
    Eigen,
    Krylov,
}

/// Calls `visit(i, t_i, ψ(t_i))` for each of the non-decreasing `times`.
pub fn propagate<F>(
    h: &SparseHamiltonian,
    psi0: &DVector<Complex64>,
    times: &[f64],
    method: Method,
    mut visit: F,
) -> Result<(), OracleError>
where
    F: FnMut(usize, f64, &DVector<Complex64>) -> Result<(), OracleError>,
{
    if times.windows(2).any(|w| !(w[0] <= w[1])) || times.first().is_some_and(|t| !(*t >= 0.0)) {
        return Err(OracleError::InvalidParameter(
            "times must be non-negative and non-decreasing".into(),
        ));
    }
    let use_eigen = match method {
        Method::Auto => h.dimension <= EIGEN_LIMIT,
        Method::Eigen => true,
        Method::Krylov => false,
    };
    if use_eigen {
        let eig = SymmetricEigen::new(h.to_dense());
        let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let c0 = v.adjoint() * psi0;
        for (i, &t) in times.iter().enumerate() {
            let ct = DVector::from_fn(c0.len(), |j, _| c0[j] * Complex64::cis(-eig.eigenvalues[j] * t));
            visit(i, t, &(&v * ct))?;
        }
    } else {
        let mut psi = psi0.clone();
        let mut now = 0.0;
        let mut tau = 0.5 / h.diagonal.iter().fold(1.0_f64, |a, d| a.max(d.abs()));
        for (i, &t) in times.iter().enumerate() {
            while now < t {
                let step = tau.min(t - now);
                let (next, err) = krylov_step(h, &psi, step);
                if err > KRYLOV_TOL && step > 1e-12 {
                    tau = 0.5 * step;
                    continue;
                }
                psi = next;
                now += step;
                if err < 0.01 * KRYLOV_TOL {
                    tau = 1.5 * step.max(tau);
                }
            }
            visit(i, t, &psi)?;
        }
    }
    Ok(())
}

/// One Lanczos step `ψ → e^{-iHτ}ψ` with full reorthogonalization; returns the
/// new state and the standard residual estimate.
fn krylov_step(h: &SparseHamiltonian, psi: &DVector<Complex64>, tau: f64) -> (DVector<Complex64>, f64) {
    let beta0 = psi.norm();
    if beta0 == 0.0 {
        return (psi.clone(), 0.0);
    }
    let mut basis: Vec<DVector<Complex64>> = vec![psi / Complex64::new(beta0, 0.0)];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut tail = 0.0;
    for j in 0..KRYLOV_DIM {
        let mut w = h.apply(&basis[j]);
        let a = basis[j].dotc(&w).re;
        alpha.push(a);
        for v in &basis {
            let c = v.dotc(&w);
            w -= v * c;
        }
        let b = w.norm();
        if b < 1e-14 * beta0.max(1.0) || j + 1 == KRYLOV_DIM {
            tail = b;
            break;
        }
        beta.push(b);
        basis.push(w / Complex64::new(b, 0.0));
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let y: Vec<Complex64> = (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)] * Complex64::cis(-eig.eigenvalues[k] * tau)
                })
                .sum::<Complex64>()
                * beta0
        })
        .collect();
    let mut out = DVector::from_element(psi.len(), Complex64::new(0.0, 0.0));
    for (v, c) in basis.iter().zip(&y) {
        out += v * *c;
    }
    (out, tail * y[m - 1].norm())
}

/// Exact-oracle time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumTrace {
    pub times: Vec<f64>,
    pub sigma: Vec<Vector3<f64>>,
    /// `tr ρ_qubit²`.
    pub purity: Vec<f64>,
    pub norm_drift: Vec<f64>,
    pub top_occupation: Vec<f64>,
    /// `⟨a⟩`.
    pub field_mean: Vec<Complex64>,
    /// `⟨a†a⟩`.
    pub photon_number: Vec<f64>,
    /// `⟨H⟩`.
    pub energy: Vec<f64>,
    /// Probability discarded when truncating the initial coherent state.
    pub tail_mass: f64,
}

impl QuantumTrace {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_top_occupation(&self) -> f64 {
        self.top_occupation.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// `max |⟨H⟩(t) - ⟨H⟩(0)| / |⟨H⟩(0)|`.
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.energy.iter().fold(0.0, |a, e| a.max((e - e0).abs() / scale))
    }
}

/// Single-time observables of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub sigma: Vector3<f64>,
    pub purity: f64,
    pub norm: f64,
    pub top_occupation: f64,
    pub field_mean: Complex64,
    pub photon_number: f64,
}

pub fn observables(psi: &DVector<Complex64>) -> Observables {
    let nf = psi.len() / 2;
    let mut ree = 0.0;
    let mut rgg = 0.0;
    let mut reg = Complex64::new(0.0, 0.0);
    let mut field_mean = Complex64::new(0.0, 0.0);
    let mut photon_number = 0.0;
    for n in 0..nf {
        let e = psi[basis_index(n, 0)];
        let g = psi[basis_index(n, 1)];
        ree += e.norm_sqr();
        rgg += g.norm_sqr();
        reg += e * g.conj();
        photon_number += n as f64 * (e.norm_sqr() + g.norm_sqr());
        if n + 1 < nf {
            let s = ((n + 1) as f64).sqrt();
            field_mean += (e.conj() * psi[basis_index(n + 1, 0)] + g.conj() * psi[basis_index(n + 1, 1)]) * s;
        }
    }
    // ⟨σ₁⟩ + i⟨σ₂⟩ = 2 Σ ψ_e* ψ_g = 2 conj(ρ_eg)
    let top = psi[basis_index(nf - 1, 0)].norm_sqr() + psi[basis_index(nf - 1, 1)].norm_sqr();
    Observables {
        sigma: Vector3::new(2.0 * reg.re, -2.0 * reg.im, ree - rgg),
        purity: ree * ree + rgg * rgg + 2.0 * reg.norm_sqr(),
        norm: ree + rgg,
        top_occupation: top,
        field_mean,
        photon_number,
    }
}

fn check(t: f64, obs: &Observables) -> Result<(), OracleError> {
    let drift = (obs.norm - 1.0).abs();
    if drift > NORM_TOL || obs.top_occupation > TOP_TOL {
        return Err(OracleError::CutoffReflection {
            time: t,
            top_occupation: obs.top_occupation,
            norm_drift: drift,
        });
    }
    Ok(())
}

/// Exact evolution of `|α⟩ ⊗ |p⟩` sampled every `dt` up to `t_end`.
pub fn evolve(config: &FockConfig, p: &Vector3<f64>) -> Result<QuantumTrace, OracleError> {
    evolve_with(config, p, Method::Auto)
}

pub fn evolve_with(config: &FockConfig, p: &Vector3<f64>, method: Method) -> Result<QuantumTrace, OracleError> {
    check_polarization(p)?;
    let h = build_hamiltonian(config)?;
    let (psi0, tail_mass) = initial_state(config, p);
    let times = config.times();
    let n = times.len();
    let mut trace = QuantumTrace {
        times: times.clone(),
        sigma: Vec::with_capacity(n),
        purity: Vec::with_capacity(n),
        norm_drift: Vec::with_capacity(n),
        top_occupation: Vec::with_capacity(n),
        field_mean: Vec::with_capacity(n),
        photon_number: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        tail_mass,
    };
    propagate(&h, &psi0, &times, method, |_, t, psi| {
        let obs = observables(psi);
        check(t, &obs)?;
        trace.sigma.push(obs.sigma);
        trace.purity.push(obs.purity);
        trace.norm_drift.push((obs.norm - 1.0).abs());
        trace.top_occupation.push(obs.top_occupation);
        trace.field_mean.push(obs.field_mean);
        trace.photon_number.push(obs.photon_number);
        trace.energy.push(h.expectation(psi));
        Ok(())
    })?;
    Ok(trace)
}

/// States at the given non-decreasing times, with the same reflection checks as [`evolve`].
pub fn states_at(config: &FockConfig, p: &Vector3<f64>, times: &[f64]) -> Result<Vec<DVector<Complex64>>, OracleError> {
    check_polarization(p)?;
    let h = build_hamiltonian(config)?;
    let (psi0, _) = initial_state(config, p);
    let mut out = Vec::with_capacity(times.len());
    propagate(&h, &psi0, times, Method::Auto, |_, t, psi| {
        check(t, &observables(psi))?;
        out.push(psi.clone());
        Ok(())
    })?;
    Ok(out)
}

pub(crate) fn check_polarization(p: &Vector3<f64>) -> Result<(), OracleError> {
    if (p.norm() - 1.0).abs() > 1e-12 {
        return Err(OracleError::InvalidParameter(format!(
            "polarization must be a unit vector, |p| = {}",
            p.norm()
        )));
    }
    Ok(())
}
