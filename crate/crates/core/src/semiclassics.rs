//! Wave-packet averages of the Floquet flow: collapsing polarization traces,
//! the purity monotone, and splitting of the field packet into two fragments.
//!
//! A packet is centered at `ζ̄ = |ζ̄| e^{iφ}` with spread set by `ε = 1/n̄`.
//! The Floquet solution is the φ = 0 one at `μ = λ|ζ̄|`; a nonzero phase
//! enters as the time shift `u = φ/ω`, so the polarization at time t is
//! `Σ_k r_k(t - u) e^{iΩ_k t} [r(-u)⁻¹ p]_k`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{FloquetError, FloquetSolution, Mode};
use crate::resonances::{rabi_frequency_slope, ResonanceError};

/// Smallest `|∂_μΩ|` for which a collapse time is defined.
pub const SLOPE_FLOOR: f64 = 1e-10;
/// Smallest accepted denominator in the subleading symbol.
pub const SMALL_DENOMINATOR: f64 = 1e-6;

const UNIT_TOL: f64 = 1e-12;
const COEFF_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiclassicsError {
    #[error(transparent)]
    Floquet(FloquetError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("|dOmega/dmu| = {slope:e} is below 1e-10; the packet does not collapse")]
    DegenerateCollapse { slope: f64 },
    #[error("denominator k Omega - (n-1) omega = {value:e} for k = {k}, n = {n}")]
    SmallDenominator { k: i32, n: i64, value: f64 },
    #[error("finite-difference derivative failed: {0}")]
    DerivativeStep(String),
}

impl SemiclassicsError {
    pub fn name(&self) -> &'static str {
        match self {
            SemiclassicsError::Floquet(e) => e.name(),
            SemiclassicsError::InvalidParameter(_) => "InvalidParameter",
            SemiclassicsError::DegenerateCollapse { .. } => "DegenerateCollapse",
            SemiclassicsError::SmallDenominator { .. } => "SmallDenominator",
            SemiclassicsError::DerivativeStep(_) => "DerivativeStep",
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            SemiclassicsError::Floquet(e) => e.is_validation(),
            SemiclassicsError::InvalidParameter(_) => true,
            _ => false,
        }
    }
}

impl From<FloquetError> for SemiclassicsError {
    fn from(e: FloquetError) -> Self {
        SemiclassicsError::Floquet(e)
    }
}

impl From<ResonanceError> for SemiclassicsError {
    fn from(e: ResonanceError) -> Self {
        match e {
            ResonanceError::Floquet(f) => SemiclassicsError::Floquet(f),
            ResonanceError::InvalidParameter(s) => SemiclassicsError::InvalidParameter(s),
            other => SemiclassicsError::DerivativeStep(other.to_string()),
        }
    }
}

/// Distribution `w(x)` of the radial offset `x = |ζ| - |ζ̄|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialProfile {
    Gaussian { sigma: f64 },
    /// Samples of `w` on an increasing grid; normalized on use.
    Tabulated { x: Vec<f64>, w: Vec<f64> },
}

impl RadialProfile {
    /// Standard deviation of the offset.
    pub fn sigma(&self) -> f64 {
        match self {
            RadialProfile::Gaussian { sigma } => *sigma,
            RadialProfile::Tabulated { x, w } => {
                let m0 = trapezoid(x, |i| w[i]);
                let m1 = trapezoid(x, |i| w[i] * x[i]) / m0;
                (trapezoid(x, |i| w[i] * (x[i] - m1).powi(2)) / m0).sqrt()
            }
        }
    }

    /// Characteristic function `∫ w(x) e^{iτx} dx`.
    pub fn characteristic(&self, tau: f64) -> Complex64 {
        match self {
            RadialProfile::Gaussian { sigma } => Complex64::new((-0.5 * (sigma * tau).powi(2)).exp(), 0.0),
            RadialProfile::Tabulated { x, w } => {
                let m0 = trapezoid(x, |i| w[i]);
                let re = trapezoid(x, |i| w[i] * (tau * x[i]).cos());
                let im = trapezoid(x, |i| w[i] * (tau * x[i]).sin());
                Complex64::new(re, im) / m0
            }
        }
    }

    fn validate(&self) -> Result<(), SemiclassicsError> {
        match self {
            RadialProfile::Gaussian { sigma } if sigma.is_finite() && *sigma > 0.0 => Ok(()),
            RadialProfile::Gaussian { sigma } => Err(SemiclassicsError::InvalidParameter(format!(
                "radial sigma must be positive, got {sigma}"
            ))),
            RadialProfile::Tabulated { x, w } => {
                if x.len() < 3 || x.len() != w.len() {
                    return Err(SemiclassicsError::InvalidParameter(
                        "tabulated profile needs at least 3 matching (x, w) samples".into(),
                    ));
                }
                if x.windows(2).any(|p| !(p[0] < p[1])) || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(SemiclassicsError::InvalidParameter(
                        "tabulated profile needs increasing x and non-negative w".into(),
                    ));
                }
                if !(self.sigma() > 0.0) {
                    return Err(SemiclassicsError::InvalidParameter(
                        "tabulated profile has zero width".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn trapezoid(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..x.len()).map(|i| 0.5 * (x[i] - x[i - 1]) * (f(i) + f(i - 1))).sum()
}

/// Product state of an excited field packet and a pure qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    /// Scaled field center ζ̄; `|ζ̄| = 1` by default.
    pub zeta_bar: Complex64,
    /// ε = 1/n̄.
    pub epsilon: f64,
    pub radial: RadialProfile,
    /// Initial Bloch vector p.
    pub polarization: Vector3<f64>,
}

impl WavePacket {
    /// Coherent-state packet with radial spread `√ε/2`.
    pub fn coherent(zeta_bar: Complex64, epsilon: f64, polarization: Vector3<f64>) -> Self {
        WavePacket {
            zeta_bar,
            epsilon,
            radial: RadialProfile::Gaussian {
                sigma: 0.5 * epsilon.sqrt(),
            },
            polarization,
        }
    }

    /// Field phase φ = arg ζ̄.
    pub fn phi(&self) -> f64 {
        self.zeta_bar.arg()
    }

    pub fn validate(&self) -> Result<(), SemiclassicsError> {
        if !(self.zeta_bar.norm() > 0.0 && self.zeta_bar.norm().is_finite()) {
            return Err(SemiclassicsError::InvalidParameter(format!(
                "zeta_bar must be finite and nonzero, got {}",
                self.zeta_bar
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.1) {
            return Err(SemiclassicsError::InvalidParameter(format!(
                "epsilon must lie in (0, 0.1], got {}",
                self.epsilon
            )));
        }
        if !((self.polarization.norm() - 1.0).abs() <= UNIT_TOL) {
            return Err(SemiclassicsError::InvalidParameter(format!(
                "polarization must be a unit vector, |p| = {}",
                self.polarization.norm()
            )));
        }
        self.radial.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationTrace {
    pub times: Vec<f64>,
    pub s_expectation: Vec<Vector3<f64>>,
    /// `|Ŵ(Ω̄' t)|`, the collapse factor of the k = ±1 terms.
    pub envelope: Vec<f64>,
    /// Reduced-qubit purity `(1 + |⟨s⟩|²)/2`.
    pub purity: Vec<f64>,
}

/// `∂Ω/∂|ζ| = (μ/|ζ̄|) ∂_μΩ` at the packet center.
pub fn rabi_frequency_gradient(sol: &FloquetSolution, packet: &WavePacket) -> Result<f64, SemiclassicsError> {
    Ok(sol.params.mu / packet.zeta_bar.norm() * rabi_frequency_slope(&sol.params)?)
}

/// Phase-space averaged polarization `⟨s⟩(t)` for the packet.
pub fn polarization_trace(
    sol: &FloquetSolution,
    packet: &WavePacket,
    times: &[f64],
) -> Result<PolarizationTrace, SemiclassicsError> {
    packet.validate()?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(SemiclassicsError::InvalidParameter(
            "times must be finite and non-negative".into(),
        ));
    }
    let slope = if sol.params.mu == 0.0 {
        0.0
    } else {
        rabi_frequency_gradient(sol, packet)?
    };
    let u = packet.phi() / sol.params.omega;
    let coeffs = sol.mode_matrix_inverse(-u)? * packet.polarization.map(|x| Complex64::new(x, 0.0));
    let omega = sol.rabi_frequency;

    let mut s_expectation = Vec::with_capacity(times.len());
    let mut envelope = Vec::with_capacity(times.len());
    let mut purity = Vec::with_capacity(times.len());
    for &t in times {
        let w = packet.radial.characteristic(slope * t);
        let r = sol.mode_matrix(t - u);
        let weights = Vector3::new(
            coeffs[0] * Complex64::cis(-omega * t) * w.conj(),
            coeffs[1],
            coeffs[2] * Complex64::cis(omega * t) * w,
        );
        let s = (r * weights).map(|z| z.re);
        purity.push(0.5 * (1.0 + s.norm_squared()));
        s_expectation.push(s);
        envelope.push(w.norm());
    }
    Ok(PolarizationTrace {
        times: times.to_vec(),
        s_expectation,
        envelope,
        purity,
    })
}

/// 1/e time `√2/(σ|Ω̄'|)` of the Gaussian collapse envelope.
pub fn collapse_time(sol: &FloquetSolution, packet: &WavePacket) -> Result<f64, SemiclassicsError> {
    packet.validate()?;
    let slope = if sol.params.mu == 0.0 {
        0.0
    } else {
        rabi_frequency_slope(&sol.params)?
    };
    if slope.abs() < SLOPE_FLOOR {
        return Err(SemiclassicsError::DegenerateCollapse { slope });
    }
    let gradient = sol.params.mu / packet.zeta_bar.norm() * slope;
    Ok(2f64.sqrt() / (packet.radial.sigma() * gradient.abs()))
}

/// Field-packet splitting: fragments at `e^{-iωt}(ζ̄ ± vt)` carrying qubit
/// polarization `±n` with weights `(1 ± p·n)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub zeta_bar: Complex64,
    /// Physical drift velocity in the rotating frame, scaled-field units per 1/ω.
    pub velocity: Complex64,
    pub direction: Vector3<f64>,
    /// `((1 + p·n)/2, (1 - p·n)/2)`.
    pub weights: (f64, f64),
    /// `|v||ζ̄|/(εμ)` normalized to 1 in the rotating-wave limit, i.e. `2|r̃_{0,1}|‖r₀⁻¹‖`.
    pub speed_ratio: f64,
    pub omega: f64,
}

impl SplitReport {
    /// Fragment centers `e^{-iωt}(ζ̄ + vt)` and `e^{-iωt}(ζ̄ - vt)`.
    pub fn fragment_centers(&self, t: f64) -> (Complex64, Complex64) {
        let rot = Complex64::cis(-self.omega * t);
        (
            rot * (self.zeta_bar + self.velocity * t),
            rot * (self.zeta_bar - self.velocity * t),
        )
    }
}

/// Physical coupling λ = μ/(2|ζ̄|) of the scaled field to the qubit.
fn coupling(sol: &FloquetSolution, packet: &WavePacket) -> f64 {
    sol.params.mu / (2.0 * packet.zeta_bar.norm())
}

pub fn splitting(sol: &FloquetSolution, packet: &WavePacket) -> Result<SplitReport, SemiclassicsError> {
    packet.validate()?;
    let phi = packet.phi();
    let u = phi / sol.params.omega;
    let row = sol.mode_matrix_inverse(-u)?.row(Mode::Zero.column()).transpose().map(|z| z.re);
    let norm = row.norm();
    let direction = row / norm;
    let r01 = sol.fourier_coefficient(Mode::Zero, 1, 0);
    let velocity = Complex64::new(0.0, -packet.epsilon * coupling(sol, packet)) * Complex64::cis(phi) * r01 * norm;
    let pn = packet.polarization.dot(&direction);
    let plus = 0.5 * (1.0 + pn);
    Ok(SplitReport {
        zeta_bar: packet.zeta_bar,
        velocity,
        direction,
        weights: (plus, 1.0 - plus),
        speed_ratio: 2.0 * r01.norm() * norm,
        omega: sol.params.omega,
    })
}

/// `z_t⁽¹⁾ = Σ_b c_b σ_b`, split into the secular term (linear in t) and the
/// bounded remainder. Both include the factor `e^{-iωt}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubleadingSymbol {
    pub t: f64,
    pub secular: Vector3<Complex64>,
    pub bounded: Vector3<Complex64>,
}

impl SubleadingSymbol {
    pub fn pauli(&self) -> Vector3<Complex64> {
        self.secular + self.bounded
    }

    /// The 2×2 qubit operator `Σ_b c_b σ_b`.
    pub fn matrix(&self) -> Matrix2<Complex64> {
        pauli_matrix(&self.pauli())
    }
}

/// `Σ_b c_b σ_b` with the standard Pauli matrices.
pub fn pauli_matrix(c: &Vector3<Complex64>) -> Matrix2<Complex64> {
    let i = Complex64::i();
    Matrix2::new(c[2], c[0] - i * c[1], c[0] + i * c[1], -c[2])
}

/// First-order field symbol `z_t⁽¹⁾ = -iλ e^{-iωt} ∫₀ᵗ s₁(t') e^{iωt'} dt'`
/// with `s₁` from the full three-mode flow, summed over the Fourier table.
pub fn subleading_symbol(
    sol: &FloquetSolution,
    packet: &WavePacket,
    t: f64,
) -> Result<SubleadingSymbol, SemiclassicsError> {
    packet.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(SemiclassicsError::InvalidParameter(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let omega = sol.params.omega;
    let u = packet.phi() / omega;
    let inv: Matrix3<Complex64> = sol.mode_matrix_inverse(-u)?;
    let prefactor = Complex64::new(0.0, -coupling(sol, packet)) * Complex64::cis(-omega * t);
    let nm = sol.n_max() as i64;

    let mut secular = Vector3::from_element(Complex64::new(0.0, 0.0));
    let mut bounded = secular;
    for mode in Mode::ALL {
        let k = mode.k();
        let row = inv.row(mode.column()).transpose();
        for n in -nm..=nm {
            let coeff = sol.fourier_coefficient(mode, n, 0) * Complex64::cis(n as f64 * omega * u);
            if coeff.norm() < COEFF_FLOOR {
                continue;
            }
            if k == 0 && n == 1 {
                secular += row * (coeff * t);
                continue;
            }
            let d = k as f64 * sol.rabi_frequency - (n - 1) as f64 * omega;
            if d.abs() < SMALL_DENOMINATOR {
                return Err(SemiclassicsError::SmallDenominator { k, n, value: d });
            }
            let integral = (Complex64::cis(d * t) - 1.0) / Complex64::new(0.0, d);
            bounded += row * (coeff * integral);
        }
    }
    Ok(SubleadingSymbol {
        t,
        secular: secular * prefactor,
        bounded: bounded * prefactor,
    })
}
