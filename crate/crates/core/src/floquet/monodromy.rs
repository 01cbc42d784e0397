use nalgebra::{Matrix3, Vector3};

use super::{FloquetError, FloquetParams};

const RTOL: f64 = 1e-13;
const ATOL: f64 = 1e-14;
const MAX_STEPS: usize = 5_000_000;

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn generator_at(params: &FloquetParams, t: f64) -> Matrix3<f64> {
    let nu = params.nu();
    let b = 2.0 * params.mu * (params.omega * t).cos();
    Matrix3::new(0.0, -nu, 0.0, nu, 0.0, -b, 0.0, b, 0.0)
}

/// Fundamental matrix of `ds/dt = 2h(t)∧s` from 0 to `t_end` (φ = 0), by
/// adaptive Dormand–Prince integration.
///
/// `steps` bounds the step size from above by `t_end / steps`; the error
/// controller works at relative tolerance 1e-13. At `t_end = 2π/ω` the result
/// is the monodromy matrix with eigenvalues `{1, e^{±iΩT}}`.
pub fn monodromy_oracle(
    params: &FloquetParams,
    t_end: f64,
    steps: usize,
) -> Result<Matrix3<f64>, FloquetError> {
    params.validate()?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(FloquetError::InvalidParameter(format!(
            "t_end must be finite and non-negative, got {t_end}"
        )));
    }
    if steps == 0 {
        return Err(FloquetError::InvalidParameter("steps must be positive".into()));
    }
    let mut y = Matrix3::<f64>::identity();
    if t_end == 0.0 {
        return Ok(y);
    }
    let h_max = t_end / steps as f64;
    let mut h = h_max.min(1e-2);
    let mut t = 0.0;
    let mut k: [Matrix3<f64>; 7] = [Matrix3::zeros(); 7];
    k[0] = generator_at(params, t) * y;
    let mut taken = 0usize;

    while t < t_end {
        if taken > MAX_STEPS {
            return Err(FloquetError::Integrator(format!(
                "exceeded {MAX_STEPS} steps at t = {t}"
            )));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    ys += kj * (h * A[s][j]);
                }
            }
            k[s] = generator_at(params, t + C[s] * h) * ys;
        }
        let mut y_new = y;
        let mut err = Matrix3::<f64>::zeros();
        for s in 0..7 {
            y_new += k[s] * (h * B[s]);
            err += k[s] * (h * E[s]);
        }
        let mut sum = 0.0;
        for i in 0..9 {
            let sc = ATOL + RTOL * y[i].abs().max(y_new[i].abs());
            sum += (err[i] / sc).powi(2);
        }
        let norm = (sum / 9.0).sqrt();
        if !norm.is_finite() {
            return Err(FloquetError::Integrator(format!("non-finite error at t = {t}")));
        }
        if norm <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k[0] = k[6];
            taken += 1;
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(h_max);
        if h < 1e-14 * t_end.max(1.0) {
            return Err(FloquetError::Integrator(format!("step size underflow at t = {t}")));
        }
    }
    Ok(y)
}

/// Rotation angle in `[0, π]` of a proper rotation matrix, from its trace
/// and antisymmetric part.
pub fn rotation_angle(m: &Matrix3<f64>) -> f64 {
    let axial = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    let sin = 0.5 * axial.norm();
    let cos = 0.5 * (m.trace() - 1.0);
    sin.atan2(cos)
}
