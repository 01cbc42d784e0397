use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use super::generator::{block_index, build_generator, TruncatedGenerator};
use super::{
    FloquetError, FloquetParams, CONDITION_LIMIT, CONVERGENCE_TOL, REALNESS_TOL, ZONE_LIMIT,
};

/// Eigenvalues closer than this (in units of ω) are treated as degenerate.
const DEGENERATE_TOL: f64 = 1e-9;
/// Components below this magnitude are not used to fix phases.
const PHASE_FLOOR: f64 = 1e-12;

/// One of the three physical polarization modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Minus,
    Zero,
    Plus,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Minus, Mode::Zero, Mode::Plus];

    pub fn k(self) -> i32 {
        match self {
            Mode::Minus => -1,
            Mode::Zero => 0,
            Mode::Plus => 1,
        }
    }

    /// Column of `r(0)` (and row of its inverse) holding this mode.
    pub fn column(self) -> usize {
        (self.k() + 1) as usize
    }
}

/// Solved Floquet problem: quasi-frequencies, Fourier tables of the periodic
/// parts `r_k(t)`, and the matrix `r(0)` with its inverse.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    pub params: FloquetParams,
    /// Ω = Ω₁ = -Ω₋₁, folded into `(0, ω/2]` (zero only without drive at exact resonance).
    pub rabi_frequency: f64,
    /// Eigenvalue of the k = 0 mode; zero up to rounding.
    pub zero_mode_frequency: f64,
    fourier: [Vec<Vector3<Complex64>>; 3],
    /// `r_{ak}(0)`, columns ordered k = -1, 0, 1.
    pub r0_matrix: Matrix3<Complex64>,
    /// Inverse of `r0_matrix`; row k holds `r⁻¹_{kb}`.
    pub r0_inverse: Matrix3<Complex64>,
    pub r0_condition: f64,
    /// `|Ω(n_max) - Ω(n_max - 2)|`; `None` when `n_max < 3`.
    pub convergence_gap: Option<f64>,
    /// Largest `|Re λ|` among the selected modes (Rayleigh quotients of `L`).
    pub max_real_part: f64,
}

/// Diagonalizes the truncated generator and selects the three physical modes.
///
/// Mode k = 0 is the eigenvalue of smallest modulus; k = ±1 are the next two,
/// which must form a `±Ω` pair inside `(-ω/2, ω/2]`. Tables are phase-fixed so
/// that `r_0(t)` is real with `r_0(0)·e₁ ≥ 0`, and `r_{±1}(0)·e₁` is real
/// positive; everything downstream is invariant under these choices.
pub fn solve_floquet(params: &FloquetParams) -> Result<FloquetSolution, FloquetError> {
    let mut sol = solve_truncated(params)?;
    if params.n_max >= 3 {
        let lower = identify(&spectrum(&params.with_n_max(params.n_max - 2))?.0, params)?;
        let gap = (sol.rabi_frequency - lower.rabi_frequency).abs();
        sol.convergence_gap = Some(gap);
        if gap > CONVERGENCE_TOL {
            return Err(FloquetError::NotConverged { gap });
        }
    }
    Ok(sol)
}

struct Selection {
    zero: usize,
    plus: usize,
    minus: usize,
    rabi_frequency: f64,
    degenerate: bool,
}

fn spectrum(params: &FloquetParams) -> Result<(Vec<f64>, DMatrix<Complex64>, TruncatedGenerator), FloquetError> {
    let gen = build_generator(params)?;
    let eig = SymmetricEigen::new(gen.hermitian());
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors, gen))
}

fn identify(values: &[f64], params: &FloquetParams) -> Result<Selection, FloquetError> {
    let omega = params.omega;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs()).then(i.cmp(&j)));
    let (a, b, c) = (order[0], order[1], order[2]);

    if values[c].abs() < DEGENERATE_TOL * omega {
        if params.mu != 0.0 {
            return Err(FloquetError::ModeIdentification(
                "triple-degenerate zero quasi-frequency with nonzero drive".into(),
            ));
        }
        return Ok(Selection {
            zero: a,
            plus: b,
            minus: c,
            rabi_frequency: 0.0,
            degenerate: true,
        });
    }

    let (plus, minus) = match (values[b] > 0.0, values[c] > 0.0) {
        (true, false) => (b, c),
        (false, true) => (c, b),
        _ => {
            let rabi = values[b].abs().max(values[c].abs());
            if rabi > ZONE_LIMIT * omega {
                return Err(FloquetError::NearZoneBoundary { rabi_frequency: rabi });
            }
            return Err(FloquetError::ModeIdentification(format!(
                "expected a ±Omega pair next to the zero mode, found {} and {}",
                values[b], values[c]
            )));
        }
    };
    let rabi = values[plus];
    if rabi > ZONE_LIMIT * omega {
        return Err(FloquetError::NearZoneBoundary { rabi_frequency: rabi });
    }
    if (values[plus] + values[minus]).abs() > 1e-8 * omega {
        return Err(FloquetError::ModeIdentification(format!(
            "quasi-frequencies {} and {} are not a conjugate pair",
            values[plus], values[minus]
        )));
    }
    Ok(Selection {
        zero: a,
        plus,
        minus,
        rabi_frequency: rabi,
        degenerate: false,
    })
}

fn solve_truncated(params: &FloquetParams) -> Result<FloquetSolution, FloquetError> {
    let (values, vectors, gen) = spectrum(params)?;
    let sel = identify(&values, params)?;
    let n_max = params.n_max;

    let (mut zero, mut plus, mut minus, max_real_part) = if sel.degenerate {
        free_precession_tables(params)?
    } else {
        let mut worst: f64 = 0.0;
        for &j in &[sel.zero, sel.plus, sel.minus] {
            let v = vectors.column(j);
            let lambda = v.dotc(&(&gen.matrix * v));
            worst = worst.max(lambda.re.abs());
        }
        (
            table_from(&vectors, sel.zero, n_max),
            table_from(&vectors, sel.plus, n_max),
            table_from(&vectors, sel.minus, n_max),
            worst,
        )
    };
    if max_real_part > REALNESS_TOL * params.omega {
        return Err(FloquetError::NonImaginarySpectrum {
            real_part: max_real_part,
        });
    }

    fix_zero_mode(&mut zero);
    fix_rotating_mode(&mut plus);
    fix_rotating_mode(&mut minus);

    let fourier = [minus, zero, plus];
    let r0_matrix = Matrix3::from_columns(&[
        evaluate(&fourier[0], params.omega, 0.0),
        evaluate(&fourier[1], params.omega, 0.0),
        evaluate(&fourier[2], params.omega, 0.0),
    ]);
    let singular = r0_matrix.singular_values();
    let smax = singular.max();
    let smin = singular.min();
    let r0_condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(r0_condition <= CONDITION_LIMIT) {
        return Err(FloquetError::IllConditioned {
            condition: r0_condition,
        });
    }
    let r0_inverse = r0_matrix
        .try_inverse()
        .ok_or(FloquetError::IllConditioned {
            condition: f64::INFINITY,
        })?;

    Ok(FloquetSolution {
        params: *params,
        rabi_frequency: sel.rabi_frequency,
        zero_mode_frequency: if sel.degenerate { 0.0 } else { values[sel.zero] },
        fourier,
        r0_matrix,
        r0_inverse,
        r0_condition,
        convergence_gap: None,
        max_real_part,
    })
}

fn table_from(vectors: &DMatrix<Complex64>, col: usize, n_max: usize) -> Vec<Vector3<Complex64>> {
    let nm = n_max as i64;
    (-nm..=nm)
        .map(|n| {
            Vector3::from_fn(|a, _| vectors[(block_index(n_max, n, a), col)])
        })
        .collect()
}

/// Exact modes without drive when ν is a multiple of ω and all three
/// quasi-frequencies vanish: `r_0 = e₃`, `r_{±1} = (1, ∓i, 0)/√2` at the
/// Fourier index that absorbs `e^{±iνt}`.
type Tables = (
    Vec<Vector3<Complex64>>,
    Vec<Vector3<Complex64>>,
    Vec<Vector3<Complex64>>,
    f64,
);

fn free_precession_tables(params: &FloquetParams) -> Result<Tables, FloquetError> {
    let n_max = params.n_max;
    let width = 2 * n_max + 1;
    let m = (params.nu() / params.omega).round() as usize;
    if m > n_max {
        return Err(FloquetError::ModeIdentification(format!(
            "free precession harmonic {m} exceeds n_max = {n_max}"
        )));
    }
    let zero_c = Complex64::new(0.0, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut zero = vec![Vector3::from_element(zero_c); width];
    let mut plus = zero.clone();
    let mut minus = zero.clone();
    zero[n_max] = Vector3::new(zero_c, zero_c, Complex64::new(1.0, 0.0));
    plus[n_max - m] = Vector3::new(Complex64::new(s, 0.0), Complex64::new(0.0, -s), zero_c);
    minus[n_max + m] = Vector3::new(Complex64::new(s, 0.0), Complex64::new(0.0, s), zero_c);
    Ok((zero, plus, minus, 0.0))
}

fn evaluate(table: &[Vector3<Complex64>], omega: f64, t: f64) -> Vector3<Complex64> {
    let n_max = (table.len() / 2) as i64;
    let mut acc = Vector3::from_element(Complex64::new(0.0, 0.0));
    for (i, coeff) in table.iter().enumerate() {
        let n = i as i64 - n_max;
        acc += coeff * Complex64::cis(-(n as f64) * omega * t);
    }
    acc
}

fn scale(table: &mut [Vector3<Complex64>], factor: Complex64) {
    for v in table.iter_mut() {
        *v *= factor;
    }
}

fn fix_zero_mode(table: &mut [Vector3<Complex64>]) {
    let at0: Vector3<Complex64> = table.iter().sum();
    let (idx, _) = at0
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let z = at0[idx];
    if z.norm() > 0.0 {
        scale(table, z.conj() / z.norm());
    }
    let at0: Vector3<Complex64> = table.iter().sum();
    let sign = if at0[0].re.abs() > PHASE_FLOOR {
        at0[0].re.signum()
    } else if at0[2].re.abs() > PHASE_FLOOR {
        at0[2].re.signum()
    } else {
        1.0
    };
    if sign < 0.0 {
        scale(table, Complex64::new(-1.0, 0.0));
    }
}

fn fix_rotating_mode(table: &mut [Vector3<Complex64>]) {
    let at0: Vector3<Complex64> = table.iter().sum();
    let z = if at0[0].norm() > PHASE_FLOOR {
        at0[0]
    } else if at0[1].norm() > PHASE_FLOOR {
        at0[1]
    } else {
        *at0.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap()
    };
    if z.norm() > 0.0 {
        scale(table, z.conj() / z.norm());
    }
}

impl FloquetSolution {
    pub fn n_max(&self) -> usize {
        self.params.n_max
    }

    /// Quasi-frequency `Ω_k = kΩ`.
    pub fn quasi_frequency(&self, mode: Mode) -> f64 {
        mode.k() as f64 * self.rabi_frequency
    }

    /// Fourier table of `r_k`, ordered `n = -n_max ..= n_max`.
    pub fn fourier_table(&self, mode: Mode) -> &[Vector3<Complex64>] {
        &self.fourier[mode.column()]
    }

    /// `r̃_{k,na}` with axis `a ∈ {0, 1, 2}`; zero outside the truncation.
    pub fn fourier_coefficient(&self, mode: Mode, n: i64, a: usize) -> Complex64 {
        let nm = self.n_max() as i64;
        if n.abs() > nm {
            return Complex64::new(0.0, 0.0);
        }
        self.fourier[mode.column()][(n + nm) as usize][a]
    }

    /// Periodic part `r_k(t)`.
    pub fn mode(&self, mode: Mode, t: f64) -> Vector3<Complex64> {
        evaluate(&self.fourier[mode.column()], self.params.omega, t)
    }

    /// `r_{ak}(t)` with columns ordered k = -1, 0, 1.
    pub fn mode_matrix(&self, t: f64) -> Matrix3<Complex64> {
        Matrix3::from_columns(&[
            self.mode(Mode::Minus, t),
            self.mode(Mode::Zero, t),
            self.mode(Mode::Plus, t),
        ])
    }

    /// Row k of `r(0)⁻¹`.
    pub fn inverse_row(&self, mode: Mode) -> Vector3<Complex64> {
        self.r0_inverse.row(mode.column()).transpose()
    }

    /// `‖r₀⁻¹‖ = (Σ_b (r⁻¹_{0b})²)^{1/2}`.
    pub fn zero_mode_inverse_norm(&self) -> f64 {
        self.inverse_row(Mode::Zero).map(|z| z.re).norm()
    }

    /// Inverse of the mode matrix `r(u)`; `u = 0` gives `r0_inverse`.
    pub fn mode_matrix_inverse(&self, u: f64) -> Result<Matrix3<Complex64>, FloquetError> {
        if u == 0.0 {
            return Ok(self.r0_inverse);
        }
        self.mode_matrix(u)
            .try_inverse()
            .ok_or(FloquetError::IllConditioned {
                condition: f64::INFINITY,
            })
    }

    /// Unit polarization axis `r_0(t)/|r_0(t)|` of the k = 0 mode.
    pub fn axis(&self, t: f64) -> Vector3<f64> {
        self.mode(Mode::Zero, t).map(|z| z.re).normalize()
    }

    /// `O(t) = Σ_k e^{iΩ_k t} r_k(t) r⁻¹_k` before discarding the imaginary part.
    pub fn o_matrix_complex(&self, t: f64) -> Matrix3<Complex64> {
        let phases = Matrix3::from_diagonal(&Vector3::new(
            Complex64::cis(-self.rabi_frequency * t),
            Complex64::new(1.0, 0.0),
            Complex64::cis(self.rabi_frequency * t),
        ));
        self.mode_matrix(t) * phases * self.r0_inverse
    }

    /// Rotation `O(t)` taking the polarization at time 0 to time t.
    pub fn o_matrix(&self, t: f64) -> Matrix3<f64> {
        let o = self.o_matrix_complex(t);
        debug_assert!(
            o.iter().all(|z| z.im.abs() < 1e-9),
            "O(t) has imaginary residue"
        );
        o.map(|z| z.re)
    }

    /// `Q_{ab}(t) = r_{a0}(t) r⁻¹_{0b}`, the non-dephasing part of `O`.
    pub fn q_matrix(&self, t: f64) -> Matrix3<f64> {
        (self.mode(Mode::Zero, t) * self.inverse_row(Mode::Zero).transpose()).map(|z| z.re)
    }
}
