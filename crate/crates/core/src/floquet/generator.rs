use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FloquetError, FloquetParams};

/// Fourier-space generator `L` of the precession flow, truncated to
/// `|n| <= n_max`.
///
/// Rows and columns are indexed by `(n, a)` with `n ∈ [-n_max, n_max]` and
/// polarization axis `a ∈ {0, 1, 2}` (axes 1, 2, 3). The Floquet condition
/// reads `L r̃_k = iΩ_k r̃_k`.
#[derive(Debug, Clone)]
pub struct TruncatedGenerator {
    pub n_max: usize,
    pub matrix: DMatrix<Complex64>,
}

impl TruncatedGenerator {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Flat index of Fourier block `n` and axis `a`.
    pub fn index(&self, n: i64, a: usize) -> usize {
        block_index(self.n_max, n, a)
    }

    pub fn entry(&self, (n, a): (i64, usize), (m, b): (i64, usize)) -> Complex64 {
        self.matrix[(self.index(n, a), self.index(m, b))]
    }

    /// The Hermitian matrix `-iL`; its eigenvalues are the quasi-frequencies.
    pub fn hermitian(&self) -> DMatrix<Complex64> {
        self.matrix.map(|z| Complex64::new(z.im, -z.re))
    }

    /// `max |L + L†|`, zero for an exactly anti-Hermitian generator.
    pub fn anti_hermitian_defect(&self) -> f64 {
        let sum = &self.matrix + self.matrix.adjoint();
        sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn block_index(n_max: usize, n: i64, a: usize) -> usize {
    debug_assert!(a < 3 && n.unsigned_abs() as usize <= n_max);
    (n + n_max as i64) as usize * 3 + a
}

/// Builds `L` by Fourier expansion of `ds/dt = 2h∧s`.
///
/// With `r(t) = Σ_n r̃_n e^{-inωt}`, the components give
/// `ds₁/dt = -ν s₂`, `ds₂/dt = ν s₁ - 2μ cos(ωt) s₃`, `ds₃/dt = 2μ cos(ωt) s₂`,
/// and `2 cos ωt` shifts the Fourier index by ±1.
pub fn build_generator(params: &FloquetParams) -> Result<TruncatedGenerator, FloquetError> {
    params.validate()?;
    let n_max = params.n_max;
    let nm = n_max as i64;
    let dim = 3 * (2 * n_max + 1);
    let nu = params.nu();
    let mu = params.mu;
    let mut l = DMatrix::<Complex64>::zeros(dim, dim);
    let idx = |n: i64, a: usize| block_index(n_max, n, a);

    for n in -nm..=nm {
        for a in 0..3 {
            l[(idx(n, a), idx(n, a))] = Complex64::new(0.0, params.omega * n as f64);
        }
        l[(idx(n, 0), idx(n, 1))] = Complex64::new(-nu, 0.0);
        l[(idx(n, 1), idx(n, 0))] = Complex64::new(nu, 0.0);
        for m in [n - 1, n + 1] {
            if m.abs() > nm {
                continue;
            }
            l[(idx(n, 1), idx(m, 2))] = Complex64::new(-mu, 0.0);
            l[(idx(n, 2), idx(m, 1))] = Complex64::new(mu, 0.0);
        }
    }

    Ok(TruncatedGenerator { n_max, matrix: l })
}
