use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;
use rabi_lab::floquet::{
    build_generator, monodromy_oracle, rotation_angle, solve_floquet, FloquetParams, Mode,
};
use rabi_lab::resonances::{find_resonance, ResonanceKind};
use std::f64::consts::PI;

const MUS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];
const DELTAS: [f64; 3] = [-0.1, 0.0, 0.1];

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[test]
fn monodromy_phase_matches_rabi_frequency_on_grid() {
    for mu in MUS {
        for delta in DELTAS {
            let p = FloquetParams::new(delta, mu);
            let sol = solve_floquet(&p).unwrap();
            let m = monodromy_oracle(&p, 2.0 * PI, 64).unwrap();
            let angle = rotation_angle(&m);
            let want = 2.0 * PI * sol.rabi_frequency;
            assert!((angle - want).abs() < 1e-8, "mu {mu} delta {delta}: {angle} vs {want}");
        }
    }
}

#[test]
fn rotation_matches_integration_on_grid() {
    for mu in MUS {
        for delta in DELTAS {
            let p = FloquetParams::new(delta, mu);
            let sol = solve_floquet(&p).unwrap();
            for j in 1..=16 {
                let t = 0.83 * j as f64;
                let direct = monodromy_oracle(&p, t, 32).unwrap();
                let err = max_abs(&(sol.o_matrix(t) - direct));
                assert!(err < 1e-7, "mu {mu} delta {delta} t {t}: {err:e}");
            }
        }
    }
}

#[test]
fn rotation_at_t_2_5() {
    let p = FloquetParams::new(0.0, 0.3);
    let sol = solve_floquet(&p).unwrap();
    let direct = monodromy_oracle(&p, 2.5, 16).unwrap();
    assert!(max_abs(&(sol.o_matrix(2.5) - direct)) < 1e-7);
}

#[test]
fn generator_eigenvalue_matches_monodromy_logarithm() {
    let p = FloquetParams::new(0.05, 0.3);
    let g = build_generator(&p).unwrap();
    let eig = SymmetricEigen::new(g.hermitian());
    let angle = rotation_angle(&monodromy_oracle(&p, 2.0 * PI, 64).unwrap()) / (2.0 * PI);
    let nearest = eig
        .eigenvalues
        .iter()
        .map(|e| (e - angle).abs())
        .fold(f64::INFINITY, f64::min);
    assert!(nearest < 1e-8);
}

#[test]
fn strong_drive_monodromy_example() {
    let p = FloquetParams::new(0.0, 0.5);
    let sol = solve_floquet(&p).unwrap();
    let angle = rotation_angle(&monodromy_oracle(&p, 2.0 * PI, 64).unwrap());
    assert!((angle - 2.0 * PI * sol.rabi_frequency).abs() < 1e-8);
}

#[test]
fn generator_spectrum_is_imaginary() {
    let g = build_generator(&FloquetParams::new(0.0, 0.2)).unwrap();
    let eig = nalgebra::Schur::new(g.matrix.clone()).eigenvalues().unwrap();
    assert!(eig.iter().all(|l| l.re.abs() < 1e-10));
}

#[test]
fn truncation_is_converged() {
    for mu in MUS {
        for delta in DELTAS {
            let a = solve_floquet(&FloquetParams::new(delta, mu).with_n_max(8)).unwrap();
            let b = solve_floquet(&FloquetParams::new(delta, mu).with_n_max(12)).unwrap();
            let gap = (a.rabi_frequency - b.rabi_frequency).abs();
            assert!(gap < 1e-10, "mu {mu} delta {delta}: {gap:e}");
        }
    }
}

#[test]
fn minus_mode_is_conjugate_of_plus_mode() {
    for (delta, mu) in [(0.0, 0.3), (0.07, 0.45), (-0.1, 0.1)] {
        let sol = solve_floquet(&FloquetParams::new(delta, mu)).unwrap();
        for j in 0..64 {
            let t = 2.0 * PI * j as f64 / 64.0 + 0.1;
            let d = sol.mode(Mode::Minus, t) - sol.mode(Mode::Plus, t).conjugate();
            assert!(d.norm() < 1e-9);
        }
    }
}

#[test]
fn frequency_scaling() {
    let c = 2.0;
    for (delta, mu) in [(0.05, 0.3), (-0.02, 0.1)] {
        let a = solve_floquet(&FloquetParams::new(delta, mu)).unwrap();
        let b = solve_floquet(&FloquetParams::new(c * delta, c * mu).with_omega(c)).unwrap();
        assert!((b.rabi_frequency - c * a.rabi_frequency).abs() < 1e-9);
        for mode in Mode::ALL {
            for (x, y) in a.fourier_table(mode).iter().zip(b.fourier_table(mode)) {
                assert!((x - y).norm() < 1e-9);
            }
        }
        assert!(max_abs(&(a.o_matrix(1.3) - b.o_matrix(1.3 / c))) < 1e-9);
    }
}

#[test]
fn small_drive_rabi_frequency() {
    let sol = solve_floquet(&FloquetParams::new(0.05, 0.05)).unwrap();
    let rwa = 0.05f64.hypot(0.05);
    assert!((rwa - 0.070711).abs() < 1e-6);
    assert!((sol.rabi_frequency / rwa - 1.0).abs() < 4.0 * 0.05 * 0.05);
}

#[test]
fn bloch_siegert_rabi_frequency() {
    let r = find_resonance(ResonanceKind::BS, 0.4, None).unwrap();
    let sol = solve_floquet(&FloquetParams::new(r.delta_res, 0.4)).unwrap();
    assert!((sol.rabi_frequency / 0.4 - 0.99).abs() < 2e-3);
}

#[test]
fn rotating_wave_long_time_population() {
    let sol = solve_floquet(&FloquetParams::new(0.02, 0.02)).unwrap();
    let avg: f64 = (0..256).map(|j| sol.q_matrix(2.0 * PI * j as f64 / 256.0)[(2, 2)]).sum::<f64>() / 256.0;
    assert!((avg - 0.5).abs() < 5e-3, "{avg}");
}

#[test]
fn long_time_matrix_is_periodic_rank_one() {
    let sol = solve_floquet(&FloquetParams::new(0.03, 0.4)).unwrap();
    for t in [0.0, 1.0, 4.4] {
        let q = sol.q_matrix(t);
        assert!(max_abs(&(q - sol.q_matrix(t + 2.0 * PI))) < 1e-12);
        let sv = q.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[1] < 1e-9);
    }
}

#[test]
fn rotation_is_invariant_under_mode_rescaling() {
    let sol = solve_floquet(&FloquetParams::new(0.04, 0.35)).unwrap();
    let scales = [
        Complex64::from_polar(2.7, 0.4),
        Complex64::from_polar(0.3, -2.0),
        Complex64::from_polar(1.9, 1.1),
    ];
    let rescale = |m: Matrix3<Complex64>| {
        let mut m = m;
        for (k, s) in scales.iter().enumerate() {
            let col = m.column(k) * *s;
            m.set_column(k, &col);
        }
        m
    };
    let r0 = rescale(sol.r0_matrix);
    let r0_inv = r0.try_inverse().unwrap();
    for t in [0.5, 3.0, 17.0] {
        let phases = Matrix3::from_diagonal(&Vector3::new(
            Complex64::cis(-sol.rabi_frequency * t),
            Complex64::new(1.0, 0.0),
            Complex64::cis(sol.rabi_frequency * t),
        ));
        let o = rescale(sol.mode_matrix(t)) * phases * r0_inv;
        let err = (o.map(|z| z.re) - sol.o_matrix(t)).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        assert!(err < 1e-12);
        assert!(o.iter().all(|z| z.im.abs() < 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotation_is_orthogonal(delta in -0.15f64..0.15, mu in 0.0f64..0.5, t in 0.0f64..200.0) {
        let sol = solve_floquet(&FloquetParams::new(delta, mu));
        prop_assume!(sol.is_ok());
        let o = sol.unwrap().o_matrix(t);
        prop_assert!(max_abs(&(o.transpose() * o - Matrix3::identity())) < 1e-8);
        prop_assert!((o.determinant() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_mode_is_real_and_frequency_vanishes(delta in -0.15f64..0.15, mu in 0.01f64..0.5, t in 0.0f64..10.0) {
        let sol = solve_floquet(&FloquetParams::new(delta, mu));
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        prop_assert!(sol.zero_mode_frequency.abs() < 1e-8);
        prop_assert!(sol.mode(Mode::Zero, t).iter().all(|z| z.im.abs() < 1e-12));
        prop_assert!(sol.r0_condition < 1e8);
    }
}
