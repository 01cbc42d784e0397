use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use rabi_lab::floquet::{solve_floquet, FloquetParams, FloquetSolution};
use rabi_lab::semiclassics::{
    collapse_time, polarization_trace, splitting, subleading_symbol, WavePacket,
};
use std::f64::consts::PI;

fn packet(phi: f64, epsilon: f64, p: Vector3<f64>) -> WavePacket {
    WavePacket::coherent(Complex64::from_polar(1.0, phi), epsilon, p)
}

fn tilted() -> Vector3<f64> {
    Vector3::new(0.3, -0.5, 0.8).normalize()
}

/// Classical RK4 for ds/dt = 2h∧s with h = (μ cos(ωt - φ), 0, ν/2).
fn integrate(params: &FloquetParams, phi: f64, s0: Vector3<f64>, t_end: f64) -> Vector3<f64> {
    let rhs = |t: f64, s: &Vector3<f64>| {
        let h = Vector3::new(params.mu * (t - phi).cos(), 0.0, 0.5 * params.nu());
        2.0 * h.cross(s)
    };
    let steps = (t_end / 1e-3).ceil() as usize;
    let dt = t_end / steps as f64;
    let mut s = s0;
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = rhs(t, &s);
        let k2 = rhs(t + 0.5 * dt, &(s + k1 * (0.5 * dt)));
        let k3 = rhs(t + 0.5 * dt, &(s + k2 * (0.5 * dt)));
        let k4 = rhs(t + dt, &(s + k3 * dt));
        s += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
    }
    s
}

fn solution(delta: f64, mu: f64) -> FloquetSolution {
    solve_floquet(&FloquetParams::new(delta, mu)).unwrap()
}

#[test]
fn starts_at_initial_polarization() {
    let sol = solution(0.03, 0.25);
    for phi in [0.0, 1.1, -2.5] {
        let pk = packet(phi, 0.01, tilted());
        let tr = polarization_trace(&sol, &pk, &[0.0]).unwrap();
        assert!((tr.s_expectation[0] - tilted()).norm() < 1e-12);
        assert_eq!(tr.envelope[0], 1.0);
    }
}

#[test]
fn follows_the_classical_flow_at_any_field_phase() {
    let sol = solution(0.05, 0.3);
    for phi in [0.0, 0.7, 2.9] {
        let pk = packet(phi, 1e-14, tilted());
        let t = 7.3;
        let tr = polarization_trace(&sol, &pk, &[t]).unwrap();
        let want = integrate(&sol.params, phi, tilted(), t);
        assert!((tr.s_expectation[0] - want).norm() < 1e-9, "phi {phi}: {} vs {}", tr.s_expectation[0], want);
    }
}

#[test]
fn short_and_long_time_limits() {
    let sol = solution(0.0, 0.1);
    let pk = packet(0.0, 0.01, Vector3::z());
    let tc = collapse_time(&sol, &pk).unwrap();
    let times: Vec<f64> = (0..4000).map(|i| i as f64 * 0.5).collect();
    let tr = polarization_trace(&sol, &pk, &times).unwrap();
    let mut short = 0;
    let mut long = 0;
    for ((t, s), env) in times.iter().zip(&tr.s_expectation).zip(&tr.envelope) {
        let o = sol.o_matrix(*t) * pk.polarization;
        let q = sol.q_matrix(*t) * pk.polarization;
        if *env > 0.99 {
            assert!((s - o).norm() < 1e-2);
            short += 1;
        }
        if *env < 1e-3 {
            assert!((s - q).norm() < 1e-3);
            long += 1;
        }
        assert!((s - o).norm() <= 1.0 - env + 1e-9);
        assert!((s - q).norm() <= env + 1e-9);
    }
    assert!(short > 10 && long > 10, "{short} {long} tc={tc}");
}

#[test]
fn purity_and_norm_bounds() {
    let sol = solution(-0.02, 0.35);
    let pk = packet(0.4, 0.02, tilted());
    let times: Vec<f64> = (0..500).map(|i| i as f64 * 1.7).collect();
    let tr = polarization_trace(&sol, &pk, &times).unwrap();
    for (s, pur) in tr.s_expectation.iter().zip(&tr.purity) {
        assert!(s.norm() <= 1.0 + 1e-9);
        assert_eq!(*pur, 0.5 * (1.0 + s.norm_squared()));
        assert!(*pur >= 0.5 - 1e-9 && *pur <= 1.0 + 1e-9);
    }
}

#[test]
fn collapse_time_scales_as_inverse_root_epsilon() {
    let sol = solution(0.0, 0.1);
    let a = collapse_time(&sol, &packet(0.0, 0.02, Vector3::z())).unwrap();
    let b = collapse_time(&sol, &packet(0.0, 0.01, Vector3::z())).unwrap();
    assert!((b / a - 2f64.sqrt()).abs() < 1e-6);
    // |∂_μΩ| ≈ 1 at resonance: t_c ≈ √2/((√ε/2) μ) = 283
    assert!((b - 282.8).abs() < 1.0, "{b}");
}

#[test]
fn envelope_is_one_over_e_at_collapse_time() {
    let sol = solution(0.01, 0.2);
    let pk = packet(0.0, 0.01, Vector3::z());
    let tc = collapse_time(&sol, &pk).unwrap();
    let tr = polarization_trace(&sol, &pk, &[tc]).unwrap();
    assert!((tr.envelope[0] - (-1f64).exp()).abs() < 1e-12);
}

#[test]
fn long_time_polarization_is_field_periodic() {
    let sol = solution(0.04, 0.3);
    let pk = packet(0.3, 0.01, tilted());
    let tc = collapse_time(&sol, &pk).unwrap();
    let t = 10.0 * tc;
    let tr = polarization_trace(&sol, &pk, &[t, t + 2.0 * PI]).unwrap();
    assert!((tr.s_expectation[0] - tr.s_expectation[1]).norm() < 1e-6);
}

#[test]
fn equal_weights_and_unit_speed_in_rotating_wave_limit() {
    let sol = solution(0.0, 0.02);
    let rep = splitting(&sol, &packet(0.0, 0.01, Vector3::z())).unwrap();
    assert!((rep.weights.0 - 0.5).abs() < 1e-2 && (rep.weights.1 - 0.5).abs() < 1e-2);
    assert!((rep.speed_ratio - 1.0).abs() < 1e-2);
    // physical speed ε μ/(4|ζ̄|) at resonance
    assert!((rep.velocity.norm() / (0.01 * 0.02 / 4.0) - 1.0).abs() < 1e-2);
}

#[test]
fn fragment_centers_drift_apart() {
    let sol = solution(0.0, 0.1);
    let rep = splitting(&sol, &packet(0.0, 0.01, Vector3::z())).unwrap();
    let (a, b) = rep.fragment_centers(0.0);
    assert_eq!(a, b);
    let (a, b) = rep.fragment_centers(500.0);
    assert!(((a - b).norm() - 2.0 * rep.velocity.norm() * 500.0).abs() < 1e-12);
    assert!(((a + b) * 0.5 - Complex64::cis(-500.0)).norm() < 1e-12);
}

#[test]
fn field_phase_rotates_the_velocity() {
    let sol = solution(0.05, 0.3);
    let base = splitting(&sol, &packet(0.2, 0.01, tilted())).unwrap();
    for c in [0.5, 2.0, -1.3] {
        let rot = splitting(&sol, &packet(0.2 + c, 0.01, tilted())).unwrap();
        let dv = (rot.velocity - base.velocity * Complex64::cis(c)).norm() / base.velocity.norm();
        assert!(dv < 1e-9, "{dv:e}");
        assert!((rot.velocity.norm() / base.velocity.norm() - 1.0).abs() < 1e-9);
        assert!((rot.speed_ratio - base.speed_ratio).abs() < 1e-9);
        // n is the k = 0 axis at -φ/ω
        assert!((rot.direction - sol.axis(-(0.2 + c))).norm() < 1e-9);
    }
}

#[test]
fn secular_term_matches_splitting() {
    let sol = solution(0.05, 0.3);
    let pk = packet(0.6, 0.01, tilted());
    let rep = splitting(&sol, &pk).unwrap();
    for t in [10.0, 200.0, 1000.0] {
        let z = subleading_symbol(&sol, &pk, t).unwrap();
        let want = rep.direction.map(|x| Complex64::cis(-t) * rep.velocity * t / pk.epsilon * x);
        assert!((z.secular - want).norm() < 1e-9 * want.norm().max(1.0), "t = {t}");
    }
}

#[test]
fn secular_grows_and_remainder_stays_bounded() {
    let sol = solution(0.05, 0.3);
    let pk = packet(0.0, 0.01, Vector3::z());
    let a = subleading_symbol(&sol, &pk, 50.0).unwrap();
    let b = subleading_symbol(&sol, &pk, 100.0).unwrap();
    assert!((b.secular.norm() / a.secular.norm() - 2.0).abs() < 1e-12);
    let mut biggest: f64 = 0.0;
    for i in 0..200 {
        let t = 10.0 + i as f64 * 4.95;
        biggest = biggest.max(subleading_symbol(&sol, &pk, t).unwrap().bounded.norm());
    }
    let late = subleading_symbol(&sol, &pk, 1.0e4).unwrap();
    assert!(biggest < 10.0);
    assert!(late.bounded.norm() < 2.0 * biggest);
}

#[test]
fn subleading_symbol_is_converged_in_truncation() {
    let pk = packet(0.0, 0.01, tilted());
    let lo = solve_floquet(&FloquetParams::new(0.05, 0.3)).unwrap();
    let hi = solve_floquet(&FloquetParams::new(0.05, 0.3).with_n_max(12)).unwrap();
    let a = subleading_symbol(&lo, &pk, 200.0).unwrap();
    let b = subleading_symbol(&hi, &pk, 200.0).unwrap();
    assert!((a.pauli() - b.pauli()).norm() < 1e-8, "{}", (a.pauli() - b.pauli()).norm());
}

#[test]
fn resonant_denominator_is_reported() {
    // No drive at exact resonance: every quasi-frequency vanishes.
    let sol = solution(0.0, 0.0);
    let rep = subleading_symbol(&sol, &packet(0.0, 0.01, Vector3::x()), 10.0);
    assert_eq!(rep.unwrap_err().name(), "SmallDenominator");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_and_direction_are_normalized(
        delta in -0.1f64..0.1,
        mu in 0.01f64..0.45,
        phi in -PI..PI,
        theta in 0.0f64..PI,
        az in -PI..PI,
    ) {
        let p = Vector3::new(theta.sin() * az.cos(), theta.sin() * az.sin(), theta.cos());
        let sol = solve_floquet(&FloquetParams::new(delta, mu));
        prop_assume!(sol.is_ok());
        let rep = splitting(&sol.unwrap(), &packet(phi, 0.01, p)).unwrap();
        prop_assert_eq!(rep.weights.0 + rep.weights.1, 1.0);
        prop_assert!(rep.weights.0 >= -1e-12 && rep.weights.1 >= -1e-12);
        prop_assert!((rep.direction.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn speed_is_linear_in_epsilon(delta in -0.1f64..0.1, mu in 0.01f64..0.45, eps in 1e-4f64..0.05) {
        let sol = solve_floquet(&FloquetParams::new(delta, mu));
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        let a = splitting(&sol, &packet(0.0, eps, Vector3::z())).unwrap();
        let b = splitting(&sol, &packet(0.0, 2.0 * eps, Vector3::z())).unwrap();
        prop_assert_eq!(b.velocity.norm(), 2.0 * a.velocity.norm());
    }
}
