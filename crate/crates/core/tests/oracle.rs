use nalgebra::{DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;
use rabi_lab::compare::compare_collapse;
use rabi_lab::oracle::{
    analyze_state, build_hamiltonian, coherent_amplitudes, evolve, evolve_with, fragment_analysis_on, states_at,
    FockConfig, HusimiGrid, Method, OracleError,
};
use rabi_lab::semiclassics::{collapse_time, WavePacket};
use rabi_lab::floquet::{solve_floquet, FloquetParams};

fn sorted_spectrum(config: &FockConfig) -> Vec<f64> {
    let h = build_hamiltonian(config).unwrap().to_dense();
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn decoupled_spectrum() {
    let c = FockConfig::from_semiclassical(4.0, 0.0, 0.13, 40, 1.0, 1.0);
    let got = sorted_spectrum(&c);
    let mut want: Vec<f64> = (0..40)
        .flat_map(|n| [n as f64 + 0.5 + 0.5 * c.nu, n as f64 + 0.5 - 0.5 * c.nu])
        .collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn hamiltonian_is_symmetric_and_apply_matches_dense() {
    let c = FockConfig::from_semiclassical(9.0, 0.3, 0.05, 60, 1.0, 1.0);
    let h = build_hamiltonian(&c).unwrap();
    let d = h.to_dense();
    assert_eq!(d, d.transpose());
    let x = DVector::from_fn(h.dimension, |i, _| Complex64::new((i as f64).sin(), (0.3 * i as f64).cos()));
    let y = d.map(|v| Complex64::new(v, 0.0)) * &x;
    assert!((h.apply(&x) - y).norm() < 1e-12);
}

#[test]
fn ground_state_is_converged_in_cutoff() {
    let mut c = FockConfig::from_semiclassical(4.0, 0.0, 0.0, 40, 1.0, 1.0);
    c.g = 0.025;
    let e40 = sorted_spectrum(&c)[0];
    c.cutoff = 80;
    let e80 = sorted_spectrum(&c)[0];
    assert!(e40 < 0.0, "{e40}");
    assert!((e40 - e80).abs() < 1e-10);
}

#[test]
fn free_qubit_precession() {
    let c = FockConfig::from_semiclassical(16.0, 0.0, 0.2, 70, 0.25, 40.0);
    let tr = evolve(&c, &Vector3::x()).unwrap();
    for (t, (s, pur)) in tr.times.iter().zip(tr.sigma.iter().zip(&tr.purity)) {
        assert!((s[0] - (c.nu * t).cos()).abs() < 1e-10);
        assert!((pur - 1.0).abs() < 1e-10);
    }
}

#[test]
fn unitarity_and_energy_conservation() {
    let c = FockConfig::from_semiclassical(100.0, 0.1, 0.0, 260, 0.5, 900.0);
    let tr = evolve(&c, &Vector3::z()).unwrap();
    assert!(tr.max_norm_drift() < 1e-8);
    assert!(tr.relative_energy_drift() < 1e-8);
    assert!(tr.max_top_occupation() < 1e-6);
    assert!(tr.tail_mass < 1e-8);
}

#[test]
fn krylov_matches_eigen_propagation() {
    let c = FockConfig::from_semiclassical(25.0, 0.2, 0.05, 90, 1.0, 60.0);
    let p = Vector3::new(0.6, 0.0, 0.8);
    let a = evolve_with(&c, &p, Method::Eigen).unwrap();
    let b = evolve_with(&c, &p, Method::Krylov).unwrap();
    for (x, y) in a.sigma.iter().zip(&b.sigma) {
        assert!((x - y).norm() < 1e-9);
    }
}

#[test]
fn cutoff_doubling_is_invisible() {
    let a = FockConfig::from_semiclassical(25.0, 0.1, 0.0, 90, 0.5, 300.0);
    let b = FockConfig { cutoff: 180, ..a };
    let ta = evolve(&a, &Vector3::z()).unwrap();
    let tb = evolve(&b, &Vector3::z()).unwrap();
    let dev = ta
        .sigma
        .iter()
        .zip(&tb.sigma)
        .fold(0.0_f64, |m, (x, y)| m.max((x[2] - y[2]).abs()));
    assert!(dev < 1e-6, "{dev:e}");
}

#[test]
fn cutoff_below_minimum_is_rejected() {
    let c = FockConfig::from_semiclassical(100.0, 0.1, 0.0, 200, 1.0, 10.0);
    assert_eq!(
        evolve(&c, &Vector3::z()).unwrap_err(),
        OracleError::CutoffTooSmall { cutoff: 200, required: 220 }
    );
}

#[test]
fn strong_coupling_reaches_the_cutoff() {
    let mut c = FockConfig::from_semiclassical(4.0, 0.0, 0.0, 28, 0.5, 200.0);
    c.g = 3.0;
    let err = evolve(&c, &Vector3::z()).unwrap_err();
    assert!(matches!(err, OracleError::CutoffReflection { .. }), "{err:?}");
}

#[test]
fn weak_drive_envelope_tracks_semiclassics() {
    let c = FockConfig::from_semiclassical(100.0, 0.02, 0.0, 220, 1.0, 3000.0);
    let cmp = compare_collapse(&c, &Vector3::z()).unwrap();
    let pairs: Vec<(f64, f64)> = cmp
        .oracle_envelope
        .iter()
        .zip(&cmp.semiclassical_envelope)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    let n = pairs.len() as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a / n, y + b / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma).powi(2);
        sbb += (b - mb).powi(2);
    }
    let r = sab / (saa * sbb).sqrt();
    assert!(r > 0.99, "correlation {r}");
}

#[test]
fn initial_state_is_unresolved() {
    let c = FockConfig::from_semiclassical(100.0, 0.1, 0.0, 260, 1.0, 1.0);
    let psi = &states_at(&c, &Vector3::z(), &[0.0]).unwrap()[0];
    assert!(matches!(
        analyze_state(psi, 0.0, 1.0, &HusimiGrid::default()),
        Err(OracleError::PeaksUnresolved { .. })
    ));
}

#[test]
fn free_field_stays_unresolved() {
    let c = FockConfig::from_semiclassical(100.0, 0.0, 0.0, 260, 1.0, 1.0);
    for t in [0.0, 137.0, 850.0] {
        let psi = &states_at(&c, &Vector3::z(), &[t]).unwrap()[0];
        assert!(matches!(
            analyze_state(psi, t, 1.0, &HusimiGrid::default()),
            Err(OracleError::PeaksUnresolved { .. })
        ));
    }
}

#[test]
fn fragment_analysis_is_grid_converged() {
    let c = FockConfig::from_semiclassical(100.0, 0.1, 0.0, 260, 1.0, 1.0);
    let sol = solve_floquet(&FloquetParams::new(0.0, 0.1)).unwrap();
    let packet = WavePacket::coherent(Complex64::new(1.0, 0.0), 0.01, Vector3::z());
    let t = 3.0 * collapse_time(&sol, &packet).unwrap();
    let coarse = fragment_analysis_on(&c, &Vector3::z(), &[t], &HusimiGrid::default()).unwrap();
    let fine = fragment_analysis_on(
        &c,
        &Vector3::z(),
        &[t],
        &HusimiGrid {
            points: 321,
            half_width: 8.0,
        },
    )
    .unwrap();
    assert!((coarse.separation[0] - fine.separation[0]).abs() < 1e-3);
    assert!((coarse.peak_weights[0].0 - fine.peak_weights[0].0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coherent_tail_is_small_at_minimum_cutoff(n_bar in 1.0f64..400.0) {
        let (amps, tail) = coherent_amplitudes(n_bar, FockConfig::min_cutoff(n_bar));
        prop_assert!(tail < 1e-8);
        let norm: f64 = amps.iter().map(|a| a * a).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purity_is_bounded(mu in 0.0f64..0.5, delta in -0.1f64..0.1, theta in 0.0f64..std::f64::consts::PI) {
        let c = FockConfig::from_semiclassical(16.0, mu, delta, 70, 2.0, 60.0);
        let p = Vector3::new(theta.sin(), 0.0, theta.cos());
        let tr = evolve(&c, &p).unwrap();
        for (s, pur) in tr.sigma.iter().zip(&tr.purity) {
            prop_assert!(*pur >= 0.5 - 1e-12 && *pur <= 1.0 + 1e-12);
            prop_assert!((pur - 0.5 * (1.0 + s.norm_squared())).abs() < 1e-12);
        }
    }
}
