use std::f64::consts::PI;

use eqlab_core::dynamics::{eigensystem, integrate, max_step, steady_state, DriveParams};
use eqlab_core::scatter::{apply_smatrix, qe_after_interaction, CouplingStrength, JointState};
use eqlab_core::tomography::{reconstruct, spectrum_general, spectrum_two_sideband};
use eqlab_core::electron::two_sideband_comb;
use eqlab_core::{ElectronComb, OverlapIntegrals, QubitState};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state() -> impl Strategy<Value = QubitState> {
    (0.0..1.0f64, -1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(r, z, ph)| {
        let rho = (1.0 - z * z).sqrt();
        let r = r.cbrt();
        QubitState::new(r * rho * ph.cos(), r * rho * ph.sin(), r * z).unwrap()
    })
}

fn comb() -> impl Strategy<Value = ElectronComb> {
    (-5i64..5, prop::collection::vec((0.01..1.0f64, -PI..PI), 1..8)).prop_map(|(start, amps)| {
        ElectronComb::from_amplitudes(
            amps.into_iter().enumerate().map(|(k, (a, p))| (start + k as i64, C64::from_polar(a, p))),
        )
        .unwrap()
    })
}

fn linear_phase_comb() -> impl Strategy<Value = (ElectronComb, f64)> {
    (prop::collection::vec(-1.0..1.0f64, 1..8), -PI..PI).prop_filter_map("empty", |(f, phi)| {
        let c = ElectronComb::from_amplitudes(
            f.iter().enumerate().map(|(n, &v)| (n as i64, C64::from_polar(v, n as f64 * phi))),
        )
        .ok()?;
        Some((c, phi))
    })
}

fn dist(a: &QubitState, b: &QubitState) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn overlaps_are_bounded(c in comb()) {
        let ov = c.overlaps();
        prop_assert!(ov.i1.norm() <= 1.0 + 1e-12);
        prop_assert!(ov.i2.norm() <= 1.0 + 1e-12);
        prop_assert!(OverlapIntegrals::new(ov.i1, ov.i2).is_ok());
    }

    #[test]
    fn overlaps_ignore_global_phase_and_shift(c in comb(), chi in -PI..PI, by in -20i64..20) {
        let a = c.overlaps();
        for other in [c.with_global_phase(chi), c.shifted(by)] {
            let b = other.overlaps();
            prop_assert!((a.i1 - b.i1).norm() < 1e-12);
            prop_assert!((a.i2 - b.i2).norm() < 1e-12);
        }
    }

    #[test]
    fn event_stays_in_bloch_ball(s in state(), c in comb(), b in 0.0..PI, ph in -PI..PI) {
        let out = qe_after_interaction(&s, &c, CouplingStrength::new(b, ph).unwrap()).unwrap();
        prop_assert!(out.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn closed_form_matches_joint_evolution(s in state(), c in comb(), b in 0.0..3.0f64, ph in -PI..PI) {
        let beta = CouplingStrength::new(b, ph).unwrap();
        let j = JointState::product(&s, &c, JointState::DEFAULT_PAD).unwrap();
        let brute = apply_smatrix(&j, beta).unwrap();
        prop_assert!((brute.norm_sqr() - 1.0).abs() < 1e-12);
        let closed = qe_after_interaction(&s, &c, beta).unwrap();
        prop_assert!(dist(&closed, &brute.reduced_qe()) < 1e-10);
    }

    #[test]
    fn spectra_are_normalized((c, phi) in linear_phase_comb(), s in state(), b in 0.0..PI) {
        let spec = spectrum_general(&s, &c, b, phi).unwrap();
        prop_assert!((spec.total() - 1.0).abs() < 1e-12);
        prop_assert!(spec.peaks().values().all(|&v| v >= -1e-14));
    }

    #[test]
    fn reconstruction_inverts_spectra(
        s in state(), b in 0.05..1.5f64, f0 in 0.1..1.0f64, f1 in 0.1..1.0f64,
        phi1 in -PI..PI, dphi in 0.3..(PI - 0.3),
    ) {
        let tw = two_sideband_comb(f0, f1, 0.0).unwrap();
        let phi2 = phi1 + dphi;
        let s1 = spectrum_two_sideband(&s, tw.alpha0, tw.alpha1, b, phi1).unwrap();
        let s2 = spectrum_two_sideband(&s, tw.alpha0, tw.alpha1, b, phi2).unwrap();
        let r = reconstruct(&s1, phi1, &s2, phi2, tw.alpha0, tw.alpha1).unwrap();
        prop_assert!(dist(&r.state(), &s) < 1e-9);
    }
}

fn random_drive(rng: &mut impl Rng) -> DriveParams {
    DriveParams::new(
        rng.random_range(0.0..PI),
        10f64.powf(rng.random_range(-2.0..2.0)),
        10f64.powf(rng.random_range(-4.0..1.0)),
        C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI)),
        C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI)),
    )
    .unwrap()
}

#[test]
fn eigenvalues_never_grow() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let p = random_drive(&mut rng);
        let scale = p.gamma_0 + p.gamma_e;
        for v in eigensystem(&p).values {
            assert!(v.re <= 1e-9 * scale, "{v} for {p:?}");
        }
    }
}

#[test]
fn steady_state_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let p = random_drive(&mut rng);
        let s = steady_state(&p).unwrap();
        let dt = max_step(&p);
        let traj = integrate(&p, &s, 2000.0 * dt, dt).unwrap();
        for (_, q) in traj {
            assert!(dist(&q, &s) <= 1e-10, "{p:?}");
        }
    }
}
