use std::sync::OnceLock;

use num_complex::Complex64;
use spikelab::ground_state::{solve_ground_state, RadialProfile};
use spikelab::nlep::{
    correlation, dense_nlep_eigenvalues, local_spectrum, nlep_eigenvector, nlep_spectrum, nlep_tau_scan,
    refined_leading, tau_crossing, RadialOperator, CONTINUUM_EDGE,
};

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_ground_state(20.0, 4000, 1e-8).unwrap())
}

fn op(mode: usize, gamma: f64, n: usize) -> RadialOperator {
    RadialOperator::new(profile(), mode, gamma, n, 20.0).unwrap()
}

#[test]
fn local_operator_is_self_adjoint() {
    // γ = 0 leaves a symmetric matrix, so the dense solver must return reals
    let eigs = dense_nlep_eigenvalues(&op(0, 0.0, 600)).unwrap();
    assert!(eigs.iter().all(|z| z.im.abs() < 1e-12), "complex eigenvalue in the local problem");
    let local = local_spectrum(&op(0, 0.0, 600), profile()).unwrap();
    assert!((eigs[0].re - local.eigenvalues[0]).abs() < 1e-9);
}

#[test]
fn leading_pair_converges_under_grid_doubling() {
    let o = op(0, 2.0, 1000);
    let s = nlep_spectrum(&o, profile()).unwrap();
    let lead = Complex64::new(s.eigenvalues[0][0], s.eigenvalues[0][1]);
    let fine = refined_leading(profile(), &o, lead).unwrap();
    assert!((fine - lead).norm() <= 1e-3, "{lead} vs {fine}");
    assert!(s.max_real < 0.0);
    assert!(s.leading_residual <= 1e-8, "residual {}", s.leading_residual);
    let (_, res) = nlep_eigenvector(&o, lead).unwrap();
    assert!(res <= 1e-8);
}

#[test]
fn translation_mode_sits_at_zero() {
    let o = op(1, 2.0, 2000);
    let local = local_spectrum(&o, profile()).unwrap();
    assert!(local.eigenvalues[0].abs() < 1e-3, "{}", local.eigenvalues[0]);
    // the eigenfunction is the profile derivative
    let dw: Vec<f64> = o.r.iter().map(|&r| profile().evaluate_dw(r)).collect();
    assert!(correlation(&o, &local.eigenfunctions[0], &dw) > 0.999);
}

#[test]
fn higher_modes_are_stable() {
    for mode in 2..=4 {
        let s = nlep_spectrum(&op(mode, 2.0, 1000), profile()).unwrap();
        assert!(s.eigenvalues.iter().all(|e| e[0] < 0.0), "mode {mode}: {:?}", s.eigenvalues);
        assert_eq!(s.max_real, CONTINUUM_EDGE);
    }
}

#[test]
fn slow_inhibitor_destabilises() {
    let o = op(0, 2.0, 1000);
    let taus = [0.0, 0.1, 0.5, 2.0, 10.0];
    let scan = nlep_tau_scan(profile(), &o, &taus, Complex64::new(-1.0, 0.0)).unwrap();
    assert!(scan[0].max_real < 0.0);
    assert!(scan.last().unwrap().max_real > 0.0);
    let crossing = tau_crossing(&scan).unwrap();
    assert!(crossing > 0.1 && crossing <= 2.0, "{crossing}");
}
