use giant_heom::bath::BathParams;
use giant_heom::expfit::{fit_bcf, BcfFit, SamplingGrid};
use giant_heom::heom::{simulate, HeomOptions};
use giant_heom::scenarios::max_abs_deviation;
use giant_heom::state::{observables, uniform_grid};
use giant_heom::QubitState;

fn run(fit: &BcfFit, rho0: &QubitState, t: &[f64], depth: usize) -> Vec<f64> {
    let opts = HeomOptions { depth, ..HeomOptions::default() };
    simulate(fit, 1.0, rho0, t, &opts).unwrap().p_ee()
}

fn depth_convergence(periods: f64) -> f64 {
    let p = BathParams::with_delay_periods(periods);
    let fit = fit_bcf(&p, 1e-3, SamplingGrid::default_for(&p)).unwrap();
    let t = uniform_grid(2.5 * p.tau, 101);
    let rho0 = QubitState::excited();
    max_abs_deviation(&run(&fit, &rho0, &t, 2), &run(&fit, &rho0, &t, 3))
}

#[test]
fn depth_two_is_converged_for_a_short_delay() {
    let d = depth_convergence(1.0);
    assert!(d <= 1e-3, "depth 2 -> 3 changes P_ee by {d:.3e}");
}

/// About 4.8 million ADOs at depth 3; run with `--ignored`.
#[test]
#[ignore]
fn depth_two_is_converged_at_desk_scale() {
    let d = depth_convergence(4.0);
    assert!(d <= 1e-3, "depth 2 -> 3 changes P_ee by {d:.3e}");
}

/// Successive changes in P_ee as the fit tolerance is halved.
fn fit_halving_changes(tolerances: &[f64]) -> Vec<f64> {
    let p = BathParams::with_delay_periods(1.0);
    let t = uniform_grid(2.5 * p.tau, 101);
    let rho0 = QubitState::excited();
    let traj: Vec<Vec<f64>> = tolerances
        .iter()
        .map(|&eps| run(&fit_bcf(&p, eps, SamplingGrid::default_for(&p)).unwrap(), &rho0, &t, 2))
        .collect();
    traj.windows(2).map(|w| max_abs_deviation(&w[0], &w[1])).collect()
}

#[test]
fn halving_the_fit_tolerance_changes_little() {
    let d = fit_halving_changes(&[4e-3, 2e-3, 1e-3, 5e-4]);
    assert!(d.iter().all(|&x| x <= 1e-3), "{d:?}");
}

/// Fails: the change is bounded but does not shrink with the tolerance.
#[test]
#[ignore]
fn halving_the_fit_tolerance_changes_less_each_time() {
    let d = fit_halving_changes(&[8e-3, 4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4]);
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
}

#[test]
fn coherence_respects_positivity() {
    let p = BathParams::with_delay_periods(1.0);
    let fit = fit_bcf(&p, 1e-3, SamplingGrid::default_for(&p)).unwrap();
    let t = uniform_grid(2.5 * p.tau, 201);
    let traj = simulate(&fit, 1.0, &QubitState::plus(), &t, &HeomOptions::default()).unwrap();
    let (pe, coh) = observables(&traj);
    for (pe, c) in pe.iter().zip(&coh) {
        assert!(*c <= (pe * (1.0 - pe)).max(0.0).sqrt() + 1e-6, "|P_eg| {c} at P_ee {pe}");
    }
    assert!(traj.diagnostics.max_trace_defect <= 1e-6);
    assert!(traj.diagnostics.max_hermiticity_defect <= 1e-6);
}
