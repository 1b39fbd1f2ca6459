//! Hierarchical equations of motion for the two-level atom, driven by
//! exponential decompositions of the real and imaginary BCF parts.

mod generator;
mod hierarchy;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expfit::BcfFit;
use crate::ode::{self, IntegratorConfig};
use crate::state::{QubitState, Trajectory};

pub use generator::{apply_generator, HeomGenerator, Scaling};
pub use hierarchy::{enumerate_hierarchy, hierarchy_size, Down, HierarchyIndex, HierarchySpace};

/// Default ADO budget.
pub const DEFAULT_MAX_ADOS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeomOptions {
    pub depth: usize,
    pub scaling: Scaling,
    pub max_ados: usize,
    pub integrator: IntegratorConfig,
}

impl Default for HeomOptions {
    fn default() -> Self {
        Self {
            depth: 2,
            scaling: Scaling::None,
            max_ados: DEFAULT_MAX_ADOS,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Integrates the hierarchy from the factorized initial condition (all ADOs
/// except the reduced state start at zero) and samples the reduced state at
/// every time in `t_grid`, which must start at 0.
pub fn propagate(generator: &HeomGenerator, rho0: &QubitState, t_grid: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::invalid("t_grid", "must start at t = 0"));
    }
    let mut y0 = vec![Complex64::new(0.0, 0.0); generator.state_len()];
    y0[..4].copy_from_slice(&rho0.to_flat());
    let mut traj = Trajectory::with_capacity(t_grid.len());
    let stats = ode::solve(generator, &y0, t_grid, cfg, |_, t, y| {
        traj.push(t, QubitState::from_flat(&y[..4]));
        Ok(())
    })?;
    traj.diagnostics.rhs_evaluations = stats.rhs_evals;
    traj.diagnostics.steps = stats.accepted;
    Ok(traj)
}

/// Builds the hierarchy for `fit`, then propagates.
pub fn simulate(fit: &BcfFit, omega0: f64, rho0: &QubitState, t_grid: &[f64], opts: &HeomOptions) -> Result<Trajectory> {
    if fit.real.is_empty() && fit.imag.is_empty() {
        return free_evolution(omega0, rho0, t_grid);
    }
    let space = enumerate_hierarchy(fit.real.len(), fit.imag.len(), opts.depth, opts.max_ados)?;
    let generator = HeomGenerator::new(space, fit, omega0, opts.scaling)?;
    propagate(&generator, rho0, t_grid, &opts.integrator)
}

fn free_evolution(omega0: f64, rho0: &QubitState, t_grid: &[f64]) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut m = *rho0.matrix();
        let phase = Complex64::from_polar(1.0, -omega0 * t);
        m[(1, 0)] *= phase;
        m[(0, 1)] *= phase.conj();
        traj.push(t, QubitState(m));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfit::{ExpTerm, ExponentialSum};
    use crate::state::uniform_grid;
    use nalgebra::{DMatrix, Schur};
    use proptest::prelude::*;

    fn toy_fit(cr: f64, ci: f64, g: f64) -> BcfFit {
        let mut f = BcfFit::empty();
        f.real = ExponentialSum::new(vec![ExpTerm { c: Complex64::new(cr, 0.0), g: Complex64::new(g, 0.0) }]);
        f.imag = ExponentialSum::new(vec![ExpTerm { c: Complex64::new(ci, 0.0), g: Complex64::new(g, 0.0) }]);
        f
    }

    fn dense(g: &HeomGenerator) -> DMatrix<Complex64> {
        let n = g.state_len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            g.apply(&e, &mut out);
            for i in 0..n {
                m[(i, j)] = out[i];
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        m
    }

    #[test]
    fn zero_state_has_zero_derivative() {
        let fit = toy_fit(0.1, -0.05, 1.0);
        let space = enumerate_hierarchy(1, 1, 2, 100).unwrap();
        let d = apply_generator(&space, &fit, 1.0, &vec![Complex64::new(0.0, 0.0); 4 * space.len()]).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn reduced_state_derivative_is_literal() {
        let fit = toy_fit(0.1, -0.05, 1.0);
        let space = enumerate_hierarchy(1, 1, 1, 100).unwrap();
        let mut state = vec![Complex64::new(0.0, 0.0); 12];
        state[3] = Complex64::new(1.0, 0.0);
        // rho^(1,0) = [[0.2, 0.1i], [-0.1i, 0.3]]
        state[4] = Complex64::new(0.2, 0.0);
        state[5] = Complex64::new(0.0, 0.1);
        state[6] = Complex64::new(0.0, -0.1);
        state[7] = Complex64::new(0.3, 0.0);
        let d = apply_generator(&space, &fit, 1.0, &state).unwrap();
        // -i w0 [|e><e|, |e><e|] = 0; -i [sx, rho1] with [sx, rho1] = [[-0.2i, 0.1], [-0.1, 0.2i]]
        let expected = [
            Complex64::new(-0.2, 0.0),
            Complex64::new(0.0, -0.1),
            Complex64::new(0.0, 0.1),
            Complex64::new(0.2, 0.0),
        ];
        for i in 0..4 {
            assert!((d[i] - expected[i]).norm() < 1e-15, "{i}: {} vs {}", d[i], expected[i]);
        }
    }

    #[test]
    fn toy_generator_is_stable() {
        let fit = toy_fit(0.05, -0.02, 1.0);
        let space = enumerate_hierarchy(1, 1, 1, 100).unwrap();
        let g = HeomGenerator::new(space, &fit, 1.0, Scaling::None).unwrap();
        let m = dense(&g);
        assert_eq!(m.nrows(), 12);
        let eig = Schur::new(m).eigenvalues().unwrap();
        for z in eig.iter() {
            assert!(z.re <= 1e-12, "eigenvalue {z}");
        }
    }

    #[test]
    fn scaled_generator_is_similar() {
        let fit = toy_fit(0.05, -0.02, 1.0);
        let space = enumerate_hierarchy(1, 1, 2, 100).unwrap();
        let a = dense(&HeomGenerator::new(space.clone(), &fit, 1.0, Scaling::None).unwrap());
        let b = dense(&HeomGenerator::new(space, &fit, 1.0, Scaling::Amplitude).unwrap());
        let mut ea: Vec<Complex64> = Schur::new(a).eigenvalues().unwrap().iter().copied().collect();
        let mut eb: Vec<Complex64> = Schur::new(b).eigenvalues().unwrap().iter().copied().collect();
        let key = |z: &Complex64| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
        ea.sort_by_key(key);
        eb.sort_by_key(key);
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn no_bath_is_free_rotation() {
        let t = uniform_grid(10.0, 11);
        let traj = simulate(&BcfFit::empty(), 1.0, &QubitState::plus(), &t, &HeomOptions::default()).unwrap();
        for (s, &t) in traj.states.iter().zip(&t) {
            assert!((s.p_ee() - 0.5).abs() < 1e-15);
            assert!((s.p_eg() - Complex64::from_polar(0.5, -t)).norm() < 1e-14);
        }
    }

    #[test]
    fn vanishing_coupling_reduces_to_free_rotation() {
        let fit = toy_fit(0.0, 0.0, 1.0);
        let t = uniform_grid(10.0, 11);
        let traj = simulate(&fit, 1.0, &QubitState::plus(), &t, &HeomOptions::default()).unwrap();
        for (s, &t) in traj.states.iter().zip(&t) {
            let d = (s.p_eg() - Complex64::from_polar(0.5, -t)).norm();
            assert!(d < 1e-6, "t {t}: {d:e}");
        }
    }

    #[test]
    fn scaled_and_unscaled_trajectories_agree() {
        let fit = toy_fit(0.05, -0.02, 0.7);
        let t = uniform_grid(20.0, 41);
        let a = simulate(&fit, 1.0, &QubitState::excited(), &t, &HeomOptions::default()).unwrap();
        let b = simulate(
            &fit,
            1.0,
            &QubitState::excited(),
            &t,
            &HeomOptions { scaling: Scaling::Amplitude, ..HeomOptions::default() },
        )
        .unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x.p_ee() - y.p_ee()).abs() < 1e-7);
        }
        assert!(a.diagnostics.max_trace_defect < 1e-10);
        assert!(a.diagnostics.max_hermiticity_defect < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn dynamics_are_linear_in_the_initial_state(w in 0.0f64..1.0, x in -0.4f64..0.4, y in -0.4f64..0.4) {
            let fit = toy_fit(0.05, -0.02, 0.7);
            let t = uniform_grid(5.0, 6);
            let opts = HeomOptions::default();
            let a = QubitState::excited();
            let mut m = *QubitState::maximally_mixed().matrix();
            m[(1, 0)] = Complex64::new(x, y) * 0.5;
            m[(0, 1)] = Complex64::new(x, -y) * 0.5;
            let b = QubitState(m);
            let ta = simulate(&fit, 1.0, &a, &t, &opts).unwrap();
            let tb = simulate(&fit, 1.0, &b, &t, &opts).unwrap();
            let tm = simulate(&fit, 1.0, &a.mix(&b, w), &t, &opts).unwrap();
            for i in 0..t.len() {
                let mixed = ta.states[i].mix(&tb.states[i], w);
                let d = (mixed.0 - tm.states[i].0).iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(d < 1e-7);
            }
        }
    }
}
