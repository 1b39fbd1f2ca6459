//! Second-order Hamiltonian of mean force and the corresponding Gibbs population.
//!
//! To second order in the coupling, `H* = H_S + (delta_omega/2) sigma_z + c`, with
//! `delta_omega` and `c` built from the imaginary-time integrals `I1` and `I2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{bcf_imaginary_time, BathParams, Beta};
use crate::error::{Error, Result};
use crate::quad::integrate;

/// Relative tolerance of the outer quadrature.
pub const REL_TOL: f64 = 1e-8;
/// Largest accepted imaginary part of the integrals, relative to their magnitude.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;
const MAX_PANELS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanForceResult {
    pub beta: Beta,
    /// `NaN` at zero temperature, where the limit is taken analytically.
    pub i1: f64,
    pub i2: f64,
    pub delta_omega: f64,
    pub c_offset: f64,
    pub p_ee_star: f64,
    pub p_ee_bare: f64,
}

/// Gibbs excited-state population for a level splitting `gap`.
pub fn gibbs_excited_population(beta: f64, gap: f64) -> f64 {
    1.0 / (1.0 + (beta * gap).exp())
}

/// `I1 = int_0^beta dt1 int_0^t1 ds C~(s) sinh(w0 s)` and
/// `I2 = int_0^beta dt1 int_0^t1 ds C~(s) [cosh(w0 (2 t1 - s)) + exp(-w0 s)]`,
/// by nested adaptive quadrature.
pub fn compute_integrals(p: &BathParams) -> Result<(f64, f64)> {
    compute_integrals_tol(p, REL_TOL)
}

pub fn compute_integrals_tol(p: &BathParams, rel_tol: f64) -> Result<(f64, f64)> {
    p.validate()?;
    let beta = p.beta.finite().ok_or_else(|| {
        Error::Domain("the mean-force integrals require a finite temperature".into())
    })?;
    let w0 = p.omega0;
    let inner_tol = 0.01 * rel_tol;
    let failure = std::cell::RefCell::new(None);
    let outer = |t1: f64| {
        let inner = integrate(
            |s| {
                let c = match bcf_imaginary_time(p, s) {
                    Ok(c) => c,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        return Complex64::new(0.0, 0.0);
                    }
                };
                // Both integrands packed into one complex value: re -> I1, im -> I2.
                let k1 = (w0 * s).sinh();
                let k2 = (w0 * (2.0 * t1 - s)).cosh() + (-w0 * s).exp();
                if c.im.abs() > IMAG_RESIDUE_TOL * c.re.abs().max(f64::MIN_POSITIVE) {
                    failure.borrow_mut().get_or_insert(Error::Domain(format!(
                        "imaginary residue {:.3e} of the imaginary-time BCF at s = {s}",
                        c.im
                    )));
                }
                Complex64::new(c.re * k1, c.re * k2)
            },
            0.0,
            t1,
            0.0,
            inner_tol,
            MAX_PANELS,
        );
        match inner {
            Ok(r) => r.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let total = integrate(outer, 0.0, beta, 0.0, rel_tol, MAX_PANELS)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let (i1, i2) = (total.value.re, total.value.im);
    if !(i1.is_finite() && i2.is_finite()) {
        return Err(Error::Domain("non-finite mean-force integrals".into()));
    }
    Ok((i1, i2))
}

/// Evaluates `delta_omega`, `c`, the mean-force population and the bare Gibbs
/// population from the integrals.
pub fn mean_force_population(i1: f64, i2: f64, beta: f64, omega0: f64) -> Result<MeanForceResult> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("must be positive and finite, got {beta}")));
    }
    let upper = 1.0 + i1 + i2;
    let lower = 1.0 + i2;
    if !(upper > 0.0 && lower > 0.0) {
        return Err(Error::PerturbativeBreakdown(format!(
            "log arguments 1 + I1 + I2 = {upper:.4e}, 1 + I2 = {lower:.4e} must be positive"
        )));
    }
    let (lu, ll) = (upper.ln(), lower.ln());
    let p_ee_star = 1.0 / (1.0 + (beta * omega0 - lu + ll).exp());
    Ok(MeanForceResult {
        beta: Beta::Finite(beta),
        i1,
        i2,
        delta_omega: -(lu - ll) / beta,
        c_offset: -(lu + ll) / (2.0 * beta),
        p_ee_star,
        p_ee_bare: gibbs_excited_population(beta, omega0),
    })
}

/// Mean-force prediction for the bath parameters. At zero temperature both
/// populations are zero and the integrals are not evaluated.
pub fn mean_force(p: &BathParams) -> Result<MeanForceResult> {
    match p.beta {
        Beta::Infinite => {
            p.validate()?;
            Ok(MeanForceResult {
                beta: Beta::Infinite,
                i1: f64::NAN,
                i2: f64::NAN,
                delta_omega: f64::NAN,
                c_offset: f64::NAN,
                p_ee_star: 0.0,
                p_ee_bare: 0.0,
            })
        }
        Beta::Finite(beta) => {
            let (i1, i2) = compute_integrals(p)?;
            mean_force_population(i1, i2, beta, p.omega0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_real;

    fn reference_params(beta: f64) -> BathParams {
        BathParams { eta: 0.05, beta: Beta::Finite(beta), ..BathParams::default() }
    }

    // Inner integrals done by hand: single integrals over s with weights
    // (beta - s) sinh(s) and (sinh(2 beta - s) - sinh(s))/2 + (beta - s) e^{-s}.
    fn reduced_oracle(p: &BathParams) -> (f64, f64) {
        let beta = p.beta.finite().unwrap();
        let w = p.omega0;
        let c = |s: f64| bcf_imaginary_time(p, s).unwrap().re;
        let i1 = integrate_real(|s| (beta - s) * c(s) * (w * s).sinh(), 0.0, beta, 0.0, 1e-12, 1000).unwrap();
        let i2 = integrate_real(
            |s| c(s) * (((w * (2.0 * beta - s)).sinh() - (w * s).sinh()) / (2.0 * w) + (beta - s) * (-w * s).exp()),
            0.0,
            beta,
            0.0,
            1e-12,
            1000,
        )
        .unwrap();
        (i1, i2)
    }

    #[test]
    fn nested_quadrature_matches_reduced_integrals() {
        for beta in [1.0, 0.5, 0.1] {
            let p = reference_params(beta);
            let (i1, i2) = compute_integrals(&p).unwrap();
            let (o1, o2) = reduced_oracle(&p);
            assert!((i1 - o1).abs() <= 1e-7 * o1.abs(), "{i1} {o1}");
            assert!((i2 - o2).abs() <= 1e-7 * o2.abs(), "{i2} {o2}");
        }
    }

    #[test]
    fn reference_populations() {
        let expected = [(1.0, 0.271, 0.269), (0.5, 0.378, 0.377), (0.1, 0.475, 0.475)];
        let mut gaps = Vec::new();
        for (beta, star, bare) in expected {
            let r = mean_force(&reference_params(beta)).unwrap();
            assert!((r.p_ee_star - star).abs() <= 2e-3, "{beta}: {}", r.p_ee_star);
            assert!((r.p_ee_bare - bare).abs() <= 1e-3);
            assert!(r.p_ee_star >= r.p_ee_bare - 1e-6);
            assert!((0.0..=0.5).contains(&r.p_ee_star));
            gaps.push((r.p_ee_star - r.p_ee_bare).abs());
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    }

    #[test]
    fn zero_coupling_is_bare_gibbs() {
        let r = mean_force_population(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(r.p_ee_star, r.p_ee_bare);
        assert!((r.p_ee_bare - 1.0 / (1.0 + 1f64.exp())).abs() < 1e-15);
        let p = BathParams { eta: 1e-300, ..reference_params(1.0) };
        let (i1, i2) = compute_integrals(&p).unwrap();
        assert!(i1.abs() < 1e-290 && i2.abs() < 1e-290);
    }

    #[test]
    fn integrals_are_linear_in_eta() {
        let (a1, a2) = compute_integrals(&reference_params(0.5)).unwrap();
        let (b1, b2) = compute_integrals(&BathParams { eta: 0.1, ..reference_params(0.5) }).unwrap();
        assert!((b1 - 2.0 * a1).abs() <= 1e-8 * b1.abs());
        assert!((b2 - 2.0 * a2).abs() <= 1e-8 * b2.abs());
    }

    #[test]
    fn tolerance_halving_is_stable() {
        let p = reference_params(1.0);
        let (a1, a2) = compute_integrals_tol(&p, 1e-8).unwrap();
        let (b1, b2) = compute_integrals_tol(&p, 5e-9).unwrap();
        assert!((a1 - b1).abs() <= 1e-7 * a1.abs());
        assert!((a2 - b2).abs() <= 1e-7 * a2.abs());
    }

    #[test]
    fn offset_does_not_enter_the_population() {
        let (i1, i2) = compute_integrals(&reference_params(1.0)).unwrap();
        let r = mean_force_population(i1, i2, 1.0, 1.0).unwrap();
        assert!(r.c_offset.is_finite() && r.delta_omega.is_finite());
        let from_levels = gibbs_excited_population(1.0, 1.0 + r.delta_omega);
        assert!((from_levels - r.p_ee_star).abs() < 1e-14);
    }

    #[test]
    fn zero_temperature_limit_and_errors() {
        let r = mean_force(&BathParams { eta: 0.05, ..BathParams::default() }).unwrap();
        assert_eq!(r.p_ee_star, 0.0);
        assert!(matches!(compute_integrals(&BathParams::default()), Err(Error::Domain(_))));
        assert!(matches!(mean_force_population(-2.0, 0.0, 1.0, 1.0), Err(Error::PerturbativeBreakdown(_))));
    }
}
