use std::f64::consts::PI;

use num_complex::Complex64;

use super::{effective_spectral_density, BathParams, Beta};
use crate::error::Result;
use crate::quad;

/// Frequency window half-width in units of the cutoff.
pub const WINDOW_CUTOFFS: f64 = 40.0;

/// Default absolute tolerance of the oracle, in units of `eta * omega0^2`.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

const MAX_EXTRA_PANELS: usize = 400_000;

/// Panel breakpoints over `[lo, hi]` no wider than the oscillation scale of the
/// integrand at time `t`.
fn breakpoints(p: &BathParams, t: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut width = p.omega_c;
    if p.tau > 0.0 {
        width = width.min(2.0 * PI / p.tau);
    }
    if t != 0.0 {
        width = width.min(2.0 * PI / t.abs());
    }
    let n = ((hi - lo) / width).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

/// `C(t) = (1/pi) * integral of J(beta, w) e^{-i w t} dw`, by adaptive
/// Gauss–Kronrod quadrature on `[-40 omega_c, 40 omega_c]`.
///
/// Independent of the closed forms in [`super::bcf_analytic`]; fails with
/// [`crate::Error::QuadratureNotConverged`] rather than returning an inaccurate value.
pub fn bcf_quadrature(p: &BathParams, t: f64) -> Result<Complex64> {
    bcf_quadrature_tol(p, t, DEFAULT_TOLERANCE * p.eta * p.omega0 * p.omega0)
}

/// [`bcf_quadrature`] with an explicit absolute tolerance.
pub fn bcf_quadrature_tol(p: &BathParams, t: f64, abs_tol: f64) -> Result<Complex64> {
    let omega_max = WINDOW_CUTOFFS * p.omega_c;
    let f = |w: f64| {
        let j = effective_spectral_density(p, w);
        Complex64::from_polar(j / PI, -w * t)
    };
    let mut breaks = match p.beta {
        Beta::Infinite => Vec::new(),
        Beta::Finite(_) => {
            let mut b = breakpoints(p, t, -omega_max, 0.0);
            b.pop();
            b
        }
    };
    breaks.extend(breakpoints(p, t, 0.0, omega_max));
    let r = quad::integrate_panels(f, &breaks, abs_tol, 0.0, MAX_EXTRA_PANELS)?;
    Ok(r.value)
}
