//! Time-local second-order (Redfield) master equation under the rotating-wave
//! approximation, with coefficients `Gamma_pm(t) = int_0^t C(s) exp(-+ i w0 s) ds`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{bcf_analytic, BathParams};
use crate::error::{Error, Result};
use crate::ode::{self, IntegratorConfig, OdeSystem};
use crate::quad::gl8;
use crate::state::{QubitState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedfieldMode {
    /// Emission channel only: `Gamma_-` terms.
    #[serde(alias = "rwa-minus")]
    RwaMinus,
    /// Emission and absorption: `Gamma_-` and `Gamma_+` terms.
    #[serde(alias = "rwa-full")]
    RwaFull,
}

impl fmt::Display for RedfieldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RedfieldMode::RwaMinus => "rwa_minus",
            RedfieldMode::RwaFull => "rwa_full",
        })
    }
}

impl std::str::FromStr for RedfieldMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rwa_minus" | "rwa-minus" => Ok(RedfieldMode::RwaMinus),
            "rwa_full" | "rwa-full" => Ok(RedfieldMode::RwaFull),
            other => Err(Error::invalid(
                "mode",
                format!("expected rwa-minus or rwa-full, got `{other}`"),
            )),
        }
    }
}

/// Tabulated `Gamma_pm` on a uniform grid, with exact evaluation in between.
#[derive(Debug, Clone)]
pub struct RedfieldCoefficients {
    pub params: BathParams,
    pub dt: f64,
    pub t: Vec<f64>,
    pub gamma_plus: Vec<Complex64>,
    pub gamma_minus: Vec<Complex64>,
}

/// Largest step accepted by [`compute_coefficients`].
pub fn max_step(p: &BathParams) -> f64 {
    (1.0 / p.omega0).min(1.0 / p.omega_c)
}

/// Cumulative 8-point Gauss–Legendre integration of the analytic BCF times
/// `exp(-+ i w0 s)` over each grid interval.
pub fn compute_coefficients(p: &BathParams, t_max: f64, dt: f64) -> Result<RedfieldCoefficients> {
    let p2 = *p;
    compute_coefficients_from(p, t_max, dt, move |s| Ok(bcf_analytic(&p2, s)))
}

/// As [`compute_coefficients`] but with an arbitrary BCF (e.g. the quadrature oracle).
pub fn compute_coefficients_from<F>(p: &BathParams, t_max: f64, dt: f64, bcf: F) -> Result<RedfieldCoefficients>
where
    F: Fn(f64) -> Result<Complex64>,
{
    p.validate()?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("t_max", format!("must be positive, got {t_max}")));
    }
    let bound = max_step(p);
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse {
            dt,
            max_dt: bound,
            guidance: "resolve 1/omega0 and 1/omega_c",
        });
    }
    let n = (t_max / dt - 1e-9).ceil().max(1.0) as usize;
    let h = t_max / n as f64;
    let w0 = p.omega0;
    let mut gamma_plus = Vec::with_capacity(n + 1);
    let mut gamma_minus = Vec::with_capacity(n + 1);
    let mut gp = Complex64::new(0.0, 0.0);
    let mut gm = Complex64::new(0.0, 0.0);
    gamma_plus.push(gp);
    gamma_minus.push(gm);
    for k in 0..n {
        let a = k as f64 * h;
        let mut ip = Complex64::new(0.0, 0.0);
        let mut im = Complex64::new(0.0, 0.0);
        for (s, w) in crate::quad::gauss_legendre_8(a, a + h) {
            let c = bcf(s)? * w;
            ip += c * Complex64::from_polar(1.0, -w0 * s);
            im += c * Complex64::from_polar(1.0, w0 * s);
        }
        gp += ip;
        gm += im;
        gamma_plus.push(gp);
        gamma_minus.push(gm);
    }
    Ok(RedfieldCoefficients {
        params: *p,
        dt: h,
        t: (0..=n).map(|i| i as f64 * h).collect(),
        gamma_plus,
        gamma_minus,
    })
}

impl RedfieldCoefficients {
    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("non-empty grid")
    }

    /// All-zero coefficients over `[0, t_max]`: free evolution.
    pub fn zero(p: &BathParams, t_max: f64) -> Self {
        Self {
            params: *p,
            dt: t_max,
            t: vec![0.0, t_max],
            gamma_plus: vec![Complex64::new(0.0, 0.0); 2],
            gamma_minus: vec![Complex64::new(0.0, 0.0); 2],
        }
    }

    fn is_zero(&self) -> bool {
        self.gamma_plus.iter().chain(&self.gamma_minus).all(|z| z.norm() == 0.0)
    }

    /// `(Gamma_+(t), Gamma_-(t))`, integrating exactly from the nearest grid
    /// point below `t`.
    pub fn at(&self, t: f64) -> Option<(Complex64, Complex64)> {
        if !(0.0..=self.t_max() * (1.0 + 1e-12)).contains(&t) {
            return None;
        }
        if self.is_zero() {
            return Some((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        }
        let i = ((t / self.dt).floor() as usize).min(self.t.len() - 1);
        let a = self.t[i];
        if t == a {
            return Some((self.gamma_plus[i], self.gamma_minus[i]));
        }
        let p = &self.params;
        let w0 = p.omega0;
        let dp = gl8(|s| bcf_analytic(p, s) * Complex64::from_polar(1.0, -w0 * s), a, t);
        let dm = gl8(|s| bcf_analytic(p, s) * Complex64::from_polar(1.0, w0 * s), a, t);
        Some((self.gamma_plus[i] + dp, self.gamma_minus[i] + dm))
    }
}

struct RedfieldSystem<'a> {
    coeffs: &'a RedfieldCoefficients,
    omega0: f64,
    mode: RedfieldMode,
}

impl OdeSystem for RedfieldSystem<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, t: f64, y: &[Complex64], dydt: &mut [Complex64]) {
        let (gp, gm) = self
            .coeffs
            .at(t)
            .unwrap_or((Complex64::new(f64::NAN, 0.0), Complex64::new(f64::NAN, 0.0)));
        let (gp, shift_p) = match self.mode {
            RedfieldMode::RwaMinus => (0.0, 0.0),
            RedfieldMode::RwaFull => (gp.re, gp.im),
        };
        let gm_re = gm.re;
        // Im Gamma_+ multiplies P_g = 1 - P_e, so it enters the splitting with a minus sign.
        let omega = self.omega0 + gm.im - shift_p;
        let w = Complex64::new(0.0, -omega);
        dydt[0] = y[3] * (2.0 * gm_re) - y[0] * (2.0 * gp);
        dydt[1] = -w * y[1] - y[1] * (gm_re + gp);
        dydt[2] = w * y[2] - y[2] * (gm_re + gp);
        dydt[3] = -y[3] * (2.0 * gm_re) + y[0] * (2.0 * gp);
    }
}

/// Integrates
/// `d rho/dt = -i [w0 P_e + Im Gamma_+ P_g + Im Gamma_- P_e, rho]
///             + Re Gamma_+ D[sigma_+] rho + Re Gamma_- D[sigma_-] rho`
/// with `D[L] rho = 2 L rho L^+ - {L^+ L, rho}`. In `RwaMinus` mode the
/// `Gamma_+` terms are dropped. Positivity violations are recorded in the
/// trajectory diagnostics, not repaired.
pub fn propagate_redfield(
    coeffs: &RedfieldCoefficients,
    omega0: f64,
    rho0: &QubitState,
    t_grid: &[f64],
    mode: RedfieldMode,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if let Some(&t) = t_grid.iter().find(|&&t| coeffs.at(t).is_none()) {
        return Err(Error::invalid(
            "t_grid",
            format!("time {t} outside the coefficient range [0, {}]", coeffs.t_max()),
        ));
    }
    let sys = RedfieldSystem { coeffs, omega0, mode };
    let mut traj = Trajectory::with_capacity(t_grid.len());
    let stats = ode::solve(&sys, &rho0.to_flat(), t_grid, cfg, |_, t, y| {
        traj.push(t, QubitState::from_flat(y));
        Ok(())
    })?;
    traj.diagnostics.rhs_evaluations = stats.rhs_evals;
    traj.diagnostics.steps = stats.accepted;
    Ok(traj)
}
