//! Exact single-excitation dynamics under the rotating-wave approximation at
//! zero temperature.
//!
//! The excited-state amplitude `G(t)` (interaction picture) obeys
//! `dG/dt = -int_0^t C(s) G(t - s) exp(i w0 s) ds` with `G(0) = 1`. Integrating
//! once gives the second-kind equation `G(t) = 1 - int_0^t Q(t - v) G(v) dv`
//! with `Q(r) = int_0^r C(s) exp(i w0 s) ds`, which is marched by product
//! integration against a piecewise-linear `G`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::{bcf_analytic, BathParams, Beta};
use crate::error::{Error, Result};
use crate::ode::{self, IntegratorConfig, OdeSystem};
use crate::quad::{gauss_legendre_8, gl8};
use crate::state::{QubitState, Trajectory};

/// `|G|` below which the time-local rates are left undefined.
pub const RATE_SINGULARITY: f64 = 1e-12;

/// Resolution factor of the step-size heuristic `dt <= min(2 pi / omega_c, tau) / 64`.
pub const STEPS_PER_SCALE: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GreenFunction {
    pub dt: f64,
    pub omega0: f64,
    pub t: Vec<f64>,
    pub g: Vec<Complex64>,
    pub g_dot: Vec<Complex64>,
}

/// Largest step accepted by [`solve_green`].
pub fn max_step(p: &BathParams) -> f64 {
    let scale = 2.0 * PI / p.omega_c;
    let scale = if p.tau > 0.0 { scale.min(p.tau) } else { scale };
    scale / STEPS_PER_SCALE
}

/// Effective step: the largest step not above `dt` that puts `tau` on the grid.
pub fn effective_step(p: &BathParams, dt: f64) -> f64 {
    if p.tau > 0.0 {
        p.tau / (p.tau / dt).ceil()
    } else {
        dt
    }
}

fn kernel(p: &BathParams, s: f64) -> Complex64 {
    bcf_analytic(p, s) * Complex64::from_polar(1.0, p.omega0 * s)
}

/// Solves for `G` on a uniform grid covering `[0, t_max]`.
///
/// The step is reduced so that `tau` is a grid point. Steps coarser than
/// [`max_step`] are refused.
pub fn solve_green(p: &BathParams, t_max: f64, dt: f64) -> Result<GreenFunction> {
    p.validate()?;
    if p.beta != Beta::Infinite {
        return Err(Error::invalid(
            "beta",
            "the exact single-excitation solution exists only at zero temperature",
        ));
    }
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
            guidance: "resolve both 2 pi / omega_c and tau with at least 64 steps",
        });
    }
    let h = effective_step(p, dt);
    let m_max = (t_max / h - 1e-9).ceil().max(1.0) as usize;

    // Moments of Q and K against the two linear hat halves on [k h, (k + 1) h].
    let mut aq = Vec::with_capacity(m_max);
    let mut bq = Vec::with_capacity(m_max);
    let mut ak = Vec::with_capacity(m_max);
    let mut bk = Vec::with_capacity(m_max);
    let mut q_left = Complex64::new(0.0, 0.0);
    for k in 0..m_max {
        let a = k as f64 * h;
        let b = a + h;
        let zero = Complex64::new(0.0, 0.0);
        let (mut mq_a, mut mq_b, mut mk_a, mut mk_b) = (zero, zero, zero, zero);
        for (x, w) in gauss_legendre_8(a, b) {
            let q = q_left + gl8(|s| kernel(p, s), a, x);
            let kx = kernel(p, x);
            let up = (x - a) / h;
            let down = (b - x) / h;
            mq_a += q * (w * up);
            mq_b += q * (w * down);
            mk_a += kx * (w * up);
            mk_b += kx * (w * down);
        }
        aq.push(mq_a);
        bq.push(mq_b);
        ak.push(mk_a);
        bk.push(mk_b);
        q_left += gl8(|s| kernel(p, s), a, b);
    }

    let mut g = Vec::with_capacity(m_max + 1);
    let mut g_dot = Vec::with_capacity(m_max + 1);
    g.push(Complex64::new(1.0, 0.0));
    g_dot.push(Complex64::new(0.0, 0.0));
    for m in 1..=m_max {
        let mut s = aq[0] * g[m - 1];
        for k in 1..m {
            s += aq[k] * g[m - k - 1] + bq[k] * g[m - k];
        }
        let gm = (1.0 - s) / (1.0 + bq[0]);
        g.push(gm);
        let mut d = Complex64::new(0.0, 0.0);
        for k in 0..m {
            d += ak[k] * g[m - k - 1] + bk[k] * g[m - k];
        }
        g_dot.push(-d);
        if !gm.is_finite() {
            return Err(Error::Integration {
                t: m as f64 * h,
                reason: "non-finite Green function".into(),
            });
        }
    }
    let t = (0..=m_max).map(|i| i as f64 * h).collect();
    Ok(GreenFunction {
        dt: h,
        omega0: p.omega0,
        t,
        g,
        g_dot,
    })
}

/// Maximum `|G_dt - G_{dt/2}|` over the common grid points, a Richardson-style
/// error estimate for a solve at step `dt`.
pub fn grid_error_estimate(p: &BathParams, t_max: f64, dt: f64) -> Result<f64> {
    let coarse = solve_green(p, t_max, dt)?;
    let fine = solve_green(p, t_max, coarse.dt / 2.0)?;
    Ok(coarse
        .g
        .iter()
        .enumerate()
        .filter_map(|(i, &gc)| fine.g.get(2 * i).map(|&gf| (gc - gf).norm()))
        .fold(0.0, f64::max))
}

fn lagrange4(ts: [f64; 4], ys: [Complex64; 4], t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += ys[i] * w;
    }
    acc
}

fn stencil(n: usize, i: usize) -> usize {
    if n < 4 {
        0
    } else {
        i.saturating_sub(1).min(n - 4)
    }
}

impl GreenFunction {
    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("non-empty grid")
    }

    /// `G(t)` by cubic Hermite interpolation and `dG/dt(t)` by cubic Lagrange
    /// interpolation; `None` outside the solved range.
    pub fn eval(&self, t: f64) -> Option<(Complex64, Complex64)> {
        if !(0.0..=self.t_max() * (1.0 + 1e-12)).contains(&t) {
            return None;
        }
        let n = self.t.len();
        let i = ((t / self.dt).floor() as usize).min(n - 2);
        let h = self.dt;
        let s = ((t - self.t[i]) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let g = self.g[i] * h00 + self.g_dot[i] * (h10 * h) + self.g[i + 1] * h01 + self.g_dot[i + 1] * (h11 * h);
        let j = stencil(n, i);
        let gd = if n >= 4 {
            lagrange4(
                [self.t[j], self.t[j + 1], self.t[j + 2], self.t[j + 3]],
                [self.g_dot[j], self.g_dot[j + 1], self.g_dot[j + 2], self.g_dot[j + 3]],
                t,
            )
        } else {
            self.g_dot[i] * (1.0 - s) + self.g_dot[i + 1] * s
        };
        Some((g, gd))
    }

    pub fn max_abs(&self) -> f64 {
        self.g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Reduced states produced by the exact map in both pictures.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedStates {
    pub interaction: Trajectory,
    pub schrodinger: Trajectory,
}

/// Applies the single-excitation dynamical map
/// `rho_ee(t) = |G|^2 rho_ee(0)`, `rho_eg(t) = G rho_eg(0)` at each `t_out`
/// (interaction picture); the Schrödinger picture adds the phase `exp(-i w0 t)`
/// to the coherence.
pub fn dynamical_map(green: &GreenFunction, rho0: &QubitState, t_out: &[f64]) -> Result<MappedStates> {
    let mut interaction = Trajectory::with_capacity(t_out.len());
    let mut schrodinger = Trajectory::with_capacity(t_out.len());
    let ree = rho0.p_ee();
    let reg = rho0.p_eg();
    for &t in t_out {
        let (g, _) = green.eval(t).ok_or_else(|| {
            Error::invalid("t_out", format!("time {t} outside the solved range [0, {}]", green.t_max()))
        })?;
        let build = |coh: Complex64| {
            let pe = g.norm_sqr() * ree;
            QubitState(nalgebra::Matrix2::new(
                Complex64::new(1.0 - pe, 0.0),
                coh.conj(),
                coh,
                Complex64::new(pe, 0.0),
            ))
        };
        let coh = g * reg;
        interaction.push(t, build(coh));
        schrodinger.push(t, build(coh * Complex64::from_polar(1.0, -green.omega0 * t)));
    }
    Ok(MappedStates {
        interaction,
        schrodinger,
    })
}

/// Time-local decay rate and Lamb shift, `-dG/dt / G = gamma_minus + i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctions {
    pub t: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub lamb_shift: Vec<f64>,
    /// `false` where `|G| < 1e-12`; the rates there are NaN.
    pub defined: Vec<bool>,
}

impl RateFunctions {
    /// Maximal closed intervals of grid times on which `gamma_minus < 0`.
    pub fn negative_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        let mut last = 0.0;
        for i in 0..self.t.len() {
            let neg = self.defined[i] && self.gamma_minus[i] < 0.0;
            match (neg, start) {
                (true, None) => start = Some(self.t[i]),
                (false, Some(s)) => {
                    out.push((s, last));
                    start = None;
                }
                _ => {}
            }
            last = self.t[i];
        }
        if let Some(s) = start {
            out.push((s, last));
        }
        out
    }

    pub fn min_gamma_minus(&self) -> f64 {
        self.gamma_minus
            .iter()
            .zip(&self.defined)
            .filter(|(_, &d)| d)
            .map(|(&g, _)| g)
            .fold(f64::INFINITY, f64::min)
    }

    fn rates_at(&self, t: f64) -> Option<(f64, f64)> {
        let n = self.t.len();
        if n < 2 || t < self.t[0] || t > self.t[n - 1] * (1.0 + 1e-12) {
            return None;
        }
        let dt = self.t[1] - self.t[0];
        let i = ((t / dt).floor() as usize).min(n - 2);
        let j = stencil(n, i);
        let width = if n >= 4 { 4 } else { 2 };
        if !self.defined[j..j + width].iter().all(|&d| d) {
            return None;
        }
        if n < 4 {
            let s = (t - self.t[i]) / dt;
            return Some((
                self.gamma_minus[i] * (1.0 - s) + self.gamma_minus[i + 1] * s,
                self.lamb_shift[i] * (1.0 - s) + self.lamb_shift[i + 1] * s,
            ));
        }
        let ts = [self.t[j], self.t[j + 1], self.t[j + 2], self.t[j + 3]];
        let pack = |v: &[f64]| {
            [
                Complex64::new(v[j], 0.0),
                Complex64::new(v[j + 1], 0.0),
                Complex64::new(v[j + 2], 0.0),
                Complex64::new(v[j + 3], 0.0),
            ]
        };
        Some((
            lagrange4(ts, pack(&self.gamma_minus), t).re,
            lagrange4(ts, pack(&self.lamb_shift), t).re,
        ))
    }
}

/// Rates on the Green-function grid.
pub fn extract_rates(green: &GreenFunction) -> RateFunctions {
    let n = green.t.len();
    let mut gamma_minus = Vec::with_capacity(n);
    let mut lamb_shift = Vec::with_capacity(n);
    let mut defined = Vec::with_capacity(n);
    for (&g, &gd) in green.g.iter().zip(&green.g_dot) {
        if g.norm() < RATE_SINGULARITY {
            gamma_minus.push(f64::NAN);
            lamb_shift.push(f64::NAN);
            defined.push(false);
        } else {
            let r = -gd / g;
            gamma_minus.push(r.re + 0.0);
            lamb_shift.push(r.im + 0.0);
            defined.push(true);
        }
    }
    RateFunctions {
        t: green.t.clone(),
        gamma_minus,
        lamb_shift,
        defined,
    }
}

struct RateClosure<'a> {
    rates: &'a RateFunctions,
    omega0: f64,
}

impl OdeSystem for RateClosure<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, t: f64, y: &[Complex64], dydt: &mut [Complex64]) {
        let (gm, h) = self
            .rates
            .rates_at(t)
            .unwrap_or((f64::NAN, f64::NAN));
        // -i (w0 + h) [P_e, rho] + gm (2 s- rho s+ - {P_e, rho})
        let w = Complex64::new(0.0, -(self.omega0 + h));
        dydt[0] = y[3] * (2.0 * gm);
        dydt[1] = -w * y[1] - y[1] * gm;
        dydt[2] = w * y[2] - y[2] * gm;
        dydt[3] = -y[3] * (2.0 * gm);
    }
}

/// Propagates the time-local master equation
/// `d rho/dt = -i (w0 + h(t)) [P_e, rho] + gamma_minus(t) D[sigma_-] rho`
/// with `D[L] rho = 2 L rho L^+ - {L^+ L, rho}`, in the Schrödinger picture.
pub fn propagate_rate_closure(
    rates: &RateFunctions,
    omega0: f64,
    rho0: &QubitState,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if let Some(&t) = t_grid.iter().find(|&&t| rates.rates_at(t).is_none()) {
        return Err(Error::invalid("t_grid", format!("rates undefined or unavailable at t = {t}")));
    }
    let sys = RateClosure { rates, omega0 };
    let mut traj = Trajectory::with_capacity(t_grid.len());
    let stats = ode::solve(&sys, &rho0.to_flat(), t_grid, cfg, |_, t, y| {
        traj.push(t, QubitState::from_flat(y));
        Ok(())
    })?;
    traj.diagnostics.rhs_evaluations = stats.rhs_evals;
    traj.diagnostics.steps = stats.accepted;
    Ok(traj)
}
