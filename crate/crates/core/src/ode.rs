//! Explicit Runge–Kutta integrators for linear and nonlinear complex ODE systems.
//!
//! The default is the adaptive Dormand–Prince 5(4) pair. Steps are clipped so
//! that every requested output time is hit exactly. A classical fixed-step RK4
//! is available for reproducible runs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A first-order system `dy/dt = f(t, y)` over complex state vectors.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[Complex64], dydt: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    /// When set, use classical RK4 with this nominal step instead of the adaptive pair.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_step: None,
            fixed_step: None,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::invalid("rtol", format!("must lie in (0, 1), got {}", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::invalid("atol", format!("must be positive, got {}", self.atol)));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("fixed_step", format!("must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "must contain at least one time"));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("t_grid", "contains non-finite times"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("t_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Integrates `sys` from `t_grid[0]` with initial value `y0`, invoking
/// `observer(index, t, y)` at every grid time (including the first).
pub fn solve<S, O>(
    sys: &S,
    y0: &[Complex64],
    t_grid: &[f64],
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    cfg.validate()?;
    check_grid(t_grid)?;
    if y0.len() != sys.dim() {
        return Err(Error::invalid(
            "y0",
            format!("length {} does not match system dimension {}", y0.len(), sys.dim()),
        ));
    }
    if y0.iter().any(|z| !z.is_finite()) {
        return Err(Error::Integration {
            t: t_grid[0],
            reason: "non-finite initial state".into(),
        });
    }
    observer(0, t_grid[0], y0)?;
    match cfg.fixed_step {
        Some(h) => rk4(sys, y0, t_grid, h, cfg.max_steps, observer),
        None => dopri5(sys, y0, t_grid, cfg, observer),
    }
}

fn rk4<S, O>(
    sys: &S,
    y0: &[Complex64],
    t_grid: &[f64],
    h_nominal: f64,
    max_steps: usize,
    mut observer: O,
) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut tmp = vec![Complex64::default(); n];
    let mut k = vec![vec![Complex64::default(); n]; 4];
    let mut stats = OdeStats::default();
    for (idx, w) in t_grid.windows(2).enumerate() {
        let span = w[1] - w[0];
        let steps = (span / h_nominal).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for s in 0..steps {
            if stats.accepted >= max_steps {
                return Err(Error::Integration {
                    t: w[0] + s as f64 * h,
                    reason: format!("exceeded {max_steps} steps"),
                });
            }
            let t = w[0] + s as f64 * h;
            sys.rhs(t, &y, &mut k[0]);
            for i in 0..n {
                tmp[i] = y[i] + k[0][i] * (0.5 * h);
            }
            sys.rhs(t + 0.5 * h, &tmp, &mut k[1]);
            for i in 0..n {
                tmp[i] = y[i] + k[1][i] * (0.5 * h);
            }
            sys.rhs(t + 0.5 * h, &tmp, &mut k[2]);
            for i in 0..n {
                tmp[i] = y[i] + k[2][i] * h;
            }
            sys.rhs(t + h, &tmp, &mut k[3]);
            for i in 0..n {
                y[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (h / 6.0);
            }
            stats.accepted += 1;
            stats.rhs_evals += 4;
            if y.iter().any(|z| !z.is_finite()) {
                return Err(Error::Integration {
                    t: t + h,
                    reason: "non-finite state".into(),
                });
            }
        }
        observer(idx + 1, w[1], &y)?;
    }
    Ok(stats)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn weighted_rms(v: &[Complex64], scale: impl Fn(usize) -> f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let s: f64 = v
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let r = z.norm() / scale(i);
            r * r
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

fn dopri5<S, O>(
    sys: &S,
    y0: &[Complex64],
    t_grid: &[f64],
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    O: FnMut(usize, f64, &[Complex64]) -> Result<()>,
{
    let n = y0.len();
    let zero = Complex64::default();
    let mut y = y0.to_vec();
    let mut y_new = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut err = vec![zero; n];
    let mut stats = OdeStats::default();

    let mut t = t_grid[0];
    let t_end = *t_grid.last().expect("non-empty grid");
    sys.rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);

    let mut h = match cfg.initial_step {
        Some(h) => h,
        None => {
            let sc = |i: usize| cfg.atol + cfg.rtol * y[i].norm();
            let d0 = weighted_rms(&y, sc);
            let d1 = weighted_rms(&k1, sc);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    };
    if t_grid.len() > 1 {
        h = h.min(t_grid[1] - t_grid[0]);
    }
    h = h.min(max_step);

    let mut next = 1;
    while next < t_grid.len() {
        let target = t_grid[next];
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {} steps", cfg.max_steps),
            });
        }
        let remaining = target - t;
        let lands = h >= remaining * (1.0 - 1e-12);
        let step = if lands { remaining } else { h };
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {step:.3e})"),
            });
        }

        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (step * A21);
        }
        sys.rhs(t + C2 * step, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * step;
        }
        sys.rhs(t + C3 * step, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * step;
        }
        sys.rhs(t + C4 * step, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * step;
        }
        sys.rhs(t + C5 * step, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i]
                + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * step;
        }
        sys.rhs(t + step, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] =
                y[i] + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * step;
        }
        sys.rhs(t + step, &y_new, &mut k7);
        stats.rhs_evals += 6;
        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * step;
        }
        let err_norm = weighted_rms(&err, |i| {
            cfg.atol + cfg.rtol * y[i].norm().max(y_new[i].norm())
        });

        if !err_norm.is_finite() {
            stats.rejected += 1;
            h = step * 0.2;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            continue;
        }

        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err_norm <= 1.0 {
            stats.accepted += 1;
            t = if lands { target } else { t + step };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if lands {
                observer(next, t, &y)?;
                next += 1;
                h = h.max(step * factor).min(max_step);
            } else {
                h = (step * factor).min(max_step);
            }
            if t >= t_end {
                break;
            }
        } else {
            stats.rejected += 1;
            h = step * factor.min(1.0);
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation {
        omega: f64,
        decay: f64,
    }

    impl OdeSystem for Rotation {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[Complex64], dydt: &mut [Complex64]) {
            dydt[0] = Complex64::new(-self.decay, -self.omega) * y[0];
        }
    }

    fn run(cfg: IntegratorConfig) -> Vec<Complex64> {
        let sys = Rotation {
            omega: 3.0,
            decay: 0.1,
        };
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let mut out = Vec::new();
        solve(&sys, &[Complex64::new(1.0, 0.0)], &grid, &cfg, |_, _, y| {
            out.push(y[0]);
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn dopri5_matches_closed_form() {
        let out = run(IntegratorConfig::with_tolerances(1e-10, 1e-12));
        for (i, z) in out.iter().enumerate() {
            let t = i as f64 * 0.5;
            let exact = Complex64::new(-0.1 * t, -3.0 * t).exp();
            assert!((z - exact).norm() < 1e-8, "t = {t}: {z} vs {exact}");
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        let out = run(IntegratorConfig {
            fixed_step: Some(1e-3),
            ..IntegratorConfig::default()
        });
        let exact = Complex64::new(-1.0, -30.0).exp();
        assert!((out[20] - exact).norm() < 1e-9);
    }

    #[test]
    fn rejects_unsorted_grid() {
        let sys = Rotation {
            omega: 1.0,
            decay: 0.0,
        };
        let r = solve(
            &sys,
            &[Complex64::new(1.0, 0.0)],
            &[0.0, 2.0, 1.0],
            &IntegratorConfig::default(),
            |_, _, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    struct Blowup;

    impl OdeSystem for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[Complex64], dydt: &mut [Complex64]) {
            dydt[0] = y[0] * y[0];
        }
    }

    #[test]
    fn reports_failure_time_for_finite_time_blowup() {
        let r = solve(
            &Blowup,
            &[Complex64::new(1.0, 0.0)],
            &[0.0, 2.0],
            &IntegratorConfig::default(),
            |_, _, _| Ok(()),
        );
        match r {
            Err(Error::Integration { t, .. }) => assert!((t - 1.0).abs() < 1e-2, "t = {t}"),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
