//! Exponential decomposition of the bath correlation function by ESPRIT with
//! iterative model-order reduction against a relative L² threshold.

mod esprit;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{bcf_analytic, BathParams};
use crate::error::{Error, Result};

pub use esprit::{amplitude_lsq, esprit_rates, MERGE_DISTANCE, RANK_THRESHOLD};
use esprit::{symmetrize_conjugate_pairs, SignalSubspace};

/// Relative singular-value level that sets the starting (over-complete) order.
pub const INITIAL_ORDER_THRESHOLD: f64 = 1e-12;

/// One term `c exp(-g t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TermRecord", into = "TermRecord")]
pub struct ExpTerm {
    pub c: Complex64,
    pub g: Complex64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    c_re: f64,
    c_im: f64,
    g_re: f64,
    g_im: f64,
}

impl From<TermRecord> for ExpTerm {
    fn from(r: TermRecord) -> Self {
        Self {
            c: Complex64::new(r.c_re, r.c_im),
            g: Complex64::new(r.g_re, r.g_im),
        }
    }
}

impl From<ExpTerm> for TermRecord {
    fn from(t: ExpTerm) -> Self {
        Self {
            c_re: t.c.re,
            c_im: t.c.im,
            g_re: t.g.re,
            g_im: t.g.im,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSum {
    pub terms: Vec<ExpTerm>,
}

impl ExponentialSum {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        Self { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|k| k.c * (-k.g * t).exp()).sum()
    }

    pub fn min_rate_re(&self) -> f64 {
        self.terms.iter().map(|k| k.g.re).fold(f64::INFINITY, f64::min)
    }
}

/// Uniform sampling grid `t_i = i * t_max / (n_samples - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingGrid {
    pub t_max: f64,
    pub n_samples: usize,
}

impl SamplingGrid {
    pub fn new(t_max: f64, n_samples: usize) -> Result<Self> {
        let g = Self { t_max, n_samples };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 4 {
            return Err(Error::invalid("n_samples", format!("need at least 4, got {}", self.n_samples)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::invalid("t_max", format!("must be positive, got {}", self.t_max)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.n_samples - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_samples).map(|i| i as f64 * dt).collect()
    }

    /// Default window for a bath: `3 tau + 40/omega_c` (or `40/omega_c` without
    /// delay), sampled with `dt <= (2 pi / omega_c) / 32`.
    pub fn default_for(p: &BathParams) -> Self {
        let t_max = 3.0 * p.tau + 40.0 / p.omega_c;
        Self::covering(p, t_max)
    }

    /// Grid over `[0, t_max]` with the default resolution for `p`.
    pub fn covering(p: &BathParams, t_max: f64) -> Self {
        let dt = 2.0 * PI / p.omega_c / 32.0;
        let n_samples = ((t_max / dt).ceil() as usize + 1).max(4);
        Self { t_max, n_samples }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub n_terms: usize,
    pub rel_l2_error: f64,
    pub grid: SamplingGrid,
    /// Number of candidate orders fitted by the reduction loop.
    pub iterations: usize,
    pub initial_order: usize,
    pub merged_rates: usize,
    pub reflected_rates: usize,
    pub converged: bool,
}

/// Samples `f` on the uniform grid of `n >= 2` points over `[0, t_max]`.
pub fn sample_signal<F: Fn(f64) -> f64>(f: F, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 samples, got {n}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("t_max", format!("must be positive, got {t_max}")));
    }
    let dt = t_max / (n - 1) as f64;
    let out: Vec<f64> = (0..n).map(|i| f(i as f64 * dt)).collect();
    if let Some(index) = out.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample { index });
    }
    Ok(out)
}

/// Relative discrete L² distance between the sum and the samples.
pub fn relative_l2_error(sum: &ExponentialSum, samples: &[Complex64], dt: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        num += (sum.eval(i as f64 * dt) - x).norm_sqr();
        den += x.norm_sqr();
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

struct Candidate {
    sum: ExponentialSum,
    error: f64,
    merged: usize,
    reflected: usize,
}

fn fit_order(
    subspace: &SignalSubspace,
    samples: &[Complex64],
    dt: f64,
    order: usize,
    real: bool,
) -> Result<Candidate> {
    let mut rates = subspace.rates(order)?;
    let mut reflected = 0;
    for g in rates.iter_mut() {
        if g.re < 0.0 {
            g.re = 0.0;
            reflected += 1;
        }
    }
    let (mut sum, merged) = amplitude_lsq(samples, dt, &rates)?;
    if real {
        symmetrize_conjugate_pairs(&mut sum);
    }
    let error = relative_l2_error(&sum, samples, dt);
    Ok(Candidate {
        sum,
        error,
        merged,
        reflected,
    })
}

/// Fits a sampled signal with the smallest exponential sum found by the
/// reduction loop whose relative L² error is below `eps_r`.
///
/// The loop starts at the number of Hankel singular values above `1e-12` of the
/// largest. If that order fails, the order is lowered geometrically until a
/// passing fit brackets the search; bisection then locates the smallest passing
/// order. When no order passes, the best candidate is returned with
/// `converged = false`.
pub fn fit_signal(samples: &[Complex64], grid: SamplingGrid, eps_r: f64) -> Result<(ExponentialSum, FitReport)> {
    if !(eps_r > 0.0 && eps_r < 1.0) {
        return Err(Error::invalid("eps_r", format!("must lie in (0, 1), got {eps_r}")));
    }
    grid.validate()?;
    if samples.len() != grid.n_samples {
        return Err(Error::invalid("samples", "length does not match the sampling grid"));
    }
    let dt = grid.dt();
    let real = samples.iter().all(|z| z.im == 0.0);
    let subspace = SignalSubspace::new(samples, dt)?;
    if subspace.rank() == 0 {
        let sum = ExponentialSum::default();
        let report = FitReport {
            n_terms: 0,
            rel_l2_error: relative_l2_error(&sum, samples, dt),
            grid,
            iterations: 0,
            initial_order: 0,
            merged_rates: 0,
            reflected_rates: 0,
            converged: samples.iter().all(|z| z.norm() == 0.0),
        };
        return Ok((sum, report));
    }
    let initial_order = subspace.order_above(INITIAL_ORDER_THRESHOLD).max(1);
    let mut iterations = 0;
    let mut attempt = |k: usize| -> Result<Candidate> {
        iterations += 1;
        fit_order(&subspace, samples, dt, k, real)
    };

    let mut best: Option<(usize, Candidate)> = None;
    let keep_best = |k: usize, c: Candidate, best: &mut Option<(usize, Candidate)>| {
        if best.as_ref().is_none_or(|(_, b)| c.error < b.error) {
            *best = Some((k, c));
        }
    };

    let mut hi = initial_order;
    let mut passing: Option<(usize, Candidate)> = None;
    loop {
        let c = attempt(hi)?;
        if c.error < eps_r {
            passing = Some((hi, c));
            break;
        }
        keep_best(hi, c, &mut best);
        if hi == 1 {
            break;
        }
        hi = ((hi as f64 * 0.8).floor() as usize).clamp(1, hi - 1);
    }

    let (chosen, converged) = match passing {
        Some((mut hi, mut hi_fit)) => {
            let mut lo = 1;
            while lo < hi {
                let mid = (lo + hi) / 2;
                let c = attempt(mid)?;
                if c.error < eps_r {
                    hi = mid;
                    hi_fit = c;
                } else {
                    lo = mid + 1;
                }
            }
            (hi_fit, true)
        }
        None => {
            let (_, c) = best.expect("at least one candidate");
            (c, false)
        }
    };
    let report = FitReport {
        n_terms: chosen.sum.len(),
        rel_l2_error: chosen.error,
        grid,
        iterations,
        initial_order,
        merged_rates: chosen.merged,
        reflected_rates: chosen.reflected,
        converged,
    };
    Ok((chosen.sum, report))
}

/// Exponential fits of the real and imaginary parts of the BCF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcfFit {
    pub real: ExponentialSum,
    pub imag: ExponentialSum,
    pub real_report: FitReport,
    pub imag_report: FitReport,
}

impl BcfFit {
    /// Fit with no terms: the bath is switched off.
    pub fn empty() -> Self {
        let grid = SamplingGrid { t_max: 1.0, n_samples: 4 };
        let report = FitReport {
            n_terms: 0,
            rel_l2_error: 0.0,
            grid,
            iterations: 0,
            initial_order: 0,
            merged_rates: 0,
            reflected_rates: 0,
            converged: true,
        };
        Self {
            real: ExponentialSum::default(),
            imag: ExponentialSum::default(),
            real_report: report.clone(),
            imag_report: report,
        }
    }

    pub fn converged(&self) -> bool {
        self.real_report.converged && self.imag_report.converged
    }

    /// Reconstructed `C(t) = C_R(t) + i C_I(t)`.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.real.eval(t) + Complex64::i() * self.imag.eval(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Fits `C_R` and `C_I` independently as real signals on `grid`.
pub fn fit_bcf(p: &BathParams, eps_r: f64, grid: SamplingGrid) -> Result<BcfFit> {
    p.validate()?;
    grid.validate()?;
    let c: Vec<Complex64> = grid.times().iter().map(|&t| bcf_analytic(p, t)).collect();
    if let Some(index) = c.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFiniteSample { index });
    }
    let re: Vec<Complex64> = c.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
    let im: Vec<Complex64> = c.iter().map(|z| Complex64::new(z.im, 0.0)).collect();
    let (real, real_report) = fit_signal(&re, grid, eps_r)?;
    let (imag, imag_report) = fit_signal(&im, grid, eps_r)?;
    Ok(BcfFit {
        real,
        imag,
        real_report,
        imag_report,
    })
}
