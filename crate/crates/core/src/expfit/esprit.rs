use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use super::{ExpTerm, ExponentialSum};
use crate::error::{Error, Result};

/// Relative singular-value threshold for the numerical rank of the Hankel matrix.
pub const RANK_THRESHOLD: f64 = 1e-14;

/// Distance in the `z = exp(-g dt)` plane below which two rates are merged.
pub const MERGE_DISTANCE: f64 = 1e-12;

/// Signal subspace of the Hankel matrix, computed once and reused for every
/// model order.
pub(crate) struct SignalSubspace {
    pub singular_values: Vec<f64>,
    /// `U_up^H U_down` for the retained columns.
    cross: DMatrix<Complex64>,
    /// Conjugated last row of `U`.
    w: DVector<Complex64>,
    dt: f64,
}

fn hankel_rows(n: usize) -> usize {
    n / 2
}

impl SignalSubspace {
    pub fn new(samples: &[Complex64], dt: f64) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::invalid("samples", "need at least 4 samples"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if let Some(index) = samples.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        let n = samples.len();
        let rows = hankel_rows(n);
        let cols = n - rows + 1;
        let real = samples.iter().all(|z| z.im == 0.0);
        let (u, s) = if real {
            let h = DMatrix::from_fn(rows, cols, |i, j| samples[i + j].re);
            let svd = nalgebra::SVD::try_new(h, true, false, f64::EPSILON, 0)
                .ok_or_else(|| Error::Domain("Hankel SVD did not converge".into()))?;
            let u = svd.u.expect("U requested");
            (u.map(|x| Complex64::new(x, 0.0)), svd.singular_values)
        } else {
            let h = DMatrix::from_fn(rows, cols, |i, j| samples[i + j]);
            let svd = nalgebra::SVD::try_new(h, true, false, f64::EPSILON, 0)
                .ok_or_else(|| Error::Domain("Hankel SVD did not converge".into()))?;
            (svd.u.expect("U requested"), svd.singular_values)
        };
        let singular_values: Vec<f64> = s.iter().copied().collect();
        let s0 = singular_values.first().copied().unwrap_or(0.0);
        let rank = if s0 > 0.0 {
            singular_values
                .iter()
                .take_while(|&&x| x > RANK_THRESHOLD * s0)
                .count()
        } else {
            0
        };
        let u = u.columns(0, rank).into_owned();
        let up = u.rows(0, rows - 1);
        let down = u.rows(1, rows - 1);
        let cross = up.adjoint() * down;
        let w = u.row(rows - 1).adjoint();
        Ok(Self {
            singular_values,
            cross,
            w,
            dt,
        })
    }

    pub fn rank(&self) -> usize {
        self.cross.nrows()
    }

    /// Number of singular values above `rel * s_max`.
    pub fn order_above(&self, rel: f64) -> usize {
        let s0 = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .take_while(|&&x| x > rel * s0)
            .count()
            .min(self.rank())
    }

    /// Rates from the dominant `order` singular vectors.
    pub fn rates(&self, order: usize) -> Result<Vec<Complex64>> {
        if order == 0 || order > self.rank() {
            return Err(Error::RankDeficient {
                requested: order,
                achievable: self.rank(),
            });
        }
        let m = self.cross.view((0, 0), (order, order));
        let w = self.w.rows(0, order);
        let norm = w.norm_squared();
        // U_up^H U_up = I - w w^H, inverted by Sherman–Morrison.
        let phi = if 1.0 - norm > 1e-10 {
            let corr = &w * (w.adjoint() * m) / Complex64::new(1.0 - norm, 0.0);
            m + corr
        } else {
            let gram = DMatrix::<Complex64>::identity(order, order) - &w * w.adjoint();
            let pinv = gram
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::Domain(e.into()))?;
            pinv * m
        };
        let eig = Schur::try_new(phi, f64::EPSILON, 0)
            .ok_or_else(|| Error::Domain("shift-operator eigenproblem did not converge".into()))?
            .eigenvalues()
            .ok_or_else(|| Error::Domain("shift-operator eigenvalues unavailable".into()))?;
        Ok(eig.iter().map(|z| -z.ln() / self.dt).collect())
    }
}

/// ESPRIT estimate of `order` complex rates `g_k` for a uniformly sampled signal
/// `x(t_i) = sum_k c_k exp(-g_k t_i)`.
pub fn esprit_rates(samples: &[Complex64], dt: f64, order: usize) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if order > hankel_rows(n) {
        return Err(Error::invalid(
            "order",
            format!("must not exceed floor(n/2) = {}", hankel_rows(n)),
        ));
    }
    SignalSubspace::new(samples, dt)?.rates(order)
}

/// Removes rates whose `z = exp(-g dt)` lie within [`MERGE_DISTANCE`] of an
/// earlier one. Returns the survivors and the number merged.
pub(crate) fn dedup_rates(rates: &[Complex64], dt: f64) -> (Vec<Complex64>, usize) {
    let mut kept: Vec<Complex64> = Vec::with_capacity(rates.len());
    let mut zs: Vec<Complex64> = Vec::with_capacity(rates.len());
    let mut merged = 0;
    for &g in rates {
        let z = (-g * dt).exp();
        if zs.iter().any(|&y| (y - z).norm() <= MERGE_DISTANCE) {
            merged += 1;
        } else {
            kept.push(g);
            zs.push(z);
        }
    }
    (kept, merged)
}

/// Least-squares amplitudes for fixed rates, via SVD of the Vandermonde matrix.
///
/// Near-duplicate rates are merged first; the number merged is returned alongside.
pub fn amplitude_lsq(
    samples: &[Complex64],
    dt: f64,
    rates: &[Complex64],
) -> Result<(ExponentialSum, usize)> {
    if let Some(index) = samples.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFiniteSample { index });
    }
    let (rates, merged) = dedup_rates(rates, dt);
    if rates.is_empty() {
        return Ok((ExponentialSum::default(), merged));
    }
    let n = samples.len();
    let v = DMatrix::from_fn(n, rates.len(), |i, k| (-rates[k] * (i as f64 * dt)).exp());
    let b = DVector::from_column_slice(samples);
    let svd = nalgebra::SVD::try_new(v, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Domain("Vandermonde SVD did not converge".into()))?;
    let smax = svd.singular_values.max();
    let c = svd
        .solve(&b, smax * n as f64 * f64::EPSILON)
        .map_err(|e| Error::Domain(e.into()))?;
    let terms = rates
        .iter()
        .zip(c.iter())
        .map(|(&g, &c)| ExpTerm { c, g })
        .collect();
    Ok((ExponentialSum { terms }, merged))
}

/// Makes the amplitudes of conjugate rate pairs exact conjugates, so the sum is
/// real on the real axis.
pub(crate) fn symmetrize_conjugate_pairs(sum: &mut ExponentialSum) {
    let n = sum.terms.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] {
            continue;
        }
        let gi = sum.terms[i].g;
        if gi.im == 0.0 {
            sum.terms[i].c.im = 0.0;
            paired[i] = true;
            continue;
        }
        let partner = (0..n)
            .filter(|&j| j != i && !paired[j])
            .min_by(|&a, &b| {
                let da = (sum.terms[a].g - gi.conj()).norm();
                let db = (sum.terms[b].g - gi.conj()).norm();
                da.total_cmp(&db)
            });
        match partner {
            Some(j) if (sum.terms[j].g - gi.conj()).norm() <= 1e-8 * gi.norm().max(1.0) => {
                let g = Complex64::new(0.5 * (gi.re + sum.terms[j].g.re), 0.5 * (gi.im - sum.terms[j].g.im));
                let c = 0.5 * (sum.terms[i].c + sum.terms[j].c.conj());
                sum.terms[i] = ExpTerm { c, g };
                sum.terms[j] = ExpTerm { c: c.conj(), g: g.conj() };
                paired[i] = true;
                paired[j] = true;
            }
            _ => {
                paired[i] = true;
            }
        }
    }
}
