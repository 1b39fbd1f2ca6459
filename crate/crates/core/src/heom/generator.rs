use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hierarchy::HierarchySpace;
use crate::error::{Error, Result};
use crate::expfit::BcfFit;
use crate::ode::OdeSystem;

/// ADO normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// The hierarchy exactly as written, with unit up-coupling.
    #[default]
    None,
    /// ADOs divided by `prod_k s_k^{n_k} sqrt(n_k!)` with `s_k = sqrt(|c_k|)`.
    Amplitude,
}

type Block = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[inline]
fn add(a: &mut Block, b: &Block, w: Complex64) {
    for i in 0..4 {
        a[i] += b[i] * w;
    }
}

/// `[sigma_x, A]` in the `{g, e}` basis.
#[inline]
fn comm_sx(a: &Block) -> Block {
    [a[2] - a[1], a[3] - a[0], a[0] - a[3], a[1] - a[2]]
}

/// `{sigma_x, A}`.
#[inline]
fn anti_sx(a: &Block) -> Block {
    [a[2] + a[1], a[3] + a[0], a[0] + a[3], a[1] + a[2]]
}

/// Matrix-free HEOM generator for a two-level system coupled through `sigma_x`:
///
/// ```text
/// d rho_n/dt = -i w0 [P_e, rho_n] - (sum_k n_k g_k) rho_n
///              - i sum_{k in R} c_k n_k [sigma_x, rho_{n-k}]
///              + sum_{k in I} c_k n_k {sigma_x, rho_{n-k}}
///              - i sum_k [sigma_x, rho_{n+k}]
/// ```
///
/// where `C_R(t) = sum c_k exp(-g_k t)` over the real-part components and
/// likewise for `C_I`. Up-couplings out of the deepest level are dropped.
#[derive(Debug, Clone)]
pub struct HeomGenerator {
    space: HierarchySpace,
    omega0: f64,
    rates: Vec<Complex64>,
    /// Down-coupling weight per component, excluding the occupation factor.
    down_weight: Vec<Complex64>,
    /// Up-coupling weight per component (unit without scaling).
    up_weight: Vec<Complex64>,
    scaling: Scaling,
    is_real_part: Vec<bool>,
}

impl HeomGenerator {
    pub fn new(space: HierarchySpace, fit: &BcfFit, omega0: f64, scaling: Scaling) -> Result<Self> {
        if space.n_r() != fit.real.len() || space.n_i() != fit.imag.len() {
            return Err(Error::invalid(
                "space",
                format!(
                    "hierarchy has ({}, {}) components but the fit has ({}, {}) terms",
                    space.n_r(),
                    space.n_i(),
                    fit.real.len(),
                    fit.imag.len()
                ),
            ));
        }
        let terms: Vec<_> = fit.real.terms.iter().chain(fit.imag.terms.iter()).collect();
        let rates = terms.iter().map(|t| t.g).collect();
        let is_real_part: Vec<bool> = (0..terms.len()).map(|k| k < space.n_r()).collect();
        let (down_weight, up_weight) = match scaling {
            Scaling::None => (
                terms.iter().map(|t| t.c).collect(),
                vec![Complex64::new(1.0, 0.0); terms.len()],
            ),
            Scaling::Amplitude => {
                let s: Vec<f64> = terms
                    .iter()
                    .map(|t| {
                        let a = t.c.norm().sqrt();
                        if a > 0.0 {
                            a
                        } else {
                            1.0
                        }
                    })
                    .collect();
                (
                    terms.iter().zip(&s).map(|(t, &s)| t.c / s).collect(),
                    s.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
                )
            }
        };
        Ok(Self {
            space,
            omega0,
            rates,
            down_weight,
            up_weight,
            scaling,
            is_real_part,
        })
    }

    pub fn space(&self) -> &HierarchySpace {
        &self.space
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn state_len(&self) -> usize {
        4 * self.space.len()
    }

    fn block(state: &[Complex64], pos: usize) -> Block {
        let b = &state[4 * pos..4 * pos + 4];
        [b[0], b[1], b[2], b[3]]
    }

    fn apply_block(&self, pos: usize, state: &[Complex64]) -> Block {
        let space = &self.space;
        let rho = Self::block(state, pos);
        let members = space.members(pos);
        let damping: Complex64 = members.iter().map(|&k| self.rates[k as usize]).sum();
        // -i w0 [P_e, rho] = -i w0 [[0, -b], [c, 0]]
        let w = Complex64::new(0.0, -self.omega0);
        let mut out = [
            -damping * rho[0],
            -w * rho[1] - damping * rho[1],
            w * rho[2] - damping * rho[2],
            -damping * rho[3],
        ];
        for d in space.downs(pos) {
            let k = d.component as usize;
            let lower = Self::block(state, d.position as usize);
            let occupation = match self.scaling {
                Scaling::None => d.count as f64,
                Scaling::Amplitude => (d.count as f64).sqrt(),
            };
            let coeff = self.down_weight[k] * occupation;
            if self.is_real_part[k] {
                add(&mut out, &comm_sx(&lower), MINUS_I * coeff);
            } else {
                add(&mut out, &anti_sx(&lower), coeff);
            }
        }
        if let Some(ups) = space.ups(pos) {
            let mut acc: Block = [ZERO; 4];
            match self.scaling {
                Scaling::None => {
                    for &u in ups {
                        let b = &state[4 * u as usize..4 * u as usize + 4];
                        for i in 0..4 {
                            acc[i] += b[i];
                        }
                    }
                }
                Scaling::Amplitude => {
                    for (k, &u) in ups.iter().enumerate() {
                        let n_k = members.iter().filter(|&&m| m as usize == k).count();
                        let w = self.up_weight[k] * ((n_k + 1) as f64).sqrt();
                        add(&mut acc, &Self::block(state, u as usize), w);
                    }
                }
            }
            add(&mut out, &comm_sx(&acc), MINUS_I);
        }
        out
    }

    /// Writes the time derivative of `state` into `out`.
    pub fn apply(&self, state: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(state.len(), self.state_len(), "state length mismatch");
        assert_eq!(out.len(), self.state_len(), "output length mismatch");
        out.par_chunks_mut(4)
            .with_min_len(64)
            .enumerate()
            .for_each(|(pos, o)| {
                o.copy_from_slice(&self.apply_block(pos, state));
            });
    }
}

impl OdeSystem for HeomGenerator {
    fn dim(&self) -> usize {
        self.state_len()
    }

    fn rhs(&self, _t: f64, y: &[Complex64], dydt: &mut [Complex64]) {
        self.apply(y, dydt);
    }
}

/// Time derivative of a full ADO vector.
pub fn apply_generator(
    space: &HierarchySpace,
    fit: &BcfFit,
    omega0: f64,
    state: &[Complex64],
) -> Result<Vec<Complex64>> {
    let g = HeomGenerator::new(space.clone(), fit, omega0, Scaling::None)?;
    if state.len() != g.state_len() {
        return Err(Error::invalid(
            "state",
            format!("length {} does not match hierarchy ({} entries)", state.len(), g.state_len()),
        ));
    }
    let mut out = vec![ZERO; state.len()];
    g.apply(state, &mut out);
    Ok(out)
}
