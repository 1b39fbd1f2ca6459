//! Two-level density matrices and solver trajectories.
//!
//! Basis ordering is `{|g>, |e>}`: index 0 is the ground state, index 1 the
//! excited state. `P_ee = rho[1][1]` and `P_eg = <e|rho|g> = rho[1][0]`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;

const fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState(pub Mat2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    Excited,
    Plus,
    Mixed,
}

impl InitState {
    pub fn state(self) -> QubitState {
        match self {
            InitState::Excited => QubitState::excited(),
            InitState::Plus => QubitState::plus(),
            InitState::Mixed => QubitState::maximally_mixed(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InitState::Excited => "excited",
            InitState::Plus => "plus",
            InitState::Mixed => "mixed",
        }
    }
}

impl std::str::FromStr for InitState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "excited" => Ok(InitState::Excited),
            "plus" => Ok(InitState::Plus),
            "mixed" => Ok(InitState::Mixed),
            other => Err(Error::invalid(
                "init",
                format!("expected one of excited, plus, mixed; got `{other}`"),
            )),
        }
    }
}

impl QubitState {
    pub fn ground() -> Self {
        Self(Mat2::new(c(1.0), c(0.0), c(0.0), c(0.0)))
    }

    pub fn excited() -> Self {
        Self(Mat2::new(c(0.0), c(0.0), c(0.0), c(1.0)))
    }

    /// `|+> = (|g> + |e>)/sqrt(2)`.
    pub fn plus() -> Self {
        Self(Mat2::from_element(c(0.5)))
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat2::new(c(0.5), c(0.0), c(0.0), c(0.5)))
    }

    /// Validates a density matrix: Hermitian, unit trace and positive within `tol`.
    pub fn from_matrix(m: Mat2, tol: f64) -> Result<Self> {
        let s = Self(m);
        if m.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("rho0", "non-finite entries"));
        }
        if s.hermiticity_defect() > tol {
            return Err(Error::invalid("rho0", "not Hermitian"));
        }
        if s.trace_defect() > tol {
            return Err(Error::invalid("rho0", "trace differs from one"));
        }
        if s.positivity_defect() > tol {
            return Err(Error::invalid("rho0", "not positive semidefinite"));
        }
        Ok(s)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn p_ee(&self) -> f64 {
        self.0[(1, 1)].re
    }

    pub fn p_eg(&self) -> Complex64 {
        self.0[(1, 0)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn trace_defect(&self) -> f64 {
        (self.trace() - 1.0).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.0 - self.0.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = 0.5 * (self.0[(0, 1)] + self.0[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Distance of the spectrum from `[0, 1]`.
    pub fn positivity_defect(&self) -> f64 {
        let [lo, hi] = self.eigenvalues();
        (-lo).max(hi - 1.0).max(0.0)
    }

    pub fn mix(&self, other: &Self, weight: f64) -> Self {
        Self(self.0 * c(weight) + other.0 * c(1.0 - weight))
    }

    pub(crate) fn to_flat(self) -> [Complex64; 4] {
        [self.0[(0, 0)], self.0[(0, 1)], self.0[(1, 0)], self.0[(1, 1)]]
    }

    pub(crate) fn from_flat(v: &[Complex64]) -> Self {
        Self(Mat2::new(v[0], v[1], v[2], v[3]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    pub max_positivity_defect: f64,
    /// Set when the positivity defect exceeded the flagging threshold.
    pub positivity_flagged: bool,
    pub rhs_evaluations: usize,
    pub steps: usize,
}

/// Reduced state sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<QubitState>,
    pub diagnostics: Diagnostics,
}

/// Threshold above which a positivity violation is flagged in diagnostics.
pub const POSITIVITY_FLAG: f64 = 1e-3;

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn push(&mut self, t: f64, s: QubitState) {
        let d = &mut self.diagnostics;
        d.max_trace_defect = d.max_trace_defect.max(s.trace_defect());
        d.max_hermiticity_defect = d.max_hermiticity_defect.max(s.hermiticity_defect());
        let p = s.positivity_defect();
        d.max_positivity_defect = d.max_positivity_defect.max(p);
        d.positivity_flagged |= p > POSITIVITY_FLAG;
        self.t.push(t);
        self.states.push(s);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn p_ee(&self) -> Vec<f64> {
        self.states.iter().map(QubitState::p_ee).collect()
    }

    pub fn p_eg(&self) -> Vec<Complex64> {
        self.states.iter().map(QubitState::p_eg).collect()
    }
}

/// Excited-state population and coherence magnitude at each output time.
pub fn observables(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    (
        traj.p_ee(),
        traj.states.iter().map(|s| s.p_eg().norm()).collect(),
    )
}

/// Uniform grid of `n` points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| t_max * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
