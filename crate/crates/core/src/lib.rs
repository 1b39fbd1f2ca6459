//! Non-Markovian dynamics of a two-level atom coupled to a one-dimensional field at
//! two contact points separated by a delay `tau`.
//!
//! Units are reduced throughout: `hbar = 1`, frequencies in units of the atomic
//! frequency `omega0` and times in units of `1/omega0`.
//!
//! * [`bath`]: spectral densities and the bath correlation function (BCF).
//! * [`expfit`]: ESPRIT exponential decomposition of the BCF.
//! * [`heom`]: hierarchical equations of motion.
//! * [`rwa_exact`]: exact single-excitation solution under the rotating-wave approximation.
//! * [`redfield`]: time-local Redfield master equation.
//! * [`meanforce`]: second-order Hamiltonian of mean force.
//! * [`scenarios`]: configuration, solver orchestration and CSV export.

pub mod bath;
pub mod error;
pub mod expfit;
pub mod heom;
pub mod meanforce;
pub mod ode;
pub mod quad;
pub mod redfield;
pub mod rwa_exact;
pub mod scenarios;
pub mod state;

pub use bath::{BathParams, Beta};
pub use error::{Error, Result};
pub use expfit::{ExpTerm, ExponentialSum, FitReport, SamplingGrid};
pub use heom::{HierarchyIndex, HierarchySpace};
pub use meanforce::MeanForceResult;
pub use ode::IntegratorConfig;
pub use redfield::{RedfieldCoefficients, RedfieldMode};
pub use rwa_exact::{GreenFunction, RateFunctions};
pub use scenarios::{ComparisonRecord, ScenarioConfig, Solver};
pub use state::{InitState, QubitState, Trajectory};

pub use num_complex::Complex64;
