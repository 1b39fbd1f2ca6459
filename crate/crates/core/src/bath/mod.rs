//! Spectral densities and the bath correlation function of the two-contact
//! giant atom with an Ohmic, exponentially cut-off coupling.

mod quadrature;
mod trigamma;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

pub use quadrature::{bcf_quadrature, bcf_quadrature_tol, DEFAULT_TOLERANCE, WINDOW_CUTOFFS};
pub use trigamma::trigamma;

/// Inverse temperature `beta = 1/T` (with `hbar = k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    /// Zero temperature.
    Infinite,
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b:?}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "Inf" | "Infinity") {
            return Ok(Beta::Infinite);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::invalid("beta", format!("expected a number or `inf`, got `{s}`")))?;
        if v.is_infinite() && v > 0.0 {
            Ok(Beta::Infinite)
        } else {
            Ok(Beta::Finite(v))
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Beta;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Beta, E> {
                Ok(Beta::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Beta, E> {
                Ok(Beta::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Beta, E> {
                Ok(Beta::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Beta, E> {
                v.parse().map_err(|e: Error| E::custom(e))
            }
        }
        d.deserialize_any(V)
    }
}

/// Physical parameters of atom and field, in reduced units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub eta: f64,
    pub omega0: f64,
    pub omega_c: f64,
    pub tau: f64,
    pub beta: Beta,
}

impl Default for BathParams {
    /// `eta = 0.01`, `omega_c = 2`, `omega0 tau / 2pi = 20`, zero temperature.
    fn default() -> Self {
        Self {
            eta: 1e-2,
            omega0: 1.0,
            omega_c: 2.0,
            tau: 2.0 * PI * 20.0,
            beta: Beta::Infinite,
        }
    }
}

impl BathParams {
    pub fn new(eta: f64, omega0: f64, omega_c: f64, tau: f64, beta: Beta) -> Result<Self> {
        let p = Self {
            eta,
            omega0,
            omega_c,
            tau,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Defaults with the delay given as `omega0 tau / 2 pi`.
    pub fn with_delay_periods(periods: f64) -> Self {
        Self {
            tau: 2.0 * PI * periods,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
            }
        }
        positive("eta", self.eta)?;
        positive("omega0", self.omega0)?;
        positive("omega_c", self.omega_c)?;
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be nonnegative and finite, got {}", self.tau)));
        }
        if let Beta::Finite(b) = self.beta {
            positive("beta", b)?;
        }
        Ok(())
    }
}

/// `gamma(w) = eta w exp(-|w|/omega_c)`, odd in `w`.
pub fn spectral_coupling(p: &BathParams, omega: f64) -> f64 {
    p.eta * omega * (-omega.abs() / p.omega_c).exp()
}

/// `J(beta, w) = 2 gamma(w) cos^2(w tau / 2) / (1 - exp(-beta w))`.
///
/// At zero temperature the thermal factor becomes the step function; at `w = 0`
/// the continuous limit `2 eta / beta` is returned.
pub fn effective_spectral_density(p: &BathParams, omega: f64) -> f64 {
    let c = (0.5 * omega * p.tau).cos();
    let shape = 2.0 * c * c;
    match p.beta {
        Beta::Infinite => {
            if omega > 0.0 {
                shape * spectral_coupling(p, omega)
            } else {
                0.0
            }
        }
        Beta::Finite(b) => {
            if omega == 0.0 {
                shape * p.eta / b
            } else {
                let envelope = p.eta * (-omega.abs() / p.omega_c).exp();
                shape * envelope * omega / -(-b * omega).exp_m1()
            }
        }
    }
}

fn zero_temperature_bcf(p: &BathParams, t: f64) -> Complex64 {
    let term = |s: f64| Complex64::new(1.0, p.omega_c * s).powi(-2);
    let pref = p.eta * p.omega_c * p.omega_c / PI;
    (term(t) + (term(t - p.tau) + term(t + p.tau)) * 0.5) * pref
}

/// Finite-temperature BCF at complex time `t` with `Im t <= 0`, `Im t >= -beta`.
fn thermal_bcf(p: &BathParams, beta: f64, t: Complex64) -> Complex64 {
    let bw = beta * p.omega_c;
    let i = Complex64::i();
    let a = |s: Complex64| (1.0 + i * s * p.omega_c) / bw;
    let b = |s: Complex64| (1.0 - i * s * p.omega_c + bw) / bw;
    let psi = trigamma::trigamma_right;
    let tau = Complex64::new(p.tau, 0.0);
    let sum = (psi(a(t)) + psi(b(t))) * 2.0
        + psi(a(t - tau))
        + psi(a(t + tau))
        + psi(b(t - tau))
        + psi(b(t + tau));
    sum * (p.eta / (2.0 * PI * beta * beta))
}

/// Closed-form bath correlation function `C(t)`.
///
/// Finite temperature uses the trigamma representation; zero temperature uses
/// `(eta wc^2 / pi) [(1 + i wc t)^-2 + ((1 + i wc (t - tau))^-2 + (1 + i wc (t + tau))^-2) / 2]`.
pub fn bcf_analytic(p: &BathParams, t: f64) -> Complex64 {
    match p.beta {
        Beta::Infinite => zero_temperature_bcf(p, t),
        Beta::Finite(b) => thermal_bcf(p, b, Complex64::new(t, 0.0)),
    }
}

/// Imaginary-time correlation function `C~(s) = C(t = -i s)` for `0 <= s <= beta`.
pub fn bcf_imaginary_time(p: &BathParams, s_tilde: f64) -> Result<Complex64> {
    let beta = p
        .beta
        .finite()
        .ok_or_else(|| Error::Domain("imaginary-time BCF requires finite beta".into()))?;
    if !(0.0..=beta).contains(&s_tilde) {
        return Err(Error::Domain(format!(
            "imaginary time {s_tilde} outside [0, beta = {beta}]"
        )));
    }
    Ok(thermal_bcf(p, beta, Complex64::new(0.0, -s_tilde)))
}
