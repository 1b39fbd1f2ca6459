//! Scenario configuration, solver orchestration and CSV export.
//!
//! A scenario is a flat JSON object. Every key is optional; unknown keys are
//! rejected. Keys are checked in sorted order, so the first offending key
//! reported for a given document is deterministic.

mod csv;
mod run;

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bath::{BathParams, Beta};
use crate::error::{Error, Result};
use crate::heom::{HeomOptions, Scaling, DEFAULT_MAX_ADOS};
use crate::ode::IntegratorConfig;
use crate::redfield::RedfieldMode;
use crate::state::{uniform_grid, InitState};

pub use csv::{fmt_f64, CsvTable};
pub use run::{
    decay_rate_fit, fit_for, max_abs_deviation, rates_table, revival_metric, run_comparison, run_solver,
    ComparisonRecord, STRUCTURE_TOL,
    PairDeviation, SolverOutput,
};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "GIANT_HEOM_THREADS";

/// Default `t_max` when the delay is zero: about three lifetimes at the default coupling.
pub const MARKOVIAN_T_MAX: f64 = 125.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Heom,
    Exact,
    Redfield,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Heom => "heom",
            Solver::Exact => "exact",
            Solver::Redfield => "redfield",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heom" => Ok(Solver::Heom),
            "exact" => Ok(Solver::Exact),
            "redfield" => Ok(Solver::Redfield),
            other => Err(Error::invalid(
                "method",
                format!("expected one of heom, exact, redfield; got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub eta: f64,
    pub omega_c: f64,
    /// Delay in units of the atomic period, `omega0 tau / 2 pi`.
    pub omega0_tau_over_2pi: f64,
    pub beta_omega0: Beta,
    pub solvers: Vec<Solver>,
    pub init: InitState,
    pub eps_r: f64,
    pub depth: usize,
    /// Defaults to `2.5 tau`, or [`MARKOVIAN_T_MAX`] without delay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    pub n_points: usize,
    pub rtol: f64,
    pub atol: f64,
    pub output_prefix: String,
    /// BCF sampling window for the fit; defaults to `3 tau + 40/omega_c`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_points: Option<usize>,
    /// Defaults to `rwa_minus` at zero temperature and `rwa_full` otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redfield_mode: Option<RedfieldMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redfield_dt: Option<f64>,
    pub heom_scaling: Scaling,
    pub max_ados: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            omega_c: 2.0,
            omega0_tau_over_2pi: 20.0,
            beta_omega0: Beta::Infinite,
            solvers: vec![Solver::Heom, Solver::Exact],
            init: InitState::Excited,
            eps_r: 1e-3,
            depth: 2,
            t_max: None,
            n_points: 501,
            rtol: 1e-8,
            atol: 1e-10,
            output_prefix: "giant_heom".into(),
            fit_t_max: None,
            fit_points: None,
            redfield_mode: None,
            exact_dt: None,
            redfield_dt: None,
            heom_scaling: Scaling::None,
            max_ados: DEFAULT_MAX_ADOS,
            fixed_step: None,
        }
    }
}

fn bad(key: &str, reason: impl fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {reason}"))
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioConfig {
    /// Checks ranges and solver compatibility, in sorted key order.
    pub fn validate(&self) -> Result<()> {
        positive("atol", self.atol)?;
        if let Beta::Finite(b) = self.beta_omega0 {
            positive("beta_omega0", b)?;
        }
        if !(self.eps_r > 0.0 && self.eps_r < 1.0) {
            return Err(bad("eps_r", format!("must lie in (0, 1), got {}", self.eps_r)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(bad("eta", format!("must be non-negative and finite, got {}", self.eta)));
        }
        if let Some(dt) = self.exact_dt {
            positive("exact_dt", dt)?;
        }
        if let Some(n) = self.fit_points {
            if n < 4 {
                return Err(bad("fit_points", format!("need at least 4, got {n}")));
            }
        }
        if let Some(t) = self.fit_t_max {
            positive("fit_t_max", t)?;
        }
        if let Some(h) = self.fixed_step {
            positive("fixed_step", h)?;
        }
        if self.max_ados == 0 {
            return Err(bad("max_ados", "must be at least 1"));
        }
        if self.n_points < 2 {
            return Err(bad("n_points", format!("need at least 2, got {}", self.n_points)));
        }
        if !(self.omega0_tau_over_2pi >= 0.0 && self.omega0_tau_over_2pi.is_finite()) {
            return Err(bad(
                "omega0_tau_over_2pi",
                format!("must be non-negative and finite, got {}", self.omega0_tau_over_2pi),
            ));
        }
        positive("omega_c", self.omega_c)?;
        if self.output_prefix.is_empty() {
            return Err(bad("output_prefix", "must not be empty"));
        }
        if let Some(dt) = self.redfield_dt {
            positive("redfield_dt", dt)?;
        }
        positive("rtol", self.rtol)?;
        if self.solvers.is_empty() {
            return Err(bad("solvers", "at least one solver is required"));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return Err(bad("solvers", format!("`{s}` listed twice")));
            }
        }
        if self.solvers.contains(&Solver::Exact) && !self.beta_omega0.is_infinite() {
            return Err(bad("solvers", "the exact solver requires beta_omega0 = \"inf\""));
        }
        if let Some(t) = self.t_max {
            positive("t_max", t)?;
        }
        Ok(())
    }

    pub fn bath(&self) -> BathParams {
        BathParams {
            eta: self.eta,
            omega0: 1.0,
            omega_c: self.omega_c,
            tau: 2.0 * PI * self.omega0_tau_over_2pi,
            beta: self.beta_omega0,
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or_else(|| {
            let tau = self.bath().tau;
            if tau > 0.0 {
                2.5 * tau
            } else {
                MARKOVIAN_T_MAX
            }
        })
    }

    pub fn t_grid(&self) -> Vec<f64> {
        uniform_grid(self.t_max(), self.n_points)
    }

    pub fn redfield_mode(&self) -> RedfieldMode {
        self.redfield_mode.unwrap_or(if self.beta_omega0.is_infinite() {
            RedfieldMode::RwaMinus
        } else {
            RedfieldMode::RwaFull
        })
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            fixed_step: self.fixed_step,
            ..IntegratorConfig::with_tolerances(self.rtol, self.atol)
        }
    }

    pub fn heom_options(&self) -> HeomOptions {
        HeomOptions {
            depth: self.depth,
            scaling: self.heom_scaling,
            max_ados: self.max_ados,
            integrator: self.integrator(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Error::Config("the configuration must be a JSON object".into()));
    };
    // serde_json maps iterate in sorted key order.
    for (key, v) in &map {
        let mut single = Map::new();
        single.insert(key.clone(), v.clone());
        serde_json::from_value::<ScenarioConfig>(Value::Object(single)).map_err(|e| {
            if e.to_string().starts_with("unknown field") {
                bad(key, "unknown key")
            } else {
                bad(key, e)
            }
        })?;
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Named parameter sets.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let base = ScenarioConfig::default();
    let all = vec![Solver::Heom, Solver::Exact, Solver::Redfield];
    let cfg = match name {
        "markovian" => ScenarioConfig {
            omega0_tau_over_2pi: 0.0,
            solvers: all,
            output_prefix: "markovian".into(),
            ..base
        },
        "delayed-desk" => ScenarioConfig {
            omega0_tau_over_2pi: 4.0,
            solvers: all,
            output_prefix: "delayed_desk".into(),
            ..base
        },
        "delayed-long" => ScenarioConfig {
            solvers: all,
            output_prefix: "delayed_long".into(),
            ..base
        },
        "thermal-weak" => ScenarioConfig {
            beta_omega0: Beta::Finite(1.0),
            solvers: vec![Solver::Heom, Solver::Redfield],
            init: InitState::Plus,
            output_prefix: "thermal_weak".into(),
            ..base
        },
        "thermal-strong" => ScenarioConfig {
            eta: 0.05,
            beta_omega0: Beta::Finite(1.0),
            solvers: vec![Solver::Heom],
            init: InitState::Plus,
            output_prefix: "thermal_strong".into(),
            ..base
        },
        "strong-zero-t" => ScenarioConfig {
            eta: 0.05,
            init: InitState::Plus,
            output_prefix: "strong_zero_t".into(),
            ..base
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

pub const PRESETS: [&str; 6] = [
    "markovian",
    "delayed-desk",
    "delayed-long",
    "thermal-weak",
    "thermal-strong",
    "strong-zero-t",
];

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`]. Returns the count applied.
pub fn init_thread_pool() -> Result<Option<usize>> {
    let Some(n) = threads_from_env()? else {
        return Ok(None);
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    Ok(Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let p = cfg.bath();
        let d = BathParams::default();
        assert_eq!((p.eta, p.omega_c, p.beta), (d.eta, d.omega_c, d.beta));
        assert!((p.tau - d.tau).abs() < 1e-12);
        assert_eq!(cfg.solvers, vec![Solver::Heom, Solver::Exact]);
        assert_eq!(cfg.init, InitState::Excited);
        assert!((cfg.t_max() - 2.5 * 40.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn zero_delay_and_strong_coupling_documents() {
        let cfg = parse_config(r#"{"omega0_tau_over_2pi": 0}"#).unwrap();
        assert_eq!(cfg.bath().tau, 0.0);
        assert_eq!(cfg.t_max(), MARKOVIAN_T_MAX);
        let cfg = parse_config(r#"{"beta_omega0": "inf", "eta": 0.05}"#).unwrap();
        assert!(cfg.bath().beta.is_infinite());
        assert_eq!(cfg.eta, 0.05);
        assert_eq!(cfg.redfield_mode(), RedfieldMode::RwaMinus);
    }

    #[test]
    fn errors_name_the_first_offending_key() {
        let e = parse_config(r#"{"zeta": 1, "bogus": 2}"#).unwrap_err().to_string();
        assert!(e.contains("`bogus`"), "{e}");
        let e = parse_config(r#"{"eta": "x"}"#).unwrap_err().to_string();
        assert!(e.contains("`eta`"), "{e}");
        let e = parse_config(r#"{"omega_c": -1, "eta": -1}"#).unwrap_err().to_string();
        assert!(e.contains("`eta`"), "{e}");
        let e = parse_config(r#"{"beta_omega0": 1.0}"#).unwrap_err().to_string();
        assert!(e.contains("`solvers`"), "{e}");
        assert!(parse_config("[1]").is_err());
        assert!(parse_config("{").is_err());
        assert!(load_config(Path::new("/nonexistent/cfg.json")).is_err());
    }

    #[test]
    fn validated_config_round_trips() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(parse_config(&cfg.to_json().unwrap()).unwrap(), cfg);
        }
        let cfg = parse_config(
            r#"{"eta": 0.0123456789012345, "t_max": 17.3, "redfield_mode": "rwa-full", "beta_omega0": 0.7, "solvers": ["heom"]}"#,
        )
        .unwrap();
        assert_eq!(parse_config(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn thread_variable_is_parsed() {
        assert!(threads_from_env().is_ok());
    }
}
