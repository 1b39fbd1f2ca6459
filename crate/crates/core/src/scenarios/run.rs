use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::csv::CsvTable;
use super::{ScenarioConfig, Solver};
use crate::error::{Error, Result};
use crate::expfit::{fit_bcf, BcfFit, SamplingGrid};
use crate::heom;
use crate::redfield::{self, compute_coefficients, propagate_redfield, RedfieldMode};
use crate::rwa_exact::{self, dynamical_map, extract_rates, solve_green, RateFunctions};
use crate::state::Trajectory;

/// Trace and Hermiticity defects above this mark a run as not converged.
pub const STRUCTURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub solver: Solver,
    pub trajectory: Trajectory,
    /// Time-local rates, exact solver only.
    pub rates: Option<RateFunctions>,
    pub max_abs_green: Option<f64>,
    pub redfield_mode: Option<RedfieldMode>,
    /// Reasons the output should not be trusted as converged.
    pub flags: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDeviation {
    pub a: Solver,
    pub b: Solver,
    pub max_abs_p_ee: f64,
    pub max_abs_p_eg: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonRecord {
    pub config: ScenarioConfig,
    pub t: Vec<f64>,
    pub fit: Option<BcfFit>,
    pub outputs: Vec<SolverOutput>,
    pub deviations: Vec<PairDeviation>,
    /// `None` when the delay is zero or beyond the time window.
    pub revivals: Vec<(Solver, Option<f64>)>,
}

/// BCF fit with the configured sampling window.
pub fn fit_for(cfg: &ScenarioConfig) -> Result<BcfFit> {
    let p = cfg.bath();
    let default = SamplingGrid::default_for(&p);
    let t_max = cfg.fit_t_max.unwrap_or(default.t_max);
    let grid = match cfg.fit_points {
        Some(n) => SamplingGrid::new(t_max, n)?,
        None => SamplingGrid::covering(&p, t_max),
    };
    fit_bcf(&p, cfg.eps_r, grid)
}

fn structural_flags(traj: &Trajectory, flags: &mut Vec<String>) {
    let d = &traj.diagnostics;
    if d.max_trace_defect > STRUCTURE_TOL {
        flags.push(format!("trace defect {:.3e}", d.max_trace_defect));
    }
    if d.max_hermiticity_defect > STRUCTURE_TOL {
        flags.push(format!("Hermiticity defect {:.3e}", d.max_hermiticity_defect));
    }
}

/// Runs one solver on `t_grid`. The HEOM solver uses `fit` when given and
/// fits the BCF otherwise.
pub fn run_solver(cfg: &ScenarioConfig, solver: Solver, fit: Option<&BcfFit>, t_grid: &[f64]) -> Result<SolverOutput> {
    let start = Instant::now();
    let p = cfg.bath();
    let rho0 = cfg.init.state();
    let t_max = t_grid.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut flags = Vec::new();
    let mut out = SolverOutput {
        solver,
        trajectory: Trajectory::with_capacity(0),
        rates: None,
        max_abs_green: None,
        redfield_mode: None,
        flags: Vec::new(),
        seconds: 0.0,
    };
    let result: Result<()> = (|| {
        match solver {
            Solver::Heom => {
                let owned;
                let fit = match fit {
                    Some(f) => f,
                    None => {
                        owned = fit_for(cfg)?;
                        &owned
                    }
                };
                if !fit.converged() {
                    flags.push(format!("BCF fit did not reach eps_r = {}", cfg.eps_r));
                }
                out.trajectory = heom::simulate(fit, p.omega0, &rho0, t_grid, &cfg.heom_options())?;
                structural_flags(&out.trajectory, &mut flags);
                let pos = out.trajectory.diagnostics.max_positivity_defect;
                if pos > STRUCTURE_TOL {
                    flags.push(format!("positivity defect {pos:.3e}"));
                }
            }
            Solver::Exact => {
                let dt = cfg.exact_dt.unwrap_or_else(|| rwa_exact::max_step(&p));
                let green = solve_green(&p, t_max, dt)?;
                let g_max = green.max_abs();
                if g_max > 1.0 + STRUCTURE_TOL {
                    flags.push(format!("|G| reached {g_max:.9}"));
                }
                out.max_abs_green = Some(g_max);
                out.trajectory = dynamical_map(&green, &rho0, t_grid)?.schrodinger;
                out.rates = Some(extract_rates(&green));
                structural_flags(&out.trajectory, &mut flags);
            }
            Solver::Redfield => {
                let dt = cfg.redfield_dt.unwrap_or_else(|| redfield::max_step(&p) / 4.0);
                let coeffs = compute_coefficients(&p, t_max, dt)?;
                let mode = cfg.redfield_mode();
                out.redfield_mode = Some(mode);
                out.trajectory = propagate_redfield(&coeffs, p.omega0, &rho0, t_grid, mode, &cfg.integrator())?;
                structural_flags(&out.trajectory, &mut flags);
            }
        }
        Ok(())
    })();
    result.map_err(|e| Error::Solver {
        solver: solver.name(),
        source: Box::new(e),
    })?;
    out.flags = flags;
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

pub fn max_abs_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `max P(t)` over `t >= tau` minus `P(tau)`, with `P(tau)` linearly
/// interpolated. `None` when `tau <= 0` or `tau` lies outside the grid.
pub fn revival_metric(t: &[f64], p: &[f64], tau: f64) -> Option<f64> {
    if tau <= 0.0 || t.is_empty() || tau > *t.last()? {
        return None;
    }
    let i = t.partition_point(|&x| x < tau);
    let at_tau = if i == 0 || t[i] == tau {
        p[i]
    } else {
        let w = (tau - t[i - 1]) / (t[i] - t[i - 1]);
        p[i - 1] + w * (p[i] - p[i - 1])
    };
    let peak = p[i..].iter().copied().fold(at_tau, f64::max);
    Some(peak - at_tau)
}

/// Least-squares exponential decay rate of `p` over the points where
/// `p > p_min`. `None` with fewer than two such points.
pub fn decay_rate_fit(t: &[f64], p: &[f64], p_min: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(p)
        .filter(|(_, &y)| y > p_min)
        .map(|(&x, &y)| (x, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Runs every configured solver on the shared grid. Solvers run
/// concurrently; each is deterministic, so the result does not depend on
/// the worker count.
pub fn run_comparison(cfg: &ScenarioConfig) -> Result<ComparisonRecord> {
    cfg.validate()?;
    let t = cfg.t_grid();
    let fit = if cfg.solvers.contains(&Solver::Heom) {
        Some(fit_for(cfg).map_err(|e| Error::Solver {
            solver: "heom",
            source: Box::new(e),
        })?)
    } else {
        None
    };
    let outputs = cfg
        .solvers
        .par_iter()
        .map(|&s| run_solver(cfg, s, fit.as_ref(), &t))
        .collect::<Result<Vec<_>>>()?;
    let mut deviations = Vec::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let (a, b) = (&outputs[i].trajectory, &outputs[j].trajectory);
            let coh = |tr: &Trajectory| -> Vec<f64> { tr.p_eg().iter().map(|z| z.norm()).collect() };
            deviations.push(PairDeviation {
                a: outputs[i].solver,
                b: outputs[j].solver,
                max_abs_p_ee: max_abs_deviation(&a.p_ee(), &b.p_ee()),
                max_abs_p_eg: max_abs_deviation(&coh(a), &coh(b)),
            });
        }
    }
    let tau = cfg.bath().tau;
    let revivals = outputs
        .iter()
        .map(|o| (o.solver, revival_metric(&t, &o.trajectory.p_ee(), tau)))
        .collect();
    Ok(ComparisonRecord {
        config: cfg.clone(),
        t,
        fit,
        outputs,
        deviations,
        revivals,
    })
}

impl SolverOutput {
    /// `t,P_ee,Re_P_eg,Im_P_eg,trace_defect`, plus `positivity_defect` for Redfield.
    pub fn table(&self) -> CsvTable {
        let mut header = vec!["t", "P_ee", "Re_P_eg", "Im_P_eg", "trace_defect"];
        let redfield = self.solver == Solver::Redfield;
        if redfield {
            header.push("positivity_defect");
        }
        let mut table = CsvTable::new(header);
        for (t, s) in self.trajectory.t.iter().zip(&self.trajectory.states) {
            let eg = s.p_eg();
            let mut row = vec![*t, s.p_ee(), eg.re, eg.im, s.trace_defect()];
            if redfield {
                row.push(s.positivity_defect());
            }
            table.push_floats(&row);
        }
        table
    }
}

/// `t,gamma_minus,h,undefined_flag`, with the flag 1 where `|G|` vanishes.
pub fn rates_table(rates: &RateFunctions) -> CsvTable {
    let mut table = CsvTable::new(["t", "gamma_minus", "h", "undefined_flag"]);
    for i in 0..rates.t.len() {
        table.push(vec![
            super::fmt_f64(rates.t[i]),
            super::fmt_f64(rates.gamma_minus[i]),
            super::fmt_f64(rates.lamb_shift[i]),
            if rates.defined[i] { "0" } else { "1" }.to_string(),
        ]);
    }
    table
}

impl ComparisonRecord {
    pub fn output(&self, solver: Solver) -> Option<&SolverOutput> {
        self.outputs.iter().find(|o| o.solver == solver)
    }

    pub fn deviation(&self, a: Solver, b: Solver) -> Option<&PairDeviation> {
        self.deviations
            .iter()
            .find(|d| (d.a == a && d.b == b) || (d.a == b && d.b == a))
    }

    pub fn flagged(&self) -> bool {
        self.outputs.iter().any(|o| !o.flags.is_empty())
    }

    /// `t`, then `P_ee_<solver>` and `abs_P_eg_<solver>` for each solver.
    pub fn table(&self) -> CsvTable {
        let mut header = vec!["t".to_string()];
        header.extend(self.outputs.iter().map(|o| format!("P_ee_{}", o.solver)));
        header.extend(self.outputs.iter().map(|o| format!("abs_P_eg_{}", o.solver)));
        let mut table = CsvTable::new(header);
        for (i, &t) in self.t.iter().enumerate() {
            let mut row = vec![t];
            row.extend(self.outputs.iter().map(|o| o.trajectory.states[i].p_ee()));
            row.extend(self.outputs.iter().map(|o| o.trajectory.states[i].p_eg().norm()));
            table.push_floats(&row);
        }
        table
    }

    /// Writes one CSV per solver and the combined comparison CSV under the
    /// configured prefix. Returns the written paths.
    pub fn write_csv(&self) -> Result<Vec<PathBuf>> {
        let prefix = &self.config.output_prefix;
        let mut paths = Vec::new();
        for o in &self.outputs {
            let path = PathBuf::from(format!("{prefix}_{}.csv", o.solver));
            o.table().write(&path)?;
            paths.push(path);
        }
        let path = PathBuf::from(format!("{prefix}_comparison.csv"));
        self.table().write(&path)?;
        paths.push(path);
        Ok(paths)
    }

    pub fn summary(&self) -> serde_json::Value {
        let solvers: Vec<_> = self
            .outputs
            .iter()
            .map(|o| {
                let d = &o.trajectory.diagnostics;
                json!({
                    "solver": o.solver.name(),
                    "seconds": o.seconds,
                    "flags": o.flags,
                    "max_trace_defect": d.max_trace_defect,
                    "max_hermiticity_defect": d.max_hermiticity_defect,
                    "max_positivity_defect": d.max_positivity_defect,
                    "positivity_flagged": d.positivity_flagged,
                    "final_p_ee": o.trajectory.states.last().map(|s| s.p_ee()),
                    "min_gamma_minus": o.rates.as_ref().map(RateFunctions::min_gamma_minus),
                    "redfield_mode": o.redfield_mode.map(|m| m.to_string()),
                })
            })
            .collect();
        let deviations: Vec<_> = self
            .deviations
            .iter()
            .map(|d| {
                json!({
                    "pair": [d.a.name(), d.b.name()],
                    "max_abs_p_ee": d.max_abs_p_ee,
                    "max_abs_p_eg": d.max_abs_p_eg,
                })
            })
            .collect();
        let revivals: serde_json::Map<_, _> = self
            .revivals
            .iter()
            .map(|(s, r)| (s.name().to_string(), json!(r)))
            .collect();
        json!({
            "solvers": solvers,
            "deviations": deviations,
            "revival_metric": revivals,
            "fit_terms": self.fit.as_ref().map(|f| [f.real.len(), f.imag.len()]),
        })
    }
}
