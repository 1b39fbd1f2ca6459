use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use giant_heom::bath::{bcf_analytic, bcf_quadrature};
use giant_heom::expfit::BcfFit;
use giant_heom::meanforce::mean_force;
use giant_heom::scenarios::{
    self, fit_for, load_config, preset, rates_table, run_comparison, run_solver, CsvTable, ScenarioConfig,
};
use giant_heom::state::uniform_grid;
use giant_heom::{Beta, Error, InitState, RedfieldMode, Solver};

#[derive(Parser)]
#[command(name = "giant-heom", version, about = "Non-Markovian dynamics of a two-contact giant atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (flat JSON object).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named scenario used instead of a configuration file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Output path; defaults to a name derived from the scenario's output prefix.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the analytic BCF next to the quadrature oracle.
    Bcf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Exponential fit of the BCF, written as JSON.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps_r: Option<f64>,
        /// Sampling window.
        #[arg(long)]
        t_max: Option<f64>,
        /// Number of samples.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Propagate the reduced state with one solver.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Solver,
        /// Redfield variant.
        #[arg(long)]
        mode: Option<RedfieldMode>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        eps_r: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        init: Option<InitState>,
        /// Precomputed fit (output of `fit`) for the HEOM solver.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Also write the exact solver's time-local rates.
        #[arg(long)]
        emit_rates: bool,
    },
    /// Mean-force and bare Gibbs populations over a list of temperatures.
    Meanforce {
        #[command(flatten)]
        common: Common,
        /// Comma-separated `beta omega0` values; `inf` is allowed.
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.5,0.1")]
        beta_list: Vec<Beta>,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Run every configured solver and write per-solver and combined CSVs.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

enum Outcome {
    Clean,
    Flagged(Vec<String>),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Json(_) => 2,
        _ => 3,
    }
}

fn scenario(common: &Common) -> giant_heom::Result<ScenarioConfig> {
    match (&common.config, &common.preset) {
        (Some(path), _) => load_config(path),
        (None, Some(name)) => preset(name),
        (None, None) => Ok(ScenarioConfig::default()),
    }
}

fn output_path(common: &Common, default: String) -> PathBuf {
    common.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_json(path: &Path, text: &str) -> giant_heom::Result<()> {
    std::fs::write(path, format!("{text}\n"))?;
    Ok(())
}

fn run(cli: Cli) -> giant_heom::Result<Outcome> {
    scenarios::init_thread_pool()?;
    match cli.command {
        Command::Bcf { common, t_max, points } => {
            let cfg = scenario(&common)?;
            let p = cfg.bath();
            let t_max = t_max.unwrap_or(if p.tau > 0.0 { 1.5 * p.tau } else { 20.0 / p.omega_c });
            if !(t_max > 0.0) || points < 2 {
                return Err(Error::Config("--t-max must be positive and --points at least 2".into()));
            }
            let mut table = CsvTable::new(["t", "Re_C", "Im_C", "Re_C_quad", "Im_C_quad"]);
            for t in uniform_grid(t_max, points) {
                let c = bcf_analytic(&p, t);
                let q = bcf_quadrature(&p, t)?;
                table.push_floats(&[t, c.re, c.im, q.re, q.im]);
            }
            let path = output_path(&common, format!("{}_bcf.csv", cfg.output_prefix));
            table.write(&path)?;
            eprintln!("wrote {}", path.display());
            Ok(Outcome::Clean)
        }
        Command::Fit { common, eps_r, t_max, points } => {
            let mut cfg = scenario(&common)?;
            cfg.eps_r = eps_r.unwrap_or(cfg.eps_r);
            cfg.fit_t_max = t_max.or(cfg.fit_t_max);
            cfg.fit_points = points.or(cfg.fit_points);
            cfg.validate()?;
            let fit = fit_for(&cfg)?;
            let path = output_path(&common, format!("{}_fit.json", cfg.output_prefix));
            write_json(&path, &fit.to_json()?)?;
            eprintln!(
                "wrote {} ({} + {} terms, errors {:.3e} / {:.3e})",
                path.display(),
                fit.real.len(),
                fit.imag.len(),
                fit.real_report.rel_l2_error,
                fit.imag_report.rel_l2_error
            );
            if fit.converged() {
                Ok(Outcome::Clean)
            } else {
                Ok(Outcome::Flagged(vec![format!("fit did not reach eps_r = {}", cfg.eps_r)]))
            }
        }
        Command::Simulate {
            common,
            method,
            mode,
            depth,
            eps_r,
            t_max,
            points,
            init,
            fit,
            emit_rates,
        } => {
            let mut cfg = scenario(&common)?;
            cfg.redfield_mode = mode.or(cfg.redfield_mode);
            cfg.depth = depth.unwrap_or(cfg.depth);
            cfg.eps_r = eps_r.unwrap_or(cfg.eps_r);
            cfg.t_max = t_max.or(cfg.t_max);
            cfg.n_points = points.unwrap_or(cfg.n_points);
            cfg.init = init.unwrap_or(cfg.init);
            cfg.solvers = vec![method];
            cfg.validate()?;
            let fit = match &fit {
                Some(path) => Some(BcfFit::from_json(&std::fs::read_to_string(path)?)?),
                None => None,
            };
            let out = run_solver(&cfg, method, fit.as_ref(), &cfg.t_grid())?;
            let path = output_path(&common, format!("{}_{method}.csv", cfg.output_prefix));
            out.table().write(&path)?;
            eprintln!("wrote {} in {:.2} s", path.display(), out.seconds);
            if emit_rates {
                let rates = out
                    .rates
                    .as_ref()
                    .ok_or_else(|| Error::Config("--emit-rates requires --method exact".into()))?;
                let rpath = path.with_file_name(format!(
                    "{}_rates.csv",
                    path.file_stem().and_then(|s| s.to_str()).unwrap_or("exact")
                ));
                rates_table(rates).write(&rpath)?;
                eprintln!("wrote {}", rpath.display());
            }
            if out.trajectory.diagnostics.positivity_flagged {
                eprintln!(
                    "warning: positivity violated by {:.3e}",
                    out.trajectory.diagnostics.max_positivity_defect
                );
            }
            Ok(if out.flags.is_empty() { Outcome::Clean } else { Outcome::Flagged(out.flags) })
        }
        Command::Meanforce { common, beta_list, eta } => {
            let mut cfg = scenario(&common)?;
            cfg.eta = eta.unwrap_or(cfg.eta);
            if beta_list.is_empty() {
                return Err(Error::Config("--beta-list must not be empty".into()));
            }
            let mut table = CsvTable::new(["beta_omega0", "I1", "I2", "delta_omega", "P_ee_star", "P_ee_bare"]);
            for beta in beta_list {
                let p = giant_heom::BathParams { beta, ..cfg.bath() };
                let r = mean_force(&p)?;
                let mut row = vec![beta.to_string()];
                row.extend(
                    [r.i1, r.i2, r.delta_omega, r.p_ee_star, r.p_ee_bare]
                        .into_iter()
                        .map(scenarios::fmt_f64),
                );
                table.push(row);
            }
            let path = output_path(&common, format!("{}_meanforce.csv", cfg.output_prefix));
            table.write(&path)?;
            eprintln!("wrote {}", path.display());
            Ok(Outcome::Clean)
        }
        Command::Compare { common } => {
            let mut cfg = scenario(&common)?;
            if let Some(o) = &common.output {
                cfg.output_prefix = o.to_string_lossy().into_owned();
            }
            let record = run_comparison(&cfg)?;
            for path in record.write_csv()? {
                eprintln!("wrote {}", path.display());
            }
            println!("{}", serde_json::to_string_pretty(&record.summary())?);
            let flags: Vec<String> = record
                .outputs
                .iter()
                .flat_map(|o| o.flags.iter().map(move |f| format!("{}: {f}", o.solver)))
                .collect();
            Ok(if flags.is_empty() { Outcome::Clean } else { Outcome::Flagged(flags) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Flagged(flags)) => {
            for f in flags {
                eprintln!("flagged: {f}");
            }
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
