//! Scenario runs: load inputs, run the optimizers over a seed list, and
//! write reports, traces and per-hour dumps.
//!
//! Loading ([`prepare`]) and computing ([`Prepared::run`]) are separate
//! steps so callers can tell bad input apart from a failed computation.

use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::{ObjectiveWeights, ScenarioContext};
use crate::optim::lsa::{run_lsa, LsaParams};
use crate::optim::pso::{run_pso, PsoParams};
use crate::optim::ConvergenceTrace;
use crate::powerflow::{solve_horizon_with, HorizonSolution};

pub mod config;
pub mod report;

pub use config::{OptimizerChoice, OptimizerKind, ScenarioConfig, ScenarioKind};
pub use report::{compare, CaseMetrics, Comparison, OptimizerResult, RunReport, SeedRun};

/// Loaded inputs and the solved no-DG base case for one scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub context: ScenarioContext,
    pub base: HorizonSolution,
}

/// Load and validate every input named by `config` and solve the base case.
pub fn prepare(config: &ScenarioConfig) -> Result<Prepared> {
    config.validate()?;
    let network = config.load_network()?;
    let load = config.load_series()?;
    let irradiance = config.irradiance_series()?;
    let wind = config.wind_series()?;

    let sweep = Default::default();
    let none = vec![crate::powerflow::InjectionSet::zeros(network.n_bus()); crate::profile::HOURS];
    let base = solve_horizon_with(&network, &load, &none, &sweep)?;
    if !base.all_converged() {
        return Err(Error::Convergence("no-DG base case".into()));
    }

    let ws = config.objective.weights;
    let weights = if ws.auto_calibrate {
        if base.total_loss_kwh <= 0.0 {
            return Err(Error::DegenerateNormalization(
                "base-case energy loss is zero",
            ));
        }
        if base.vdev_puh <= 0.0 {
            return Err(Error::DegenerateNormalization(
                "base-case voltage deviation is zero",
            ));
        }
        ObjectiveWeights::new(ws.w1, ws.w2, base.total_loss_kwh, base.vdev_puh)?
    } else {
        ObjectiveWeights::raw(ws.w1, ws.w2)?
    };

    let mut context = ScenarioContext::new(network, load, irradiance, wind, weights)?;
    context.dg = config.dg;
    context.penalties = config.objective.penalties;
    context.bounds = config.objective.dg_bounds;
    context.sweep = sweep;
    context.validate()?;

    info!(
        "{}: base loss {:.2} kWh, vdev {:.4} pu·h",
        config.scenario, base.total_loss_kwh, base.vdev_puh
    );
    Ok(Prepared {
        config: config.clone(),
        context,
        base,
    })
}

/// One finished (optimizer, seed) run.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub trace: ConvergenceTrace,
}

/// Result of a full scenario run, before anything is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub outcomes: Vec<SeedOutcome>,
    pub base: HorizonSolution,
    /// Best horizon of each optimizer, in report order.
    pub best: Vec<(OptimizerKind, HorizonSolution)>,
}

impl Prepared {
    pub fn lsa_params(&self, seed: u64) -> LsaParams {
        LsaParams {
            seed,
            ..self.config.lsa
        }
    }

    pub fn pso_params(&self, seed: u64) -> PsoParams {
        PsoParams {
            seed,
            ..self.config.pso
        }
    }

    pub fn run_one(&self, optimizer: OptimizerKind, seed: u64) -> Result<SeedOutcome> {
        let space = self.context.search_space();
        let trace = match optimizer {
            OptimizerKind::Lsa => run_lsa(&self.lsa_params(seed), &self.context, &space)?,
            OptimizerKind::Pso => run_pso(&self.pso_params(seed), &self.context, &space)?,
        };
        debug!(
            "{optimizer} seed {seed}: {:.6} after {} evaluations ({:.2?})",
            trace.best_objective, trace.evaluations, trace.wall_time
        );
        Ok(SeedOutcome {
            optimizer,
            seed,
            trace,
        })
    }

    pub fn base_metrics(&self) -> CaseMetrics {
        CaseMetrics::from_horizon(&self.base, &self.context.network, &self.context.weights)
    }

    /// Run every configured optimizer for every seed.
    pub fn run(&self) -> Result<RunOutput> {
        let jobs: Vec<(OptimizerKind, u64)> = self
            .config
            .optimizer
            .kinds()
            .into_iter()
            .flat_map(|k| self.config.seeds.iter().map(move |&s| (k, s)))
            .collect();
        let outcomes: Vec<SeedOutcome> = if self.config.parallel_runs {
            jobs.par_iter()
                .map(|&(k, s)| self.run_one(k, s))
                .collect::<Result<_>>()?
        } else {
            jobs.iter()
                .map(|&(k, s)| self.run_one(k, s))
                .collect::<Result<_>>()?
        };

        let base = self.base_metrics();
        let mut results = Vec::new();
        let mut best = Vec::new();
        for kind in self.config.optimizer.kinds() {
            let runs: Vec<&SeedOutcome> = outcomes.iter().filter(|o| o.optimizer == kind).collect();
            let winner = runs
                .iter()
                .min_by(|a, b| a.trace.best_objective.total_cmp(&b.trace.best_objective))
                .expect("at least one seed");
            let eval = self.context.evaluate(&winner.trace.best_position)?;
            let finals: Vec<f64> = runs.iter().map(|o| o.trace.best_objective).collect();
            let (median, iqr) = report::median_iqr(&finals);
            let metrics = CaseMetrics::from_horizon(
                &eval.horizon,
                &self.context.network,
                &self.context.weights,
            );
            info!(
                "{kind}: best {:.6} (seed {}), median {median:.6}, IQR {iqr:.6}",
                eval.objective, winner.seed
            );
            results.push(OptimizerResult {
                optimizer: kind,
                best_seed: winner.seed,
                best_vector: winner.trace.best_position.clone(),
                placement: eval.placement,
                objective: eval.objective,
                penalty: eval.penalty,
                feasible: eval.feasible,
                loss_kwh: eval.loss_kwh,
                vdev_puh: eval.vdev_puh,
                loss_reduction_pct: report::percent_reduction(base.loss_kwh, eval.loss_kwh),
                vdev_improvement_pct: report::percent_reduction(base.vdev_puh, eval.vdev_puh),
                metrics,
                median_objective: median,
                iqr_objective: iqr,
                seeds: runs
                    .iter()
                    .map(|o| SeedRun {
                        seed: o.seed,
                        final_objective: o.trace.best_objective,
                        evaluations: o.trace.evaluations,
                        trace_file: trace_file_name(kind, o.seed),
                    })
                    .collect(),
            });
            best.push((kind, eval.horizon));
        }

        Ok(RunOutput {
            report: RunReport {
                scenario: self.config.scenario,
                weights: self.context.weights,
                base,
                results,
            },
            outcomes,
            base: self.base.clone(),
            best,
        })
    }
}

pub fn trace_file_name(kind: OptimizerKind, seed: u64) -> String {
    format!("trace_{}_{seed}.csv", kind.as_str())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

impl RunOutput {
    /// Write `report.json`, one trace per run, and voltage and line dumps
    /// for the base case and each optimizer's best placement.
    pub fn write_to(&self, dir: &Path, prepared: &Prepared) -> Result<()> {
        create_dir(dir)?;
        let net = &prepared.context.network;
        write(dir, "report.json", &self.report.to_json()?)?;
        for o in &self.outcomes {
            write(
                dir,
                &trace_file_name(o.optimizer, o.seed),
                &o.trace.to_csv(),
            )?;
        }
        let cases = std::iter::once(("base", &self.base))
            .chain(self.best.iter().map(|(k, h)| (k.as_str(), h)));
        for (label, h) in cases {
            write(dir, &format!("voltages_{label}.csv"), &h.voltage_csv(net))?;
            write(dir, &format!("lines_{label}.csv"), &h.line_csv(net))?;
        }
        info!("wrote results to {}", dir.display());
        Ok(())
    }
}

/// Base-case dumps and headline numbers without running an optimizer.
pub fn write_base_case(prepared: &Prepared, dir: &Path) -> Result<CaseMetrics> {
    create_dir(dir)?;
    let net = &prepared.context.network;
    let metrics = prepared.base_metrics();
    write(dir, "voltages_base.csv", &prepared.base.voltage_csv(net))?;
    write(dir, "lines_base.csv", &prepared.base.line_csv(net))?;
    let mut json = serde_json::to_string_pretty(&metrics)?;
    json.push('\n');
    write(dir, "base_case.json", &json)?;
    Ok(metrics)
}
