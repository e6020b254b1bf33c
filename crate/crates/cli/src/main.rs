use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use dgopt_core::network::{load_network, NetworkFormat};
use dgopt_core::powerflow::{solve_horizon, solve_hour, InjectionSet};
use dgopt_core::profile::{load_profile, HOURS};
use dgopt_core::runner::{self, compare, RunReport, ScenarioConfig};
use dgopt_core::{HourlySeries, NetworkModel, SeriesKind};

#[derive(Parser)]
#[command(
    name = "dgopt",
    version,
    about = "DG placement on radial distribution feeders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured optimizers over every seed and write a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use this many consecutive seeds starting at the first configured one.
        #[arg(long)]
        seed_count: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the no-DG case of a scenario and write its dumps.
    Basecase {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate two or more reports of the same scenario side by side.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Load flow of a network with no DG.
    Powerflow {
        /// Network file (.csv or .json); the bundled 33-bus feeder if omitted.
        #[arg(long)]
        network: Option<PathBuf>,
        /// Hour 1-24, or "all" for the full day.
        #[arg(long, default_value = "all")]
        hour: String,
        /// Load multiplier profile; flat nominal load if omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Write voltage and line CSVs here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Bad input (exit 1) versus a failed computation (exit 2).
enum Failure {
    Input(dgopt_core::Error),
    Compute(dgopt_core::Error),
}

/// Loading-phase errors; a computation failure on valid input still maps
/// to [`Failure::Compute`].
fn input<T>(r: dgopt_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        if e.is_computation() {
            Failure::Compute(e)
        } else {
            Failure::Input(e)
        }
    })
}

fn compute<T>(r: dgopt_core::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Compute)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed_count,
            out,
        } => cmd_run(&config, seed_count, out),
        Command::Basecase { config, out } => cmd_basecase(&config, out),
        Command::Compare { reports, csv } => cmd_compare(&reports, csv.as_deref()),
        Command::Powerflow {
            network,
            hour,
            profile,
            out,
        } => cmd_powerflow(
            network.as_deref(),
            &hour,
            profile.as_deref(),
            out.as_deref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            error!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Path, out: Option<PathBuf>) -> dgopt_core::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_file(path)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn cmd_run(path: &Path, seed_count: Option<usize>, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = input(load_config(path, out))?;
    if let Some(n) = seed_count {
        cfg = input(cfg.with_seed_count(n))?;
    }
    let prepared = input(runner::prepare(&cfg))?;
    let output = compute(prepared.run())?;
    compute(output.write_to(&cfg.output_dir, &prepared))?;

    let r = &output.report;
    println!(
        "[{}] base: {:.2} kWh, {:.4} pu·h",
        r.scenario, r.base.loss_kwh, r.base.vdev_puh
    );
    for res in &r.results {
        let p = &res.placement;
        let units: Vec<String> = p
            .units
            .iter()
            .map(|u| format!("{}@{} {:.0} kW", u.kind, u.location, u.rated_kw))
            .collect();
        println!(
            "{}: {} | obj {:.6} | loss {:.2} kWh (-{:.2}%) | vdev {:.4} pu·h (-{:.2}%) | median {:.6} IQR {:.6}{}",
            res.optimizer,
            units.join(", "),
            res.objective,
            res.loss_kwh,
            res.loss_reduction_pct,
            res.vdev_puh,
            res.vdev_improvement_pct,
            res.median_objective,
            res.iqr_objective,
            if res.feasible { "" } else { " [infeasible]" },
        );
    }
    Ok(())
}

fn cmd_basecase(path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = input(load_config(path, out))?;
    let prepared = input(runner::prepare(&cfg))?;
    let m = compute(runner::write_base_case(&prepared, &cfg.output_dir))?;
    println!("[{}] no DG", cfg.scenario);
    println!("energy loss      {:.2} kWh", m.loss_kwh);
    println!("voltage dev      {:.4} pu·h", m.vdev_puh);
    println!(
        "min voltage      {:.5} pu at bus {} hour {}",
        m.min_voltage_pu, m.min_voltage_bus, m.min_voltage_hour
    );
    println!(
        "max line loss    {:.2} kW on branch {} hour {}",
        m.max_line_loss_kw, m.max_line_loss_branch, m.max_line_loss_hour
    );
    Ok(())
}

fn cmd_compare(paths: &[PathBuf], csv: Option<&Path>) -> Result<(), Failure> {
    let reports = input(
        paths
            .iter()
            .map(|p| Ok((p.display().to_string(), RunReport::from_file(p)?)))
            .collect::<dgopt_core::Result<Vec<_>>>(),
    )?;
    let table = input(compare(&reports))?;
    print!("{table}");
    if let Some(path) = csv {
        std::fs::write(path, table.to_csv()).map_err(|e| {
            Failure::Compute(dgopt_core::Error::Io {
                path: path.into(),
                source: e,
            })
        })?;
    }
    Ok(())
}

fn cmd_powerflow(
    network: Option<&Path>,
    hour: &str,
    profile: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let net = match network {
        Some(p) => input(load_network(p, NetworkFormat::from_path(p)))?,
        None => NetworkModel::ieee33(),
    };
    let load = match profile {
        Some(p) => input(load_profile(p, SeriesKind::LoadMultiplier))?,
        None => input(HourlySeries::constant(SeriesKind::LoadMultiplier, 1.0))?,
    };

    if hour.eq_ignore_ascii_case("all") {
        let none = vec![InjectionSet::zeros(net.n_bus()); HOURS];
        let h = compute(solve_horizon(&net, &load, &none))?;
        let (vh, vb, vmin) = h.min_voltage();
        println!("energy loss   {:.2} kWh", h.total_loss_kwh);
        println!("voltage dev   {:.4} pu·h", h.vdev_puh);
        println!(
            "min voltage   {vmin:.5} pu at bus {} hour {vh}",
            net.buses()[vb].id
        );
        if !h.all_converged() {
            println!("non-converged hours: {}", h.non_converged_hours());
        }
        if let Some(dir) = out {
            write_dumps(dir, &h.voltage_csv(&net), &h.line_csv(&net))?;
        }
        return Ok(());
    }

    let h: usize = hour
        .parse()
        .ok()
        .filter(|h| (1..=HOURS).contains(h))
        .ok_or_else(|| Failure::Input(dgopt_core::Error::Config(format!("bad hour {hour:?}"))))?;
    let scaled = input(net.scale_loads(load.at_hour(h)))?;
    let sol = compute(solve_hour(&scaled, &InjectionSet::zeros(net.n_bus())))?;
    let (bus, vmin) = sol.min_voltage();
    println!(
        "hour {h}: {:?} after {} iterations",
        sol.status, sol.iterations
    );
    println!(
        "loss          {:.3} kW, {:.3} kvar",
        sol.total_loss_kw(),
        sol.total_loss_kvar()
    );
    println!(
        "slack         {:.3} kW, {:.3} kvar",
        sol.slack_p_kw, sol.slack_q_kvar
    );
    println!("min voltage   {vmin:.5} pu at bus {}", net.buses()[bus].id);
    if let Some(dir) = out {
        let hs = dgopt_core::powerflow::HorizonSolution::from_hours(vec![sol], net.v_nom());
        write_dumps(dir, &hs.voltage_csv(&net), &hs.line_csv(&net))?;
    }
    Ok(())
}

fn write_dumps(dir: &Path, voltages: &str, lines: &str) -> Result<(), Failure> {
    let io = |path: PathBuf, e| Failure::Compute(dgopt_core::Error::Io { path, source: e });
    std::fs::create_dir_all(dir).map_err(|e| io(dir.into(), e))?;
    for (name, body) in [("voltages.csv", voltages), ("lines.csv", lines)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| io(path.clone(), e))?;
    }
    Ok(())
}
