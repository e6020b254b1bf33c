//! Backward/forward sweep load flow for radial feeders.
//!
//! Loads are constant power. Injections (DG output) enter as negative load
//! at their bus. The slack bus is held at `v_nom∠0` and absorbs the
//! mismatch. Branch losses are three-phase totals, `3·I²·R`, with `I` the
//! line current in A.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkModel;
use crate::profile::{HourlySeries, HOURS};

/// Per-bus active/reactive injections, kW / kvar, indexed by bus position
/// (`id - 1`). Positive values are generation. The slack entry is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSet {
    p_kw: Vec<f64>,
    q_kvar: Vec<f64>,
}

impl InjectionSet {
    pub fn zeros(n_bus: usize) -> Self {
        InjectionSet {
            p_kw: vec![0.0; n_bus],
            q_kvar: vec![0.0; n_bus],
        }
    }

    /// Add generation at a 1-based bus id.
    pub fn add(&mut self, bus_id: usize, p_kw: f64, q_kvar: f64) -> Result<()> {
        if bus_id == 0 || bus_id > self.p_kw.len() {
            return Err(Error::InvalidBus {
                bus: bus_id,
                n_bus: self.p_kw.len(),
            });
        }
        if !(p_kw.is_finite() && q_kvar.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite injection at bus {bus_id}"
            )));
        }
        self.p_kw[bus_id - 1] += p_kw;
        self.q_kvar[bus_id - 1] += q_kvar;
        Ok(())
    }

    pub fn n_bus(&self) -> usize {
        self.p_kw.len()
    }

    pub fn p_kw(&self) -> &[f64] {
        &self.p_kw
    }

    pub fn q_kvar(&self) -> &[f64] {
        &self.q_kvar
    }

    /// Total active injection over non-slack buses.
    pub fn total_p_kw(&self) -> f64 {
        self.p_kw.iter().skip(1).sum()
    }

    pub fn total_q_kvar(&self) -> f64 {
        self.q_kvar.iter().skip(1).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Some bus voltage fell below the collapse threshold during the sweep.
    VoltageCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    /// Convergence threshold on max |ΔV| between sweeps, pu.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// |V| below this (pu) aborts the sweep as a collapse.
    pub collapse_threshold: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            tolerance: 1e-8,
            max_iterations: 100,
            collapse_threshold: 0.5,
        }
    }
}

/// Result of one load-flow solve. Bus vectors are indexed by bus position,
/// branch vectors by branch position in the network's file order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v_mag: Vec<f64>,
    pub v_angle: Vec<f64>,
    pub branch_current_a: Vec<f64>,
    pub branch_loss_kw: Vec<f64>,
    pub branch_loss_kvar: Vec<f64>,
    pub slack_p_kw: f64,
    pub slack_q_kvar: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl PowerFlowSolution {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn total_loss_kw(&self) -> f64 {
        self.branch_loss_kw.iter().sum()
    }

    pub fn total_loss_kvar(&self) -> f64 {
        self.branch_loss_kvar.iter().sum()
    }

    /// (bus index, |V|) of the lowest bus voltage.
    pub fn min_voltage(&self) -> (usize, f64) {
        self.v_mag
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            )
    }

    /// Σ |V_i − v_nom| over all buses.
    pub fn voltage_deviation(&self, v_nom: f64) -> f64 {
        self.v_mag.iter().map(|v| (v - v_nom).abs()).sum()
    }
}

pub fn solve_hour(network: &NetworkModel, injections: &InjectionSet) -> Result<PowerFlowSolution> {
    solve_hour_with(network, injections, &SweepSettings::default())
}

/// Backward/forward sweep. Numerical failure (iteration limit, collapse) is
/// reported through [`PowerFlowSolution::status`]; `Err` is reserved for
/// malformed inputs.
pub fn solve_hour_with(
    network: &NetworkModel,
    injections: &InjectionSet,
    settings: &SweepSettings,
) -> Result<PowerFlowSolution> {
    let n = network.n_bus();
    if injections.n_bus() != n {
        return Err(Error::Value(format!(
            "injection set covers {} buses, network has {n}",
            injections.n_bus()
        )));
    }
    if injections
        .p_kw
        .iter()
        .chain(&injections.q_kvar)
        .any(|v| !v.is_finite())
    {
        return Err(Error::Value("injections must be finite".into()));
    }

    let base = network.base();
    let s_base = base.s_base_kva();
    let z_base = base.z_base_ohm();
    let v_slack = Complex64::new(base.v_nom, 0.0);
    let order = network.sweep();
    let branches = network.branches();

    // Net constant-power load per bus, pu.
    let mut s_load = vec![Complex64::new(0.0, 0.0); n];
    for (k, s) in s_load.iter_mut().enumerate().skip(1) {
        let (p, q) = network.bus_demand(k);
        *s = Complex64::new(
            (p - injections.p_kw[k]) / s_base,
            (q - injections.q_kvar[k]) / s_base,
        );
    }
    let z: Vec<Complex64> = order
        .iter()
        .map(|sb| {
            let br = &branches[sb.branch];
            Complex64::new(br.r_ohm / z_base, br.x_ohm / z_base)
        })
        .collect();

    let mut v = vec![v_slack; n];
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut j = vec![Complex64::new(0.0, 0.0); order.len()];
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        iterations += 1;

        for k in 0..n {
            acc[k] = (s_load[k] / v[k]).conj();
        }
        for (pos, sb) in order.iter().enumerate().rev() {
            j[pos] = acc[sb.downstream];
            acc[sb.upstream] += j[pos];
        }

        let mut max_dv: f64 = 0.0;
        let mut collapsed = false;
        for (pos, sb) in order.iter().enumerate() {
            let updated = v[sb.upstream] - z[pos] * j[pos];
            max_dv = max_dv.max((updated - v[sb.downstream]).norm());
            v[sb.downstream] = updated;
            if !(updated.norm() >= settings.collapse_threshold) {
                collapsed = true;
            }
        }
        if collapsed {
            status = SolveStatus::VoltageCollapse;
            break;
        }
        if max_dv < settings.tolerance {
            status = SolveStatus::Converged;
            break;
        }
    }

    let i_base = base.i_base_amp();
    let mut branch_current_a = vec![0.0; order.len()];
    let mut branch_loss_kw = vec![0.0; order.len()];
    let mut branch_loss_kvar = vec![0.0; order.len()];
    let mut slack_current = Complex64::new(0.0, 0.0);
    for (pos, sb) in order.iter().enumerate() {
        let br = &branches[sb.branch];
        let amps = j[pos].norm() * i_base;
        branch_current_a[sb.branch] = amps;
        branch_loss_kw[sb.branch] = 3.0 * amps * amps * br.r_ohm / 1000.0;
        branch_loss_kvar[sb.branch] = 3.0 * amps * amps * br.x_ohm / 1000.0;
        if sb.upstream == 0 {
            slack_current += j[pos];
        }
    }
    let s_slack = v_slack * slack_current.conj() * s_base;

    Ok(PowerFlowSolution {
        v_mag: v.iter().map(|c| c.norm()).collect(),
        v_angle: v.iter().map(|c| c.arg()).collect(),
        branch_current_a,
        branch_loss_kw,
        branch_loss_kvar,
        slack_p_kw: s_slack.re,
        slack_q_kvar: s_slack.im,
        status,
        iterations,
    })
}

/// Per-hour solutions with their aggregated loss and voltage-deviation
/// indices.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSolution {
    pub hours: Vec<PowerFlowSolution>,
    /// Σ_t Σ_i loss_i(t) over one-hour slots, kWh.
    pub total_loss_kwh: f64,
    /// Σ_t Σ_i |V_i(t) − v_nom|, pu·h.
    pub vdev_puh: f64,
}

impl HorizonSolution {
    pub fn from_hours(hours: Vec<PowerFlowSolution>, v_nom: f64) -> Self {
        let total_loss_kwh = hours.iter().map(|h| h.total_loss_kw()).sum();
        let vdev_puh = hours.iter().map(|h| h.voltage_deviation(v_nom)).sum();
        HorizonSolution {
            hours,
            total_loss_kwh,
            vdev_puh,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.hours.iter().all(|h| h.converged())
    }

    pub fn non_converged_hours(&self) -> usize {
        self.hours.iter().filter(|h| !h.converged()).count()
    }

    /// (hour, bus index, |V|) of the lowest voltage over the horizon.
    pub fn min_voltage(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (t, h) in self.hours.iter().enumerate() {
            let (bus, v) = h.min_voltage();
            if v < best.2 {
                best = (t + 1, bus, v);
            }
        }
        best
    }

    /// (hour, branch index, kW) of the largest single line-hour loss.
    pub fn max_line_loss(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (t, h) in self.hours.iter().enumerate() {
            for (k, &loss) in h.branch_loss_kw.iter().enumerate() {
                if loss > best.2 {
                    best = (t + 1, k, loss);
                }
            }
        }
        best
    }

    /// `hour,bus,v_pu` rows for every bus and hour.
    pub fn voltage_csv(&self, network: &NetworkModel) -> String {
        let mut out = String::from("hour,bus,v_pu\n");
        for (t, h) in self.hours.iter().enumerate() {
            for (bus, v) in network.buses().iter().zip(&h.v_mag) {
                let _ = writeln!(out, "{},{},{}", t + 1, bus.id, v);
            }
        }
        out
    }

    /// `hour,branch,i_amp,loss_kw` rows for every branch and hour.
    pub fn line_csv(&self, network: &NetworkModel) -> String {
        let mut out = String::from("hour,branch,i_amp,loss_kw\n");
        for (t, h) in self.hours.iter().enumerate() {
            for (k, br) in network.branches().iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    t + 1,
                    br.id,
                    h.branch_current_a[k],
                    h.branch_loss_kw[k]
                );
            }
        }
        out
    }
}

/// Solve every hour with demands scaled by `load_profile[t]`.
pub fn solve_horizon(
    network: &NetworkModel,
    load_profile: &HourlySeries,
    hourly_injections: &[InjectionSet],
) -> Result<HorizonSolution> {
    solve_horizon_with(
        network,
        load_profile,
        hourly_injections,
        &SweepSettings::default(),
    )
}

pub fn solve_horizon_with(
    network: &NetworkModel,
    load_profile: &HourlySeries,
    hourly_injections: &[InjectionSet],
    settings: &SweepSettings,
) -> Result<HorizonSolution> {
    if hourly_injections.len() != HOURS {
        return Err(Error::Value(format!(
            "expected {HOURS} hourly injection sets, got {}",
            hourly_injections.len()
        )));
    }
    let hours = load_profile
        .values()
        .iter()
        .zip(hourly_injections)
        .map(|(&m, inj)| solve_hour_with(&network.scale_loads(m)?, inj, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(HorizonSolution::from_hours(hours, network.v_nom()))
}

/// Energy loss over the horizon, kWh.
pub fn loss_index(horizon: &HorizonSolution) -> f64 {
    horizon.total_loss_kwh
}

/// Σ_t Σ_i |V_i(t) − v_nom|, pu·h.
pub fn voltage_deviation_index(horizon: &HorizonSolution, v_nom: f64) -> f64 {
    horizon
        .hours
        .iter()
        .map(|h| h.voltage_deviation(v_nom))
        .sum()
}
