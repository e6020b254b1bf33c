use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{OptimizerKind, ScenarioKind};
use crate::dg::DgKind;
use crate::error::{Error, Result};
use crate::network::NetworkModel;
use crate::objective::{ObjectiveWeights, Placement};
use crate::powerflow::HorizonSolution;

/// Headline numbers for one solved 24-hour case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub loss_kwh: f64,
    pub vdev_puh: f64,
    /// Weighted objective without penalty.
    pub weighted_objective: f64,
    pub min_voltage_pu: f64,
    pub min_voltage_bus: usize,
    pub min_voltage_hour: usize,
    pub max_line_loss_kw: f64,
    pub max_line_loss_branch: usize,
    pub max_line_loss_hour: usize,
    pub non_converged_hours: usize,
}

impl CaseMetrics {
    pub fn from_horizon(h: &HorizonSolution, network: &NetworkModel, w: &ObjectiveWeights) -> Self {
        let (v_hour, v_bus, v_min) = h.min_voltage();
        let (l_hour, l_branch, l_max) = h.max_line_loss();
        CaseMetrics {
            loss_kwh: h.total_loss_kwh,
            vdev_puh: h.vdev_puh,
            weighted_objective: w.combine(h.total_loss_kwh, h.vdev_puh),
            min_voltage_pu: v_min,
            min_voltage_bus: network.buses()[v_bus].id,
            min_voltage_hour: v_hour,
            max_line_loss_kw: l_max,
            max_line_loss_branch: network.branches()[l_branch].id,
            max_line_loss_hour: l_hour,
            non_converged_hours: h.non_converged_hours(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub final_objective: f64,
    pub evaluations: u64,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub optimizer: OptimizerKind,
    pub best_seed: u64,
    /// Raw decision vector of the best run; re-evaluating it reproduces
    /// `objective` exactly.
    pub best_vector: Vec<f64>,
    pub placement: Placement,
    pub objective: f64,
    pub penalty: f64,
    pub feasible: bool,
    pub loss_kwh: f64,
    pub vdev_puh: f64,
    pub loss_reduction_pct: f64,
    pub vdev_improvement_pct: f64,
    pub metrics: CaseMetrics,
    pub median_objective: f64,
    pub iqr_objective: f64,
    pub seeds: Vec<SeedRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioKind,
    pub weights: ObjectiveWeights,
    pub base: CaseMetrics,
    pub results: Vec<OptimizerResult>,
}

impl RunReport {
    pub fn result(&self, kind: OptimizerKind) -> Option<&OptimizerResult> {
        self.results.iter().find(|r| r.optimizer == kind)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// `100·(base − value)/base`.
pub fn percent_reduction(base: f64, value: f64) -> f64 {
    100.0 * (base - value) / base
}

/// (median, interquartile range) with linear interpolation between order
/// statistics.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    (q(0.5), q(0.75) - q(0.25))
}

/// Side-by-side optimizer results from several reports of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: ScenarioKind,
    pub columns: Vec<String>,
    /// (row label, one cell per column)
    pub rows: Vec<(String, Vec<String>)>,
}

pub fn compare(reports: &[(String, RunReport)]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Config(
            "comparison needs at least two reports".into(),
        ));
    }
    let scenario = reports[0].1.scenario;
    for (_, r) in &reports[1..] {
        if r.scenario != scenario {
            return Err(Error::ScenarioMismatch(
                scenario.to_string(),
                r.scenario.to_string(),
            ));
        }
    }

    let mut columns = Vec::new();
    let mut results = Vec::new();
    for (label, report) in reports {
        for res in &report.results {
            columns.push(format!("{} ({label})", res.optimizer));
            results.push(res);
        }
    }
    let cells = |f: &dyn Fn(&OptimizerResult) -> String| results.iter().map(|r| f(r)).collect();
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for kind in DgKind::ALL {
        rows.push((
            format!("{kind} location"),
            cells(&|r| r.placement.unit(kind).location.to_string()),
        ));
        rows.push((
            format!("{kind} size_kw"),
            cells(&|r| format!("{:.0}", r.placement.unit(kind).rated_kw)),
        ));
    }
    rows.push(("loss_kwh".into(), cells(&|r| format!("{:.2}", r.loss_kwh))));
    rows.push(("vdev_puh".into(), cells(&|r| format!("{:.4}", r.vdev_puh))));
    rows.push((
        "objective".into(),
        cells(&|r| format!("{:.6}", r.objective)),
    ));
    rows.push((
        "loss_reduction_pct".into(),
        cells(&|r| format!("{:.2}", r.loss_reduction_pct)),
    ));
    rows.push((
        "vdev_improvement_pct".into(),
        cells(&|r| format!("{:.2}", r.vdev_improvement_pct)),
    ));
    Ok(Comparison {
        scenario,
        columns,
        rows,
    })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row");
        for c in &self.columns {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for (label, cells) in &self.rows {
            out.push_str(&csv_field(label));
            for c in cells {
                out.push(',');
                out.push_str(&csv_field(c));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label_w = self
            .rows
            .iter()
            .map(|r| r.0.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                self.rows
                    .iter()
                    .map(|r| r.1[i].len())
                    .chain([c.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut line = String::new();
        let _ = write!(line, "{:label_w$}", format!("[{}]", self.scenario));
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(line, " | {c:>w$}");
        }
        writeln!(f, "{line}")?;
        writeln!(f, "{}", "-".repeat(line.len()))?;
        for (label, cells) in &self.rows {
            write!(f, "{label:label_w$}")?;
            for (c, w) in cells.iter().zip(&widths) {
                write!(f, " | {c:>w$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles() {
        let (m, iqr) = median_iqr(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!(m, 3.0);
        assert_eq!(iqr, 2.0);
        let (m, _) = median_iqr(&[1.0, 2.0]);
        assert_eq!(m, 1.5);
        assert_eq!(median_iqr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn reductions() {
        assert_eq!(percent_reduction(200.0, 150.0), 25.0);
        assert_eq!(percent_reduction(200.0, 250.0), -25.0);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("LSA (a,b)"), "\"LSA (a,b)\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
