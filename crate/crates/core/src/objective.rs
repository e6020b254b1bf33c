//! Candidate evaluation: decode a six-element decision vector into one unit
//! per DG kind, run the 24-hour load flow, and score
//! `w1·loss/loss_ref + w2·vdev/vdev_ref + penalty`.
//!
//! Penalties cover the voltage band, branch ampacity and non-converged
//! hours. Power balance needs no penalty because the slack absorbs it.

use serde::{Deserialize, Serialize};

use crate::dg::{hourly_injections, DgKind, DgSettings, DgUnit};
use crate::error::{Error, Result};
use crate::network::NetworkModel;
use crate::optim::{Objective, SearchSpace};
use crate::powerflow::{solve_horizon_with, HorizonSolution, InjectionSet, SweepSettings};
use crate::profile::HourlySeries;

/// `[loc_PV, size_PV, loc_WT, size_WT, loc_FC, size_FC]`
pub const DIMENSIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgBounds {
    pub min_kw: f64,
    pub max_kw: f64,
}

impl Default for DgBounds {
    fn default() -> Self {
        DgBounds {
            min_kw: 0.0,
            max_kw: 2500.0,
        }
    }
}

impl DgBounds {
    pub fn validate(&self) -> Result<()> {
        if self.min_kw >= 0.0 && self.min_kw <= self.max_kw && self.max_kw.is_finite() {
            Ok(())
        } else {
            Err(Error::Value(format!(
                "DG size bounds must satisfy 0 <= min <= max, got [{}, {}]",
                self.min_kw, self.max_kw
            )))
        }
    }
}

/// One unit per kind, in PV, WT, FC order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub units: [DgUnit; 3],
}

impl Placement {
    pub fn unit(&self, kind: DgKind) -> &DgUnit {
        self.units.iter().find(|u| u.kind == kind).unwrap()
    }

    pub fn encode(&self) -> [f64; DIMENSIONS] {
        let mut out = [0.0; DIMENSIONS];
        for (i, unit) in self.units.iter().enumerate() {
            out[2 * i] = unit.location as f64;
            out[2 * i + 1] = unit.rated_kw;
        }
        out
    }
}

/// Round locations to the nearest bus and clamp to `2..=n_bus`; clamp sizes
/// to the DG bounds.
pub fn decode(vector: &[f64], n_bus: usize, bounds: &DgBounds) -> Result<Placement> {
    if vector.len() != DIMENSIONS {
        return Err(Error::Value(format!(
            "decision vector must have {DIMENSIONS} elements, got {}",
            vector.len()
        )));
    }
    if let Some(v) = vector.iter().find(|v| !v.is_finite()) {
        return Err(Error::Value(format!(
            "decision vector has non-finite entry {v}"
        )));
    }
    let units = std::array::from_fn(|i| {
        let loc = vector[2 * i].round().clamp(2.0, n_bus as f64) as usize;
        DgUnit {
            kind: DgKind::ALL[i],
            location: loc,
            rated_kw: vector[2 * i + 1].clamp(bounds.min_kw, bounds.max_kw),
        }
    });
    Ok(Placement { units })
}

/// Search box for the decision vector. Location dimensions span
/// `[1.5, n_bus + 0.5]` so every bus owns an equal-width rounding cell.
pub fn search_space(n_bus: usize, bounds: &DgBounds) -> SearchSpace {
    let mut lower = Vec::with_capacity(DIMENSIONS);
    let mut upper = Vec::with_capacity(DIMENSIONS);
    for _ in DgKind::ALL {
        lower.extend([1.5, bounds.min_kw]);
        upper.extend([n_bus as f64 + 0.5, bounds.max_kw]);
    }
    SearchSpace::new(lower, upper).expect("DG bounds validated")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w1: f64,
    pub w2: f64,
    /// Energy loss that maps to 1.0 in the loss term, kWh.
    pub loss_ref: f64,
    /// Voltage-deviation index that maps to 1.0 in the deviation term, pu·h.
    pub vdev_ref: f64,
}

impl ObjectiveWeights {
    pub fn new(w1: f64, w2: f64, loss_ref: f64, vdev_ref: f64) -> Result<Self> {
        let w = ObjectiveWeights {
            w1,
            w2,
            loss_ref,
            vdev_ref,
        };
        w.validate()?;
        Ok(w)
    }

    /// Raw weights on unnormalized kWh and pu·h.
    pub fn raw(w1: f64, w2: f64) -> Result<Self> {
        Self::new(w1, w2, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.w1, self.w2, self.loss_ref, self.vdev_ref]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Value(format!(
                "objective weights and references must be positive: {self:?}"
            )))
        }
    }

    pub fn combine(&self, loss_kwh: f64, vdev_puh: f64) -> f64 {
        self.w1 * (loss_kwh / self.loss_ref) + self.w2 * (vdev_puh / self.vdev_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    /// Per squared pu of voltage-band violation, per bus-hour.
    pub c_v: f64,
    /// Per squared fractional ampacity overload, per branch-hour.
    pub c_i: f64,
    /// Per non-converged hour.
    pub c_f: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Penalties {
            c_v: 100.0,
            c_i: 100.0,
            c_f: 1000.0,
        }
    }
}

/// Constraint penalty of a solved horizon; zero iff every bus-hour voltage
/// is inside `[v_min, v_max]`, every branch current is within ampacity and
/// every hour converged.
pub fn penalty(horizon: &HorizonSolution, network: &NetworkModel, c: &Penalties) -> f64 {
    let base = network.base();
    let mut voltage = 0.0;
    let mut current = 0.0;
    for hour in &horizon.hours {
        for &v in &hour.v_mag {
            let viol = (base.v_min - v).max(0.0) + (v - base.v_max).max(0.0);
            voltage += viol * viol;
        }
        for (br, &amps) in network.branches().iter().zip(&hour.branch_current_a) {
            let limit = br.ampacity();
            if limit.is_finite() {
                let over = ((amps - limit) / limit).max(0.0);
                current += over * over;
            }
        }
    }
    c.c_v * voltage + c.c_i * current + c.c_f * horizon.non_converged_hours() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub loss_kwh: f64,
    pub vdev_puh: f64,
    pub penalty: f64,
    pub feasible: bool,
    pub placement: Placement,
    pub horizon: HorizonSolution,
}

/// Solve the no-DG horizon for `network` under `load_profile`.
pub fn base_case(network: &NetworkModel, load_profile: &HourlySeries) -> Result<HorizonSolution> {
    let none = vec![InjectionSet::zeros(network.n_bus()); crate::profile::HOURS];
    solve_horizon_with(network, load_profile, &none, &SweepSettings::default())
}

/// Equal weights with both terms normalized by the no-DG base case, so the
/// base case scores exactly 1.0.
pub fn calibrate_weights(
    network: &NetworkModel,
    load_profile: &HourlySeries,
) -> Result<ObjectiveWeights> {
    let base = base_case(network, load_profile)?;
    if !base.all_converged() {
        return Err(Error::Convergence("no-DG base case".into()));
    }
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
    ObjectiveWeights::new(0.5, 0.5, base.total_loss_kwh, base.vdev_puh)
}

/// Everything needed to score a candidate. Immutable; share freely across
/// evaluation threads.
#[derive(Debug, Clone)]
pub struct ScenarioContext {
    pub network: NetworkModel,
    pub load: HourlySeries,
    pub irradiance: HourlySeries,
    pub wind: HourlySeries,
    pub dg: DgSettings,
    pub weights: ObjectiveWeights,
    pub penalties: Penalties,
    pub bounds: DgBounds,
    pub sweep: SweepSettings,
}

impl ScenarioContext {
    pub fn new(
        network: NetworkModel,
        load: HourlySeries,
        irradiance: HourlySeries,
        wind: HourlySeries,
        weights: ObjectiveWeights,
    ) -> Result<Self> {
        let ctx = ScenarioContext {
            network,
            load,
            irradiance,
            wind,
            dg: DgSettings::default(),
            weights,
            penalties: Penalties::default(),
            bounds: DgBounds::default(),
            sweep: SweepSettings::default(),
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.bounds.validate()?;
        self.dg.wind_curve.validate()?;
        let c = &self.penalties;
        if ![c.c_v, c.c_i, c.c_f]
            .iter()
            .all(|v| *v >= 0.0 && v.is_finite())
        {
            return Err(Error::Value(
                "penalty coefficients must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn search_space(&self) -> SearchSpace {
        search_space(self.network.n_bus(), &self.bounds)
    }

    pub fn decode(&self, vector: &[f64]) -> Result<Placement> {
        decode(vector, self.network.n_bus(), &self.bounds)
    }

    pub fn evaluate(&self, vector: &[f64]) -> Result<Evaluation> {
        let placement = self.decode(vector)?;
        self.evaluate_units(placement, &placement.units)
    }

    fn evaluate_units(&self, placement: Placement, units: &[DgUnit]) -> Result<Evaluation> {
        let injections =
            hourly_injections(&self.network, units, &self.irradiance, &self.wind, &self.dg)?;
        let horizon = solve_horizon_with(&self.network, &self.load, &injections, &self.sweep)?;
        let loss_kwh = horizon.total_loss_kwh;
        let vdev_puh = horizon.vdev_puh;
        let penalty = penalty(&horizon, &self.network, &self.penalties);
        let objective = self.weights.combine(loss_kwh, vdev_puh) + penalty;
        Ok(Evaluation {
            objective,
            loss_kwh,
            vdev_puh,
            penalty,
            feasible: penalty == 0.0 && horizon.all_converged(),
            placement,
            horizon,
        })
    }
}

impl Objective for ScenarioContext {
    fn cost(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x)?.objective)
    }
}
