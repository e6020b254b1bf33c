//! Hourly output of PV, wind-turbine and fuel-cell units.
//!
//! All units run at unity power factor. PV scales linearly with irradiance
//! up to rating; the turbine follows a cubic curve between cut-in and rated
//! speed; the fuel cell runs flat out every hour.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkModel;
use crate::powerflow::InjectionSet;
use crate::profile::{HourlySeries, HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DgKind {
    #[serde(rename = "PV")]
    Pv,
    #[serde(rename = "WT")]
    Wt,
    #[serde(rename = "FC")]
    Fc,
}

impl DgKind {
    pub const ALL: [DgKind; 3] = [DgKind::Pv, DgKind::Wt, DgKind::Fc];
}

impl fmt::Display for DgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DgKind::Pv => "PV",
            DgKind::Wt => "WT",
            DgKind::Fc => "FC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgUnit {
    pub kind: DgKind,
    /// 1-based bus id.
    pub location: usize,
    pub rated_kw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindCurve {
    pub cut_in: f64,
    pub rated: f64,
    pub cut_out: f64,
}

impl Default for WindCurve {
    fn default() -> Self {
        WindCurve {
            cut_in: 2.5,
            rated: 12.0,
            cut_out: 25.0,
        }
    }
}

impl WindCurve {
    pub fn new(cut_in: f64, rated: f64, cut_out: f64) -> Result<Self> {
        let curve = WindCurve {
            cut_in,
            rated,
            cut_out,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if 0.0 < self.cut_in && self.cut_in < self.rated && self.rated < self.cut_out {
            Ok(())
        } else {
            Err(Error::Value(format!(
                "wind curve needs 0 < cut_in < rated < cut_out, got {} / {} / {}",
                self.cut_in, self.rated, self.cut_out
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgSettings {
    pub wind_curve: WindCurve,
    /// Irradiance at which PV delivers its rating, W/m².
    pub reference_irradiance: f64,
}

impl Default for DgSettings {
    fn default() -> Self {
        DgSettings {
            wind_curve: WindCurve::default(),
            reference_irradiance: 1000.0,
        }
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Value(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

pub fn pv_output(rated_kw: f64, irradiance: f64, reference_irradiance: f64) -> Result<f64> {
    non_negative("PV rating", rated_kw)?;
    non_negative("irradiance", irradiance)?;
    if !(reference_irradiance > 0.0 && reference_irradiance.is_finite()) {
        return Err(Error::Value(format!(
            "reference irradiance must be positive, got {reference_irradiance}"
        )));
    }
    Ok(rated_kw.min(rated_kw * irradiance / reference_irradiance))
}

pub fn wt_output(rated_kw: f64, wind_speed: f64, curve: &WindCurve) -> Result<f64> {
    non_negative("WT rating", rated_kw)?;
    non_negative("wind speed", wind_speed)?;
    let WindCurve {
        cut_in,
        rated,
        cut_out,
    } = *curve;
    let out = if wind_speed < cut_in || wind_speed >= cut_out {
        0.0
    } else if wind_speed < rated {
        rated_kw * (wind_speed.powi(3) - cut_in.powi(3)) / (rated.powi(3) - cut_in.powi(3))
    } else {
        rated_kw
    };
    Ok(out)
}

/// Fuel cells are dispatchable and run at rating every hour.
pub fn fc_output(rated_kw: f64) -> Result<f64> {
    non_negative("FC rating", rated_kw)?;
    Ok(rated_kw)
}

/// Output of one unit at a 1-based hour.
pub fn unit_output(
    unit: &DgUnit,
    hour: usize,
    irradiance: &HourlySeries,
    wind: &HourlySeries,
    settings: &DgSettings,
) -> Result<f64> {
    match unit.kind {
        DgKind::Pv => pv_output(
            unit.rated_kw,
            irradiance.at_hour(hour),
            settings.reference_irradiance,
        ),
        DgKind::Wt => wt_output(unit.rated_kw, wind.at_hour(hour), &settings.wind_curve),
        DgKind::Fc => fc_output(unit.rated_kw),
    }
}

/// One injection set per hour with every unit's output at its bus.
/// At most one unit of each kind is allowed.
pub fn hourly_injections(
    network: &NetworkModel,
    units: &[DgUnit],
    irradiance: &HourlySeries,
    wind: &HourlySeries,
    settings: &DgSettings,
) -> Result<Vec<InjectionSet>> {
    let n_bus = network.n_bus();
    let mut seen = Vec::with_capacity(units.len());
    for unit in units {
        if seen.contains(&unit.kind) {
            return Err(Error::DuplicateKind(unit.kind));
        }
        seen.push(unit.kind);
        if unit.location < 2 || unit.location > n_bus {
            return Err(Error::InvalidBus {
                bus: unit.location,
                n_bus,
            });
        }
    }
    settings.wind_curve.validate()?;

    (1..=HOURS)
        .map(|hour| {
            let mut inj = InjectionSet::zeros(n_bus);
            for unit in units {
                let p = unit_output(unit, hour, irradiance, wind, settings)?;
                inj.add(unit.location, p, 0.0)?;
            }
            Ok(inj)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles() -> (HourlySeries, HourlySeries) {
        (
            HourlySeries::bundled_irradiance(),
            HourlySeries::bundled_wind(),
        )
    }

    #[test]
    fn pv_scaling() {
        assert_eq!(pv_output(1000.0, 0.0, 1000.0).unwrap(), 0.0);
        assert_eq!(pv_output(1000.0, 1000.0, 1000.0).unwrap(), 1000.0);
        assert_eq!(pv_output(1000.0, 500.0, 1000.0).unwrap(), 500.0);
        assert_eq!(pv_output(1000.0, 1200.0, 1000.0).unwrap(), 1000.0);
        assert!(pv_output(1000.0, -1.0, 1000.0).is_err());
        assert!(pv_output(1000.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn pv_dark_outside_daylight_window() {
        let (irr, _) = profiles();
        for hour in (1..6).chain(22..=24) {
            assert_eq!(pv_output(1000.0, irr.at_hour(hour), 1000.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn wind_curve_regions() {
        let curve = WindCurve::default();
        assert_eq!(wt_output(1000.0, 2.0, &curve).unwrap(), 0.0);
        assert_eq!(wt_output(1000.0, 12.0, &curve).unwrap(), 1000.0);
        assert_eq!(wt_output(1000.0, 19.7, &curve).unwrap(), 1000.0);
        assert_eq!(wt_output(1000.0, 25.0, &curve).unwrap(), 0.0);
        // (7.25³ − 2.5³) / (12³ − 2.5³) = 365.453125 / 1712.375
        let mid = wt_output(1000.0, 7.25, &curve).unwrap();
        assert!((mid - 213.418_862_690_707).abs() < 1e-9, "{mid}");
        assert!(wt_output(1000.0, -3.0, &curve).is_err());
    }

    #[test]
    fn wind_curve_validation() {
        assert!(WindCurve::new(3.0, 12.0, 25.0).is_ok());
        assert!(WindCurve::new(0.0, 12.0, 25.0).is_err());
        assert!(WindCurve::new(13.0, 12.0, 25.0).is_err());
        assert!(WindCurve::new(3.0, 26.0, 25.0).is_err());
    }

    #[test]
    fn fuel_cell_is_flat() {
        assert_eq!(fc_output(870.0).unwrap(), 870.0);
        assert_eq!(fc_output(0.0).unwrap(), 0.0);
        assert_eq!(fc_output(1260.0).unwrap(), 1260.0);
    }

    #[test]
    fn night_pv_injects_nothing() {
        let (irr, wind) = profiles();
        let net = NetworkModel::ieee33();
        let pv = DgUnit {
            kind: DgKind::Pv,
            location: 32,
            rated_kw: 2210.0,
        };
        let inj = hourly_injections(&net, &[pv], &irr, &wind, &DgSettings::default()).unwrap();
        assert_eq!(inj.len(), 24);
        assert!(inj[2].p_kw().iter().all(|&p| p == 0.0));
        assert!(inj[12].p_kw()[31] > 0.0);
    }

    #[test]
    fn empty_unit_list() {
        let (irr, wind) = profiles();
        let net = NetworkModel::ieee33();
        let inj = hourly_injections(&net, &[], &irr, &wind, &DgSettings::default()).unwrap();
        assert_eq!(inj, vec![InjectionSet::zeros(33); 24]);
    }

    #[test]
    fn fuel_cell_every_hour() {
        let (irr, wind) = profiles();
        let net = NetworkModel::ieee33();
        let fc = DgUnit {
            kind: DgKind::Fc,
            location: 6,
            rated_kw: 870.0,
        };
        let inj = hourly_injections(&net, &[fc], &irr, &wind, &DgSettings::default()).unwrap();
        for set in &inj {
            assert_eq!(set.p_kw()[5], 870.0);
            assert_eq!(set.total_p_kw(), 870.0);
            assert!(set.q_kvar().iter().all(|&q| q == 0.0));
        }
    }

    #[test]
    fn duplicate_kind_and_bad_bus_rejected() {
        let (irr, wind) = profiles();
        let net = NetworkModel::ieee33();
        let s = DgSettings::default();
        let a = DgUnit {
            kind: DgKind::Wt,
            location: 10,
            rated_kw: 100.0,
        };
        let b = DgUnit {
            kind: DgKind::Wt,
            location: 12,
            rated_kw: 100.0,
        };
        assert!(matches!(
            hourly_injections(&net, &[a, b], &irr, &wind, &s),
            Err(Error::DuplicateKind(DgKind::Wt))
        ));
        let slack = DgUnit { location: 1, ..a };
        assert!(matches!(
            hourly_injections(&net, &[slack], &irr, &wind, &s),
            Err(Error::InvalidBus { bus: 1, .. })
        ));
        let beyond = DgUnit { location: 34, ..a };
        assert!(hourly_injections(&net, &[beyond], &irr, &wind, &s).is_err());
    }
}
