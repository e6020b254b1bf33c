//! 24-hour time series: load multiplier, irradiance and wind speed.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURS: usize = 24;

const BUNDLED_LOAD: &str = include_str!("../data/load_profile.csv");
const BUNDLED_IRRADIANCE: &str = include_str!("../data/irradiance.csv");
const BUNDLED_WIND: &str = include_str!("../data/wind_speed.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// Multiplier on nominal demand, pu.
    LoadMultiplier,
    /// W/m².
    Irradiance,
    /// m/s.
    WindSpeed,
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesKind::LoadMultiplier => "load multiplier (pu)",
            SeriesKind::Irradiance => "irradiance (W/m2)",
            SeriesKind::WindSpeed => "wind speed (m/s)",
        })
    }
}

/// Exactly 24 non-negative values; index 0 is hour 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    kind: SeriesKind,
    values: [f64; HOURS],
}

impl HourlySeries {
    pub fn new(kind: SeriesKind, values: &[f64]) -> Result<Self> {
        if values.len() != HOURS {
            return Err(Error::RowCount(values.len()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Value(format!(
                "{kind} at hour {} must be finite and non-negative, got {v}",
                i + 1
            )));
        }
        let mut arr = [0.0; HOURS];
        arr.copy_from_slice(values);
        Ok(HourlySeries { kind, values: arr })
    }

    pub fn constant(kind: SeriesKind, value: f64) -> Result<Self> {
        Self::new(kind, &[value; HOURS])
    }

    pub fn from_csv_str(text: &str, kind: SeriesKind, source_name: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::parse(source_name, e.to_string()))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let (Some(hour), Some(value)) = (record.get(0), record.get(1)) else {
                return Err(Error::parse(
                    source_name,
                    format!("line {line}: expected hour,value"),
                ));
            };
            if hour.eq_ignore_ascii_case("hour") {
                continue;
            }
            let hour: usize = hour.parse().map_err(|_| {
                Error::parse(source_name, format!("line {line}: bad hour {hour:?}"))
            })?;
            let value: f64 = value.parse().map_err(|_| {
                Error::parse(source_name, format!("line {line}: bad value {value:?}"))
            })?;
            rows.push((hour, value));
        }
        if rows.len() != HOURS {
            return Err(Error::RowCount(rows.len()));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i + 1) {
            return Err(Error::parse(source_name, "hours must be exactly 1..=24"));
        }
        let values: Vec<f64> = rows.into_iter().map(|r| r.1).collect();
        Self::new(kind, &values)
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn values(&self) -> &[f64; HOURS] {
        &self.values
    }

    /// Value at a 1-based hour.
    pub fn at_hour(&self, hour: usize) -> f64 {
        self.values[hour - 1]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// 1-based hour of the first minimum.
    pub fn argmin_hour(&self) -> usize {
        let m = self.min();
        self.values.iter().position(|v| *v == m).unwrap() + 1
    }

    /// 1-based hour of the first maximum.
    pub fn argmax_hour(&self) -> usize {
        let m = self.max();
        self.values.iter().position(|v| *v == m).unwrap() + 1
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("hour,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, v));
        }
        out
    }

    pub fn bundled_load() -> Self {
        Self::from_csv_str(
            BUNDLED_LOAD,
            SeriesKind::LoadMultiplier,
            "bundled load_profile.csv",
        )
        .expect("bundled load profile is valid")
    }

    pub fn bundled_irradiance() -> Self {
        Self::from_csv_str(
            BUNDLED_IRRADIANCE,
            SeriesKind::Irradiance,
            "bundled irradiance.csv",
        )
        .expect("bundled irradiance profile is valid")
    }

    pub fn bundled_wind() -> Self {
        Self::from_csv_str(
            BUNDLED_WIND,
            SeriesKind::WindSpeed,
            "bundled wind_speed.csv",
        )
        .expect("bundled wind profile is valid")
    }
}

pub fn load_profile(path: &Path, kind: SeriesKind) -> Result<HourlySeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    HourlySeries::from_csv_str(&text, kind, &path.display().to_string())
}
