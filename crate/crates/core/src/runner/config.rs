use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dg::DgSettings;
use crate::error::{Error, Result};
use crate::network::{load_network, NetworkFormat, NetworkModel};
use crate::objective::{DgBounds, Penalties};
use crate::optim::lsa::LsaParams;
use crate::optim::pso::PsoParams;
use crate::profile::{load_profile, HourlySeries, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Demand held at nominal every hour.
    ConstantLoad,
    /// Demand follows the hourly load profile.
    LoadProfile,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::ConstantLoad => "constant_load",
            ScenarioKind::LoadProfile => "load_profile",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    Lsa,
    Pso,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Lsa,
    Pso,
}

impl OptimizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Lsa => "lsa",
            OptimizerKind::Pso => "pso",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_ascii_uppercase())
    }
}

impl OptimizerChoice {
    pub fn kinds(&self) -> Vec<OptimizerKind> {
        match self {
            OptimizerChoice::Lsa => vec![OptimizerKind::Lsa],
            OptimizerChoice::Pso => vec![OptimizerKind::Pso],
            OptimizerChoice::Both => vec![OptimizerKind::Lsa, OptimizerKind::Pso],
        }
    }
}

/// Data files; any that are omitted fall back to the bundled data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfilePaths {
    pub load: Option<PathBuf>,
    pub irradiance: Option<PathBuf>,
    pub wind: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightSettings {
    pub w1: f64,
    pub w2: f64,
    /// Normalize both terms by the scenario's no-DG base case. When false,
    /// `w1` and `w2` apply to raw kWh and pu·h.
    pub auto_calibrate: bool,
}

impl Default for WeightSettings {
    fn default() -> Self {
        WeightSettings {
            w1: 0.5,
            w2: 0.5,
            auto_calibrate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveSettings {
    pub weights: WeightSettings,
    pub penalties: Penalties,
    pub dg_bounds: DgBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageBand {
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub network: Option<PathBuf>,
    #[serde(default)]
    pub profiles: ProfilePaths,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerChoice,
    /// Seeds in these blocks are ignored; runs use `seeds`.
    #[serde(default)]
    pub lsa: LsaParams,
    #[serde(default)]
    pub pso: PsoParams,
    #[serde(default)]
    pub objective: ObjectiveSettings,
    #[serde(default)]
    pub dg: DgSettings,
    #[serde(default)]
    pub voltage_band: Option<VoltageBand>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Run independent (optimizer, seed) pairs concurrently.
    #[serde(default = "default_true")]
    pub parallel_runs: bool,
}

fn default_optimizer() -> OptimizerChoice {
    OptimizerChoice::Both
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

impl ScenarioConfig {
    /// A config that uses the bundled data throughout.
    pub fn bundled(scenario: ScenarioKind, seeds: Vec<u64>) -> Self {
        ScenarioConfig {
            scenario,
            network: None,
            profiles: ProfilePaths::default(),
            optimizer: OptimizerChoice::Both,
            lsa: LsaParams::default(),
            pso: PsoParams::default(),
            objective: ObjectiveSettings::default(),
            dg: DgSettings::default(),
            voltage_band: None,
            seeds,
            output_dir: default_output_dir(),
            parallel_runs: true,
        }
    }

    /// Parse a JSON config. Relative paths are taken relative to the
    /// config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for p in [
            self.network.as_mut(),
            self.profiles.load.as_mut(),
            self.profiles.irradiance.as_mut(),
            self.profiles.wind.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let files = [
            self.network.as_ref(),
            self.profiles.irradiance.as_ref(),
            self.profiles.wind.as_ref(),
        ]
        .into_iter()
        .chain(
            // The flat scenario never reads the load profile.
            (self.scenario == ScenarioKind::LoadProfile).then_some(self.profiles.load.as_ref()),
        )
        .flatten();
        for path in files {
            if !path.is_file() {
                return Err(Error::Config(format!("file not found: {}", path.display())));
            }
        }
        self.lsa.validate()?;
        self.pso.validate()?;
        self.objective.dg_bounds.validate()?;
        self.dg.wind_curve.validate()?;
        Ok(())
    }

    /// Replace the seed list with `count` consecutive seeds starting at the
    /// first configured seed.
    pub fn with_seed_count(mut self, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("seed count must be at least 1".into()));
        }
        let first = self.seeds.first().copied().unwrap_or(1);
        self.seeds = (0..count as u64).map(|i| first + i).collect();
        Ok(self)
    }

    pub fn load_network(&self) -> Result<NetworkModel> {
        let net = match &self.network {
            Some(path) => load_network(path, NetworkFormat::from_path(path))?,
            None => NetworkModel::ieee33(),
        };
        match self.voltage_band {
            Some(band) => net.with_voltage_band(band.v_min, band.v_max),
            None => Ok(net),
        }
    }

    /// Load multiplier series for this scenario.
    pub fn load_series(&self) -> Result<HourlySeries> {
        match self.scenario {
            ScenarioKind::ConstantLoad => HourlySeries::constant(SeriesKind::LoadMultiplier, 1.0),
            ScenarioKind::LoadProfile => match &self.profiles.load {
                Some(path) => load_profile(path, SeriesKind::LoadMultiplier),
                None => Ok(HourlySeries::bundled_load()),
            },
        }
    }

    pub fn irradiance_series(&self) -> Result<HourlySeries> {
        match &self.profiles.irradiance {
            Some(path) => load_profile(path, SeriesKind::Irradiance),
            None => Ok(HourlySeries::bundled_irradiance()),
        }
    }

    pub fn wind_series(&self) -> Result<HourlySeries> {
        match &self.profiles.wind {
            Some(path) => load_profile(path, SeriesKind::WindSpeed),
            None => Ok(HourlySeries::bundled_wind()),
        }
    }
}
