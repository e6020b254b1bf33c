//! Radial feeder model: buses, branches, base quantities and the
//! breadth-first sweep order used by the load-flow solver.
//!
//! Bus ids must be exactly `1..=n`; bus 1 is the slack (substation) bus and
//! carries no demand. Branch impedances are in ohm, demands in kW / kvar.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_IEEE33: &str = include_str!("../data/ieee33.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub p_kw: f64,
    pub q_kvar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
    /// Thermal limit in A. `None` means the branch has no binding limit.
    #[serde(default)]
    pub amp_max: Option<f64>,
}

impl Branch {
    /// Ampacity in A; unlimited branches report `f64::INFINITY`.
    pub fn ampacity(&self) -> f64 {
        self.amp_max.unwrap_or(f64::INFINITY)
    }
}

/// System base and voltage band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Base {
    /// Line-to-line voltage, kV.
    pub kv: f64,
    /// Three-phase power base, MVA.
    pub mva: f64,
    #[serde(default = "default_v_nom")]
    pub v_nom: f64,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
}

fn default_v_nom() -> f64 {
    1.0
}
fn default_v_min() -> f64 {
    0.90
}
fn default_v_max() -> f64 {
    1.05
}

impl Default for Base {
    fn default() -> Self {
        Base {
            kv: 12.66,
            mva: 100.0,
            v_nom: default_v_nom(),
            v_min: default_v_min(),
            v_max: default_v_max(),
        }
    }
}

impl Base {
    pub fn z_base_ohm(&self) -> f64 {
        self.kv * self.kv / self.mva
    }

    pub fn s_base_kva(&self) -> f64 {
        self.mva * 1000.0
    }

    /// Line current base, A.
    pub fn i_base_amp(&self) -> f64 {
        self.mva * 1e3 / (3f64.sqrt() * self.kv)
    }
}

/// A branch oriented away from the slack, referring to buses by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SweepBranch {
    pub branch: usize,
    pub upstream: usize,
    pub downstream: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Csv,
    Json,
}

impl NetworkFormat {
    /// Guess the format from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => NetworkFormat::Json,
            _ => NetworkFormat::Csv,
        }
    }
}

/// Validated, immutable radial feeder.
///
/// Cloning is cheap: topology data is shared. Demands are stored at their
/// nominal values together with a load multiplier, so repeated scaling
/// composes exactly.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    buses: Arc<[Bus]>,
    branches: Arc<[Branch]>,
    order: Arc<[SweepBranch]>,
    base: Base,
    load_scale: f64,
}

impl PartialEq for NetworkModel {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.branches == other.branches
            && self.buses.len() == other.buses.len()
            && (0..self.buses.len()).all(|i| self.bus_demand(i) == other.bus_demand(i))
    }
}

impl NetworkModel {
    pub fn new(mut buses: Vec<Bus>, branches: Vec<Branch>, base: Base) -> Result<Self> {
        buses.sort_by_key(|b| b.id);
        check_base(&base)?;
        check_buses(&buses)?;
        check_branches(&buses, &branches)?;
        let order = sweep_order(buses.len(), &branches)?;
        Ok(NetworkModel {
            buses: buses.into(),
            branches: branches.into(),
            order: order.into(),
            base,
            load_scale: 1.0,
        })
    }

    /// The standard 33-bus feeder bundled with the crate.
    pub fn ieee33() -> Self {
        Self::from_csv_str(BUNDLED_IEEE33, "bundled ieee33.csv")
            .expect("bundled 33-bus data is valid")
    }

    pub fn from_csv_str(text: &str, source_name: &str) -> Result<Self> {
        parse_csv(text, source_name)
    }

    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| Error::parse(source_name, e.to_string()))?;
        NetworkModel::new(file.buses, file.branches, file.base)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = NetworkFile {
            base: self.base,
            buses: self.effective_buses(),
            branches: self.branches.to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn to_csv_string(&self) -> String {
        let b = &self.base;
        let mut out = String::new();
        out.push_str("BASE,base_kv,base_mva,v_nom,v_min,v_max\n");
        let _ = writeln!(
            out,
            "BASE,{},{},{},{},{}",
            b.kv, b.mva, b.v_nom, b.v_min, b.v_max
        );
        out.push_str("BUS,id,p_kw,q_kvar\n");
        for bus in self.effective_buses() {
            let _ = writeln!(out, "BUS,{},{},{}", bus.id, bus.p_kw, bus.q_kvar);
        }
        out.push_str("BRANCH,id,from,to,r_ohm,x_ohm,amp_max\n");
        for br in self.branches.iter() {
            let amp = br.amp_max.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "BRANCH,{},{},{},{},{},{}",
                br.id, br.from, br.to, br.r_ohm, br.x_ohm, amp
            );
        }
        out
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branch(&self) -> usize {
        self.branches.len()
    }

    /// Bus records at nominal demand, sorted by id (index = id - 1).
    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    /// Bus records with the current load multiplier applied.
    pub fn effective_buses(&self) -> Vec<Bus> {
        (0..self.n_bus())
            .map(|i| {
                let (p_kw, q_kvar) = self.bus_demand(i);
                Bus {
                    id: self.buses[i].id,
                    p_kw,
                    q_kvar,
                }
            })
            .collect()
    }

    /// Branches in file order.
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn v_nom(&self) -> f64 {
        self.base.v_nom
    }

    pub fn load_scale(&self) -> f64 {
        self.load_scale
    }

    /// Scaled (kW, kvar) demand of the bus at `index`.
    pub fn bus_demand(&self, index: usize) -> (f64, f64) {
        let bus = &self.buses[index];
        (bus.p_kw * self.load_scale, bus.q_kvar * self.load_scale)
    }

    pub fn total_demand(&self) -> (f64, f64) {
        (0..self.n_bus())
            .map(|i| self.bus_demand(i))
            .fold((0.0, 0.0), |(p, q), (dp, dq)| (p + dp, q + dq))
    }

    /// Index of the branch with the given id.
    pub fn branch_index(&self, id: usize) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub(crate) fn sweep(&self) -> &[SweepBranch] {
        &self.order
    }

    /// Branches in breadth-first order from the slack, each oriented so
    /// that `from` is the upstream bus.
    pub fn radial_order(&self) -> Vec<Branch> {
        self.order
            .iter()
            .map(|s| Branch {
                from: self.buses[s.upstream].id,
                to: self.buses[s.downstream].id,
                ..self.branches[s.branch]
            })
            .collect()
    }

    /// Multiply every demand by `multiplier`. Topology is shared.
    pub fn scale_loads(&self, multiplier: f64) -> Result<Self> {
        if !(multiplier >= 0.0 && multiplier.is_finite()) {
            return Err(Error::Value(format!(
                "load multiplier must be finite and non-negative, got {multiplier}"
            )));
        }
        Ok(NetworkModel {
            load_scale: self.load_scale * multiplier,
            ..self.clone()
        })
    }

    /// Replace the permitted voltage band.
    pub fn with_voltage_band(&self, v_min: f64, v_max: f64) -> Result<Self> {
        let base = Base {
            v_min,
            v_max,
            ..self.base
        };
        check_base(&base)?;
        Ok(NetworkModel {
            base,
            ..self.clone()
        })
    }
}

/// Read and validate a network file.
pub fn load_network(path: &Path, format: NetworkFormat) -> Result<NetworkModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    match format {
        NetworkFormat::Csv => NetworkModel::from_csv_str(&text, &name),
        NetworkFormat::Json => NetworkModel::from_json_str(&text, &name),
    }
}

/// Check that `branches` form a spanning tree over `buses` rooted at bus 1
/// and return them in breadth-first order, oriented away from the slack.
pub fn validate_radial(buses: &[Bus], branches: &[Branch]) -> Result<Vec<Branch>> {
    let mut sorted = buses.to_vec();
    sorted.sort_by_key(|b| b.id);
    check_buses(&sorted)?;
    check_branches(&sorted, branches)?;
    let order = sweep_order(sorted.len(), branches)?;
    Ok(order
        .iter()
        .map(|s| Branch {
            from: s.upstream + 1,
            to: s.downstream + 1,
            ..branches[s.branch]
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    base: Base,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
}

fn check_base(base: &Base) -> Result<()> {
    let finite = [base.kv, base.mva, base.v_nom, base.v_min, base.v_max]
        .iter()
        .all(|v| v.is_finite());
    if !finite || base.kv <= 0.0 || base.mva <= 0.0 {
        return Err(Error::Value(format!(
            "base quantities must be positive and finite (kV {}, MVA {})",
            base.kv, base.mva
        )));
    }
    if !(base.v_min < base.v_nom && base.v_nom < base.v_max) {
        return Err(Error::Value(format!(
            "voltage band must satisfy v_min < v_nom < v_max, got {} / {} / {}",
            base.v_min, base.v_nom, base.v_max
        )));
    }
    Ok(())
}

/// Expects `buses` sorted by id.
fn check_buses(buses: &[Bus]) -> Result<()> {
    if buses.len() < 2 {
        return Err(Error::Topology(format!(
            "a feeder needs at least two buses, found {}",
            buses.len()
        )));
    }
    for (i, bus) in buses.iter().enumerate() {
        if bus.id != i + 1 {
            return Err(Error::Topology(format!(
                "bus ids must be unique and numbered 1..={} (found id {} at position {})",
                buses.len(),
                bus.id,
                i + 1
            )));
        }
        if !(bus.p_kw >= 0.0 && bus.q_kvar >= 0.0 && bus.p_kw.is_finite() && bus.q_kvar.is_finite())
        {
            return Err(Error::Value(format!(
                "bus {} demand must be finite and non-negative",
                bus.id
            )));
        }
    }
    if buses[0].p_kw != 0.0 || buses[0].q_kvar != 0.0 {
        return Err(Error::Value("slack bus 1 must carry no demand".into()));
    }
    Ok(())
}

fn check_branches(buses: &[Bus], branches: &[Branch]) -> Result<()> {
    let n = buses.len();
    let mut ids = HashSet::new();
    for br in branches {
        if !ids.insert(br.id) {
            return Err(Error::Topology(format!("duplicate branch id {}", br.id)));
        }
        if br.from == br.to {
            return Err(Error::Topology(format!(
                "branch {} is a self-loop on bus {}",
                br.id, br.from
            )));
        }
        for end in [br.from, br.to] {
            if end == 0 || end > n {
                return Err(Error::Topology(format!(
                    "branch {} references unknown bus {}",
                    br.id, end
                )));
            }
        }
        let imp_ok =
            br.r_ohm >= 0.0 && br.x_ohm >= 0.0 && br.r_ohm.is_finite() && br.x_ohm.is_finite();
        if !imp_ok {
            return Err(Error::Value(format!(
                "branch {} impedance must be finite and non-negative",
                br.id
            )));
        }
        if let Some(amp) = br.amp_max {
            if !(amp > 0.0) {
                return Err(Error::Value(format!(
                    "branch {} ampacity must be positive, got {amp}",
                    br.id
                )));
            }
        }
    }
    Ok(())
}

fn sweep_order(n_bus: usize, branches: &[Branch]) -> Result<Vec<SweepBranch>> {
    if branches.len() != n_bus - 1 {
        return Err(Error::Topology(format!(
            "a radial feeder with {n_bus} buses needs {} branches, found {}",
            n_bus - 1,
            branches.len()
        )));
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_bus];
    for (k, br) in branches.iter().enumerate() {
        adjacency[br.from - 1].push(k);
        adjacency[br.to - 1].push(k);
    }

    let mut visited = vec![false; n_bus];
    let mut used = vec![false; branches.len()];
    let mut order = Vec::with_capacity(branches.len());
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(bus) = queue.pop_front() {
        for &k in &adjacency[bus] {
            if used[k] {
                continue;
            }
            used[k] = true;
            let br = &branches[k];
            let other = if br.from - 1 == bus {
                br.to - 1
            } else {
                br.from - 1
            };
            if visited[other] {
                return Err(Error::Topology(format!(
                    "branch {} closes a loop at bus {}",
                    br.id,
                    other + 1
                )));
            }
            visited[other] = true;
            order.push(SweepBranch {
                branch: k,
                upstream: bus,
                downstream: other,
            });
            queue.push_back(other);
        }
    }
    if let Some(orphan) = visited.iter().position(|v| !v) {
        return Err(Error::Topology(format!(
            "bus {} is not reachable from the slack bus",
            orphan + 1
        )));
    }
    Ok(order)
}

fn parse_csv(text: &str, source_name: &str) -> Result<NetworkModel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut base = Base::default();
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(source_name, e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields: Vec<&str> = record.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        // Section header rows ("BUS,id,...") carry a label in the second column.
        if fields.len() > 1 && fields[1].parse::<f64>().is_err() {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, format!("line {line}: {msg}"));
        let num = |idx: usize| -> Result<f64> {
            let raw = fields
                .get(idx)
                .ok_or_else(|| err(format!("missing column {}", idx + 1)))?;
            raw.parse::<f64>()
                .map_err(|_| err(format!("column {} is not a number: {raw:?}", idx + 1)))
        };
        let int = |idx: usize| -> Result<usize> {
            let raw = fields
                .get(idx)
                .ok_or_else(|| err(format!("missing column {}", idx + 1)))?;
            raw.parse::<usize>()
                .map_err(|_| err(format!("column {} is not an id: {raw:?}", idx + 1)))
        };
        match fields[0].to_ascii_uppercase().as_str() {
            "BASE" => {
                base.kv = num(1)?;
                base.mva = num(2)?;
                if fields.len() > 3 && !fields[3].is_empty() {
                    base.v_nom = num(3)?;
                }
                if fields.len() > 4 && !fields[4].is_empty() {
                    base.v_min = num(4)?;
                }
                if fields.len() > 5 && !fields[5].is_empty() {
                    base.v_max = num(5)?;
                }
            }
            "BUS" => buses.push(Bus {
                id: int(1)?,
                p_kw: num(2)?,
                q_kvar: num(3)?,
            }),
            "BRANCH" => {
                let amp_max = match fields.get(6) {
                    Some(raw) if !raw.is_empty() => Some(num(6)?),
                    _ => None,
                };
                branches.push(Branch {
                    id: int(1)?,
                    from: int(2)?,
                    to: int(3)?,
                    r_ohm: num(4)?,
                    x_ohm: num(5)?,
                    amp_max,
                });
            }
            other => return Err(err(format!("unknown record type {other:?}"))),
        }
    }
    NetworkModel::new(buses, branches, base)
}
