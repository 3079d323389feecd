//! Security control catalog and network-function inventory.
//!
//! Both are loaded from JSON. The catalog is immutable once loaded; the
//! inventory is mutated by the simulator and by applied plans.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::intent::QualitativeLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackSurface {
    AirInterfaceCp,
    AirInterfaceUp,
    Transport,
    Management,
    Api,
    Storage,
}

impl AttackSurface {
    pub const ALL: [AttackSurface; 6] = [
        AttackSurface::AirInterfaceCp,
        AttackSurface::AirInterfaceUp,
        AttackSurface::Transport,
        AttackSurface::Management,
        AttackSurface::Api,
        AttackSurface::Storage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackSurface::AirInterfaceCp => "air_interface_cp",
            AttackSurface::AirInterfaceUp => "air_interface_up",
            AttackSurface::Transport => "transport",
            AttackSurface::Management => "management",
            AttackSurface::Api => "api",
            AttackSurface::Storage => "storage",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for AttackSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Capability tags a control provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityProperty {
    CpConfidentiality,
    CpIntegrity,
    UpConfidentiality,
    UpIntegrity,
    Confidentiality,
    Integrity,
    Authentication,
    Authorization,
    AccessControl,
    Logging,
    Segmentation,
    Detection,
    Mitigation,
    DataAtRestEncryption,
}

impl SecurityProperty {
    pub const ALL: [SecurityProperty; 14] = [
        SecurityProperty::CpConfidentiality,
        SecurityProperty::CpIntegrity,
        SecurityProperty::UpConfidentiality,
        SecurityProperty::UpIntegrity,
        SecurityProperty::Confidentiality,
        SecurityProperty::Integrity,
        SecurityProperty::Authentication,
        SecurityProperty::Authorization,
        SecurityProperty::AccessControl,
        SecurityProperty::Logging,
        SecurityProperty::Segmentation,
        SecurityProperty::Detection,
        SecurityProperty::Mitigation,
        SecurityProperty::DataAtRestEncryption,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SecurityProperty::CpConfidentiality => "cp_confidentiality",
            SecurityProperty::CpIntegrity => "cp_integrity",
            SecurityProperty::UpConfidentiality => "up_confidentiality",
            SecurityProperty::UpIntegrity => "up_integrity",
            SecurityProperty::Confidentiality => "confidentiality",
            SecurityProperty::Integrity => "integrity",
            SecurityProperty::Authentication => "authentication",
            SecurityProperty::Authorization => "authorization",
            SecurityProperty::AccessControl => "access_control",
            SecurityProperty::Logging => "logging",
            SecurityProperty::Segmentation => "segmentation",
            SecurityProperty::Detection => "detection",
            SecurityProperty::Mitigation => "mitigation",
            SecurityProperty::DataAtRestEncryption => "data_at_rest_encryption",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for SecurityProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    CpuPct,
    LatencyMsAdded,
    BandwidthOverheadPct,
}

impl Resource {
    pub const ALL: [Resource; 3] = [Resource::CpuPct, Resource::LatencyMsAdded, Resource::BandwidthOverheadPct];

    pub fn as_str(self) -> &'static str {
        match self {
            Resource::CpuPct => "cpu_pct",
            Resource::LatencyMsAdded => "latency_ms_added",
            Resource::BandwidthOverheadPct => "bandwidth_overhead_pct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Resource vector, used both for control costs and NF budgets.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cost {
    pub cpu_pct: f64,
    pub latency_ms_added: f64,
    pub bandwidth_overhead_pct: f64,
}

impl Cost {
    pub fn get(&self, r: Resource) -> f64 {
        match r {
            Resource::CpuPct => self.cpu_pct,
            Resource::LatencyMsAdded => self.latency_ms_added,
            Resource::BandwidthOverheadPct => self.bandwidth_overhead_pct,
        }
    }

    fn is_valid(&self) -> bool {
        Resource::ALL.iter().all(|r| {
            let v = self.get(*r);
            v.is_finite() && v >= 0.0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityControl {
    pub id: String,
    pub name: String,
    pub surfaces: BTreeSet<AttackSurface>,
    pub properties: BTreeSet<SecurityProperty>,
    pub tier: QualitativeLevel,
    pub cost: Cost,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_latency_ms: Option<u64>,
    #[serde(default)]
    pub dependencies: BTreeSet<String>,
}

impl SecurityControl {
    pub fn is_detection(&self) -> bool {
        self.properties.contains(&SecurityProperty::Detection)
    }

    /// At least one of the control's surfaces exists on the NF.
    pub fn applies_to(&self, nf: &NetworkFunction) -> bool {
        !self.surfaces.is_disjoint(&nf.surfaces)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub version: u32,
    controls: BTreeMap<String, SecurityControl>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("cyclic control dependency: {}", .0.join(" -> "))]
    CyclicDependency(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    version: u32,
    controls: Vec<SecurityControl>,
}

impl Catalog {
    /// Builds and checks a catalog from controls already in memory.
    pub fn from_controls(version: u32, controls: Vec<SecurityControl>) -> Result<Self, CatalogError> {
        let mut map = BTreeMap::new();
        for c in controls {
            check_control(&c)?;
            let id = c.id.clone();
            if map.insert(id.clone(), c).is_some() {
                return Err(CatalogError::Schema(format!("duplicate control id '{id}'")));
            }
        }
        for c in map.values() {
            for d in &c.dependencies {
                if !map.contains_key(d) {
                    return Err(CatalogError::Schema(format!("control '{}' depends on unknown control '{d}'", c.id)));
                }
            }
        }
        if let Some(cycle) = find_cycle(&map) {
            return Err(CatalogError::CyclicDependency(cycle));
        }
        Ok(Catalog { version, controls: map })
    }

    pub fn get(&self, id: &str) -> Option<&SecurityControl> {
        self.controls.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.controls.contains_key(id)
    }

    /// Controls in id order.
    pub fn controls(&self) -> impl Iterator<Item = &SecurityControl> {
        self.controls.values()
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// Transitive dependency closure of `id`, excluding `id` itself.
    pub fn dependency_closure(&self, id: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = vec![id];
        while let Some(cur) = stack.pop() {
            if let Some(c) = self.controls.get(cur) {
                for d in &c.dependencies {
                    if out.insert(d.clone()) {
                        stack.push(d);
                    }
                }
            }
        }
        out
    }

    /// Union of properties of controls at or below `level` that protect `surface`.
    pub fn tier_properties(&self, surface: AttackSurface, level: QualitativeLevel) -> BTreeSet<SecurityProperty> {
        self.controls
            .values()
            .filter(|c| c.tier <= level && c.surfaces.contains(&surface))
            .flat_map(|c| c.properties.iter().copied())
            .collect()
    }
}

fn check_control(c: &SecurityControl) -> Result<(), CatalogError> {
    let err = |m: &str| Err(CatalogError::Schema(format!("control '{}': {m}", c.id)));
    if c.id.trim().is_empty() {
        return Err(CatalogError::Schema("control with empty id".into()));
    }
    if c.surfaces.is_empty() {
        return err("surfaces must be non-empty");
    }
    if c.properties.is_empty() {
        return err("properties must be non-empty");
    }
    if !c.cost.is_valid() {
        return err("costs must be finite and non-negative");
    }
    match (c.is_detection(), c.detection_latency_ms.is_some()) {
        (true, false) => return err("detection control requires detection_latency_ms"),
        (false, true) => return err("detection_latency_ms is only allowed on detection controls"),
        _ => {}
    }
    if c.dependencies.contains(&c.id) {
        return Err(CatalogError::CyclicDependency(vec![c.id.clone()]));
    }
    Ok(())
}

fn find_cycle(map: &BTreeMap<String, SecurityControl>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    fn visit<'a>(
        id: &'a str,
        map: &'a BTreeMap<String, SecurityControl>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(id, Mark::Open);
        stack.push(id);
        for dep in &map[id].dependencies {
            match marks[dep.as_str()] {
                Mark::Open => {
                    let start = stack.iter().position(|s| *s == dep).unwrap_or(0);
                    return Some(stack[start..].iter().map(|s| s.to_string()).collect());
                }
                Mark::New => {
                    if let Some(c) = visit(dep, map, marks, stack) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(id, Mark::Done);
        None
    }
    let mut marks: BTreeMap<&str, Mark> = map.keys().map(|k| (k.as_str(), Mark::New)).collect();
    for id in map.keys() {
        if marks[id.as_str()] == Mark::New {
            let mut stack = Vec::new();
            if let Some(c) = visit(id, map, &mut marks, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

pub fn load_catalog(bytes: &[u8]) -> Result<Catalog, CatalogError> {
    let doc: CatalogDoc = serde_json::from_slice(bytes).map_err(|e| CatalogError::Schema(e.to_string()))?;
    Catalog::from_controls(doc.version, doc.controls)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstalledControl {
    pub enabled: bool,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFunction {
    pub id: String,
    pub nf_type: String,
    pub location_area: String,
    pub surfaces: BTreeSet<AttackSurface>,
    pub installed: BTreeMap<String, InstalledControl>,
    pub budget: Cost,
}

impl NetworkFunction {
    pub fn is_enabled(&self, control: &str) -> bool {
        self.installed.get(control).is_some_and(|c| c.enabled)
    }

    pub fn enabled_controls(&self) -> BTreeSet<String> {
        self.installed.iter().filter(|(_, c)| c.enabled).map(|(id, _)| id.clone()).collect()
    }

    /// Properties provided on `surface` by enabled controls.
    pub fn provided_properties(&self, catalog: &Catalog, surface: AttackSurface) -> BTreeSet<SecurityProperty> {
        self.installed
            .iter()
            .filter(|(_, st)| st.enabled)
            .filter_map(|(id, _)| catalog.get(id))
            .filter(|c| c.surfaces.contains(&surface))
            .flat_map(|c| c.properties.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NfInventory {
    pub nfs: BTreeMap<String, NetworkFunction>,
}

impl NfInventory {
    pub fn get(&self, id: &str) -> Option<&NetworkFunction> {
        self.nfs.get(id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut NetworkFunction> {
        self.nfs.get_mut(id)
    }

    pub fn len(&self) -> usize {
        self.nfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nfs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NetworkFunction> {
        self.nfs.values()
    }

    /// NFs of the given type in the given area, id order.
    pub fn matching<'a>(&'a self, nf_type: &'a str, area: &'a str) -> impl Iterator<Item = &'a NetworkFunction> + 'a {
        self.nfs.values().filter(move |nf| nf.nf_type == nf_type && nf.location_area == area)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InventoryDoc {
    nfs: Vec<NfDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NfDoc {
    id: String,
    nf_type: String,
    location_area: String,
    surfaces: BTreeSet<AttackSurface>,
    #[serde(default)]
    installed: Vec<InstalledDoc>,
    budget: Cost,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstalledDoc {
    control: String,
    #[serde(default = "yes")]
    enabled: bool,
    #[serde(default)]
    version: u64,
}

fn yes() -> bool {
    true
}

/// Parses an inventory and cross-checks it against `catalog`.
pub fn load_inventory(bytes: &[u8], catalog: &Catalog) -> Result<NfInventory, CatalogError> {
    let doc: InventoryDoc = serde_json::from_slice(bytes).map_err(|e| CatalogError::Schema(e.to_string()))?;
    let mut inv = NfInventory::default();
    for nf in doc.nfs {
        let schema = |m: String| CatalogError::Schema(format!("nf '{}': {m}", nf.id));
        if nf.id.trim().is_empty() {
            return Err(CatalogError::Schema("nf with empty id".into()));
        }
        if nf.surfaces.is_empty() {
            return Err(schema("surfaces must be non-empty".into()));
        }
        if nf.nf_type.trim().is_empty() || nf.location_area.trim().is_empty() {
            return Err(schema("nf_type and location_area must be non-empty".into()));
        }
        if !nf.budget.is_valid() {
            return Err(schema("budget must be finite and non-negative".into()));
        }
        let mut installed = BTreeMap::new();
        for i in nf.installed {
            let control = catalog.get(&i.control).ok_or_else(|| schema(format!("unknown control '{}'", i.control)))?;
            if control.surfaces.is_disjoint(&nf.surfaces) {
                return Err(schema(format!("control '{}' protects no surface of this NF", i.control)));
            }
            if installed.insert(i.control.clone(), InstalledControl { enabled: i.enabled, version: i.version }).is_some() {
                return Err(schema(format!("control '{}' installed twice", i.control)));
            }
        }
        let id = nf.id.clone();
        let value = NetworkFunction {
            id: nf.id,
            nf_type: nf.nf_type,
            location_area: nf.location_area,
            surfaces: nf.surfaces,
            installed,
            budget: nf.budget,
        };
        if inv.nfs.insert(id.clone(), value).is_some() {
            return Err(CatalogError::Schema(format!("duplicate nf id '{id}'")));
        }
    }
    Ok(inv)
}

/// Controls that protect `surface` on `nf` and provide at least one of
/// `required`, in id order.
pub fn candidates<'c>(
    catalog: &'c Catalog,
    nf: &NetworkFunction,
    required: &BTreeSet<SecurityProperty>,
    surface: AttackSurface,
) -> Vec<&'c SecurityControl> {
    if !nf.surfaces.contains(&surface) || required.is_empty() {
        return Vec::new();
    }
    catalog
        .controls()
        .filter(|c| c.surfaces.contains(&surface) && !c.properties.is_disjoint(required))
        .collect()
}
