//! Discrete-tick simulation of an NF fleet: configuration drift, attacks
//! and their detection.
//!
//! A scenario is materialized into a fixed event schedule when loaded, so
//! a (scenario file, seed) pair determines every later state. Attack
//! outcomes depend only on the state at the tick the attack starts.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{load_inventory, AttackSurface, Catalog, CatalogError, NfInventory, SecurityProperty};
use crate::metrics::{AttackRecord, SegmentationPolicy};
use crate::planner::{apply_actions, Action, ApplyError, Plan};
use crate::scalar::Scalar;

pub const DEFAULT_MS_PER_TICK: u64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("scenario schema error: {0}")]
    Schema(String),
    #[error("inventory: {0}")]
    Inventory(#[from] CatalogError),
    #[error("event at tick {tick} references unknown NF '{nf}'")]
    UnknownNf { tick: u64, nf: String },
    #[error("event at tick {tick} references unknown control '{control}'")]
    UnknownControl { tick: u64, control: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    Disable,
    Misconfigure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimEventKind {
    Drift { nf_id: String, control: String, mode: DriftMode },
    AttackStart { attack_id: String, nf_id: String, surface: AttackSurface, required: BTreeSet<SecurityProperty> },
}

/// Scheduled event. Events sharing a tick apply in `order` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimEvent {
    pub tick: u64,
    pub order: u64,
    #[serde(flatten)]
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimClock {
    pub tick: u64,
    pub ms_per_tick: u64,
}

impl SimClock {
    pub fn now_ms(&self) -> u64 {
        self.tick * self.ms_per_tick
    }

    /// Whole ticks covering `ms`, rounded up.
    pub fn ticks_for(&self, ms: u64) -> u64 {
        ms.div_ceil(self.ms_per_tick)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackOutcome {
    pub attack_id: String,
    pub nf_id: String,
    pub surface: AttackSurface,
    pub start_tick: u64,
    pub succeeded: bool,
    pub detected_at: Option<u64>,
    pub resolved_at: Option<u64>,
    /// Detecting control, if any covered the surface at the start tick.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub ms_per_tick: u64,
    pub seed: u64,
    pub inventory: NfInventory,
    pub segmentation: SegmentationPolicy,
    pub events: Vec<SimEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    inventory: String,
    #[serde(default = "default_ms_per_tick")]
    ms_per_tick: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    segmentation: Vec<(String, String)>,
    #[serde(default)]
    events: Vec<EventDoc>,
    #[serde(default)]
    generator: GeneratorDoc,
}

fn default_ms_per_tick() -> u64 {
    DEFAULT_MS_PER_TICK
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDoc {
    tick: u64,
    #[serde(default)]
    drift: Option<DriftDoc>,
    #[serde(default)]
    attack: Option<AttackDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftDoc {
    nf: String,
    control: String,
    mode: DriftMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackDoc {
    id: String,
    nf: String,
    surface: AttackSurface,
    requires: BTreeSet<SecurityProperty>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GeneratorDoc {
    #[serde(default)]
    attacks: Option<AttackGenDoc>,
    #[serde(default)]
    drift: Option<DriftGenDoc>,
}

/// Random attacks on the listed NFs (all NFs when omitted), at ticks drawn
/// uniformly from the inclusive range.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackGenDoc {
    count: u32,
    ticks: (u64, u64),
    #[serde(default)]
    nfs: Vec<String>,
    surface: AttackSurface,
    requires: BTreeSet<SecurityProperty>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftGenDoc {
    count: u32,
    ticks: (u64, u64),
    nfs: Vec<String>,
    controls: Vec<String>,
    #[serde(default)]
    mode: Option<DriftMode>,
}

/// Loads `<dir>/scenario.json` (or the file itself when `path` is a file).
/// `seed` overrides the seed stored in the scenario.
pub fn load_scenario(path: &Path, catalog: &Catalog, seed: Option<u64>) -> Result<Scenario, ScenarioError> {
    let file = if path.is_dir() { path.join("scenario.json") } else { path.to_path_buf() };
    let bytes = std::fs::read(&file).map_err(|source| ScenarioError::Io { path: file.clone(), source })?;
    let base = file.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&bytes, base, catalog, seed)
}

/// Parses a scenario document; the inventory path is resolved against `base_dir`.
pub fn parse_scenario(
    bytes: &[u8],
    base_dir: &Path,
    catalog: &Catalog,
    seed: Option<u64>,
) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_slice(bytes).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    if doc.ms_per_tick == 0 {
        return Err(ScenarioError::Schema("ms_per_tick must be at least 1".into()));
    }
    let inv_path = base_dir.join(&doc.inventory);
    let inv_bytes = std::fs::read(&inv_path).map_err(|source| ScenarioError::Io { path: inv_path, source })?;
    let inventory = load_inventory(&inv_bytes, catalog)?;
    let seed = seed.unwrap_or(doc.seed);
    let events = materialize(&doc, &inventory, catalog, seed)?;
    for (a, b) in &doc.segmentation {
        for nf in [a, b] {
            if inventory.get(nf).is_none() {
                return Err(ScenarioError::UnknownNf { tick: 0, nf: nf.clone() });
            }
        }
    }
    Ok(Scenario {
        name: doc.name,
        ms_per_tick: doc.ms_per_tick,
        seed,
        inventory,
        segmentation: SegmentationPolicy { pairs: doc.segmentation },
        events,
    })
}

fn materialize(
    doc: &ScenarioDoc,
    inventory: &NfInventory,
    catalog: &Catalog,
    seed: u64,
) -> Result<Vec<SimEvent>, ScenarioError> {
    let mut kinds: Vec<(u64, SimEventKind)> = Vec::new();
    for e in &doc.events {
        match (&e.drift, &e.attack) {
            (Some(d), None) => kinds.push((
                e.tick,
                SimEventKind::Drift { nf_id: d.nf.clone(), control: d.control.clone(), mode: d.mode },
            )),
            (None, Some(a)) => kinds.push((
                e.tick,
                SimEventKind::AttackStart {
                    attack_id: a.id.clone(),
                    nf_id: a.nf.clone(),
                    surface: a.surface,
                    required: a.requires.clone(),
                },
            )),
            _ => {
                return Err(ScenarioError::Schema(format!(
                    "event at tick {} must have exactly one of 'drift' or 'attack'",
                    e.tick
                )))
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Some(g) = &doc.generator.attacks {
        check_range(g.ticks)?;
        let pool: Vec<String> =
            if g.nfs.is_empty() { inventory.iter().map(|nf| nf.id.clone()).collect() } else { g.nfs.clone() };
        if pool.is_empty() {
            return Err(ScenarioError::Schema("attack generator has no NFs to target".into()));
        }
        for n in 0..g.count {
            let nf_id = pool.choose(&mut rng).expect("non-empty pool").clone();
            kinds.push((
                rng.gen_range(g.ticks.0..=g.ticks.1),
                SimEventKind::AttackStart {
                    attack_id: format!("gen-{n:03}"),
                    nf_id,
                    surface: g.surface,
                    required: g.requires.clone(),
                },
            ));
        }
    }
    if let Some(g) = &doc.generator.drift {
        check_range(g.ticks)?;
        if g.nfs.is_empty() || g.controls.is_empty() {
            return Err(ScenarioError::Schema("drift generator needs non-empty 'nfs' and 'controls'".into()));
        }
        for _ in 0..g.count {
            let tick = rng.gen_range(g.ticks.0..=g.ticks.1);
            let nf_id = g.nfs.choose(&mut rng).expect("non-empty").clone();
            let control = g.controls.choose(&mut rng).expect("non-empty").clone();
            let mode = g.mode.unwrap_or_else(|| {
                if rng.gen_bool(0.5) {
                    DriftMode::Disable
                } else {
                    DriftMode::Misconfigure
                }
            });
            kinds.push((tick, SimEventKind::Drift { nf_id, control, mode }));
        }
    }

    let mut events = Vec::with_capacity(kinds.len());
    for (tick, kind) in kinds {
        check_event(tick, &kind, inventory, catalog)?;
        events.push(SimEvent { tick, order: rng.gen(), kind });
    }
    events.sort_by_key(|e| (e.tick, e.order));
    for (i, e) in events.iter_mut().enumerate() {
        e.order = i as u64;
    }
    let mut ids = BTreeSet::new();
    for e in &events {
        if let SimEventKind::AttackStart { attack_id, .. } = &e.kind {
            if !ids.insert(attack_id.clone()) {
                return Err(ScenarioError::Schema(format!("duplicate attack id '{attack_id}'")));
            }
        }
    }
    Ok(events)
}

fn check_range((lo, hi): (u64, u64)) -> Result<(), ScenarioError> {
    if lo == 0 || lo > hi {
        return Err(ScenarioError::Schema(format!("bad tick range [{lo}, {hi}]; ticks start at 1")));
    }
    Ok(())
}

fn check_event(tick: u64, kind: &SimEventKind, inventory: &NfInventory, catalog: &Catalog) -> Result<(), ScenarioError> {
    if tick == 0 {
        return Err(ScenarioError::Schema("events start at tick 1".into()));
    }
    match kind {
        SimEventKind::Drift { nf_id, control, .. } => {
            inventory.get(nf_id).ok_or_else(|| ScenarioError::UnknownNf { tick, nf: nf_id.clone() })?;
            if !catalog.contains(control) {
                return Err(ScenarioError::UnknownControl { tick, control: control.clone() });
            }
        }
        SimEventKind::AttackStart { nf_id, surface, required, .. } => {
            let nf = inventory.get(nf_id).ok_or_else(|| ScenarioError::UnknownNf { tick, nf: nf_id.clone() })?;
            if !nf.surfaces.contains(surface) {
                return Err(ScenarioError::Schema(format!(
                    "attack at tick {tick} targets surface {surface} absent from '{nf_id}'"
                )));
            }
            if required.is_empty() {
                return Err(ScenarioError::Schema(format!("attack at tick {tick} requires no defense properties")));
            }
        }
    }
    Ok(())
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub tick: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Drift { nf_id: String, control: String, mode: DriftMode, effective: bool },
    AttackStart { attack_id: String, nf_id: String, surface: AttackSurface, succeeded: bool },
    Detection { attack_id: String, nf_id: String, control: String },
    Resolution { attack_id: String, nf_id: String },
    Action { nf_id: String, action: Action },
}

/// What happened during one [`Simulator::step`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub tick: u64,
    pub started: Vec<AttackOutcome>,
    pub detected: Vec<String>,
    pub resolved: Vec<String>,
    pub drifted: Vec<(String, String)>,
}

/// Owns the simulated fleet. All mutation goes through [`Simulator::step`]
/// and [`Simulator::apply_plan`].
#[derive(Debug, Clone)]
pub struct Simulator {
    clock: SimClock,
    inventory: NfInventory,
    events: Vec<SimEvent>,
    next_event: usize,
    attacks: Vec<AttackOutcome>,
    log: Vec<LogEntry>,
}

impl Simulator {
    pub fn new(scenario: &Scenario) -> Self {
        Simulator {
            clock: SimClock { tick: 0, ms_per_tick: scenario.ms_per_tick },
            inventory: scenario.inventory.clone(),
            events: scenario.events.clone(),
            next_event: 0,
            attacks: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn inventory(&self) -> &NfInventory {
        &self.inventory
    }

    pub fn outcomes(&self) -> &[AttackOutcome] {
        &self.attacks
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Advances one tick and applies everything scheduled for it: events in
    /// order, then detections and resolutions that fall due.
    pub fn step(&mut self, catalog: &Catalog) -> StepReport {
        self.clock.tick += 1;
        let tick = self.clock.tick;
        let mut report = StepReport { tick, ..StepReport::default() };

        while let Some(e) = self.events.get(self.next_event).filter(|e| e.tick <= tick) {
            let e = e.clone();
            self.next_event += 1;
            match e.kind {
                SimEventKind::Drift { nf_id, control, mode } => {
                    let effective = self.drift(&nf_id, &control, mode);
                    if effective {
                        report.drifted.push((nf_id.clone(), control.clone()));
                    }
                    self.log.push(LogEntry { tick, event: LogEvent::Drift { nf_id, control, mode, effective } });
                }
                SimEventKind::AttackStart { attack_id, nf_id, surface, required } => {
                    let outcome = self.start_attack(catalog, tick, attack_id, nf_id, surface, &required);
                    self.log.push(LogEntry {
                        tick,
                        event: LogEvent::AttackStart {
                            attack_id: outcome.attack_id.clone(),
                            nf_id: outcome.nf_id.clone(),
                            surface,
                            succeeded: outcome.succeeded,
                        },
                    });
                    report.started.push(outcome.clone());
                    self.attacks.push(outcome);
                }
            }
        }

        for a in &mut self.attacks {
            if a.detected_at == Some(tick) {
                report.detected.push(a.attack_id.clone());
                self.log.push(LogEntry {
                    tick,
                    event: LogEvent::Detection {
                        attack_id: a.attack_id.clone(),
                        nf_id: a.nf_id.clone(),
                        control: a.detector.clone().unwrap_or_default(),
                    },
                });
            }
            if a.resolved_at == Some(tick) {
                report.resolved.push(a.attack_id.clone());
                self.log.push(LogEntry {
                    tick,
                    event: LogEvent::Resolution { attack_id: a.attack_id.clone(), nf_id: a.nf_id.clone() },
                });
            }
        }
        report
    }

    fn drift(&mut self, nf_id: &str, control: &str, mode: DriftMode) -> bool {
        let Some(st) = self.inventory.get_mut(nf_id).and_then(|nf| nf.installed.get_mut(control)) else {
            return false;
        };
        match mode {
            DriftMode::Disable if st.enabled => {
                st.enabled = false;
                true
            }
            DriftMode::Disable => false,
            DriftMode::Misconfigure => {
                st.version += 1;
                true
            }
        }
    }

    fn start_attack(
        &self,
        catalog: &Catalog,
        tick: u64,
        attack_id: String,
        nf_id: String,
        surface: AttackSurface,
        required: &BTreeSet<SecurityProperty>,
    ) -> AttackOutcome {
        let nf = self.inventory.get(&nf_id).expect("checked at load");
        let provided = nf.provided_properties(catalog, surface);
        let succeeded = !required.is_subset(&provided);
        // Fastest enabled detector on the surface; ties go to the smaller id.
        let detector = nf
            .enabled_controls()
            .into_iter()
            .filter_map(|id| catalog.get(&id))
            .filter(|c| c.surfaces.contains(&surface))
            .filter_map(|c| c.detection_latency_ms.map(|l| (l, c.id.clone())))
            .min();
        let detected_at = detector.as_ref().map(|(l, _)| tick + self.clock.ticks_for(*l));
        AttackOutcome {
            attack_id,
            nf_id,
            surface,
            start_tick: tick,
            succeeded,
            detected_at,
            resolved_at: detected_at.map(|d| d + 1),
            detector: detector.map(|(_, id)| id),
        }
    }

    /// Attacks whose detection outcome is known by now, in ms for metrics.
    /// Attacks still waiting for a scheduled detection are left out so that
    /// they are not charged as undetected.
    pub fn settled_attacks(&self) -> Vec<AttackRecord> {
        let now = self.clock.tick;
        self.attacks
            .iter()
            .filter(|a| a.detected_at.is_none_or(|d| d <= now))
            .map(|a| AttackRecord {
                attack_id: a.attack_id.clone(),
                nf_id: a.nf_id.clone(),
                surface: a.surface,
                start_ms: a.start_tick * self.clock.ms_per_tick,
                detected_ms: a.detected_at.map(|d| d * self.clock.ms_per_tick),
                succeeded: a.succeeded,
            })
            .collect()
    }

    /// Applies a plan atomically and logs its actions.
    pub fn apply_plan<S: Scalar>(&mut self, plan: &Plan<S>, catalog: &Catalog) -> Result<(), ApplyError> {
        apply_plan(&mut self.inventory, plan, catalog)?;
        for a in plan.actions.iter().filter(|a| **a != Action::NoOp) {
            self.log.push(LogEntry {
                tick: self.clock.tick,
                event: LogEvent::Action { nf_id: plan.nf_id.clone(), action: a.clone() },
            });
        }
        Ok(())
    }

    /// Writes the event log as newline-delimited JSON.
    pub fn write_log<W: Write>(&self, mut out: W) -> io::Result<()> {
        for entry in &self.log {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Applies a plan's actions in order. Either all apply or the inventory is
/// left untouched.
pub fn apply_plan<S: Scalar>(inventory: &mut NfInventory, plan: &Plan<S>, catalog: &Catalog) -> Result<(), ApplyError> {
    let nf = inventory.get(&plan.nf_id).ok_or_else(|| ApplyError::UnknownNf(plan.nf_id.clone()))?;
    let mut copy = nf.clone();
    apply_actions(&mut copy, &plan.actions, catalog)?;
    *inventory.get_mut(&plan.nf_id).expect("looked up above") = copy;
    Ok(())
}
