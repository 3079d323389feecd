//! The assurance loop: each tick monitors the simulated fleet, checks every
//! assured intent against its goals, replans NFs that fall out of
//! compliance, applies the plans and emits fulfilment reports.
//!
//! Planning is per NF. The goals of every intent governing an NF are merged
//! (the stricter as_cv range wins) and a single expected control set is kept
//! per NF, so a control shared by two intents stays enabled until neither
//! demands it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::catalog::{Catalog, NetworkFunction, NfInventory, Resource};
use crate::intent::{
    extract, validate, IllegalTransition, Intent, IntentKind, LifecycleState, MetricId,
};
use crate::metrics::{
    aggregate, attack_surface_coverage, evaluate, mean_time_to_detect, property_coverage, robustness_level,
    security_control_coverage, segmentation_level, ComplianceVerdict, ExpectedControlSet, MetricSample, Observed,
    SampleKey, Samples, SegmentationPolicy, Status, Window,
};
use crate::netsim::{Scenario, Simulator};
use crate::planner::{plan, stricter, Action, FailureReason, Goals, Plan, PlanFailure, PlanRequest};
use crate::rdf::Graph;
use crate::scalar::Scalar;
use crate::slo::{decompose, LevelMappingTable};

/// Loop cadence and damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopConfig {
    /// Compliance is evaluated every this many ticks.
    pub evaluation_interval: u64,
    /// Ticks a Degraded verdict must persist before a replan.
    pub replan_backoff: u64,
    /// Replan attempts allowed per intent within `replan_window` ticks.
    pub max_replans_per_window: usize,
    pub replan_window: u64,
    /// Tolerance below a range's lower bound that still counts as Degraded.
    pub grace: f64,
    /// Attacks starting this many ticks back feed MTTD and robustness.
    pub observation_window: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            evaluation_interval: 1,
            replan_backoff: 3,
            max_replans_per_window: 5,
            replan_window: 100,
            grace: 0.05,
            observation_window: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoopError {
    #[error("intent {0} already exists; submissions are not repeated")]
    IdempotencyConflict(String),
    #[error("unknown intent {0}")]
    UnknownIntent(String),
    #[error(transparent)]
    IllegalTransition(#[from] IllegalTransition),
}

/// Intents by id plus submission order.
#[derive(Debug, Clone, Default)]
pub struct IntentStore {
    intents: BTreeMap<String, Intent>,
    order: Vec<String>,
    version: u64,
}

impl IntentStore {
    pub fn get(&self, id: &str) -> Option<&Intent> {
        self.intents.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.intents.contains_key(id)
    }

    /// Intents in submission order (children directly after their parent).
    pub fn iter(&self) -> impl Iterator<Item = &Intent> {
        self.order.iter().map(|id| &self.intents[id])
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Intent> + 'a {
        self.iter().filter(move |i| i.parent.as_ref().is_some_and(|p| p.as_str() == id))
    }

    pub fn len(&self) -> usize {
        self.intents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intents.is_empty()
    }

    /// Bumped on every mutation.
    pub fn version(&self) -> u64 {
        self.version
    }

    fn insert(&mut self, intent: Intent) {
        let id = intent.id_str().to_string();
        self.order.push(id.clone());
        self.intents.insert(id, intent);
        self.version += 1;
    }

    fn get_mut(&mut self, id: &str) -> Option<&mut Intent> {
        self.version += 1;
        self.intents.get_mut(id)
    }
}

/// Result of one submission.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SubmitOutcome {
    /// Every intent stored, including generated children.
    pub stored: Vec<String>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub intent: String,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NfActions {
    pub nf_id: String,
    pub actions: Vec<Action>,
}

/// Per-intent record emitted at the intent's reporting interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FulfilmentReport<S: Scalar> {
    pub tick: u64,
    pub intent: String,
    pub state: LifecycleState,
    pub status: Status,
    pub verdicts: Vec<ComplianceVerdict<S>>,
    pub metrics: Vec<MetricSample<S>>,
    pub actions: Vec<NfActions>,
    pub plan_failures: Vec<PlanFailure>,
    pub replans: u64,
    pub replan_budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppliedPlan<S: Scalar> {
    pub tick: u64,
    pub plan: Plan<S>,
}

/// Everything one tick produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput<S: Scalar> {
    pub tick: u64,
    pub reports: Vec<FulfilmentReport<S>>,
    pub metrics: Vec<MetricSample<S>>,
    pub plans: Vec<AppliedPlan<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentSummary {
    pub intent: String,
    pub kind: IntentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub state: LifecycleState,
    pub final_status: Option<Status>,
    /// First tick at which the intent was compliant.
    pub time_to_compliant: Option<u64>,
    pub violation_ticks: u64,
    pub actions: u64,
    pub replans: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unresolved: Vec<String>,
}

impl IntentSummary {
    /// Ended in a state that needs no attention.
    pub fn is_satisfied(&self) -> bool {
        match self.state {
            LifecycleState::Fulfilled => true,
            LifecycleState::Active => self.final_status == Some(Status::Compliant),
            LifecycleState::Withdrawn => true,
            // A parent is satisfied through its children.
            LifecycleState::Decomposed => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub ticks: u64,
    pub intents: Vec<IntentSummary>,
    pub all_satisfied: bool,
}

#[derive(Debug, Clone, Default)]
struct Tracking {
    replan_ticks: VecDeque<u64>,
    replans: u64,
    not_compliant_since: Option<u64>,
    first_compliant: Option<u64>,
    last_status: Option<Status>,
    violation_ticks: u64,
    actions: u64,
    budget_exhausted: bool,
}

/// The loop with its knowledge: intents, expected sets and the simulator.
pub struct ControlLoop<S: Scalar> {
    config: LoopConfig,
    catalog: Catalog,
    mapping: LevelMappingTable,
    segmentation: SegmentationPolicy,
    store: IntentStore,
    sim: Simulator,
    managed: BTreeMap<String, ExpectedControlSet>,
    dirty: BTreeSet<String>,
    failures: BTreeMap<String, PlanFailure>,
    tracking: BTreeMap<String, Tracking>,
    conflicts_seen: BTreeSet<(String, String, String)>,
    pending_actions: BTreeMap<String, Vec<NfActions>>,
    _scalar: std::marker::PhantomData<S>,
}

impl<S: Scalar> ControlLoop<S> {
    pub fn new(config: LoopConfig, catalog: Catalog, mapping: LevelMappingTable, scenario: &Scenario) -> Self {
        ControlLoop {
            config,
            catalog,
            mapping,
            segmentation: scenario.segmentation.clone(),
            store: IntentStore::default(),
            sim: Simulator::new(scenario),
            managed: BTreeMap::new(),
            dirty: BTreeSet::new(),
            failures: BTreeMap::new(),
            tracking: BTreeMap::new(),
            conflicts_seen: BTreeSet::new(),
            pending_actions: BTreeMap::new(),
            _scalar: std::marker::PhantomData,
        }
    }

    pub fn store(&self) -> &IntentStore {
        &self.store
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn inventory(&self) -> &NfInventory {
        self.sim.inventory()
    }

    pub fn expected_set(&self, nf_id: &str) -> Option<&ExpectedControlSet> {
        self.managed.get(nf_id)
    }

    pub fn tick(&self) -> u64 {
        self.sim.clock().tick
    }

    /// Stores every intent in `graph`. Invalid intents are stored as
    /// Rejected; intents needing decomposition are decomposed at once and
    /// their children enter Planning. A repeated intent id aborts the whole
    /// batch before anything is stored.
    pub fn submit(&mut self, graph: &Graph) -> Result<SubmitOutcome, LoopError> {
        let extraction = extract(graph);
        for intent in extraction.intents.iter().flatten() {
            if self.store.contains(intent.id_str()) {
                return Err(LoopError::IdempotencyConflict(intent.id_str().to_string()));
            }
        }
        let tick = self.tick();
        let mut outcome = SubmitOutcome::default();
        for item in extraction.intents {
            let mut intent = match item {
                Ok(i) => i,
                Err(e) => {
                    let intent = match &e {
                        crate::intent::IntentError::Vocabulary { intent, .. } => intent.clone(),
                        _ => String::new(),
                    };
                    outcome.rejected.push(Rejection { intent, reasons: vec![e.to_string()] });
                    continue;
                }
            };
            let id = intent.id_str().to_string();
            let mut reasons: Vec<String> = validate(&intent).iter().map(ToString::to_string).collect();
            let mut children = Vec::new();
            if reasons.is_empty() && intent.needs_decomposition() {
                let mut probe = intent.clone();
                probe.state = LifecycleState::Validated;
                match decompose(&probe, &self.mapping, self.sim.inventory()) {
                    Ok(c) => children = c,
                    Err(e) => reasons.push(e.to_string()),
                }
            } else if reasons.is_empty() && self.nfs_of(&intent).is_empty() {
                reasons.push(format!("scope of intent {id} matches no inventory NF"));
            }
            if !reasons.is_empty() {
                intent.transition_in_place(LifecycleState::Rejected, tick, reasons.join("; "))?;
                outcome.rejected.push(Rejection { intent: id.clone(), reasons });
                self.store.insert(intent);
                outcome.stored.push(id);
                continue;
            }
            intent.transition_in_place(LifecycleState::Validated, tick, "all invariants hold")?;
            if children.is_empty() {
                intent.transition_in_place(LifecycleState::Planning, tick, "awaiting first plan")?;
                self.dirty.extend(self.nfs_of(&intent));
                self.store.insert(intent);
                outcome.stored.push(id);
                continue;
            }
            intent.transition_in_place(
                LifecycleState::Decomposed,
                tick,
                format!("decomposed into {} operations intents", children.len()),
            )?;
            self.store.insert(intent);
            outcome.stored.push(id);
            for mut child in children {
                let cid = child.id_str().to_string();
                if self.store.contains(&cid) {
                    return Err(LoopError::IdempotencyConflict(cid));
                }
                child.transition_in_place(LifecycleState::Validated, tick, "generated by decomposition")?;
                child.transition_in_place(LifecycleState::Planning, tick, "awaiting first plan")?;
                self.dirty.extend(self.nfs_of(&child));
                self.store.insert(child);
                outcome.stored.push(cid);
            }
        }
        Ok(outcome)
    }

    /// Withdraws an intent and its children. Their NFs are replanned on the
    /// next tick with the goals of the intents that remain.
    pub fn withdraw(&mut self, id: &str) -> Result<(), LoopError> {
        if !self.store.contains(id) {
            return Err(LoopError::UnknownIntent(id.to_string()));
        }
        let tick = self.tick();
        let mut ids: Vec<String> = vec![id.to_string()];
        ids.extend(self.store.children(id).map(|c| c.id_str().to_string()));
        for i in ids {
            let intent = self.store.get_mut(&i).expect("listed above");
            if intent.state == LifecycleState::Withdrawn {
                continue;
            }
            intent.transition_in_place(LifecycleState::Withdrawn, tick, "withdrawn by operator")?;
            let intent = intent.clone();
            self.dirty.extend(self.nfs_of(&intent));
        }
        Ok(())
    }

    /// NFs governed by an intent: inventory members of its scope.
    fn nfs_of(&self, intent: &Intent) -> Vec<String> {
        let inv = self.sim.inventory();
        intent
            .scope
            .nf_types
            .iter()
            .flat_map(|t| inv.matching(t, &intent.scope.location_area))
            .map(|nf| nf.id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Operations intents currently holding goals on `nf_id`, id order.
    fn governing(&self, nf_id: &str) -> Vec<String> {
        let Some(nf) = self.sim.inventory().get(nf_id) else { return Vec::new() };
        let mut ids: Vec<String> = self
            .store
            .iter()
            .filter(|i| i.state.is_assured() || i.state == LifecycleState::Planning)
            .filter(|i| !i.needs_decomposition())
            .filter(|i| i.scope.matches(&nf.nf_type, &nf.location_area))
            .map(|i| i.id_str().to_string())
            .collect();
        ids.sort();
        ids
    }

    fn intent_goals(&self, intent: &Intent, nf: &NetworkFunction) -> Goals {
        let mut goals = Goals::default();
        for e in &intent.expectations {
            goals.add_expectation(nf, e, &self.segmentation);
        }
        if let Some(filter) = &intent.scope.attack_surface_filter {
            for d in &mut goals.demands {
                d.surfaces.retain(|s| filter.contains(s));
            }
            goals.demands.retain(|d| !d.surfaces.is_empty());
            for d in &mut goals.detection {
                d.surfaces.retain(|s| filter.contains(s));
            }
            goals.detection.retain(|d| !d.surfaces.is_empty());
        }
        goals
    }

    /// Merges the goals of every governing intent and plans the NF. Applies
    /// the plan on success; records the failure otherwise.
    fn replan_nf(&mut self, nf_id: &str, tick: u64, out: &mut Vec<AppliedPlan<S>>) -> Result<(), PlanFailure> {
        let nf = self.sim.inventory().get(nf_id).expect("planned NFs exist").clone();
        let governing = self.governing(nf_id);
        let mut goals = Goals::default();
        let mut winner: Option<String> = None;
        let mut limits: BTreeMap<Resource, f64> = BTreeMap::new();
        let mut conflicts = Vec::new();
        for id in &governing {
            let intent = self.store.get(id).expect("governing intents exist");
            let g = self.intent_goals(intent, &nf);
            if let Some(b) = g.as_cv {
                if let (Some(cur), Some(w)) = (goals.as_cv, winner.clone()) {
                    if cur != b {
                        let new_wins = stricter(b, cur);
                        let (win, lose) = if new_wins { (id.clone(), w) } else { (w, id.clone()) };
                        conflicts.push((win.clone(), lose));
                        if new_wins {
                            winner = Some(win);
                        }
                    }
                } else {
                    winner = Some(id.clone());
                }
                goals.merge_as_cv(b);
            }
            for d in g.demands {
                if !goals.demands.contains(&d) {
                    goals.demands.push(d);
                }
            }
            for d in g.detection {
                if !goals.detection.contains(&d) {
                    goals.detection.push(d);
                }
            }
            for (r, l) in intent.resource_limits() {
                let e = limits.entry(r).or_insert(l);
                *e = e.min(l);
            }
        }
        goals.demands.sort();
        goals.detection.sort();
        for (win, lose) in conflicts {
            if self.conflicts_seen.insert((nf_id.to_string(), win.clone(), lose.clone())) {
                // as_cv ranges span every surface of the NF.
                let surface = "all";
                for id in [&win, &lose] {
                    if let Some(i) = self.store.get_mut(id) {
                        i.record_conflict(tick, nf_id, surface, &win);
                    }
                }
            }
        }

        let managed = self.managed.get(nf_id).cloned().unwrap_or_else(|| ExpectedControlSet::empty(nf_id));
        let request = PlanRequest::new(nf, goals).with_intent_limits(&limits).with_managed(managed);
        match plan::<S>(&request, &self.catalog) {
            Ok(p) => {
                self.sim.apply_plan(&p, &self.catalog).expect("plans are built against the current NF state");
                let mut expected = p.expected_set.clone();
                expected.record_versions(self.sim.inventory().get(nf_id).expect("exists"));
                self.managed.insert(nf_id.to_string(), expected);
                self.failures.remove(nf_id);
                if !p.is_noop() {
                    for id in &governing {
                        self.tracking.entry(id.clone()).or_default().actions += p.change_count() as u64;
                        self.pending_actions
                            .entry(id.clone())
                            .or_default()
                            .push(NfActions { nf_id: nf_id.to_string(), actions: p.actions.clone() });
                    }
                }
                log::debug!("tick {tick}: planned {nf_id}: {:?}", p.actions);
                out.push(AppliedPlan { tick, plan: p });
                Ok(())
            }
            Err(f) => {
                log::info!("tick {tick}: planning failed: {f}");
                self.failures.insert(nf_id.to_string(), f.clone());
                Err(f)
            }
        }
    }

    fn samples_for(&self, nf_ids: &BTreeSet<String>) -> (Samples<S>, Vec<MetricSample<S>>) {
        let tick = self.tick();
        let inv = self.sim.inventory();
        let clock = self.sim.clock();
        let window = Window::new(clock.now_ms(), (self.config.observation_window * clock.ms_per_tick).max(1));
        let attacks = self.sim.settled_attacks();
        let mut keys: BTreeSet<SampleKey> = BTreeSet::new();
        for intent in self.store.iter().filter(|i| i.state.is_assured() && !i.needs_decomposition()) {
            for nf in self.nfs_of(intent).into_iter().filter(|n| nf_ids.contains(n)) {
                for e in &intent.expectations {
                    if let Some(k) = SampleKey::for_expectation(&nf, e) {
                        keys.insert(k);
                    }
                }
            }
        }
        let mut samples = Samples::default();
        let mut export = Vec::new();
        for key in keys {
            let nf = inv.get(&key.nf_id).expect("scoped NFs exist");
            let empty = ExpectedControlSet::empty(&key.nf_id);
            let expected = self.managed.get(&key.nf_id).unwrap_or(&empty);
            let value: Observed<S> = match key.metric {
                MetricId::AsCv => match attack_surface_coverage(nf, expected) {
                    Ok(v) => Observed::Value(v),
                    Err(_) => Observed::InsufficientData,
                },
                MetricId::ScCv => Observed::Value(security_control_coverage(nf, expected)),
                MetricId::PropertyCoverage => {
                    let (surface, props) = key.qualifier.split_once(':').expect("qualified key");
                    let selector = crate::intent::SurfaceSelector::parse(surface).expect("written from a selector");
                    let required = props.split(',').filter_map(crate::catalog::SecurityProperty::parse).collect();
                    Observed::Value(property_coverage(nf, &self.catalog, selector, &required))
                }
                MetricId::SegmentationLevel => {
                    if self.segmentation.involves(&key.nf_id) {
                        let policy = self.segmentation.restricted_to(&key.nf_id);
                        match segmentation_level(inv, &self.catalog, &policy) {
                            Ok(v) => Observed::Value(v),
                            Err(_) => Observed::InsufficientData,
                        }
                    } else {
                        Observed::InsufficientData
                    }
                }
                MetricId::MttdMs => {
                    let own: Vec<_> = attacks.iter().filter(|a| a.nf_id == key.nf_id).cloned().collect();
                    mean_time_to_detect(&own, window)
                }
                MetricId::RobustnessLevel => robustness_level(&key.nf_id, &attacks, window),
            };
            if let Observed::Value(v) = value {
                export.push(MetricSample::new(tick, &key, v));
            }
            samples.insert(key, value);
        }
        (samples, export)
    }

    fn budget_left(&mut self, id: &str, tick: u64) -> bool {
        let window = self.config.replan_window;
        let max = self.config.max_replans_per_window;
        let t = self.tracking.entry(id.to_string()).or_default();
        while t.replan_ticks.front().is_some_and(|f| *f + window <= tick) {
            t.replan_ticks.pop_front();
        }
        t.replan_ticks.len() < max
    }

    fn note_replan(&mut self, id: &str, tick: u64) {
        let t = self.tracking.entry(id.to_string()).or_default();
        t.replan_ticks.push_back(tick);
        t.replans += 1;
    }

    fn move_to(&mut self, id: &str, to: LifecycleState, tick: u64, reason: &str) {
        let intent = self.store.get_mut(id).expect("tracked intents exist");
        if intent.state != to {
            intent
                .transition_in_place(to, tick, reason)
                .unwrap_or_else(|e| panic!("loop attempted {e} on {id}"));
        }
    }

    /// One pass of the loop; see the module documentation for the order.
    pub fn run_tick(&mut self) -> TickOutput<S> {
        self.sim.step(&self.catalog);
        let tick = self.tick();
        let mut plans = Vec::new();
        self.pending_actions.clear();

        // Initial plans and replans after withdrawals.
        let dirty = std::mem::take(&mut self.dirty);
        let mut failed: BTreeMap<String, PlanFailure> = BTreeMap::new();
        for nf_id in &dirty {
            if let Err(f) = self.replan_nf(nf_id, tick, &mut plans) {
                failed.insert(nf_id.clone(), f);
            }
        }
        let planning: Vec<String> = self
            .store
            .iter()
            .filter(|i| i.state == LifecycleState::Planning)
            .map(|i| i.id_str().to_string())
            .collect();
        for id in planning {
            let intent = self.store.get(&id).expect("listed").clone();
            let fails: Vec<&PlanFailure> = self.nfs_of(&intent).iter().filter_map(|n| failed.get(n)).collect();
            if fails.iter().any(|f| f.reason == FailureReason::Infeasible) {
                let detail: Vec<String> = fails.iter().map(|f| f.to_string()).collect();
                self.move_to(&id, LifecycleState::Rejected, tick, &format!("no plan exists: {}", detail.join("; ")));
            } else if !fails.is_empty() {
                let detail: Vec<String> = fails.iter().map(|f| f.to_string()).collect();
                self.move_to(&id, LifecycleState::Active, tick, "enforced with unresolved constraint conflict");
                self.move_to(&id, LifecycleState::Degraded, tick, &detail.join("; "));
                self.tracking.entry(id.clone()).or_default().not_compliant_since = Some(tick);
            } else {
                self.move_to(&id, LifecycleState::Active, tick, "initial plan applied");
            }
        }

        if !tick.is_multiple_of(self.config.evaluation_interval.max(1)) {
            return TickOutput { tick, reports: Vec::new(), metrics: Vec::new(), plans };
        }

        // Monitor and analyse.
        let assured: Vec<String> = self
            .store
            .iter()
            .filter(|i| i.state.is_assured() && !i.needs_decomposition())
            .map(|i| i.id_str().to_string())
            .collect();
        let all_nfs: BTreeSet<String> =
            assured.iter().flat_map(|id| self.nfs_of(self.store.get(id).expect("listed"))).collect();
        let (samples, metrics) = self.samples_for(&all_nfs);
        let grace = S::from_f64(self.config.grace);

        struct Analysis<S: Scalar> {
            id: String,
            nfs: Vec<String>,
            verdicts: Vec<ComplianceVerdict<S>>,
            status: Status,
        }
        let mut analyses = Vec::new();
        for id in &assured {
            let intent = self.store.get(id).expect("listed");
            let nfs = self.nfs_of(intent);
            let verdicts = evaluate(intent, &nfs, &samples, grace);
            let mut status = aggregate(&verdicts);
            if status == Status::Compliant && nfs.iter().any(|n| self.failures.contains_key(n)) {
                status = Status::Degraded;
            }
            analyses.push(Analysis { id: id.clone(), nfs, verdicts, status });
        }

        // Plan and execute.
        let mut to_replan: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for a in &analyses {
            let t = self.tracking.entry(a.id.clone()).or_default();
            if a.status == Status::Compliant {
                t.not_compliant_since = None;
                continue;
            }
            let since = *t.not_compliant_since.get_or_insert(tick);
            let due = match a.status {
                Status::NonCompliant => true,
                _ => tick >= since + self.config.replan_backoff,
            };
            if !due {
                continue;
            }
            if !self.budget_left(&a.id, tick) {
                self.tracking.get_mut(&a.id).expect("created above").budget_exhausted = true;
                continue;
            }
            let intent = self.store.get(&a.id).expect("listed").clone();
            let bad: Vec<String> = a
                .nfs
                .iter()
                .filter(|n| {
                    self.failures.contains_key(*n)
                        || aggregate(&evaluate(&intent, std::slice::from_ref(*n), &samples, grace)) != Status::Compliant
                })
                .cloned()
                .collect();
            if bad.is_empty() {
                continue;
            }
            self.note_replan(&a.id, tick);
            let t = self.tracking.get_mut(&a.id).expect("created above");
            t.budget_exhausted = false;
            if a.status == Status::Degraded {
                // Space further Degraded-path replans by the backoff.
                t.not_compliant_since = Some(tick);
            }
            for n in bad {
                to_replan.entry(n).or_default().push(a.id.clone());
            }
        }
        for nf_id in to_replan.keys() {
            let _ = self.replan_nf(nf_id, tick, &mut plans);
        }

        // Lifecycle and reports.
        let mut reports = Vec::new();
        for a in analyses {
            let state = self.store.get(&a.id).expect("listed").state;
            let failures: Vec<PlanFailure> = a.nfs.iter().filter_map(|n| self.failures.get(n).cloned()).collect();
            match (state, a.status) {
                (LifecycleState::Active, Status::NonCompliant | Status::Degraded) => {
                    let why = format!("compliance {}", a.status.as_str());
                    self.move_to(&a.id, LifecycleState::Degraded, tick, &why);
                }
                (LifecycleState::Degraded, Status::Compliant) => {
                    self.move_to(&a.id, LifecycleState::Active, tick, "compliance restored");
                }
                _ => {}
            }
            let has_delivery = self.store.get(&a.id).expect("listed").has_delivery();
            let t = self.tracking.entry(a.id.clone()).or_default();
            if a.status == Status::Compliant {
                t.first_compliant.get_or_insert(tick);
            } else {
                t.violation_ticks += 1;
            }
            t.last_status = Some(a.status);
            let (replans, exhausted) = (t.replans, t.budget_exhausted);
            if a.status == Status::Compliant
                && has_delivery
                && self.store.get(&a.id).expect("listed").state == LifecycleState::Active
            {
                self.move_to(&a.id, LifecycleState::Fulfilled, tick, "delivery expectation met");
            }

            let intent = self.store.get(&a.id).expect("listed");
            if !tick.is_multiple_of(u64::from(intent.reporting_interval().max(1))) {
                continue;
            }
            let nf_set: BTreeSet<&String> = a.nfs.iter().collect();
            reports.push(FulfilmentReport {
                tick,
                intent: a.id.clone(),
                state: intent.state,
                status: a.status,
                verdicts: a.verdicts,
                metrics: metrics.iter().filter(|m| nf_set.contains(&m.nf_id)).cloned().collect(),
                actions: self.pending_actions.get(&a.id).cloned().unwrap_or_default(),
                plan_failures: failures,
                replans,
                replan_budget_exhausted: exhausted,
            });
        }
        TickOutput { tick, reports, metrics, plans }
    }

    pub fn summary(&self) -> RunSummary {
        let intents: Vec<IntentSummary> = self
            .store
            .iter()
            .map(|i| {
                let id = i.id_str().to_string();
                let t = self.tracking.get(&id).cloned().unwrap_or_default();
                let mut unresolved: Vec<String> =
                    self.nfs_of(i).iter().filter_map(|n| self.failures.get(n)).map(|f| f.to_string()).collect();
                if i.state == LifecycleState::Rejected {
                    unresolved.extend(i.audit.last().map(|a| a.reason.clone()));
                }
                if matches!(i.state, LifecycleState::Decomposed | LifecycleState::Withdrawn) {
                    unresolved.clear();
                }
                IntentSummary {
                    intent: id,
                    kind: i.kind,
                    parent: i.parent.as_ref().map(|p| p.as_str().to_string()),
                    state: i.state,
                    final_status: t.last_status,
                    time_to_compliant: t.first_compliant,
                    violation_ticks: t.violation_ticks,
                    actions: t.actions,
                    replans: t.replans,
                    unresolved,
                }
            })
            .collect();
        let all_satisfied = !intents.is_empty() && intents.iter().all(IntentSummary::is_satisfied);
        RunSummary { ticks: self.tick(), intents, all_satisfied }
    }
}
