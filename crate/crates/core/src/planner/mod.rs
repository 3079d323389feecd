//! Selection of security controls that meet an NF's goals at minimal cost.
//!
//! Plans are ranked by the key `(weighted cost, number of controls, number
//! of changes, sorted control ids)`. [`plan`] runs a branch and bound over
//! the relevant controls; [`brute_force_plan`] enumerates every subset of
//! the applicable controls and is used as a reference in tests.

mod goals;
mod oracle;
mod search;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::catalog::{Catalog, NetworkFunction, Resource};
use crate::metrics::{attack_surface_coverage, property_coverage, security_control_coverage, ExpectedControlSet};
use crate::intent::SurfaceSelector;
use crate::scalar::{serialize_fixed4, Scalar};

pub use goals::{limits_for, stricter, AsCvBounds, CostWeights, DetectionDemand, Goals, PropertyDemand};
pub use oracle::brute_force_plan;
pub use search::plan;

/// Exact search is used up to this many candidate controls.
pub const EXACT_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub nf: NetworkFunction,
    pub goals: Goals,
    pub limits: BTreeMap<Resource, f64>,
    /// Controls placed by earlier plans; only these may be disabled.
    pub managed: ExpectedControlSet,
    pub weights: CostWeights,
}

impl PlanRequest {
    /// Request limited by the NF budget only, with nothing managed yet.
    pub fn new(nf: NetworkFunction, goals: Goals) -> Self {
        let limits = limits_for(&nf, &BTreeMap::new());
        let managed = ExpectedControlSet::empty(nf.id.clone());
        PlanRequest { nf, goals, limits, managed, weights: CostWeights::default() }
    }

    pub fn with_intent_limits(mut self, intent_limits: &BTreeMap<Resource, f64>) -> Self {
        self.limits = limits_for(&self.nf, intent_limits);
        self
    }

    pub fn with_managed(mut self, managed: ExpectedControlSet) -> Self {
        self.managed = managed;
        self
    }

    /// Enabled controls a plan cannot turn off: everything not managed,
    /// plus managed controls that an unmanaged enabled control depends on.
    pub fn fixed_controls(&self, catalog: &Catalog) -> BTreeSet<String> {
        let managed = self.managed.ids();
        let enabled = self.nf.enabled_controls();
        let mut fixed: BTreeSet<String> = enabled.iter().filter(|c| !managed.contains(*c)).cloned().collect();
        let mut frontier: Vec<String> = fixed.iter().cloned().collect();
        while let Some(id) = frontier.pop() {
            for dep in catalog.dependency_closure(&id) {
                if enabled.contains(&dep) && fixed.insert(dep.clone()) {
                    frontier.push(dep);
                }
            }
        }
        fixed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "op", content = "control", rename_all = "snake_case")]
pub enum Action {
    Enable(String),
    Disable(String),
    /// Re-applies the expected configuration, bumping the version.
    Configure(String),
    NoOp,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Enable(c) => write!(f, "enable {c}"),
            Action::Disable(c) => write!(f, "disable {c}"),
            Action::Configure(c) => write!(f, "configure {c}"),
            Action::NoOp => f.write_str("noop"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceTotals<S: Scalar> {
    #[serde(serialize_with = "serialize_fixed4")]
    pub cpu_pct: S,
    #[serde(serialize_with = "serialize_fixed4")]
    pub latency_ms_added: S,
    #[serde(serialize_with = "serialize_fixed4")]
    pub bandwidth_overhead_pct: S,
}

impl<S: Scalar> ResourceTotals<S> {
    pub fn zero() -> Self {
        ResourceTotals { cpu_pct: S::zero(), latency_ms_added: S::zero(), bandwidth_overhead_pct: S::zero() }
    }

    pub fn get(&self, r: Resource) -> S {
        match r {
            Resource::CpuPct => self.cpu_pct,
            Resource::LatencyMsAdded => self.latency_ms_added,
            Resource::BandwidthOverheadPct => self.bandwidth_overhead_pct,
        }
    }

    fn add_cost(&mut self, cost: &crate::catalog::Cost) {
        self.cpu_pct = self.cpu_pct + S::from_f64(cost.cpu_pct);
        self.latency_ms_added = self.latency_ms_added + S::from_f64(cost.latency_ms_added);
        self.bandwidth_overhead_pct = self.bandwidth_overhead_pct + S::from_f64(cost.bandwidth_overhead_pct);
    }

    pub fn weighted(&self, w: &CostWeights) -> S {
        Resource::ALL.into_iter().fold(S::zero(), |acc, r| acc + S::from_f64(w.get(r)) * self.get(r))
    }

    /// Resources whose total exceeds its limit.
    pub fn exceeded(&self, limits: &BTreeMap<Resource, f64>) -> Vec<Resource> {
        limits.iter().filter(|(r, l)| self.get(**r) > S::from_f64(**l)).map(|(r, _)| *r).collect()
    }
}

/// Metric values and resource use after applying a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection<S: Scalar> {
    #[serde(serialize_with = "serialize_fixed4")]
    pub as_cv: S,
    #[serde(serialize_with = "serialize_fixed4")]
    pub sc_cv: S,
    pub cost: ResourceTotals<S>,
    #[serde(serialize_with = "serialize_fixed4")]
    pub weighted_cost: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan<S: Scalar> {
    pub nf_id: String,
    pub actions: Vec<Action>,
    pub projected: Projection<S>,
    #[serde(skip)]
    pub expected_set: ExpectedControlSet,
    pub approximate: bool,
}

impl<S: Scalar> Plan<S> {
    pub fn controls(&self) -> BTreeSet<String> {
        self.expected_set.ids()
    }

    pub fn is_noop(&self) -> bool {
        self.actions.iter().all(|a| *a == Action::NoOp)
    }

    pub fn change_count(&self) -> usize {
        self.actions.iter().filter(|a| **a != Action::NoOp).count()
    }

    /// Ranking key; smaller is better.
    pub fn cmp_key(&self, other: &Plan<S>) -> Ordering {
        compare_keys(
            (self.projected.weighted_cost, self.controls().len(), self.change_count(), self.controls()),
            (other.projected.weighted_cost, other.controls().len(), other.change_count(), other.controls()),
        )
    }
}

pub(crate) fn compare_keys<S: Scalar>(
    a: (S, usize, usize, BTreeSet<String>),
    b: (S, usize, usize, BTreeSet<String>),
) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
        .then_with(|| a.3.iter().cmp(b.3.iter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// No set of candidate controls meets the goals at all.
    Infeasible,
    /// Goals are reachable, but not within the resource limits.
    ConstraintConflict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanFailure {
    pub nf_id: String,
    pub reason: FailureReason,
    pub unmet_goals: Vec<String>,
    pub binding_constraints: Vec<Resource>,
}

impl fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reason = match self.reason {
            FailureReason::Infeasible => "infeasible",
            FailureReason::ConstraintConflict => "constraint conflict",
        };
        write!(f, "{}: {reason}", self.nf_id)?;
        if !self.unmet_goals.is_empty() {
            write!(f, "; unmet: {}", self.unmet_goals.join(", "))?;
        }
        if !self.binding_constraints.is_empty() {
            let names: Vec<&str> = self.binding_constraints.iter().map(|r| r.as_str()).collect();
            write!(f, "; binding: {}", names.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("{candidates} candidate controls exceed the exhaustive search guard of {guard}")]
    TooLarge { candidates: usize, guard: usize },
    #[error("control '{control}' needs '{dependency}', which cannot be enabled alongside it")]
    DependencyUnsatisfiable { control: String, dependency: String },
    #[error("unknown control '{0}'")]
    UnknownControl(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("control '{control}' cannot be installed on '{nf}': no shared attack surface")]
    NotInstallable { nf: String, control: String },
    #[error("unknown control '{0}'")]
    UnknownControl(String),
    #[error("control '{control}' is not installed on '{nf}'")]
    NotInstalled { nf: String, control: String },
    #[error("unknown network function '{0}'")]
    UnknownNf(String),
}

/// Orders the changes that take `current` to `target`: enables in
/// dependency order (missing dependencies are added), then reconfigurations
/// of drifted controls, then disables of managed controls no longer
/// wanted, dependents first. Unmanaged controls are never disabled.
pub fn diff_to_actions(
    current: &NetworkFunction,
    target: &BTreeSet<String>,
    managed: &ExpectedControlSet,
    catalog: &Catalog,
    limits: Option<&BTreeMap<Resource, f64>>,
) -> Result<Vec<Action>, PlanError> {
    let mut wanted = BTreeSet::new();
    for id in target {
        let c = catalog.get(id).ok_or_else(|| PlanError::UnknownControl(id.clone()))?;
        if !c.applies_to(current) {
            return Err(PlanError::DependencyUnsatisfiable { control: id.clone(), dependency: id.clone() });
        }
        wanted.insert(id.clone());
        for dep in catalog.dependency_closure(id) {
            let d = catalog.get(&dep).ok_or_else(|| PlanError::UnknownControl(dep.clone()))?;
            if !d.applies_to(current) {
                return Err(PlanError::DependencyUnsatisfiable { control: id.clone(), dependency: dep });
            }
            wanted.insert(dep);
        }
    }

    let managed_ids = managed.ids();
    let enabled = current.enabled_controls();
    let removable: BTreeSet<String> = enabled
        .iter()
        .filter(|c| managed_ids.contains(*c) && !wanted.contains(*c))
        .cloned()
        .collect();
    let keep_for_others: BTreeSet<String> = enabled
        .iter()
        .filter(|c| !removable.contains(*c))
        .flat_map(|c| catalog.dependency_closure(c))
        .collect();
    let to_disable: BTreeSet<String> = removable.difference(&keep_for_others).cloned().collect();

    if let Some(limits) = limits {
        // Only dependencies added here can break limits the caller already checked.
        let added: Vec<&String> = wanted.difference(target).filter(|d| !enabled.contains(*d)).collect();
        if !added.is_empty() {
            let mut totals = ResourceTotals::<f64>::zero();
            for id in enabled.iter().filter(|c| !to_disable.contains(*c)).chain(wanted.iter()).collect::<BTreeSet<_>>() {
                if let Some(c) = catalog.get(id) {
                    totals.add_cost(&c.cost);
                }
            }
            if !totals.exceeded(limits).is_empty() {
                let dep = added[0].clone();
                let control = target
                    .iter()
                    .find(|t| catalog.dependency_closure(t).contains(&dep))
                    .cloned()
                    .unwrap_or_else(|| dep.clone());
                return Err(PlanError::DependencyUnsatisfiable { control, dependency: dep });
            }
        }
    }

    let to_enable: BTreeSet<String> = wanted.iter().filter(|c| !enabled.contains(*c)).cloned().collect();
    let mut actions: Vec<Action> = topo_order(&to_enable, catalog).into_iter().map(Action::Enable).collect();
    for id in &wanted {
        if let (Some(st), Some(v)) = (current.installed.get(id), managed.expected_versions.get(id)) {
            if st.enabled && st.version != *v {
                actions.push(Action::Configure(id.clone()));
            }
        }
    }
    let mut disables = topo_order(&to_disable, catalog);
    disables.reverse();
    actions.extend(disables.into_iter().map(Action::Disable));
    Ok(actions)
}

/// Dependencies before dependents, ties broken by id.
fn topo_order(ids: &BTreeSet<String>, catalog: &Catalog) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(ids.len());
    let mut placed = BTreeSet::new();
    while out.len() < ids.len() {
        let next = ids
            .iter()
            .find(|id| {
                !placed.contains(*id)
                    && catalog.get(id).is_none_or(|c| c.dependencies.iter().all(|d| !ids.contains(d) || placed.contains(d)))
            })
            .cloned()
            .expect("catalog dependencies are acyclic");
        placed.insert(next.clone());
        out.push(next);
    }
    out
}

/// Applies actions to one NF in order. On error the NF may be partially
/// modified; callers wanting atomicity apply to a copy.
pub fn apply_actions(nf: &mut NetworkFunction, actions: &[Action], catalog: &Catalog) -> Result<(), ApplyError> {
    for a in actions {
        match a {
            Action::Enable(id) => {
                let c = catalog.get(id).ok_or_else(|| ApplyError::UnknownControl(id.clone()))?;
                if !c.applies_to(nf) {
                    return Err(ApplyError::NotInstallable { nf: nf.id.clone(), control: id.clone() });
                }
                let st = nf
                    .installed
                    .entry(id.clone())
                    .or_insert(crate::catalog::InstalledControl { enabled: false, version: 0 });
                st.enabled = true;
                st.version += 1;
            }
            Action::Disable(id) | Action::Configure(id) => {
                let st = nf
                    .installed
                    .get_mut(id)
                    .ok_or_else(|| ApplyError::NotInstalled { nf: nf.id.clone(), control: id.clone() })?;
                if matches!(a, Action::Disable(_)) {
                    st.enabled = false;
                } else {
                    st.version += 1;
                }
            }
            Action::NoOp => {}
        }
    }
    Ok(())
}

/// Total resource use of every enabled control on `nf`.
pub fn enabled_cost<S: Scalar>(nf: &NetworkFunction, catalog: &Catalog) -> ResourceTotals<S> {
    let mut totals = ResourceTotals::zero();
    for id in nf.enabled_controls() {
        if let Some(c) = catalog.get(&id) {
            totals.add_cost(&c.cost);
        }
    }
    totals
}

/// Goals not met by `nf` with `expected` as its expected set, computed from
/// the metric functions. Resource limits are checked separately.
pub fn unmet_goals<S: Scalar>(
    nf: &NetworkFunction,
    expected: &ExpectedControlSet,
    goals: &Goals,
    catalog: &Catalog,
) -> Vec<String> {
    let mut unmet = Vec::new();
    if let Some(b) = goals.as_cv {
        let v: S = attack_surface_coverage(nf, expected).unwrap_or_else(|_| S::zero());
        if v < S::from_f64(b.lower) || v > S::from_f64(b.upper) {
            unmet.push(format!("as_cv in [{}, {}]", b.lower, b.upper));
        }
    }
    for d in &goals.demands {
        let on_nf: Vec<_> = d.surfaces.iter().filter(|s| nf.surfaces.contains(s)).collect();
        let satisfied = !on_nf.is_empty() && {
            let provided: BTreeSet<_> = on_nf.iter().flat_map(|s| nf.provided_properties(catalog, **s)).collect();
            d.properties.is_subset(&provided)
        };
        let covered = !on_nf.is_empty();
        // Cross-check against the metric used at run time for single surfaces.
        if d.surfaces.len() == 1 {
            let sel = SurfaceSelector::Surface(*d.surfaces.iter().next().expect("one surface"));
            debug_assert_eq!(
                satisfied,
                covered && property_coverage::<S>(nf, catalog, sel, &d.properties) == S::one()
            );
        }
        if !satisfied {
            let surfaces: Vec<&str> = d.surfaces.iter().map(|s| s.as_str()).collect();
            let props: Vec<&str> = d.properties.iter().map(|p| p.as_str()).collect();
            unmet.push(format!("{{{}}} on {}", props.join(", "), surfaces.join("+")));
        }
    }
    for d in &goals.detection {
        for s in d.surfaces.iter().filter(|s| nf.surfaces.contains(s)) {
            let ok = nf.enabled_controls().iter().filter_map(|id| catalog.get(id)).any(|c| {
                c.surfaces.contains(s) && c.detection_latency_ms.is_some_and(|l| l <= d.max_latency_ms)
            });
            if !ok {
                unmet.push(format!("detection within {} ms on {}", d.max_latency_ms, s.as_str()));
            }
        }
    }
    for id in expected.ids() {
        if let Some(c) = catalog.get(&id) {
            for dep in &c.dependencies {
                if !nf.is_enabled(dep) {
                    unmet.push(format!("dependency {dep} of {id}"));
                }
            }
        }
    }
    unmet
}

/// Builds the plan that takes the request's NF to control set `chosen`,
/// together with the NF state after applying it.
pub(crate) fn finalize_with_state<S: Scalar>(
    request: &PlanRequest,
    chosen: &BTreeSet<String>,
    catalog: &Catalog,
    approximate: bool,
) -> Result<(Plan<S>, NetworkFunction), PlanError> {
    let mut actions = diff_to_actions(&request.nf, chosen, &request.managed, catalog, None)?;
    let mut after = request.nf.clone();
    apply_actions(&mut after, &actions, catalog).map_err(|e| PlanError::UnknownControl(e.to_string()))?;
    let mut expected = ExpectedControlSet::from_controls(&after, catalog, chosen);
    for d in &request.goals.demands {
        for s in &d.surfaces {
            expected.required_properties.entry(*s).or_default().extend(d.properties.iter().copied());
        }
    }
    expected.record_versions(&after);
    let as_cv = attack_surface_coverage(&after, &expected).unwrap_or_else(|_| S::zero());
    let sc_cv = security_control_coverage(&after, &expected);
    let cost = enabled_cost::<S>(&after, catalog);
    let weighted_cost = cost.weighted(&request.weights);
    if actions.is_empty() {
        actions.push(Action::NoOp);
    }
    let plan = Plan {
        nf_id: request.nf.id.clone(),
        actions,
        projected: Projection { as_cv, sc_cv, cost, weighted_cost },
        expected_set: expected,
        approximate,
    };
    Ok((plan, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{AttackSurface, Cost, InstalledControl, SecurityControl, SecurityProperty};
    use crate::intent::QualitativeLevel;

    fn control(id: &str, deps: &[&str], cpu: f64) -> SecurityControl {
        SecurityControl {
            id: id.into(),
            name: id.into(),
            surfaces: BTreeSet::from([AttackSurface::Transport]),
            properties: BTreeSet::from([SecurityProperty::Integrity]),
            tier: QualitativeLevel::Basic,
            cost: Cost { cpu_pct: cpu, ..Cost::default() },
            detection_latency_ms: None,
            dependencies: deps.iter().map(|d| d.to_string()).collect(),
        }
    }

    fn nf() -> NetworkFunction {
        NetworkFunction {
            id: "nf".into(),
            nf_type: "upf".into(),
            location_area: "A".into(),
            surfaces: BTreeSet::from([AttackSurface::Transport]),
            installed: BTreeMap::new(),
            budget: Cost { cpu_pct: 10.0, latency_ms_added: 10.0, bandwidth_overhead_pct: 10.0 },
        }
    }

    fn ids(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn enables_follow_dependency_order() {
        let cat = Catalog::from_controls(1, vec![control("b", &["a"], 1.0), control("a", &[], 1.0)]).unwrap();
        let managed = ExpectedControlSet::empty("nf");
        let actions = diff_to_actions(&nf(), &ids(&["a", "b"]), &managed, &cat, None).unwrap();
        assert_eq!(actions, vec![Action::Enable("a".into()), Action::Enable("b".into())]);
        // Asking for b alone pulls in a as well.
        let actions = diff_to_actions(&nf(), &ids(&["b"]), &managed, &cat, None).unwrap();
        assert_eq!(actions, vec![Action::Enable("a".into()), Action::Enable("b".into())]);
    }

    #[test]
    fn no_changes_when_target_is_current() {
        let cat = Catalog::from_controls(1, vec![control("a", &[], 1.0)]).unwrap();
        let mut n = nf();
        n.installed.insert("a".into(), InstalledControl { enabled: true, version: 1 });
        let managed = ExpectedControlSet::from_controls(&n, &cat, &ids(&["a"]));
        assert!(diff_to_actions(&n, &ids(&["a"]), &managed, &cat, None).unwrap().is_empty());
    }

    #[test]
    fn only_managed_controls_are_disabled() {
        let cat = Catalog::from_controls(1, vec![control("a", &[], 1.0), control("b", &[], 1.0)]).unwrap();
        let mut n = nf();
        n.installed.insert("a".into(), InstalledControl { enabled: true, version: 1 });
        n.installed.insert("b".into(), InstalledControl { enabled: true, version: 1 });
        let managed = ExpectedControlSet::from_controls(&n, &cat, &ids(&["b"]));
        let actions = diff_to_actions(&n, &BTreeSet::new(), &managed, &cat, None).unwrap();
        assert_eq!(actions, vec![Action::Disable("b".into())]);
    }

    #[test]
    fn dependency_over_limit_is_unsatisfiable() {
        let cat = Catalog::from_controls(1, vec![control("c", &["d"], 1.0), control("d", &[], 20.0)]).unwrap();
        let limits = limits_for(&nf(), &BTreeMap::new());
        let err = diff_to_actions(&nf(), &ids(&["c"]), &ExpectedControlSet::empty("nf"), &cat, Some(&limits)).unwrap_err();
        assert_eq!(err, PlanError::DependencyUnsatisfiable { control: "c".into(), dependency: "d".into() });
        // The exhaustive planner agrees that no subset fits.
        let mut goals = Goals::default();
        goals.as_cv = Some(AsCvBounds { lower: 1.0, upper: 1.0 });
        let req = PlanRequest::new(nf(), goals);
        let cat = Catalog::from_controls(1, vec![control("c", &["d"], 1.0), control("d", &[], 20.0)]).unwrap();
        let out = brute_force_plan::<f64>(&req, &cat).unwrap().unwrap_err();
        assert_eq!(out.reason, FailureReason::ConstraintConflict);
        assert_eq!(out.binding_constraints, vec![Resource::CpuPct]);
    }

    #[test]
    fn met_goals_give_a_noop() {
        let cat = Catalog::from_controls(1, vec![control("a", &[], 1.0)]).unwrap();
        let mut n = nf();
        n.installed.insert("a".into(), InstalledControl { enabled: true, version: 1 });
        let mut managed = ExpectedControlSet::from_controls(&n, &cat, &ids(&["a"]));
        managed.record_versions(&n);
        let mut goals = Goals::default();
        goals.as_cv = Some(AsCvBounds { lower: 1.0, upper: 1.0 });
        let req = PlanRequest::new(n, goals).with_managed(managed);
        let p = plan::<f64>(&req, &cat).unwrap();
        assert_eq!(p.actions, vec![Action::NoOp]);
        assert_eq!(p.projected.as_cv, 1.0);
        assert_eq!(p.projected.sc_cv, 1.0);
    }

    #[test]
    fn drifted_version_is_reconfigured() {
        let cat = Catalog::from_controls(1, vec![control("a", &[], 1.0)]).unwrap();
        let mut n = nf();
        n.installed.insert("a".into(), InstalledControl { enabled: true, version: 1 });
        let mut managed = ExpectedControlSet::from_controls(&n, &cat, &ids(&["a"]));
        managed.record_versions(&n);
        n.installed.get_mut("a").unwrap().version = 2;
        let mut goals = Goals::default();
        goals.as_cv = Some(AsCvBounds { lower: 1.0, upper: 1.0 });
        let p = plan::<f64>(&PlanRequest::new(n, goals).with_managed(managed), &cat).unwrap();
        assert_eq!(p.actions, vec![Action::Configure("a".into())]);
        assert_eq!(p.expected_set.expected_versions["a"], 3);
    }

    #[test]
    fn empty_catalog_edge_cases() {
        let cat = Catalog::from_controls(1, Vec::new()).unwrap();
        let req = PlanRequest::new(nf(), Goals::default());
        assert!(brute_force_plan::<f64>(&req, &cat).unwrap().unwrap().is_noop());
        let mut goals = Goals::default();
        goals.as_cv = Some(AsCvBounds { lower: 0.5, upper: 1.0 });
        let req = PlanRequest::new(nf(), goals);
        let f = brute_force_plan::<f64>(&req, &cat).unwrap().unwrap_err();
        assert_eq!(f.reason, FailureReason::Infeasible);
        assert_eq!(plan::<f64>(&req, &cat).unwrap_err().reason, FailureReason::Infeasible);
    }

    #[test]
    fn plan_serializes_actions_with_op_tags() {
        let json = serde_json::to_string(&vec![Action::Enable("a".into()), Action::NoOp]).unwrap();
        assert_eq!(json, r#"[{"op":"enable","control":"a"},{"op":"no_op"}]"#);
    }
}
