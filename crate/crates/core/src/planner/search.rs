//! Branch and bound over the controls relevant to a request.
//!
//! Goals are compiled into bit masks over surfaces and properties so that
//! partial selections can be bounded cheaply. Leaves that survive the
//! bounds are finalized through the same code path as the reference
//! enumeration, so both rank plans with identical keys.

use std::collections::{BTreeMap, BTreeSet};

use crate::catalog::{AttackSurface, Catalog, Resource, SecurityProperty};
use crate::scalar::Scalar;

use super::{
    finalize_with_state, unmet_goals, FailureReason, Plan, PlanFailure, PlanRequest, EXACT_GUARD,
};

const EPS: f64 = 1e-9;

/// Bit set over candidate indices.
type Set = u128;

/// Largest candidate list the bit sets can represent.
const MAX_CANDIDATES: usize = Set::BITS as usize;

fn bit(i: usize) -> Set {
    1 << i
}

fn surface_bit(s: AttackSurface) -> u8 {
    1 << AttackSurface::ALL.iter().position(|x| *x == s).expect("surface in ALL")
}

fn property_bit(p: SecurityProperty) -> u32 {
    1 << SecurityProperty::ALL.iter().position(|x| *x == p).expect("property in ALL")
}

fn surface_mask<'a>(surfaces: impl IntoIterator<Item = &'a AttackSurface>) -> u8 {
    surfaces.into_iter().fold(0, |m, s| m | surface_bit(*s))
}

fn property_mask<'a>(props: impl IntoIterator<Item = &'a SecurityProperty>) -> u32 {
    props.into_iter().fold(0, |m, p| m | property_bit(*p))
}

struct DemandMasks {
    required: u32,
    base: u32,
    /// Properties each candidate adds on the demand's surfaces.
    contrib: Vec<u32>,
    /// `false` when none of the demand's surfaces exist on the NF.
    reachable: bool,
}

struct DetectionMasks {
    needed: u8,
    base: u8,
    contrib: Vec<u8>,
}

/// A request compiled against a fixed candidate list.
pub(crate) struct Model {
    pub(crate) candidates: Vec<String>,
    costs: Vec<[f64; 3]>,
    weighted: Vec<f64>,
    surfaces: Vec<u8>,
    deps: Vec<Set>,
    demands: Vec<DemandMasks>,
    detection: Vec<DetectionMasks>,
    /// `allowed[k]`: k covered surfaces satisfy the as_cv bounds.
    allowed: Option<Vec<bool>>,
    base_cost: [f64; 3],
    limits: [f64; 3],
}

impl Model {
    pub(crate) fn new<S: Scalar>(request: &PlanRequest, catalog: &Catalog, candidates: Vec<String>) -> Model {
        let nf = &request.nf;
        let fixed = request.fixed_controls(catalog);
        let index: BTreeMap<&str, usize> = candidates.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let w = Resource::ALL.map(|r| request.weights.get(r));
        let mut costs = Vec::new();
        let mut surfaces = Vec::new();
        let mut deps = Vec::new();
        for id in &candidates {
            let c = catalog.get(id).expect("candidate from catalog");
            let marginal = if fixed.contains(id) { [0.0; 3] } else { Resource::ALL.map(|r| c.cost.get(r)) };
            costs.push(marginal);
            surfaces.push(surface_mask(c.surfaces.intersection(&nf.surfaces)));
            let mut m = Set::default();
            for d in &c.dependencies {
                if let Some(i) = index.get(d.as_str()) {
                    if !fixed.contains(d) {
                        m |= bit(*i);
                    }
                }
            }
            deps.push(m);
        }
        let weighted = costs.iter().map(|c| c.iter().zip(w).map(|(x, w)| x * w).sum()).collect();
        let mut base_cost = [0.0; 3];
        for id in &fixed {
            if let Some(c) = catalog.get(id) {
                for (i, r) in Resource::ALL.into_iter().enumerate() {
                    base_cost[i] += c.cost.get(r);
                }
            }
        }

        let demands = request
            .goals
            .demands
            .iter()
            .map(|d| {
                let on_nf: BTreeSet<AttackSurface> = d.surfaces.intersection(&nf.surfaces).copied().collect();
                let provides = |id: &String| -> u32 {
                    catalog.get(id).map_or(0, |c| {
                        if c.surfaces.is_disjoint(&on_nf) {
                            0
                        } else {
                            property_mask(&c.properties)
                        }
                    })
                };
                DemandMasks {
                    required: property_mask(&d.properties),
                    base: fixed.iter().map(provides).fold(0, |a, b| a | b),
                    contrib: candidates.iter().map(provides).collect(),
                    reachable: !on_nf.is_empty(),
                }
            })
            .collect();

        let detection = request
            .goals
            .detection
            .iter()
            .map(|d| {
                let needed = surface_mask(d.surfaces.intersection(&nf.surfaces));
                let covers = |id: &String| -> u8 {
                    catalog.get(id).map_or(0, |c| match c.detection_latency_ms {
                        Some(l) if l <= d.max_latency_ms => surface_mask(c.surfaces.intersection(&nf.surfaces)),
                        _ => 0,
                    })
                };
                DetectionMasks {
                    needed,
                    base: fixed.iter().map(covers).fold(0, |a, b| a | b) & needed,
                    contrib: candidates.iter().map(|c| covers(c) & needed).collect(),
                }
            })
            .collect();

        let n = nf.surfaces.len() as u64;
        let allowed = request.goals.as_cv.map(|b| {
            (0..=n)
                .map(|k| {
                    if n == 0 {
                        return false;
                    }
                    let v = S::ratio(k, n);
                    v >= S::from_f64(b.lower) && v <= S::from_f64(b.upper)
                })
                .collect()
        });

        let limits = Resource::ALL.map(|r| request.limits.get(&r).copied().unwrap_or(f64::INFINITY));
        Model { candidates, costs, weighted, surfaces, deps, demands, detection, allowed, base_cost, limits }
    }

    fn len(&self) -> usize {
        self.candidates.len()
    }

    fn members(&self, mask: Set) -> impl Iterator<Item = usize> {
        (0..self.len()).filter(move |i| mask & bit(*i) != 0)
    }

    fn ids(&self, mask: Set) -> BTreeSet<String> {
        self.members(mask).map(|i| self.candidates[i].clone()).collect()
    }

    fn total_cost(&self, mask: Set) -> [f64; 3] {
        let mut t = self.base_cost;
        for i in self.members(mask) {
            for r in 0..3 {
                t[r] += self.costs[i][r];
            }
        }
        t
    }

    fn weighted_cost(&self, mask: Set) -> f64 {
        self.members(mask).map(|i| self.weighted[i]).sum()
    }

    fn within_limits(&self, cost: &[f64; 3], use_limits: bool) -> bool {
        !use_limits || cost.iter().zip(&self.limits).all(|(c, l)| *c <= *l + EPS)
    }

    fn deps_ok(&self, mask: Set) -> bool {
        self.members(mask).all(|i| self.deps[i] & !mask == 0)
    }

    fn covered(&self, mask: Set) -> u8 {
        self.members(mask).fold(0, |m, i| m | self.surfaces[i])
    }

    /// Goal deficit: missing demanded properties, undetected surfaces and
    /// missing as_cv surfaces. Zero means every lower-bound style goal holds.
    fn deficit(&self, mask: Set) -> u32 {
        let mut total = 0;
        for d in &self.demands {
            if !d.reachable {
                total += d.required.count_ones();
                continue;
            }
            let have = self.members(mask).fold(d.base, |m, i| m | d.contrib[i]);
            total += (d.required & !have).count_ones();
        }
        for d in &self.detection {
            let have = self.members(mask).fold(d.base, |m, i| m | d.contrib[i]);
            total += (d.needed & !have).count_ones();
        }
        if let Some(allowed) = &self.allowed {
            let k = self.covered(mask).count_ones() as usize;
            let need = allowed.iter().position(|a| *a).unwrap_or(allowed.len());
            total += need.saturating_sub(k) as u32;
        }
        total
    }

    fn goals_met(&self, mask: Set) -> bool {
        if self.deficit(mask) != 0 {
            return false;
        }
        match &self.allowed {
            Some(allowed) => allowed[self.covered(mask).count_ones() as usize],
            None => true,
        }
    }

    fn feasible(&self, mask: Set, use_limits: bool) -> bool {
        self.deps_ok(mask) && self.goals_met(mask) && self.within_limits(&self.total_cost(mask), use_limits)
    }

    fn with_deps(&self, mut mask: Set) -> Set {
        loop {
            let next = self.members(mask).fold(mask, |m, i| m | self.deps[i]);
            if next == mask {
                return mask;
            }
            mask = next;
        }
    }

    /// Weighted set cover heuristic followed by removal of redundant controls.
    fn greedy(&self, use_limits: bool) -> Option<Set> {
        let mut mask = Set::default();
        while self.deficit(mask) > 0 {
            let current = self.deficit(mask);
            let mut best: Option<(f64, Set)> = None;
            for i in (0..self.len()).filter(|i| mask & bit(*i) == 0) {
                let next = self.with_deps(mask | (bit(i)));
                let gain = current.saturating_sub(self.deficit(next));
                if gain == 0 || !self.within_limits(&self.total_cost(next), use_limits) {
                    continue;
                }
                let cost = self.weighted_cost(next) - self.weighted_cost(mask);
                let score = gain as f64 / (cost + 1e-6);
                if best.is_none_or(|(s, _)| score > s + EPS) {
                    best = Some((score, next));
                }
            }
            mask = best?.1;
        }
        Some(self.improve(mask, use_limits))
    }

    /// Drops controls, most expensive first, while the selection stays feasible.
    fn improve(&self, mut mask: Set, use_limits: bool) -> Set {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|a, b| self.weighted[*b].total_cmp(&self.weighted[*a]).then(b.cmp(a)));
        let mut changed = true;
        while changed {
            changed = false;
            for &i in &order {
                let without = mask & !(bit(i));
                if mask & bit(i) != 0 && self.feasible(without, use_limits) {
                    mask = without;
                    changed = true;
                }
            }
        }
        mask
    }
}

struct Search<'a, S: Scalar> {
    model: &'a Model,
    request: &'a PlanRequest,
    catalog: &'a Catalog,
    use_limits: bool,
    suffix_demand: Vec<Vec<u32>>,
    suffix_detect: Vec<Vec<u8>>,
    suffix_surface: Vec<u8>,
    max_allowed: Option<usize>,
    best: Option<Plan<S>>,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn new(model: &'a Model, request: &'a PlanRequest, catalog: &'a Catalog, use_limits: bool) -> Self {
        let n = model.len();
        let suffix_demand = model
            .demands
            .iter()
            .map(|d| {
                let mut v = vec![0u32; n + 1];
                for i in (0..n).rev() {
                    v[i] = v[i + 1] | d.contrib[i];
                }
                v
            })
            .collect();
        let suffix_detect = model
            .detection
            .iter()
            .map(|d| {
                let mut v = vec![0u8; n + 1];
                for i in (0..n).rev() {
                    v[i] = v[i + 1] | d.contrib[i];
                }
                v
            })
            .collect();
        let mut suffix_surface = vec![0u8; n + 1];
        for i in (0..n).rev() {
            suffix_surface[i] = suffix_surface[i + 1] | model.surfaces[i];
        }
        let max_allowed = model.allowed.as_ref().and_then(|a| a.iter().rposition(|x| *x));
        Search {
            model,
            request,
            catalog,
            use_limits,
            suffix_demand,
            suffix_detect,
            suffix_surface,
            max_allowed,
            best: None,
        }
    }

    fn best_weight(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |p| p.projected.weighted_cost.to_f64())
    }

    /// Finalizes `mask` and keeps it if it ranks before the incumbent.
    fn offer(&mut self, mask: Set) {
        if !self.model.feasible(mask, self.use_limits) {
            return;
        }
        if self.model.weighted_cost(mask) > self.best_weight() + EPS {
            return;
        }
        let chosen = self.model.ids(mask);
        let Ok((plan, after)) = finalize_with_state::<S>(self.request, &chosen, self.catalog, false) else {
            return;
        };
        if !unmet_goals::<S>(&after, &plan.expected_set, &self.request.goals, self.catalog).is_empty() {
            return;
        }
        if self.use_limits && !plan.projected.cost.exceeded(&self.request.limits).is_empty() {
            return;
        }
        if self.best.as_ref().is_none_or(|b| plan.cmp_key(b).is_lt()) {
            self.best = Some(plan);
        }
    }

    fn descend(&mut self, i: usize, mask: Set, weight: f64, cost: [f64; 3], state: &State) {
        let m = self.model;
        if weight > self.best_weight() + EPS || !m.within_limits(&cost, self.use_limits) {
            return;
        }
        if let Some(max) = self.max_allowed {
            if (state.covered.count_ones() as usize) > max {
                return;
            }
        }
        // Optimistic completion: everything still undecided gets chosen.
        for (d, (have, suffix)) in m.demands.iter().zip(state.demand.iter().zip(&self.suffix_demand)) {
            if !d.reachable || d.required & !(have | suffix[i]) != 0 {
                return;
            }
        }
        for (d, (have, suffix)) in m.detection.iter().zip(state.detect.iter().zip(&self.suffix_detect)) {
            if d.needed & !(have | suffix[i]) != 0 {
                return;
            }
        }
        if let Some(allowed) = &m.allowed {
            let reach = (state.covered | self.suffix_surface[i]).count_ones() as usize;
            let need = allowed.iter().position(|a| *a).unwrap_or(usize::MAX);
            if reach < need {
                return;
            }
        }
        if i == m.len() {
            self.offer(mask);
            return;
        }
        self.descend(i + 1, mask, weight, cost, state);
        let mut next_cost = cost;
        for r in 0..3 {
            next_cost[r] += m.costs[i][r];
        }
        let next = State {
            demand: state.demand.iter().zip(&m.demands).map(|(h, d)| h | d.contrib[i]).collect(),
            detect: state.detect.iter().zip(&m.detection).map(|(h, d)| h | d.contrib[i]).collect(),
            covered: state.covered | m.surfaces[i],
        };
        self.descend(i + 1, mask | (bit(i)), weight + m.weighted[i], next_cost, &next);
    }

    fn run(mut self) -> Option<Plan<S>> {
        if let Some(seed) = self.model.greedy(self.use_limits) {
            self.offer(seed);
        }
        let m = self.model;
        let root = State {
            demand: m.demands.iter().map(|d| d.base).collect(),
            detect: m.detection.iter().map(|d| d.base).collect(),
            covered: 0,
        };
        self.descend(0, 0, 0.0, m.base_cost, &root);
        self.best
    }
}

struct State {
    demand: Vec<u32>,
    detect: Vec<u8>,
    covered: u8,
}

/// Controls worth considering: every applicable control when an as_cv goal
/// is present, otherwise those that advance some demand, plus the
/// dependencies they need. Controls with unreachable dependencies are dropped.
pub(crate) fn relevant_candidates(request: &PlanRequest, catalog: &Catalog) -> Vec<String> {
    let nf = &request.nf;
    let fixed = request.fixed_controls(catalog);
    let applicable: BTreeSet<String> =
        catalog.controls().filter(|c| c.applies_to(nf)).map(|c| c.id.clone()).collect();
    let goals = &request.goals;
    let mut picked: BTreeSet<String> = if goals.as_cv.is_some() {
        applicable.clone()
    } else {
        applicable
            .iter()
            .filter(|id| {
                let c = catalog.get(id).expect("applicable control");
                let for_demand = goals.demands.iter().any(|d| {
                    !c.properties.is_disjoint(&d.properties)
                        && c.surfaces.iter().any(|s| d.surfaces.contains(s) && nf.surfaces.contains(s))
                });
                let for_detection = goals.detection.iter().any(|d| {
                    c.detection_latency_ms.is_some_and(|l| l <= d.max_latency_ms)
                        && c.surfaces.iter().any(|s| d.surfaces.contains(s) && nf.surfaces.contains(s))
                });
                for_demand || for_detection
            })
            .cloned()
            .collect()
    };
    let closures: Vec<String> = picked.iter().flat_map(|id| catalog.dependency_closure(id)).collect();
    picked.extend(closures.into_iter().filter(|d| applicable.contains(d)));
    picked
        .into_iter()
        .filter(|id| {
            catalog.dependency_closure(id).iter().all(|d| applicable.contains(d) || fixed.contains(d))
        })
        .collect()
}

/// Goals left unmet even with every applicable control enabled, falling
/// back to those unmet in the current state.
pub(crate) fn describe_unmet<S: Scalar>(request: &PlanRequest, catalog: &Catalog) -> Vec<String> {
    let mut all_on = request.nf.clone();
    let applicable: Vec<String> =
        catalog.controls().filter(|c| c.applies_to(&request.nf)).map(|c| c.id.clone()).collect();
    for id in &applicable {
        let st = all_on
            .installed
            .entry(id.clone())
            .or_insert(crate::catalog::InstalledControl { enabled: false, version: 0 });
        st.enabled = true;
    }
    let expected = crate::metrics::ExpectedControlSet::from_controls(&all_on, catalog, &applicable);
    let mut unmet = unmet_goals::<S>(&all_on, &expected, &request.goals, catalog);
    if unmet.is_empty() {
        unmet = unmet_goals::<S>(&request.nf, &request.managed, &request.goals, catalog);
    }
    if unmet.is_empty() {
        unmet.push("no combination of controls meets all goals together".to_string());
    }
    unmet
}

fn solve<S: Scalar>(
    request: &PlanRequest,
    catalog: &Catalog,
    model: &Model,
    approximate: bool,
    use_limits: bool,
) -> Option<Plan<S>> {
    if approximate {
        let mask = model.greedy(use_limits)?;
        let chosen = model.ids(mask);
        let (mut plan, after) = finalize_with_state::<S>(request, &chosen, catalog, true).ok()?;
        let ok = unmet_goals::<S>(&after, &plan.expected_set, &request.goals, catalog).is_empty()
            && (!use_limits || plan.projected.cost.exceeded(&request.limits).is_empty());
        plan.approximate = true;
        ok.then_some(plan)
    } else {
        Search::<S>::new(model, request, catalog, use_limits).run()
    }
}

/// Cheapest control selection meeting the request's goals within its limits.
///
/// Exact up to [`EXACT_GUARD`] candidates; beyond that a greedy cover with
/// local improvement is used and the plan is flagged approximate.
pub fn plan<S: Scalar>(request: &PlanRequest, catalog: &Catalog) -> Result<Plan<S>, PlanFailure> {
    let candidates = relevant_candidates(request, catalog);
    let approximate = candidates.len() > EXACT_GUARD;
    if candidates.len() > MAX_CANDIDATES {
        return Err(PlanFailure {
            nf_id: request.nf.id.clone(),
            reason: FailureReason::Infeasible,
            unmet_goals: vec![format!("{} candidate controls exceed the planner limit of {MAX_CANDIDATES}", candidates.len())],
            binding_constraints: Vec::new(),
        });
    }
    let model = Model::new::<S>(request, catalog, candidates);
    if let Some(p) = solve::<S>(request, catalog, &model, approximate, true) {
        return Ok(p);
    }
    let failure = |reason, binding| PlanFailure {
        nf_id: request.nf.id.clone(),
        reason,
        unmet_goals: describe_unmet::<S>(request, catalog),
        binding_constraints: binding,
    };
    let Some(unconstrained) = solve::<S>(request, catalog, &model, approximate, false) else {
        return Err(failure(FailureReason::Infeasible, Vec::new()));
    };
    let mut binding = Vec::new();
    for r in Resource::ALL {
        let Some(limit) = request.limits.get(&r) else { continue };
        let mut single = request.clone();
        single.limits = BTreeMap::from([(r, *limit)]);
        let m = Model::new::<S>(&single, catalog, model.candidates.clone());
        if solve::<S>(&single, catalog, &m, approximate, true).is_none() {
            binding.push(r);
        }
    }
    if binding.is_empty() {
        binding = unconstrained.projected.cost.exceeded(&request.limits);
    }
    Err(failure(FailureReason::ConstraintConflict, binding))
}
