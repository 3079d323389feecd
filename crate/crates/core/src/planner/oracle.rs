//! Exhaustive reference planner. Tries every subset of the applicable
//! controls and shares nothing with the branch and bound except the code
//! that turns a chosen set into a plan.

use std::collections::{BTreeMap, BTreeSet};

use crate::catalog::{Catalog, Resource};
use crate::scalar::Scalar;

use super::search::describe_unmet;
use super::{finalize_with_state, unmet_goals, FailureReason, Plan, PlanError, PlanFailure, PlanRequest, EXACT_GUARD};

/// Best plan by exhaustive enumeration. The outer error reports requests
/// too large to enumerate.
pub fn brute_force_plan<S: Scalar>(
    request: &PlanRequest,
    catalog: &Catalog,
) -> Result<Result<Plan<S>, PlanFailure>, PlanError> {
    let nf = &request.nf;
    let candidates: Vec<String> = catalog.controls().filter(|c| c.applies_to(nf)).map(|c| c.id.clone()).collect();
    if candidates.len() > EXACT_GUARD {
        return Err(PlanError::TooLarge { candidates: candidates.len(), guard: EXACT_GUARD });
    }
    let fixed = request.fixed_controls(catalog);

    let mut best: Option<Plan<S>> = None;
    let mut unconstrained: Option<Plan<S>> = None;
    let mut feasible_under: BTreeMap<Resource, bool> = BTreeMap::new();

    for mask in 0u32..(1u32 << candidates.len()) {
        let chosen: BTreeSet<String> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, c)| c.clone())
            .collect();
        let deps_ok = chosen.iter().all(|id| {
            catalog
                .get(id)
                .is_some_and(|c| c.dependencies.iter().all(|d| chosen.contains(d) || fixed.contains(d)))
        });
        if !deps_ok {
            continue;
        }
        let (plan, after) = finalize_with_state::<S>(request, &chosen, catalog, false)?;
        if !unmet_goals::<S>(&after, &plan.expected_set, &request.goals, catalog).is_empty() {
            continue;
        }
        let exceeded = plan.projected.cost.exceeded(&request.limits);
        for r in request.limits.keys() {
            let ok = feasible_under.entry(*r).or_insert(false);
            *ok |= !exceeded.contains(r);
        }
        if unconstrained.as_ref().is_none_or(|b| plan.cmp_key(b).is_lt()) {
            unconstrained = Some(plan.clone());
        }
        if exceeded.is_empty() && best.as_ref().is_none_or(|b| plan.cmp_key(b).is_lt()) {
            best = Some(plan);
        }
    }

    if let Some(p) = best {
        return Ok(Ok(p));
    }
    let (reason, binding) = match unconstrained {
        None => (FailureReason::Infeasible, Vec::new()),
        Some(u) => {
            let mut binding: Vec<Resource> =
                feasible_under.iter().filter(|(_, ok)| !**ok).map(|(r, _)| *r).collect();
            if binding.is_empty() {
                binding = u.projected.cost.exceeded(&request.limits);
            }
            (FailureReason::ConstraintConflict, binding)
        }
    };
    Ok(Err(PlanFailure {
        nf_id: nf.id.clone(),
        reason,
        unmet_goals: describe_unmet::<S>(request, catalog),
        binding_constraints: binding,
    }))
}
