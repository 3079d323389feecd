use std::path::{Path, PathBuf};

use secintent_core::catalog::{load_catalog, AttackSurface, Catalog, Resource, SecurityProperty};
use secintent_core::control::{ControlLoop, LoopConfig};
use secintent_core::intent::LifecycleState;
use secintent_core::netsim::load_scenario;
use secintent_core::planner::FailureReason;
use secintent_core::rdf::parse_turtle;
use secintent_core::slo::load_mapping;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn catalog() -> Catalog {
    load_catalog(&std::fs::read(root().join("catalog/controls.json")).unwrap()).unwrap()
}

fn setup(scenario: &str, intents: &[&str]) -> ControlLoop<f64> {
    let catalog = catalog();
    let mapping = load_mapping(&std::fs::read(root().join("config/level_mapping.json")).unwrap())
        .unwrap()
        .with_catalog_defaults(&catalog);
    let scenario = load_scenario(&root().join("scenarios").join(scenario), &catalog, None).unwrap();
    let mut lp = ControlLoop::new(LoopConfig::default(), catalog, mapping, &scenario);
    for name in intents {
        let ttl = std::fs::read(root().join("corpus/intents").join(format!("{name}.ttl"))).unwrap();
        let outcome = lp.submit(&parse_turtle(&ttl).unwrap()).unwrap();
        assert!(outcome.rejected.is_empty(), "{name}: {:?}", outcome.rejected);
    }
    lp
}

#[test]
fn use_case_areas_get_their_levels() {
    let mut lp = setup("usecase_ab", &["useCaseA", "useCaseB"]);
    for _ in 0..100 {
        lp.run_tick();
    }
    let cat = catalog();
    for nf in lp.inventory().iter() {
        let cp = nf.provided_properties(&cat, AttackSurface::AirInterfaceCp);
        let up = nf.provided_properties(&cat, AttackSurface::AirInterfaceUp);
        assert!(cp.contains(&SecurityProperty::CpConfidentiality), "{}", nf.id);
        assert!(cp.contains(&SecurityProperty::CpIntegrity), "{}", nf.id);
        if nf.location_area == "A" {
            assert!(up.contains(&SecurityProperty::UpConfidentiality), "{}", nf.id);
            assert!(up.contains(&SecurityProperty::UpIntegrity), "{}", nf.id);
        } else {
            assert!(up.is_empty(), "{}: {up:?}", nf.id);
        }
    }
    let summary = lp.summary();
    assert!(summary.all_satisfied, "{summary:#?}");
    for outcome in lp.simulator().outcomes() {
        assert_eq!(outcome.succeeded, outcome.nf_id.starts_with("gnb-b"), "{outcome:?}");
    }
}

#[test]
fn infeasible_scenario_reports_latency_conflict() {
    let mut lp = setup("infeasible", &["tightLatency"]);
    let mut failures = Vec::new();
    for _ in 0..5 {
        for r in lp.run_tick().reports {
            failures.extend(r.plan_failures);
        }
    }
    let parent = lp.store().iter().next().unwrap();
    assert_eq!(parent.state, LifecycleState::Decomposed);
    let child = lp.store().children(parent.id.as_str()).next().unwrap();
    assert_eq!(child.state, LifecycleState::Degraded, "{:?}", child.audit);
    assert!(!lp.summary().all_satisfied);
    assert!(!failures.is_empty());
    for f in &failures {
        assert_eq!(f.reason, FailureReason::ConstraintConflict);
        assert_eq!(f.binding_constraints, vec![Resource::LatencyMsAdded]);
    }
}

#[test]
fn performance_goals_are_met() {
    let mut lp = setup("performance", &["performanceGoals"]);
    for _ in 0..80 {
        lp.run_tick();
    }
    let summary = lp.summary();
    assert!(summary.all_satisfied, "{summary:#?}");
}

#[test]
fn drift_is_repaired() {
    let mut lp = setup("drift", &["driftAssurance"]);
    for _ in 0..60 {
        lp.run_tick();
    }
    let summary = lp.summary();
    assert!(summary.all_satisfied, "{summary:#?}");
    for nf in lp.inventory().iter() {
        assert!(nf.is_enabled("nia_up_integrity"), "{}", nf.id);
    }
}
