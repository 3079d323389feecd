//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! test fails if any check fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secintent_cli::{cmd_run, read_catalog, RunManifest, EVENTS_FILE, METRICS_FILE, REPORTS_FILE, SUMMARY_FILE};
use secintent_core::catalog::{
    load_inventory, AttackSurface, Catalog, Cost, InstalledControl, NetworkFunction, SecurityControl, SecurityProperty,
};
use secintent_core::control::{ControlLoop, LoopConfig};
use secintent_core::intent::{
    from_graph, to_graph, ExpectationKind, Intent, IntentKind, LifecycleState, MetricId, QualitativeLevel,
    SurfaceSelector, Target, TargetScope,
};
use secintent_core::metrics::{
    attack_surface_coverage, mean_time_to_detect, robustness_level, security_control_coverage, segmentation_level,
    status_of, AttackRecord, ExpectedControlSet, SegmentationPolicy, Status, Window,
};
use secintent_core::netsim::load_scenario;
use secintent_core::planner::{brute_force_plan, plan, unmet_goals, AsCvBounds, Goals, PlanRequest, PropertyDemand};
use secintent_core::rdf::{isomorphic, parse_turtle, serialize_turtle, Iri};
use secintent_core::slo::load_mapping;
use secintent_core::ExactFraction;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn catalog() -> Catalog {
    read_catalog(&root().join("catalog/controls.json")).unwrap()
}

fn manifest(scenario: &str, intents: &[&str], ticks: u64, out: &Path) -> RunManifest {
    RunManifest {
        scenario: root().join("scenarios").join(scenario),
        intents: intents.iter().map(|i| root().join("corpus/intents").join(i)).collect(),
        catalog: root().join("catalog/controls.json"),
        mapping: root().join("config/level_mapping.json"),
        ticks,
        seed: Some(7),
        out: out.to_path_buf(),
    }
}

fn run(m: &RunManifest) -> (i32, serde_json::Value) {
    let mut sink = Vec::new();
    let code = cmd_run(m, &mut sink);
    let summary = std::fs::read_to_string(m.out.join(SUMMARY_FILE)).unwrap_or_else(|_| "null".into());
    (code, serde_json::from_str(&summary).unwrap())
}

fn small_control(id: String, surfaces: BTreeSet<AttackSurface>, properties: BTreeSet<SecurityProperty>) -> SecurityControl {
    SecurityControl {
        name: id.clone(),
        id,
        surfaces,
        properties,
        tier: QualitativeLevel::Basic,
        cost: Cost::default(),
        detection_latency_ms: None,
        dependencies: BTreeSet::new(),
    }
}

/// Coverage metrics against a recount over 200 random small inventories.
fn coverage_formulas() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in 0..200 {
        let mut all = AttackSurface::ALL.to_vec();
        all.shuffle(&mut rng);
        let surfaces: BTreeSet<_> = all[..rng.gen_range(1..=6)].iter().copied().collect();
        let controls: Vec<_> = (0..rng.gen_range(0..=8))
            .map(|i| {
                let s = (0..rng.gen_range(1..=2)).map(|_| AttackSurface::ALL[rng.gen_range(0..6)]).collect();
                small_control(format!("c{i}"), s, BTreeSet::from([SecurityProperty::Logging]))
            })
            .collect();
        let cat = Catalog::from_controls(1, controls.clone()).unwrap();
        let mut nf = NetworkFunction {
            id: "nf".into(),
            nf_type: "gnb".into(),
            location_area: "A".into(),
            surfaces: surfaces.clone(),
            installed: BTreeMap::new(),
            budget: Cost::default(),
        };
        let mut chosen = Vec::new();
        let mut versions = BTreeMap::new();
        for c in &controls {
            if rng.gen_bool(0.7) {
                nf.installed.insert(c.id.clone(), InstalledControl { enabled: rng.gen_bool(0.6), version: rng.gen_range(1..=2) });
            }
            if !c.surfaces.is_disjoint(&surfaces) && rng.gen_bool(0.6) {
                chosen.push(c.id.clone());
                if rng.gen_bool(0.5) {
                    versions.insert(c.id.clone(), rng.gen_range(1..=2u64));
                }
            }
        }
        let mut expected = ExpectedControlSet::from_controls(&nf, &cat, &chosen);
        expected.expected_versions = versions.clone();

        let on = |id: &String| nf.installed.get(id).is_some_and(|s| s.enabled);
        let covered = surfaces
            .iter()
            .filter(|s| chosen.iter().any(|id| on(id) && controls.iter().any(|c| &c.id == id && c.surfaces.contains(s))))
            .count() as i64;
        let as_cv = ExactFraction::new(covered, surfaces.len() as i64);
        let sc_cv = if chosen.is_empty() {
            ExactFraction::from_integer(1)
        } else {
            let ok = chosen
                .iter()
                .filter(|id| on(id) && versions.get(*id).is_none_or(|v| nf.installed[*id].version == *v))
                .count() as i64;
            ExactFraction::new(ok, chosen.len() as i64)
        };
        ensure(attack_surface_coverage::<ExactFraction>(&nf, &expected) == Ok(as_cv), || format!("as_cv differs on case {n}"))?;
        ensure(security_control_coverage::<ExactFraction>(&nf, &expected) == sc_cv, || format!("sc_cv differs on case {n}"))?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("200 inventories exact, {secs:.2} s"))
}

/// Area A ends with control and user plane protection, area B with control plane only.
fn use_case_differentiation() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let (code, summary) = run(&manifest("usecase_ab", &["useCaseA.ttl", "useCaseB.ttl"], 200, dir.path()));
    let secs = t.elapsed().as_secs_f64();
    ensure(code == 0, || format!("exit code {code}"))?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    let cat = catalog();
    let full: BTreeSet<_> = [
        SecurityProperty::CpConfidentiality,
        SecurityProperty::CpIntegrity,
        SecurityProperty::UpConfidentiality,
        SecurityProperty::UpIntegrity,
    ]
    .into();
    let cp_only: BTreeSet<_> = [SecurityProperty::CpConfidentiality, SecurityProperty::CpIntegrity].into();
    let mut seen = 0;
    for nf in summary["final_inventory"].as_array().unwrap() {
        let id = nf["nf"].as_str().unwrap();
        let radio: BTreeSet<SecurityProperty> = nf["enabled"]
            .as_array()
            .unwrap()
            .iter()
            .filter_map(|c| cat.get(c.as_str().unwrap()))
            .filter(|c| c.surfaces.contains(&AttackSurface::AirInterfaceCp) || c.surfaces.contains(&AttackSurface::AirInterfaceUp))
            .flat_map(|c| c.properties.iter().copied())
            .filter(|p| full.contains(p))
            .collect();
        let want = if nf["location_area"] == "A" { &full } else { &cp_only };
        ensure(&radio == want, || format!("{id} provides {radio:?}"))?;
        seen += 1;
    }
    ensure(seen == 6, || format!("{seen} NFs in summary"))?;
    Ok(format!("3 area-A NFs with CP+UP, 3 area-B gNBs with CP only, exit 0, {secs:.2} s"))
}

/// The branch and bound planner against exhaustive search.
fn planner_optimality() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let props = [SecurityProperty::CpConfidentiality, SecurityProperty::CpIntegrity, SecurityProperty::Mitigation, SecurityProperty::Logging];
    let (mut fixtures, mut feasible) = (0, 0);
    while feasible < 50 && fixtures < 200 {
        let surfaces: BTreeSet<_> = AttackSurface::ALL[..4].iter().copied().collect();
        let controls: Vec<_> = (0..12)
            .map(|i| {
                let mut c = small_control(
                    format!("p{i:02}"),
                    BTreeSet::from([AttackSurface::ALL[rng.gen_range(0..4)]]),
                    BTreeSet::from([props[rng.gen_range(0..props.len())]]),
                );
                c.cost = Cost {
                    cpu_pct: rng.gen_range(0..=5) as f64,
                    latency_ms_added: rng.gen_range(0..=4) as f64 * 0.25,
                    bandwidth_overhead_pct: rng.gen_range(0..=2) as f64,
                };
                if i > 0 && rng.gen_bool(0.2) {
                    c.dependencies.insert(format!("p{:02}", rng.gen_range(0..i)));
                }
                c
            })
            .collect();
        let cat = Catalog::from_controls(1, controls).unwrap();
        let nf = NetworkFunction {
            id: "nf".into(),
            nf_type: "gnb".into(),
            location_area: "A".into(),
            surfaces: surfaces.clone(),
            installed: BTreeMap::new(),
            budget: Cost { cpu_pct: rng.gen_range(6..=20) as f64, latency_ms_added: 2.0, bandwidth_overhead_pct: 6.0 },
        };
        let mut goals = Goals::default();
        goals.as_cv = Some(AsCvBounds { lower: [0.25, 0.5, 0.75][rng.gen_range(0..3)], upper: 1.0 });
        let s = AttackSurface::ALL[rng.gen_range(0..4)];
        goals.demands.push(PropertyDemand { surfaces: BTreeSet::from([s]), properties: BTreeSet::from([props[rng.gen_range(0..4)]]) });
        let req = PlanRequest::new(nf, goals);
        fixtures += 1;

        let fast = plan::<ExactFraction>(&req, &cat);
        let slow = brute_force_plan::<ExactFraction>(&req, &cat).map_err(|e| e.to_string())?;
        match (fast, slow) {
            (Ok(a), Ok(b)) => {
                feasible += 1;
                ensure(a.projected.cost == b.projected.cost, || format!("fixture {fixtures}: cost differs"))?;
                for p in [&a, &b] {
                    let mut after = req.nf.clone();
                    secintent_core::planner::apply_actions(&mut after, &p.actions, &cat).map_err(|e| e.to_string())?;
                    ensure(unmet_goals::<ExactFraction>(&after, &p.expected_set, &req.goals, &cat).is_empty(), || {
                        format!("fixture {fixtures}: goals unmet")
                    })?;
                }
            }
            (Err(a), Err(b)) => ensure(a.reason == b.reason, || format!("fixture {fixtures}: {:?} vs {:?}", a.reason, b.reason))?,
            (a, b) => return Err(format!("fixture {fixtures}: feasibility differs ({} vs {})", a.is_ok(), b.is_ok())),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(feasible >= 50, || format!("only {feasible} feasible fixtures"))?;
    ensure(secs < 30.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{fixtures} fixtures of 12 controls ({feasible} feasible) match, {secs:.2} s"))
}

/// Drift disables or misconfigures an expected control; the loop repairs it within a tick.
fn closed_loop_recovery() -> Check {
    let cat = catalog();
    let mapping = load_mapping(&std::fs::read(root().join("config/level_mapping.json")).unwrap()).unwrap().with_catalog_defaults(&cat);
    let sc = load_scenario(&root().join("scenarios/drift"), &cat, None).map_err(|e| e.to_string())?;
    let mut lp = ControlLoop::<ExactFraction>::new(LoopConfig::default(), cat, mapping, &sc);
    lp.submit(&parse_turtle(&std::fs::read(root().join("corpus/intents/driftAssurance.ttl")).unwrap()).unwrap())
        .map_err(|e| e.to_string())?;
    let outs: Vec<_> = (0..60).map(|_| lp.run_tick()).collect();
    let one = ExactFraction::from_integer(1);
    let mut notes = Vec::new();
    for (t, nf) in [(20u64, "gnb-d1"), (40, "gnb-d2")] {
        let expected = lp.expected_set(nf).unwrap().ids().len() as i64;
        let sc_cv = |tick: u64| {
            outs[tick as usize - 1].metrics.iter().find(|m| m.nf_id == nf && m.metric == MetricId::ScCv).map(|m| m.value)
        };
        ensure(sc_cv(t - 1) == Some(one), || format!("{nf}: sc_cv before drift {:?}", sc_cv(t - 1)))?;
        ensure(sc_cv(t) == Some(one - ExactFraction::new(1, expected)), || format!("{nf}: sc_cv at {t} is {:?}", sc_cv(t)))?;
        ensure(sc_cv(t + 1) == Some(one), || format!("{nf}: sc_cv at {} is {:?}", t + 1, sc_cv(t + 1)))?;
        let rep = |tick: u64| outs[tick as usize - 1].reports.iter().find(|r| r.metrics.iter().any(|m| m.nf_id == nf)).map(|r| (r.state, r.status));
        ensure(rep(t - 1) == Some((LifecycleState::Active, Status::Compliant)), || format!("report before {t}: {:?}", rep(t - 1)))?;
        ensure(rep(t) == Some((LifecycleState::Degraded, Status::NonCompliant)), || format!("report at {t}: {:?}", rep(t)))?;
        ensure(rep(t + 1) == Some((LifecycleState::Active, Status::Compliant)), || format!("report at {}: {:?}", t + 1, rep(t + 1)))?;
        notes.push(format!("{nf} 1 -> {}/{expected} at {t} -> 1 at {}", expected - 1, t + 1));
    }
    Ok(notes.join("; "))
}

fn performance_targets() -> BTreeMap<String, Target> {
    let g = parse_turtle(&std::fs::read(root().join("corpus/intents/performanceGoals.ttl")).unwrap()).unwrap();
    let intent = from_graph(&g).unwrap().intents.remove(0);
    intent.expectations.iter().filter_map(|e| e.target.map(|t| (e.id.clone(), t))).collect()
}

/// Inclusive and exclusive edges of the three performance goals.
fn performance_thresholds() -> Check {
    let targets = performance_targets();
    let grace = ExactFraction::new(1, 20);
    let budget = r#"{"cpu_pct": 1, "latency_ms_added": 1, "bandwidth_overhead_pct": 1}"#;
    let nfs: Vec<String> = (1..=4)
        .map(|i| {
            let installed = if i == 1 { r#"[{"control": "transport_firewall"}]"# } else { "[]" };
            format!(r#"{{"id": "n{i}", "nf_type": "gnb", "location_area": "P", "surfaces": ["transport"], "installed": {installed}, "budget": {budget}}}"#)
        })
        .collect();
    let inv = load_inventory(format!(r#"{{"nfs": [{}]}}"#, nfs.join(",")).as_bytes(), &catalog()).map_err(|e| e.to_string())?;
    let pair = |a: u8, b: u8| (format!("n{a}"), format!("n{b}"));
    let policy = SegmentationPolicy { pairs: vec![pair(1, 2), pair(1, 3), pair(2, 3), pair(2, 4), pair(3, 4)] };
    let seg = segmentation_level::<ExactFraction>(&inv, &catalog(), &policy).map_err(|e| e.to_string())?;
    ensure(seg == ExactFraction::new(2, 5), || format!("segmentation {seg}"))?;
    ensure(status_of(seg, &targets["segmentation"], grace) == Status::Compliant, || "segmentation 0.4 not compliant".into())?;

    let rec = |id: &str, start: u64, delay: u64, succeeded: bool| AttackRecord {
        attack_id: id.into(),
        nf_id: "n1".into(),
        surface: AttackSurface::AirInterfaceCp,
        start_ms: start,
        detected_ms: Some(start + delay),
        succeeded,
    };
    let attacks = vec![rec("a", 100, 150, false), rec("b", 1100, 180, false), rec("c", 2100, 300, true)];
    let mttd = mean_time_to_detect::<ExactFraction>(&attacks, Window::new(4000, 4000)).value().ok_or("no mttd")?;
    ensure(mttd == ExactFraction::from_integer(210), || format!("mttd {mttd}"))?;
    ensure(status_of(mttd, &targets["detection-speed"], grace) == Status::NonCompliant, || "mttd 210 accepted".into())?;

    let many: Vec<_> = (0..10).map(|i| rec(&format!("r{i}"), 100 * i + 100, 50, i < 3)).collect();
    let rob = robustness_level::<ExactFraction>("n1", &many, Window::new(4000, 4000)).value().ok_or("no robustness")?;
    ensure(rob == ExactFraction::new(7, 10), || format!("robustness {rob}"))?;
    ensure(status_of(rob, &targets["robustness"], grace) == Status::Compliant, || "robustness 0.7 rejected".into())?;
    Ok("segmentation 0.4 compliant, mttd 210 ms non-compliant, robustness 0.7 compliant".into())
}

/// Corpus files survive parse, serialize, parse; use-case intents have the documented fields.
fn turtle_round_trip() -> Check {
    let mut files: Vec<PathBuf> = std::fs::read_dir(root().join("corpus/intents")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    for p in &files {
        let g = parse_turtle(&std::fs::read(p).unwrap()).map_err(|e| format!("{}: {e}", p.display()))?;
        let g2 = parse_turtle(&serialize_turtle(&g)).map_err(|e| format!("{}: reparse {e}", p.display()))?;
        ensure(isomorphic(&g, &g2), || format!("{} not isomorphic", p.display()))?;
        let intents = from_graph(&g).map_err(|e| e.to_string())?.intents;
        ensure(from_graph(&to_graph(&intents)).map(|x| x.intents).ok() == Some(intents.clone()), || {
            format!("{} projection round trip", p.display())
        })?;
    }
    let load = |name: &str| -> Intent {
        let g = parse_turtle(&std::fs::read(root().join("corpus/intents").join(name)).unwrap()).unwrap();
        from_graph(&g).unwrap().intents.remove(0)
    };
    let coverage = |i: &Intent| {
        i.expectations.iter().filter(|e| e.kind == ExpectationKind::ProtectionCoverage).map(|e| (e.level, e.surface)).collect::<Vec<_>>()
    };
    let a = load("useCaseA.ttl");
    ensure(a.kind == IntentKind::Operations, || "useCaseA kind".into())?;
    ensure(a.scope == TargetScope::new(["gnb", "enb"], "A"), || format!("useCaseA scope {:?}", a.scope))?;
    ensure(coverage(&a) == vec![(Some(QualitativeLevel::Advanced), Some(SurfaceSelector::AirInterface))], || "useCaseA coverage".into())?;
    let b = load("useCaseB.ttl");
    ensure(b.scope == TargetScope::new(["gnb"], "B"), || format!("useCaseB scope {:?}", b.scope))?;
    ensure(coverage(&b) == vec![(Some(QualitativeLevel::Enhanced), Some(SurfaceSelector::AirInterface))], || "useCaseB coverage".into())?;
    Ok(format!("{} corpus files isomorphic after round trip; use-case fields match", files.len()))
}

/// Two runs with the same seed write identical output directories.
fn determinism() -> Check {
    let runs: &[(&str, &[&str])] = &[("usecase_ab", &["useCaseA.ttl", "useCaseB.ttl"]), ("drift", &["driftAssurance.ttl"])];
    for (scenario, intents) in runs {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&manifest(scenario, intents, 200, d1.path()));
        run(&manifest(scenario, intents, 200, d2.path()));
        for f in [REPORTS_FILE, EVENTS_FILE, METRICS_FILE, SUMMARY_FILE] {
            let a = std::fs::read(d1.path().join(f)).map_err(|e| format!("{scenario}/{f}: {e}"))?;
            let b = std::fs::read(d2.path().join(f)).map_err(|e| format!("{scenario}/{f}: {e}"))?;
            ensure(!a.is_empty() && a == b, || format!("{scenario}/{f} differs"))?;
        }
    }
    Ok("usecase_ab and drift outputs byte-identical across two runs".into())
}

/// All 81 state pairs behave per the relation; every scenario's audit trail is legal.
fn lifecycle_legality() -> Check {
    use LifecycleState::*;
    let edges = [
        (Received, Validated),
        (Received, Rejected),
        (Validated, Decomposed),
        (Validated, Planning),
        (Decomposed, Planning),
        (Planning, Active),
        (Planning, Rejected),
        (Active, Degraded),
        (Degraded, Active),
        (Active, Fulfilled),
    ];
    let legal = |f: LifecycleState, t: LifecycleState| (t == Withdrawn && f != Withdrawn) || edges.contains(&(f, t));
    for from in LifecycleState::ALL {
        for to in LifecycleState::ALL {
            let mut i = Intent::new(
                Iri::new("https://operator.example/intents/l").unwrap(),
                IntentKind::Operations,
                TargetScope::new(["gnb"], "A"),
                vec![secintent_core::intent::Expectation::goal("g", MetricId::AsCv, Target::at_least(0.5))],
            );
            i.state = from;
            match i.transition(to, 0, "check") {
                Ok(_) => ensure(legal(from, to), || format!("{from} -> {to} accepted"))?,
                Err(e) => ensure(!legal(from, to) && e.from == from && e.to == to, || format!("{from} -> {to} rejected"))?,
            }
        }
    }
    let runs: &[(&str, &[&str])] = &[
        ("usecase_ab", &["useCaseA.ttl", "useCaseB.ttl"]),
        ("drift", &["driftAssurance.ttl"]),
        ("infeasible", &["tightLatency.ttl"]),
        ("performance", &["performanceGoals.ttl"]),
    ];
    let mut transitions = 0;
    for (scenario, intents) in runs {
        let dir = tempfile::tempdir().unwrap();
        let (_, summary) = run(&manifest(scenario, intents, 120, dir.path()));
        for intent in summary["intents"].as_array().ok_or("no summary")? {
            let mut state = Received;
            for t in intent["transitions"].as_array().unwrap() {
                let from: LifecycleState = serde_json::from_value(t["from"].clone()).unwrap();
                let to: LifecycleState = serde_json::from_value(t["to"].clone()).unwrap();
                ensure(from == state && legal(from, to), || format!("{scenario}: {} {from} -> {to}", intent["intent"]))?;
                state = to;
                transitions += 1;
            }
        }
    }
    Ok(format!("81 pairs checked, {transitions} audited transitions legal"))
}

fn main() {
    let checks: [(&str, fn() -> Check); 8] = [
        ("coverage formulas", coverage_formulas),
        ("use-case differentiation", use_case_differentiation),
        ("planner optimality", planner_optimality),
        ("closed-loop recovery", closed_loop_recovery),
        ("performance thresholds", performance_thresholds),
        ("turtle round trip", turtle_round_trip),
        ("determinism", determinism),
        ("lifecycle legality", lifecycle_legality),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
