use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secintent_core::catalog::{
    load_inventory, AttackSurface, Catalog, Cost, InstalledControl, NetworkFunction, SecurityControl, SecurityProperty,
};
use secintent_core::intent::{from_graph, Comparator, QualitativeLevel, Unit};
use secintent_core::metrics::{
    attack_surface_coverage, mean_time_to_detect, robustness_level, security_control_coverage, segmentation_level,
    status_of, AttackRecord, ExpectedControlSet, SegmentationPolicy, Status, Window,
};
use secintent_core::rdf::parse_turtle;
use secintent_core::{ExactFraction, Scalar};

struct Case {
    nf: NetworkFunction,
    expected: ExpectedControlSet,
    /// (control, surfaces on the NF) as drawn, kept apart from the expected set.
    expected_controls: Vec<(String, BTreeSet<AttackSurface>)>,
    pinned: BTreeMap<String, u64>,
}

fn random_case(rng: &mut ChaCha8Rng) -> (Case, Catalog) {
    let mut all = AttackSurface::ALL.to_vec();
    all.shuffle(rng);
    let surfaces: BTreeSet<_> = all[..rng.gen_range(1..=6)].iter().copied().collect();
    let controls: Vec<SecurityControl> = (0..rng.gen_range(0..=8))
        .map(|i| SecurityControl {
            id: format!("k{i}"),
            name: format!("k{i}"),
            surfaces: (0..rng.gen_range(1..=3)).map(|_| AttackSurface::ALL[rng.gen_range(0..6)]).collect(),
            properties: BTreeSet::from([SecurityProperty::Logging]),
            tier: QualitativeLevel::Basic,
            cost: Cost::default(),
            detection_latency_ms: None,
            dependencies: BTreeSet::new(),
        })
        .collect();
    let catalog = Catalog::from_controls(1, controls.clone()).unwrap();
    let mut nf = NetworkFunction {
        id: "nf".into(),
        nf_type: "gnb".into(),
        location_area: "A".into(),
        surfaces: surfaces.clone(),
        installed: BTreeMap::new(),
        budget: Cost::default(),
    };
    let mut expected_controls = Vec::new();
    let mut pinned = BTreeMap::new();
    for c in &controls {
        let on_nf: BTreeSet<_> = c.surfaces.intersection(&surfaces).copied().collect();
        if rng.gen_bool(0.7) {
            nf.installed.insert(c.id.clone(), InstalledControl { enabled: rng.gen_bool(0.6), version: rng.gen_range(1..=3) });
        }
        if !on_nf.is_empty() && rng.gen_bool(0.6) {
            expected_controls.push((c.id.clone(), on_nf));
            if rng.gen_bool(0.5) {
                pinned.insert(c.id.clone(), rng.gen_range(1..=3));
            }
        }
    }
    let ids: Vec<String> = expected_controls.iter().map(|(id, _)| id.clone()).collect();
    let mut expected = ExpectedControlSet::from_controls(&nf, &catalog, &ids);
    expected.expected_versions = pinned.clone();
    (Case { nf, expected, expected_controls, pinned }, catalog)
}

/// Counts straight from the drawn data, without the metric module.
fn brute_force(case: &Case) -> (ExactFraction, ExactFraction) {
    let enabled = |id: &str| case.nf.installed.get(id).is_some_and(|s| s.enabled);
    let mut covered = 0i64;
    for s in &case.nf.surfaces {
        if case.expected_controls.iter().any(|(id, on)| on.contains(s) && enabled(id)) {
            covered += 1;
        }
    }
    let as_cv = ExactFraction::new(covered, case.nf.surfaces.len() as i64);
    if case.expected_controls.is_empty() {
        return (as_cv, ExactFraction::from_integer(1));
    }
    let implemented = case
        .expected_controls
        .iter()
        .filter(|(id, _)| {
            enabled(id) && case.pinned.get(id).is_none_or(|v| case.nf.installed[id.as_str()].version == *v)
        })
        .count() as i64;
    (as_cv, ExactFraction::new(implemented, case.expected_controls.len() as i64))
}

#[test]
fn coverage_metrics_match_recount() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut partial = 0;
    for n in 0..200 {
        let (case, _catalog) = random_case(&mut rng);
        let (as_cv, sc_cv) = brute_force(&case);
        assert_eq!(attack_surface_coverage::<ExactFraction>(&case.nf, &case.expected).unwrap(), as_cv, "case {n}");
        assert_eq!(security_control_coverage::<ExactFraction>(&case.nf, &case.expected), sc_cv, "case {n}");
        if *as_cv.numer() != 0 && as_cv != ExactFraction::from_integer(1) {
            partial += 1;
        }
    }
    assert!(partial > 20, "fixtures rarely produce partial coverage ({partial})");
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn coverage_worked_examples() {
    // Four surfaces, two covered; two of three expected controls enabled.
    let json = br#"{"nfs": [{"id": "g", "nf_type": "gnb", "location_area": "A",
        "surfaces": ["air_interface_cp", "air_interface_up", "transport", "management"],
        "installed": [{"control": "a"}, {"control": "b"}, {"control": "c", "enabled": false}],
        "budget": {"cpu_pct": 1, "latency_ms_added": 1, "bandwidth_overhead_pct": 1}}]}"#;
    let control = |id: &str, s: AttackSurface| SecurityControl {
        id: id.into(),
        name: id.into(),
        surfaces: BTreeSet::from([s]),
        properties: BTreeSet::from([SecurityProperty::Logging]),
        tier: QualitativeLevel::Basic,
        cost: Cost::default(),
        detection_latency_ms: None,
        dependencies: BTreeSet::new(),
    };
    let catalog = Catalog::from_controls(
        1,
        vec![
            control("a", AttackSurface::AirInterfaceCp),
            control("b", AttackSurface::Transport),
            control("c", AttackSurface::Management),
        ],
    )
    .unwrap();
    let inv = load_inventory(json, &catalog).unwrap();
    let nf = inv.get("g").unwrap();
    let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let expected = ExpectedControlSet::from_controls(nf, &catalog, &ids);
    assert_eq!(attack_surface_coverage::<ExactFraction>(nf, &expected).unwrap(), ExactFraction::new(1, 2));
    assert_eq!(security_control_coverage::<ExactFraction>(nf, &expected), ExactFraction::new(2, 3));
    assert_eq!(security_control_coverage::<ExactFraction>(nf, &ExpectedControlSet::empty("g")), ExactFraction::from_integer(1));
    assert_eq!(attack_surface_coverage::<f64>(nf, &expected).unwrap().fixed4(), "0.5000");
}

fn corpus_targets() -> BTreeMap<String, (Comparator, Unit)> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/intents/performanceGoals.ttl");
    let g = parse_turtle(&std::fs::read(path).unwrap()).unwrap();
    let intent = from_graph(&g).unwrap().intents.remove(0);
    intent
        .expectations
        .iter()
        .filter_map(|e| e.target.map(|t| (e.id.clone(), (t.comparator, t.unit))))
        .collect()
}

fn target_of(id: &str) -> secintent_core::intent::Target {
    let (comparator, unit) = corpus_targets()[id];
    secintent_core::intent::Target { comparator, unit }
}

#[test]
fn segmentation_at_exactly_forty_percent_is_compliant() {
    // Five required pairs, two of them isolated by a segmenting control.
    let json = br#"{"nfs": [
        {"id": "n1", "nf_type": "gnb", "location_area": "P", "surfaces": ["transport"],
         "installed": [{"control": "seg"}], "budget": {"cpu_pct": 1, "latency_ms_added": 1, "bandwidth_overhead_pct": 1}},
        {"id": "n2", "nf_type": "gnb", "location_area": "P", "surfaces": ["transport"],
         "budget": {"cpu_pct": 1, "latency_ms_added": 1, "bandwidth_overhead_pct": 1}},
        {"id": "n3", "nf_type": "gnb", "location_area": "P", "surfaces": ["transport"],
         "budget": {"cpu_pct": 1, "latency_ms_added": 1, "bandwidth_overhead_pct": 1}},
        {"id": "n4", "nf_type": "gnb", "location_area": "P", "surfaces": ["transport"],
         "budget": {"cpu_pct": 1, "latency_ms_added": 1, "bandwidth_overhead_pct": 1}}]}"#;
    let seg = SecurityControl {
        id: "seg".into(),
        name: "seg".into(),
        surfaces: BTreeSet::from([AttackSurface::Transport]),
        properties: BTreeSet::from([SecurityProperty::Segmentation]),
        tier: QualitativeLevel::Basic,
        cost: Cost::default(),
        detection_latency_ms: None,
        dependencies: BTreeSet::new(),
    };
    let catalog = Catalog::from_controls(1, vec![seg]).unwrap();
    let inv = load_inventory(json, &catalog).unwrap();
    let pair = |a: &str, b: &str| (a.to_string(), b.to_string());
    let policy = SegmentationPolicy {
        pairs: vec![pair("n1", "n2"), pair("n1", "n3"), pair("n2", "n3"), pair("n2", "n4"), pair("n3", "n4")],
    };
    let level = segmentation_level::<ExactFraction>(&inv, &catalog, &policy).unwrap();
    assert_eq!(level, ExactFraction::new(2, 5));

    let target = target_of("segmentation");
    assert_eq!(target.unit, Unit::Percent);
    assert_eq!(target.comparator, Comparator::GreaterOrEqual { value: 0.4 });
    assert_eq!(status_of(level, &target, ExactFraction::new(1, 20)), Status::Compliant);
    assert_eq!(status_of(ExactFraction::new(39, 100), &target, ExactFraction::new(1, 20)), Status::NonCompliant);
}

fn attack(id: &str, start_ms: u64, delay: Option<u64>, succeeded: bool) -> AttackRecord {
    AttackRecord {
        attack_id: id.into(),
        nf_id: "n1".into(),
        surface: AttackSurface::AirInterfaceCp,
        start_ms,
        detected_ms: delay.map(|d| start_ms + d),
        succeeded,
    }
}

#[test]
fn mean_detection_time_of_210_ms_misses_200_ms() {
    let events = vec![attack("a", 1000, Some(150), false), attack("b", 2000, Some(180), false), attack("c", 3000, Some(300), true)];
    let window = Window::new(5000, 5000);
    let mttd = mean_time_to_detect::<ExactFraction>(&events, window).value().unwrap();
    assert_eq!(mttd, ExactFraction::from_integer(210));
    let target = target_of("detection-speed");
    assert_eq!(target.comparator, Comparator::LessOrEqual { value: 200.0 });
    assert_eq!(status_of(mttd, &target, ExactFraction::new(1, 20)), Status::NonCompliant);
    assert_eq!(status_of(ExactFraction::from_integer(200), &target, ExactFraction::new(1, 20)), Status::Compliant);
}

#[test]
fn robustness_of_seventy_percent_meets_sixty() {
    let events: Vec<_> = (0..10).map(|i| attack(&format!("x{i}"), 100 * i + 100, None, i < 3)).collect();
    let r = robustness_level::<ExactFraction>("n1", &events, Window::new(2000, 2000)).value().unwrap();
    assert_eq!(r, ExactFraction::new(7, 10));
    let target = target_of("robustness");
    assert_eq!(target.comparator, Comparator::GreaterOrEqual { value: 0.6 });
    assert_eq!(status_of(r, &target, ExactFraction::new(1, 20)), Status::Compliant);
}
