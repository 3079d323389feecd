//! IRIs of the intent vocabulary. See `docs/vocabulary.md`.

use crate::catalog::{AttackSurface, Resource, SecurityProperty};
use crate::rdf::Iri;

use super::lifecycle::LifecycleState;
use super::model::{ExpectationKind, IntentKind, MetricId, QualitativeLevel, SurfaceSelector, Unit};

pub const NS: &str = "https://w3id.example/secintent#";
pub const PREFIX: &str = "icm";

pub fn iri(local: &str) -> Iri {
    Iri::new(format!("{NS}{local}")).expect("vocabulary IRIs are absolute")
}

/// Local name of `iri` when it lies in the vocabulary namespace.
pub fn local(iri: &Iri) -> Option<&str> {
    iri.as_str().strip_prefix(NS)
}

// Classes.
pub const INTENT: &str = "Intent";
pub const TARGET: &str = "Target";
pub const CONDITION: &str = "Condition";
pub const CONTEXT: &str = "Context";

// Properties.
pub const INTENT_KIND: &str = "intentKind";
pub const HAS_TARGET: &str = "target";
pub const NF_TYPE: &str = "nfType";
pub const LOCATION_AREA: &str = "locationArea";
pub const SURFACE_FILTER: &str = "attackSurfaceFilter";
pub const HAS_EXPECTATION: &str = "hasExpectation";
pub const EXPECTATION_ID: &str = "expectationId";
pub const PROTECTION_LEVEL: &str = "protectionLevel";
pub const ATTACK_SURFACE: &str = "attackSurface";
pub const REQUIRES_PROPERTY: &str = "requiresProperty";
pub const HAS_CONDITION: &str = "hasCondition";
pub const METRIC: &str = "metric";
pub const AT_LEAST: &str = "atLeast";
pub const AT_MOST: &str = "atMost";
pub const UNIT: &str = "unit";
pub const REPORTING_INTERVAL: &str = "reportingInterval";
pub const HAS_CONTEXT: &str = "hasContext";
pub const RESOURCE: &str = "resource";
pub const DERIVED_FROM: &str = "derivedFrom";
pub const LIFECYCLE_STATE: &str = "lifecycleState";

pub fn kind_term(kind: IntentKind) -> &'static str {
    match kind {
        IntentKind::Service => "ServiceIntent",
        IntentKind::Operations => "OperationsIntent",
    }
}

pub fn parse_kind(local: &str) -> Option<IntentKind> {
    [IntentKind::Service, IntentKind::Operations].into_iter().find(|k| kind_term(*k) == local)
}

pub fn expectation_class(kind: ExpectationKind) -> &'static str {
    match kind {
        ExpectationKind::Delivery => "DeliveryExpectation",
        ExpectationKind::ProtectionCoverage => "ProtectionCoverageExpectation",
        ExpectationKind::PerformanceGoal => "PropertyExpectation",
        ExpectationKind::Reporting => "ReportingExpectation",
    }
}

pub fn parse_expectation_class(local: &str) -> Option<ExpectationKind> {
    [
        ExpectationKind::Delivery,
        ExpectationKind::ProtectionCoverage,
        ExpectationKind::PerformanceGoal,
        ExpectationKind::Reporting,
    ]
    .into_iter()
    .find(|k| expectation_class(*k) == local)
}

pub fn level_term(level: QualitativeLevel) -> &'static str {
    match level {
        QualitativeLevel::Basic => "ProtectionCoverage-Basic",
        QualitativeLevel::Enhanced => "ProtectionCoverage-Enhanced",
        QualitativeLevel::Advanced => "ProtectionCoverage-Advanced",
    }
}

pub fn parse_level(local: &str) -> Option<QualitativeLevel> {
    QualitativeLevel::ALL.into_iter().find(|l| level_term(*l) == local)
}

pub fn state_term(state: LifecycleState) -> &'static str {
    match state {
        LifecycleState::Received => "Received",
        LifecycleState::Validated => "Validated",
        LifecycleState::Decomposed => "Decomposed",
        LifecycleState::Planning => "Planning",
        LifecycleState::Active => "Active",
        LifecycleState::Degraded => "Degraded",
        LifecycleState::Fulfilled => "Fulfilled",
        LifecycleState::Rejected => "Rejected",
        LifecycleState::Withdrawn => "Withdrawn",
    }
}

pub fn parse_state(local: &str) -> Option<LifecycleState> {
    LifecycleState::ALL.into_iter().find(|s| state_term(*s) == local)
}

// Surfaces, properties, metrics, units and resources reuse their snake_case
// identifiers as local names.

pub fn parse_surface(local: &str) -> Option<SurfaceSelector> {
    SurfaceSelector::parse(local)
}

pub fn parse_concrete_surface(local: &str) -> Option<AttackSurface> {
    AttackSurface::parse(local)
}

pub fn parse_property(local: &str) -> Option<SecurityProperty> {
    SecurityProperty::parse(local)
}

pub fn parse_metric(local: &str) -> Option<MetricId> {
    MetricId::parse(local)
}

pub fn parse_unit(local: &str) -> Option<Unit> {
    Unit::parse(local)
}

pub fn parse_resource(local: &str) -> Option<Resource> {
    Resource::parse(local)
}
