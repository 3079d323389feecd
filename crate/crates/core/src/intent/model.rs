use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lifecycle::{AuditEntry, LifecycleState};
use crate::catalog::{AttackSurface, SecurityProperty};
use crate::rdf::Iri;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentKind {
    Service,
    Operations,
}

/// Qualitative protection tier. Ordered `Basic < Enhanced < Advanced`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualitativeLevel {
    Basic,
    Enhanced,
    Advanced,
}

impl QualitativeLevel {
    pub const ALL: [QualitativeLevel; 3] =
        [QualitativeLevel::Basic, QualitativeLevel::Enhanced, QualitativeLevel::Advanced];

    pub fn as_str(self) -> &'static str {
        match self {
            QualitativeLevel::Basic => "basic",
            QualitativeLevel::Enhanced => "enhanced",
            QualitativeLevel::Advanced => "advanced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

/// Either a single attack surface or the radio air interface as a whole
/// (control plane and user plane).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceSelector {
    Surface(AttackSurface),
    AirInterface,
}

impl SurfaceSelector {
    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceSelector::Surface(s) => s.as_str(),
            SurfaceSelector::AirInterface => "air_interface",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "air_interface" {
            return Some(SurfaceSelector::AirInterface);
        }
        AttackSurface::parse(s).map(SurfaceSelector::Surface)
    }

    pub fn members(self) -> BTreeSet<AttackSurface> {
        match self {
            SurfaceSelector::Surface(s) => BTreeSet::from([s]),
            SurfaceSelector::AirInterface => {
                BTreeSet::from([AttackSurface::AirInterfaceCp, AttackSurface::AirInterfaceUp])
            }
        }
    }
}

impl Serialize for SurfaceSelector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SurfaceSelector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SurfaceSelector::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown surface '{s}'")))
    }
}

impl fmt::Display for SurfaceSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Observable quantities an expectation can target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    /// Attack surface coverage.
    AsCv,
    /// Security control coverage.
    ScCv,
    SegmentationLevel,
    RobustnessLevel,
    MttdMs,
    /// Fraction of the required security properties provided on a surface.
    PropertyCoverage,
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        MetricId::AsCv,
        MetricId::ScCv,
        MetricId::SegmentationLevel,
        MetricId::RobustnessLevel,
        MetricId::MttdMs,
        MetricId::PropertyCoverage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::AsCv => "as_cv",
            MetricId::ScCv => "sc_cv",
            MetricId::SegmentationLevel => "segmentation_level",
            MetricId::RobustnessLevel => "robustness_level",
            MetricId::MttdMs => "mttd_ms",
            MetricId::PropertyCoverage => "property_coverage",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn is_time(self) -> bool {
        self == MetricId::MttdMs
    }

    pub fn canonical_unit(self) -> Unit {
        if self.is_time() {
            Unit::Milliseconds
        } else {
            Unit::Fraction
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Fraction,
    Percent,
    Milliseconds,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Fraction => "fraction",
            Unit::Percent => "percent",
            Unit::Milliseconds => "milliseconds",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Unit::Fraction, Unit::Percent, Unit::Milliseconds].into_iter().find(|u| u.as_str() == s)
    }

    /// Converts a value written in this unit to its internal form
    /// (fractions for ratios, milliseconds for durations).
    pub fn normalize(self, value: f64) -> f64 {
        match self {
            Unit::Percent => value / 100.0,
            _ => value,
        }
    }

    pub fn denormalize(self, value: f64) -> f64 {
        match self {
            Unit::Percent => (value * 100.0 * 1e9).round() / 1e9,
            _ => value,
        }
    }
}

/// Comparison against normalized values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Comparator {
    GreaterOrEqual { value: f64 },
    LessOrEqual { value: f64 },
    /// Closed interval.
    InRange { lower: f64, upper: f64 },
}

impl Comparator {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Comparator::GreaterOrEqual { value } | Comparator::LessOrEqual { value } => vec![value],
            Comparator::InRange { lower, upper } => vec![lower, upper],
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparator::GreaterOrEqual { value } => write!(f, ">= {value}"),
            Comparator::LessOrEqual { value } => write!(f, "<= {value}"),
            Comparator::InRange { lower, upper } => write!(f, "in [{lower}, {upper}]"),
        }
    }
}

/// Quantified target: comparator over normalized values plus the unit the
/// author wrote them in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub comparator: Comparator,
    pub unit: Unit,
}

impl Target {
    pub fn at_least(value: f64) -> Self {
        Target { comparator: Comparator::GreaterOrEqual { value }, unit: Unit::Fraction }
    }

    pub fn at_most_ms(value: f64) -> Self {
        Target { comparator: Comparator::LessOrEqual { value }, unit: Unit::Milliseconds }
    }

    pub fn in_range(lower: f64, upper: f64) -> Self {
        Target { comparator: Comparator::InRange { lower, upper }, unit: Unit::Fraction }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationKind {
    Delivery,
    ProtectionCoverage,
    PerformanceGoal,
    Reporting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub id: String,
    pub kind: ExpectationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<QualitativeLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSelector>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub required_properties: BTreeSet<SecurityProperty>,
    /// Whole loop ticks; absent means every tick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reporting_interval: Option<u32>,
}

impl Expectation {
    fn bare(id: impl Into<String>, kind: ExpectationKind) -> Self {
        Expectation {
            id: id.into(),
            kind,
            level: None,
            metric: None,
            target: None,
            surface: None,
            required_properties: BTreeSet::new(),
            reporting_interval: None,
        }
    }

    pub fn delivery(id: impl Into<String>) -> Self {
        Self::bare(id, ExpectationKind::Delivery)
    }

    pub fn protection(id: impl Into<String>, level: QualitativeLevel, surface: Option<SurfaceSelector>) -> Self {
        Expectation { level: Some(level), surface, ..Self::bare(id, ExpectationKind::ProtectionCoverage) }
    }

    pub fn goal(id: impl Into<String>, metric: MetricId, target: Target) -> Self {
        Expectation { metric: Some(metric), target: Some(target), ..Self::bare(id, ExpectationKind::PerformanceGoal) }
    }

    pub fn reporting(id: impl Into<String>, interval: Option<u32>) -> Self {
        Expectation { reporting_interval: interval, ..Self::bare(id, ExpectationKind::Reporting) }
    }

    pub fn with_surface(mut self, surface: SurfaceSelector) -> Self {
        self.surface = Some(surface);
        self
    }

    pub fn with_target(mut self, target: Target) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_properties(mut self, props: impl IntoIterator<Item = SecurityProperty>) -> Self {
        self.required_properties = props.into_iter().collect();
        self
    }

    /// A qualitative expectation that still needs translation into goals.
    pub fn is_qualitative(&self) -> bool {
        self.kind == ExpectationKind::ProtectionCoverage && self.level.is_some()
    }

    /// Carries a measurable target.
    pub fn is_quantified(&self) -> bool {
        self.target.is_some()
    }

    /// Metric this expectation's target applies to. Quantified protection
    /// coverage targets always concern attack surface coverage.
    pub fn effective_metric(&self) -> Option<MetricId> {
        match self.kind {
            ExpectationKind::PerformanceGoal => self.metric,
            ExpectationKind::ProtectionCoverage if self.target.is_some() => Some(self.metric.unwrap_or(MetricId::AsCv)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "resource", content = "max", rename_all = "snake_case")]
pub enum ResourceConstraint {
    CpuPctMax(f64),
    LatencyMsAddedMax(f64),
    BandwidthOverheadPctMax(f64),
}

impl ResourceConstraint {
    pub fn limit(&self) -> f64 {
        match *self {
            ResourceConstraint::CpuPctMax(v)
            | ResourceConstraint::LatencyMsAddedMax(v)
            | ResourceConstraint::BandwidthOverheadPctMax(v) => v,
        }
    }

    pub fn resource(&self) -> crate::catalog::Resource {
        use crate::catalog::Resource;
        match self {
            ResourceConstraint::CpuPctMax(_) => Resource::CpuPct,
            ResourceConstraint::LatencyMsAddedMax(_) => Resource::LatencyMsAdded,
            ResourceConstraint::BandwidthOverheadPctMax(_) => Resource::BandwidthOverheadPct,
        }
    }

    pub fn new(resource: crate::catalog::Resource, limit: f64) -> Self {
        use crate::catalog::Resource;
        match resource {
            Resource::CpuPct => ResourceConstraint::CpuPctMax(limit),
            Resource::LatencyMsAdded => ResourceConstraint::LatencyMsAddedMax(limit),
            Resource::BandwidthOverheadPct => ResourceConstraint::BandwidthOverheadPctMax(limit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScope {
    pub nf_types: BTreeSet<String>,
    pub location_area: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_surface_filter: Option<BTreeSet<AttackSurface>>,
}

impl TargetScope {
    pub fn new<I, S>(nf_types: I, location_area: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TargetScope {
            nf_types: nf_types.into_iter().map(Into::into).collect(),
            location_area: location_area.into(),
            attack_surface_filter: None,
        }
    }

    pub fn matches(&self, nf_type: &str, location_area: &str) -> bool {
        self.nf_types.contains(nf_type) && self.location_area == location_area
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intent {
    pub id: Iri,
    pub kind: IntentKind,
    pub scope: TargetScope,
    pub expectations: Vec<Expectation>,
    #[serde(default)]
    pub constraints: Vec<ResourceConstraint>,
    pub state: LifecycleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Iri>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<AuditEntry>,
}

impl Intent {
    pub fn new(id: Iri, kind: IntentKind, scope: TargetScope, expectations: Vec<Expectation>) -> Self {
        Intent {
            id,
            kind,
            scope,
            expectations,
            constraints: Vec::new(),
            state: LifecycleState::Received,
            parent: None,
            audit: Vec::new(),
        }
    }

    pub fn id_str(&self) -> &str {
        self.id.as_str()
    }

    pub fn has_delivery(&self) -> bool {
        self.expectations.iter().any(|e| e.kind == ExpectationKind::Delivery)
    }

    /// Needs decomposition before it can be planned: a service intent, or
    /// any intent still carrying qualitative protection levels.
    pub fn needs_decomposition(&self) -> bool {
        self.kind == IntentKind::Service || self.expectations.iter().any(Expectation::is_qualitative)
    }

    pub fn reporting_interval(&self) -> u32 {
        self.expectations
            .iter()
            .filter(|e| e.kind == ExpectationKind::Reporting)
            .filter_map(|e| e.reporting_interval)
            .min()
            .unwrap_or(1)
    }

    /// Tighter bound per resource.
    pub fn resource_limits(&self) -> BTreeMap<crate::catalog::Resource, f64> {
        let mut limits = BTreeMap::new();
        for c in &self.constraints {
            let e = limits.entry(c.resource()).or_insert(c.limit());
            if c.limit() < *e {
                *e = c.limit();
            }
        }
        limits
    }

    /// Semantic equality ignoring lifecycle bookkeeping.
    pub fn same_content(&self, other: &Intent) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.scope == other.scope
            && self.expectations == other.expectations
            && self.constraints == other.constraints
            && self.parent == other.parent
    }
}

/// A violated invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation { field: field.into(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every structural invariant of an intent. Empty means valid.
pub fn validate(intent: &Intent) -> Vec<Violation> {
    let mut out = Vec::new();
    if intent.scope.nf_types.is_empty() {
        out.push(Violation::new("scope.nf_types", "must name at least one NF type"));
    }
    if intent.scope.nf_types.iter().any(|t| t.trim().is_empty()) {
        out.push(Violation::new("scope.nf_types", "NF type tags must be non-empty"));
    }
    if intent.scope.location_area.trim().is_empty() {
        out.push(Violation::new("scope.location_area", "must be non-empty"));
    }
    if intent.expectations.is_empty() {
        out.push(Violation::new("expectations", "must contain at least one expectation"));
    } else if intent.expectations.iter().all(|e| e.kind == ExpectationKind::Reporting) {
        out.push(Violation::new("expectations", "needs at least one non-reporting expectation"));
    }
    let mut ids = BTreeSet::new();
    for e in &intent.expectations {
        if !ids.insert(e.id.as_str()) {
            out.push(Violation::new(format!("expectations[{}].id", e.id), "duplicate expectation id"));
        }
        validate_expectation(e, &mut out);
    }
    for c in &intent.constraints {
        if !(c.limit() >= 0.0) || !c.limit().is_finite() {
            out.push(Violation::new(
                format!("constraints.{}", c.resource().as_str()),
                "limit must be a finite non-negative number",
            ));
        }
    }
    if intent.parent.is_some() && intent.kind == IntentKind::Service {
        out.push(Violation::new("parent", "only operations intents are derived from a parent"));
    }
    out
}

fn validate_expectation(e: &Expectation, out: &mut Vec<Violation>) {
    let field = |name: &str| format!("expectations[{}].{name}", e.id);
    if e.id.trim().is_empty() {
        out.push(Violation::new("expectations[].id", "must be non-empty"));
    }
    match e.kind {
        ExpectationKind::ProtectionCoverage => {
            if e.level.is_none() && e.target.is_none() {
                out.push(Violation::new(field("level"), "protection coverage needs a level, a target, or both"));
            }
            if let Some(m) = e.metric {
                if m != MetricId::AsCv {
                    out.push(Violation::new(field("metric"), "protection coverage targets measure as_cv"));
                }
            }
            if !e.required_properties.is_empty() {
                out.push(Violation::new(field("required_properties"), "only property_coverage goals list properties"));
            }
        }
        ExpectationKind::PerformanceGoal => {
            if e.metric.is_none() {
                out.push(Violation::new(field("metric"), "performance goal requires a metric"));
            }
            if e.target.is_none() {
                out.push(Violation::new(field("target"), "performance goal requires a comparator and value"));
            }
            if e.level.is_some() {
                out.push(Violation::new(field("level"), "performance goals are quantitative only"));
            }
            if e.metric == Some(MetricId::PropertyCoverage) {
                if e.required_properties.is_empty() {
                    out.push(Violation::new(field("required_properties"), "property_coverage needs properties"));
                }
                if e.surface.is_none() {
                    out.push(Violation::new(field("surface"), "property_coverage needs a surface"));
                }
            } else if !e.required_properties.is_empty() {
                out.push(Violation::new(field("required_properties"), "only property_coverage goals list properties"));
            }
        }
        ExpectationKind::Reporting => {
            if e.reporting_interval == Some(0) {
                out.push(Violation::new(field("reporting_interval"), "must be at least 1 tick"));
            }
            if e.target.is_some() || e.level.is_some() || e.metric.is_some() {
                out.push(Violation::new(field("kind"), "reporting expectations carry no targets"));
            }
        }
        ExpectationKind::Delivery => {
            if e.target.is_some() || e.level.is_some() || e.metric.is_some() {
                out.push(Violation::new(field("kind"), "delivery expectations carry no targets"));
            }
        }
    }
    if let (Some(target), Some(metric)) = (e.target, e.effective_metric()) {
        validate_target(&target, metric, &field("target"), out);
    }
}

fn validate_target(target: &Target, metric: MetricId, field: &str, out: &mut Vec<Violation>) {
    let unit_ok = match metric {
        MetricId::MttdMs => target.unit == Unit::Milliseconds,
        _ => matches!(target.unit, Unit::Fraction | Unit::Percent),
    };
    if !unit_ok {
        out.push(Violation::new(
            field,
            format!("unit {} does not fit metric {}", target.unit.as_str(), metric.as_str()),
        ));
    }
    let values = target.comparator.values();
    if values.iter().any(|v| !v.is_finite()) {
        out.push(Violation::new(field, "values must be finite"));
        return;
    }
    if let Comparator::InRange { lower, upper } = target.comparator {
        if lower > upper {
            out.push(Violation::new(field, format!("range lower bound {lower} exceeds upper bound {upper}")));
        }
    }
    if unit_ok {
        let in_domain = if metric.is_time() {
            values.iter().all(|v| *v >= 0.0)
        } else {
            values.iter().all(|v| (0.0..=1.0).contains(v))
        };
        if !in_domain {
            out.push(Violation::new(field, "value outside the metric's domain"));
        }
    }
}
