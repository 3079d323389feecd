//! Coverage and performance metrics, and compliance evaluation.
//!
//! Everything here is a pure function over a state snapshot and is generic
//! over [`Scalar`], so the same code yields exact rationals or floats.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{AttackSurface, Catalog, NetworkFunction, NfInventory, SecurityProperty};
use crate::intent::{Comparator, Expectation, Intent, MetricId, SurfaceSelector, Target};
use crate::scalar::{serialize_fixed4, serialize_opt_fixed4, Scalar};

/// Controls a plan designates for an NF, per protected surface.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpectedControlSet {
    pub nf_id: String,
    pub by_surface: BTreeMap<AttackSurface, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub required_properties: BTreeMap<AttackSurface, BTreeSet<SecurityProperty>>,
    /// Configuration version each control must carry to count as
    /// implemented. Controls without an entry only need to be enabled.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expected_versions: BTreeMap<String, u64>,
}

impl ExpectedControlSet {
    pub fn empty(nf_id: impl Into<String>) -> Self {
        ExpectedControlSet { nf_id: nf_id.into(), ..Default::default() }
    }

    /// Builds the per-surface map from a control set, restricted to the NF's surfaces.
    pub fn from_controls<'a>(
        nf: &NetworkFunction,
        catalog: &Catalog,
        controls: impl IntoIterator<Item = &'a String>,
    ) -> Self {
        let mut set = ExpectedControlSet::empty(nf.id.clone());
        for id in controls {
            if let Some(c) = catalog.get(id) {
                for s in c.surfaces.intersection(&nf.surfaces) {
                    set.by_surface.entry(*s).or_default().insert(id.clone());
                }
            }
        }
        set
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.by_surface.values().flatten().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.by_surface.values().all(BTreeSet::is_empty)
    }

    /// Installed, enabled, and at the expected configuration version.
    pub fn is_implemented(&self, nf: &NetworkFunction, id: &str) -> bool {
        match nf.installed.get(id) {
            Some(st) if st.enabled => self.expected_versions.get(id).is_none_or(|v| *v == st.version),
            _ => false,
        }
    }

    /// Pins each expected control's current version as the expected one.
    pub fn record_versions(&mut self, nf: &NetworkFunction) {
        self.expected_versions =
            self.ids().into_iter().filter_map(|id| nf.installed.get(&id).map(|st| (id, st.version))).collect();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("network function '{0}' has no attack surfaces")]
    EmptySurfaceSet(String),
    #[error("segmentation policy references unknown NF '{0}'")]
    UnknownNf(String),
}

/// Share of the NF's surfaces with at least one expected, enabled control.
pub fn attack_surface_coverage<S: Scalar>(nf: &NetworkFunction, expected: &ExpectedControlSet) -> Result<S, MetricError> {
    if nf.surfaces.is_empty() {
        return Err(MetricError::EmptySurfaceSet(nf.id.clone()));
    }
    let covered = nf
        .surfaces
        .iter()
        .filter(|s| expected.by_surface.get(s).is_some_and(|ids| ids.iter().any(|id| nf.is_enabled(id))))
        .count();
    Ok(S::ratio(covered as u64, nf.surfaces.len() as u64))
}

/// Share of the expected controls that are implemented. 1 for an empty set.
pub fn security_control_coverage<S: Scalar>(nf: &NetworkFunction, expected: &ExpectedControlSet) -> S {
    let ids = expected.ids();
    if ids.is_empty() {
        return S::one();
    }
    let implemented = ids.iter().filter(|id| expected.is_implemented(nf, id)).count();
    S::ratio(implemented as u64, ids.len() as u64)
}

/// Share of `required` provided on every member surface of `selector` by
/// enabled controls. Surfaces absent from the NF are not checked.
pub fn property_coverage<S: Scalar>(
    nf: &NetworkFunction,
    catalog: &Catalog,
    selector: SurfaceSelector,
    required: &BTreeSet<SecurityProperty>,
) -> S {
    if required.is_empty() {
        return S::one();
    }
    let surfaces: Vec<AttackSurface> = selector.members().into_iter().filter(|s| nf.surfaces.contains(s)).collect();
    let provided: BTreeSet<SecurityProperty> =
        surfaces.iter().flat_map(|s| nf.provided_properties(catalog, *s)).collect();
    let met = required.iter().filter(|p| provided.contains(p)).count();
    S::ratio(met as u64, required.len() as u64)
}

/// Pairs of NFs that must be isolated from each other.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentationPolicy {
    pub pairs: Vec<(String, String)>,
}

impl SegmentationPolicy {
    pub fn involves(&self, nf_id: &str) -> bool {
        self.pairs.iter().any(|(a, b)| a == nf_id || b == nf_id)
    }

    pub fn restricted_to(&self, nf_id: &str) -> SegmentationPolicy {
        SegmentationPolicy { pairs: self.pairs.iter().filter(|(a, b)| a == nf_id || b == nf_id).cloned().collect() }
    }
}

fn isolates(nf: &NetworkFunction, catalog: &Catalog) -> bool {
    nf.installed
        .iter()
        .filter(|(_, st)| st.enabled)
        .filter_map(|(id, _)| catalog.get(id))
        .any(|c| c.properties.contains(&SecurityProperty::Segmentation))
}

/// Share of required pairs with an enabled segmentation control on at
/// least one endpoint. 1 for an empty policy.
pub fn segmentation_level<S: Scalar>(
    inventory: &NfInventory,
    catalog: &Catalog,
    policy: &SegmentationPolicy,
) -> Result<S, MetricError> {
    if policy.pairs.is_empty() {
        return Ok(S::one());
    }
    let mut isolated = 0u64;
    for (a, b) in &policy.pairs {
        let na = inventory.get(a).ok_or_else(|| MetricError::UnknownNf(a.clone()))?;
        let nb = inventory.get(b).ok_or_else(|| MetricError::UnknownNf(b.clone()))?;
        if isolates(na, catalog) || isolates(nb, catalog) {
            isolated += 1;
        }
    }
    Ok(S::ratio(isolated, policy.pairs.len() as u64))
}

/// Simulated attack with its detection and outcome, timestamps in ms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub attack_id: String,
    pub nf_id: String,
    pub surface: AttackSurface,
    pub start_ms: u64,
    pub detected_ms: Option<u64>,
    pub succeeded: bool,
}

/// Observation window: attacks starting in `[end_ms - length_ms + 1, end_ms]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub end_ms: u64,
    pub length_ms: u64,
}

impl Window {
    pub fn new(end_ms: u64, length_ms: u64) -> Self {
        assert!(length_ms >= 1, "window must span at least 1 ms");
        Window { end_ms, length_ms }
    }

    pub fn contains(&self, t_ms: u64) -> bool {
        t_ms <= self.end_ms && t_ms + self.length_ms > self.end_ms
    }
}

/// A metric value, or the statement that there was nothing to measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observed<S> {
    Value(S),
    InsufficientData,
}

impl<S: Copy> Observed<S> {
    pub fn value(self) -> Option<S> {
        match self {
            Observed::Value(v) => Some(v),
            Observed::InsufficientData => None,
        }
    }
}

/// Mean detection delay in ms over attacks starting in the window.
/// Attacks not detected by the window's end are charged the full window.
pub fn mean_time_to_detect<S: Scalar>(events: &[AttackRecord], window: Window) -> Observed<S> {
    let delays: Vec<u64> = events
        .iter()
        .filter(|e| window.contains(e.start_ms))
        .map(|e| match e.detected_ms {
            Some(d) if d <= window.end_ms => d.saturating_sub(e.start_ms),
            _ => window.length_ms,
        })
        .collect();
    if delays.is_empty() {
        return Observed::InsufficientData;
    }
    Observed::Value(S::ratio(delays.iter().sum(), delays.len() as u64))
}

/// `1 - successes / attempts` for attacks on `nf_id` in the window.
pub fn robustness_level<S: Scalar>(nf_id: &str, events: &[AttackRecord], window: Window) -> Observed<S> {
    let (attempts, successes) = events
        .iter()
        .filter(|e| e.nf_id == nf_id && window.contains(e.start_ms))
        .fold((0u64, 0u64), |(a, s), e| (a + 1, s + u64::from(e.succeeded)));
    if attempts == 0 {
        return Observed::InsufficientData;
    }
    Observed::Value(S::one() - S::ratio(successes, attempts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Compliant,
    Degraded,
    NonCompliant,
    InsufficientData,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Compliant => "compliant",
            Status::Degraded => "degraded",
            Status::NonCompliant => "non_compliant",
            Status::InsufficientData => "insufficient_data",
        }
    }
}

/// Status of an observed value against a target. `Degraded` exists only for
/// range targets, for values below the lower bound but within `grace`.
pub fn status_of<S: Scalar>(observed: S, target: &Target, grace: S) -> Status {
    let v = S::from_f64;
    match target.comparator {
        Comparator::GreaterOrEqual { value } if observed >= v(value) => Status::Compliant,
        Comparator::LessOrEqual { value } if observed <= v(value) => Status::Compliant,
        Comparator::InRange { lower, .. } => {
            let lower = v(lower);
            if observed >= lower {
                Status::Compliant
            } else if observed >= lower - grace {
                Status::Degraded
            } else {
                Status::NonCompliant
            }
        }
        _ => Status::NonCompliant,
    }
}

/// Compliance of one quantified expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceVerdict<S: Scalar> {
    pub expectation: String,
    pub metric: MetricId,
    pub status: Status,
    #[serde(serialize_with = "serialize_opt_fixed4")]
    pub observed: Option<S>,
    pub target: Target,
    /// NF whose value governed the aggregate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_nf: Option<String>,
    /// Above the upper end of a range target.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub over_fulfilled: bool,
}

/// Identifies one sample: metric plus a qualifier for metrics that depend
/// on more than the NF (the surface and property set of a property goal).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleKey {
    pub nf_id: String,
    pub metric: MetricId,
    pub qualifier: String,
}

impl SampleKey {
    pub fn for_expectation(nf_id: &str, e: &Expectation) -> Option<SampleKey> {
        let metric = e.effective_metric()?;
        let qualifier = match (metric, e.surface) {
            (MetricId::PropertyCoverage, Some(surface)) => {
                let props: Vec<&str> = e.required_properties.iter().map(|p| p.as_str()).collect();
                format!("{}:{}", surface.as_str(), props.join(","))
            }
            _ => String::new(),
        };
        Some(SampleKey { nf_id: nf_id.to_string(), metric, qualifier })
    }
}

/// Latest sample per key.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples<S> {
    map: BTreeMap<SampleKey, Observed<S>>,
}

impl<S> Default for Samples<S> {
    fn default() -> Self {
        Samples { map: BTreeMap::new() }
    }
}

impl<S: Scalar> Samples<S> {
    pub fn insert(&mut self, key: SampleKey, value: Observed<S>) {
        self.map.insert(key, value);
    }

    pub fn get(&self, key: &SampleKey) -> Option<Observed<S>> {
        self.map.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SampleKey, &Observed<S>)> {
        self.map.iter()
    }
}

/// One verdict per quantified expectation, aggregating over `nf_ids` by the
/// worst value (minimum for lower bounds, maximum for upper bounds). NFs
/// without data are skipped; no data at all gives `InsufficientData`.
pub fn evaluate<S: Scalar>(intent: &Intent, nf_ids: &[String], samples: &Samples<S>, grace: S) -> Vec<ComplianceVerdict<S>> {
    let mut out = Vec::new();
    for e in &intent.expectations {
        let (Some(metric), Some(target)) = (e.effective_metric(), e.target) else {
            continue;
        };
        let lower_is_worse = !matches!(target.comparator, Comparator::LessOrEqual { .. });
        let mut worst: Option<(S, &String)> = None;
        for nf in nf_ids {
            let key = SampleKey::for_expectation(nf, e).expect("quantified expectation has a metric");
            if let Some(Observed::Value(v)) = samples.get(&key) {
                let replace = match worst {
                    None => true,
                    Some((w, _)) => {
                        if lower_is_worse {
                            v < w
                        } else {
                            v > w
                        }
                    }
                };
                if replace {
                    worst = Some((v, nf));
                }
            }
        }
        let verdict = match worst {
            Some((v, nf)) => {
                let over = matches!(target.comparator, Comparator::InRange { upper, .. } if v > S::from_f64(upper));
                ComplianceVerdict {
                    expectation: e.id.clone(),
                    metric,
                    status: status_of(v, &target, grace),
                    observed: Some(v),
                    target,
                    worst_nf: Some(nf.clone()),
                    over_fulfilled: over,
                }
            }
            None => ComplianceVerdict {
                expectation: e.id.clone(),
                metric,
                status: Status::InsufficientData,
                observed: None,
                target,
                worst_nf: None,
                over_fulfilled: false,
            },
        };
        out.push(verdict);
    }
    out
}

/// Worst status across verdicts; `InsufficientData` never outranks a real
/// result, and an all-insufficient set counts as compliant.
pub fn aggregate(verdicts: &[ComplianceVerdict<impl Scalar>]) -> Status {
    if verdicts.iter().any(|v| v.status == Status::NonCompliant) {
        Status::NonCompliant
    } else if verdicts.iter().any(|v| v.status == Status::Degraded) {
        Status::Degraded
    } else {
        Status::Compliant
    }
}

/// One metric export record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSample<S: Scalar> {
    pub tick: u64,
    pub nf_id: String,
    pub metric: MetricId,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub qualifier: String,
    #[serde(serialize_with = "serialize_fixed4")]
    pub value: S,
    pub unit: &'static str,
}

impl<S: Scalar> MetricSample<S> {
    pub fn new(tick: u64, key: &SampleKey, value: S) -> Self {
        MetricSample {
            tick,
            nf_id: key.nf_id.clone(),
            metric: key.metric,
            qualifier: key.qualifier.clone(),
            value,
            unit: key.metric.canonical_unit().as_str(),
        }
    }
}
