use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::catalog::{AttackSurface, NetworkFunction, Resource, SecurityProperty};
use crate::intent::{Comparator, Expectation, MetricId, SurfaceSelector};
use crate::metrics::SegmentationPolicy;

/// Closed interval the NF's attack surface coverage must fall in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsCvBounds {
    pub lower: f64,
    pub upper: f64,
}

/// The union of properties provided on `surfaces` must contain `properties`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PropertyDemand {
    pub surfaces: BTreeSet<AttackSurface>,
    pub properties: BTreeSet<SecurityProperty>,
}

/// Every listed surface needs an enabled detection control no slower than
/// `max_latency_ms`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DetectionDemand {
    pub surfaces: BTreeSet<AttackSurface>,
    pub max_latency_ms: u64,
}

/// What a plan must achieve on one NF.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Goals {
    pub as_cv: Option<AsCvBounds>,
    pub demands: Vec<PropertyDemand>,
    pub detection: Vec<DetectionDemand>,
}

impl Goals {
    pub fn is_empty(&self) -> bool {
        self.as_cv.is_none() && self.demands.is_empty() && self.detection.is_empty()
    }

    /// Adds the planning consequences of one expectation. Performance goals
    /// become capability demands; sc_cv goals are met by construction.
    pub fn add_expectation(&mut self, nf: &NetworkFunction, e: &Expectation, policy: &SegmentationPolicy) {
        let (Some(metric), Some(target)) = (e.effective_metric(), e.target) else {
            return;
        };
        let radio = || e.surface.unwrap_or(SurfaceSelector::AirInterface).members();
        match metric {
            MetricId::AsCv => {
                let bounds = match target.comparator {
                    Comparator::GreaterOrEqual { value } => AsCvBounds { lower: value, upper: 1.0 },
                    Comparator::LessOrEqual { value } => AsCvBounds { lower: 0.0, upper: value },
                    Comparator::InRange { lower, upper } => AsCvBounds { lower, upper },
                };
                self.merge_as_cv(bounds);
            }
            MetricId::ScCv => {}
            MetricId::PropertyCoverage => {
                if let Some(sel) = e.surface {
                    self.add_demand(PropertyDemand {
                        surfaces: sel.members(),
                        properties: e.required_properties.clone(),
                    });
                }
            }
            MetricId::MttdMs => {
                if let Comparator::LessOrEqual { value } = target.comparator {
                    self.add_detection(DetectionDemand {
                        surfaces: radio(),
                        max_latency_ms: value.max(0.0).floor() as u64,
                    });
                }
            }
            MetricId::RobustnessLevel => {
                if lower_bound(&target.comparator) > 0.0 {
                    self.add_demand(PropertyDemand {
                        surfaces: radio(),
                        properties: BTreeSet::from([SecurityProperty::Mitigation]),
                    });
                }
            }
            MetricId::SegmentationLevel => {
                if lower_bound(&target.comparator) > 0.0 && policy.involves(&nf.id) {
                    self.add_demand(PropertyDemand {
                        surfaces: nf.surfaces.clone(),
                        properties: BTreeSet::from([SecurityProperty::Segmentation]),
                    });
                }
            }
        }
    }

    /// The stricter range (higher lower bound, then lower upper bound) wins.
    /// Returns true when an existing, different range was replaced or kept.
    pub fn merge_as_cv(&mut self, bounds: AsCvBounds) -> bool {
        match self.as_cv {
            None => {
                self.as_cv = Some(bounds);
                false
            }
            Some(cur) if cur == bounds => false,
            Some(cur) => {
                if stricter(bounds, cur) {
                    self.as_cv = Some(bounds);
                }
                true
            }
        }
    }

    fn add_demand(&mut self, d: PropertyDemand) {
        if !d.properties.is_empty() && !self.demands.contains(&d) {
            self.demands.push(d);
            self.demands.sort();
        }
    }

    fn add_detection(&mut self, d: DetectionDemand) {
        if !self.detection.contains(&d) {
            self.detection.push(d);
            self.detection.sort();
        }
    }

    /// Drops parts that cannot apply to `nf` (surfaces it lacks).
    pub fn restrict_to(&mut self, nf: &NetworkFunction) {
        for d in &mut self.demands {
            d.surfaces.retain(|s| nf.surfaces.contains(s));
        }
        self.demands.retain(|d| !d.surfaces.is_empty());
        for d in &mut self.detection {
            d.surfaces.retain(|s| nf.surfaces.contains(s));
        }
        self.detection.retain(|d| !d.surfaces.is_empty());
    }
}

/// True when `a` is the stricter of two as_cv ranges.
pub fn stricter(a: AsCvBounds, b: AsCvBounds) -> bool {
    a.lower > b.lower || (a.lower == b.lower && a.upper < b.upper)
}

fn lower_bound(c: &Comparator) -> f64 {
    match *c {
        Comparator::GreaterOrEqual { value } => value,
        Comparator::InRange { lower, .. } => lower,
        Comparator::LessOrEqual { .. } => 0.0,
    }
}

/// Relative weight of each resource in the plan cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostWeights {
    pub cpu_pct: f64,
    pub latency_ms_added: f64,
    pub bandwidth_overhead_pct: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { cpu_pct: 1.0, latency_ms_added: 1.0, bandwidth_overhead_pct: 1.0 }
    }
}

impl CostWeights {
    pub fn get(&self, r: Resource) -> f64 {
        match r {
            Resource::CpuPct => self.cpu_pct,
            Resource::LatencyMsAdded => self.latency_ms_added,
            Resource::BandwidthOverheadPct => self.bandwidth_overhead_pct,
        }
    }
}

/// Resource limits: the NF budget, tightened by any intent constraints.
pub fn limits_for(nf: &NetworkFunction, intent_limits: &BTreeMap<Resource, f64>) -> BTreeMap<Resource, f64> {
    Resource::ALL
        .into_iter()
        .map(|r| {
            let budget = nf.budget.get(r);
            let v = intent_limits.get(&r).map_or(budget, |l| l.min(budget));
            (r, v)
        })
        .collect()
}
