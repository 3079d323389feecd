//! Translation of qualitative protection levels into quantitative goals, and
//! decomposition of coarse intents into per-group operations intents.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{AttackSurface, Catalog, NfInventory, SecurityProperty};
use crate::intent::{
    Expectation, ExpectationKind, Intent, IntentKind, LifecycleState, MetricId, QualitativeLevel, SurfaceSelector,
    Target, TargetScope,
};
use crate::rdf::Iri;

/// Target range for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SloRange {
    pub metric: MetricId,
    pub lower: f64,
    pub upper: f64,
}

impl SloRange {
    pub fn target(&self) -> Target {
        Target::in_range(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SloError {
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error("no property mapping for surface '{0}'")]
    UnknownSurface(String),
    #[error("expectation '{0}' carries no qualitative level")]
    NotQualitative(String),
    #[error("intent {0} is fully quantitative and cannot be decomposed")]
    NotDecomposable(String),
    #[error("intent {id} must be validated before decomposition (state {state})")]
    NotValidated { id: String, state: LifecycleState },
    #[error("scope of intent {0} matches no inventory NF")]
    EmptyScope(String),
}

/// Per-level as_cv ranges and per-surface required property sets.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMappingTable {
    as_cv: BTreeMap<QualitativeLevel, SloRange>,
    /// Keyed by surface selector name (`air_interface` or a concrete surface).
    surface_properties: BTreeMap<String, BTreeMap<QualitativeLevel, BTreeSet<SecurityProperty>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingDoc {
    as_cv_ranges: BTreeMap<QualitativeLevel, [f64; 2]>,
    #[serde(default)]
    surface_properties: BTreeMap<String, BTreeMap<QualitativeLevel, BTreeSet<SecurityProperty>>>,
}

/// Parses and validates a mapping document.
pub fn load_mapping(bytes: &[u8]) -> Result<LevelMappingTable, SloError> {
    let doc: MappingDoc = serde_json::from_slice(bytes).map_err(|e| SloError::Mapping(e.to_string()))?;
    let as_cv = doc
        .as_cv_ranges
        .into_iter()
        .map(|(level, [lower, upper])| (level, SloRange { metric: MetricId::AsCv, lower, upper }))
        .collect();
    LevelMappingTable::new(as_cv, doc.surface_properties)
}

impl LevelMappingTable {
    pub fn new(
        as_cv: BTreeMap<QualitativeLevel, SloRange>,
        surface_properties: BTreeMap<String, BTreeMap<QualitativeLevel, BTreeSet<SecurityProperty>>>,
    ) -> Result<Self, SloError> {
        for key in surface_properties.keys() {
            if SurfaceSelector::parse(key).is_none() {
                return Err(SloError::Mapping(format!("unknown surface '{key}'")));
            }
        }
        let mut table = LevelMappingTable { as_cv, surface_properties: BTreeMap::new() };
        for (surface, levels) in surface_properties {
            table.surface_properties.insert(surface, fill_levels(levels));
        }
        table.check()?;
        Ok(table)
    }

    fn check(&self) -> Result<(), SloError> {
        let err = |m: String| Err(SloError::Mapping(m));
        let mut prev: Option<(QualitativeLevel, SloRange)> = None;
        for level in QualitativeLevel::ALL {
            let Some(r) = self.as_cv.get(&level) else {
                return err(format!("missing as_cv range for {}", level.as_str()));
            };
            if !(0.0..=1.0).contains(&r.lower) || !(0.0..=1.0).contains(&r.upper) {
                return err(format!("{} range must lie in [0, 1]", level.as_str()));
            }
            if r.lower > r.upper {
                return err(format!("{} range has lower bound above upper bound", level.as_str()));
            }
            if let Some((pl, pr)) = prev {
                if pr.upper > r.lower {
                    return err(format!("{} range overlaps {} range", pl.as_str(), level.as_str()));
                }
            }
            prev = Some((level, *r));
        }
        if self.as_cv[&QualitativeLevel::Advanced].upper != 1.0 {
            return err("advanced range must end at 1.0".into());
        }
        for (surface, levels) in &self.surface_properties {
            for pair in QualitativeLevel::ALL.windows(2) {
                if !levels[&pair[0]].is_subset(&levels[&pair[1]]) {
                    return err(format!(
                        "properties for '{surface}' are not monotone: {} is not contained in {}",
                        pair[0].as_str(),
                        pair[1].as_str()
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn as_cv_range(&self, level: QualitativeLevel) -> SloRange {
        self.as_cv[&level]
    }

    /// Fills surfaces absent from the table with the union of properties of
    /// catalog controls at or below each tier.
    pub fn with_catalog_defaults(mut self, catalog: &Catalog) -> Self {
        for surface in AttackSurface::ALL {
            self.surface_properties.entry(surface.as_str().to_string()).or_insert_with(|| {
                QualitativeLevel::ALL.into_iter().map(|l| (l, catalog.tier_properties(surface, l))).collect()
            });
        }
        self
    }

    pub fn required_properties(
        &self,
        surface: SurfaceSelector,
        level: QualitativeLevel,
    ) -> Result<BTreeSet<SecurityProperty>, SloError> {
        self.surface_properties
            .get(surface.as_str())
            .map(|levels| levels[&level].clone())
            .ok_or_else(|| SloError::UnknownSurface(surface.as_str().to_string()))
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.surface_properties.keys().map(String::as_str)
    }
}

/// Missing levels inherit the next lower level's set; Basic defaults to empty.
fn fill_levels(
    mut levels: BTreeMap<QualitativeLevel, BTreeSet<SecurityProperty>>,
) -> BTreeMap<QualitativeLevel, BTreeSet<SecurityProperty>> {
    let mut carry = BTreeSet::new();
    for level in QualitativeLevel::ALL {
        let set = levels.entry(level).or_insert_with(|| carry.clone());
        carry = set.clone();
    }
    levels
}

/// Identifier suffixes of generated goals.
pub const AS_CV_SUFFIX: &str = "as_cv";
pub const PROPERTIES_SUFFIX: &str = "properties";
pub const SC_CV_SUFFIX: &str = "sc_cv";

/// Rewrites a qualitative protection expectation as quantitative goals:
/// an as_cv goal (the table range, or the explicit target of a hybrid), a
/// property obligation when a surface is named, and full control coverage.
pub fn quantify(expectation: &Expectation, table: &LevelMappingTable) -> Result<Vec<Expectation>, SloError> {
    let level = match (expectation.kind, expectation.level) {
        (ExpectationKind::ProtectionCoverage, Some(level)) => level,
        _ => return Err(SloError::NotQualitative(expectation.id.clone())),
    };
    let id = |suffix: &str| format!("{}.{suffix}", expectation.id);
    let mut out = Vec::new();

    let as_cv_target = expectation.target.unwrap_or_else(|| table.as_cv_range(level).target());
    out.push(Expectation::goal(id(AS_CV_SUFFIX), MetricId::AsCv, as_cv_target));

    if let Some(surface) = expectation.surface {
        let props = table.required_properties(surface, level)?;
        if !props.is_empty() {
            out.push(
                Expectation::goal(id(PROPERTIES_SUFFIX), MetricId::PropertyCoverage, Target::at_least(1.0))
                    .with_surface(surface)
                    .with_properties(props),
            );
        }
    }
    out.push(Expectation::goal(id(SC_CV_SUFFIX), MetricId::ScCv, Target::at_least(1.0)));
    Ok(out)
}

/// One operations intent per NF type of the scope that has members in the
/// scope's area, ordered by NF type. Children are returned in state
/// `Received`; the caller validates them and moves the parent to
/// `Decomposed`.
pub fn decompose(intent: &Intent, table: &LevelMappingTable, inventory: &NfInventory) -> Result<Vec<Intent>, SloError> {
    if !intent.needs_decomposition() {
        return Err(SloError::NotDecomposable(intent.id.as_str().to_string()));
    }
    if intent.state != LifecycleState::Validated {
        return Err(SloError::NotValidated { id: intent.id.as_str().to_string(), state: intent.state });
    }
    let mut expectations = Vec::new();
    for e in &intent.expectations {
        if e.is_qualitative() {
            expectations.extend(quantify(e, table)?);
        } else {
            expectations.push(e.clone());
        }
    }
    expectations.sort_by(|a, b| a.id.cmp(&b.id));

    let area = &intent.scope.location_area;
    let mut children = Vec::new();
    for nf_type in &intent.scope.nf_types {
        if inventory.matching(nf_type, area).next().is_none() {
            continue;
        }
        let child_id = Iri::new(format!("{}-{}-{}", intent.id.as_str(), sanitize(nf_type), sanitize(area)))
            .map_err(|e| SloError::Mapping(e.to_string()))?;
        let scope = TargetScope {
            nf_types: BTreeSet::from([nf_type.clone()]),
            location_area: area.clone(),
            attack_surface_filter: intent.scope.attack_surface_filter.clone(),
        };
        let mut child = Intent::new(child_id, IntentKind::Operations, scope, expectations.clone());
        child.constraints = intent.constraints.clone();
        child.parent = Some(intent.id.clone());
        children.push(child);
    }
    if children.is_empty() {
        return Err(SloError::EmptyScope(intent.id.as_str().to_string()));
    }
    Ok(children)
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT: &str = r#"{
        "as_cv_ranges": {"basic": [0.30, 0.60], "enhanced": [0.60, 0.85], "advanced": [0.85, 1.0]},
        "surface_properties": {
            "air_interface": {
                "enhanced": ["cp_confidentiality", "cp_integrity"],
                "advanced": ["cp_confidentiality", "cp_integrity", "up_confidentiality", "up_integrity"]
            }
        }
    }"#;

    #[test]
    fn basic_defaults_to_empty() {
        let t = load_mapping(DEFAULT.as_bytes()).unwrap();
        assert!(t.required_properties(SurfaceSelector::AirInterface, QualitativeLevel::Basic).unwrap().is_empty());
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let doc = DEFAULT.replace("[0.85, 1.0]", "[0.80, 1.0]");
        assert!(matches!(load_mapping(doc.as_bytes()), Err(SloError::Mapping(m)) if m.contains("overlaps")));
    }

    #[test]
    fn non_monotone_properties_rejected() {
        let doc = DEFAULT.replace(
            r#""enhanced": ["cp_confidentiality", "cp_integrity"]"#,
            r#""enhanced": ["cp_confidentiality", "cp_integrity", "logging"]"#,
        );
        assert!(matches!(load_mapping(doc.as_bytes()), Err(SloError::Mapping(m)) if m.contains("monotone")));
    }

    #[test]
    fn hybrid_keeps_explicit_target() {
        let t = load_mapping(DEFAULT.as_bytes()).unwrap();
        let e = Expectation::protection("p", QualitativeLevel::Basic, None).with_target(Target::at_least(0.4));
        let goals = quantify(&e, &t).unwrap();
        assert_eq!(goals[0].target, Some(Target::at_least(0.4)));
        assert_eq!(goals[0].metric, Some(MetricId::AsCv));
        assert!(goals.iter().all(|g| !g.is_qualitative()));
    }

    #[test]
    fn unknown_surface_without_defaults() {
        let t = load_mapping(DEFAULT.as_bytes()).unwrap();
        let e = Expectation::protection("p", QualitativeLevel::Basic, Some(SurfaceSelector::Surface(AttackSurface::Api)));
        assert_eq!(quantify(&e, &t), Err(SloError::UnknownSurface("api".into())));
    }
}
