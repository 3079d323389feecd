//! Security intents: expectations, targets, scope and lifecycle, with
//! extraction from and projection to RDF graphs.

mod lifecycle;
mod model;
mod projection;
pub mod vocab;

pub use lifecycle::{audit_trail_is_legal, AuditEntry, AuditEvent, IllegalTransition, LifecycleState};
pub use model::{
    validate, Comparator, Expectation, ExpectationKind, Intent, IntentKind, MetricId, QualitativeLevel,
    ResourceConstraint, SurfaceSelector, Target, TargetScope, Unit, Violation,
};
pub use projection::{extract, from_graph, to_graph, Extracted, Extraction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntentError {
    #[error("intent {intent} is invalid: {}", join(.violations))]
    Validation { intent: String, violations: Vec<Violation> },
    #[error("intent {intent}: {message}")]
    Vocabulary { intent: String, message: String },
    #[error(transparent)]
    IllegalTransition(#[from] IllegalTransition),
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
