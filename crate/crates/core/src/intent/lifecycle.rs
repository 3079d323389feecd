use std::fmt;

use serde::{Deserialize, Serialize};

use super::model::Intent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleState {
    Received,
    Validated,
    Decomposed,
    Planning,
    Active,
    Degraded,
    Fulfilled,
    Rejected,
    Withdrawn,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 9] = [
        LifecycleState::Received,
        LifecycleState::Validated,
        LifecycleState::Decomposed,
        LifecycleState::Planning,
        LifecycleState::Active,
        LifecycleState::Degraded,
        LifecycleState::Fulfilled,
        LifecycleState::Rejected,
        LifecycleState::Withdrawn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LifecycleState::Received => "received",
            LifecycleState::Validated => "validated",
            LifecycleState::Decomposed => "decomposed",
            LifecycleState::Planning => "planning",
            LifecycleState::Active => "active",
            LifecycleState::Degraded => "degraded",
            LifecycleState::Fulfilled => "fulfilled",
            LifecycleState::Rejected => "rejected",
            LifecycleState::Withdrawn => "withdrawn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    /// Under assurance: metrics are evaluated every tick.
    pub fn is_assured(self) -> bool {
        matches!(self, LifecycleState::Active | LifecycleState::Degraded | LifecycleState::Fulfilled)
    }

    /// The transition relation. Self-loops are not transitions.
    pub fn can_transition_to(self, to: LifecycleState) -> bool {
        use LifecycleState::*;
        if self == to {
            return false;
        }
        if to == Withdrawn {
            return true;
        }
        matches!(
            (self, to),
            (Received, Validated)
                | (Received, Rejected)
                | (Validated, Decomposed)
                | (Validated, Planning)
                | (Decomposed, Planning)
                | (Planning, Active)
                | (Planning, Rejected)
                | (Active, Degraded)
                | (Degraded, Active)
                | (Active, Fulfilled)
        )
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuditEvent {
    Transition { from: LifecycleState, to: LifecycleState },
    /// Two intents demanded different levels on one NF surface; the stricter won.
    ConflictResolved { nf_id: String, surface: String, winner: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub tick: u64,
    #[serde(flatten)]
    pub event: AuditEvent,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal lifecycle transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: LifecycleState,
    pub to: LifecycleState,
}

impl Intent {
    /// Moves to `to` if the relation allows it, appending an audit entry.
    pub fn transition(
        mut self,
        to: LifecycleState,
        tick: u64,
        reason: impl Into<String>,
    ) -> Result<Intent, IllegalTransition> {
        let from = self.state;
        if !from.can_transition_to(to) {
            return Err(IllegalTransition { from, to });
        }
        self.state = to;
        self.audit.push(AuditEntry { tick, event: AuditEvent::Transition { from, to }, reason: reason.into() });
        Ok(self)
    }

    /// In-place variant used by the intent store.
    pub fn transition_in_place(
        &mut self,
        to: LifecycleState,
        tick: u64,
        reason: impl Into<String>,
    ) -> Result<(), IllegalTransition> {
        let from = self.state;
        if !from.can_transition_to(to) {
            return Err(IllegalTransition { from, to });
        }
        self.state = to;
        self.audit.push(AuditEntry { tick, event: AuditEvent::Transition { from, to }, reason: reason.into() });
        Ok(())
    }

    pub fn record_conflict(&mut self, tick: u64, nf_id: &str, surface: &str, winner: &str) {
        self.audit.push(AuditEntry {
            tick,
            event: AuditEvent::ConflictResolved {
                nf_id: nf_id.to_string(),
                surface: surface.to_string(),
                winner: winner.to_string(),
            },
            reason: "stricter protection level applied".to_string(),
        });
    }
}

/// True iff every transition recorded in the trail is legal and chained.
pub fn audit_trail_is_legal(trail: &[AuditEntry]) -> bool {
    let mut state: Option<LifecycleState> = None;
    trail.iter().all(|entry| match entry.event {
        AuditEvent::Transition { from, to } => {
            let chained = state.is_none_or(|s| s == from);
            state = Some(to);
            chained && from.can_transition_to(to)
        }
        AuditEvent::ConflictResolved { .. } => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intent::{Expectation, IntentKind, TargetScope};
    use crate::rdf::Iri;

    fn fresh() -> Intent {
        Intent::new(
            Iri::new("http://e/i").unwrap(),
            IntentKind::Operations,
            TargetScope::new(["gnb"], "A"),
            vec![Expectation::delivery("d")],
        )
    }

    #[test]
    fn received_to_validated() {
        let i = fresh().transition(LifecycleState::Validated, 0, "ok").unwrap();
        assert_eq!(i.state, LifecycleState::Validated);
        assert_eq!(i.audit.len(), 1);
    }

    #[test]
    fn received_to_active_is_illegal() {
        let err = fresh().transition(LifecycleState::Active, 0, "x").unwrap_err();
        assert_eq!(err, IllegalTransition { from: LifecycleState::Received, to: LifecycleState::Active });
    }

    #[test]
    fn active_degraded_flap() {
        use LifecycleState::*;
        let mut i = fresh();
        for (t, s) in [Validated, Planning, Active, Degraded, Active].into_iter().enumerate() {
            i = i.transition(s, t as u64, "step").unwrap();
        }
        assert_eq!(i.state, Active);
        assert!(audit_trail_is_legal(&i.audit));
    }

    #[test]
    fn everything_can_be_withdrawn() {
        for s in LifecycleState::ALL {
            assert_eq!(s.can_transition_to(LifecycleState::Withdrawn), s != LifecycleState::Withdrawn);
        }
    }
}
