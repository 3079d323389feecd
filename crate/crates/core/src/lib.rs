//! Engine for intent-based security management of mobile network functions.
//!
//! Intents arrive as RDF graphs ([`rdf`]), are checked and decomposed into
//! quantified expectations ([`intent`], [`slo`]), and are enforced by
//! choosing security controls from a catalog ([`catalog`], [`planner`]).
//! [`metrics`] measures the result.
//!
//! Numeric code is generic over [`scalar::Scalar`]; the aliases below fix
//! the two instantiations used in practice.

pub mod catalog;
pub mod control;
pub mod intent;
pub mod metrics;
pub mod netsim;
pub mod planner;
pub mod rdf;
pub mod scalar;
pub mod slo;

pub use num_rational::Rational64;
pub use scalar::Scalar;

/// Floating point scalar used for run-time reporting.
pub type Fraction = f64;
/// Exact scalar used by tests and oracles.
pub type ExactFraction = Rational64;

pub type Plan = planner::Plan<Fraction>;
pub type ExactPlan = planner::Plan<ExactFraction>;
pub type ComplianceVerdict = metrics::ComplianceVerdict<Fraction>;
