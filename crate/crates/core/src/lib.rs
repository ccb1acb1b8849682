//! Coupling analysis for systems of random variables indexed by content and
//! context.
//!
//! Variables recorded in different contexts have no joint distribution of
//! their own. Every question about how they relate (is there a coupling in
//! which same-content variables coincide, how likely can they be made equal,
//! do the correlations respect the CHSH bound) is answered here by exact
//! linear programming over the polytope of all couplings, with independent
//! brute-force oracles for cross-checking.

pub mod bell;
pub mod cli;
pub mod coupling;
pub mod generators;
pub mod index;
pub mod lp;
pub mod rational;
pub mod scalar;
pub mod system;

/// Exact probabilities and LP entries.
pub type Rational = num_rational::BigRational;

/// Linear program with exact rational data, as used by the coupling engine.
pub type ExactProgram = lp::LinearProgram<Rational>;
/// Floating-point linear program, for quick approximate checks.
pub type FloatProgram = lp::LinearProgram<f64>;

pub type ChshReportExact = bell::ChshReport<Rational>;
pub type CorrelationTableExact = bell::CorrelationTable<Rational>;

pub use scalar::Scalar;
pub use system::{Connection, ContentId, ContextBlock, ContextId, OutcomeAlphabet, System, VariableId};
