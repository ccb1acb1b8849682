//! Content/context-indexed systems of random variables.
//!
//! A [`System`] holds one jointly distributed [`ContextBlock`] per context.
//! Variables are identified by `(content, context)`; nothing relates
//! variables of different contexts until a coupling is imposed on them.

mod io;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::index::MixedRadix;
use crate::Rational;

pub use io::{parse_system, LoadError, system_from_json, system_to_json, system_to_raw};
pub use validate::{validate_system, Issue, RawBlock, RawSystem, RawVariable, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ContentId(String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ContextId(String);

macro_rules! string_id {
    ($ty:ident) => {
        impl $ty {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $ty {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(ContentId);
string_id!(ContextId);

/// A random variable: one content recorded in one context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub content: ContentId,
    pub context: ContextId,
}

impl VariableId {
    pub fn new(content: impl Into<String>, context: impl Into<String>) -> Self {
        Self {
            content: ContentId(content.into()),
            context: ContextId(context.into()),
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.content, self.context)
    }
}

impl Serialize for VariableId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Ordered, distinct outcome labels of a content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeAlphabet(Vec<String>);

impl OutcomeAlphabet {
    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }
}

/// Joint distribution of the variables recorded in one context.
///
/// Outcome tuples are stored as alphabet indices in declared variable order;
/// only nonzero atoms are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextBlock {
    context: ContextId,
    variables: Vec<VariableId>,
    radix: MixedRadix,
    pmf: BTreeMap<Vec<usize>, Rational>,
}

impl ContextBlock {
    pub fn context(&self) -> &ContextId {
        &self.context
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn radix(&self) -> &MixedRadix {
        &self.radix
    }

    /// Nonzero atoms keyed by outcome-index tuples.
    pub fn atoms(&self) -> &BTreeMap<Vec<usize>, Rational> {
        &self.pmf
    }

    pub fn probability(&self, outcome: &[usize]) -> Rational {
        self.pmf.get(outcome).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn joint_outcome_count(&self) -> usize {
        self.radix.count().unwrap_or(u128::MAX) as usize
    }

    pub fn position_of(&self, content: &ContentId) -> Option<usize> {
        self.variables.iter().position(|v| &v.content == content)
    }
}

/// The set of variables sharing one content across contexts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Connection {
    pub content: ContentId,
    pub variables: Vec<VariableId>,
}

impl Connection {
    pub fn arity(&self) -> usize {
        self.variables.len()
    }
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@", self.content)?;
        for (i, v) in self.variables.iter().enumerate() {
            if i > 0 {
                f.write_str("~")?;
            }
            write!(f, "{}", v.context)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
}

/// A validated system. Immutable once built; construct through
/// [`validate_system`] or [`parse_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    contents: IndexMap<ContentId, OutcomeAlphabet>,
    contexts: Vec<ContextId>,
    blocks: Vec<ContextBlock>,
    provenance: Option<serde_json::Value>,
}

impl System {
    pub fn contents(&self) -> impl ExactSizeIterator<Item = (&ContentId, &OutcomeAlphabet)> {
        self.contents.iter()
    }

    pub fn content_ids(&self) -> impl ExactSizeIterator<Item = &ContentId> {
        self.contents.keys()
    }

    pub fn content_count(&self) -> usize {
        self.contents.len()
    }

    pub fn content_index(&self, content: &ContentId) -> Option<usize> {
        self.contents.get_index_of(content)
    }

    pub fn alphabet(&self, content: &ContentId) -> Option<&OutcomeAlphabet> {
        self.contents.get(content)
    }

    pub fn contexts(&self) -> &[ContextId] {
        &self.contexts
    }

    /// Blocks in context declaration order.
    pub fn blocks(&self) -> &[ContextBlock] {
        &self.blocks
    }

    pub fn block(&self, context: &ContextId) -> Option<&ContextBlock> {
        self.blocks.iter().find(|b| &b.context == context)
    }

    pub fn provenance(&self) -> Option<&serde_json::Value> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, provenance: serde_json::Value) -> Self {
        self.provenance = Some(provenance);
        self
    }

    /// All variables, block by block in declared order.
    pub fn roster(&self) -> Vec<VariableId> {
        self.blocks.iter().flat_map(|b| b.variables.iter().cloned()).collect()
    }

    pub fn variable_count(&self) -> usize {
        self.blocks.iter().map(|b| b.variables.len()).sum()
    }

    fn locate(&self, variable: &VariableId) -> Result<(&ContextBlock, usize), SystemError> {
        self.block(&variable.context)
            .and_then(|b| b.position_of(&variable.content).map(|i| (b, i)))
            .ok_or_else(|| SystemError::UnknownVariable(variable.clone()))
    }

    /// Marginal pmf of one variable, indexed by its content's alphabet order.
    pub fn marginal(&self, variable: &VariableId) -> Result<Vec<Rational>, SystemError> {
        let (block, pos) = self.locate(variable)?;
        let mut out = vec![Rational::zero(); block.radix.radices()[pos]];
        for (tuple, p) in &block.pmf {
            out[tuple[pos]] += p;
        }
        Ok(out)
    }

    /// One connection per content recorded in at least two contexts, ordered
    /// by content id and, within a connection, by context id.
    pub fn connections(&self) -> Vec<Connection> {
        let mut by_content: BTreeMap<&ContentId, Vec<VariableId>> = BTreeMap::new();
        for block in &self.blocks {
            for v in &block.variables {
                by_content.entry(&v.content).or_default().push(v.clone());
            }
        }
        by_content
            .into_iter()
            .filter(|(_, vars)| vars.len() >= 2)
            .map(|(content, mut variables)| {
                variables.sort_by(|a, b| a.context.cmp(&b.context));
                Connection {
                    content: content.clone(),
                    variables,
                }
            })
            .collect()
    }

    pub fn connection(&self, content: &ContentId) -> Option<Connection> {
        self.connections().into_iter().find(|c| &c.content == content)
    }

    /// Checks that every connection's members share one marginal.
    pub fn consistency(&self) -> ConsistencyReport {
        let mut failures = Vec::new();
        for connection in self.connections() {
            let marginals: Vec<(VariableId, Vec<Rational>)> = connection
                .variables
                .iter()
                .map(|v| (v.clone(), self.marginal(v).expect("connection members exist")))
                .collect();
            if marginals.windows(2).any(|w| w[0].1 != w[1].1) {
                failures.push(ConnectionMismatch {
                    connection,
                    marginals,
                });
            }
        }
        ConsistencyReport {
            consistent: failures.is_empty(),
            failures,
        }
    }

    pub fn is_consistently_connected(&self) -> bool {
        self.consistency().consistent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMismatch {
    pub connection: Connection,
    pub marginals: Vec<(VariableId, Vec<Rational>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub failures: Vec<ConnectionMismatch>,
}
