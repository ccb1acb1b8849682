//! Couplings of a system: joint distributions over every variable of every
//! context whose per-context marginals reproduce the context blocks.
//!
//! The set of couplings is a polytope; [`build_polytope`] writes it down as
//! an exact LP with one decision variable per global assignment. Specific
//! couplings (identity, product, maximal connection) are queries against that
//! polytope, none is assumed by default.

mod oracle;
mod polytope;
mod queries;
mod tv;

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::lp::{FarkasCertificate, LpError, SolverOptions};
use crate::rational::format_rational;
use crate::system::{Connection, ContextBlock, System, VariableId};
use crate::Rational;

pub use oracle::{brute_force_identity, BruteForceReport, ORACLE_VERTEX_CAP};
pub use polytope::{build_polytope, build_reduced_polytope, CouplingPolytope, PolytopeKind};
pub use queries::{
    any_coupling, constrained_coupling_feasible, identity_coupling_feasible, max_connection_equality,
    max_total_connection_equality, product_coupling, ConnectionOptimum, Demand,
};
pub use tv::{max_equality_probability, total_variation};

/// Default cap on LP decision variables.
pub const DEFAULT_VAR_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingConfig {
    pub var_cap: u128,
    pub solver: SolverOptions,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            var_cap: DEFAULT_VAR_CAP,
            solver: SolverOptions::default(),
        }
    }
}

impl CouplingConfig {
    pub fn with_var_cap(var_cap: u128) -> Self {
        Self { var_cap, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("{what} needs {} assignments, above the cap of {cap}", count.map(|c| c.to_string()).unwrap_or_else(|| "more than 2^128".into()))]
    TooLarge { what: &'static str, count: Option<u128>, cap: u128 },
    #[error("connection {connection} has {arity} members; only pairwise connections are supported")]
    UnsupportedArity { connection: String, arity: usize },
    #[error("{0} is not a connection of this system")]
    UnknownConnection(String),
    #[error("lower bound {bound} for {connection} is outside [0, 1]")]
    BadBound { connection: String, bound: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("coupling LP reported an unbounded objective")]
    Unbounded,
}

/// A joint pmf over the whole roster, stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coupling {
    roster: Vec<VariableId>,
    atoms: BTreeMap<Vec<usize>, Rational>,
}

impl Coupling {
    pub(crate) fn new(roster: Vec<VariableId>, atoms: BTreeMap<Vec<usize>, Rational>) -> Self {
        Self { roster, atoms }
    }

    pub fn roster(&self) -> &[VariableId] {
        &self.roster
    }

    /// Nonzero atoms keyed by outcome-index tuples in roster order.
    pub fn atoms(&self) -> &BTreeMap<Vec<usize>, Rational> {
        &self.atoms
    }

    fn positions(&self) -> HashMap<&VariableId, usize> {
        self.roster.iter().enumerate().map(|(i, v)| (v, i)).collect()
    }

    /// Marginal of the coupling on one block's variables.
    pub fn project(&self, block: &ContextBlock) -> BTreeMap<Vec<usize>, Rational> {
        let positions = self.positions();
        let idx: Vec<usize> = block.variables().iter().map(|v| positions[v]).collect();
        let mut out: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (assignment, p) in &self.atoms {
            let key: Vec<usize> = idx.iter().map(|&i| assignment[i]).collect();
            *out.entry(key).or_insert_with(Rational::zero) += p;
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Nonnegative, total mass one, and every block reproduced exactly.
    pub fn reproduces(&self, system: &System) -> bool {
        if self.roster != system.roster() {
            return false;
        }
        if self.atoms.values().any(|p| p < &Rational::zero()) {
            return false;
        }
        if !self.atoms.values().sum::<Rational>().is_one() {
            return false;
        }
        system.blocks().iter().all(|b| &self.project(b) == b.atoms())
    }

    /// Probability that all members of `connection` take the same value.
    pub fn equality_probability(&self, connection: &Connection) -> Rational {
        let positions = self.positions();
        let idx: Vec<usize> = connection.variables.iter().map(|v| positions[v]).collect();
        self.atoms
            .iter()
            .filter(|(a, _)| idx.windows(2).all(|w| a[w[0]] == a[w[1]]))
            .map(|(_, p)| p)
            .sum()
    }

    /// `{"roster": [...], "atoms": {"o1,o2,...": "p/q"}}`, keys in roster order.
    pub fn to_json(&self, system: &System) -> serde_json::Value {
        let alphabets: Vec<_> = self
            .roster
            .iter()
            .map(|v| system.alphabet(&v.content).expect("roster content"))
            .collect();
        let atoms: serde_json::Map<String, serde_json::Value> = self
            .atoms
            .iter()
            .map(|(a, p)| {
                let key = a
                    .iter()
                    .zip(&alphabets)
                    .map(|(&o, alpha)| alpha.label(o))
                    .collect::<Vec<_>>()
                    .join(",");
                (key, serde_json::Value::String(format_rational(p)))
            })
            .collect();
        serde_json::json!({
            "roster": self.roster.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "atoms": atoms,
        })
    }
}

/// Answer to a coupling-existence question.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityResult {
    Feasible { witness: Coupling },
    Infeasible { certificate: FarkasCertificate<Rational> },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn status(&self) -> &'static str {
        if self.is_feasible() {
            "feasible"
        } else {
            "infeasible"
        }
    }

    pub fn witness(&self) -> Option<&Coupling> {
        match self {
            FeasibilityResult::Feasible { witness } => Some(witness),
            FeasibilityResult::Infeasible { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&FarkasCertificate<Rational>> {
        match self {
            FeasibilityResult::Feasible { .. } => None,
            FeasibilityResult::Infeasible { certificate } => Some(certificate),
        }
    }
}

pub fn certificate_to_json(certificate: &FarkasCertificate<Rational>) -> serde_json::Value {
    serde_json::json!({
        "dual": certificate.dual.iter().map(format_rational).collect::<Vec<_>>(),
    })
}
