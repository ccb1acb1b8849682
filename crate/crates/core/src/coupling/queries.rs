use num_traits::{One, Zero};

use super::polytope::{build_polytope, build_reduced_polytope, CouplingPolytope};
use super::{max_equality_probability, Coupling, CouplingConfig, CouplingError, FeasibilityResult};
use crate::index::MixedRadix;
use crate::lp::{solve, LpOutcome, Relation, Sense};
use crate::rational::format_rational;
use crate::system::{Connection, System};
use crate::Rational;

fn feasibility(polytope: &CouplingPolytope, config: &CouplingConfig) -> Result<FeasibilityResult, CouplingError> {
    match solve(polytope.program(), &config.solver)? {
        LpOutcome::Optimal(sol) => Ok(FeasibilityResult::Feasible {
            witness: polytope.decode(&sol.values),
        }),
        LpOutcome::Infeasible(certificate) => Ok(FeasibilityResult::Infeasible { certificate }),
        LpOutcome::Unbounded => Err(CouplingError::Unbounded),
    }
}

/// Any coupling at all, found as a vertex of the coupling polytope. Always
/// feasible for a valid system.
pub fn any_coupling(system: &System, config: &CouplingConfig) -> Result<FeasibilityResult, CouplingError> {
    let polytope = build_polytope(system, config)?;
    feasibility(&polytope, config)
}

/// The coupling in which distinct blocks are stochastically independent.
pub fn product_coupling(system: &System, config: &CouplingConfig) -> Result<Coupling, CouplingError> {
    let roster = system.roster();
    let radices: Vec<usize> = roster
        .iter()
        .map(|v| system.alphabet(&v.content).expect("roster content").len())
        .collect();
    let count = MixedRadix::new(radices).count();
    if count.is_none_or(|c| c > config.var_cap) {
        return Err(CouplingError::TooLarge { what: "product coupling", count, cap: config.var_cap });
    }

    let mut atoms: Vec<(Vec<usize>, Rational)> = vec![(Vec::new(), Rational::one())];
    for block in system.blocks() {
        let mut next = Vec::with_capacity(atoms.len() * block.atoms().len());
        for (prefix, p) in &atoms {
            for (outcome, q) in block.atoms() {
                let mut key = prefix.clone();
                key.extend_from_slice(outcome);
                next.push((key, p * q));
            }
        }
        atoms = next;
    }
    Ok(Coupling::new(roster, atoms.into_iter().collect()))
}

/// Decides whether some coupling makes every connection's members equal with
/// probability one, using the per-content polytope. Inconsistently connected
/// systems come back infeasible with a certificate like any other.
pub fn identity_coupling_feasible(system: &System, config: &CouplingConfig) -> Result<FeasibilityResult, CouplingError> {
    let polytope = build_reduced_polytope(system, config)?;
    feasibility(&polytope, config)
}

fn require_pairwise(connection: &Connection) -> Result<(), CouplingError> {
    if connection.arity() != 2 {
        return Err(CouplingError::UnsupportedArity {
            connection: connection.to_string(),
            arity: connection.arity(),
        });
    }
    Ok(())
}

/// Maximal `Pr[X = Y]` for a pairwise connection, considering the two
/// marginals in isolation: one minus their total variation distance.
pub fn max_connection_equality(system: &System, connection: &Connection) -> Result<Rational, CouplingError> {
    require_pairwise(connection)?;
    let p = system
        .marginal(&connection.variables[0])
        .map_err(|_| CouplingError::UnknownConnection(connection.to_string()))?;
    let q = system
        .marginal(&connection.variables[1])
        .map_err(|_| CouplingError::UnknownConnection(connection.to_string()))?;
    Ok(max_equality_probability(&p, &q))
}

/// Result of maximizing the summed connection probabilities over all couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionOptimum {
    /// Maximum over couplings of `Σ_c Pr[members of c equal]`.
    pub optimum: Rational,
    pub witness: Coupling,
    /// Dual vector proving optimality of `optimum` on the coupling LP.
    pub dual: Vec<Rational>,
    /// Each connection's individually achievable maximum.
    pub maxima: Vec<(Connection, Rational)>,
    pub sum_of_maxima: Rational,
}

impl ConnectionOptimum {
    /// The connection probabilities cannot all reach their individual
    /// maxima in one coupling.
    pub fn is_contextual(&self) -> bool {
        self.optimum < self.sum_of_maxima
    }
}

fn equality_indicator(polytope: &CouplingPolytope, connections: &[Connection]) -> Vec<Vec<usize>> {
    connections.iter().map(|c| polytope.connection_coordinates(c)).collect()
}

/// Maximizes the sum of connection probabilities subject to every block
/// constraint, and compares it with the sum of individual maxima.
pub fn max_total_connection_equality(system: &System, config: &CouplingConfig) -> Result<ConnectionOptimum, CouplingError> {
    let connections = system.connections();
    let mut maxima = Vec::with_capacity(connections.len());
    for c in &connections {
        maxima.push((c.clone(), max_connection_equality(system, c)?));
    }
    let sum_of_maxima = maxima.iter().map(|(_, m)| m).sum();

    let mut polytope = build_polytope(system, config)?;
    let members = equality_indicator(&polytope, &connections);
    let radix = polytope.coordinates().clone();
    let mut digits = vec![0; radix.radices().len()];
    let objective: Vec<Rational> = (0..polytope.num_vars())
        .map(|code| {
            radix.decode_into(code, &mut digits);
            let equal = members.iter().filter(|m| m.windows(2).all(|w| digits[w[0]] == digits[w[1]])).count();
            Rational::from_integer(equal.into())
        })
        .collect();
    polytope.program_mut().set_objective(Sense::Maximize, objective);

    match solve(polytope.program(), &config.solver)? {
        LpOutcome::Optimal(sol) => Ok(ConnectionOptimum {
            optimum: sol.objective.expect("objective set"),
            witness: polytope.decode(&sol.values),
            dual: sol.dual,
            maxima,
            sum_of_maxima,
        }),
        LpOutcome::Infeasible(_) => unreachable!("the product coupling is always feasible"),
        LpOutcome::Unbounded => Err(CouplingError::Unbounded),
    }
}

/// A lower bound on one pairwise connection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub connection: Connection,
    pub lower: Rational,
}

/// Decides whether one coupling meets every demand `Pr[members equal] >= lower`.
pub fn constrained_coupling_feasible(
    system: &System,
    demands: &[Demand],
    config: &CouplingConfig,
) -> Result<FeasibilityResult, CouplingError> {
    let known = system.connections();
    for d in demands {
        require_pairwise(&d.connection)?;
        if !known.contains(&d.connection) {
            return Err(CouplingError::UnknownConnection(d.connection.to_string()));
        }
        if d.lower < Rational::zero() || d.lower > Rational::one() {
            return Err(CouplingError::BadBound {
                connection: d.connection.to_string(),
                bound: format_rational(&d.lower),
            });
        }
    }

    let mut polytope = build_polytope(system, config)?;
    let connections: Vec<Connection> = demands.iter().map(|d| d.connection.clone()).collect();
    let members = equality_indicator(&polytope, &connections);
    let radix = polytope.coordinates().clone();
    let n = polytope.num_vars();
    let rows: Vec<usize> = demands
        .iter()
        .map(|d| polytope.program_mut().add_row(Relation::Ge, d.lower.clone()))
        .collect();
    let mut digits = vec![0; radix.radices().len()];
    let one = Rational::one();
    for code in 0..n {
        radix.decode_into(code, &mut digits);
        for (m, &row) in members.iter().zip(&rows) {
            if m.windows(2).all(|w| digits[w[0]] == digits[w[1]]) {
                polytope.program_mut().push_entry(code, row, one.clone());
            }
        }
    }
    feasibility(&polytope, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{deterministic_system, pr_box, Design};
    use crate::system::{parse_system, ContentId};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn coin_pair() -> System {
        parse_system(
            r#"{"contents":{"X":["H","T"],"Y":["H","T"]},"contexts":["a","b"],
               "blocks":[{"context":"a","variables":[{"content":"X"}],"pmf":{"H":"1/2","T":"1/2"}},
                         {"context":"b","variables":[{"content":"Y"}],"pmf":{"H":"1/2","T":"1/2"}}]}"#,
        )
        .unwrap()
    }

    fn transport(p: &[&str], r: &[&str]) -> System {
        let labels: Vec<String> = (0..p.len()).map(|i| format!("v{i}")).collect();
        let pmf = |xs: &[&str]| {
            labels
                .iter()
                .zip(xs)
                .map(|(l, x)| format!("\"{l}\":\"{x}\""))
                .collect::<Vec<_>>()
                .join(",")
        };
        parse_system(&format!(
            r#"{{"contents":{{"X":{labels:?}}},"contexts":["c1","c2"],
               "blocks":[{{"context":"c1","variables":[{{"content":"X"}}],"pmf":{{{}}}}},
                         {{"context":"c2","variables":[{{"content":"X"}}],"pmf":{{{}}}}}]}}"#,
            pmf(p),
            pmf(r)
        ))
        .unwrap()
    }

    #[test]
    fn product_of_two_coins() {
        let c = product_coupling(&coin_pair(), &CouplingConfig::default()).unwrap();
        assert_eq!(c.atoms().len(), 4);
        assert!(c.atoms().values().all(|p| p == &q(1, 4)));
    }

    #[test]
    fn product_coupling_reproduces_blocks() {
        let system = pr_box();
        let c = product_coupling(&system, &CouplingConfig::default()).unwrap();
        assert!(c.reproduces(&system));
        let conn = system.connection(&ContentId::new("A1")).unwrap();
        assert_eq!(c.equality_probability(&conn), q(1, 2));
    }

    #[test]
    fn any_coupling_on_pr_box() {
        let system = pr_box();
        let result = any_coupling(&system, &CouplingConfig::default()).unwrap();
        assert!(result.witness().unwrap().reproduces(&system));
    }

    #[test]
    fn deterministic_point_mass_witness() {
        let design = Design::bell(2, 2, 2);
        let system = deterministic_system(&design, &design.constant_assignment(0)).unwrap();
        let result = any_coupling(&system, &CouplingConfig::default()).unwrap();
        let witness = result.witness().unwrap();
        assert_eq!(witness.atoms().len(), 1);
        assert!(witness.reproduces(&system));
        let identity = identity_coupling_feasible(&system, &CouplingConfig::default()).unwrap();
        assert!(identity.witness().unwrap().reproduces(&system));
    }

    #[test]
    fn pr_box_identity_infeasible() {
        let system = pr_box();
        let result = identity_coupling_feasible(&system, &CouplingConfig::default()).unwrap();
        let cert = result.certificate().expect("PR box admits no identity coupling");
        let reduced = build_reduced_polytope(&system, &CouplingConfig::default()).unwrap();
        assert!(reduced.program().check_farkas(&cert.dual));
    }

    #[test]
    fn connection_maxima_examples() {
        let same = transport(&["1/2", "1/2"], &["1/2", "1/2"]);
        let conn = same.connections()[0].clone();
        assert_eq!(max_connection_equality(&same, &conn).unwrap(), q(1, 1));
        let shifted = transport(&["1/2", "1/2"], &["7/10", "3/10"]);
        let conn = shifted.connections()[0].clone();
        assert_eq!(max_connection_equality(&shifted, &conn).unwrap(), q(4, 5));
        let disjoint = transport(&["1", "0"], &["0", "1"]);
        let conn = disjoint.connections()[0].clone();
        assert_eq!(max_connection_equality(&disjoint, &conn).unwrap(), q(0, 1));
    }

    #[test]
    fn ternary_connection_is_rejected() {
        let system = parse_system(
            r#"{"contents":{"X":["0","1"]},"contexts":["a","b","c"],
               "blocks":[{"context":"a","variables":[{"content":"X"}],"pmf":{"0":"1"}},
                         {"context":"b","variables":[{"content":"X"}],"pmf":{"0":"1"}},
                         {"context":"c","variables":[{"content":"X"}],"pmf":{"1":"1"}}]}"#,
        )
        .unwrap();
        let conn = system.connections()[0].clone();
        assert!(matches!(
            max_connection_equality(&system, &conn),
            Err(CouplingError::UnsupportedArity { arity: 3, .. })
        ));
        assert!(matches!(
            max_total_connection_equality(&system, &CouplingConfig::default()),
            Err(CouplingError::UnsupportedArity { .. })
        ));
    }

    #[test]
    fn transport_lp_matches_closed_form() {
        let system = transport(&["1/6", "1/3", "1/2"], &["1/2", "1/4", "1/4"]);
        let opt = max_total_connection_equality(&system, &CouplingConfig::default()).unwrap();
        assert_eq!(opt.optimum, q(1, 6) + q(1, 4) + q(1, 4));
        assert_eq!(opt.optimum, opt.sum_of_maxima);
        assert!(!opt.is_contextual());
        assert!(opt.witness.reproduces(&system));
    }

    #[test]
    fn single_context_optimum_is_zero() {
        let system = parse_system(
            r#"{"contents":{"X":["0","1"]},"contexts":["a"],
               "blocks":[{"context":"a","variables":[{"content":"X"}],"pmf":{"0":"1/3","1":"2/3"}}]}"#,
        )
        .unwrap();
        let opt = max_total_connection_equality(&system, &CouplingConfig::default()).unwrap();
        assert_eq!(opt.optimum, q(0, 1));
        assert!(opt.maxima.is_empty());
        assert!(!opt.is_contextual());
    }

    #[test]
    fn pr_box_is_contextual() {
        let system = pr_box();
        let opt = max_total_connection_equality(&system, &CouplingConfig::default()).unwrap();
        assert_eq!(opt.sum_of_maxima, q(4, 1));
        assert!(opt.is_contextual());
        assert!(opt.witness.reproduces(&system));
        let polytope = build_polytope(&system, &CouplingConfig::default()).unwrap();
        let connections = system.connections();
        let realized: Rational = connections.iter().map(|c| opt.witness.equality_probability(c)).sum();
        assert_eq!(realized, opt.optimum);
        assert_eq!(polytope.num_vars(), 256);
    }

    #[test]
    fn demands_behave() {
        let system = pr_box();
        let config = CouplingConfig::default();
        let demands = |bound: Rational| -> Vec<Demand> {
            system
                .connections()
                .into_iter()
                .map(|connection| Demand { connection, lower: bound.clone() })
                .collect()
        };
        assert!(constrained_coupling_feasible(&system, &demands(q(0, 1)), &config).unwrap().is_feasible());
        let result = constrained_coupling_feasible(&system, &demands(q(1, 1)), &config).unwrap();
        assert!(!result.is_feasible());
        let err = constrained_coupling_feasible(&system, &demands(q(3, 2)), &config).unwrap_err();
        assert!(matches!(err, CouplingError::BadBound { .. }));
    }

    #[test]
    fn unknown_connection_in_demand() {
        let system = pr_box();
        let connection = Connection {
            content: ContentId::new("A1"),
            variables: vec![crate::VariableId::new("A1", "c11"), crate::VariableId::new("A1", "c22")],
        };
        let err = constrained_coupling_feasible(
            &system,
            &[Demand { connection, lower: q(1, 2) }],
            &CouplingConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CouplingError::UnknownConnection(_)));
    }
}
