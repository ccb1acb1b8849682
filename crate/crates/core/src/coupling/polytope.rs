use std::collections::BTreeMap;

use num_traits::Zero;

use super::{Coupling, CouplingConfig, CouplingError};
use crate::index::MixedRadix;
use crate::lp::{LinearProgram, Relation};
use crate::system::{Connection, System, VariableId};
use crate::{ExactProgram, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolytopeKind {
    /// One coordinate per variable: every coupling of the system.
    Full,
    /// One coordinate per content: couplings in which each connection's
    /// members coincide.
    Reduced,
}

/// The LP of a coupling polytope together with the decoding from LP
/// variables back to assignments of the roster.
///
/// Row 0 is the normalization row. Each block then contributes one equality
/// row per joint outcome except its last one, which is implied by the others
/// and normalization.
#[derive(Debug, Clone)]
pub struct CouplingPolytope {
    kind: PolytopeKind,
    program: ExactProgram,
    coordinates: MixedRadix,
    roster: Vec<VariableId>,
    roster_coordinate: Vec<usize>,
}

impl CouplingPolytope {
    pub fn kind(&self) -> PolytopeKind {
        self.kind
    }

    pub fn program(&self) -> &ExactProgram {
        &self.program
    }

    pub(crate) fn program_mut(&mut self) -> &mut ExactProgram {
        &mut self.program
    }

    pub fn coordinates(&self) -> &MixedRadix {
        &self.coordinates
    }

    pub fn num_vars(&self) -> usize {
        self.program.num_vars()
    }

    pub fn num_rows(&self) -> usize {
        self.program.num_rows()
    }

    /// Coordinate indices read by each member of `connection`.
    pub(crate) fn connection_coordinates(&self, connection: &Connection) -> Vec<usize> {
        connection
            .variables
            .iter()
            .map(|v| {
                let pos = self.roster.iter().position(|r| r == v).expect("connection member in roster");
                self.roster_coordinate[pos]
            })
            .collect()
    }

    /// Turns LP values (one per assignment code) into a roster coupling.
    /// Extra trailing LP variables (slacks added by callers) are ignored.
    pub fn decode(&self, values: &[Rational]) -> Coupling {
        let total = self.coordinates.count().unwrap_or(0) as usize;
        let mut digits = vec![0; self.coordinates.radices().len()];
        let mut atoms = BTreeMap::new();
        for (code, value) in values.iter().enumerate().take(total) {
            if value.is_zero() {
                continue;
            }
            self.coordinates.decode_into(code, &mut digits);
            let assignment: Vec<usize> = self.roster_coordinate.iter().map(|&c| digits[c]).collect();
            *atoms.entry(assignment).or_insert_with(Rational::zero) += value;
        }
        Coupling::new(self.roster.clone(), atoms)
    }
}

fn guarded_count(radix: &MixedRadix, what: &'static str, config: &CouplingConfig) -> Result<usize, CouplingError> {
    match radix.count() {
        Some(count) if count <= config.var_cap => Ok(count as usize),
        count => Err(CouplingError::TooLarge { what, count, cap: config.var_cap }),
    }
}

fn build(
    system: &System,
    kind: PolytopeKind,
    coordinates: MixedRadix,
    roster_coordinate: Vec<usize>,
    config: &CouplingConfig,
) -> Result<CouplingPolytope, CouplingError> {
    let what = match kind {
        PolytopeKind::Full => "coupling polytope",
        PolytopeKind::Reduced => "identity-coupling polytope",
    };
    let count = guarded_count(&coordinates, what, config)?;

    let mut program = LinearProgram::new();
    let normalization = program.add_row(Relation::Eq, Rational::from_integer(1.into()));

    // Per block: first row index and the coordinates its variables read.
    let mut block_layout = Vec::with_capacity(system.blocks().len());
    let mut roster_pos = 0;
    for block in system.blocks() {
        let first_row = program.num_rows();
        let joint = block.joint_outcome_count();
        for code in 0..joint - 1 {
            let outcome = block.radix().decode(code);
            program.add_row(Relation::Eq, block.probability(&outcome));
        }
        let coords: Vec<usize> = (0..block.variables().len())
            .map(|i| roster_coordinate[roster_pos + i])
            .collect();
        roster_pos += block.variables().len();
        block_layout.push((first_row, joint, coords, block.radix()));
    }

    let one = Rational::from_integer(1.into());
    let mut digits = vec![0; coordinates.radices().len()];
    for code in 0..count {
        coordinates.decode_into(code, &mut digits);
        let mut entries = Vec::with_capacity(1 + block_layout.len());
        entries.push((normalization, one.clone()));
        for (first_row, joint, coords, radix) in &block_layout {
            let local: Vec<usize> = coords.iter().map(|&c| digits[c]).collect();
            let j = radix.encode(&local);
            if j + 1 < *joint {
                entries.push((first_row + j, one.clone()));
            }
        }
        program.add_variable(entries);
    }

    Ok(CouplingPolytope {
        kind,
        program,
        coordinates,
        roster: system.roster(),
        roster_coordinate,
    })
}

/// LP whose feasible points are exactly the couplings of `system`: one
/// variable per assignment of an outcome to every variable in the roster.
pub fn build_polytope(system: &System, config: &CouplingConfig) -> Result<CouplingPolytope, CouplingError> {
    let roster = system.roster();
    let radices: Vec<usize> = roster
        .iter()
        .map(|v| system.alphabet(&v.content).expect("roster content").len())
        .collect();
    let roster_coordinate = (0..roster.len()).collect();
    build(system, PolytopeKind::Full, MixedRadix::new(radices), roster_coordinate, config)
}

/// LP over assignments of one outcome per content. Its feasible points are
/// the couplings in which every connection's members are equal with
/// probability one.
pub fn build_reduced_polytope(system: &System, config: &CouplingConfig) -> Result<CouplingPolytope, CouplingError> {
    let radices: Vec<usize> = system.contents().map(|(_, a)| a.len()).collect();
    let roster_coordinate = system
        .roster()
        .iter()
        .map(|v| system.content_index(&v.content).expect("roster content"))
        .collect();
    build(system, PolytopeKind::Reduced, MixedRadix::new(radices), roster_coordinate, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{pr_box, singlet_system, AngleSpec};
    use crate::lp::{solve, LpOutcome, SolverOptions};
    use crate::system::parse_system;

    #[test]
    fn alice_bob_counts() {
        let system = pr_box();
        let polytope = build_polytope(&system, &CouplingConfig::default()).unwrap();
        assert_eq!(polytope.num_vars(), 256);
        // 16 marginal rows, one normalization row, minus one implied row per block.
        assert_eq!(polytope.num_rows(), 16 + 1 - 4);
        assert!(polytope
            .program()
            .columns()
            .iter()
            .flatten()
            .all(|(_, a)| a == &Rational::from_integer(1.into())));
        let reduced = build_reduced_polytope(&system, &CouplingConfig::default()).unwrap();
        assert_eq!(reduced.num_vars(), 16);
    }

    #[test]
    fn single_block_has_unique_point() {
        let system = parse_system(
            r#"{"contents":{"X":["0","1"],"Y":["0","1"]},"contexts":["c"],
               "blocks":[{"context":"c","variables":[{"content":"X"},{"content":"Y"}],
               "pmf":{"0,0":"1/8","0,1":"3/8","1,1":"1/2"}}]}"#,
        )
        .unwrap();
        let polytope = build_polytope(&system, &CouplingConfig::default()).unwrap();
        assert_eq!(polytope.num_vars(), 4);
        let LpOutcome::Optimal(sol) = solve(polytope.program(), &SolverOptions::default()).unwrap() else {
            panic!("single block must be feasible");
        };
        let coupling = polytope.decode(&sol.values);
        assert_eq!(coupling.atoms(), system.blocks()[0].atoms());
    }

    #[test]
    fn size_guard_reports_count() {
        let system = singlet_system(&AngleSpec::benchmark(), &Rational::from_integer(1.into()), 1000).unwrap();
        let err = build_polytope(&system, &CouplingConfig::with_var_cap(100)).unwrap_err();
        assert_eq!(err, CouplingError::TooLarge { what: "coupling polytope", count: Some(256), cap: 100 });
        assert!(err.to_string().contains("256"));
        assert!(build_reduced_polytope(&system, &CouplingConfig::with_var_cap(100)).is_ok());
    }
}
