//! CHSH expressions for 2×2 binary systems and the cross-check against
//! identity-coupling feasibility.

use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::coupling::{identity_coupling_feasible, CouplingConfig, CouplingError};
use crate::rational::{decimal_string, format_rational};
use crate::scalar::Scalar;
use crate::system::{ContentId, System};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BellError {
    #[error("not a 2x2 binary system: {0}")]
    Shape(String),
    #[error("system is not consistently connected; identity-coupling check skipped")]
    Inconsistent,
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

/// Expectations under the ±1 encoding (first alphabet label is +1).
/// Index `[i][j]` is the context holding Alice's setting `i` and Bob's `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable<T> {
    pub alice: [ContentId; 2],
    pub bob: [ContentId; 2],
    pub expectations: [[T; 2]; 2],
    pub marg_a: [[T; 2]; 2],
    pub marg_b: [[T; 2]; 2],
}

impl<T: Clone> CorrelationTable<T> {
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> CorrelationTable<U> {
        let grid = |g: &[[T; 2]; 2]| [[f(&g[0][0]), f(&g[0][1])], [f(&g[1][0]), f(&g[1][1])]];
        CorrelationTable {
            alice: self.alice.clone(),
            bob: self.bob.clone(),
            expectations: grid(&self.expectations),
            marg_a: grid(&self.marg_a),
            marg_b: grid(&self.marg_b),
        }
    }
}

impl<T: Scalar> CorrelationTable<T> {
    /// Table with only the four product expectations set; marginals zero.
    pub fn from_expectations(expectations: [[T; 2]; 2]) -> Self {
        let zero = || [[T::zero(), T::zero()], [T::zero(), T::zero()]];
        Self {
            alice: [ContentId::new("A1"), ContentId::new("A2")],
            bob: [ContentId::new("B1"), ContentId::new("B2")],
            expectations,
            marg_a: zero(),
            marg_b: zero(),
        }
    }
}

/// Finds the Alice/Bob layout: four binary contents, four two-variable
/// contexts, co-occurrence forming a 4-cycle. Alice's first setting is the
/// first declared content, her second the content never recorded with it.
fn layout(system: &System) -> Result<([usize; 2], [usize; 2]), BellError> {
    let shape = |m: &str| Err(BellError::Shape(m.to_string()));
    if system.content_count() != 4 {
        return shape("expected 4 contents");
    }
    if system.contents().any(|(_, a)| a.len() != 2) {
        return shape("every content needs a 2-letter alphabet");
    }
    if system.blocks().len() != 4 || system.blocks().iter().any(|b| b.variables().len() != 2) {
        return shape("expected 4 contexts of 2 variables each");
    }
    let mut adjacent = [[false; 4]; 4];
    for b in system.blocks() {
        let i = system.content_index(&b.variables()[0].content).expect("content");
        let j = system.content_index(&b.variables()[1].content).expect("content");
        if adjacent[i][j] {
            return shape("two contexts hold the same pair of contents");
        }
        adjacent[i][j] = true;
        adjacent[j][i] = true;
    }
    if adjacent.iter().any(|row| row.iter().filter(|&&x| x).count() != 2) {
        return shape("contents must co-occur in a 4-cycle");
    }
    let a2 = (1..4).find(|&k| !adjacent[0][k]).expect("4-cycle has an opposite vertex");
    let bob: Vec<usize> = (1..4).filter(|&k| k != a2).collect();
    Ok(([0, a2], [bob[0], bob[1]]))
}

fn sign(outcome: usize) -> Rational {
    Rational::from_integer(if outcome == 0 { 1.into() } else { (-1).into() })
}

pub fn correlation_table(system: &System) -> Result<CorrelationTable<Rational>, BellError> {
    let (alice, bob) = layout(system)?;
    let ids: Vec<ContentId> = system.content_ids().cloned().collect();
    let zero = || [[Rational::zero(), Rational::zero()], [Rational::zero(), Rational::zero()]];
    let (mut e, mut ma, mut mb) = (zero(), zero(), zero());
    for (i, &a) in alice.iter().enumerate() {
        for (j, &b) in bob.iter().enumerate() {
            let block = system
                .blocks()
                .iter()
                .find(|blk| blk.position_of(&ids[a]).is_some() && blk.position_of(&ids[b]).is_some())
                .expect("4-cycle pairs every Alice content with every Bob content");
            let (pa, pb) = (block.position_of(&ids[a]).unwrap(), block.position_of(&ids[b]).unwrap());
            for (tuple, p) in block.atoms() {
                let (sa, sb) = (sign(tuple[pa]), sign(tuple[pb]));
                e[i][j] += p * &sa * &sb;
                ma[i][j] += p * sa;
                mb[i][j] += p * sb;
            }
        }
    }
    Ok(CorrelationTable {
        alice: [ids[alice[0]].clone(), ids[alice[1]].clone()],
        bob: [ids[bob[0]].clone(), ids[bob[1]].clone()],
        expectations: e,
        marg_a: ma,
        marg_b: mb,
    })
}

/// The four CHSH combinations: `values[k]` has its minus sign on the
/// expectation `k` in the order 11, 12, 21, 22.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshReport<T> {
    pub values: [T; 4],
    pub max_value: T,
    pub classical_ok: bool,
    pub tsirelson_ok: bool,
}

pub const COMBINATION_LABELS: [&str; 4] = [
    "-E11+E12+E21+E22",
    "E11-E12+E21+E22",
    "E11+E12-E21+E22",
    "E11+E12+E21-E22",
];

pub fn chsh<T: Scalar>(table: &CorrelationTable<T>) -> ChshReport<T> {
    let e = &table.expectations;
    let flat = [e[0][0].clone(), e[0][1].clone(), e[1][0].clone(), e[1][1].clone()];
    let total = flat.iter().fold(T::zero(), |acc, x| acc + x.clone());
    let two = T::from_ratio(2, 1);
    let values = flat.map(|x| (total.clone() - two.clone() * x).abs());
    let max_value = values
        .iter()
        .cloned()
        .fold(T::zero(), |m, v| if v > m { v } else { m });
    let classical_ok = !(max_value.clone() - two).is_strictly_positive();
    let tsirelson_ok = !(max_value.clone() * max_value.clone() - T::from_ratio(8, 1)).is_strictly_positive();
    ChshReport { values, max_value, classical_ok, tsirelson_ok }
}

impl<T: Scalar> ChshReport<T> {
    /// `(max − slack)² ≤ 8`: the Tsirelson bound allowing `slack` of
    /// rounding in the correlations that produced the table.
    pub fn tsirelson_within(&self, slack: &T) -> bool {
        let reduced = self.max_value.clone() - slack.clone();
        !reduced.is_strictly_positive()
            || !(reduced.clone() * reduced - T::from_ratio(8, 1)).is_strictly_positive()
    }
}

impl ChshReport<Rational> {
    pub fn to_json(&self) -> Value {
        let values: Vec<Value> = self
            .values
            .iter()
            .zip(COMBINATION_LABELS)
            .map(|(v, label)| json!({"combination": label, "value": format_rational(v), "decimal": decimal_string(v, 10)}))
            .collect();
        json!({
            "values": values,
            "max_value": format_rational(&self.max_value),
            "max_value_decimal": decimal_string(&self.max_value, 10),
            "classical_ok": self.classical_ok,
            "tsirelson_ok": self.tsirelson_ok,
        })
    }
}

/// Identity-coupling verdict next to the CHSH verdict for one system.
#[derive(Debug, Clone, PartialEq)]
pub struct FineReport {
    pub lp_feasible: bool,
    pub chsh_classical: bool,
    pub uniform_marginals: bool,
    /// The two verdicts disagree. For non-uniform marginals the LP verdict
    /// is the authoritative one.
    pub mismatch: bool,
    pub chsh: ChshReport<Rational>,
}

pub fn fine_equivalence_check(system: &System, config: &CouplingConfig) -> Result<FineReport, BellError> {
    let table = correlation_table(system)?;
    if !system.is_consistently_connected() {
        return Err(BellError::Inconsistent);
    }
    let chsh = chsh(&table);
    let lp_feasible = identity_coupling_feasible(system, config)?.is_feasible();
    let uniform_marginals = table.marg_a.iter().chain(&table.marg_b).flatten().all(|m| m.is_zero());
    Ok(FineReport {
        lp_feasible,
        chsh_classical: chsh.classical_ok,
        uniform_marginals,
        mismatch: lp_feasible != chsh.classical_ok,
        chsh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{deterministic_system, pr_box, random_consistent_system, singlet_system, AngleSpec, Design};
    use crate::system::parse_system;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn pr_box_table_and_chsh() {
        let table = correlation_table(&pr_box()).unwrap();
        assert_eq!(table.expectations, [[q(1, 1), q(1, 1)], [q(1, 1), q(-1, 1)]]);
        let report = chsh(&table);
        assert_eq!(report.max_value, q(4, 1));
        assert!(!report.classical_ok);
        assert!(!report.tsirelson_ok);
    }

    #[test]
    fn all_plus_deterministic() {
        let design = Design::bell(2, 2, 2);
        let system = deterministic_system(&design, &design.constant_assignment(0)).unwrap();
        let table = correlation_table(&system).unwrap();
        assert!(table.expectations.iter().flatten().all(|e| e == &q(1, 1)));
        let report = chsh(&table);
        assert_eq!(report.max_value, q(2, 1));
        assert!(report.classical_ok);
    }

    #[test]
    fn zero_table() {
        let report = chsh(&CorrelationTable::from_expectations([[q(0, 1), q(0, 1)], [q(0, 1), q(0, 1)]]));
        assert_eq!(report.max_value, q(0, 1));
        assert!(report.classical_ok && report.tsirelson_ok);
    }

    #[test]
    fn product_of_uniforms_has_zero_expectations() {
        let system = singlet_system(&AngleSpec::benchmark(), &q(0, 1), 100).unwrap();
        let table = correlation_table(&system).unwrap();
        assert!(table.expectations.iter().flatten().all(|e| e.is_zero()));
    }

    #[test]
    fn singlet_benchmark_exceeds_classical_only() {
        let system = singlet_system(&AngleSpec::benchmark(), &q(1, 1), 1_000_000).unwrap();
        let report = chsh(&correlation_table(&system).unwrap());
        let max = report.max_value.to_f64_lossy();
        assert!((max - 8f64.sqrt()).abs() < 1e-6, "{max}");
        assert!(!report.classical_ok);
        assert!(report.tsirelson_within(&q(4, 1_000_000)));
        // E12 is the only positive correlation at these angles.
        assert_eq!(report.values[1], report.max_value);
    }

    #[test]
    fn float_table_agrees() {
        let table = correlation_table(&pr_box()).unwrap().map(|x| x.to_f64_lossy());
        let report = chsh(&table);
        assert_eq!(report.max_value, 4.0);
        let f32_report = chsh(&CorrelationTable::from_expectations([[0.7f32, 0.7], [0.7, -0.7]]));
        assert!(!f32_report.classical_ok && f32_report.tsirelson_ok);
    }

    #[test]
    fn layout_follows_declared_order() {
        let system = parse_system(
            r#"{"contents":{"B":["u","d"],"X":["u","d"],"Y":["u","d"],"A":["u","d"]},
                "contexts":["p","q","r","s"],
                "blocks":[
                  {"context":"p","variables":[{"content":"X"},{"content":"B"}],"pmf":{"u,u":"1"}},
                  {"context":"q","variables":[{"content":"B"},{"content":"Y"}],"pmf":{"u,d":"1"}},
                  {"context":"r","variables":[{"content":"Y"},{"content":"A"}],"pmf":{"d,u":"1"}},
                  {"context":"s","variables":[{"content":"A"},{"content":"X"}],"pmf":{"u,u":"1"}}]}"#,
        )
        .unwrap();
        let table = correlation_table(&system).unwrap();
        assert_eq!(table.alice, [ContentId::new("B"), ContentId::new("A")]);
        assert_eq!(table.bob, [ContentId::new("X"), ContentId::new("Y")]);
        assert_eq!(table.expectations, [[q(1, 1), q(-1, 1)], [q(1, 1), q(-1, 1)]]);
        assert_eq!(table.marg_b[0][1], q(-1, 1));
    }

    #[test]
    fn shape_errors() {
        let system = random_consistent_system(0, &Design::bell(2, 3, 2), 6, false);
        assert!(matches!(correlation_table(&system), Err(BellError::Shape(_))));
        let system = random_consistent_system(0, &Design::bell(2, 2, 3), 6, false);
        assert!(matches!(correlation_table(&system), Err(BellError::Shape(_))));
        let system = random_consistent_system(0, &Design::cyclic(4, 2), 6, false);
        assert!(correlation_table(&system).is_ok());
    }

    #[test]
    fn fine_report_on_canonical_systems() {
        let config = CouplingConfig::default();
        let pr = fine_equivalence_check(&pr_box(), &config).unwrap();
        assert!(!pr.lp_feasible && !pr.chsh_classical && !pr.mismatch && pr.uniform_marginals);
        let design = Design::bell(2, 2, 2);
        let det = deterministic_system(&design, &design.constant_assignment(1)).unwrap();
        let report = fine_equivalence_check(&det, &config).unwrap();
        assert!(report.lp_feasible && report.chsh_classical && !report.uniform_marginals);
    }

    #[test]
    fn fine_report_refuses_inconsistent() {
        let system = parse_system(
            r#"{"contents":{"A1":["+","-"],"A2":["+","-"],"B1":["+","-"],"B2":["+","-"]},
                "contexts":["c11","c12","c21","c22"],
                "blocks":[
                  {"context":"c11","variables":[{"content":"A1"},{"content":"B1"}],"pmf":{"+,+":"1"}},
                  {"context":"c12","variables":[{"content":"A1"},{"content":"B2"}],"pmf":{"-,+":"1"}},
                  {"context":"c21","variables":[{"content":"A2"},{"content":"B1"}],"pmf":{"+,+":"1"}},
                  {"context":"c22","variables":[{"content":"A2"},{"content":"B2"}],"pmf":{"+,+":"1"}}]}"#,
        )
        .unwrap();
        assert_eq!(fine_equivalence_check(&system, &CouplingConfig::default()).unwrap_err(), BellError::Inconsistent);
    }
}
