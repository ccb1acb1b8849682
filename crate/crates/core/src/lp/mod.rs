//! Linear programs over nonnegative variables with equality and inequality
//! rows, solved by a two-phase revised simplex under Bland's rule.
//!
//! Every answer comes with something that can be checked by plain
//! arithmetic against the original program: a primal point for feasible
//! programs, a dual vector proving optimality, or a Farkas vector proving
//! infeasibility. See [`LinearProgram::check_primal`],
//! [`LinearProgram::check_dual_optimal`] and [`LinearProgram::check_farkas`].

mod simplex;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

pub use simplex::{solve, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `a·x = b`
    Eq,
    /// `a·x >= b`
    Ge,
    /// `a·x <= b`
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective<T> {
    pub sense: Sense,
    pub coefficients: Vec<T>,
}

/// A linear program in column form: every variable is `>= 0` and owns a
/// sparse column of `(row, coefficient)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    rows: Vec<Row<T>>,
    columns: Vec<Vec<(usize, T)>>,
    objective: Option<Objective<T>>,
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            columns: Vec::new(),
            objective: None,
        }
    }

    pub fn add_row(&mut self, relation: Relation, rhs: T) -> usize {
        self.rows.push(Row { relation, rhs });
        self.rows.len() - 1
    }

    /// Adds a nonnegative variable with the given column entries.
    /// Entries must reference existing rows; zero entries are dropped.
    pub fn add_variable(&mut self, entries: Vec<(usize, T)>) -> usize {
        let mut entries: Vec<(usize, T)> = entries.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        entries.sort_by_key(|(r, _)| *r);
        debug_assert!(entries.iter().all(|(r, _)| *r < self.rows.len()));
        self.columns.push(entries);
        self.columns.len() - 1
    }

    /// Appends `coefficient` to an existing variable's entry for a new row.
    pub fn push_entry(&mut self, variable: usize, row: usize, coefficient: T) {
        if !coefficient.is_zero() {
            self.columns[variable].push((row, coefficient));
        }
    }

    pub fn set_objective(&mut self, sense: Sense, coefficients: Vec<T>) {
        assert_eq!(coefficients.len(), self.columns.len(), "one objective coefficient per variable");
        self.objective = Some(Objective { sense, coefficients });
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    pub fn columns(&self) -> &[Vec<(usize, T)>] {
        &self.columns
    }

    pub fn objective(&self) -> Option<&Objective<T>> {
        self.objective.as_ref()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn objective_value(&self, x: &[T]) -> Option<T> {
        self.objective.as_ref().map(|obj| {
            obj.coefficients
                .iter()
                .zip(x)
                .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
        })
    }

    fn row_activity(&self, x: &[T]) -> Vec<T> {
        let mut activity = vec![T::zero(); self.rows.len()];
        for (column, value) in self.columns.iter().zip(x) {
            if value.is_zero() {
                continue;
            }
            for (r, a) in column {
                activity[*r] = activity[*r].clone() + a.clone() * value.clone();
            }
        }
        activity
    }

    fn column_dot(&self, column: usize, y: &[T]) -> T {
        self.columns[column]
            .iter()
            .fold(T::zero(), |acc, (r, a)| acc + a.clone() * y[*r].clone())
    }

    /// `x >= 0` and every row relation holds.
    pub fn check_primal(&self, x: &[T]) -> bool {
        if x.len() != self.columns.len() || x.iter().any(|v| v.is_strictly_negative()) {
            return false;
        }
        self.row_activity(x).iter().zip(&self.rows).all(|(lhs, row)| {
            let gap = lhs.clone() - row.rhs.clone();
            match row.relation {
                Relation::Eq => gap.is_negligible(),
                Relation::Ge => !gap.is_strictly_negative(),
                Relation::Le => !gap.is_strictly_positive(),
            }
        })
    }

    /// Farkas infeasibility proof: `y` with `y_i >= 0` on `>=` rows, `y_i <= 0`
    /// on `<=` rows, `yᵀA <= 0` on every column and `yᵀb > 0`. Any feasible
    /// `x` would give `0 >= yᵀAx >= yᵀb > 0`.
    pub fn check_farkas(&self, y: &[T]) -> bool {
        if y.len() != self.rows.len() || !self.dual_signs_ok(y) {
            return false;
        }
        if (0..self.columns.len()).any(|j| self.column_dot(j, y).is_strictly_positive()) {
            return false;
        }
        self.rhs_dot(y).is_strictly_positive()
    }

    /// Optimality proof for a minimization-form program: `y` is dual feasible
    /// (`yᵀA_j <= c_j`, sign conditions as in [`check_farkas`](Self::check_farkas))
    /// and `yᵀb` equals `value`. For maximization the dual is taken of the
    /// negated objective, so `yᵀb = -value`.
    pub fn check_dual_optimal(&self, y: &[T], value: &T) -> bool {
        let Some(obj) = &self.objective else {
            return false;
        };
        if y.len() != self.rows.len() || !self.dual_signs_ok(y) {
            return false;
        }
        let sign = match obj.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        for (j, c) in obj.coefficients.iter().enumerate() {
            let reduced = sign.clone() * c.clone() - self.column_dot(j, y);
            if reduced.is_strictly_negative() {
                return false;
            }
        }
        (self.rhs_dot(y) - sign * value.clone()).is_negligible()
    }

    fn dual_signs_ok(&self, y: &[T]) -> bool {
        y.iter().zip(&self.rows).all(|(yi, row)| match row.relation {
            Relation::Eq => true,
            Relation::Ge => !yi.is_strictly_negative(),
            Relation::Le => !yi.is_strictly_positive(),
        })
    }

    fn rhs_dot(&self, y: &[T]) -> T {
        y.iter()
            .zip(&self.rows)
            .fold(T::zero(), |acc, (yi, row)| acc + yi.clone() * row.rhs.clone())
    }
}

/// Solution of a feasible program. `dual` proves optimality of `objective`
/// (see [`LinearProgram::check_dual_optimal`]); it is all zeros when the
/// program has no objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub values: Vec<T>,
    pub objective: Option<T>,
    pub dual: Vec<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarkasCertificate<T> {
    pub dual: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal(Solution<T>),
    Infeasible(FarkasCertificate<T>),
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("simplex stopped after {iterations} pivots (iteration cap {cap}) in phase {phase}")]
    IterationLimit { iterations: usize, cap: usize, phase: u8 },
    #[error("solver produced a {what} that failed independent verification")]
    VerificationFailed { what: &'static str },
}
