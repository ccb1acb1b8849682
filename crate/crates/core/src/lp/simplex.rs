//! Two-phase revised simplex with an explicit basis inverse.
//!
//! Standard form: `>=`/`<=` rows get a slack column, rows with negative
//! right-hand side are negated, and every row gets an artificial column that
//! forms the starting basis. Entering and leaving variables follow Bland's
//! rule (lowest index), which rules out cycling. Artificial columns never
//! re-enter once they leave.

use super::{FarkasCertificate, LinearProgram, LpError, LpOutcome, Relation, Sense, Solution};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 1_000_000 }
    }
}

struct Tableau<T> {
    m: usize,
    /// Standard-form columns for structural and slack variables.
    cols: Vec<Vec<(usize, T)>>,
    /// Index of the first artificial column.
    art_start: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
    iterations: usize,
    cap: usize,
}

impl<T: Scalar> Tableau<T> {
    fn column(&self, j: usize) -> std::borrow::Cow<'_, [(usize, T)]> {
        if j < self.art_start {
            std::borrow::Cow::Borrowed(&self.cols[j])
        } else {
            std::borrow::Cow::Owned(vec![(j - self.art_start, T::one())])
        }
    }

    /// `y = c_Bᵀ B⁻¹`.
    fn duals(&self, cost: &dyn Fn(usize) -> T) -> Vec<T> {
        let mut y = vec![T::zero(); self.m];
        for (i, &b) in self.basis.iter().enumerate() {
            let c = cost(b);
            if c.is_zero() {
                continue;
            }
            for (k, v) in self.binv[i].iter().enumerate() {
                if !v.is_zero() {
                    y[k] = y[k].clone() + c.clone() * v.clone();
                }
            }
        }
        y
    }

    /// `B⁻¹ A_j`.
    fn ftran(&self, j: usize) -> Vec<T> {
        let col = self.column(j);
        (0..self.m)
            .map(|i| {
                col.iter().fold(T::zero(), |acc, (r, a)| {
                    let b = &self.binv[i][*r];
                    if b.is_zero() {
                        acc
                    } else {
                        acc + b.clone() * a.clone()
                    }
                })
            })
            .collect()
    }

    fn pivot(&mut self, row: usize, entering: usize, u: &[T]) {
        let pivot = u[row].clone();
        let theta = self.xb[row].clone() / pivot.clone();
        for i in 0..self.m {
            if i != row && !u[i].is_zero() {
                self.xb[i] = self.xb[i].clone() - theta.clone() * u[i].clone();
            }
        }
        self.xb[row] = theta;

        let pivot_row: Vec<T> = self.binv[row].iter().map(|v| v.clone() / pivot.clone()).collect();
        let nonzero: Vec<usize> = (0..self.m).filter(|&k| !pivot_row[k].is_zero()).collect();
        for i in 0..self.m {
            if i == row || u[i].is_zero() {
                continue;
            }
            let factor = u[i].clone();
            let target = &mut self.binv[i];
            for &k in &nonzero {
                target[k] = target[k].clone() - factor.clone() * pivot_row[k].clone();
            }
        }
        self.binv[row] = pivot_row;

        self.is_basic[self.basis[row]] = false;
        self.is_basic[entering] = true;
        self.basis[row] = entering;
        self.iterations += 1;
    }

    /// Runs simplex iterations for the given cost function until optimal.
    /// Returns `false` when the objective is unbounded below.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> T, phase: u8) -> Result<bool, LpError> {
        loop {
            if self.iterations >= self.cap {
                return Err(LpError::IterationLimit { iterations: self.iterations, cap: self.cap, phase });
            }
            let y = self.duals(cost);
            let entering = (0..self.art_start).find(|&j| {
                if self.is_basic[j] {
                    return false;
                }
                let mut reduced = cost(j);
                for (r, a) in &self.cols[j] {
                    let yr = &y[*r];
                    if yr.is_zero() {
                        continue;
                    }
                    reduced = if a.is_one() { reduced - yr.clone() } else { reduced - yr.clone() * a.clone() };
                }
                reduced.is_strictly_negative()
            });
            let Some(entering) = entering else {
                return Ok(true);
            };
            let u = self.ftran(entering);
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                if !u[i].is_strictly_positive() {
                    continue;
                }
                let ratio = self.xb[i].clone() / u[i].clone();
                let better = match &leave {
                    None => true,
                    Some((best_i, best)) => {
                        ratio < *best || (!(ratio > *best) && self.basis[i] < self.basis[*best_i])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, entering, &u),
                None => return Ok(false),
            }
        }
    }
}

/// Solves `lp` exactly (for exact scalars). Results are verified against the
/// original program before they are returned.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>, options: &SolverOptions) -> Result<LpOutcome<T>, LpError> {
    let m = lp.num_rows();
    let n = lp.num_vars();

    let signs: Vec<bool> = lp.rows().iter().map(|r| r.rhs.is_strictly_negative()).collect();
    let flip = |i: usize, v: T| if signs[i] { -v } else { v };

    let mut cols: Vec<Vec<(usize, T)>> = lp
        .columns()
        .iter()
        .map(|col| col.iter().map(|(r, a)| (*r, flip(*r, a.clone()))).collect())
        .collect();
    for (i, row) in lp.rows().iter().enumerate() {
        let coef = match row.relation {
            Relation::Eq => continue,
            Relation::Ge => -T::one(),
            Relation::Le => T::one(),
        };
        cols.push(vec![(i, flip(i, coef))]);
    }
    let art_start = cols.len();
    let total = art_start + m;

    let mut binv = vec![vec![T::zero(); m]; m];
    for (i, row) in binv.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let mut is_basic = vec![false; total];
    for flag in &mut is_basic[art_start..] {
        *flag = true;
    }
    let mut tab = Tableau {
        m,
        cols,
        art_start,
        basis: (art_start..total).collect(),
        is_basic,
        binv,
        xb: lp.rows().iter().enumerate().map(|(i, r)| flip(i, r.rhs.clone())).collect(),
        iterations: 0,
        cap: options.max_iterations,
    };

    // Phase I: minimize the sum of artificials.
    let phase_one_cost = |j: usize| if j >= art_start { T::one() } else { T::zero() };
    tab.optimize(&phase_one_cost, 1)?;
    let infeasibility = tab
        .basis
        .iter()
        .zip(&tab.xb)
        .filter(|(&b, _)| b >= art_start)
        .fold(T::zero(), |acc, (_, v)| acc + v.clone());
    if infeasibility.is_strictly_positive() {
        let y = tab.duals(&phase_one_cost);
        let dual: Vec<T> = y.into_iter().enumerate().map(|(i, v)| flip(i, v)).collect();
        if !lp.check_farkas(&dual) {
            return Err(LpError::VerificationFailed { what: "Farkas certificate" });
        }
        return Ok(LpOutcome::Infeasible(FarkasCertificate { dual }));
    }

    // Drive zero-level artificials out of the basis where a real column can
    // replace them; the ones that stay sit on redundant rows.
    for row in 0..m {
        if tab.basis[row] < art_start {
            continue;
        }
        let candidate = (0..art_start).find(|&j| {
            !tab.is_basic[j]
                && !tab.cols[j]
                    .iter()
                    .fold(T::zero(), |acc, (r, a)| acc + tab.binv[row][*r].clone() * a.clone())
                    .is_zero()
        });
        if let Some(j) = candidate {
            let u = tab.ftran(j);
            tab.pivot(row, j, &u);
        }
    }

    // Phase II on the minimization form of the objective.
    let min_costs: Option<Vec<T>> = lp.objective().map(|obj| {
        obj.coefficients
            .iter()
            .map(|c| match obj.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => -c.clone(),
            })
            .collect()
    });
    let mut dual = vec![T::zero(); m];
    if let Some(costs) = &min_costs {
        let phase_two_cost = |j: usize| if j < n { costs[j].clone() } else { T::zero() };
        if !tab.optimize(&phase_two_cost, 2)? {
            return Ok(LpOutcome::Unbounded);
        }
        dual = tab
            .duals(&phase_two_cost)
            .into_iter()
            .enumerate()
            .map(|(i, v)| flip(i, v))
            .collect();
    }

    let mut values = vec![T::zero(); n];
    for (&b, v) in tab.basis.iter().zip(&tab.xb) {
        if b < n {
            values[b] = v.clone();
        }
    }
    if !lp.check_primal(&values) {
        return Err(LpError::VerificationFailed { what: "primal solution" });
    }
    let objective = lp.objective_value(&values);
    if let Some(value) = &objective {
        if !lp.check_dual_optimal(&dual, value) {
            return Err(LpError::VerificationFailed { what: "optimality certificate" });
        }
    }
    Ok(LpOutcome::Optimal(Solution {
        values,
        objective,
        dual,
        iterations: tab.iterations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn solve_exact(lp: &LinearProgram<Rational>) -> LpOutcome<Rational> {
        solve(lp, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn single_equality_half() {
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Relation::Eq, q(1, 2));
        lp.add_variable(vec![(r, q(1, 1))]);
        match solve_exact(&lp) {
            LpOutcome::Optimal(sol) => assert_eq!(sol.values, vec![q(1, 2)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_target_is_infeasible_with_certificate() {
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Relation::Eq, q(-1, 1));
        lp.add_variable(vec![(r, q(1, 1))]);
        match solve_exact(&lp) {
            LpOutcome::Infeasible(cert) => {
                assert!(lp.check_farkas(&cert.dual));
                assert!(cert.dual[0] < q(0, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transportation_diagonal_optimum_is_one() {
        // x_ab over a,b in {0,1}; rows: x0. = 1/2, x1. = 1/2, x.0 = 1/2, x.1 = 1/2.
        let mut lp = LinearProgram::new();
        let rows: Vec<usize> = (0..4).map(|_| lp.add_row(Relation::Eq, q(1, 2))).collect();
        for a in 0..2 {
            for b in 0..2 {
                lp.add_variable(vec![(rows[a], q(1, 1)), (rows[2 + b], q(1, 1))]);
            }
        }
        lp.set_objective(Sense::Maximize, vec![q(1, 1), q(0, 1), q(0, 1), q(1, 1)]);
        match solve_exact(&lp) {
            LpOutcome::Optimal(sol) => {
                assert_eq!(sol.objective, Some(q(1, 1)));
                assert!(lp.check_dual_optimal(&sol.dual, &q(1, 1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inequalities_and_minimization() {
        // min x + 2y  s.t. x + y >= 3, x <= 2, y <= 5  -> x = 2, y = 1, value 4.
        let mut lp = LinearProgram::new();
        let r0 = lp.add_row(Relation::Ge, q(3, 1));
        let r1 = lp.add_row(Relation::Le, q(2, 1));
        let r2 = lp.add_row(Relation::Le, q(5, 1));
        lp.add_variable(vec![(r0, q(1, 1)), (r1, q(1, 1))]);
        lp.add_variable(vec![(r0, q(1, 1)), (r2, q(1, 1))]);
        lp.set_objective(Sense::Minimize, vec![q(1, 1), q(2, 1)]);
        match solve_exact(&lp) {
            LpOutcome::Optimal(sol) => {
                assert_eq!(sol.values, vec![q(2, 1), q(1, 1)]);
                assert_eq!(sol.objective, Some(q(4, 1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new();
        let r0 = lp.add_row(Relation::Ge, q(1, 1));
        lp.add_variable(vec![(r0, q(1, 1))]);
        lp.set_objective(Sense::Maximize, vec![q(1, 1)]);
        assert_eq!(solve_exact(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // x + y = 1 stated twice, plus x = 1/3.
        let mut lp = LinearProgram::new();
        let r0 = lp.add_row(Relation::Eq, q(1, 1));
        let r1 = lp.add_row(Relation::Eq, q(1, 1));
        let r2 = lp.add_row(Relation::Eq, q(1, 3));
        lp.add_variable(vec![(r0, q(1, 1)), (r1, q(1, 1)), (r2, q(1, 1))]);
        lp.add_variable(vec![(r0, q(1, 1)), (r1, q(1, 1))]);
        lp.set_objective(Sense::Maximize, vec![q(0, 1), q(1, 1)]);
        match solve_exact(&lp) {
            LpOutcome::Optimal(sol) => assert_eq!(sol.values, vec![q(1, 3), q(2, 3)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_diagnostic() {
        let mut lp = LinearProgram::new();
        let r0 = lp.add_row(Relation::Eq, q(1, 1));
        lp.add_variable(vec![(r0, q(1, 1))]);
        let err = solve(&lp, &SolverOptions { max_iterations: 0 }).unwrap_err();
        assert!(matches!(err, LpError::IterationLimit { phase: 1, .. }));
    }

    #[test]
    fn float_scalar_solves_same_program() {
        let mut lp = LinearProgram::<f64>::new();
        let r0 = lp.add_row(Relation::Ge, 3.0);
        let r1 = lp.add_row(Relation::Le, 2.0);
        lp.add_variable(vec![(r0, 1.0), (r1, 1.0)]);
        lp.add_variable(vec![(r0, 1.0)]);
        lp.set_objective(Sense::Minimize, vec![1.0, 2.0]);
        match solve(&lp, &SolverOptions::default()).unwrap() {
            LpOutcome::Optimal(sol) => assert!((sol.objective.unwrap() - 4.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance (cycles under Dantzig's rule).
        // min -3/4 x4 + 20 x5 - 1/2 x6 + 6 x7
        // s.t. 1/4 x4 - 8 x5 - x6 + 9 x7 <= 0
        //      1/2 x4 - 12 x5 - 1/2 x6 + 3 x7 <= 0
        //      x6 <= 1
        let mut lp = LinearProgram::new();
        let r0 = lp.add_row(Relation::Le, q(0, 1));
        let r1 = lp.add_row(Relation::Le, q(0, 1));
        let r2 = lp.add_row(Relation::Le, q(1, 1));
        lp.add_variable(vec![(r0, q(1, 4)), (r1, q(1, 2))]);
        lp.add_variable(vec![(r0, q(-8, 1)), (r1, q(-12, 1))]);
        lp.add_variable(vec![(r0, q(-1, 1)), (r1, q(-1, 2)), (r2, q(1, 1))]);
        lp.add_variable(vec![(r0, q(9, 1)), (r1, q(3, 1))]);
        lp.set_objective(Sense::Minimize, vec![q(-3, 4), q(20, 1), q(-1, 2), q(6, 1)]);
        match solve_exact(&lp) {
            LpOutcome::Optimal(sol) => assert_eq!(sol.objective, Some(q(-5, 4))),
            other => panic!("{other:?}"),
        }
    }
}
