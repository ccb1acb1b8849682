use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{Coupling, CouplingConfig, CouplingError, FeasibilityResult};
use crate::index::MixedRadix;
use crate::lp::{FarkasCertificate, LinearProgram, LpError, Relation};
use crate::system::System;
use crate::Rational;

/// Most content assignments the oracle will enumerate.
pub const ORACLE_VERTEX_CAP: u128 = 100_000;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceReport {
    /// Content assignments enumerated.
    pub vertices: usize,
    /// Distinct block-outcome signatures among them.
    pub distinct: usize,
    /// Certificates refer to the oracle's own mixture system: one row per
    /// (block, joint outcome) in block order, then a normalization row.
    pub result: FeasibilityResult,
}

/// Identity-coupling existence decided without the coupling polytope or the
/// revised simplex: every deterministic content assignment is a vertex, and
/// the question becomes whether some mixture of vertices reproduces every
/// block. The mixture system is solved by a dense Gauss-Jordan tableau.
pub fn brute_force_identity(system: &System, config: &CouplingConfig) -> Result<BruteForceReport, CouplingError> {
    let radix = MixedRadix::new(system.contents().map(|(_, a)| a.len()).collect());
    let count = match radix.count() {
        Some(c) if c <= ORACLE_VERTEX_CAP => c as usize,
        count => return Err(CouplingError::TooLarge { what: "vertex enumeration", count, cap: ORACLE_VERTEX_CAP }),
    };

    let block_content: Vec<Vec<usize>> = system
        .blocks()
        .iter()
        .map(|b| b.variables().iter().map(|v| system.content_index(&v.content).expect("content")).collect())
        .collect();
    let mut row_offset = Vec::with_capacity(system.blocks().len());
    let mut rows = 0;
    for b in system.blocks() {
        row_offset.push(rows);
        rows += b.joint_outcome_count();
    }
    let normalization = rows;
    rows += 1;

    // Signature of a vertex: the row hit in each block.
    let mut representatives: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for assignment in radix.tuples() {
        let signature: Vec<usize> = system
            .blocks()
            .iter()
            .zip(&block_content)
            .zip(&row_offset)
            .map(|((b, contents), offset)| {
                let local: Vec<usize> = contents.iter().map(|&c| assignment[c]).collect();
                offset + b.radix().encode(&local)
            })
            .collect();
        representatives.entry(signature).or_insert(assignment);
    }
    let distinct = representatives.len();
    let cells = (distinct as u128).saturating_mul(rows as u128);
    if cells > config.var_cap {
        return Err(CouplingError::TooLarge { what: "vertex mixture tableau", count: Some(cells), cap: config.var_cap });
    }

    let mut rhs = vec![Rational::zero(); rows];
    for (b, offset) in system.blocks().iter().zip(&row_offset) {
        for (outcome, p) in b.atoms() {
            rhs[offset + b.radix().encode(outcome)] = p.clone();
        }
    }
    rhs[normalization] = Rational::one();

    let columns: Vec<(Vec<usize>, Vec<usize>)> = representatives.into_iter().collect();
    let mut program = LinearProgram::<Rational>::new();
    for r in &rhs {
        program.add_row(Relation::Eq, r.clone());
    }
    for (signature, _) in &columns {
        let mut entries: Vec<(usize, Rational)> = signature.iter().map(|&r| (r, Rational::one())).collect();
        entries.push((normalization, Rational::one()));
        program.add_variable(entries);
    }

    let result = match phase_one(&program, &rhs, config.solver.max_iterations)? {
        Ok(weights) => {
            if !program.check_primal(&weights) {
                return Err(LpError::VerificationFailed { what: "oracle mixture" }.into());
            }
            let mut atoms: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
            let roster_content: Vec<usize> = block_content.iter().flatten().copied().collect();
            for ((_, assignment), w) in columns.iter().zip(weights) {
                if w.is_zero() {
                    continue;
                }
                let key: Vec<usize> = roster_content.iter().map(|&c| assignment[c]).collect();
                *atoms.entry(key).or_insert_with(Rational::zero) += w;
            }
            FeasibilityResult::Feasible { witness: Coupling::new(system.roster(), atoms) }
        }
        Err(dual) => {
            if !program.check_farkas(&dual) {
                return Err(LpError::VerificationFailed { what: "oracle certificate" }.into());
            }
            FeasibilityResult::Infeasible { certificate: FarkasCertificate { dual } }
        }
    };
    Ok(BruteForceReport { vertices: count, distinct, result })
}

/// Phase I on `A x = b, x >= 0` with `b >= 0`, one artificial per row.
/// Returns a feasible `x` or the phase-I dual, which is a Farkas vector.
fn phase_one(
    program: &LinearProgram<Rational>,
    rhs: &[Rational],
    cap: usize,
) -> Result<Result<Vec<Rational>, Vec<Rational>>, CouplingError> {
    let m = rhs.len();
    let n = program.num_vars();
    let width = n + m;
    let mut t = vec![vec![Rational::zero(); width]; m];
    for (j, column) in program.columns().iter().enumerate() {
        for (r, a) in column {
            t[*r][j] = a.clone();
        }
    }
    for (i, row) in t.iter_mut().enumerate() {
        row[n + i] = Rational::one();
    }
    let mut b = rhs.to_vec();
    let mut basis: Vec<usize> = (n..width).collect();

    // Reduced costs of the phase-I objective (sum of artificials).
    let mut reduced = vec![Rational::zero(); width];
    for j in 0..n {
        reduced[j] = -t.iter().map(|row| &row[j]).sum::<Rational>();
    }

    let mut iterations = 0;
    let mut streak = 0;
    loop {
        let entering = if streak < DEGENERATE_STREAK {
            (0..width)
                .filter(|&j| reduced[j].is_negative())
                .min_by(|&a, &b| reduced[a].cmp(&reduced[b]).then(a.cmp(&b)))
        } else {
            (0..width).find(|&j| reduced[j].is_negative())
        };
        let Some(e) = entering else { break };

        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !t[i][e].is_positive() {
                continue;
            }
            let ratio = &b[i] / &t[i][e];
            let better = match &leave {
                None => true,
                Some((k, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*k]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // The phase-I objective is bounded below by zero.
        let (l, ratio) = leave.expect("phase I is bounded");
        streak = if ratio.is_zero() { streak + 1 } else { 0 };

        iterations += 1;
        if iterations > cap {
            return Err(LpError::IterationLimit { iterations, cap, phase: 1 }.into());
        }

        let pivot = t[l][e].clone();
        for v in t[l].iter_mut() {
            *v /= &pivot;
        }
        b[l] /= &pivot;
        let pivot_row = t[l].clone();
        let pivot_b = b[l].clone();
        for i in 0..m {
            if i == l || t[i][e].is_zero() {
                continue;
            }
            let f = t[i][e].clone();
            for (v, p) in t[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            b[i] -= &f * &pivot_b;
        }
        let f = reduced[e].clone();
        for (v, p) in reduced.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &f * p;
            }
        }
        basis[l] = e;
    }

    let infeasibility: Rational = basis.iter().zip(&b).filter(|(&j, _)| j >= n).map(|(_, v)| v).sum();
    if infeasibility.is_positive() {
        // Artificial i has cost 1 and column e_i, so its reduced cost is 1 - y_i.
        let dual = (0..m).map(|i| Rational::one() - &reduced[n + i]).collect();
        return Ok(Err(dual));
    }
    let mut x = vec![Rational::zero(); n];
    for (&j, v) in basis.iter().zip(&b) {
        if j < n {
            x[j] = v.clone();
        }
    }
    Ok(Ok(x))
}
