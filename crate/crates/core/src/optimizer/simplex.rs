//! Dense two-phase primal simplex with Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Minimize `objective . x` subject to `constraints` and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars(),
                got: coeffs.len(),
            });
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Largest violation of any constraint or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 1)`, last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(Error::PivotLimit(self.max_pivots));
        }
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        let (before, rest) = self.a.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v /= p;
        }
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (v, q) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * q;
                }
                row[pc] = 0.0;
            }
        }
        for r in 0..self.rows {
            let v = &mut self.a[r * w + self.cols];
            if *v < 0.0 && *v > -FEAS_TOL {
                *v = 0.0;
            }
        }
        self.basis[pr] = pc;
        Ok(())
    }

    /// Reduced costs for `cost` over the first `allowed` columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        for (row, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj -= cb * self.at(row, j);
                }
            }
        }
        r
    }

    /// Minimizes `cost` using columns `< allowed`. Returns false when
    /// unbounded. Prices by most negative reduced cost and falls back to
    /// Bland's rule after a run of degenerate pivots.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run > BLAND_AFTER;
            let r = self.reduced_costs(cost);
            let enter = if bland {
                (0..allowed).find(|&j| r[j] < -EPS)
            } else {
                (0..allowed)
                    .filter(|&j| r[j] < -EPS)
                    .min_by(|&i, &j| r[i].total_cmp(&r[j]))
            };
            let Some(enter) = enter else {
                return Ok(true);
            };
            let col_max = (0..self.rows)
                .map(|row| self.at(row, enter).abs())
                .fold(0.0, f64::max);
            let piv_tol = PIVOT_TOL * col_max.max(1.0);
            // two-pass ratio test: relaxed bound first, then the largest
            // pivot (or lowest basis index under Bland) among rows within it
            let mut bound = f64::INFINITY;
            for row in 0..self.rows {
                let a = self.at(row, enter);
                if a > piv_tol {
                    bound = bound.min((self.rhs(row).max(0.0) + FEAS_TOL) / a);
                }
            }
            if bound.is_infinite() {
                return Ok(false);
            }
            let mut leave: Option<usize> = None;
            for row in 0..self.rows {
                let a = self.at(row, enter);
                if a > piv_tol && self.rhs(row).max(0.0) / a <= bound {
                    leave = match leave {
                        None => Some(row),
                        Some(l) => {
                            let better = if bland {
                                self.basis[row] < self.basis[l]
                            } else {
                                a > self.at(l, enter)
                            };
                            Some(if better { row } else { l })
                        }
                    };
                }
            }
            let row = leave.expect("bound is finite so some row qualifies");
            let step = self.rhs(row).max(0.0) / self.at(row, enter);
            self.pivot(row, enter)?;
            if step * (-r[enter]) <= EPS {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(row, &b)| cost[b] * self.rhs(row))
            .sum()
    }
}

/// Solves `lp`; errors if more than `max_pivots` pivots are needed.
pub fn solve_lp(lp: &LinearProgram, max_pivots: usize) -> Result<SimplexSolution> {
    let n = lp.num_vars();
    let m = lp.constraints.len();
    let mut rows: Vec<Constraint> = lp.constraints.clone();
    for c in &mut rows {
        if c.rhs < 0.0 {
            c.rhs = -c.rhs;
            c.coeffs.iter_mut().for_each(|v| *v = -*v);
            c.relation = match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let slacks = rows.iter().filter(|c| c.relation != Relation::Eq).count();
    let artificials = rows.iter().filter(|c| c.relation != Relation::Le).count();
    let first_art = n + slacks;
    let cols = first_art + artificials;
    let w = cols + 1;
    let mut a = vec![0.0; m * w];
    let mut basis = vec![0; m];
    let (mut s, mut art) = (n, first_art);
    for (r, c) in rows.iter().enumerate() {
        a[r * w..r * w + n].copy_from_slice(&c.coeffs);
        a[r * w + cols] = c.rhs;
        match c.relation {
            Relation::Le => {
                a[r * w + s] = 1.0;
                basis[r] = s;
                s += 1;
            }
            Relation::Ge => {
                a[r * w + s] = -1.0;
                s += 1;
                a[r * w + art] = 1.0;
                basis[r] = art;
                art += 1;
            }
            Relation::Eq => {
                a[r * w + art] = 1.0;
                basis[r] = art;
                art += 1;
            }
        }
    }
    let mut t = Tableau {
        rows: m,
        cols,
        a,
        basis,
        pivots: 0,
        max_pivots,
    };

    if artificials > 0 {
        let mut cost1 = vec![0.0; cols];
        cost1[first_art..].iter_mut().for_each(|v| *v = 1.0);
        t.optimize(&cost1, cols)?;
        let scale = 1.0 + rows.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        if t.objective(&cost1) > 1e-9 * scale {
            return Ok(SimplexSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                pivots: t.pivots,
            });
        }
        // drive remaining (zero-level) artificials out of the basis
        let mut r = 0;
        while r < t.rows {
            if t.basis[r] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| t.at(r, j).abs() > EPS) {
                    t.pivot(r, j)?;
                } else {
                    // redundant row
                    let w = t.cols + 1;
                    t.a.drain(r * w..(r + 1) * w);
                    t.basis.remove(r);
                    t.rows -= 1;
                    continue;
                }
            }
            r += 1;
        }
    }

    let mut cost2 = vec![0.0; cols];
    cost2[..n].copy_from_slice(&lp.objective);
    if !t.optimize(&cost2, first_art)? {
        return Ok(SimplexSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::NEG_INFINITY,
            pivots: t.pivots,
        });
    }
    let mut x = vec![0.0; n];
    for (row, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(row);
        }
    }
    let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    let violation = lp.max_violation(&x);
    if violation > 1e-7 * scale {
        return Err(Error::Numerical(format!(
            "final point violates a constraint by {violation:e}"
        )));
    }
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(SimplexSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        pivots: t.pivots,
    })
}
