//! Capability-mixture design by linear programming.
//!
//! For a target channel quality `c` we minimize the mean capability
//! `sum_t tau_t t` over mixtures that satisfy the success condition
//! `sum_t tau_t Psi_{>=t}(c x) <= x` on the grid `x = i / M`.

pub mod simplex;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{self, ThresholdOptions};
use crate::error::{Error, Result};
use crate::poisson::{self, CapabilityDistribution};
use crate::rng::with_jobs;
use crate::spec::{GpcSpec, TauAssignment};
pub use simplex::{solve_lp, Constraint, LinearProgram, LpStatus, Relation, SimplexSolution};

pub const DEFAULT_GRID: usize = 1000;
pub const DEFAULT_T_MAX: u32 = 50;
pub const MAX_T: u32 = 64;
pub const DEFAULT_MAX_PIVOTS: usize = 100_000;

/// The discretized mixture LP; variable `k` is `tau_{t_min + k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureLp {
    pub lp: LinearProgram,
    pub c: f64,
    pub grid: usize,
    pub t_min: u32,
    pub t_max: u32,
}

pub fn build_lp(c: f64, grid: usize, t_max: u32, t_min: Option<u32>) -> Result<MixtureLp> {
    let t_min = t_min.unwrap_or(1);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    if grid < 10 {
        return Err(Error::InvalidParameter(format!("grid size M = {grid} < 10")));
    }
    if t_min < 1 || t_min > t_max || t_max > MAX_T {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= t_min <= t_max <= {MAX_T}, got t_min = {t_min}, t_max = {t_max}"
        )));
    }
    let ts: Vec<u32> = (t_min..=t_max).collect();
    let mut lp = LinearProgram::new(ts.iter().map(|&t| t as f64).collect());
    let mut table = vec![0.0; t_max as usize + 1];
    for i in 1..=grid {
        let x = i as f64 / grid as f64;
        poisson::psi_geq_table(c * x, &mut table);
        lp.add(ts.iter().map(|&t| table[t as usize]).collect(), Relation::Le, x)?;
    }
    lp.add(vec![1.0; ts.len()], Relation::Eq, 1.0)?;
    Ok(MixtureLp {
        lp,
        c,
        grid,
        t_min,
        t_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionStatus {
    Optimal,
    Infeasible,
    DegenerateWarning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub c: f64,
    pub tau: Option<CapabilityDistribution>,
    pub t_bar: Option<f64>,
    pub status: SolutionStatus,
    /// DE threshold of `tau` as a single-position mixture; set by
    /// [`post_verify`].
    pub verified_threshold: Option<f64>,
    /// Minimum slack of the success condition on the fine grid.
    pub fine_grid_slack: Option<f64>,
}

pub fn solve(problem: &MixtureLp) -> Result<LpSolution> {
    let sol = solve_lp(&problem.lp, DEFAULT_MAX_PIVOTS)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(LpSolution {
                c: problem.c,
                tau: None,
                t_bar: None,
                status: SolutionStatus::Infeasible,
                verified_threshold: None,
                fine_grid_slack: None,
            })
        }
        LpStatus::Unbounded => {
            return Err(Error::InvalidParameter("mixture LP reported unbounded".into()))
        }
    }
    let mut probs = vec![0.0; problem.t_max as usize];
    for (k, v) in sol.x.iter().enumerate() {
        probs[problem.t_min as usize - 1 + k] = v.max(0.0);
    }
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    let tau = CapabilityDistribution::new(probs)?;
    Ok(LpSolution {
        c: problem.c,
        t_bar: Some(tau.mean()),
        tau: Some(tau),
        status: SolutionStatus::Optimal,
        verified_threshold: None,
        fine_grid_slack: None,
    })
}

/// Wraps a given mixture as an unverified solution at `c`.
pub fn candidate(tau: CapabilityDistribution, c: f64) -> LpSolution {
    LpSolution {
        c,
        t_bar: Some(tau.mean()),
        tau: Some(tau),
        status: SolutionStatus::Optimal,
        verified_threshold: None,
        fine_grid_slack: None,
    }
}

/// Re-checks the success condition on a grid of `10 * grid` points and
/// runs a DE threshold search. The status becomes `DegenerateWarning` when
/// some tested channel quality below `c` already fails to decode.
pub fn post_verify(solution: &LpSolution, grid: usize) -> Result<LpSolution> {
    let tau = match (&solution.tau, solution.status) {
        (Some(t), SolutionStatus::Optimal | SolutionStatus::DegenerateWarning) => t.clone(),
        _ => {
            return Err(Error::InvalidParameter(
                "post_verify needs an optimal solution".into(),
            ))
        }
    };
    let fine = de::success_condition(&tau, solution.c, 10 * grid.max(10))?;
    // DE ignores how capabilities are assigned; Random avoids the integral-count check
    let spec = GpcSpec::hpc_mixture(1000, tau, TauAssignment::Random)?;
    let th = de::threshold(&spec, &ThresholdOptions::default())?;
    let mut out = solution.clone();
    out.verified_threshold = Some(th.c_star);
    out.fine_grid_slack = Some(fine.min_slack);
    out.status = if th.c_hi < solution.c {
        SolutionStatus::DegenerateWarning
    } else {
        SolutionStatus::Optimal
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub c: f64,
    pub t_bar: f64,
    /// `2 t_bar - c`.
    pub gap: f64,
    /// `L_tau(c)` of the optimal mixture.
    pub loss_at_c: f64,
    pub conjecture_rhs: f64,
}

/// Minimal mean capability for each `c` in `c_grid`. Infeasible points are
/// dropped.
pub fn sweep_tradeoff(
    c_grid: &[f64],
    grid: usize,
    t_max: u32,
    t_min: Option<u32>,
    jobs: Option<usize>,
) -> Result<Vec<FrontierPoint>> {
    if c_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("c grid must be sorted".into()));
    }
    let solved: Vec<Result<Option<FrontierPoint>>> = with_jobs(jobs, || {
        c_grid
            .par_iter()
            .map(|&c| {
                let sol = solve(&build_lp(c, grid, t_max, t_min)?)?;
                let Some(tau) = sol.tau else { return Ok(None) };
                let t_bar = tau.mean();
                Ok(Some(FrontierPoint {
                    c,
                    t_bar,
                    gap: 2.0 * t_bar - c,
                    loss_at_c: poisson::loss_mixture(&tau, c)?,
                    conjecture_rhs: de::conjecture_rhs(c),
                }))
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in solved {
        if let Some(p) = r? {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn frontier_csv(points: &[FrontierPoint]) -> String {
    let mut out = String::from("c,t_bar,gap,loss_at_c,conjecture_rhs\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.c, p.t_bar, p.gap, p.loss_at_c, p.conjecture_rhs
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_shape() {
        let p = build_lp(10.0, 100, 12, Some(3)).unwrap();
        assert_eq!(p.lp.num_vars(), 10);
        assert_eq!(p.lp.constraints.len(), 101);
        assert_eq!(p.lp.constraints[99].coeffs[0], poisson::psi_geq(3, 10.0).unwrap());
        assert!(build_lp(10.0, 9, 12, None).is_err());
        assert!(build_lp(10.0, 100, 65, None).is_err());
        assert!(build_lp(10.0, 100, 4, Some(5)).is_err());
    }

    #[test]
    fn single_variable_lp() {
        let ok = solve(&build_lp(6.5, 1000, 4, Some(4)).unwrap()).unwrap();
        assert_eq!(ok.status, SolutionStatus::Optimal);
        assert_eq!(ok.t_bar, Some(4.0));
        let bad = solve(&build_lp(7.0, 1000, 4, Some(4)).unwrap()).unwrap();
        assert_eq!(bad.status, SolutionStatus::Infeasible);
    }

    #[test]
    fn point_mass_claimed_too_high_is_flagged() {
        let tau = CapabilityDistribution::point_mass(4).unwrap();
        let v = post_verify(&candidate(tau, 7.5), 1000).unwrap();
        assert_eq!(v.status, SolutionStatus::DegenerateWarning);
        assert!((v.verified_threshold.unwrap() - 6.8).abs() < 0.1);
    }

    #[test]
    fn frontier_csv_header() {
        let pts = sweep_tradeoff(&[4.0, 6.0], 100, 10, None, Some(2)).unwrap();
        let csv = frontier_csv(&pts);
        assert!(csv.starts_with("c,t_bar,gap,loss_at_c,conjecture_rhs\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(pts[0].t_bar <= pts[1].t_bar);
        assert!(sweep_tradeoff(&[6.0, 4.0], 100, 10, None, None).is_err());
    }
}
