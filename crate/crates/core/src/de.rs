//! Density evolution for GPCs on the erasure channel.
//!
//! `x_i` is the probability that a check node at position `i`, reached
//! through an edge, is still unresolved; `z` is the probability that a
//! uniformly chosen check node still declares failure. Both recursions are
//! driven by the Poisson mean `c * sum_j eta_ij gamma_j x_j`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{self, CapabilityDistribution};
use crate::spec::GpcSpec;

pub const DEFAULT_ELL_MAX: usize = 20_000;
pub const DEFAULT_SUCCESS_EPSILON: f64 = 1e-8;
pub const DEFAULT_X_TOLERANCE: f64 = 1e-13;
pub const DEFAULT_CONDITION_GRID: usize = 10_000;

/// Sequence of active position sets, one per iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    active_sets: Vec<Vec<usize>>,
}

impl Schedule {
    /// Validates that every set is nonempty, indices are in range and the
    /// union covers all `positions`.
    pub fn new(active_sets: Vec<Vec<usize>>, positions: usize) -> Result<Self> {
        if active_sets.is_empty() {
            return Err(Error::InvalidParameter("schedule has no steps".into()));
        }
        let mut covered = vec![false; positions];
        for (l, set) in active_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidParameter(format!("schedule step {l} is empty")));
            }
            for &i in set {
                if i >= positions {
                    return Err(Error::InvalidParameter(format!(
                        "schedule step {l} activates position {i} >= L = {positions}"
                    )));
                }
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidParameter(format!(
                "position {i} is never active"
            )));
        }
        let active_sets = active_sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(Self { active_sets })
    }

    /// Every position active in each of `steps` iterations.
    pub fn full(positions: usize, steps: usize) -> Result<Self> {
        Self::new(vec![(0..positions).collect(); steps], positions)
    }

    /// Sliding window: positions `[s, s + width)` are active for
    /// `steps_per_slide` iterations, then `s` advances by one, until the
    /// window reaches the last position.
    pub fn window(positions: usize, width: usize, steps_per_slide: usize) -> Result<Self> {
        if width == 0 || width > positions || steps_per_slide == 0 {
            return Err(Error::InvalidParameter(format!(
                "window width {width} / steps {steps_per_slide} invalid for L = {positions}"
            )));
        }
        let mut sets = Vec::new();
        for s in 0..=positions - width {
            for _ in 0..steps_per_slide {
                sets.push((s..s + width).collect());
            }
        }
        Self::new(sets, positions)
    }

    /// Cycles through `pattern` for `steps` iterations (e.g. rows, columns).
    pub fn cyclic(pattern: &[Vec<usize>], steps: usize, positions: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::InvalidParameter("empty cyclic pattern".into()));
        }
        let sets = (0..steps).map(|l| pattern[l % pattern.len()].clone()).collect();
        Self::new(sets, positions)
    }

    pub fn len(&self) -> usize {
        self.active_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_sets.is_empty()
    }

    /// Active positions of iteration `step` (0-based).
    pub fn active(&self, step: usize) -> &[usize] {
        &self.active_sets[step]
    }

    pub fn steps(&self) -> &[Vec<usize>] {
        &self.active_sets
    }

    fn mask(&self, step: usize, positions: usize) -> Vec<bool> {
        let mut m = vec![false; positions];
        for &i in self.active(step) {
            m[i] = true;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConvergedToZero,
    StuckPositive,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct DeOptions {
    pub ell_max: usize,
    pub schedule: Option<Schedule>,
    /// Relative step change below which a run above `success_epsilon` is
    /// declared stuck.
    pub x_tolerance: f64,
    pub success_epsilon: f64,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            ell_max: DEFAULT_ELL_MAX,
            schedule: None,
            x_tolerance: DEFAULT_X_TOLERANCE,
            success_epsilon: DEFAULT_SUCCESS_EPSILON,
        }
    }
}

impl DeOptions {
    pub fn with_ell_max(ell_max: usize) -> Self {
        Self {
            ell_max,
            ..Self::default()
        }
    }
}

/// Iterates of a DE run. Index 0 holds the initial condition (all ones).
#[derive(Debug, Clone, PartialEq)]
pub struct DeTrajectory {
    pub x: Vec<Vec<f64>>,
    /// Overall failure probability `z = sum_i gamma_i z_i`.
    pub z: Vec<f64>,
    /// Per-position failure probabilities `z_i`.
    pub z_positions: Vec<Vec<f64>>,
    pub iterations_run: usize,
    pub verdict: Verdict,
}

impl DeTrajectory {
    pub fn final_x(&self) -> &[f64] {
        self.x.last().expect("trajectory holds the initial condition")
    }

    pub fn final_z(&self) -> f64 {
        *self.z.last().expect("trajectory holds the initial condition")
    }

    /// CSV with columns `iteration, x_1..x_L, z`, one row per iteration
    /// starting at 1.
    pub fn to_csv(&self) -> String {
        let l = self.x[0].len();
        let mut out = String::from("iteration");
        for i in 1..=l {
            let _ = write!(out, ",x_{i}");
        }
        out.push_str(",z\n");
        for ell in 1..self.x.len() {
            let _ = write!(out, "{ell}");
            for v in &self.x[ell] {
                let _ = write!(out, ",{v:e}");
            }
            let _ = writeln!(out, ",{:e}", self.z[ell]);
        }
        out
    }
}

/// Precomputed coupling weights `eta_ij gamma_j` for one spec.
struct Coupling<'a> {
    spec: &'a GpcSpec,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl<'a> Coupling<'a> {
    fn new(spec: &'a GpcSpec) -> Self {
        let l = spec.positions();
        let neighbors = (0..l)
            .map(|i| {
                (0..l)
                    .filter(|&j| spec.coupled(i, j))
                    .map(|j| (j, spec.gamma[j]))
                    .collect()
            })
            .collect();
        Self { spec, neighbors }
    }

    fn lambda(&self, i: usize, x: &[f64], c: f64) -> f64 {
        c * self.neighbors[i].iter().map(|&(j, w)| w * x[j]).sum::<f64>()
    }

    /// One collapsed step restricted to positions where `active` is set;
    /// other entries of `x_out`/`z_out` are left untouched.
    fn step(
        &self,
        x: &[f64],
        c: f64,
        active: Option<&[bool]>,
        x_out: &mut [f64],
        z_out: &mut [f64],
        scratch: &mut Vec<f64>,
    ) {
        for i in 0..x.len() {
            if active.is_some_and(|a| !a[i]) {
                continue;
            }
            let lambda = self.lambda(i, x, c);
            let tau = &self.spec.tau[i];
            let len = tau.t_max() as usize + 2;
            scratch.resize(len, 0.0);
            poisson::psi_geq_table(lambda, scratch);
            let mut xi = 0.0;
            let mut zi = 0.0;
            for (t, w) in tau.iter() {
                xi += w * scratch[t as usize];
                zi += w * scratch[t as usize + 1];
            }
            x_out[i] = xi;
            z_out[i] = zi;
        }
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("channel quality c must be >= 0, got {c}")));
    }
    Ok(())
}

fn check_x(spec: &GpcSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.positions() {
        return Err(Error::DimensionMismatch {
            expected: spec.positions(),
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::Domain(format!("DE state entry {v} outside [0, 1]")));
    }
    Ok(())
}

/// One step of the collapsed recursion
/// `x_i' = sum_t tau_t(i) Psi_{>=t}(c sum_j eta_ij gamma_j x_j)`.
pub fn de_step(spec: &GpcSpec, x: &[f64], c: f64) -> Result<Vec<f64>> {
    check_c(c)?;
    check_x(spec, x)?;
    let coupling = Coupling::new(spec);
    let mut out = vec![0.0; x.len()];
    let mut z = vec![0.0; x.len()];
    coupling.step(x, c, None, &mut out, &mut z, &mut Vec::new());
    Ok(out)
}

/// Failure probability of a uniformly chosen check node given the previous
/// iterate `x`.
pub fn z_of(spec: &GpcSpec, x: &[f64], c: f64) -> Result<f64> {
    Ok(z_positions(spec, x, c)?
        .iter()
        .zip(&spec.gamma)
        .map(|(z, g)| z * g)
        .sum())
}

/// Per-position failure probabilities `z_i` given the previous iterate `x`.
pub fn z_positions(spec: &GpcSpec, x: &[f64], c: f64) -> Result<Vec<f64>> {
    check_c(c)?;
    check_x(spec, x)?;
    let coupling = Coupling::new(spec);
    let mut out = vec![0.0; x.len()];
    let mut z = vec![0.0; x.len()];
    coupling.step(x, c, None, &mut out, &mut z, &mut Vec::new());
    Ok(z)
}

fn check_typed(spec: &GpcSpec, x_typed: &[Vec<f64>]) -> Result<()> {
    if x_typed.len() != spec.positions() {
        return Err(Error::DimensionMismatch {
            expected: spec.positions(),
            got: x_typed.len(),
        });
    }
    for (i, row) in x_typed.iter().enumerate() {
        let expected = spec.tau[i].t_max() as usize;
        if row.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: row.len(),
            });
        }
    }
    Ok(())
}

fn typed_lambdas(spec: &GpcSpec, x_typed: &[Vec<f64>], c: f64) -> Vec<f64> {
    let l = spec.positions();
    // inner[j] = sum_t' tau_t'(j) x_{j,t'}
    let inner: Vec<f64> = (0..l)
        .map(|j| {
            spec.tau[j]
                .iter()
                .map(|(t, w)| w * x_typed[j][t as usize - 1])
                .sum()
        })
        .collect();
    (0..l)
        .map(|i| {
            c * (0..l)
                .filter(|&j| spec.coupled(i, j))
                .map(|j| spec.gamma[j] * inner[j])
                .sum::<f64>()
        })
        .collect()
}

/// One step of the per-type recursion over `(position, capability)`;
/// `x_typed[i][t - 1]` is the survival probability of a type-`(i, t)` node.
pub fn de_step_per_type(spec: &GpcSpec, x_typed: &[Vec<f64>], c: f64) -> Result<Vec<Vec<f64>>> {
    check_c(c)?;
    check_typed(spec, x_typed)?;
    let lambdas = typed_lambdas(spec, x_typed, c);
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let t_max = spec.tau[i].t_max() as usize;
            let mut table = vec![0.0; t_max + 1];
            poisson::psi_geq_table(lambda, &mut table);
            table[1..].to_vec()
        })
        .collect())
}

/// Per-type failure probabilities `z_{i,t}` given the previous per-type iterate.
pub fn z_per_type(spec: &GpcSpec, x_typed: &[Vec<f64>], c: f64) -> Result<Vec<Vec<f64>>> {
    check_c(c)?;
    check_typed(spec, x_typed)?;
    let lambdas = typed_lambdas(spec, x_typed, c);
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let t_max = spec.tau[i].t_max() as usize;
            let mut table = vec![0.0; t_max + 2];
            poisson::psi_geq_table(lambda, &mut table);
            table[2..].to_vec()
        })
        .collect())
}

/// Initial per-type state (all ones).
pub fn per_type_ones(spec: &GpcSpec) -> Vec<Vec<f64>> {
    spec.tau
        .iter()
        .map(|d| vec![1.0; d.t_max() as usize])
        .collect()
}

/// Runs DE from `x = 1`, optionally under a schedule. Inactive positions
/// carry `x_i` and `z_i` forward unchanged.
pub fn de_run(spec: &GpcSpec, c: f64, opts: &DeOptions) -> Result<DeTrajectory> {
    check_c(c)?;
    let l = spec.positions();
    if let Some(s) = &opts.schedule {
        // re-validate against this spec's L
        Schedule::new(s.steps().to_vec(), l)?;
    }
    let coupling = Coupling::new(spec);
    let steps = match &opts.schedule {
        Some(s) => s.len().min(opts.ell_max),
        None => opts.ell_max,
    };

    let mut xs = vec![vec![1.0; l]];
    let mut zp = vec![vec![1.0; l]];
    let mut zs = vec![1.0];
    let mut scratch = Vec::new();
    let mut verdict = Verdict::IterationCap;

    for step in 0..steps {
        let prev = xs.last().unwrap().clone();
        let mut x = prev.clone();
        let mut z = zp.last().unwrap().clone();
        let mask = opts.schedule.as_ref().map(|s| s.mask(step, l));
        coupling.step(&prev, c, mask.as_deref(), &mut x, &mut z, &mut scratch);
        let z_total: f64 = z.iter().zip(&spec.gamma).map(|(a, g)| a * g).sum();

        let max_x = x.iter().cloned().fold(0.0, f64::max);
        let all_active = mask.as_ref().is_none_or(|m| m.iter().all(|&a| a));
        let change = x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        xs.push(x);
        zp.push(z);
        zs.push(z_total);

        if max_x <= opts.success_epsilon {
            verdict = Verdict::ConvergedToZero;
            break;
        }
        if all_active && change < opts.x_tolerance * max_x {
            verdict = Verdict::StuckPositive;
            break;
        }
    }

    Ok(DeTrajectory {
        iterations_run: xs.len() - 1,
        x: xs,
        z: zs,
        z_positions: zp,
        verdict,
    })
}

/// Parameters of the DE runs behind a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    pub ell_max: usize,
    pub x_tolerance: f64,
    pub success_epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct ThresholdOptions {
    /// Initial bracket in raw `c` units; defaults to `a * [t_bar / 2, 2 t_bar]`.
    pub c_lo: Option<f64>,
    pub c_hi: Option<f64>,
    pub bracket_tol: f64,
    pub de: DeParams,
    /// For single-position specs, also accept `c` when the success condition
    /// holds on this many grid points.
    pub condition_grid: Option<usize>,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            c_lo: None,
            c_hi: None,
            bracket_tol: 1e-4,
            de: DeParams {
                ell_max: DEFAULT_ELL_MAX,
                x_tolerance: DEFAULT_X_TOLERANCE,
                success_epsilon: DEFAULT_SUCCESS_EPSILON,
            },
            condition_grid: Some(DEFAULT_CONDITION_GRID),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Bracket midpoint in raw `c` units (the DE argument scale).
    pub c_star: f64,
    /// Largest tested `c` that decoded.
    pub c_lo: f64,
    /// Smallest tested `c` that did not.
    pub c_hi: f64,
    pub bracket_width: f64,
    /// `c_star / a`: the threshold in units of mean initial erasures per
    /// component code.
    pub effective: f64,
    pub de_params: DeParams,
}

/// Whether DE at `c` drives the failure probability to zero.
pub fn decodes(spec: &GpcSpec, c: f64, opts: &ThresholdOptions) -> Result<bool> {
    if spec.positions() == 1 {
        if let Some(m) = opts.condition_grid {
            if success_condition(&spec.tau[0], c, m)?.holds {
                return Ok(true);
            }
        }
    }
    let de = DeOptions {
        ell_max: opts.de.ell_max,
        schedule: None,
        x_tolerance: opts.de.x_tolerance,
        success_epsilon: opts.de.success_epsilon,
    };
    Ok(de_run(spec, c, &de)?.verdict == Verdict::ConvergedToZero)
}

/// Bisection for `c* = sup{c : z -> 0}`.
pub fn threshold(spec: &GpcSpec, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    spec.check()?;
    let a = spec.scaling_a();
    let t_bar = spec.mean_t();
    let floor = 1e-3;
    let ceiling = 4.0 * spec.t_max() as f64 * a;
    let mut lo = opts.c_lo.unwrap_or(a * t_bar / 2.0);
    let mut hi = opts.c_hi.unwrap_or(2.0 * a * t_bar);
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    while !decodes(spec, lo, opts)? {
        if lo <= floor {
            return Err(Error::NoBracket { lo: floor, hi: ceiling });
        }
        hi = lo;
        lo = (lo / 2.0).max(floor);
    }
    while decodes(spec, hi, opts)? {
        if hi >= ceiling {
            return Err(Error::NoBracket { lo: floor, hi: ceiling });
        }
        lo = hi;
        hi = (hi * 2.0).min(ceiling);
    }
    while hi - lo > opts.bracket_tol {
        let mid = 0.5 * (lo + hi);
        if decodes(spec, mid, opts)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c_star = 0.5 * (lo + hi);
    Ok(ThresholdResult {
        c_star,
        c_lo: lo,
        c_hi: hi,
        bracket_width: hi - lo,
        effective: c_star / a,
        de_params: opts.de,
    })
}

/// CSV report for threshold results.
pub fn threshold_csv(rows: &[(String, ThresholdResult)]) -> String {
    let mut out =
        String::from("spec_hash,c_star,effective,c_lo,c_hi,bracket_width,ell_max,x_tolerance,success_epsilon\n");
    for (hash, r) in rows {
        let _ = writeln!(
            out,
            "{hash},{},{},{},{},{:e},{},{:e},{:e}",
            r.c_star,
            r.effective,
            r.c_lo,
            r.c_hi,
            r.bracket_width,
            r.de_params.ell_max,
            r.de_params.x_tolerance,
            r.de_params.success_epsilon
        );
    }
    out
}

/// The counting bound `c <= 2 t_bar` (effective units).
pub fn upper_bound(spec: &GpcSpec) -> f64 {
    2.0 * spec.mean_t()
}

/// Largest `c` with `c <= 2 t_bar - 2 L_tau(c)`.
pub fn refined_upper_bound(tau: &CapabilityDistribution) -> f64 {
    let t_bar = tau.mean();
    // g(0) = 0, g'(0) = 1 and g is concave, so the positive root is unique
    let g = |c: f64| 2.0 * t_bar - 2.0 * poisson::loss_mixture(tau, c).unwrap() - c;
    let mut lo = 1e-9;
    let mut hi = 2.0 * t_bar;
    if g(hi) >= 0.0 {
        return hi;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Right-hand side of the conjectured bound
/// `t_bar >= c/2 + (1/c) sum_{t=1}^{floor(c)} L(t, c)`. Diagnostic only.
pub fn conjecture_rhs(c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let upper = c.floor() as u32;
    c / 2.0
        + (1..=upper)
            .map(|t| poisson::loss(t, c).unwrap())
            .sum::<f64>()
            / c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessCheck {
    pub holds: bool,
    /// `min_i (x_i - sum_t tau_t Psi_{>=t}(c x_i))` over the grid.
    pub min_slack: f64,
    pub argmin_x: f64,
}

/// Relative rounding allowance of the success condition.
pub const SUCCESS_REL_TOL: f64 = 1e-12;

/// Checks `sum_t tau_t Psi_{>=t}(c x) < x` at `x = i / M`, `i = 1..=M`.
/// Deficits below `SUCCESS_REL_TOL * x` are treated as rounding noise.
pub fn success_condition(tau: &CapabilityDistribution, c: f64, grid: usize) -> Result<SuccessCheck> {
    check_c(c)?;
    if grid < 2 {
        return Err(Error::InvalidParameter("success-condition grid needs M >= 2".into()));
    }
    let mut scratch = Vec::new();
    let mut min_slack = f64::INFINITY;
    let mut argmin_x = 0.0;
    let mut holds = true;
    for i in 1..=grid {
        let x = i as f64 / grid as f64;
        let slack = x - tau.tail_mixture(c * x, 0, &mut scratch);
        if slack < min_slack {
            min_slack = slack;
            argmin_x = x;
        }
        if slack <= -SUCCESS_REL_TOL * x {
            holds = false;
        }
    }
    Ok(SuccessCheck {
        holds,
        min_slack,
        argmin_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::psi_geq;
    use crate::spec::{preset_hpc, preset_pc, preset_staircase};

    #[test]
    fn zero_state_is_absorbing() {
        let s = preset_staircase(5, 50, 3).unwrap();
        assert_eq!(de_step(&s, &[0.0; 5], 4.0).unwrap(), vec![0.0; 5]);
        assert_eq!(z_of(&s, &[0.0; 5], 4.0).unwrap(), 0.0);
    }

    #[test]
    fn hpc_first_step_is_a_tail() {
        let s = preset_hpc(100, 4).unwrap();
        let x = de_step(&s, &[1.0], 6.8).unwrap();
        assert_eq!(x[0], psi_geq(4, 6.8).unwrap());
        let z = z_of(&s, &[1.0], 6.8).unwrap();
        assert!((z - psi_geq(5, 6.8).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = preset_hpc(100, 4).unwrap();
        assert!(de_step(&s, &[1.0], -1.0).is_err());
        assert!(de_step(&s, &[1.0, 1.0], 1.0).is_err());
        assert!(de_step(&s, &[1.5], 1.0).is_err());
        assert!(de_step_per_type(&s, &[vec![1.0; 3]], 1.0).is_err());
    }

    #[test]
    fn zero_channel_quality_converges_in_one_step() {
        let s = preset_hpc(100, 4).unwrap();
        let tr = de_run(&s, 0.0, &DeOptions::default()).unwrap();
        assert_eq!(tr.iterations_run, 1);
        assert_eq!(tr.verdict, Verdict::ConvergedToZero);
        assert_eq!(tr.to_csv().lines().count(), 2);
    }

    #[test]
    fn verdicts() {
        let s = preset_hpc(100, 4).unwrap();
        assert_eq!(
            de_run(&s, 6.0, &DeOptions::default()).unwrap().verdict,
            Verdict::ConvergedToZero
        );
        assert_eq!(
            de_run(&s, 7.5, &DeOptions::default()).unwrap().verdict,
            Verdict::StuckPositive
        );
        assert_eq!(
            de_run(&s, 6.0, &DeOptions::with_ell_max(3)).unwrap().verdict,
            Verdict::IterationCap
        );
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(vec![vec![0], vec![]], 2).is_err());
        assert!(Schedule::new(vec![vec![0]], 2).is_err());
        assert!(Schedule::new(vec![vec![0, 2]], 2).is_err());
        let w = Schedule::window(6, 3, 2).unwrap();
        assert_eq!(w.len(), 8);
        assert_eq!(w.active(0), &[0, 1, 2]);
        assert_eq!(w.active(7), &[3, 4, 5]);
        assert!(Schedule::window(6, 7, 1).is_err());
    }

    #[test]
    fn alternating_pc_schedule_freezes_columns() {
        let pc = preset_pc(100, 0.5, 3, 3).unwrap();
        let sched = Schedule::cyclic(&[vec![0], vec![1]], 12, 2).unwrap();
        let opts = DeOptions {
            schedule: Some(sched),
            ..DeOptions::default()
        };
        let tr = de_run(&pc, 5.0, &opts).unwrap();
        for ell in 1..tr.x.len() {
            let frozen = if ell % 2 == 1 { 1 } else { 0 };
            assert_eq!(tr.x[ell][frozen].to_bits(), tr.x[ell - 1][frozen].to_bits());
            assert_eq!(
                tr.z_positions[ell][frozen].to_bits(),
                tr.z_positions[ell - 1][frozen].to_bits()
            );
        }
    }

    #[test]
    fn full_schedule_equals_unscheduled() {
        let s = preset_staircase(6, 60, 3).unwrap();
        let plain = de_run(&s, 9.0, &DeOptions::with_ell_max(40)).unwrap();
        let sched = DeOptions {
            ell_max: 40,
            schedule: Some(Schedule::full(6, 40).unwrap()),
            ..DeOptions::default()
        };
        let scheduled = de_run(&s, 9.0, &sched).unwrap();
        assert_eq!(plain, scheduled);
    }

    #[test]
    fn success_condition_point_mass_four() {
        let d = CapabilityDistribution::point_mass(4).unwrap();
        assert!(success_condition(&d, 6.7, 10_000).unwrap().holds);
        assert!(!success_condition(&d, 6.9, 10_000).unwrap().holds);
        assert!(success_condition(&d, 6.9, 1).is_err());
    }

    #[test]
    fn success_condition_uniform_at_n() {
        for n in [3u32, 6, 10] {
            let d = CapabilityDistribution::uniform(1, n).unwrap();
            let chk = success_condition(&d, n as f64, 1000).unwrap();
            assert!(chk.holds, "N = {n}: {chk:?}");
            let over = 2.0 * d.mean() + 1.0;
            assert!(!success_condition(&d, over, 1000).unwrap().holds);
        }
    }

    #[test]
    fn refined_bound_below_counting_bound() {
        for t in 1..=12 {
            let d = CapabilityDistribution::point_mass(t).unwrap();
            let r = refined_upper_bound(&d);
            assert!(r < 2.0 * t as f64, "t = {t}: {r}");
            assert!(r > 0.0);
        }
    }

    #[test]
    fn refined_bound_matches_grid_scan() {
        let d = CapabilityDistribution::point_mass(7).unwrap();
        let r = refined_upper_bound(&d);
        let mut last_ok = 0.0;
        let mut c = 1e-4;
        while c <= 14.0 {
            if c <= 14.0 - 2.0 * poisson::loss(7, c).unwrap() {
                last_ok = c;
            }
            c += 1e-4;
        }
        assert!((r - last_ok).abs() <= 1.5e-4, "{r} vs {last_ok}");
    }

    #[test]
    fn conjecture_is_finite() {
        let v = conjecture_rhs(13.0);
        assert!(v > 6.5 && v < 8.0, "{v}");
        assert_eq!(conjecture_rhs(0.0), 0.0);
    }

    #[test]
    fn threshold_csv_has_header() {
        let s = preset_hpc(100, 3).unwrap();
        let r = threshold(&s, &ThresholdOptions::default()).unwrap();
        let csv = threshold_csv(&[("abc".into(), r)]);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("spec_hash,c_star"));
    }
}
