//! wasm-bindgen entry points for the browser demo. Every function returns
//! a JSON string so the page needs no glue beyond `JSON.parse`.

use gpclab::de::{de_run, threshold, upper_bound, DeOptions, ThresholdOptions};
use gpclab::optimizer::{build_lp, solve, SolutionStatus, MAX_T};
use gpclab::spec::preset_hpc;
use gpclab::{CapabilityDistribution, GpcSpec, TauAssignment};
use serde_json::json;
use wasm_bindgen::prelude::*;

const N: usize = 1000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Parses `t:w,t:w,...` into a capability distribution. Weights are
/// normalized so the page can take loose input.
pub fn parse_mixture(s: &str) -> Result<CapabilityDistribution, String> {
    let mut pairs = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (t, w) = part
            .split_once(':')
            .ok_or_else(|| format!("{part:?} is not t:weight"))?;
        let t: u32 = t.trim().parse().map_err(|e| format!("capability {t:?}: {e}"))?;
        let w: f64 = w.trim().parse().map_err(|e| format!("weight {w:?}: {e}"))?;
        if t > MAX_T || !(w >= 0.0) {
            return Err(format!("{part:?}: need 1 <= t <= {MAX_T} and weight >= 0"));
        }
        pairs.push((t, w));
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if pairs.is_empty() || !(total > 0.0) {
        return Err("mixture needs at least one positive weight".into());
    }
    pairs.iter_mut().for_each(|p| p.1 /= total);
    CapabilityDistribution::from_pairs(&pairs).map_err(err)
}

fn mixture_spec(mixture: &str) -> Result<GpcSpec, String> {
    GpcSpec::hpc_mixture(N, parse_mixture(mixture)?, TauAssignment::Random).map_err(err)
}

/// DE trajectory of a half-product code with the given mixture at `c`.
/// Returns `{x, z, verdict, t_bar, c_star}`.
#[wasm_bindgen]
pub fn de_curve(mixture: &str, c: f64, ell: usize) -> Result<String, String> {
    let spec = mixture_spec(mixture)?;
    let traj = de_run(&spec, c, &DeOptions::with_ell_max(ell.clamp(1, 2000))).map_err(err)?;
    let th = threshold(&spec, &ThresholdOptions::default()).map_err(err)?;
    let x: Vec<f64> = traj.x.iter().map(|v| v[0]).collect();
    Ok(json!({
        "x": x,
        "z": traj.z,
        "verdict": traj.verdict,
        "t_bar": spec.mean_t(),
        "c_star": th.c_star,
    })
    .to_string())
}

/// DE threshold of the pure code for t = 1..=t_max next to the 2t bound.
/// Returns `[{t, c_star, bound}]`.
#[wasm_bindgen]
pub fn threshold_curve(t_max: u32) -> Result<String, String> {
    let mut rows = Vec::new();
    for t in 1..=t_max.clamp(1, 30) {
        let spec = preset_hpc(N, t).map_err(err)?;
        let th = threshold(&spec, &ThresholdOptions::default()).map_err(err)?;
        rows.push(json!({ "t": t, "c_star": th.c_star, "bound": upper_bound(&spec) }));
    }
    Ok(serde_json::Value::Array(rows).to_string())
}

/// Cheapest mixture (least mean capability) that still decodes at `c`.
/// Returns `{status, t_bar, tau: [[t, w]]}`.
#[wasm_bindgen]
pub fn optimize(c: f64, grid: usize, t_max: u32) -> Result<String, String> {
    let lp = build_lp(c, grid, t_max, None).map_err(err)?;
    let sol = solve(&lp).map_err(err)?;
    let tau: Vec<(u32, f64)> = sol
        .tau
        .as_ref()
        .map(|d| d.iter().filter(|p| p.1 > 1e-9).collect())
        .unwrap_or_default();
    Ok(json!({
        "status": sol.status,
        "feasible": sol.status != SolutionStatus::Infeasible,
        "t_bar": sol.t_bar,
        "tau": tau,
    })
    .to_string())
}
