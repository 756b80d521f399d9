use std::fmt::Write as _;
use std::path::PathBuf;

use gpclab::branching::survival_mc;
use gpclab::de::{
    self, conjecture_rhs, de_run, de_step, de_step_per_type, per_type_ones, refined_upper_bound,
    threshold_csv, upper_bound, z_of, z_per_type, DeOptions, ThresholdOptions, Verdict,
};
use gpclab::graph::{monte_carlo_with, peel, peel_scheduled, sample_residual, Peeling};
use gpclab::optimizer::{
    self, build_lp, frontier_csv, post_verify, sweep_tradeoff, LpSolution, SolutionStatus,
    DEFAULT_GRID, DEFAULT_T_MAX,
};
use gpclab::poisson::loss_mixture;
use gpclab::spec::{preset_braided, preset_hpc, preset_pc, preset_staircase};
use gpclab::GpcSpec;
use serde::Serialize;
use serde_json::json;

use crate::config::{spec_hash, RunConfig};
use crate::exit::{self, Failure};

pub struct Context {
    pub jobs: Option<usize>,
    pub csv: bool,
}

pub struct Report {
    pub body: String,
    pub code: u8,
    pub out: Option<PathBuf>,
    /// Side files written next to the report.
    pub files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(body: String) -> Self {
        Self {
            body,
            code: exit::OK,
            out: None,
            files: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

fn csv_with_hash(cfg: &RunConfig, csv: &str) -> String {
    format!("# config_hash={}\n{csv}", cfg.hash())
}

fn json_report(command: &str, cfg: &RunConfig, result: impl Serialize) -> Result<String, Failure> {
    let doc = json!({
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc)
        .map_err(|e| Failure::input(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn validated(cfg: &RunConfig) -> Result<&GpcSpec, Failure> {
    let spec = cfg.spec()?;
    spec.check()?;
    Ok(spec)
}

fn need_c(cfg: &RunConfig) -> Result<f64, Failure> {
    match cfg.c {
        Some(c) if c >= 0.0 && c.is_finite() => Ok(c),
        Some(c) => Err(Failure::input(format!("c must be finite and >= 0, got {c}"))),
        None => Err(Failure::input("no channel quality given (--c)")),
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display + Copy>(
    name: &str,
    v: Option<T>,
) -> Result<Option<T>, Failure> {
    match v {
        Some(x) if x <= T::default() => Err(Failure::input(format!("{name} must be positive, got {x}"))),
        other => Ok(other),
    }
}

pub fn de(cfg: &RunConfig, ctx: &Context) -> Result<Report, Failure> {
    let spec = validated(cfg)?;
    let c = need_c(cfg)?;
    let mut opts = DeOptions::default();
    if let Some(ell) = positive("ell", cfg.ell)? {
        opts.ell_max = ell;
    }
    if let Some(s) = &cfg.schedule {
        opts.schedule = Some(s.build(spec.positions())?);
    }
    let tr = de_run(spec, c, &opts)?;
    let body = if ctx.csv {
        csv_with_hash(cfg, &tr.to_csv())
    } else {
        json_report(
            "de",
            cfg,
            json!({
                "verdict": tr.verdict,
                "iterations_run": tr.iterations_run,
                "final_x": tr.final_x(),
                "final_z": tr.final_z(),
                "x": tr.x,
                "z": tr.z,
            }),
        )?
    };
    let mut r = Report::new(body);
    if tr.verdict != Verdict::ConvergedToZero {
        r.code = exit::NON_CONVERGENCE;
    }
    Ok(r)
}

pub fn threshold(cfg: &RunConfig, ctx: &Context) -> Result<Report, Failure> {
    let spec = validated(cfg)?;
    let mut opts = ThresholdOptions {
        c_lo: cfg.c_lo,
        c_hi: cfg.c_hi,
        ..ThresholdOptions::default()
    };
    if let Some(t) = positive("bracket_tol", cfg.bracket_tol)? {
        opts.bracket_tol = t;
    }
    if let Some(ell) = positive("ell", cfg.ell)? {
        opts.de.ell_max = ell;
    }
    let r = de::threshold(spec, &opts)?;
    let hash = spec_hash(spec);
    let body = if ctx.csv {
        csv_with_hash(cfg, &threshold_csv(&[(hash, r)]))
    } else {
        json_report(
            "threshold",
            cfg,
            json!({ "spec_hash": hash, "threshold": r, "upper_bound": upper_bound(spec) }),
        )?
    };
    Ok(Report::new(body))
}

pub fn bounds(cfg: &RunConfig, ctx: &Context) -> Result<Report, Failure> {
    let spec = validated(cfg)?;
    let tau = spec.aggregate_tau();
    let t_bar = spec.mean_t();
    let ub = upper_bound(spec);
    let refined = refined_upper_bound(&tau);
    let loss = loss_mixture(&tau, refined)?;
    let c = match cfg.c {
        Some(_) => need_c(cfg)?,
        None => refined,
    };
    let rhs = conjecture_rhs(c);
    let hash = spec_hash(spec);
    let body = if ctx.csv {
        let mut s = String::from("spec_hash,t_bar,upper_bound,refined_upper_bound,loss_at_refined,c,conjecture_rhs\n");
        let _ = writeln!(s, "{hash},{t_bar},{ub},{refined},{loss},{c},{rhs}");
        csv_with_hash(cfg, &s)
    } else {
        json_report(
            "bounds",
            cfg,
            json!({
                "spec_hash": hash,
                "t_bar": t_bar,
                "upper_bound": ub,
                "refined_upper_bound": refined,
                "loss_at_refined": loss,
                "c": c,
                "conjecture_rhs": rhs,
            }),
        )?
    };
    Ok(Report::new(body))
}

pub fn simulate(
    cfg: &RunConfig,
    ctx: &Context,
    dump_graph: Option<PathBuf>,
    round_log: Option<PathBuf>,
) -> Result<Report, Failure> {
    let spec = validated(cfg)?;
    let c = need_c(cfg)?;
    let trials = positive("trials", cfg.trials)?.unwrap_or(100);
    let seed = cfg.seed.unwrap_or(0);
    let peeling = match &cfg.schedule {
        Some(s) => Peeling::Scheduled(s.build(spec.positions())?),
        None => Peeling::Rounds(cfg.ell),
    };
    let stats = monte_carlo_with(spec, c, &peeling, trials, seed, ctx.jobs)?;
    let body = if ctx.csv {
        csv_with_hash(cfg, &stats.to_csv(c, cfg.ell))
    } else {
        json_report("simulate", cfg, json!({ "c": c, "ell": cfg.ell, "stats": stats }))?
    };
    let mut report = Report::new(body);
    if dump_graph.is_some() || round_log.is_some() {
        // trial 0 uses the same stream as the Monte Carlo run
        let g = sample_residual(spec, c, seed)?;
        if let Some(p) = dump_graph {
            report
                .files
                .push((p, format!("# config_hash={}\n{}", cfg.hash(), g.to_text())));
        }
        if let Some(p) = round_log {
            let r = match &peeling {
                Peeling::Rounds(ell) => peel(&g, *ell),
                Peeling::Scheduled(s) => peel_scheduled(&g, s)?,
            };
            report.files.push((p, csv_with_hash(cfg, &r.round_log_csv())));
        }
    }
    Ok(report)
}

fn tau_string(sol: &LpSolution) -> String {
    sol.tau
        .as_ref()
        .map(|t| {
            t.iter()
                .map(|(t, w)| format!("{t}:{w}"))
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default()
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn optimize(cfg: &RunConfig, ctx: &Context) -> Result<Report, Failure> {
    if cfg.spec.is_some() {
        validated(cfg)?;
    }
    let grid = cfg.grid.unwrap_or(DEFAULT_GRID);
    let t_max = cfg.t_max.unwrap_or(DEFAULT_T_MAX);
    if let Some(cs) = &cfg.c_grid {
        if cfg.c.is_some() {
            return Err(Failure::input("give either c or c_grid, not both"));
        }
        let pts = sweep_tradeoff(cs, grid, t_max, cfg.t_min, ctx.jobs)?;
        let body = if ctx.csv {
            csv_with_hash(cfg, &frontier_csv(&pts))
        } else {
            json_report("optimize", cfg, json!({ "frontier": pts }))?
        };
        return Ok(Report::new(body));
    }
    let c = need_c(cfg)?;
    let problem = build_lp(c, grid, t_max, cfg.t_min)?;
    let mut sol = optimizer::solve(&problem)?;
    let mut warnings = Vec::new();
    if sol.status != SolutionStatus::Infeasible && cfg.verify.unwrap_or(true) {
        sol = post_verify(&sol, grid)?;
        if sol.status == SolutionStatus::DegenerateWarning {
            warnings.push(format!(
                "verified threshold {} is below the target c = {c}",
                opt_field(sol.verified_threshold)
            ));
        }
    }
    if let Some(tau) = &sol.tau {
        GpcSpec::hpc_mixture(1000, tau.clone(), gpclab::TauAssignment::Random)?;
    }
    let body = if ctx.csv {
        let status = serde_json::to_value(sol.status)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let mut s = String::from("c,status,t_bar,verified_threshold,fine_grid_slack,tau\n");
        let _ = writeln!(
            s,
            "{c},{status},{},{},{},{}",
            opt_field(sol.t_bar),
            opt_field(sol.verified_threshold),
            opt_field(sol.fine_grid_slack),
            tau_string(&sol)
        );
        csv_with_hash(cfg, &s)
    } else {
        json_report("optimize", cfg, &sol)?
    };
    let mut r = Report::new(body);
    r.warnings = warnings;
    Ok(r)
}

pub fn oracle(cfg: &RunConfig, ctx: &Context) -> Result<Report, Failure> {
    let spec = validated(cfg)?;
    let c = need_c(cfg)?;
    let ell = positive("ell", cfg.ell)?.unwrap_or(4);
    let trials = positive("trials", cfg.trials)?.unwrap_or(100_000);
    let seed = cfg.seed.unwrap_or(0);

    // z^(k) for k = 1..=ell, from the typed recursion when the root is fixed
    let mut z_de = Vec::with_capacity(ell);
    match cfg.root {
        Some((i, t)) => {
            let mut typed = per_type_ones(spec);
            for _ in 0..ell {
                let z = z_per_type(spec, &typed, c)?;
                z_de.push(z.get(i).and_then(|row| row.get(t as usize - 1)).copied().unwrap_or(0.0));
                typed = de_step_per_type(spec, &typed, c)?;
            }
        }
        None => {
            let mut x = vec![1.0; spec.positions()];
            for _ in 0..ell {
                z_de.push(z_of(spec, &x, c)?);
                x = de_step(spec, &x, c)?;
            }
        }
    }

    let mut rows = Vec::with_capacity(ell);
    for (k, &z) in z_de.iter().enumerate() {
        let depth = k as u32 + 1;
        let est = survival_mc(spec, c, depth, cfg.root, trials, seed, ctx.jobs)?;
        let e = est.estimate;
        rows.push(json!({
            "ell": depth,
            "z_de": z,
            "mc_mean": e.mean,
            "mc_se": e.se,
            "aborted": est.aborted,
            "within_3se": (e.mean - z).abs() <= 3.0 * e.se,
        }));
    }
    let body = if ctx.csv {
        let mut s = String::from("ell,z_de,mc_mean,mc_se,aborted,within_3se\n");
        for r in &rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{},{}",
                r["ell"], r["z_de"].as_f64().unwrap_or(f64::NAN),
                r["mc_mean"].as_f64().unwrap_or(f64::NAN),
                r["mc_se"].as_f64().unwrap_or(f64::NAN),
                r["aborted"], r["within_3se"]
            );
        }
        csv_with_hash(cfg, &s)
    } else {
        json_report("oracle", cfg, &rows)?
    };
    Ok(Report::new(body))
}

pub fn preset(name: &str, n: usize, t: u32, l: usize, split: f64, t_col: u32) -> Result<Report, Failure> {
    let spec = match name {
        "hpc" => preset_hpc(n, t)?,
        "pc" => preset_pc(n, split, t, t_col)?,
        "staircase" => preset_staircase(l, n, t)?,
        "braided" => preset_braided(l, n, t)?,
        other => {
            return Err(Failure {
                code: exit::UNKNOWN_PRESET,
                message: format!("unknown preset {other:?} (expected hpc, pc, staircase or braided)"),
            })
        }
    };
    spec.check()?;
    let mut body = spec.to_json()?;
    body.push('\n');
    Ok(Report::new(body))
}
