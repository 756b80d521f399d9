mod commands;
mod config;
mod exit;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_c_grid, RunConfig, ScheduleDesc, SpecSource};
use exit::Failure;

#[derive(Parser)]
#[command(
    name = "gpclab",
    version,
    about = "Density evolution, peeling simulation and capability-mixture design for generalized product codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run config; flags override its fields
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Spec file (overrides the config's spec)
    #[arg(long, global = true, value_name = "PATH")]
    spec: Option<PathBuf>,

    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N", env = "GPCLAB_JOBS")]
    jobs: Option<usize>,

    /// Write the report here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Emit CSV instead of JSON
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Args, Default)]
struct RunArgs {
    /// Channel quality (raw DE scale)
    #[arg(long)]
    c: Option<f64>,

    /// Iterations / peeling rounds
    #[arg(long)]
    ell: Option<usize>,

    /// full:STEPS, window:WIDTH:STEPS or cyclic:0,1/2,3:STEPS
    #[arg(long, value_parser = ScheduleDesc::parse)]
    schedule: Option<ScheduleDesc>,
}

#[derive(Subcommand)]
enum Command {
    /// Run density evolution and print the trajectory
    De(RunArgs),

    /// Bisect for the decoding threshold
    Threshold {
        #[arg(long)]
        c_lo: Option<f64>,
        #[arg(long)]
        c_hi: Option<f64>,
        #[arg(long)]
        bracket_tol: Option<f64>,
        /// DE iteration cap
        #[arg(long)]
        ell: Option<usize>,
    },

    /// Upper bounds on the threshold
    Bounds {
        #[arg(long)]
        c: Option<f64>,
    },

    /// Peeling Monte Carlo on sampled residual graphs
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        trials: Option<u64>,
        /// Also write the trial-0 residual graph here
        #[arg(long, value_name = "PATH")]
        dump_graph: Option<PathBuf>,
        /// Also write the trial-0 round log CSV here
        #[arg(long, value_name = "PATH")]
        round_log: Option<PathBuf>,
    },

    /// Minimize the mean capability by linear programming
    Optimize {
        #[arg(long)]
        c: Option<f64>,
        /// lo:hi:step or a comma list; emits the frontier
        #[arg(long, value_parser = parse_c_grid_arg)]
        c_grid: Option<CGrid>,
        /// Number of grid points M
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        t_min: Option<u32>,
        #[arg(long)]
        t_max: Option<u32>,
        /// Skip the fine-grid and DE re-check
        #[arg(long)]
        no_verify: bool,
    },

    /// Compare branching-process survival with density evolution
    Oracle {
        #[arg(long)]
        c: Option<f64>,
        /// Largest depth checked
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        /// Fixed root type POSITION:T
        #[arg(long, value_parser = parse_root)]
        root: Option<(usize, u32)>,
    },

    /// Write a preset spec (hpc, pc, staircase, braided)
    Preset {
        name: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        t: u32,
        /// Positions for staircase / braided
        #[arg(long, default_value_t = 6)]
        l: usize,
        /// Row fraction for pc
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        /// Column capability for pc (default: --t)
        #[arg(long)]
        t_col: Option<u32>,
    },
}

#[derive(Clone)]
struct CGrid(Vec<f64>);

fn parse_c_grid_arg(s: &str) -> Result<CGrid, String> {
    parse_c_grid(s).map(CGrid)
}

fn parse_root(s: &str) -> Result<(usize, u32), String> {
    let (i, t) = s.split_once(':').ok_or("root must be POSITION:T")?;
    Ok((
        i.parse().map_err(|e| format!("bad position: {e}"))?,
        t.parse().map_err(|e| format!("bad capability: {e}"))?,
    ))
}

fn apply_run(cfg: &mut RunConfig, run: RunArgs) {
    cfg.c = run.c.or(cfg.c);
    cfg.ell = run.ell.or(cfg.ell);
    cfg.schedule = run.schedule.or(cfg.schedule.take());
}

fn run(cli: Cli) -> Result<commands::Report, Failure> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = g.spec {
        cfg.spec = Some(SpecSource::Path(p));
    }
    cfg.seed = g.seed.or(cfg.seed);
    cfg.out = g.out.or(cfg.out);
    if g.jobs == Some(0) {
        return Err(Failure::input("--jobs must be at least 1"));
    }
    let ctx = commands::Context {
        jobs: g.jobs,
        csv: g.csv,
    };

    match cli.command {
        Command::Preset {
            name,
            n,
            t,
            l,
            split,
            t_col,
        } => {
            if g.csv {
                return Err(Failure::input("preset writes JSON only"));
            }
            commands::preset(&name, n, t, l, split, t_col.unwrap_or(t))
        }
        command => {
            cfg.resolve_spec()?;
            match command {
                Command::De(r) => {
                    apply_run(&mut cfg, r);
                    commands::de(&cfg, &ctx)
                }
                Command::Threshold {
                    c_lo,
                    c_hi,
                    bracket_tol,
                    ell,
                } => {
                    cfg.c_lo = c_lo.or(cfg.c_lo);
                    cfg.c_hi = c_hi.or(cfg.c_hi);
                    cfg.bracket_tol = bracket_tol.or(cfg.bracket_tol);
                    cfg.ell = ell.or(cfg.ell);
                    commands::threshold(&cfg, &ctx)
                }
                Command::Bounds { c } => {
                    cfg.c = c.or(cfg.c);
                    commands::bounds(&cfg, &ctx)
                }
                Command::Simulate {
                    run,
                    trials,
                    dump_graph,
                    round_log,
                } => {
                    apply_run(&mut cfg, run);
                    cfg.trials = trials.or(cfg.trials);
                    commands::simulate(&cfg, &ctx, dump_graph, round_log)
                }
                Command::Optimize {
                    c,
                    c_grid,
                    grid,
                    t_min,
                    t_max,
                    no_verify,
                } => {
                    cfg.c = c.or(cfg.c);
                    cfg.c_grid = c_grid.map(|g| g.0).or(cfg.c_grid.take());
                    cfg.grid = grid.or(cfg.grid);
                    cfg.t_min = t_min.or(cfg.t_min);
                    cfg.t_max = t_max.or(cfg.t_max);
                    if no_verify {
                        cfg.verify = Some(false);
                    }
                    commands::optimize(&cfg, &ctx)
                }
                Command::Oracle {
                    c,
                    ell,
                    trials,
                    root,
                } => {
                    cfg.c = c.or(cfg.c);
                    cfg.ell = ell.or(cfg.ell);
                    cfg.trials = trials.or(cfg.trials);
                    cfg.root = root.or(cfg.root);
                    commands::oracle(&cfg, &ctx)
                }
                Command::Preset { .. } => unreachable!(),
            }
        }
    }
    .map(|mut r| {
        r.out = cfg.out.clone();
        r
    })
}

fn write_all(report: &commands::Report) -> Result<(), Failure> {
    for (path, body) in &report.files {
        fs::write(path, body)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    }
    match &report.out {
        Some(p) => fs::write(p, &report.body)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(report.body.as_bytes())
            .map_err(|e| Failure::io(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    // clap exits 2 on usage errors, which here means non-convergence
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT } else { exit::OK });
        }
    };
    let outcome = run(cli).and_then(|r| write_all(&r).map(|_| r));
    match outcome {
        Ok(r) => {
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(r.code)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
