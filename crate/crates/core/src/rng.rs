//! Per-trial random streams.
//!
//! Trial `r` of a run seeded with `master` always draws from ChaCha8 keyed by
//! `master` on stream `r`, so results do not depend on how trials are spread
//! over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(master_seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Runs `f(trial, rng)` for every trial on a pool of `jobs` threads
/// (`None` = all cores) and returns the results in trial order.
pub fn run_trials<T, F>(trials: u64, master_seed: u64, jobs: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut TrialRng) -> T + Sync + Send,
{
    use rayon::prelude::*;
    with_jobs(jobs, || {
        (0..trials)
            .into_par_iter()
            .map(|r| {
                let mut rng = trial_rng(master_seed, r);
                f(r, &mut rng)
            })
            .collect()
    })
}

/// Runs `work` on a pool of `jobs` threads, or on the global pool for `None`.
pub fn with_jobs<R, W>(jobs: Option<usize>, work: W) -> R
where
    R: Send,
    W: FnOnce() -> R + Send,
{
    match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}
