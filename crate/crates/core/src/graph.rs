//! Residual-graph sampling and peeling.
//!
//! Vertices are check nodes, edges are erased variable nodes. A vertex with
//! capability `t` is removed once its current degree is at most `t`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Geometric;
use serde::{Deserialize, Serialize};

use crate::de::Schedule;
use crate::error::{Error, Result};
use crate::rng::{run_trials, trial_rng, TrialRng};
use crate::spec::{GpcSpec, TauAssignment};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualGraph {
    pub vertex_position: Vec<u32>,
    pub vertex_capability: Vec<u32>,
    adjacency: Vec<Vec<u32>>,
    /// Number of erased variable nodes when the graph was sampled.
    pub origin_edge_count: usize,
}

impl ResidualGraph {
    /// A graph without edges.
    pub fn new(vertex_position: Vec<u32>, vertex_capability: Vec<u32>) -> Result<Self> {
        if vertex_position.len() != vertex_capability.len() {
            return Err(Error::DimensionMismatch {
                expected: vertex_position.len(),
                got: vertex_capability.len(),
            });
        }
        let n = vertex_position.len();
        Ok(Self {
            vertex_position,
            vertex_capability,
            adjacency: vec![Vec::new(); n],
            origin_edge_count: 0,
        })
    }

    /// Single-position graph where every vertex has capability `t`.
    pub fn uniform(n: usize, t: u32) -> Self {
        Self::new(vec![0; n], vec![t; n]).expect("equal lengths")
    }

    pub fn from_edges(
        vertex_position: Vec<u32>,
        vertex_capability: Vec<u32>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let mut g = Self::new(vertex_position, vertex_capability)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Adds an undirected edge; rejects self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.num_vertices();
        if u >= n || v >= n {
            return Err(Error::InvalidParameter(format!(
                "edge ({u}, {v}) out of range for {n} vertices"
            )));
        }
        if u == v {
            return Err(Error::InvalidParameter(format!("self-loop at {u}")));
        }
        if self.adjacency[u].contains(&(v as u32)) {
            return Err(Error::InvalidParameter(format!("parallel edge ({u}, {v})")));
        }
        self.push_edge(u, v);
        Ok(())
    }

    fn push_edge(&mut self, u: usize, v: usize) {
        self.adjacency[u].push(v as u32);
        self.adjacency[v].push(u as u32);
        self.origin_edge_count += 1;
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_position.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&u| u as usize)
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| {
                nb.iter()
                    .filter(move |&&v| (v as usize) > u)
                    .map(move |&v| (u, v as usize))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// True if every edge joins positions coupled in `spec`.
    pub fn is_admissible(&self, spec: &GpcSpec) -> bool {
        self.edges().iter().all(|&(u, v)| {
            spec.coupled(
                self.vertex_position[u] as usize,
                self.vertex_position[v] as usize,
            )
        })
    }

    /// Text dump: a vertex-count line, one "position capability" line per
    /// vertex, then one "u v" line per edge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.num_vertices());
        for (p, t) in self.vertex_position.iter().zip(&self.vertex_capability) {
            let _ = writeln!(out, "{p} {t}");
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph dump".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("vertex count: {e}")))?;
        let pair = |line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Parse(format!("expected two integers, got {line:?}"))),
            }
        };
        let mut pos = Vec::with_capacity(n);
        let mut cap = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated vertex header".into()))?;
            let (p, t) = pair(line)?;
            pos.push(p as u32);
            cap.push(t as u32);
        }
        let mut g = Self::new(pos, cap)?;
        for line in lines {
            let (u, v) = pair(line)?;
            g.add_edge(u, v)?;
        }
        Ok(g)
    }
}

/// The Fig. 1(c) example: a 5-vertex HPC residual graph, all capabilities `t`.
pub fn fig1c_fixture(t: u32) -> ResidualGraph {
    ResidualGraph::from_edges(
        vec![0; 5],
        vec![t; 5],
        &[(0, 2), (0, 3), (0, 4), (1, 4), (2, 4)],
    )
    .expect("fixture is a simple graph")
}

fn capabilities(spec: &GpcSpec, rng: &mut TrialRng) -> Result<(Vec<u32>, Vec<u32>)> {
    let sizes = spec.position_sizes();
    let mut pos = Vec::with_capacity(sizes.iter().sum());
    let mut cap = Vec::with_capacity(pos.capacity());
    for (i, &n_i) in sizes.iter().enumerate() {
        let tau = &spec.tau[i];
        pos.extend(std::iter::repeat_n(i as u32, n_i));
        match spec.assignment {
            TauAssignment::Deterministic => {
                let support: Vec<(u32, f64)> = tau.iter().collect();
                let mut assigned = 0usize;
                for (k, &(t, w)) in support.iter().enumerate() {
                    let count = if k + 1 == support.len() {
                        n_i - assigned
                    } else {
                        ((w * n_i as f64).round() as usize).min(n_i - assigned)
                    };
                    cap.extend(std::iter::repeat_n(t, count));
                    assigned += count;
                }
            }
            TauAssignment::Random => {
                let dist = WeightedIndex::new(tau.probs())
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                cap.extend((0..n_i).map(|_| dist.sample(rng) as u32 + 1));
            }
        }
    }
    Ok((pos, cap))
}

/// Index `k` of the strictly lower triangle to the pair `(u, v)`, `u < v`.
fn triangular_pair(k: u64) -> (u64, u64) {
    let mut v = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as u64;
    while v * (v - 1) / 2 > k {
        v -= 1;
    }
    while (v + 1) * v / 2 <= k {
        v += 1;
    }
    (k - v * (v - 1) / 2, v)
}

/// Samples the residual graph at channel quality `c`: every admissible pair
/// carries an edge independently with probability `c / n`.
pub fn sample_residual(spec: &GpcSpec, c: f64, seed: u64) -> Result<ResidualGraph> {
    sample_residual_with(spec, c, &mut trial_rng(seed, 0))
}

pub fn sample_residual_with(spec: &GpcSpec, c: f64, rng: &mut TrialRng) -> Result<ResidualGraph> {
    spec.check()?;
    let n = spec.n as f64;
    if !(c >= 0.0) || c >= n {
        return Err(Error::Domain(format!("need 0 <= c < n = {}, got c = {c}", spec.n)));
    }
    let (pos, cap) = capabilities(spec, rng)?;
    let mut g = ResidualGraph::new(pos, cap)?;
    if c == 0.0 {
        return Ok(g);
    }
    let geo = Geometric::new(c / n).map_err(|e| Error::Domain(e.to_string()))?;
    let sizes = spec.position_sizes();
    let mut offset = vec![0usize; sizes.len()];
    for i in 1..sizes.len() {
        offset[i] = offset[i - 1] + sizes[i - 1];
    }
    let l = spec.positions();
    for i in 0..l {
        for j in i..l {
            if !spec.coupled(i, j) {
                continue;
            }
            let (ni, nj) = (sizes[i] as u64, sizes[j] as u64);
            let pairs = if i == j { ni * ni.saturating_sub(1) / 2 } else { ni * nj };
            let mut k = geo.sample(rng);
            while k < pairs {
                let (u, v) = if i == j {
                    let (a, b) = triangular_pair(k);
                    (offset[i] + a as usize, offset[i] + b as usize)
                } else {
                    (offset[i] + (k / nj) as usize, offset[j] + (k % nj) as usize)
                };
                g.push_edge(u, v);
                k = k.saturating_add(1).saturating_add(geo.sample(rng));
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelingResult {
    /// Surviving vertices over all vertices (`W`).
    pub failed_fraction: f64,
    pub removed_per_round: Vec<usize>,
    pub surviving_edges: usize,
    pub rounds_run: usize,
    #[serde(skip)]
    pub alive: Vec<bool>,
}

impl PeelingResult {
    pub fn surviving_vertices(&self) -> Vec<usize> {
        (0..self.alive.len()).filter(|&v| self.alive[v]).collect()
    }

    /// Round log with columns `round, removed, alive`.
    pub fn round_log_csv(&self) -> String {
        let mut out = String::from("round,removed,alive\n");
        let mut remaining = self.alive.len();
        for (r, &k) in self.removed_per_round.iter().enumerate() {
            remaining -= k;
            let _ = writeln!(out, "{},{k},{remaining}", r + 1);
        }
        out
    }
}

/// Parallel peeling. A round removes, simultaneously, every alive vertex
/// whose degree is at most its capability and whose position is active.
/// Stops after `max_rounds` rounds or when no vertex anywhere is eligible.
fn peel_rounds(
    graph: &ResidualGraph,
    max_rounds: usize,
    active: impl Fn(usize) -> Option<Vec<bool>>,
) -> PeelingResult {
    let n = graph.num_vertices();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let mut removed_per_round = Vec::new();
    let mut batch = Vec::new();
    let eligible = |v: usize, alive: &[bool], deg: &[usize]| {
        alive[v] && deg[v] <= graph.vertex_capability[v] as usize
    };
    for round in 0..max_rounds {
        if !(0..n).any(|v| eligible(v, &alive, &deg)) {
            break;
        }
        let mask = active(round);
        batch.clear();
        batch.extend((0..n).filter(|&v| {
            eligible(v, &alive, &deg)
                && mask
                    .as_ref()
                    .is_none_or(|m| m[graph.vertex_position[v] as usize])
        }));
        for &v in &batch {
            alive[v] = false;
        }
        for &v in &batch {
            for u in graph.neighbors(v) {
                deg[u] -= 1;
            }
        }
        removed_per_round.push(batch.len());
    }
    let surviving_edges = graph
        .edges()
        .iter()
        .filter(|&&(u, v)| alive[u] && alive[v])
        .count();
    let survivors = alive.iter().filter(|a| **a).count();
    PeelingResult {
        failed_fraction: if n == 0 { 0.0 } else { survivors as f64 / n as f64 },
        rounds_run: removed_per_round.len(),
        removed_per_round,
        surviving_edges,
        alive,
    }
}

/// Parallel peeling for at most `max_rounds` rounds (`None` = to the fixpoint).
pub fn peel(graph: &ResidualGraph, max_rounds: Option<usize>) -> PeelingResult {
    peel_rounds(graph, max_rounds.unwrap_or(usize::MAX), |_| None)
}

/// Parallel peeling where round `l` only touches positions in the `l`-th
/// active set; frozen vertices keep their status.
pub fn peel_scheduled(graph: &ResidualGraph, schedule: &Schedule) -> Result<PeelingResult> {
    let positions = graph
        .vertex_position
        .iter()
        .map(|&p| p as usize + 1)
        .max()
        .unwrap_or(0);
    let l = schedule
        .steps()
        .iter()
        .flatten()
        .map(|&p| p + 1)
        .max()
        .unwrap_or(0)
        .max(positions);
    let schedule = Schedule::new(schedule.steps().to_vec(), l)?;
    Ok(peel_rounds(graph, schedule.len(), |round| {
        let mut m = vec![false; l];
        for &p in schedule.active(round) {
            m[p] = true;
        }
        Some(m)
    }))
}

/// Sequential peeling with a work queue; returns the alive flags of the
/// fixpoint (the generalized core).
pub fn core_oracle(graph: &ResidualGraph) -> Vec<bool> {
    let n = graph.num_vertices();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let mut queued = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for v in (0..n).rev() {
        if deg[v] <= graph.vertex_capability[v] as usize {
            queued[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        alive[v] = false;
        for u in graph.neighbors(v) {
            if alive[u] {
                deg[u] -= 1;
                if !queued[u] && deg[u] <= graph.vertex_capability[u] as usize {
                    queued[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    alive
}

/// Number of vertices within graph distance `ell` of `root` (root included).
pub fn neighborhood_size(graph: &ResidualGraph, root: usize, ell: usize) -> usize {
    let mut dist = vec![usize::MAX; graph.num_vertices()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        if dist[v] == ell {
            continue;
        }
        for u in graph.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                count += 1;
                queue.push_back(u);
            }
        }
    }
    count
}

/// Sample mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub sd: f64,
}

impl MeanSe {
    pub fn from_samples(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / k).sqrt(),
            sd: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub trials: u64,
    pub w: MeanSe,
    /// `surviving_edges * n / (c * m)`.
    pub scaled_ber: MeanSe,
    /// `surviving_edges / origin_edge_count`.
    pub edge_survival: MeanSe,
}

impl McStats {
    pub fn to_csv(&self, c: f64, ell: Option<usize>) -> String {
        let mut out = String::from(
            "c,ell,trials,w_mean,w_se,scaled_ber_mean,scaled_ber_se,edge_survival_mean,edge_survival_se\n",
        );
        let ell = ell.map(|e| e.to_string()).unwrap_or_else(|| "inf".into());
        let _ = writeln!(
            out,
            "{c},{ell},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.trials,
            self.w.mean,
            self.w.se,
            self.scaled_ber.mean,
            self.scaled_ber.se,
            self.edge_survival.mean,
            self.edge_survival.se
        );
        out
    }
}

/// How each Monte Carlo trial peels its graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Peeling {
    /// Parallel rounds, `None` = to the fixpoint.
    Rounds(Option<usize>),
    Scheduled(Schedule),
}

/// Peeling Monte Carlo. Trial `r` samples and peels with the stream
/// `(master_seed, r)`; statistics are reduced in trial order.
pub fn monte_carlo(
    spec: &GpcSpec,
    c: f64,
    ell: Option<usize>,
    trials: u64,
    master_seed: u64,
    jobs: Option<usize>,
) -> Result<McStats> {
    monte_carlo_with(spec, c, &Peeling::Rounds(ell), trials, master_seed, jobs)
}

pub fn monte_carlo_with(
    spec: &GpcSpec,
    c: f64,
    peeling: &Peeling,
    trials: u64,
    master_seed: u64,
    jobs: Option<usize>,
) -> Result<McStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    spec.check()?;
    if !(c >= 0.0) || c >= spec.n as f64 {
        return Err(Error::Domain(format!("need 0 <= c < n = {}, got c = {c}", spec.n)));
    }
    if let Peeling::Scheduled(s) = peeling {
        Schedule::new(s.steps().to_vec(), spec.positions())?;
    }
    let m = spec.code_length() as f64;
    let n = spec.n as f64;
    let outcomes = run_trials(trials, master_seed, jobs, |_, rng| {
        let g = sample_residual_with(spec, c, rng)?;
        let r = match peeling {
            Peeling::Rounds(ell) => peel(&g, *ell),
            Peeling::Scheduled(s) => peel_scheduled(&g, s)?,
        };
        let ber = if c == 0.0 { 0.0 } else { r.surviving_edges as f64 * n / (c * m) };
        let frac = if g.origin_edge_count == 0 {
            0.0
        } else {
            r.surviving_edges as f64 / g.origin_edge_count as f64
        };
        Ok::<_, Error>((r.failed_fraction, ber, frac))
    });
    let outcomes: Vec<(f64, f64, f64)> = outcomes.into_iter().collect::<Result<_>>()?;
    let col = |f: fn(&(f64, f64, f64)) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();
    Ok(McStats {
        trials,
        w: MeanSe::from_samples(&col(|o| o.0)),
        scaled_ber: MeanSe::from_samples(&col(|o| o.1)),
        edge_survival: MeanSe::from_samples(&col(|o| o.2)),
    })
}
