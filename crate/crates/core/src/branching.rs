//! Multi-type Poisson branching process used as an independent check on
//! density evolution.
//!
//! A node of position `i` has, for every coupled position `j`, a
//! Poisson(`c gamma_j`) number of children at `j`, each with a capability
//! drawn from `tau(j)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MeanSe, ResidualGraph};
use crate::rng::{run_trials, trial_rng, TrialRng};
use crate::spec::GpcSpec;

pub const MAX_TREE_NODES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub position: u32,
    pub capability: u32,
    pub depth: u32,
    pub children: Vec<u32>,
}

/// A tree sampled down to `depth`; nodes are stored in breadth-first order,
/// so children always follow their parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedTree {
    pub nodes: Vec<TreeNode>,
    pub depth: u32,
}

impl TypedTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes at exactly depth `d`.
    pub fn generation_size(&self, d: u32) -> usize {
        self.nodes.iter().filter(|n| n.depth == d).count()
    }

    /// Number of nodes at depth at most `ell`.
    pub fn total_up_to(&self, ell: u32) -> usize {
        self.nodes.iter().filter(|n| n.depth <= ell).count()
    }

    /// The tree as a residual graph (vertex `k` is node `k`).
    pub fn to_residual_graph(&self) -> ResidualGraph {
        let pos = self.nodes.iter().map(|n| n.position).collect();
        let cap = self.nodes.iter().map(|n| n.capability).collect();
        let edges: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(p, n)| n.children.iter().map(move |&ch| (p, ch as usize)))
            .collect();
        ResidualGraph::from_edges(pos, cap, &edges).expect("a tree is a simple graph")
    }
}

struct Sampler {
    /// `(child position, offspring law)` per parent position.
    offspring: Vec<Vec<(u32, Poisson<f64>)>>,
    capability: Vec<WeightedIndex<f64>>,
    position: WeightedIndex<f64>,
}

impl Sampler {
    fn new(spec: &GpcSpec, c: f64) -> Result<Self> {
        spec.check()?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("c must be >= 0, got {c}")));
        }
        let l = spec.positions();
        let mut offspring = Vec::with_capacity(l);
        for i in 0..l {
            let mut laws = Vec::new();
            for j in 0..l {
                let mean = c * spec.gamma[j];
                if spec.coupled(i, j) && mean > 0.0 {
                    let law = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;
                    laws.push((j as u32, law));
                }
            }
            offspring.push(laws);
        }
        let capability = spec
            .tau
            .iter()
            .map(|d| WeightedIndex::new(d.probs()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let position = WeightedIndex::new(&spec.gamma)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            offspring,
            capability,
            position,
        })
    }

    fn root_type(&self, rng: &mut TrialRng) -> (u32, u32) {
        let i = self.position.sample(rng);
        (i as u32, self.capability[i].sample(rng) as u32 + 1)
    }

    fn sample(&self, root: (u32, u32), depth: u32, rng: &mut TrialRng) -> Result<TypedTree> {
        let mut nodes = vec![TreeNode {
            position: root.0,
            capability: root.1,
            depth: 0,
            children: Vec::new(),
        }];
        let mut next = 0;
        while next < nodes.len() {
            let (pos, d) = (nodes[next].position as usize, nodes[next].depth);
            if d < depth {
                let mut children = Vec::new();
                for (j, law) in &self.offspring[pos] {
                    let k = law.sample(rng) as usize;
                    for _ in 0..k {
                        if nodes.len() >= MAX_TREE_NODES {
                            return Err(Error::TreeTooLarge(MAX_TREE_NODES));
                        }
                        children.push(nodes.len() as u32);
                        nodes.push(TreeNode {
                            position: *j,
                            capability: self.capability[*j as usize].sample(rng) as u32 + 1,
                            depth: d + 1,
                            children: Vec::new(),
                        });
                    }
                }
                nodes[next].children = children;
            }
            next += 1;
        }
        Ok(TypedTree { nodes, depth })
    }
}

/// Samples a tree of the given depth with a root type drawn from
/// `gamma_i tau_t(i)`.
pub fn sample_tree(spec: &GpcSpec, c: f64, depth: u32, seed: u64) -> Result<TypedTree> {
    let s = Sampler::new(spec, c)?;
    let mut rng = trial_rng(seed, 0);
    let root = s.root_type(&mut rng);
    s.sample(root, depth, &mut rng)
}

/// Like [`sample_tree`] but from an explicit stream and optional fixed root
/// type `(position, capability)`.
pub fn sample_tree_with(
    spec: &GpcSpec,
    c: f64,
    depth: u32,
    root: Option<(usize, u32)>,
    rng: &mut TrialRng,
) -> Result<TypedTree> {
    let s = Sampler::new(spec, c)?;
    let root = match root {
        Some((i, t)) => check_root(spec, i, t)?,
        None => s.root_type(rng),
    };
    s.sample(root, depth, rng)
}

fn check_root(spec: &GpcSpec, i: usize, t: u32) -> Result<(u32, u32)> {
    if i >= spec.positions() || t == 0 || spec.tau[i].weight(t) <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "root type ({i}, {t}) has zero probability"
        )));
    }
    Ok((i as u32, t))
}

/// Whether the root survives `ell` peeling rounds. A non-root node with
/// `r > 0` rounds left survives iff at least `t` of its children survive
/// `r - 1` rounds (its parent edge counts toward its degree); the root
/// needs `t + 1`. Nodes at depth `ell` count as surviving.
pub fn peel_tree(tree: &TypedTree, ell: u32) -> Result<bool> {
    if ell > tree.depth {
        return Err(Error::InvalidParameter(format!(
            "tree sampled to depth {} cannot be peeled for {ell} rounds",
            tree.depth
        )));
    }
    let mut alive = vec![false; tree.len()];
    for k in (0..tree.len()).rev() {
        let node = &tree.nodes[k];
        if node.depth > ell {
            continue;
        }
        alive[k] = if node.depth == ell {
            true
        } else {
            let surviving = node.children.iter().filter(|&&ch| alive[ch as usize]).count();
            let need = node.capability as usize + usize::from(k == 0);
            surviving >= need
        };
    }
    Ok(alive[0])
}

/// `E[T_ell^2]` for the total size `T_ell` of the first `ell + 1`
/// generations of a Poisson(`c`) Galton-Watson tree.
pub fn expected_t2(c: f64, ell: u32) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("expected_t2 needs c > 0, got {c}")));
    }
    if ell == 0 {
        return Ok(1.0);
    }
    let e = c - 1.0;
    let k = 2 * ell as i32 + 3;
    if e.abs() < 0.1 {
        // numerator / e^3 is a polynomial in e; evaluate it directly to
        // avoid cancellation near c = 1
        let coeff = |j: u32| {
            binomial(k as u32, j + 3) - k as f64 * binomial(ell + 1, j + 2)
        };
        let mut acc = 0.0;
        for j in (0..=2 * ell).rev() {
            acc = acc * e + coeff(j);
        }
        return Ok(acc);
    }
    let num = c.powi(k) - 1.0 - k as f64 * c.powi(ell as i32 + 1) * e;
    Ok(num / e.powi(3))
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEstimate {
    pub estimate: MeanSe,
    /// Trials that hit the node cap and were dropped.
    pub aborted: u64,
}

fn reduce(outcomes: Vec<Result<f64>>) -> Result<TreeEstimate> {
    let mut xs = Vec::with_capacity(outcomes.len());
    let mut aborted = 0;
    for o in outcomes {
        match o {
            Ok(v) => xs.push(v),
            Err(Error::TreeTooLarge(_)) => aborted += 1,
            Err(e) => return Err(e),
        }
    }
    if xs.is_empty() {
        return Err(Error::TreeTooLarge(MAX_TREE_NODES));
    }
    Ok(TreeEstimate {
        estimate: MeanSe::from_samples(&xs),
        aborted,
    })
}

/// Monte Carlo estimate of the root survival probability after `ell`
/// rounds, optionally for a fixed root type.
pub fn survival_mc(
    spec: &GpcSpec,
    c: f64,
    ell: u32,
    root: Option<(usize, u32)>,
    trials: u64,
    master_seed: u64,
    jobs: Option<usize>,
) -> Result<TreeEstimate> {
    let s = Sampler::new(spec, c)?;
    let fixed = root.map(|(i, t)| check_root(spec, i, t)).transpose()?;
    reduce(run_trials(trials, master_seed, jobs, |_, rng| {
        let r = fixed.unwrap_or_else(|| s.root_type(rng));
        let tree = s.sample(r, ell, rng)?;
        Ok(if peel_tree(&tree, ell)? { 1.0 } else { 0.0 })
    }))
}

/// Monte Carlo estimate of `E[T_ell^2]`.
pub fn t2_mc(
    spec: &GpcSpec,
    c: f64,
    ell: u32,
    trials: u64,
    master_seed: u64,
    jobs: Option<usize>,
) -> Result<TreeEstimate> {
    let s = Sampler::new(spec, c)?;
    reduce(run_trials(trials, master_seed, jobs, |_, rng| {
        let r = s.root_type(rng);
        let t = s.sample(r, ell, rng)?.len() as f64;
        Ok(t * t)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::peel;
    use crate::spec::{preset_hpc, preset_staircase};

    #[test]
    fn depth_zero_is_a_single_root() {
        let s = preset_hpc(100, 3).unwrap();
        let t = sample_tree(&s, 5.0, 0, 1).unwrap();
        assert_eq!(t.len(), 1);
        assert!(peel_tree(&t, 0).unwrap());
    }

    #[test]
    fn bare_root_is_removed() {
        let t = TypedTree {
            nodes: vec![TreeNode {
                position: 0,
                capability: 2,
                depth: 0,
                children: vec![],
            }],
            depth: 3,
        };
        for ell in 1..=3 {
            assert!(!peel_tree(&t, ell).unwrap());
        }
        assert!(peel_tree(&t, 4).is_err());
    }

    #[test]
    fn star_with_childless_leaves() {
        for t in 1..5u32 {
            let mut nodes = vec![TreeNode {
                position: 0,
                capability: t,
                depth: 0,
                children: (1..=t + 1).collect(),
            }];
            for _ in 0..=t {
                nodes.push(TreeNode {
                    position: 0,
                    capability: 3,
                    depth: 1,
                    children: vec![],
                });
            }
            let tree = TypedTree { nodes, depth: 2 };
            assert!(!peel_tree(&tree, 2).unwrap());
            // with one round the leaves are still counted as alive
            assert!(peel_tree(&tree, 1).unwrap());
        }
    }

    #[test]
    fn t2_closed_form_values() {
        assert_eq!(expected_t2(1.0, 2).unwrap(), 14.0);
        for c in [0.3, 0.999_999_9, 1.0, 1.05, 2.0, 7.0] {
            assert_eq!(expected_t2(c, 0).unwrap(), 1.0);
        }
        // c = 2, ell = 1: T = 1 + Z, Z ~ Poisson(2), E[T^2] = 1 + 4 + 6 = 11
        assert!((expected_t2(2.0, 1).unwrap() - 11.0).abs() < 1e-12);
        assert!(expected_t2(0.0, 1).is_err());
    }

    #[test]
    fn t2_is_continuous_across_the_series_switch() {
        for ell in [1u32, 3, 8] {
            let inside = expected_t2(1.0999999, ell).unwrap();
            let outside = expected_t2(1.1000001, ell).unwrap();
            assert!((inside - outside).abs() / outside < 1e-5, "ell {ell}");
        }
    }

    #[test]
    fn tree_peel_matches_graph_peel() {
        let s = preset_staircase(4, 40, 2).unwrap();
        for seed in 0..50 {
            let tree = sample_tree(&s, 3.0, 3, seed).unwrap();
            let r = peel(&tree.to_residual_graph(), Some(3));
            assert_eq!(peel_tree(&tree, 3).unwrap(), r.alive[0], "seed {seed}");
        }
    }
}
