//! The deterministic GPC family: coupling matrix, position weights,
//! capability mixtures, presets and derived structural quantities.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::CapabilityDistribution;

const GAMMA_SUM_TOLERANCE: f64 = 1e-12;
const INTEGRALITY_TOLERANCE: f64 = 1e-9;

/// How capabilities are assigned to the check nodes of one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauAssignment {
    /// Exactly `tau_t(i) * n_i` nodes of capability `t` at position `i`.
    #[default]
    Deterministic,
    /// Each node draws its capability independently from `tau(i)`.
    Random,
}

/// A generalized product code family `(eta, gamma, tau)` with `n` check nodes.
///
/// Positions are 0-based in code; capabilities keep their natural 1-based
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpcSpec {
    pub eta: Vec<Vec<u8>>,
    pub gamma: Vec<f64>,
    pub tau: Vec<CapabilityDistribution>,
    pub n: usize,
    #[serde(default)]
    pub assignment: TauAssignment,
}

/// One broken invariant of a [`GpcSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoPositions,
    EtaNotSquare { row: usize, len: usize },
    EtaNotBinary { i: usize, j: usize, value: u8 },
    EtaAsymmetric { i: usize, j: usize },
    UnconnectedPosition { i: usize },
    Reducible { components: usize },
    GammaLength { expected: usize, got: usize },
    GammaNegative { i: usize, value: f64 },
    GammaSum { sum: f64 },
    TauLength { expected: usize, got: usize },
    ZeroCheckNodes,
    NonIntegralPosition { i: usize, value: f64 },
    NonIntegralCount { i: usize, t: u32, value: f64 },
    ZeroDegree { i: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoPositions => write!(f, "eta has no positions"),
            Violation::EtaNotSquare { row, len } => {
                write!(f, "eta row {row} has {len} entries")
            }
            Violation::EtaNotBinary { i, j, value } => {
                write!(f, "eta[{i}][{j}] = {value} is not 0/1")
            }
            Violation::EtaAsymmetric { i, j } => write!(f, "eta[{i}][{j}] != eta[{j}][{i}]"),
            Violation::UnconnectedPosition { i } => {
                write!(f, "position {i} has an all-zero eta row (unconnected CNs)")
            }
            Violation::Reducible { components } => {
                write!(f, "eta is reducible ({components} connected components)")
            }
            Violation::GammaLength { expected, got } => {
                write!(f, "gamma has length {got}, expected {expected}")
            }
            Violation::GammaNegative { i, value } => write!(f, "gamma[{i}] = {value} < 0"),
            Violation::GammaSum { sum } => write!(f, "gamma sums to {sum}, not 1"),
            Violation::TauLength { expected, got } => {
                write!(f, "tau has {got} distributions, expected {expected}")
            }
            Violation::ZeroCheckNodes => write!(f, "n must be positive"),
            Violation::NonIntegralPosition { i, value } => {
                write!(f, "gamma[{i}] * n = {value} is not an integer")
            }
            Violation::NonIntegralCount { i, t, value } => {
                write!(f, "tau_{t}({i}) * n_{i} = {value} is not an integer")
            }
            Violation::ZeroDegree { i } => write!(f, "check nodes at position {i} have degree 0"),
        }
    }
}

/// Outcome of [`GpcSpec::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl GpcSpec {
    /// Number of positions `L`.
    pub fn positions(&self) -> usize {
        self.eta.len()
    }

    pub fn coupled(&self, i: usize, j: usize) -> bool {
        self.eta[i][j] == 1
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let v = &mut report.violations;
        let l = self.eta.len();
        if l == 0 {
            v.push(Violation::NoPositions);
            return report;
        }
        let mut square = true;
        for (row, r) in self.eta.iter().enumerate() {
            if r.len() != l {
                v.push(Violation::EtaNotSquare { row, len: r.len() });
                square = false;
            }
        }
        if square {
            for i in 0..l {
                for j in 0..l {
                    let e = self.eta[i][j];
                    if e > 1 {
                        v.push(Violation::EtaNotBinary { i, j, value: e });
                    }
                    if j > i && e != self.eta[j][i] {
                        v.push(Violation::EtaAsymmetric { i, j });
                    }
                }
                if self.eta[i].iter().all(|&e| e == 0) {
                    v.push(Violation::UnconnectedPosition { i });
                }
            }
            let components = self.position_components();
            if components > 1 {
                v.push(Violation::Reducible { components });
            }
        }

        if self.gamma.len() != l {
            v.push(Violation::GammaLength {
                expected: l,
                got: self.gamma.len(),
            });
        } else {
            for (i, &g) in self.gamma.iter().enumerate() {
                if !(g >= 0.0) || !g.is_finite() {
                    v.push(Violation::GammaNegative { i, value: g });
                }
            }
            let sum: f64 = self.gamma.iter().sum();
            if !((sum - 1.0).abs() <= GAMMA_SUM_TOLERANCE) {
                v.push(Violation::GammaSum { sum });
            }
        }
        if self.tau.len() != l {
            v.push(Violation::TauLength {
                expected: l,
                got: self.tau.len(),
            });
        }
        if self.n == 0 {
            v.push(Violation::ZeroCheckNodes);
        }
        if !v.is_empty() {
            return report;
        }

        for (i, &g) in self.gamma.iter().enumerate() {
            let exact = g * self.n as f64;
            let off = (exact - exact.round()).abs();
            match self.assignment {
                TauAssignment::Deterministic => {
                    if off > INTEGRALITY_TOLERANCE {
                        v.push(Violation::NonIntegralPosition { i, value: exact });
                        continue;
                    }
                    let ni = exact.round();
                    for (t, w) in self.tau[i].iter() {
                        let count = w * ni;
                        if (count - count.round()).abs() > INTEGRALITY_TOLERANCE {
                            v.push(Violation::NonIntegralCount { i, t, value: count });
                        }
                    }
                }
                TauAssignment::Random => {
                    if off > INTEGRALITY_TOLERANCE {
                        report.warnings.push(format!(
                            "gamma[{i}] * n = {exact} rounded to {}",
                            exact.round()
                        ));
                    }
                }
            }
        }
        if v.is_empty() {
            let sizes = self.position_sizes();
            for (i, d) in self.cn_degrees().into_iter().enumerate() {
                if sizes[i] > 0 && d == 0 {
                    v.push(Violation::ZeroDegree { i });
                }
            }
        }
        report
    }

    /// `Ok(())` when valid, otherwise every violation wrapped in an error.
    pub fn check(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(report.violations))
        }
    }

    fn position_components(&self) -> usize {
        let l = self.eta.len();
        let mut seen = vec![false; l];
        let mut components = 0;
        for start in 0..l {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for j in 0..l {
                    if self.eta[i][j] == 1 && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        components
    }

    /// Check nodes per position, `n_i = round(gamma_i n)`.
    pub fn position_sizes(&self) -> Vec<usize> {
        self.gamma
            .iter()
            .map(|g| (g * self.n as f64).round() as usize)
            .collect()
    }

    /// Total number of check nodes actually instantiated (`sum_i n_i`).
    pub fn total_check_nodes(&self) -> usize {
        self.position_sizes().iter().sum()
    }

    /// Check-node degree (component code length) per position.
    pub fn cn_degrees(&self) -> Vec<u64> {
        let sizes = self.position_sizes();
        let l = self.positions();
        (0..l)
            .map(|i| {
                (0..l)
                    .filter(|&j| self.coupled(i, j))
                    .map(|j| {
                        if i == j {
                            (sizes[i] as u64).saturating_sub(1)
                        } else {
                            sizes[j] as u64
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Code length `m` (number of variable nodes).
    pub fn code_length(&self) -> u64 {
        let sizes: Vec<u64> = self.position_sizes().iter().map(|&s| s as u64).collect();
        let l = self.positions();
        let mut m = 0u64;
        for i in 0..l {
            if self.coupled(i, i) {
                m += sizes[i] * sizes[i].saturating_sub(1) / 2;
            }
            for j in i + 1..l {
                if self.coupled(i, j) {
                    m += sizes[i] * sizes[j];
                }
            }
        }
        m
    }

    /// `gamma^T eta gamma`.
    pub fn coupling_mass(&self) -> f64 {
        let l = self.positions();
        let mut acc = 0.0;
        for i in 0..l {
            for j in 0..l {
                if self.coupled(i, j) {
                    acc += self.gamma[i] * self.gamma[j];
                }
            }
        }
        acc
    }

    /// Check-node scaling `a = 1 / (gamma^T eta gamma)` under which `c` is the
    /// mean number of initial erasures per component code.
    pub fn scaling_a(&self) -> f64 {
        1.0 / self.coupling_mass()
    }

    /// Mean erasure-correcting capability `t_bar`.
    pub fn mean_t(&self) -> f64 {
        self.gamma
            .iter()
            .zip(&self.tau)
            .map(|(g, tau)| g * tau.mean())
            .sum()
    }

    /// Largest capability used at any position.
    pub fn t_max(&self) -> u32 {
        self.tau.iter().map(|d| d.t_max()).max().unwrap_or(1)
    }

    /// The gamma-weighted capability mixture over all positions.
    pub fn aggregate_tau(&self) -> CapabilityDistribution {
        let mut probs = vec![0.0; self.t_max() as usize];
        for (g, tau) in self.gamma.iter().zip(&self.tau) {
            for (t, w) in tau.iter() {
                probs[t as usize - 1] += g * w;
            }
        }
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        CapabilityDistribution::new(probs).expect("mixture of valid distributions")
    }

    /// Mean Poisson offspring count of a vertex at position `i` per unit `c`,
    /// `sum_j eta_ij gamma_j`.
    pub fn offspring_weight(&self, i: usize) -> f64 {
        (0..self.positions())
            .filter(|&j| self.coupled(i, j))
            .map(|j| self.gamma[j])
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// A single-position (HPC) spec with an arbitrary capability mixture.
    pub fn hpc_mixture(n: usize, tau: CapabilityDistribution, assignment: TauAssignment) -> Result<Self> {
        let spec = GpcSpec {
            eta: vec![vec![1]],
            gamma: vec![1.0],
            tau: vec![tau],
            n,
            assignment,
        };
        spec.check()?;
        Ok(spec)
    }
}

/// Half-product code: `eta = (1)`, `gamma = (1)`.
pub fn preset_hpc(n: usize, t: u32) -> Result<GpcSpec> {
    GpcSpec::hpc_mixture(n, CapabilityDistribution::point_mass(t)?, TauAssignment::Deterministic)
}

/// Product code with row fraction `split` (position 0) and column fraction
/// `1 - split` (position 1).
pub fn preset_pc(n: usize, split: f64, t_row: u32, t_col: u32) -> Result<GpcSpec> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "product-code split must lie in (0, 1), got {split}"
        )));
    }
    let spec = GpcSpec {
        eta: vec![vec![0, 1], vec![1, 0]],
        gamma: vec![split, 1.0 - split],
        tau: vec![
            CapabilityDistribution::point_mass(t_row)?,
            CapabilityDistribution::point_mass(t_col)?,
        ],
        n,
        assignment: TauAssignment::Deterministic,
    };
    spec.check()?;
    Ok(spec)
}

fn banded(l: usize, t: u32, n: usize, eta: Vec<Vec<u8>>) -> Result<GpcSpec> {
    let tau = CapabilityDistribution::point_mass(t)?;
    let spec = GpcSpec {
        eta,
        gamma: vec![1.0 / l as f64; l],
        tau: vec![tau; l],
        n,
        assignment: TauAssignment::Deterministic,
    };
    spec.check()?;
    Ok(spec)
}

/// Staircase code: `eta_{i,i+1} = eta_{i+1,i} = 1`, uniform `gamma`.
pub fn preset_staircase(l: usize, n: usize, t: u32) -> Result<GpcSpec> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!(
            "staircase codes need L >= 2, got {l}"
        )));
    }
    let mut eta = vec![vec![0u8; l]; l];
    for i in 0..l - 1 {
        eta[i][i + 1] = 1;
        eta[i + 1][i] = 1;
    }
    banded(l, t, n, eta)
}

/// Block-wise braided code: the staircase band plus
/// `eta_{2i-1,2i+2} = 1` (1-based) for `i < L/2`.
pub fn preset_braided(l: usize, n: usize, t: u32) -> Result<GpcSpec> {
    if l < 4 || l % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "braided codes need an even L >= 4, got {l}"
        )));
    }
    let mut eta = vec![vec![0u8; l]; l];
    for i in 0..l - 1 {
        eta[i][i + 1] = 1;
        eta[i + 1][i] = 1;
    }
    for i in 1..l / 2 {
        // 1-based (2i-1, 2i+2)
        let (a, b) = (2 * i - 2, 2 * i + 1);
        eta[a][b] = 1;
        eta[b][a] = 1;
    }
    banded(l, t, n, eta)
}

/// Coupling matrix of a block code array.
///
/// `eta_prime[i][j] = 1` marks a block in grid row `i`, column `j`. Row
/// positions get even (1-based) indices and column positions odd ones;
/// positions without any block are pruned and `gamma` is uniform over the
/// survivors.
pub fn preset_from_block_array(eta_prime: &[Vec<u8>]) -> Result<(Vec<Vec<u8>>, Vec<f64>)> {
    let rows = eta_prime.len();
    let cols = eta_prime.first().map_or(0, |r| r.len());
    if eta_prime.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter("block array rows differ in length".into()));
    }
    if eta_prime.iter().flatten().all(|&e| e == 0) {
        return Err(Error::InvalidParameter("block array has no blocks".into()));
    }
    let a = rows.max(cols);
    let l = 2 * a;
    let mut eta = vec![vec![0u8; l]; l];
    for (i, row) in eta_prime.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e != 0 {
                // 1-based: row position 2i, column position 2j - 1
                let (r, c) = (2 * i + 1, 2 * j);
                eta[r][c] = 1;
                eta[c][r] = 1;
            }
        }
    }
    let keep: Vec<usize> = (0..l).filter(|&i| eta[i].iter().any(|&e| e == 1)).collect();
    let pruned: Vec<Vec<u8>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| eta[i][j]).collect())
        .collect();
    let gamma = vec![1.0 / keep.len() as f64; keep.len()];
    Ok((pruned, gamma))
}

/// Shortened binary BCH component code parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BchComponentParams {
    /// Field extension degree.
    pub nu: u32,
    /// Shortening length in bits.
    pub s: u64,
    /// Erasure-correcting capability.
    pub t: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BchCode {
    pub n: u64,
    pub k: u64,
    pub d_min: u32,
}

pub fn bch_params(p: BchComponentParams) -> Result<BchCode> {
    if p.nu == 0 || p.nu > 62 || p.t == 0 {
        return Err(Error::InvalidParameter(format!("bad BCH parameters {p:?}")));
    }
    let full = (1u64 << p.nu) - 1;
    if p.s >= full {
        return Err(Error::InvalidParameter(format!(
            "shortening {} leaves no code bits (2^nu - 1 = {full})",
            p.s
        )));
    }
    let n = full - p.s;
    let redundancy = if p.t % 2 == 0 {
        p.nu as u64 * p.t as u64 / 2
    } else {
        p.nu as u64 * (p.t as u64 - 1) / 2 + 1
    };
    if redundancy >= n {
        return Err(Error::InvalidParameter(format!(
            "BCH code {p:?} has dimension < 1"
        )));
    }
    Ok(BchCode {
        n,
        k: n - redundancy,
        d_min: p.t + 1,
    })
}

/// `R >= 1 - sum_k (n_k - k_k) / m`, where `n_k` is the degree of check node
/// `k` and `dims[k]` its component code dimension. Check nodes are ordered by
/// position.
pub fn rate_lower_bound(spec: &GpcSpec, dims: &[u64]) -> Result<f64> {
    let sizes = spec.position_sizes();
    let total: usize = sizes.iter().sum();
    if dims.len() != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: dims.len(),
        });
    }
    let degrees = spec.cn_degrees();
    let mut redundancy = 0.0;
    let mut k = 0;
    for (pos, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            redundancy += degrees[pos] as f64 - dims[k] as f64;
            k += 1;
        }
    }
    Ok(1.0 - redundancy / spec.code_length() as f64)
}

/// HPC special case `1 - 2 (n - k_C) / (n - 1)` for an `n x n` array with
/// component dimension `k_C`.
pub fn hpc_rate_lower_bound(n: u64, k_c: u64) -> f64 {
    1.0 - 2.0 * (n as f64 - k_c as f64) / (n as f64 - 1.0)
}
