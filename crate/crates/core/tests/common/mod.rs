#![allow(dead_code)]

use gpclab::rng::TrialRng;
use gpclab::{CapabilityDistribution, GpcSpec, TauAssignment};
use rand::Rng;

pub fn d44() -> CapabilityDistribution {
    CapabilityDistribution::from_pairs(&[
        (1, 0.070),
        (2, 0.103),
        (4, 0.115),
        (5, 0.179),
        (10, 0.496),
        (11, 0.037),
    ])
    .unwrap()
}

pub fn d45() -> CapabilityDistribution {
    CapabilityDistribution::from_pairs(&[(4, 0.495), (9, 0.029), (10, 0.476)]).unwrap()
}

pub fn random_tau(rng: &mut TrialRng, t_max: u32) -> CapabilityDistribution {
    let len = rng.random_range(1..=t_max) as usize;
    let mut w: Vec<f64> = (0..len)
        .map(|_| if rng.random_bool(0.6) { rng.random::<f64>() } else { 0.0 })
        .collect();
    w[len - 1] += 0.05;
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    CapabilityDistribution::new(w).unwrap()
}

/// A random irreducible spec with at most `max_l` positions.
pub fn random_spec(rng: &mut TrialRng, max_l: usize, t_max: u32, n: usize) -> GpcSpec {
    let l = rng.random_range(1..=max_l);
    let mut eta = vec![vec![0u8; l]; l];
    // random spanning tree keeps the position graph connected
    for i in 1..l {
        let j = rng.random_range(0..i);
        eta[i][j] = 1;
        eta[j][i] = 1;
    }
    for i in 0..l {
        for j in i..l {
            if rng.random_bool(0.3) {
                eta[i][j] = 1;
                eta[j][i] = 1;
            }
        }
    }
    if l == 1 {
        eta[0][0] = 1;
    }
    let mut gamma: Vec<f64> = (0..l).map(|_| 0.2 + rng.random::<f64>()).collect();
    let s: f64 = gamma.iter().sum();
    gamma.iter_mut().for_each(|g| *g /= s);
    let tau = (0..l).map(|_| random_tau(rng, t_max)).collect();
    let spec = GpcSpec {
        eta,
        gamma,
        tau,
        n,
        assignment: TauAssignment::Random,
    };
    spec.check().unwrap();
    spec
}
