mod common;

use gpclab::rng::trial_rng;
use gpclab::spec::{bch_params, hpc_rate_lower_bound, preset_braided, preset_from_block_array, rate_lower_bound, BchComponentParams};
use gpclab::{GpcSpec, TauAssignment};
use proptest::prelude::*;

#[test]
fn irregular_hpc_rate_is_about_093() {
    // 1000 x 1000 HPC, each check node a BCH code of length 1000 shortened
    // by one bit
    let spec = GpcSpec::hpc_mixture(1000, common::d44(), TauAssignment::Deterministic).unwrap();
    let mut dims = Vec::new();
    for (t, w) in spec.tau[0].iter() {
        let code = bch_params(BchComponentParams { nu: 10, s: 23, t }).unwrap();
        let count = (w * 1000.0).round() as usize;
        dims.extend(std::iter::repeat_n(code.k - 1, count));
    }
    assert_eq!(dims.len(), 1000);
    let r = rate_lower_bound(&spec, &dims).unwrap();
    assert!((r - 0.93).abs() <= 0.005, "rate bound {r}");
}

#[test]
fn hpc_rate_forms_agree() {
    let spec = gpclab::spec::preset_hpc(200, 3).unwrap();
    let dims = vec![180u64; 200];
    let general = rate_lower_bound(&spec, &dims).unwrap();
    let closed = hpc_rate_lower_bound(200, 181);
    assert!((general - closed).abs() < 1e-12);
    assert!(rate_lower_bound(&spec, &dims[..10]).is_err());
}

#[test]
fn braided_is_valid_for_even_l() {
    for l in [4usize, 6, 8, 12] {
        let s = preset_braided(l, 10 * l, 3).unwrap();
        assert!(s.validate().is_valid());
    }
    assert!(preset_braided(5, 50, 3).is_err());
    assert!(preset_braided(2, 20, 3).is_err());
}

proptest! {
    #[test]
    fn handshake(seed in any::<u64>(), n in 10usize..400) {
        let mut rng = trial_rng(seed, 0);
        let spec = common::random_spec(&mut rng, 6, 6, n);
        let sizes = spec.position_sizes();
        let deg = spec.cn_degrees();
        let lhs: u64 = sizes.iter().zip(&deg).map(|(s, d)| *s as u64 * d).sum();
        prop_assert_eq!(lhs, 2 * spec.code_length());
    }

    #[test]
    fn scaling_times_mass_is_one(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 1);
        let spec = common::random_spec(&mut rng, 6, 6, 100);
        prop_assert!((spec.scaling_a() * spec.coupling_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn json_roundtrip_is_bit_exact(seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 2);
        let spec = common::random_spec(&mut rng, 5, 9, 77);
        let back = GpcSpec::from_json(&spec.to_json().unwrap()).unwrap();
        for (a, b) in spec.gamma.iter().zip(&back.gamma) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in spec.tau.iter().zip(&back.tau) {
            prop_assert_eq!(a.probs().len(), b.probs().len());
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn block_arrays_are_symmetric(
        rows in 1usize..5,
        cols in 1usize..5,
        bits in proptest::collection::vec(any::<bool>(), 25),
    ) {
        let ep: Vec<Vec<u8>> = (0..rows)
            .map(|i| (0..cols).map(|j| u8::from(bits[i * 5 + j])).collect())
            .collect();
        prop_assume!(ep.iter().flatten().any(|&e| e == 1));
        let (eta, gamma) = preset_from_block_array(&ep).unwrap();
        let l = eta.len();
        prop_assert_eq!(gamma.len(), l);
        for i in 0..l {
            prop_assert!(eta[i].iter().any(|&e| e == 1));
            for j in 0..l {
                prop_assert_eq!(eta[i][j], eta[j][i]);
            }
        }
    }
}
