mod common;

use gpclab::branching::{expected_t2, peel_tree, sample_tree, survival_mc, t2_mc};
use gpclab::de::{de_run, de_step_per_type, per_type_ones, z_per_type, DeOptions};
use gpclab::graph::{neighborhood_size, peel, sample_residual, MeanSe};
use gpclab::rng::trial_rng;
use gpclab::spec::{preset_hpc, preset_staircase};
use gpclab::{GpcSpec, TauAssignment};

#[test]
fn hpc_offspring_is_poisson_c() {
    let spec = preset_hpc(100, 3).unwrap();
    let c = 4.5;
    let kids: Vec<f64> = (0..20_000)
        .map(|s| sample_tree(&spec, c, 1, s).unwrap().generation_size(1) as f64)
        .collect();
    let m = MeanSe::from_samples(&kids);
    assert!((m.mean - c).abs() < 4.0 * m.se, "{m:?}");
    assert!((m.sd * m.sd - c).abs() < 0.2, "variance {}", m.sd * m.sd);
}

#[test]
fn generation_sizes_grow_like_powers_of_c() {
    let spec = preset_hpc(100, 2).unwrap();
    let c = 1.7;
    for ell in 1..=4u32 {
        let sizes: Vec<f64> = (0..20_000)
            .map(|s| sample_tree(&spec, c, ell, 77 + s).unwrap().generation_size(ell) as f64)
            .collect();
        let m = MeanSe::from_samples(&sizes);
        let want = c.powi(ell as i32);
        assert!((m.mean - want).abs() < 4.0 * m.se, "ell {ell}: {m:?} vs {want}");
    }
}

#[test]
fn tree_peeling_agrees_with_graph_peeling() {
    let mut rng = trial_rng(5, 0);
    let mut specs = vec![
        GpcSpec::hpc_mixture(1000, common::d44(), TauAssignment::Random).unwrap(),
        preset_staircase(5, 50, 2).unwrap(),
    ];
    specs.push(common::random_spec(&mut rng, 4, 5, 100));
    for spec in &specs {
        for seed in 0..500 {
            let tree = sample_tree(spec, 2.5, 4, seed).unwrap();
            for ell in 0..=4 {
                let r = peel(&tree.to_residual_graph(), Some(ell as usize));
                assert_eq!(peel_tree(&tree, ell).unwrap(), r.alive[0], "seed {seed} ell {ell}");
            }
        }
    }
}

#[test]
fn root_survival_matches_density_evolution() {
    let spec = preset_staircase(4, 40, 2).unwrap();
    let c = 3.0 * spec.scaling_a();
    let tr = de_run(&spec, c, &DeOptions::with_ell_max(4)).unwrap();
    for ell in 1..=4u32 {
        let est = survival_mc(&spec, c, ell, None, 40_000, 11, None).unwrap();
        let z = tr.z[ell as usize];
        let e = est.estimate;
        assert!((e.mean - z).abs() < 4.0 * e.se + 1e-3, "ell {ell}: {} vs {z}", e.mean);
    }
}

#[test]
fn typed_root_survival_matches_per_type_recursion() {
    let spec = GpcSpec::hpc_mixture(1000, common::d45(), TauAssignment::Random).unwrap();
    let c = 10.0;
    let ell = 3u32;
    let mut typed = per_type_ones(&spec);
    for _ in 1..ell {
        typed = de_step_per_type(&spec, &typed, c).unwrap();
    }
    let z = z_per_type(&spec, &typed, c).unwrap();
    for (t, _) in spec.tau[0].iter() {
        let est = survival_mc(&spec, c, ell, Some((0, t)), 20_000, 3 + t as u64, None).unwrap();
        let want = z[0][t as usize - 1];
        let e = est.estimate;
        assert!((e.mean - want).abs() < 4.0 * e.se + 1e-3, "t {t}: {} vs {want}", e.mean);
    }
}

#[test]
fn graph_neighborhoods_are_dominated_by_the_tree() {
    let spec = preset_hpc(2000, 3).unwrap();
    let (c, ell) = (3.0f64, 3usize);
    let tree_mean: f64 = (0..=ell).map(|k| c.powi(k as i32)).sum();
    let mut sizes = Vec::new();
    for seed in 0..5 {
        let g = sample_residual(&spec, c, seed).unwrap();
        for v in (0..g.num_vertices()).step_by(10) {
            sizes.push(neighborhood_size(&g, v, ell) as f64);
        }
    }
    let m = MeanSe::from_samples(&sizes);
    assert!(m.mean <= tree_mean + 3.0 * m.se, "{} > {tree_mean}", m.mean);
    assert!(m.mean > 0.8 * tree_mean);
}

#[test]
fn t2_estimate_brackets_the_closed_form() {
    let spec = preset_hpc(100, 2).unwrap();
    for &(c, ell) in &[(0.5, 3u32), (1.0, 2), (1.5, 3)] {
        let est = t2_mc(&spec, c, ell, 100_000, 9, None).unwrap();
        let want = expected_t2(c, ell).unwrap();
        let e = est.estimate;
        assert_eq!(est.aborted, 0);
        assert!((e.mean - want).abs() < 4.0 * e.se, "c {c} ell {ell}: {} vs {want}", e.mean);
    }
}
