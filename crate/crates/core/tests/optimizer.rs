use gpclab::de::{refined_upper_bound, success_condition};
use gpclab::optimizer::{
    build_lp, post_verify, solve, solve_lp, sweep_tradeoff, LinearProgram, LpStatus, Relation,
    SolutionStatus, DEFAULT_MAX_PIVOTS,
};
use gpclab::rng::trial_rng;
use gpclab::CapabilityDistribution;
use rand::Rng;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Best objective over all basic feasible points, or `None` if infeasible.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // hyperplanes: every constraint row, then x_k = 0
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        planes.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |idx| {
        let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if lp.max_violation(&x) <= 1e-9 {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b| b.min(obj)));
            }
        }
    });
    best
}

fn random_lp(rng: &mut impl Rng, n: usize, rows: usize) -> LinearProgram {
    let mut lp = LinearProgram::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        lp.add(e, Relation::Le, 10.0).unwrap();
    }
    for _ in 0..rows {
        let coeffs = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let rel = match rng.random_range(0..10) {
            0..=5 => Relation::Le,
            6..=8 => Relation::Ge,
            _ => Relation::Eq,
        };
        lp.add(coeffs, rel, rng.random_range(-3.0..5.0)).unwrap();
    }
    lp
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = trial_rng(31, 0);
    let mut feasible = 0;
    for case in 0..300 {
        let n = rng.random_range(1..=6);
        let max_rows = if n <= 3 { 30 - n } else { 12 - n };
        let rows = rng.random_range(1..=max_rows);
        let lp = random_lp(&mut rng, n, rows);
        let sol = solve_lp(&lp, DEFAULT_MAX_PIVOTS).unwrap();
        match vertex_oracle(&lp) {
            Some(best) => {
                feasible += 1;
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
                assert!((sol.objective - best).abs() <= 1e-9 * (1.0 + best.abs()), "case {case}: {} vs {best}", sol.objective);
                assert!(lp.max_violation(&sol.x) <= 1e-9);
            }
            None => assert_eq!(sol.status, LpStatus::Infeasible, "case {case}"),
        }
    }
    assert!(feasible > 50);
}

#[test]
fn mixture_solutions_are_distributions_with_mean_above_c_over_2() {
    let mut prev = 0.0;
    for c in [3.0, 6.0, 9.5, 13.4, 17.0] {
        let sol = solve(&build_lp(c, 300, 30, None).unwrap()).unwrap();
        assert_eq!(sol.status, SolutionStatus::Optimal);
        let tau = sol.tau.unwrap();
        assert!((tau.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        assert!(tau.probs().iter().all(|p| *p >= -1e-12));
        let t_bar = sol.t_bar.unwrap();
        assert!(t_bar >= c / 2.0, "c {c}: {t_bar}");
        assert!(t_bar >= prev);
        assert!(refined_upper_bound(&tau) >= c - 1e-3);
        prev = t_bar;
    }
}

#[test]
fn uniform_feasible_just_below_n() {
    for n in [4u32, 8, 12] {
        let c = n as f64 - 0.01;
        let sol = solve(&build_lp(c, 1000, n, None).unwrap()).unwrap();
        assert_eq!(sol.status, SolutionStatus::Optimal);
        assert!(sol.t_bar.unwrap() <= (n as f64 + 1.0) / 2.0 + 1e-9);
        let u = CapabilityDistribution::uniform(1, n).unwrap();
        assert!(success_condition(&u, c, 1000).unwrap().holds);
    }
}

#[test]
fn uniform_ten_verifies_at_ten() {
    let u = CapabilityDistribution::uniform(1, 10).unwrap();
    let v = post_verify(&gpclab::optimizer::candidate(u, 10.0), 1000).unwrap();
    assert_eq!(v.status, SolutionStatus::Optimal);
    assert!(v.fine_grid_slack.unwrap() > -1e-12);
}

#[test]
fn gap_near_mean_seven() {
    let sol = solve(&build_lp(13.40, 1000, 50, None).unwrap()).unwrap();
    let gap = 2.0 * sol.t_bar.unwrap() - 13.40;
    assert!((gap - 0.58).abs() <= 0.1, "gap {gap}");
}

#[test]
fn frontier_gap_shrinks_with_mean() {
    let cs = [10.0, 16.0, 22.0, 28.0, 34.0, 39.0];
    let pts = sweep_tradeoff(&cs, 500, 50, None, None).unwrap();
    assert_eq!(pts.len(), cs.len());
    assert!(pts.iter().all(|p| (5.0..=20.0).contains(&p.t_bar)));
    for w in pts.windows(2) {
        assert!(w[1].t_bar > w[0].t_bar);
        assert!(w[1].gap < w[0].gap, "{:?} -> {:?}", w[0], w[1]);
    }
}
