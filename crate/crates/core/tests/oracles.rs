mod common;

use common::*;
use kantorovich_core::entropic::{markov_semigroup_apply, semigroup_convergence, sinkhorn_solve};
use kantorovich_core::ergopt::{ergodic_value, holonomic_lp, stochastic_holonomic_lp, subaction, Sense};
use kantorovich_core::mather::{mather_certificate, mather_constant_cycle};
use kantorovich_core::operator::reduite_fixed_point;
use kantorovich_core::weakkam::compare_peierls;
use kantorovich_core::{MarkovSemigroup, Potential, StochasticMatrix, WeakKamBundle};
use rand::Rng;

#[test]
fn karp_matches_enumeration_up_to_eight_nodes() {
    let mut r = rng(11);
    for _ in 0..150 {
        let n = r.random_range(1..=8);
        let a = random_integer_cost(&mut r, n, -8, 12, 0.5);
        let cm = mather_constant_cycle(&a).unwrap();
        let (t, l) = brute_force_min_cycle_mean(&a).expect("every row has a finite entry");
        assert_eq!(cm.total * l as f64, t * cm.cycle.len() as f64);
    }
}

#[test]
fn stationary_law_matches_elimination() {
    let mut r = rng(12);
    for _ in 0..40 {
        let n = r.random_range(1..=15);
        let p = random_ergodic_chain(&mut r, n);
        let s = MarkovSemigroup::new(p.clone()).unwrap();
        let oracle = stationary_by_elimination(&p);
        for (a, b) in s.stationary().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn markov_semigroup_reaches_stationary_average() {
    let mut r = rng(13);
    for _ in 0..20 {
        let n = r.random_range(2..=12);
        let p = random_ergodic_chain(&mut r, n);
        let s = MarkovSemigroup::new(p).unwrap();
        let f = Potential::from_f64s(&(0..n).map(|_| r.random_range(-3.0..3.0)).collect::<Vec<_>>());
        let conv = semigroup_convergence(&s, &f, 1e-10, 100_000).unwrap();
        let t = conv.t_star;
        let direct = markov_semigroup_apply(&s, &f, t).unwrap();
        assert!(direct.sup_distance(&s.limit_apply(&f).unwrap()).unwrap() <= 1e-10);
    }
}

#[test]
fn peierls_formula_matches_window_oracle() {
    let mut r = rng(14);
    for _ in 0..30 {
        let n = r.random_range(1..=8);
        let a = random_integer_cost(&mut r, n, -4, 8, 0.3);
        let cmp = compare_peierls(&a, 200, 1e-9).unwrap();
        assert!(cmp.max_difference <= 1e-9, "{}", cmp.max_difference);
    }
}

#[test]
fn mather_routes_agree_on_strongly_connected_costs() {
    let mut r = rng(15);
    for _ in 0..20 {
        let n = r.random_range(2..=20);
        let a = random_strongly_connected(&mut r, n, 0.2, false);
        let g = Potential::zeros(n);
        let m = mather_certificate(&a, &g, 100).unwrap();
        assert!((m.c - m.c_lp).abs() <= 1e-7);
        assert_eq!(m.diagnostics.bounded_oscillation, Some(true));
        assert!(m.diagnostics.cesaro_ok);
    }
}

#[test]
fn weak_kam_certificate_is_a_finite_subsolution() {
    let mut r = rng(16);
    for _ in 0..30 {
        let n = r.random_range(1..=10);
        let a = random_strongly_connected(&mut r, n, 0.3, true);
        let b = WeakKamBundle::compute(&a, 1e-9).unwrap();
        let g = b.finite_certificate().unwrap();
        let tg = kantorovich_core::minplus::backward_apply(&a, &g).unwrap();
        for x in 0..n {
            assert!(tg[x].value() + b.c <= g[x].value() + 1e-9);
            if b.is_aubry(x) {
                assert!((tg[x].value() + b.c - g[x].value()).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn sinkhorn_converges_with_contraction() {
    let mut r = rng(17);
    for _ in 0..10 {
        let n = r.random_range(2..=10);
        let c = kantorovich_core::CostMatrix::from_fn(n, |_, _| r.random_range(0.0..2.0)).unwrap();
        let (mu, nu) = (random_prob(&mut r, n, 0.0), random_prob(&mut r, n, 0.0));
        let s = sinkhorn_solve(&c, &mu, &nu, 0.5, 1e-10, 100_000).unwrap();
        assert!(s.residual <= 1e-10);
        assert!(s.contraction_ok, "kappa {}", s.kappa);
    }
}

#[test]
fn reduite_is_least_superharmonic_majorant() {
    // Simple random walk on a path absorbed at both ends.
    let p = StochasticMatrix::new(vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.5, 0.0],
        vec![0.0, 0.5, 0.0, 0.5],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .unwrap();
    let g = Potential::from_f64s(&[0.0, 2.0, 0.0, 3.0]);
    let r = reduite_fixed_point(&p, &g, 1e-12, 10_000).unwrap();
    // Concave majorant on the absorbed path: (0, 2, 2.5, 3).
    for (v, e) in r.iter().zip([0.0, 2.0, 2.5, 3.0]) {
        assert!((v.value() - e).abs() <= 1e-9, "{r:?}");
    }
}

#[test]
fn ergodic_chain_on_random_subshifts() {
    let mut r = rng(18);
    for _ in 0..15 {
        let (alphabet, depth) = (r.random_range(2..=3), r.random_range(1..=2));
        let g = random_sft(&mut r, alphabet, depth);
        let v = ergodic_value(&g, Sense::Min).unwrap();
        let lp = holonomic_lp(&g, Sense::Min).unwrap();
        assert!((v.value - lp.value).abs() <= 1e-7);
        assert!((lp.value - lp.dual_value).abs() <= 1e-7);
        let sub = subaction(&g, Sense::Min).unwrap();
        assert_eq!(sub.sigma_residual, 0.0);
        let st = stochastic_holonomic_lp(&g).unwrap();
        assert!(st.primal <= lp.value + 1e-9);
        assert!(st.gap <= 1e-7);
    }
}
