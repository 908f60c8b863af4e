mod common;

use common::{grid, max_abs_diff, medium, source};
use kerr_born::discretization::{sup_norm, DomainKind};
use kerr_born::forward::{
    born_partial_sum, compute_k, fixed_point_solve, newton_solve, FixedPointOptions, ForwardModel, TermCache,
};

/// Taylor coefficients of `u(t)` solving `u = u0 + G(t alpha u + t beta u^3)`,
/// computed order by order from the power series directly.
fn taylor(model: &ForwardModel, zeta: &kerr_born::forward::Susceptibility, order: usize) -> Vec<Vec<f64>> {
    let solver = model.solver(0);
    let mut c = vec![model.background(0).values.clone()];
    for n in 1..=order {
        let prev = &c[n - 1];
        let mut src: Vec<f64> = prev.iter().zip(zeta.alpha()).map(|(u, a)| a * u).collect();
        for i in 0..n {
            for j in 0..(n - i) {
                let l = n - 1 - i - j;
                for (node, s) in src.iter_mut().enumerate() {
                    *s += zeta.beta()[node] * c[i][node] * c[j][node] * c[l][node];
                }
            }
        }
        c.push(solver.apply_green(&src).unwrap());
    }
    c
}

#[test]
fn terms_match_power_series_coefficients() {
    for (kind, res, p, k) in [(DomainKind::Interval, 121, [0.0, 0.0], 1.0), (DomainKind::Disk, 16, [1.0, 0.0], 2.0)] {
        let g = grid(kind, res);
        let model = ForwardModel::new(g.clone(), &[source(p, 1.2, k)]).unwrap();
        let zeta = medium(&g, 0.4, -0.3, [0.3, 0.1], 0.2);
        let coeffs = taylor(&model, &zeta, 5);
        for n in 1..=5 {
            let kn = compute_k(model.context(0), n, &vec![zeta.clone(); n]).unwrap();
            let err = max_abs_diff(&kn, &coeffs[n]) / sup_norm(&coeffs[n]);
            assert!(err < 1e-11, "{kind:?} n = {n}: {err:e}");
        }
    }
}

#[test]
fn born_sum_approaches_fixed_point() {
    let g = grid(DomainKind::Interval, 101);
    let model = ForwardModel::new(g.clone(), &[source([1.0, 0.0], 0.8, 1.1)]).unwrap();
    let zeta = medium(&g, 0.15, 0.15, [0.5, 0.0], 0.1);
    let u0 = &model.background(0).values;
    let (u, rep) = fixed_point_solve(model.solver(0), &zeta, u0, &FixedPointOptions::default()).unwrap();
    assert!(rep.converged && rep.contraction_quotient < 1.0);
    let (_, norms) = born_partial_sum(model.context(0), &zeta, 10, Some(&u), &mut TermCache::new(true)).unwrap();
    let res: Vec<f64> = norms.iter().map(|t| t.residual.unwrap()).collect();
    for w in res.windows(2) {
        assert!(w[1] < w[0], "residuals {res:?}");
    }
    assert!(res[9] < 1e-8 * sup_norm(u0));
    let (un, _) = newton_solve(model.solver(0), &zeta, u0, 1e-13, 50).unwrap();
    assert!(max_abs_diff(&u, &un) < 1e-10 * sup_norm(u0));
}

#[test]
fn cache_changes_nothing_but_the_work() {
    let g = grid(DomainKind::Disk, 12);
    let model = ForwardModel::new(g.clone(), &[source([1.0, 0.0], 1.0, 2.0)]).unwrap();
    let zeta = medium(&g, 0.2, 0.1, [0.0, 0.0], 0.3);
    let mut on = TermCache::new(true);
    let mut off = TermCache::new(false);
    let (a, _) = born_partial_sum(model.context(0), &zeta, 6, None, &mut on).unwrap();
    let (b, _) = born_partial_sum(model.context(0), &zeta, 6, None, &mut off).unwrap();
    assert_eq!(a, b);
    assert!(on.hits() > 0);
    assert_eq!(off.hits(), 0);
}

#[test]
fn zero_medium_leaves_background_unchanged() {
    let g = grid(DomainKind::Interval, 41);
    let model = ForwardModel::new(g.clone(), &[source([0.0, 0.0], 1.0, 0.9)]).unwrap();
    let zeta = kerr_born::forward::Susceptibility::zeros(g.len());
    let (u, norms) = born_partial_sum(model.context(0), &zeta, 4, None, &mut TermCache::new(true)).unwrap();
    assert_eq!(u, model.background(0).values);
    assert!(norms.iter().all(|t| t.sup_norm == 0.0));
}
