mod common;

use common::{grid, max_abs_diff, source};
use kerr_born::discretization::{sup_norm, DomainKind, GreenSolver};
use std::f64::consts::PI;

/// Manufactured Neumann solution: `apply_green(f) = -k^2 u` for `(Delta + k^2) u = f`.
fn manufactured_error(kind: DomainKind, res: usize, k: f64) -> f64 {
    let g = grid(kind, res);
    let solver = GreenSolver::new(g.clone(), k).unwrap();
    let (u, f): (Vec<f64>, Vec<f64>) = g
        .coords()
        .iter()
        .map(|p| match kind {
            DomainKind::Interval => {
                let c = (PI * p[0]).cos();
                (c, (k * k - PI * PI) * c)
            }
            DomainKind::Disk => {
                let r2 = p[0] * p[0] + p[1] * p[1];
                let (s, c) = (PI * r2).sin_cos();
                (c, k * k * c - 4.0 * PI * s - 4.0 * PI * PI * r2 * c)
            }
        })
        .unzip();
    let got = solver.apply_green(&f).unwrap();
    let expected: Vec<f64> = u.iter().map(|x| -k * k * x).collect();
    max_abs_diff(&got, &expected)
}

#[test]
fn interval_converges_at_second_order() {
    let e: Vec<f64> = [33, 65, 129].iter().map(|&n| manufactured_error(DomainKind::Interval, n, 1.3)).collect();
    for w in e.windows(2) {
        assert!(w[0] / w[1] > 3.5, "errors {e:?}");
    }
}

#[test]
fn disk_converges() {
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| manufactured_error(DomainKind::Disk, n, 1.5)).collect();
    assert!(e[2] < 0.05, "errors {e:?}");
    for w in e.windows(2) {
        assert!(w[0] / w[1] > 2.5, "errors {e:?}");
    }
}

#[test]
fn green_operator_is_self_adjoint_in_the_weighted_product() {
    for (kind, res) in [(DomainKind::Interval, 97), (DomainKind::Disk, 20)] {
        let g = grid(kind, res);
        let solver = GreenSolver::new(g.clone(), 1.7).unwrap();
        let a: Vec<f64> = g.coords().iter().map(|p| (3.0 * p[0]).sin() + p[1]).collect();
        let b: Vec<f64> = g.coords().iter().map(|p| p[0] * p[0] - (2.0 * p[1]).cos()).collect();
        let lhs = g.inner(&solver.apply_green(&a).unwrap(), &b);
        let rhs = g.inner(&a, &solver.apply_green(&b).unwrap());
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn mu_is_the_sup_norm_of_the_green_operator() {
    let g = grid(DomainKind::Interval, 81);
    let solver = GreenSolver::new(g.clone(), 1.0).unwrap();
    let mu = solver.estimate_mu();
    // the sign pattern of the maximizing row attains the bound
    let row = solver.kernel_row(mu.argmax_node);
    let v: Vec<f64> = row.iter().map(|x| -x.signum()).collect();
    let out = solver.apply_green(&v).unwrap();
    assert!((out[mu.argmax_node].abs() - mu.value).abs() < 1e-10 * mu.value);
    assert!(sup_norm(&out) <= mu.value * (1.0 + 1e-12));
}

#[test]
fn background_is_linear_in_scale() {
    let g = grid(DomainKind::Disk, 16);
    let solver = GreenSolver::new(g.clone(), 2.0).unwrap();
    let a = solver.background(&source([1.0, 0.0], 1.0, 2.0)).unwrap();
    let b = solver.background(&source([1.0, 0.0], 2.5, 2.0)).unwrap();
    let scaled: Vec<f64> = a.values.iter().map(|x| 2.5 * x).collect();
    assert!(max_abs_diff(&scaled, &b.values) < 1e-12 * sup_norm(&b.values));
    assert!(solver.background(&source([1.0, 0.0], 1.0, 3.0)).is_err());
}
