//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any fail.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use kerr_born::convergence::{
    estimate_growth, inverse_radius, nu_sequence, nu_sequence_with, verify_generating_polynomial,
    ConvergenceReport,
};
use kerr_born::discretization::{build_grid, sup_norm, DomainKind, GreenSolver, Grid, SourceSpec};
use kerr_born::experiments::{
    evaluate, scenario_1d, scenario_2d, synthesize, DiskMedium, InversionSetup, Medium, Region,
    Scenario,
};
use kerr_born::forward::{
    born_partial_sum, check_contraction_conditions, compute_k, fixed_point_solve, triple_count, triples,
    FixedPointOptions, ForwardModel, Susceptibility, TermCache,
};
use kerr_born::inverse::{compositions, inverse_compositions, reconstruct, InverseOptions, UnknownSelection};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn interval(n: usize) -> Arc<Grid> {
    Arc::new(build_grid(DomainKind::Interval, n).unwrap())
}

fn source(x: f64, scale: f64, k: f64) -> SourceSpec {
    SourceSpec {
        location: [x, 0.0],
        scale,
        wavenumber: k,
    }
}

/// Smooth interior bump of unit sup norm.
fn bump(grid: &Grid, center: f64, width: f64) -> Vec<f64> {
    let mut v: Vec<f64> = grid
        .coords()
        .iter()
        .map(|p| (-(p[0] - center).powi(2) / (2.0 * width * width)).exp())
        .collect();
    for &b in grid.boundary() {
        v[b] = 0.0;
    }
    let m = sup_norm(&v);
    v.iter_mut().for_each(|x| *x /= m);
    v
}

/// Sum of a few random bumps, scaled to sup norm `amp` in each coefficient.
fn random_medium(grid: &Grid, rng: &mut ChaCha8Rng, amp: f64) -> Susceptibility {
    let mut field = || {
        let mut v = vec![0.0; grid.len()];
        for _ in 0..3 {
            let c = rng.random_range(0.15..0.85);
            let w = rng.random_range(0.03..0.15);
            let s = rng.random_range(-1.0..1.0);
            for (x, b) in v.iter_mut().zip(bump(grid, c, w)) {
                *x += s * b;
            }
        }
        let m = sup_norm(&v);
        v.iter().map(|x| amp * x / m).collect::<Vec<_>>()
    };
    let a = field();
    let b = field();
    Susceptibility::new(grid, a, b).unwrap()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / sup_norm(a).max(sup_norm(b)).max(f64::MIN_POSITIVE)
}

fn green_oracle() -> Outcome {
    let k = 1.0;
    let grid = interval(512);
    let solver = GreenSolver::new(grid.clone(), k).unwrap();
    let f = |y: f64| (std::f64::consts::PI * y).cos() + y * y;
    let v: Vec<f64> = grid.coords().iter().map(|p| f(p[0])).collect();
    let got = solver.apply_green(&v).unwrap();
    let kernel = |x: f64, y: f64| {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        (k * lo).cos() * (k * (1.0 - hi)).cos() / (k * k.sin())
    };
    // composite Simpson on each side of the kink
    let simpson = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| {
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mut err = 0.0f64;
    for (i, p) in grid.coords().iter().enumerate() {
        let x = p[0];
        let g = |y: f64| kernel(x, y) * f(y);
        let exact = -k * k * (simpson(0.0, x, &g) + simpson(x, 1.0, &g));
        err = err.max((got[i] - exact).abs());
    }
    ensure(err <= 1e-6, format!("sup error {err:.3e} (limit 1e-6)"))
}

fn forward_equivalence() -> Outcome {
    let grid = interval(201);
    let model = ForwardModel::new(grid.clone(), &[source(0.0, 1.0, 1.0)]).unwrap();
    let report = ConvergenceReport::build(model.mu(), model.nu0(), 64, None).unwrap();
    let t = 0.5 * report.forward_radius;
    let prof = bump(&grid, 0.45, 0.08);
    let zeta = Susceptibility::new(&grid, prof.iter().map(|x| t * x).collect(), prof.iter().map(|x| t * x).collect())
        .unwrap();
    let u0 = &model.background(0).values;
    let u0n = sup_norm(u0);
    let opts = FixedPointOptions {
        tol: 1e-13 * u0n,
        ..Default::default()
    };
    let (u, _) = fixed_point_solve(model.solver(0), &zeta, u0, &opts).map_err(|e| e.to_string())?;
    let (u8, norms) =
        born_partial_sum(model.context(0), &zeta, 8, Some(&u), &mut TermCache::new(true)).unwrap();
    let diff = u8.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1].sup_norm / w[0].sup_norm).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    ensure(
        diff <= 1e-6 * u0n && max_ratio < 1.0,
        format!(
            "|U_8 - u_fp| = {diff:.3e} (limit {:.3e}), largest term ratio {max_ratio:.3e}, ||zeta|| = {t:.3e}",
            1e-6 * u0n
        ),
    )
}

fn order_extraction() -> Outcome {
    let grid = interval(161);
    let model = ForwardModel::new(grid.clone(), &[source(1.0, 1.5, 1.1)]).unwrap();
    let ctx = model.context(0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zeta = random_medium(&grid, &mut rng, 0.3);
    let degree = 6;
    let ts: Vec<f64> = (0..=degree)
        .map(|j| (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * (degree + 1)) as f64).cos())
        .collect();
    let samples: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| {
            born_partial_sum(ctx, &zeta.scaled(t), degree, None, &mut TermCache::new(true))
                .unwrap()
                .0
        })
        .collect();
    let vander = DMatrix::from_fn(degree + 1, degree + 1, |i, j| ts[i].powi(j as i32));
    let lu = vander.lu();
    let mut worst = 0.0f64;
    let coeffs: Vec<Vec<f64>> = {
        let mut c = vec![vec![0.0; grid.len()]; degree + 1];
        for node in 0..grid.len() {
            let rhs = DVector::from_fn(degree + 1, |i, _| samples[i][node]);
            let sol = lu.solve(&rhs).ok_or("singular Vandermonde system")?;
            for n in 0..=degree {
                c[n][node] = sol[n];
            }
        }
        c
    };
    for n in 1..=4 {
        let direct = compute_k(ctx, n, &vec![zeta.clone(); n]).unwrap();
        worst = worst.max(rel_diff(&direct, &coeffs[n]));
    }
    ensure(worst <= 1e-8, format!("largest relative mismatch over n <= 4: {worst:.3e}"))
}

fn multilinearity() -> Outcome {
    let grid = interval(121);
    let model = ForwardModel::new(grid.clone(), &[source(0.0, 1.0, 0.9)]).unwrap();
    let ctx = model.context(0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let args: Vec<Susceptibility> = (0..n).map(|_| random_medium(&grid, &mut rng, 0.5)).collect();
        let base = compute_k(ctx, n, &args).unwrap();
        for slot in 0..n {
            let other = random_medium(&grid, &mut rng, 0.5);
            let c = rng.random_range(-3.0..3.0);
            let mut sum_args = args.clone();
            sum_args[slot] = args[slot].add(&other).unwrap();
            let mut other_args = args.clone();
            other_args[slot] = other;
            let lhs = compute_k(ctx, n, &sum_args).unwrap();
            let k_other = compute_k(ctx, n, &other_args).unwrap();
            let rhs: Vec<f64> = base.iter().zip(&k_other).map(|(a, b)| a + b).collect();
            worst = worst.max(rel_diff(&lhs, &rhs));
            let mut scaled_args = args.clone();
            scaled_args[slot] = args[slot].scaled(c);
            let lhs = compute_k(ctx, n, &scaled_args).unwrap();
            let rhs: Vec<f64> = base.iter().map(|x| c * x).collect();
            worst = worst.max(rel_diff(&lhs, &rhs));
        }
    }
    ensure(worst <= 1e-10, format!("largest relative defect {worst:.3e}"))
}

fn combinatorics() -> Outcome {
    for n in 0..=20 {
        let expected = n * (n + 1) / 2 + (n + 1);
        let t = triples(n);
        let distinct: BTreeSet<_> = t.iter().collect();
        if triple_count(n) != expected || t.len() != expected || distinct.len() != expected {
            return Err(format!("triple count mismatch at n = {n}"));
        }
        if t.iter().any(|&(a, b, c)| a + b + c != n) {
            return Err(format!("triple with wrong sum at n = {n}"));
        }
    }
    for m in 1usize..=6 {
        let mut brute_all = BTreeSet::new();
        for n in 1..=m {
            let mut brute = BTreeSet::new();
            let total = m.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let parts: Vec<usize> = (0..n)
                    .map(|_| {
                        let p = c % m + 1;
                        c /= m;
                        p
                    })
                    .collect();
                if parts.iter().sum::<usize>() == m {
                    brute.insert(parts);
                }
            }
            let got: BTreeSet<_> = compositions(m, n).into_iter().collect();
            if got != brute || compositions(m, n).len() != brute.len() {
                return Err(format!("compositions({m}, {n}) differ from brute force"));
            }
            if n >= 2 {
                brute_all.extend(brute);
            }
        }
        let got: BTreeSet<_> = inverse_compositions(m).into_iter().collect();
        if got != brute_all {
            return Err(format!("inverse compositions differ at m = {m}"));
        }
    }
    Ok("triples n <= 20 and compositions m <= 6 match".into())
}

fn generating_function() -> Outcome {
    let seq = nu_sequence(1.0, 64).map_err(|e| e.to_string())?;
    let head = &seq.values()[..3];
    let exact = nu_sequence_with(1.0, 20, 20).map_err(|e| e.to_string())?;
    let defect = verify_generating_polynomial(&exact).map_err(|e| e.to_string())?;
    let growth = estimate_growth(&seq).map_err(|e| e.to_string())?;
    let mut bound_ok = true;
    let mut power = 1.0f64;
    for &v in seq.values() {
        bound_ok &= v <= growth.nu * power * (1.0 + 1e-12);
        power *= growth.k;
    }
    ensure(
        head == [1.0, 2.0, 8.0]
            && defect.exact
            && defect.max_abs == 0.0
            && defect.checked_through >= 20
            && bound_ok,
        format!(
            "head {head:?}, exact defect {} through {}, K = {:.4}, nu = {:.4}, bound over 65 terms {}",
            defect.max_abs,
            defect.checked_through,
            growth.k,
            growth.nu,
            if bound_ok { "holds" } else { "violated" }
        ),
    )
}

fn bound_shadow() -> Outcome {
    let grid = interval(161);
    let model = ForwardModel::new(grid.clone(), &[source(0.0, 1.0, 1.0)]).unwrap();
    let report = ConvergenceReport::build(model.mu(), model.nu0(), 64, None).unwrap();
    let (k, nu, mu) = (report.growth_rate, report.growth_prefactor, report.mu);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let amp = rng.random_range(0.05..0.5) / (k * mu);
        let zeta = random_medium(&grid, &mut rng, amp);
        let z = zeta.sup_norm();
        let (_, norms) = born_partial_sum(model.context(0), &zeta, 6, None, &mut TermCache::new(true)).unwrap();
        for t in &norms {
            let bound = 10.0 * nu * (k * mu * z).powi(t.order as i32);
            worst = worst.max(t.data_norm / bound);
        }
    }
    ensure(worst <= 1.0, format!("largest data norm / bound = {worst:.3e} over 3 media, n <= 6"))
}

fn fixed_point_conditions() -> Outcome {
    let grid = interval(161);
    let prof = bump(&grid, 0.5, 0.1);
    let mut notes = Vec::new();
    for (i, (s, k)) in [(1.0, 1.0), (2.0, 0.9), (0.5, 1.1)].into_iter().enumerate() {
        let model = ForwardModel::new(grid.clone(), &[source((i % 2) as f64, s, k)]).unwrap();
        let u0 = &model.background(0).values;
        let mu = model.mu();
        let probe = Susceptibility::zeros(grid.len());
        let c = check_contraction_conditions(&probe, sup_norm(u0), mu, 1.0).unwrap();
        let a: Vec<f64> = prof.iter().map(|x| 0.9 * c.general_alpha_bound * x).collect();
        let b: Vec<f64> = prof.iter().map(|x| 0.9 * c.general_beta_bound * x).collect();
        let zeta = Susceptibility::new(&grid, a, b).unwrap();
        let cond = check_contraction_conditions(&zeta, sup_norm(u0), mu, 1.0).unwrap();
        let (_, rep) = fixed_point_solve(model.solver(0), &zeta, u0, &FixedPointOptions::default())
            .map_err(|e| format!("90% medium did not converge: {e}"))?;
        if !(cond.general_criterion && rep.converged && rep.contraction_quotient < 1.0) {
            return Err(format!("90% medium: criterion {} q = {}", cond.general_criterion, rep.contraction_quotient));
        }
        notes.push(format!("{:.3}", rep.contraction_quotient));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut in_bound, mut out_bound) = ([0usize; 2], [0usize; 2]);
    for which in 0..2 {
        for _ in 0..10 {
            let k = rng.random_range(0.8..1.2);
            let s = rng.random_range(0.25..3.0);
            let model = ForwardModel::new(grid.clone(), &[source(0.0, s, k)]).unwrap();
            let u0 = &model.background(0).values;
            let mu = model.mu();
            let u0n = sup_norm(u0);
            let probe = check_contraction_conditions(&Susceptibility::zeros(grid.len()), u0n, mu, 1.0).unwrap();
            let factor = rng.random_range(0.1..1.6);
            let shape = bump(&grid, rng.random_range(0.2..0.8), rng.random_range(0.05..0.2));
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let zero = vec![0.0; grid.len()];
            let zeta = if which == 0 {
                let b = shape.iter().map(|x| sign * factor * probe.cubic_beta_bound * x).collect();
                Susceptibility::new(&grid, zero, b).unwrap()
            } else {
                let a = shape.iter().map(|x| sign * factor * probe.linear_alpha_bound * x).collect();
                Susceptibility::new(&grid, a, zero).unwrap()
            };
            let cond = check_contraction_conditions(&zeta, u0n, mu, 1.0).unwrap();
            let claimed = if which == 0 { cond.alpha_zero_criterion } else { cond.beta_zero_criterion };
            if claimed {
                in_bound[which] += 1;
                let ok = fixed_point_solve(model.solver(0), &zeta, u0, &FixedPointOptions::default()).is_ok();
                if !ok {
                    return Err(format!("in-bound case (factor {factor:.3}) did not converge"));
                }
            } else {
                out_bound[which] += 1;
            }
        }
    }
    ensure(
        in_bound.iter().all(|&c| c > 0),
        format!(
            "q at 90% bounds: [{}]; alpha=0 cases in/out of bound {}/{}, beta=0 cases {}/{}, all in-bound converged",
            notes.join(", "),
            in_bound[0],
            out_bound[0],
            in_bound[1],
            out_bound[1]
        ),
    )
}

fn round_trip(s: &Scenario) -> Result<kerr_born::experiments::ErrorReport, String> {
    let (data, _) = synthesize(s).map_err(|e| e.to_string())?;
    let setup = InversionSetup::new(s, &data).map_err(|e| e.to_string())?;
    let rec = setup.reconstruct(&data, s.order).map_err(|e| e.to_string())?;
    evaluate(s, &setup.param, &rec).map_err(|e| e.to_string())
}

fn low_amplitude_1d() -> Scenario {
    let mut s = scenario_1d();
    if let Medium::Gaussian { amplitude, .. } = &mut s.medium {
        *amplitude = 0.05;
    }
    s.order = 4;
    s
}

fn inverse_round_trip_1d() -> Outcome {
    let rep = round_trip(&low_amplitude_1d())?;
    let tr = &rep.trajectory;
    let last = *tr.last().unwrap();
    ensure(
        tr.len() == 4 && last <= 0.2 && tr[1] <= tr[0] && tr[2] <= tr[1],
        format!("error trajectory {:?}", tr.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()),
    )
}

fn linear_reduction() -> Outcome {
    let mut s = scenario_1d();
    let h = 1.0 / (s.resolution.inversion - 1) as f64;
    s.name = "single-cell".into();
    s.medium = Medium::Hat {
        center: [0.5, 0.0],
        half_width: h,
        value: 0.01,
    };
    s.unknowns = UnknownSelection::AlphaOnly;
    s.region = Region::Interval {
        lo: 0.5 - h / 2.0,
        hi: 0.5 + h / 2.0,
    };
    s.order = 1;
    let rep = round_trip(&s)?;
    ensure(
        rep.joint.rel_l2 <= 0.1,
        format!("one-term relative l2 error {:.4e}", rep.joint.rel_l2),
    )
}

fn contrast_degradation() -> Outcome {
    let err = |c: f64| -> Result<f64, String> {
        let s = scenario_2d(c, DiskMedium::Disk, UnknownSelection::AlphaOnly).map_err(|e| e.to_string())?;
        Ok(round_trip(&s)?.joint.rel_l2)
    };
    let (e1, e16) = (err(1.0)?, err(16.0)?);
    ensure(e16 > e1, format!("relative l2 error: contrast 1 -> {e1:.4}, contrast 16 -> {e16:.4}"))
}

fn radius_plumbing() -> Outcome {
    let (mu, k, nu) = (0.7, 3.0, 0.5);
    let (r, c) = inverse_radius(mu, k, nu, 0.1).map_err(|e| e.to_string())?;
    let expected = (65f64.sqrt() - 8.0) / (2.0 * k * mu);
    let rel = (r - expected).abs() / expected;
    if c != 2.0 || rel > 1e-12 {
        return Err(format!("C = {c}, r = {r:e}, expected {expected:e} (rel {rel:.2e})"));
    }
    let s = low_amplitude_1d();
    let (data, _) = synthesize(&s).map_err(|e| e.to_string())?;
    let setup = InversionSetup::new(&s, &data).map_err(|e| e.to_string())?;
    let opts = InverseOptions {
        order: 1,
        ..Default::default()
    };
    let run = |radius: Option<f64>| reconstruct(setup.problem(), data.values(), &opts, radius).unwrap();
    let norm = run(None).diagnostics.first_term_norm;
    let cases = [
        (None, false),
        (Some(norm * (1.0 + 1e-9)), false),
        (Some(norm * 2.0), false),
        (Some(norm), true),
        (Some(norm * (1.0 - 1e-9)), true),
        (Some(norm * 0.5), true),
    ];
    for (radius, expect) in cases {
        let got = run(radius).diagnostics.radius_warning;
        if got != expect {
            return Err(format!("warning {got} for radius {radius:?}, first term norm {norm:e}"));
        }
    }
    Ok(format!("r(C = 2) relative error {rel:.1e}; warning matches the inequality on {} cases", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("green-oracle", green_oracle),
        ("forward-equivalence", forward_equivalence),
        ("order-extraction", order_extraction),
        ("multilinearity", multilinearity),
        ("combinatorics", combinatorics),
        ("generating-function", generating_function),
        ("bound-shadow", bound_shadow),
        ("fixed-point-conditions", fixed_point_conditions),
        ("inverse-round-trip-1d", inverse_round_trip_1d),
        ("linear-reduction", linear_reduction),
        ("contrast-degradation-2d", contrast_degradation),
        ("radius-plumbing", radius_plumbing),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.2}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
