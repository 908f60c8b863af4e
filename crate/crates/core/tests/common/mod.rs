#![allow(dead_code)]

use std::sync::Arc;

use kerr_born::discretization::{build_grid, sup_norm, DomainKind, Grid, SourceSpec};
use kerr_born::forward::Susceptibility;

pub fn grid(kind: DomainKind, res: usize) -> Arc<Grid> {
    Arc::new(build_grid(kind, res).unwrap())
}

pub fn source(p: [f64; 2], scale: f64, k: f64) -> SourceSpec {
    SourceSpec {
        location: p,
        scale,
        wavenumber: k,
    }
}

/// Gaussian bump around `c`, zero on the boundary, unit sup norm.
pub fn bump(grid: &Grid, c: [f64; 2], width: f64) -> Vec<f64> {
    let mut v: Vec<f64> = grid
        .coords()
        .iter()
        .map(|p| (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / (2.0 * width * width)).exp())
        .collect();
    for &b in grid.boundary() {
        v[b] = 0.0;
    }
    let m = sup_norm(&v);
    v.iter().map(|x| x / m).collect()
}

pub fn medium(grid: &Grid, alpha: f64, beta: f64, c: [f64; 2], width: f64) -> Susceptibility {
    let b = bump(grid, c, width);
    Susceptibility::new(
        grid,
        b.iter().map(|x| alpha * x).collect(),
        b.iter().map(|x| beta * x).collect(),
    )
    .unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
