use serde::{Deserialize, Serialize};

use super::banded::BandMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Disk,
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(DomainKind::Interval),
            "disk" => Ok(DomainKind::Disk),
            other => Err(Error::Config(format!("unknown domain kind '{other}'"))),
        }
    }
}

pub const INTERVAL_SCHEME: &str = "fd2-ghost-neumann-trapezoid";
pub const DISK_SCHEME: &str = "p1-fem-lumped-mass-ring-mesh";

/// Smallest accepted resolution for either domain.
pub const MIN_RESOLUTION: usize = 8;

/// Serializable summary of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub dimension: usize,
    pub domain: DomainKind,
    pub resolution: usize,
    pub scheme: String,
    pub h: f64,
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub bandwidth: usize,
    pub weight_sum: f64,
}

/// Discretized domain: nodes, lumped quadrature, boundary data and the
/// Neumann stiffness matrix.
///
/// On the interval the scheme is the second-order ghost-node finite
/// difference with trapezoid weights; on the disk it is piecewise-linear
/// finite elements on a ring mesh with lumped mass. Both give the same
/// algebraic form `(-K + k^2 W) u = -b` for the Helmholtz problem.
#[derive(Debug, Clone)]
pub struct Grid {
    kind: DomainKind,
    resolution: usize,
    coords: Vec<[f64; 2]>,
    weights: Vec<f64>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    is_boundary: Vec<bool>,
    normals: Vec<[f64; 2]>,
    boundary_weights: Vec<f64>,
    h: f64,
    stiffness: BandMatrix,
    triangles: Vec<[usize; 3]>,
}

/// Builds a grid for the interval `[0, 1]` (`resolution` nodes) or the unit
/// disk (`resolution / 2` rings).
pub fn build_grid(kind: DomainKind, resolution: usize) -> Result<Grid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Config(format!(
            "resolution {resolution} is below the minimum {MIN_RESOLUTION}"
        )));
    }
    Ok(match kind {
        DomainKind::Interval => interval(resolution),
        DomainKind::Disk => disk(resolution),
    })
}

fn interval(n: usize) -> Grid {
    let h = 1.0 / (n - 1) as f64;
    let coords: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * h, 0.0]).collect();
    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;
    let mut k = BandMatrix::zeros(n, 1);
    for e in 0..n - 1 {
        let c = 1.0 / h;
        k.add(e, e, c);
        k.add(e + 1, e + 1, c);
        k.add(e, e + 1, -c);
        k.add(e + 1, e, -c);
    }
    let boundary = vec![0, n - 1];
    let mut is_boundary = vec![false; n];
    is_boundary[0] = true;
    is_boundary[n - 1] = true;
    Grid {
        kind: DomainKind::Interval,
        resolution: n,
        coords,
        weights,
        interior: (1..n - 1).collect(),
        boundary,
        is_boundary,
        normals: vec![[-1.0, 0.0], [1.0, 0.0]],
        boundary_weights: vec![1.0, 1.0],
        h,
        stiffness: k,
        triangles: Vec::new(),
    }
}

fn ring_start(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        1 + 3 * j * (j - 1)
    }
}

fn ring_len(j: usize) -> usize {
    if j == 0 {
        1
    } else {
        6 * j
    }
}

fn disk(resolution: usize) -> Grid {
    let rings = resolution / 2;
    let h = 1.0 / rings as f64;
    let n = ring_start(rings + 1);
    let mut coords = Vec::with_capacity(n);
    coords.push([0.0, 0.0]);
    for j in 1..=rings {
        let r = j as f64 * h;
        let m = ring_len(j);
        for i in 0..m {
            let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            coords.push([r * t.cos(), r * t.sin()]);
        }
    }

    // Stitch consecutive rings by merging their angle-sorted node lists.
    let mut triangles = Vec::new();
    for i in 0..6 {
        triangles.push([0, ring_start(1) + i, ring_start(1) + (i + 1) % 6]);
    }
    for j in 1..rings {
        let (si, ni) = (ring_start(j), ring_len(j));
        let (so, no) = (ring_start(j + 1), ring_len(j + 1));
        let inner = |a: usize| si + a % ni;
        let outer = |b: usize| so + b % no;
        let (mut a, mut b) = (0usize, 0usize);
        while a < ni || b < no {
            let next_in = (a + 1) as f64 / ni as f64;
            let next_out = (b + 1) as f64 / no as f64;
            if a < ni && (b == no || next_in < next_out) {
                triangles.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            } else {
                triangles.push([inner(a), outer(b), outer(b + 1)]);
                b += 1;
            }
        }
    }

    let mut bw = 0;
    for t in &triangles {
        for p in 0..3 {
            for q in 0..3 {
                bw = bw.max(t[p].abs_diff(t[q]));
            }
        }
    }
    let mut stiffness = BandMatrix::zeros(n, bw);
    let mut weights = vec![0.0; n];
    for t in &triangles {
        let p = [coords[t[0]], coords[t[1]], coords[t[2]]];
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let area = 0.5 * area2.abs();
        // edge opposite vertex a, rotated, is proportional to grad phi_a
        let e: Vec<[f64; 2]> = (0..3)
            .map(|a| {
                let (u, v) = (p[(a + 1) % 3], p[(a + 2) % 3]);
                [v[0] - u[0], v[1] - u[1]]
            })
            .collect();
        for a in 0..3 {
            weights[t[a]] += area / 3.0;
            for b in 0..3 {
                let dot = e[a][0] * e[b][0] + e[a][1] * e[b][1];
                stiffness.add(t[a], t[b], dot / (4.0 * area));
            }
        }
    }

    let bstart = ring_start(rings);
    let nb = ring_len(rings);
    let boundary: Vec<usize> = (bstart..bstart + nb).collect();
    let mut is_boundary = vec![false; n];
    for &b in &boundary {
        is_boundary[b] = true;
    }
    let chord = 2.0 * (std::f64::consts::PI / nb as f64).sin();
    let normals = boundary.iter().map(|&b| coords[b]).collect();
    Grid {
        kind: DomainKind::Disk,
        resolution,
        interior: (0..bstart).collect(),
        boundary,
        is_boundary,
        normals,
        boundary_weights: vec![chord; nb],
        coords,
        weights,
        h,
        stiffness,
        triangles,
    }
}

impl Grid {
    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Disk => 2,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    /// Outward unit normals, one per entry of [`Grid::boundary`].
    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn stiffness(&self) -> &BandMatrix {
        &self.stiffness
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn scheme(&self) -> &'static str {
        match self.kind {
            DomainKind::Interval => INTERVAL_SCHEME,
            DomainKind::Disk => DISK_SCHEME,
        }
    }

    pub fn measure(&self) -> f64 {
        match self.kind {
            DomainKind::Interval => 1.0,
            DomainKind::Disk => std::f64::consts::PI,
        }
    }

    pub fn metadata(&self) -> GridMetadata {
        GridMetadata {
            dimension: self.dimension(),
            domain: self.kind,
            resolution: self.resolution,
            scheme: self.scheme().to_string(),
            h: self.h,
            nodes: self.len(),
            boundary_nodes: self.boundary.len(),
            bandwidth: self.stiffness.bandwidth(),
            weight_sum: self.weights.iter().sum(),
        }
    }

    /// Weighted inner product `sum_i w_i a_i b_i`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Weighted L2 norm.
    pub fn norm_l2(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Restriction of a node function to the boundary nodes.
    pub fn trace(&self, v: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&b| v[b]).collect()
    }

    /// Boundary position parameter: `x` on the interval, polar angle in
    /// `[0, 2pi)` on the disk.
    pub fn boundary_parameter(&self, slot: usize) -> f64 {
        let p = self.coords[self.boundary[slot]];
        match self.kind {
            DomainKind::Interval => p[0],
            DomainKind::Disk => p[1].atan2(p[0]).rem_euclid(2.0 * std::f64::consts::PI),
        }
    }

    /// Index into [`Grid::boundary`] of the boundary node closest to `point`.
    pub fn nearest_boundary_slot(&self, point: [f64; 2]) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (slot, &b) in self.boundary.iter().enumerate() {
            let p = self.coords[b];
            let d = (p[0] - point[0]).hypot(p[1] - point[1]);
            if d < dist {
                dist = d;
                best = slot;
            }
        }
        best
    }

    /// Interpolates boundary values given on `other`'s boundary onto this
    /// grid's boundary (linear in the boundary parameter, periodic on the disk).
    pub fn interpolate_boundary_from(&self, other: &Grid, values: &[f64]) -> Result<Vec<f64>> {
        if self.kind != other.kind {
            return Err(Error::Config("boundary interpolation across domain kinds".into()));
        }
        crate::error::check_len(other.boundary.len(), values.len())?;
        match self.kind {
            DomainKind::Interval => Ok(values.to_vec()),
            DomainKind::Disk => {
                let m = other.boundary.len();
                let step = 2.0 * std::f64::consts::PI / m as f64;
                Ok((0..self.boundary.len())
                    .map(|slot| {
                        let t = self.boundary_parameter(slot) / step;
                        let i0 = t.floor();
                        let f = t - i0;
                        let i0 = (i0 as usize) % m;
                        let i1 = (i0 + 1) % m;
                        (1.0 - f) * values[i0] + f * values[i1]
                    })
                    .collect())
            }
        }
    }

    /// Piecewise-linear interpolation of a node function at an arbitrary point.
    /// Returns `None` outside the discrete domain.
    pub fn interpolate(&self, v: &[f64], point: [f64; 2]) -> Option<f64> {
        match self.kind {
            DomainKind::Interval => {
                let x = point[0];
                if !(0.0..=1.0).contains(&x) {
                    return None;
                }
                let t = x / self.h;
                let i = (t.floor() as usize).min(self.len() - 2);
                let f = t - i as f64;
                Some((1.0 - f) * v[i] + f * v[i + 1])
            }
            DomainKind::Disk => {
                let r = point[0].hypot(point[1]);
                if r > 1.0 + 1e-12 {
                    return None;
                }
                let mut best: Option<(f64, f64)> = None;
                for t in &self.triangles {
                    let (l, val) = barycentric(&self.coords, t, v, point);
                    if l >= -1e-12 {
                        return Some(val);
                    }
                    if best.is_none_or(|(bl, _)| l > bl) {
                        best = Some((l, val));
                    }
                }
                // points in the thin sliver between the polygon and the circle
                best.filter(|(l, _)| *l > -0.05).map(|(_, v)| v)
            }
        }
    }
}

/// Minimum barycentric coordinate of `point` in triangle `t` and the
/// linear interpolant there.
fn barycentric(coords: &[[f64; 2]], t: &[usize; 3], v: &[f64], point: [f64; 2]) -> (f64, f64) {
    let [a, b, c] = [coords[t[0]], coords[t[1]], coords[t[2]]];
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((point[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (point[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (point[1] - a[1]) - (point[0] - a[0]) * (b[1] - a[1])) / det;
    let l0 = 1.0 - l1 - l2;
    let val = l0 * v[t[0]] + l1 * v[t[1]] + l2 * v[t[2]];
    (l0.min(l1).min(l2), val)
}
