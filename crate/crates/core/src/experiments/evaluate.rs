use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::discretization::{snapshot::fmt_f64, DomainKind, Grid};
use crate::error::{check_len, Result};
use crate::forward::Susceptibility;
use crate::inverse::{Parameterization, Reconstruction};

pub const CROSS_SECTION_SAMPLES: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorComponents {
    pub rel_l2: f64,
    pub rel_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionSample {
    pub x: f64,
    pub y: f64,
    pub alpha_true: f64,
    pub beta_true: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub alpha: ErrorComponents,
    pub beta: ErrorComponents,
    /// Over the selected unknowns together.
    pub joint: ErrorComponents,
    /// Joint relative l2 error after each inverse term.
    pub trajectory: Vec<f64>,
    pub alpha_trajectory: Vec<f64>,
    pub beta_trajectory: Vec<f64>,
    pub cross_section: Vec<CrossSectionSample>,
}

/// `||rec - truth|| / ||truth||` in the grid-weighted l2 norm (absolute error
/// when the truth vanishes), and the same ratio in the sup norm.
fn components(grid: &Grid, rec: &[&[f64]], truth: &[&[f64]]) -> ErrorComponents {
    let (mut e2, mut t2, mut esup, mut tsup) = (0.0, 0.0, 0.0f64, 0.0f64);
    for (r, t) in rec.iter().zip(truth) {
        for i in 0..grid.len() {
            let d = r[i] - t[i];
            e2 += grid.weights()[i] * d * d;
            t2 += grid.weights()[i] * t[i] * t[i];
            esup = esup.max(d.abs());
            tsup = tsup.max(t[i].abs());
        }
    }
    let rel = |e: f64, t: f64| if t > 0.0 { e / t } else { e };
    ErrorComponents {
        rel_l2: rel(e2.sqrt(), t2.sqrt()),
        rel_sup: rel(esup, tsup),
    }
}

fn joint(grid: &Grid, param: &Parameterization, rec: &Susceptibility, truth: &Susceptibility) -> ErrorComponents {
    let sel = param.selection();
    let mut r: Vec<&[f64]> = Vec::new();
    let mut t: Vec<&[f64]> = Vec::new();
    if sel.has_alpha() {
        r.push(rec.alpha());
        t.push(truth.alpha());
    }
    if sel.has_beta() {
        r.push(rec.beta());
        t.push(truth.beta());
    }
    components(grid, &r, &t)
}

/// Errors against the scenario's medium sampled on the inversion grid.
pub fn evaluate(scenario: &Scenario, param: &Parameterization, recon: &Reconstruction) -> Result<ErrorReport> {
    let grid = param.grid();
    check_len(param.len(), recon.params.len())?;
    let truth = scenario.truth_on(grid)?;
    let rec = &recon.zeta;
    let mut trajectory = Vec::new();
    let mut at = Vec::new();
    let mut bt = Vec::new();
    for partial in &recon.partial_sums {
        let z = param.to_susceptibility(partial)?;
        trajectory.push(joint(grid, param, &z, &truth).rel_l2);
        at.push(components(grid, &[z.alpha()], &[truth.alpha()]).rel_l2);
        bt.push(components(grid, &[z.beta()], &[truth.beta()]).rel_l2);
    }
    Ok(ErrorReport {
        alpha: components(grid, &[rec.alpha()], &[truth.alpha()]),
        beta: components(grid, &[rec.beta()], &[truth.beta()]),
        joint: joint(grid, param, rec, &truth),
        trajectory,
        alpha_trajectory: at,
        beta_trajectory: bt,
        cross_section: cross_section(scenario, grid, rec),
    })
}

/// Samples along `y = 0`: every node on the interval, evenly spaced points
/// across the disk.
pub fn cross_section(scenario: &Scenario, grid: &Grid, rec: &Susceptibility) -> Vec<CrossSectionSample> {
    let points: Vec<[f64; 2]> = match grid.kind() {
        DomainKind::Interval => grid.coords().to_vec(),
        DomainKind::Disk => (0..CROSS_SECTION_SAMPLES)
            .map(|i| [-1.0 + 2.0 * i as f64 / (CROSS_SECTION_SAMPLES - 1) as f64, 0.0])
            .collect(),
    };
    let sel = scenario.unknowns;
    points
        .into_iter()
        .filter_map(|p| {
            let a = grid.interpolate(rec.alpha(), p)?;
            let b = grid.interpolate(rec.beta(), p)?;
            let m = scenario.contrast * scenario.medium.eval(p);
            let on_boundary = match grid.kind() {
                DomainKind::Interval => p[0] <= 0.0 || p[0] >= 1.0,
                DomainKind::Disk => false,
            };
            let m = if on_boundary { 0.0 } else { m };
            Some(CrossSectionSample {
                x: p[0],
                y: p[1],
                alpha_true: if sel.has_alpha() { m } else { 0.0 },
                beta_true: if sel.has_beta() { m } else { 0.0 },
                alpha: a,
                beta: b,
            })
        })
        .collect()
}

pub fn write_cross_section_csv<W: Write>(out: &mut W, samples: &[CrossSectionSample]) -> Result<()> {
    writeln!(out, "x,y,alpha_true,beta_true,alpha,beta")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(s.alpha_true),
            fmt_f64(s.beta_true),
            fmt_f64(s.alpha),
            fmt_f64(s.beta)
        )?;
    }
    Ok(())
}

/// `cell,node,x,y,alpha,beta,alpha_true,beta_true`, one row per unknown cell.
pub fn write_reconstruction_csv<W: Write>(
    out: &mut W,
    param: &Parameterization,
    rec: &Susceptibility,
    truth: Option<&Susceptibility>,
) -> Result<()> {
    writeln!(out, "cell,node,x,y,alpha,beta,alpha_true,beta_true")?;
    let grid = param.grid();
    for (c, &node) in param.cells().iter().enumerate() {
        let p = grid.coords()[node];
        let (ta, tb) = match truth {
            Some(t) => (fmt_f64(t.alpha()[node]), fmt_f64(t.beta()[node])),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{c},{node},{},{},{},{},{ta},{tb}",
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            fmt_f64(rec.alpha()[node]),
            fmt_f64(rec.beta()[node]),
        )?;
    }
    Ok(())
}
