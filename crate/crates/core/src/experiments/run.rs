use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{ForwardSolverKind, Scenario};
use crate::convergence::ConvergenceReport;
use crate::discretization::{build_grid, sup_norm, Grid, SourceSpec};
use crate::error::{Error, Result};
use crate::forward::{
    fixed_point_solve, newton_solve, FixedPointOptions, ForwardModel, Susceptibility,
};
use crate::inverse::{
    reconstruct, InverseOptions, InverseProblem, LinearizedMap, Parameterization, Reconstruction,
    RegularizedPseudoinverse, ScatteringData,
};

pub const NEWTON_MAX_ITER: usize = 50;
pub const CONVERGENCE_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverUsed {
    FixedPoint,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub solver_used: Vec<SolverUsed>,
    pub fixed_point_iterations: Vec<Option<usize>>,
    pub synthesis_nodes: usize,
    pub inversion_receivers: usize,
    pub noise_level: f64,
    pub noise_sigma: f64,
}

/// Forward solve for one source with the configured strategy.
pub fn solve_forward(
    scenario: &Scenario,
    model: &ForwardModel,
    zeta: &Susceptibility,
    source: usize,
) -> Result<(Vec<f64>, SolverUsed, Option<usize>)> {
    let solver = model.solver(source);
    let u0 = &model.background(source).values;
    let f = &scenario.forward;
    let tol = f.tol * sup_norm(u0).max(1.0);
    let fail = |reason: String| Error::ForwardFailure {
        source_index: source,
        wavenumber: solver.k(),
        scale: model.background(source).source.scale,
        reason,
    };
    let picard = || {
        fixed_point_solve(
            solver,
            zeta,
            u0,
            &FixedPointOptions {
                tol,
                max_iter: f.max_iter,
                gamma: f.gamma,
            },
        )
    };
    let newton = || newton_solve(solver, zeta, u0, 1e-13, NEWTON_MAX_ITER);
    match f.solver {
        ForwardSolverKind::FixedPoint => picard()
            .map(|(u, r)| (u, SolverUsed::FixedPoint, Some(r.iterations)))
            .map_err(|e| fail(e.to_string())),
        ForwardSolverKind::Newton => newton()
            .map(|(u, _)| (u, SolverUsed::Newton, None))
            .map_err(|e| fail(e.to_string())),
        ForwardSolverKind::Auto => match picard() {
            Ok((u, r)) => Ok((u, SolverUsed::FixedPoint, Some(r.iterations))),
            Err(Error::NonConvergence { .. }) => newton()
                .map(|(u, _)| (u, SolverUsed::Newton, None))
                .map_err(|e| fail(format!("fixed point diverged and Newton failed: {e}"))),
            Err(e) => Err(e),
        },
    }
}

/// Grids for a scenario, checked so that every source sits on a boundary node
/// of both.
pub fn build_grids(scenario: &Scenario) -> Result<(Arc<Grid>, Arc<Grid>)> {
    let syn = Arc::new(build_grid(scenario.domain, scenario.resolution.synthesis)?);
    let inv = Arc::new(build_grid(scenario.domain, scenario.resolution.inversion)?);
    for g in [&syn, &inv] {
        for loc in &scenario.sources.locations {
            let node = g.boundary()[g.nearest_boundary_slot(*loc)];
            let q = g.coords()[node];
            if (q[0] - loc[0]).hypot(q[1] - loc[1]) > 1e-9 {
                return Err(Error::Config(format!(
                    "source location ({}, {}) is not a boundary node at resolution {}",
                    loc[0],
                    loc[1],
                    g.resolution()
                )));
            }
        }
    }
    Ok((syn, inv))
}

/// Data on the synthesis grid, interpolated to the inversion grid's boundary,
/// plus optional Gaussian noise of standard deviation `noise * rms(phi)`.
pub fn synthesize(scenario: &Scenario) -> Result<(ScatteringData, SynthesisSummary)> {
    scenario.validate()?;
    let (syn, inv) = build_grids(scenario)?;
    let sources: Vec<SourceSpec> = scenario.sources.expand();
    let model = ForwardModel::new(syn.clone(), &sources)?;
    let zeta = scenario.truth_on(&syn)?;
    let rows: Vec<(Vec<f64>, SolverUsed, Option<usize>)> = (0..sources.len())
        .into_par_iter()
        .map(|s| -> Result<_> {
            let (u, used, it) = solve_forward(scenario, &model, &zeta, s)?;
            let u0 = &model.background(s).values;
            let diff: Vec<f64> = u.iter().zip(u0).map(|(a, b)| a - b).collect();
            let trace = syn.trace(&diff);
            Ok((inv.interpolate_boundary_from(&syn, &trace)?, used, it))
        })
        .collect::<Result<_>>()?;
    let receivers: Vec<[f64; 2]> = inv.boundary().iter().map(|&b| inv.coords()[b]).collect();
    let mut solver_used = Vec::with_capacity(rows.len());
    let mut iterations = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * receivers.len());
    for (row, used, it) in rows {
        values.extend(row);
        solver_used.push(used);
        iterations.push(it);
    }
    let mut data = ScatteringData::new(sources, receivers, values)?;
    let mut sigma = 0.0;
    if scenario.noise > 0.0 {
        sigma = scenario.noise * data.norm_l2();
        if sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            let dist = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
            for v in data.values_mut() {
                *v += dist.sample(&mut rng);
            }
        }
    }
    let summary = SynthesisSummary {
        solver_used,
        fixed_point_iterations: iterations,
        synthesis_nodes: syn.len(),
        inversion_receivers: inv.boundary().len(),
        noise_level: scenario.noise,
        noise_sigma: sigma,
    };
    Ok((data, summary))
}

/// Inversion-side objects for a scenario.
pub struct InversionSetup {
    pub grid: Arc<Grid>,
    pub model: ForwardModel,
    pub param: Parameterization,
    pub map: LinearizedMap,
    pub pinv: RegularizedPseudoinverse,
    pub convergence: ConvergenceReport,
}

impl InversionSetup {
    pub fn new(scenario: &Scenario, data: &ScatteringData) -> Result<Self> {
        scenario.validate()?;
        let (_, grid) = build_grids(scenario)?;
        let expected = scenario.sources.expand();
        if data.sources() != expected.as_slice() {
            return Err(Error::Config(
                "scattering data sources do not match the scenario".into(),
            ));
        }
        let receivers = data.receiver_nodes(&grid)?;
        let model = ForwardModel::new(grid.clone(), data.sources())?;
        let cells = scenario.region.select(&grid);
        let param = Parameterization::new(grid.clone(), cells, scenario.unknowns)?;
        let map = LinearizedMap::assemble(&model, &param, &receivers)?;
        let pinv = RegularizedPseudoinverse::new(map.matrix(), scenario.tau)?;
        let convergence = convergence_report(model.mu(), model.nu0(), Some(pinv.norm()))?;
        Ok(Self {
            grid,
            model,
            param,
            map,
            pinv,
            convergence,
        })
    }

    pub fn problem(&self) -> InverseProblem<'_> {
        InverseProblem {
            model: &self.model,
            param: &self.param,
            map: &self.map,
            pinv: &self.pinv,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        self.convergence.inverse_radius
    }

    pub fn reconstruct(&self, data: &ScatteringData, order: usize) -> Result<Reconstruction> {
        let opts = InverseOptions {
            order,
            ..Default::default()
        };
        reconstruct(self.problem(), data.values(), &opts, self.radius())
    }
}

/// Convergence report at [`CONVERGENCE_ORDER`], falling back to the longest
/// sequence that fits in floating point.
pub fn convergence_report(mu: f64, nu0: f64, pinv_norm: Option<f64>) -> Result<ConvergenceReport> {
    match ConvergenceReport::build(mu, nu0, CONVERGENCE_ORDER, pinv_norm) {
        Err(Error::Overflow { largest_safe }) => ConvergenceReport::build(mu, nu0, largest_safe, pinv_norm),
        other => other,
    }
}
