//! Forward problem: the operators `A` and `B`, the fixed-point map `T`,
//! the multilinear Born terms `K_n` and their partial sums.

mod fixed_point;
mod series;

use std::sync::Arc;

pub use fixed_point::{
    check_contraction_conditions, fixed_point_solve, newton_solve, ConditionReport,
    FixedPointOptions, FixedPointReport,
};
pub use series::{
    born_partial_sum, compute_k, compute_k_with, triple_count, triples, write_term_norms_csv,
    ArgPool, ForwardTermCache, TermCache, TermContext, TermNorm,
};

use crate::discretization::{sup_norm, BackgroundField, GreenSolver, Grid, SourceSpec};
use crate::error::{check_len, Error, Result};

/// Medium coefficients `(alpha, beta)` as node functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Susceptibility {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Susceptibility {
    /// Validates length, finiteness and that both coefficients vanish on the
    /// boundary nodes of `grid`.
    pub fn new(grid: &Grid, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        check_len(grid.len(), alpha.len())?;
        check_len(grid.len(), beta.len())?;
        if alpha.iter().chain(&beta).any(|x| !x.is_finite()) {
            return Err(Error::Domain("susceptibility must be finite".into()));
        }
        for &b in grid.boundary() {
            if alpha[b] != 0.0 || beta[b] != 0.0 {
                return Err(Error::Domain(format!(
                    "susceptibility must vanish on boundary node {b}"
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha_norm(&self) -> f64 {
        sup_norm(&self.alpha)
    }

    pub fn beta_norm(&self) -> f64 {
        sup_norm(&self.beta)
    }

    /// `max(||alpha||_inf, ||beta||_inf)`.
    pub fn sup_norm(&self) -> f64 {
        self.alpha_norm().max(self.beta_norm())
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|&x| x == 0.0)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            alpha: self.alpha.iter().map(|x| t * x).collect(),
            beta: self.beta.iter().map(|x| t * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self {
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b).collect(),
            beta: self.beta.iter().zip(&other.beta).map(|(a, b)| a + b).collect(),
        })
    }
}

/// `A(v; alpha) = -k^2 int G(., y) alpha(y) v(y) dy`.
pub fn op_a(solver: &GreenSolver, v: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    check_len(v.len(), alpha.len())?;
    let prod: Vec<f64> = v.iter().zip(alpha).map(|(a, b)| a * b).collect();
    solver.apply_green(&prod)
}

/// `B(v; beta)`: same kernel as [`op_a`]; `v` is the already-formed triple product.
pub fn op_b(solver: &GreenSolver, v: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    op_a(solver, v, beta)
}

/// `T(v) = u0 + A(v; alpha) + B(v^3; beta)`.
pub fn apply_t(
    solver: &GreenSolver,
    v: &[f64],
    zeta: &Susceptibility,
    u0: &[f64],
) -> Result<Vec<f64>> {
    let n = solver.grid().len();
    check_len(n, v.len())?;
    check_len(n, u0.len())?;
    check_len(n, zeta.len())?;
    let src: Vec<f64> = v
        .iter()
        .zip(zeta.alpha.iter().zip(&zeta.beta))
        .map(|(x, (a, b))| a * x + b * x * x * x)
        .collect();
    let mut out = solver.apply_green(&src)?;
    for (o, u) in out.iter_mut().zip(u0) {
        *o += u;
    }
    Ok(out)
}

/// Background solvers and fields for a set of sources on one grid. One
/// factorization is shared by all sources at the same wavenumber.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    grid: Arc<Grid>,
    solvers: Vec<Arc<GreenSolver>>,
    solver_of: Vec<usize>,
    backgrounds: Vec<BackgroundField>,
}

impl ForwardModel {
    pub fn new(grid: Arc<Grid>, sources: &[SourceSpec]) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Config("at least one source is required".into()));
        }
        let mut solvers: Vec<Arc<GreenSolver>> = Vec::new();
        let mut solver_of = Vec::with_capacity(sources.len());
        let mut backgrounds = Vec::with_capacity(sources.len());
        for src in sources {
            let idx = match solvers.iter().position(|s| s.k() == src.wavenumber) {
                Some(i) => i,
                None => {
                    solvers.push(Arc::new(GreenSolver::new(grid.clone(), src.wavenumber)?));
                    solvers.len() - 1
                }
            };
            solver_of.push(idx);
            backgrounds.push(solvers[idx].background(src)?);
        }
        Ok(Self {
            grid,
            solvers,
            solver_of,
            backgrounds,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn source_count(&self) -> usize {
        self.backgrounds.len()
    }

    pub fn solvers(&self) -> &[Arc<GreenSolver>] {
        &self.solvers
    }

    /// Index into [`Self::solvers`] used by `source`.
    pub fn solver_index(&self, source: usize) -> usize {
        self.solver_of[source]
    }

    pub fn solver(&self, source: usize) -> &GreenSolver {
        &self.solvers[self.solver_of[source]]
    }

    pub fn background(&self, source: usize) -> &BackgroundField {
        &self.backgrounds[source]
    }

    pub fn backgrounds(&self) -> &[BackgroundField] {
        &self.backgrounds
    }

    pub fn context(&self, source: usize) -> TermContext<'_> {
        TermContext {
            solver: self.solver(source),
            u0: &self.backgrounds[source].values,
        }
    }

    /// Largest `mu` over the distinct wavenumbers.
    pub fn mu(&self) -> f64 {
        self.solvers
            .iter()
            .map(|s| s.estimate_mu().value)
            .fold(0.0, f64::max)
    }

    /// Largest `||u0||_inf` over sources.
    pub fn nu0(&self) -> f64 {
        self.backgrounds
            .iter()
            .map(|b| b.sup_norm())
            .fold(0.0, f64::max)
    }
}
