use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::Grid;
use crate::error::{check_len, Error, Result};
use crate::forward::{compute_k, ForwardModel, Susceptibility};

/// Which coefficients are unknown. The others are known to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownSelection {
    AlphaOnly,
    BetaOnly,
    Both,
}

impl std::str::FromStr for UnknownSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha-only" | "alpha" => Ok(Self::AlphaOnly),
            "beta-only" | "beta" => Ok(Self::BetaOnly),
            "both" => Ok(Self::Both),
            other => Err(Error::Config(format!(
                "unknown selector {other:?}; expected alpha-only, beta-only or both"
            ))),
        }
    }
}

impl UnknownSelection {
    pub fn has_alpha(self) -> bool {
        !matches!(self, Self::BetaOnly)
    }

    pub fn has_beta(self) -> bool {
        !matches!(self, Self::AlphaOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub block: Block,
    pub node: usize,
}

/// Nodal values of the unknown coefficients on a set of interior cells,
/// ordered `[alpha cells | beta cells]`.
#[derive(Debug, Clone)]
pub struct Parameterization {
    grid: Arc<Grid>,
    cells: Vec<usize>,
    selection: UnknownSelection,
}

impl Parameterization {
    pub fn new(grid: Arc<Grid>, cells: Vec<usize>, selection: UnknownSelection) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Config("parameterization has no cells".into()));
        }
        for &c in &cells {
            if c >= grid.len() || grid.is_boundary(c) {
                return Err(Error::Config(format!("cell {c} is not an interior node")));
            }
        }
        Ok(Self {
            grid,
            cells,
            selection,
        })
    }

    /// Every interior node.
    pub fn interior(grid: Arc<Grid>, selection: UnknownSelection) -> Result<Self> {
        let cells = grid.interior().to_vec();
        Self::new(grid, cells, selection)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn selection(&self) -> UnknownSelection {
        self.selection
    }

    pub fn columns(&self) -> Vec<Column> {
        let mut out = Vec::with_capacity(self.len());
        if self.selection.has_alpha() {
            out.extend(self.cells.iter().map(|&node| Column { block: Block::Alpha, node }));
        }
        if self.selection.has_beta() {
            out.extend(self.cells.iter().map(|&node| Column { block: Block::Beta, node }));
        }
        out
    }

    pub fn len(&self) -> usize {
        let blocks = if self.selection == UnknownSelection::Both { 2 } else { 1 };
        blocks * self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn to_susceptibility(&self, params: &[f64]) -> Result<Susceptibility> {
        check_len(self.len(), params.len())?;
        let n = self.grid.len();
        let (mut alpha, mut beta) = (vec![0.0; n], vec![0.0; n]);
        for (col, &x) in self.columns().iter().zip(params) {
            match col.block {
                Block::Alpha => alpha[col.node] = x,
                Block::Beta => beta[col.node] = x,
            }
        }
        Susceptibility::new(&self.grid, alpha, beta)
    }

    /// Restriction to the cells; coefficients outside the selection are dropped.
    pub fn restrict(&self, zeta: &Susceptibility) -> Result<Vec<f64>> {
        check_len(self.grid.len(), zeta.len())?;
        Ok(self
            .columns()
            .iter()
            .map(|c| match c.block {
                Block::Alpha => zeta.alpha()[c.node],
                Block::Beta => zeta.beta()[c.node],
            })
            .collect())
    }
}

/// Matrix of the first-order term `K_1` from parameters to boundary data.
/// Rows are `source * receivers + receiver`.
#[derive(Debug, Clone)]
pub struct LinearizedMap {
    matrix: DMatrix<f64>,
    columns: Vec<Column>,
    receivers: Vec<usize>,
    sources: usize,
}

impl LinearizedMap {
    /// Assembled by reciprocity: the data of a unit coefficient at node `j`
    /// seen at receiver `r` is `-k^2 G(r, j) w_j u0(j)` (with `u0^3` for the
    /// cubic block), so one kernel row per receiver and wavenumber suffices.
    pub fn assemble(model: &ForwardModel, param: &Parameterization, receivers: &[usize]) -> Result<Self> {
        check_len(model.grid().len(), param.grid().len())?;
        if receivers.is_empty() {
            return Err(Error::Config("no receivers".into()));
        }
        let grid = model.grid();
        let w = grid.weights();
        let columns = param.columns();
        let rows: HashMap<usize, Vec<Vec<f64>>> = model
            .solvers()
            .par_iter()
            .enumerate()
            .map(|(i, s)| (i, receivers.iter().map(|&r| s.kernel_row(r)).collect()))
            .collect();
        let ns = model.source_count();
        let nr = receivers.len();
        let mut matrix = DMatrix::zeros(ns * nr, columns.len());
        for s in 0..ns {
            let solver = model.solver(s);
            let k2 = solver.k() * solver.k();
            let sid = model.solver_index(s);
            let u0 = &model.background(s).values;
            for (ri, kernel) in rows[&sid].iter().enumerate() {
                for (c, col) in columns.iter().enumerate() {
                    let j = col.node;
                    let f = match col.block {
                        Block::Alpha => u0[j],
                        Block::Beta => u0[j] * u0[j] * u0[j],
                    };
                    matrix[(s * nr + ri, c)] = -k2 * kernel[j] * w[j] * f;
                }
            }
        }
        Ok(Self {
            matrix,
            columns,
            receivers: receivers.to_vec(),
            sources: ns,
        })
    }

    /// One forward `K_1` evaluation per basis cell and source.
    pub fn assemble_direct(
        model: &ForwardModel,
        param: &Parameterization,
        receivers: &[usize],
    ) -> Result<Self> {
        let columns = param.columns();
        let ns = model.source_count();
        let nr = receivers.len();
        let mut matrix = DMatrix::zeros(ns * nr, columns.len());
        for c in 0..columns.len() {
            let mut e = vec![0.0; columns.len()];
            e[c] = 1.0;
            let zeta = param.to_susceptibility(&e)?;
            for s in 0..ns {
                let k1 = compute_k(model.context(s), 1, std::slice::from_ref(&zeta))?;
                for (ri, &r) in receivers.iter().enumerate() {
                    matrix[(s * nr + ri, c)] = k1[r];
                }
            }
        }
        Ok(Self {
            matrix,
            columns,
            receivers: receivers.to_vec(),
            sources: ns,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn receivers(&self) -> &[usize] {
        &self.receivers
    }

    pub fn source_count(&self) -> usize {
        self.sources
    }

    pub fn apply(&self, params: &[f64]) -> Result<Vec<f64>> {
        check_len(self.matrix.ncols(), params.len())?;
        let x = nalgebra::DVector::from_column_slice(params);
        Ok((&self.matrix * x).as_slice().to_vec())
    }
}
