use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LinearizedMap, Parameterization, RegularizedPseudoinverse};
use crate::discretization::sup_norm;
use crate::error::{check_len, Error, Result};
use crate::forward::{compute_k_with, ArgPool, ForwardModel, ForwardTermCache, Susceptibility};

pub const COMPOSITION_LIMIT: usize = 12;

/// Compositions of `m` into `n` positive parts, lexicographic.
pub fn compositions(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 || m < n {
        return out;
    }
    let mut cur = Vec::with_capacity(n);
    fn rec(rem: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 1..=(rem - (slots - 1)) {
            cur.push(first);
            rec(rem - first, slots - 1, cur, out);
            cur.pop();
        }
    }
    rec(m, n, &mut cur, &mut out);
    out
}

/// All argument tuples entering the `m`-th inverse term: compositions of `m`
/// into `n = 2..=m` parts.
pub fn inverse_compositions(m: usize) -> Vec<Vec<usize>> {
    (2..=m).flat_map(|n| compositions(m, n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseOptions {
    pub order: usize,
    pub composition_limit: usize,
    pub cache: bool,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            order: 3,
            composition_limit: COMPOSITION_LIMIT,
            cache: true,
        }
    }
}

/// Everything the inverse series needs besides the data.
#[derive(Debug, Clone, Copy)]
pub struct InverseProblem<'a> {
    pub model: &'a ForwardModel,
    pub param: &'a Parameterization,
    pub map: &'a LinearizedMap,
    pub pinv: &'a RegularizedPseudoinverse,
}

impl InverseProblem<'_> {
    fn validate(&self, data: &[f64]) -> Result<()> {
        check_len(self.map.matrix().nrows(), data.len())?;
        check_len(self.map.matrix().ncols(), self.param.len())?;
        check_len(self.pinv.input_dim(), data.len())?;
        check_len(self.model.source_count(), self.map.source_count())?;
        Ok(())
    }
}

/// The terms `K_1+ phi, ..., K_M phi` in parameter space.
///
/// `K_m phi = -K_1+ sum_{n=2..m} sum_{i1+..+in=m} K_n(K_i1 phi, ..., K_in phi)`,
/// with each lower term evaluated once and shared through the argument pool.
pub fn inverse_terms(
    problem: InverseProblem<'_>,
    data: &[f64],
    opts: &InverseOptions,
    caches: &mut ForwardTermCache,
) -> Result<Vec<Vec<f64>>> {
    problem.validate(data)?;
    if opts.order == 0 {
        return Err(Error::Config("inverse series order must be at least 1".into()));
    }
    if opts.order > opts.composition_limit {
        return Err(Error::CompositionLimit {
            order: opts.order,
            limit: opts.composition_limit,
        });
    }
    let ns = problem.model.source_count();
    if caches.caches_mut().len() != ns {
        *caches = ForwardTermCache::new(ns, opts.cache);
    }
    let receivers = problem.map.receivers();
    let nr = receivers.len();

    let mut pool = ArgPool::new();
    // ids[j] is the pool id of the (j+1)-th term
    let mut ids: Vec<usize> = Vec::with_capacity(opts.order);
    let mut terms: Vec<Vec<f64>> = Vec::with_capacity(opts.order);

    let first = problem.pinv.apply(data)?;
    ids.push(pool.push(problem.param.to_susceptibility(&first)?));
    terms.push(first);

    for m in 2..=opts.order {
        let tuples: Vec<Vec<usize>> = inverse_compositions(m)
            .into_iter()
            .map(|c| c.iter().map(|&i| ids[i - 1]).collect())
            .collect();
        let pool_ref = &pool;
        let rows: Vec<Vec<f64>> = caches
            .caches_mut()
            .par_iter_mut()
            .enumerate()
            .map(|(s, cache)| -> Result<Vec<f64>> {
                let ctx = problem.model.context(s);
                let mut acc = vec![0.0; nr];
                for t in &tuples {
                    let field = compute_k_with(ctx, pool_ref, t, cache)?;
                    for (a, &r) in acc.iter_mut().zip(receivers) {
                        *a += field[r];
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let stacked: Vec<f64> = rows.into_iter().flatten().collect();
        let mut term = problem.pinv.apply(&stacked)?;
        for x in term.iter_mut() {
            *x = -*x;
        }
        ids.push(pool.push(problem.param.to_susceptibility(&term)?));
        terms.push(term);
    }
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseDiagnostics {
    pub order: usize,
    pub tau: f64,
    pub rank: usize,
    pub pinv_norm: f64,
    pub data_norm_l2: f64,
    pub data_norm_sup: f64,
    /// `||K_1+ phi||_inf` over both coefficients.
    pub first_term_norm: f64,
    pub radius: Option<f64>,
    /// Set when a radius is known and `first_term_norm >= radius`.
    pub radius_warning: bool,
    pub term_norms_sup: Vec<f64>,
    pub term_norms_l2: Vec<f64>,
    pub compositions_per_term: Vec<usize>,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub params: Vec<f64>,
    pub terms: Vec<Vec<f64>>,
    /// Partial sums after each term.
    pub partial_sums: Vec<Vec<f64>>,
    pub zeta: Susceptibility,
    pub diagnostics: InverseDiagnostics,
}

pub fn reconstruct(
    problem: InverseProblem<'_>,
    data: &[f64],
    opts: &InverseOptions,
    radius: Option<f64>,
) -> Result<Reconstruction> {
    let mut caches = ForwardTermCache::new(problem.model.source_count(), opts.cache);
    let terms = inverse_terms(problem, data, opts, &mut caches)?;
    let mut sum = vec![0.0; problem.param.len()];
    let mut partial_sums = Vec::with_capacity(terms.len());
    for t in &terms {
        for (s, x) in sum.iter_mut().zip(t) {
            *s += x;
        }
        partial_sums.push(sum.clone());
    }
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let first_term_norm = sup_norm(&terms[0]);
    let radius_warning = radius.is_some_and(|r| !(first_term_norm < r));
    if radius_warning {
        log::warn!(
            "first inverse term norm {first_term_norm:e} is not below the convergence radius {:e}",
            radius.unwrap()
        );
    }
    let diagnostics = InverseDiagnostics {
        order: opts.order,
        tau: problem.pinv.tau(),
        rank: problem.pinv.rank(),
        pinv_norm: problem.pinv.norm(),
        data_norm_l2: if data.is_empty() { 0.0 } else { l2(data) / (data.len() as f64).sqrt() },
        data_norm_sup: sup_norm(data),
        first_term_norm,
        radius,
        radius_warning,
        term_norms_sup: terms.iter().map(|t| sup_norm(t)).collect(),
        term_norms_l2: terms.iter().map(|t| l2(t)).collect(),
        compositions_per_term: (1..=opts.order)
            .map(|m| if m == 1 { 1 } else { inverse_compositions(m).len() })
            .collect(),
        cache_hits: caches.hits(),
        cache_misses: caches.misses(),
    };
    let zeta = problem.param.to_susceptibility(&sum)?;
    Ok(Reconstruction {
        params: sum,
        terms,
        partial_sums,
        zeta,
        diagnostics,
    })
}
