use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::Susceptibility;
use crate::discretization::{snapshot::fmt_f64, sup_norm, GreenSolver};
use crate::error::{check_len, Error, Result};

/// Ordered triples `(i1, i2, i3)` of nonnegative integers with `i1 + i2 + i3 = n`,
/// in lexicographic order.
pub fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(triple_count(n));
    for i1 in 0..=n {
        for i2 in 0..=(n - i1) {
            out.push((i1, i2, n - i1 - i2));
        }
    }
    out
}

pub fn triple_count(n: usize) -> usize {
    n * (n + 1) / 2 + n + 1
}

static NEXT_POOL_TAG: AtomicU64 = AtomicU64::new(1);

/// Owned list of medium arguments addressed by id. Term caches are keyed on
/// id slices, so ids must never be reassigned: the pool is append-only.
#[derive(Debug)]
pub struct ArgPool {
    tag: u64,
    args: Vec<Susceptibility>,
}

impl Default for ArgPool {
    fn default() -> Self {
        Self::new()
    }
}

impl ArgPool {
    pub fn new() -> Self {
        Self {
            tag: NEXT_POOL_TAG.fetch_add(1, Ordering::Relaxed),
            args: Vec::new(),
        }
    }

    pub fn push(&mut self, zeta: Susceptibility) -> usize {
        self.args.push(zeta);
        self.args.len() - 1
    }

    pub fn get(&self, id: usize) -> Option<&Susceptibility> {
        self.args.get(id)
    }

    pub fn len(&self) -> usize {
        self.args.len()
    }

    pub fn is_empty(&self) -> bool {
        self.args.is_empty()
    }
}

/// Memo of `K_n` evaluations for one source, keyed by the exact argument id
/// slice. Bound to a single [`ArgPool`]; using it with another pool clears it.
#[derive(Debug, Clone, Default)]
pub struct TermCache {
    enabled: bool,
    pool_tag: u64,
    map: HashMap<Vec<usize>, Vec<f64>>,
    hits: u64,
    misses: u64,
    b_terms_by_order: BTreeMap<usize, usize>,
}

impl TermCache {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            ..Default::default()
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Number of triple products summed in the cubic branch, by order of the
    /// term being formed.
    pub fn b_terms_by_order(&self) -> &BTreeMap<usize, usize> {
        &self.b_terms_by_order
    }

    pub fn clear(&mut self) {
        self.map.clear();
        self.hits = 0;
        self.misses = 0;
        self.b_terms_by_order.clear();
    }

    fn bind(&mut self, pool: &ArgPool) {
        if self.pool_tag != pool.tag {
            self.clear();
            self.pool_tag = pool.tag;
        }
    }
}

/// One [`TermCache`] per source.
#[derive(Debug, Clone)]
pub struct ForwardTermCache {
    caches: Vec<TermCache>,
}

impl ForwardTermCache {
    pub fn new(sources: usize, enabled: bool) -> Self {
        Self {
            caches: vec![TermCache::new(enabled); sources],
        }
    }

    pub fn source(&mut self, s: usize) -> &mut TermCache {
        &mut self.caches[s]
    }

    pub fn caches_mut(&mut self) -> &mut [TermCache] {
        &mut self.caches
    }

    pub fn hits(&self) -> u64 {
        self.caches.iter().map(|c| c.hits).sum()
    }

    pub fn misses(&self) -> u64 {
        self.caches.iter().map(|c| c.misses).sum()
    }
}

/// Solver and background field for one source.
#[derive(Debug, Clone, Copy)]
pub struct TermContext<'a> {
    pub solver: &'a GreenSolver,
    pub u0: &'a [f64],
}

/// `K_n(zeta_1, ..., zeta_n)` without caching.
pub fn compute_k(ctx: TermContext<'_>, n: usize, args: &[Susceptibility]) -> Result<Vec<f64>> {
    if args.len() != n {
        return Err(Error::ArgumentCount {
            order: n,
            found: args.len(),
        });
    }
    let mut pool = ArgPool::new();
    let ids: Vec<usize> = args.iter().map(|a| pool.push(a.clone())).collect();
    compute_k_with(ctx, &pool, &ids, &mut TermCache::new(false))
}

/// `K_n` for the arguments `pool[ids[0]], ..., pool[ids[n-1]]`.
///
/// Evaluated bottom-up over contiguous argument ranges:
/// `K(r) = G(alpha_last K(r') + beta_last sum K(r1) K(r2) K(r3))` where `r'` is
/// `r` without its last slot and `r1 r2 r3` runs over the splittings of `r'`.
pub fn compute_k_with(
    ctx: TermContext<'_>,
    pool: &ArgPool,
    ids: &[usize],
    cache: &mut TermCache,
) -> Result<Vec<f64>> {
    let nodes = ctx.solver.grid().len();
    check_len(nodes, ctx.u0.len())?;
    for &id in ids {
        let z = pool
            .get(id)
            .ok_or_else(|| Error::Config(format!("argument id {id} not in pool")))?;
        check_len(nodes, z.len())?;
    }
    cache.bind(pool);
    let n = ids.len();
    if n == 0 {
        return Ok(ctx.u0.to_vec());
    }
    if cache.enabled {
        if let Some(v) = cache.map.get(ids) {
            cache.hits += 1;
            return Ok(v.clone());
        }
    }

    // table[start][len] for ranges inside ids[..n-1]
    let m = n - 1;
    let mut table: Vec<Vec<Option<Vec<f64>>>> = (0..=m).map(|s| vec![None; m - s + 1]).collect();
    for (s, row) in table.iter_mut().enumerate() {
        let _ = s;
        row[0] = Some(ctx.u0.to_vec());
    }
    for len in 1..=m {
        for start in 0..=(m - len) {
            let value = term_for_range(ctx, pool, &ids[start..start + len], &table, start, cache)?;
            table[start][len] = Some(value);
        }
    }
    term_for_range(ctx, pool, ids, &table, 0, cache)
}

fn term_for_range(
    ctx: TermContext<'_>,
    pool: &ArgPool,
    ids: &[usize],
    table: &[Vec<Option<Vec<f64>>>],
    offset: usize,
    cache: &mut TermCache,
) -> Result<Vec<f64>> {
    if cache.enabled {
        if let Some(v) = cache.map.get(ids) {
            cache.hits += 1;
            return Ok(v.clone());
        }
        cache.misses += 1;
    }
    let len = ids.len();
    let last = pool.get(ids[len - 1]).expect("ids validated");
    let at = |start: usize, l: usize| -> &[f64] {
        table[offset + start][l].as_deref().expect("filled in order")
    };
    let prev = at(0, len - 1);
    let mut src: Vec<f64> = prev.iter().zip(last.alpha()).map(|(v, a)| a * v).collect();

    let order = len - 1;
    let combos = triples(order);
    cache.b_terms_by_order.insert(len, combos.len());
    if last.beta().iter().any(|&b| b != 0.0) {
        let mut cubic = vec![0.0; src.len()];
        for (i1, i2, i3) in combos {
            let a = at(0, i1);
            let b = at(i1, i2);
            let c = at(i1 + i2, i3);
            for (x, ((p, q), r)) in cubic.iter_mut().zip(a.iter().zip(b).zip(c)) {
                *x += p * q * r;
            }
        }
        for ((s, c), b) in src.iter_mut().zip(&cubic).zip(last.beta()) {
            *s += b * c;
        }
    }
    let out = ctx.solver.apply_green(&src)?;
    if cache.enabled {
        cache.map.insert(ids.to_vec(), out.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermNorm {
    pub order: usize,
    /// `||K_n(zeta, ..., zeta)||_inf` over all nodes.
    pub sup_norm: f64,
    /// Sup over boundary nodes.
    pub data_norm: f64,
    /// `||U_n - reference||_inf` when a reference field was supplied.
    pub residual: Option<f64>,
}

/// `U_N = u0 + sum_{n=1..N} K_n(zeta, ..., zeta)` with per-term norms.
pub fn born_partial_sum(
    ctx: TermContext<'_>,
    zeta: &Susceptibility,
    order: usize,
    reference: Option<&[f64]>,
    cache: &mut TermCache,
) -> Result<(Vec<f64>, Vec<TermNorm>)> {
    let grid = ctx.solver.grid();
    if let Some(r) = reference {
        check_len(grid.len(), r.len())?;
    }
    let mut pool = ArgPool::new();
    let id = pool.push(zeta.clone());
    let mut sum = ctx.u0.to_vec();
    let mut norms = Vec::with_capacity(order);
    for n in 1..=order {
        let ids = vec![id; n];
        let term = compute_k_with(ctx, &pool, &ids, cache)?;
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        let data_norm = grid
            .boundary()
            .iter()
            .fold(0.0f64, |m, &b| m.max(term[b].abs()));
        let residual = reference.map(|r| {
            sum.iter()
                .zip(r)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        });
        norms.push(TermNorm {
            order: n,
            sup_norm: sup_norm(&term),
            data_norm,
            residual,
        });
    }
    Ok((sum, norms))
}

/// CSV with columns `order,data_norm,sup_norm,cumulative_residual`; the last
/// column is empty when no reference was used.
pub fn write_term_norms_csv<W: Write>(out: &mut W, norms: &[TermNorm]) -> Result<()> {
    writeln!(out, "order,data_norm,sup_norm,cumulative_residual")?;
    for t in norms {
        let res = t.residual.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            t.order,
            fmt_f64(t.data_norm),
            fmt_f64(t.sup_norm),
            res
        )?;
    }
    Ok(())
}
