//! Banded LU factorization with partial pivoting.
//!
//! Row `i` stores columns `i - kl ..= i + kl + ku`, which leaves room for the
//! fill-in produced by row interchanges (same layout idea as LAPACK `gbtrf`).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// Square matrix with symmetric bandwidth `bw` (lower and upper).
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.bw >= i && j <= i + self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.bw < i || j > i + self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[self.idx(i, j)] * xj;
            }
            *yi = acc;
        }
        y
    }

    pub fn factorize(&self) -> Result<BandedLu> {
        BandedLu::new(self)
    }
}

/// LU factors of a band matrix. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandedLu {
    fn new(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.bw;
        let ku = a.bw;
        let width = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * width];
        // column j of row i lives at i*width + (j + kl - i)
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n.saturating_sub(1));
            for j in lo..=hi {
                data[i * width + (j + kl - i)] = a.get(i, j);
            }
        }
        let at = |i: usize, j: usize| i * width + (j + kl - i);

        let mut piv = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = data[at(k, k)].abs();
            for i in (k + 1)..=last_row {
                let v = data[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Degenerate(format!(
                    "zero pivot at column {k} in banded LU"
                )));
            }
            min_pivot = min_pivot.min(best);
            max_pivot = max_pivot.max(best);
            if p != k {
                for j in k..=last_col {
                    data.swap(at(k, j), at(p, j));
                }
            }
            let pivot = data[at(k, k)];
            for i in (k + 1)..=last_row {
                let l = data[at(i, k)] / pivot;
                data[at(i, k)] = l;
                if l != 0.0 {
                    for j in (k + 1)..=last_col {
                        data[at(i, j)] -= l * data[at(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            data,
            piv,
            min_pivot,
            max_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of smallest to largest pivot magnitude; a cheap singularity indicator.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.max_pivot
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=(k + kl).min(n - 1) {
                    b[i] -= self.data[at(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in (i + 1)..=(i + kl + ku).min(n - 1) {
                acc -= self.data[at(i, j)] * b[j];
            }
            b[i] = acc / self.data[at(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                // small diagonal forces pivoting
                let v: f64 = rng.random_range(-1.0..1.0);
                a.add(i, j, if i == j { 1e-3 * v } else { v });
            }
        }
        a
    }

    #[test]
    fn matches_dense_solve() {
        for (n, bw, seed) in [(1, 0, 1), (7, 1, 2), (30, 4, 3), (50, 9, 4)] {
            let a = random_band(n, bw, seed);
            let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.5).collect();
            let x = a.factorize().unwrap().solve(&b);
            let xd = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() <= 1e-9 * (1.0 + xd[i].abs()), "n={n}");
            }
            let r = a.mul_vec(&x);
            for i in 0..n {
                assert!((r[i] - b[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = BandMatrix::zeros(4, 1);
        assert!(matches!(a.factorize(), Err(Error::Degenerate(_))));
    }
}
