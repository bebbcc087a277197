//! Symmetric positive-definite banded factorization and element PSD projection.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Clamps negative eigenvalues of a symmetric element matrix to zero.
pub fn project_psd<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    // Dynamic storage sidesteps the dimension bounds the static eigensolver needs.
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, m.as_slice()));
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return *m;
    }
    let mut out = SMatrix::<f64, N, N>::zeros();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(k);
            for c in 0..N {
                for r in 0..N {
                    out[(r, c)] += l * v[r] * v[c];
                }
            }
        }
    }
    out
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency lists.
///
/// Returns `order` with `order[position] = node`. Components are visited starting
/// from their lowest-degree node; ties break on node index, so the ordering is
/// deterministic.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree = |v: usize| adjacency[v].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree(v), v));
    for seed in seeds {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            next.dedup();
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Lower band of a symmetric matrix, `bandwidth` entries below the diagonal.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    // row-major: row r holds columns r - bandwidth ..= r
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        row * (self.bandwidth + 1) + (col + self.bandwidth - row)
    }

    /// Adds `value` at `(row, col)`. Only the lower triangle is stored, so an
    /// entry with `col > row` is added at `(col, row)` instead.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let (r, c) = if col > row { (col, row) } else { (row, col) };
        assert!(
            r - c <= self.bandwidth,
            "entry ({r}, {c}) outside band {}",
            self.bandwidth
        );
        let s = self.slot(r, c);
        self.data[s] += value;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (r, c) = if col > row { (col, row) } else { (row, col) };
        if r - c > self.bandwidth {
            0.0
        } else {
            self.data[self.slot(r, c)]
        }
    }

    /// In-place Cholesky factorization `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bandwidth;
        for j in 0..self.n {
            let lo = j.saturating_sub(bw);
            let mut d = self.data[self.slot(j, j)];
            for k in lo..j {
                let l = self.data[self.slot(j, k)];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(Error::Numeric(format!(
                    "matrix not positive definite at pivot {j} ({d:e})"
                )));
            }
            let d = d.sqrt();
            let sj = self.slot(j, j);
            self.data[sj] = d;
            for i in j + 1..(j + bw + 1).min(self.n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = self.data[self.slot(i, j)];
                for k in lo_i..j {
                    s -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                let sij = self.slot(i, j);
                self.data[sij] = s / d;
            }
        }
        Ok(BandCholesky { factor: self })
    }

    /// Dense product `A x`, for residual checks.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for r in 0..self.n {
            for c in r.saturating_sub(self.bandwidth)..=r {
                let a = self.data[self.slot(r, c)];
                y[r] += a * x[c];
                if c != r {
                    y[c] += a * x[r];
                }
            }
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bandwidth);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.slot(i, k)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= l.data[l.slot(k, i)] * y[k];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        y
    }
}
