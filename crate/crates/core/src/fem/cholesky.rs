//! Direct solver for the assembled stiffness operator: reverse
//! Cuthill-McKee reordering plus an envelope (profile) Cholesky
//! factorization. Factored once per mesh, reused for every load.

use super::sparse::SparseOperator;
use super::FemError;

/// `L L^T` factorization of a permuted symmetric positive definite
/// operator, stored row-packed within the envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    /// permuted index -> original index
    perm: Vec<usize>,
    /// first stored column of each permuted row
    row_start: Vec<usize>,
    /// offset of each row's packed storage; length n + 1
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factorizes `a` (square, symmetric; only the sparsity pattern and
    /// lower-triangle values are consulted). Fails with the 1-based pivot
    /// number when a pivot is not strictly positive.
    pub fn factor(a: &SparseOperator) -> Result<Self, FemError> {
        assert_eq!(
            a.nrows(),
            a.ncols(),
            "factorization needs a square operator"
        );
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }

        let mut row_start: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let ni = inv_perm[old_i];
            for &old_j in a.row(old_i).0 {
                let nj = inv_perm[old_j];
                let (lo, hi) = (ni.min(nj), ni.max(nj));
                if lo < row_start[hi] {
                    row_start[hi] = lo;
                }
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - row_start[i] + 1);
        }
        let mut data = vec![0.0; offsets[n]];
        for old_i in 0..n {
            let (cols, vals) = a.row(old_i);
            let ni = inv_perm[old_i];
            for (&old_j, &v) in cols.iter().zip(vals) {
                let nj = inv_perm[old_j];
                if nj <= ni {
                    data[offsets[ni] + (nj - row_start[ni])] = v;
                }
            }
        }

        // In-place profile factorization.
        for i in 0..n {
            for j in row_start[i]..=i {
                let k0 = row_start[i].max(row_start[j]);
                let li = &data[offsets[i] + (k0 - row_start[i])..offsets[i] + (j - row_start[i])];
                let lj = &data[offsets[j] + (k0 - row_start[j])..offsets[j] + (j - row_start[j])];
                let dot: f64 = li.iter().zip(lj).map(|(x, y)| x * y).sum();
                let idx = offsets[i] + (j - row_start[i]);
                if j < i {
                    let diag = data[offsets[j] + (j - row_start[j])];
                    data[idx] = (data[idx] - dot) / diag;
                } else {
                    let pivot = data[idx] - dot;
                    if pivot <= 0.0 {
                        return Err(FemError::NotPositiveDefinite { pivot: i + 1 });
                    }
                    data[idx] = pivot.sqrt();
                }
            }
        }

        Ok(EnvelopeCholesky {
            n,
            perm,
            row_start,
            offsets,
            data,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        // forward: L y' = y
        for i in 0..self.n {
            let rs = self.row_start[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let dot: f64 = row[..i - rs]
                .iter()
                .zip(&y[rs..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] = (y[i] - dot) / row[i - rs];
        }
        // backward: L^T x' = y'
        for i in (0..self.n).rev() {
            let rs = self.row_start[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let xi = y[i] / row[i - rs];
            y[i] = xi;
            for k in rs..i {
                y[k] -= row[k - rs] * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering of the operator's adjacency graph.
/// Deterministic: component seeds are minimum-degree (ties by index) and
/// neighbor visits are sorted by (degree, index).
fn reverse_cuthill_mckee(a: &SparseOperator) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex exists");
        visited[seed] = true;
        order.push(seed);
        let mut head = order.len() - 1;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = a
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&u| !visited[u])
                .collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                if !visited[u] {
                    visited[u] = true;
                    order.push(u);
                }
            }
        }
    }
    order.reverse();
    order
}
