//! Small sparse helpers: CSR storage and a sparse Cholesky wrapper.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};

/// Compressed sparse row matrix, duplicates summed on construction.
#[derive(Debug, Clone)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    rowptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in trips {
            assert!(i < nrows && j < ncols);
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut raw = vec![(0usize, 0.0f64); trips.len()];
        for &(i, j, v) in trips {
            raw[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut rowptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(trips.len());
        let mut vals = Vec::with_capacity(trips.len());
        rowptr.push(0);
        for i in 0..nrows {
            let row = &mut raw[counts[i]..counts[i + 1]];
            row.sort_by_key(|p| p.0);
            for &(j, v) in row.iter() {
                if cols.len() > rowptr[i] && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            rowptr.push(cols.len());
        }
        Self { nrows, ncols, rowptr, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.rowptr[i], self.rowptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(j, v)| v * x[j]).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|p| p.0 == j).map_or(0.0, |p| p.1)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row_dot(i, x);
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol * v.abs().max(1.0))
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct SpdFactor {
    n: usize,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SpdFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdFactor").field("n", &self.n).finish()
    }
}

impl SpdFactor {
    /// Factor from lower- or full-storage triplets (upper entries are ignored).
    pub fn new(n: usize, trips: &[(usize, usize, f64)]) -> Result<Self, String> {
        let lower: Vec<Triplet<usize, usize, f64>> = trips
            .iter()
            .filter(|t| t.0 >= t.1)
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
            .map_err(|e| format!("{e:?}"))?;
        let llt = a
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| format!("{e:?}"))?;
        Ok(Self { n, llt })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.n);
        if self.n == 0 {
            return;
        }
        let m = faer::MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        self.llt.solve_in_place(m);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0), (0, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 3);
        assert!(a.is_symmetric(0.0));
        let mut y = [0.0; 2];
        a.matvec(&[1.0, 1.0], &mut y);
        assert_eq!(y, [7.0, 4.0]);
    }

    #[test]
    fn cholesky_solves() {
        let trips = [(0, 0, 4.0), (1, 0, 1.0), (0, 1, 1.0), (1, 1, 3.0), (0, 0, 0.0)];
        let f = SpdFactor::new(2, &trips).unwrap();
        let mut b = [1.0, 2.0];
        f.solve_in_place(&mut b);
        assert!((4.0 * b[0] + b[1] - 1.0).abs() < 1e-14);
        assert!((b[0] + 3.0 * b[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_is_rejected() {
        assert!(SpdFactor::new(1, &[(0, 0, -1.0)]).is_err());
    }
}
