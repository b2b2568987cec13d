//! Compressed sparse column storage.

/// A sparse matrix in compressed sparse column form. Row indices within a
/// column are sorted and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from coordinate triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let entries: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        let coords: Vec<(usize, usize)> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
        let pattern = CscPattern::new(nrows, ncols, &coords);
        let mut m = pattern.matrix.clone();
        for (k, &(_, _, v)) in entries.iter().enumerate() {
            m.values[pattern.slot[k]] += v;
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    /// `y += A x`
    pub fn mul_acc(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowind[p]] += self.values[p] * xj;
            }
        }
    }

    /// `y += A^T x`
    pub fn mul_t_acc(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc += self.values[p] * x[self.rowind[p]];
            }
            y[j] += acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let rows = &self.rowind[self.colptr[j]..self.colptr[j + 1]];
        match rows.binary_search(&i) {
            Ok(k) => self.values[self.colptr[j] + k],
            Err(_) => 0.0,
        }
    }
}

/// A fixed sparsity pattern together with the position of every input
/// coordinate, so that values can be re-scattered cheaply on every
/// iteration of a solver.
#[derive(Debug, Clone)]
pub struct CscPattern {
    pub matrix: CscMatrix,
    /// `slot[k]` is the index into `matrix.values` of the k-th input coordinate.
    pub slot: Vec<usize>,
}

impl CscPattern {
    pub fn new(nrows: usize, ncols: usize, coords: &[(usize, usize)]) -> Self {
        let mut counts = vec![0usize; ncols];
        for &(i, j) in coords {
            assert!(i < nrows && j < ncols, "coordinate ({i},{j}) out of range");
            counts[j] += 1;
        }
        // bucket coordinates by column, then sort each bucket by row
        let mut start = vec![0usize; ncols + 1];
        for j in 0..ncols {
            start[j + 1] = start[j] + counts[j];
        }
        let mut order = vec![0usize; coords.len()];
        let mut next = start.clone();
        for (k, &(_, j)) in coords.iter().enumerate() {
            order[next[j]] = k;
            next[j] += 1;
        }
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowind = Vec::with_capacity(coords.len());
        let mut slot = vec![0usize; coords.len()];
        for j in 0..ncols {
            let bucket = &mut order[start[j]..start[j + 1]];
            bucket.sort_by_key(|&k| coords[k].0);
            let mut last: Option<usize> = None;
            for &k in bucket.iter() {
                let i = coords[k].0;
                if last != Some(i) {
                    rowind.push(i);
                    last = Some(i);
                }
                slot[k] = rowind.len() - 1;
            }
            colptr[j + 1] = rowind.len();
        }
        let nnz = rowind.len();
        Self {
            matrix: CscMatrix {
                nrows,
                ncols,
                colptr,
                rowind,
                values: vec![0.0; nnz],
            },
            slot,
        }
    }

    pub fn clear(&mut self) {
        self.matrix.values.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn add(&mut self, k: usize, v: f64) {
        self.matrix.values[self.slot[k]] += v;
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm_1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
