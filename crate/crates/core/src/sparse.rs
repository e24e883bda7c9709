//! Compressed-sparse-row matrices with a column index for transposed products.
//!
//! The structure is immutable once built; the non-zero values live in a plain
//! slice so that learnable matrices can keep their values in a parameter table
//! and reuse the same index arrays.

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
    // Column-major view: col_ptr[j]..col_ptr[j+1] indexes col_rows / col_pos,
    // where col_pos is the position of the entry in `data`.
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_pos: Vec<usize>,
}

impl SparseMatrix {
    /// Builds from coordinate triplets. Duplicate coordinates keep the last
    /// value. Entries are ordered row-major with ascending columns.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, usize)> =
            triplets.iter().enumerate().map(|(k, &(i, j, _))| (i, j, k)).collect();
        entries.sort_by_key(|&(i, j, k)| (i, j, k));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, k) in &entries {
            assert!(i < n_rows && j < n_cols, "coordinate ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *data.last_mut().unwrap() = triplets[k].2;
                continue;
            }
            last = Some((i, j));
            indptr[i + 1] += 1;
            indices.push(j);
            data.push(triplets[k].2);
        }
        for i in 0..n_rows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = SparseMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            data,
            col_ptr: Vec::new(),
            col_rows: Vec::new(),
            col_pos: Vec::new(),
        };
        m.build_columns();
        m
    }

    fn build_columns(&mut self) {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_rows = vec![0; self.indices.len()];
        let mut col_pos = vec![0; self.indices.len()];
        for i in 0..self.n_rows {
            for pos in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[pos];
                col_rows[next[j]] = i;
                col_pos[next[j]] = pos;
                next[j] += 1;
            }
        }
        self.col_ptr = counts;
        self.col_rows = col_rows;
        self.col_pos = col_pos;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored coordinates, including explicit zeros.
    pub fn stored(&self) -> usize {
        self.indices.len()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `(row, col)` of every stored coordinate, in data order.
    pub fn coordinates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_rows).flat_map(move |i| (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p])))
    }

    /// Position of `(i, j)` in the data array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.indptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map(|p| self.data[p]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (p, (i, j)) in self.coordinates().enumerate() {
            out[i][j] = self.data[p];
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets: Vec<(usize, usize, f64)> =
            self.coordinates().zip(&self.data).map(|((i, j), &v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, &triplets)
    }

    /// `out += x · M` using `values` in place of the stored data.
    pub fn vec_mul(&self, values: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.indices.len());
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for p in self.indptr[i]..self.indptr[i + 1] {
                out[self.indices[p]] += xi * values[p];
            }
        }
    }

    /// `out += x · Mᵀ`, i.e. `out_i += Σ_j M_ij x_j`.
    pub fn vec_mul_transpose(&self, values: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.indices.len());
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for q in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[self.col_rows[q]] += xj * values[self.col_pos[q]];
            }
        }
    }

    /// Gradient of `y = x · M` with respect to the values: `g_ij += x_i gy_j`.
    pub fn vec_mul_value_grad(&self, x: &[f64], gy: &[f64], grad: &mut [f64]) {
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for p in self.indptr[i]..self.indptr[i + 1] {
                grad[p] += xi * gy[self.indices[p]];
            }
        }
    }

    /// Gradient of `y = x · Mᵀ` with respect to the values: `g_ij += gy_i x_j`.
    pub fn vec_mul_transpose_value_grad(&self, x: &[f64], gy: &[f64], grad: &mut [f64]) {
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for q in self.col_ptr[j]..self.col_ptr[j + 1] {
                grad[self.col_pos[q]] += gy[self.col_rows[q]] * xj;
            }
        }
    }

    /// Diagonal entries `M_ii`.
    pub fn diagonal(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n_rows.min(self.n_cols);
        (0..n)
            .map(|i| self.position(i, i).map(|p| values[p]).unwrap_or(0.0))
            .collect()
    }
}
