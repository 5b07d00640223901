use crate::Mat3;

/// Compressed sparse row matrix with sorted column indices in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix over a given pattern. Columns in each row must be sorted
    /// and unique.
    pub fn zeros_with_pattern(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
    ) -> Self {
        assert_eq!(row_ptr.len(), nrows + 1);
        assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        debug_assert!((0..nrows).all(|i| col_idx[row_ptr[i]..row_ptr[i + 1]]
            .windows(2)
            .all(|w| w[0] < w[1])));
        let nnz = col_idx.len();
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Square matrix from row lists of `(column, value)`; duplicates are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                assert!(j < n, "column {j} out of range");
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: n,
            ncols: n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let rows = a
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(n, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Storage position of entry `(i, j)` if it is in the pattern.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds to an existing pattern entry. Panics if `(i, j)` is structurally zero.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[p] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col_idx[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(&j, v)| v * x[j])
                .sum();
        }
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        super::dot(x, &self.mul_vec(y))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// `Σ cᵢ Aᵢ` over matrices sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let (_, first) = terms.first().expect("at least one term");
        let mut out = (*first).clone();
        out.values.iter_mut().for_each(|v| *v = 0.0);
        for (c, m) in terms {
            assert!(m.same_pattern(&out), "patterns differ");
            for (o, v) in out.values.iter_mut().zip(&m.values) {
                *o += c * v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        super::max_abs(&self.values)
    }

    /// `max |A − Aᵀ|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix selected by `map[i] = Some(new_index)`.
    pub fn principal_submatrix(&self, map: &[Option<usize>], n_new: usize) -> CsrMatrix {
        assert_eq!(map.len(), self.nrows);
        let mut order: Vec<(usize, usize)> = map
            .iter()
            .enumerate()
            .filter_map(|(old, new)| new.map(|n| (n, old)))
            .collect();
        order.sort_unstable();
        assert_eq!(order.len(), n_new);
        let mut row_ptr = Vec::with_capacity(n_new + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut row_buf: Vec<(usize, f64)> = Vec::new();
        for &(_, old) in &order {
            row_buf.clear();
            let (cols, vals) = self.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(nj) = map[j] {
                    row_buf.push((nj, v));
                }
            }
            row_buf.sort_unstable_by_key(|e| e.0);
            for &(j, v) in &row_buf {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: n_new,
            ncols: n_new,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `Tᵀ A T` for block-diagonal `T` with one 3×3 rotation per node
    /// (`None` is the identity). Requires a pattern made of full 3×3 nodal blocks.
    pub fn rotate_nodal_blocks(&self, frames: &[Option<Mat3>]) -> CsrMatrix {
        assert_eq!(self.nrows, 3 * frames.len());
        let mut out = self.clone();
        for (node_i, frame_i) in frames.iter().enumerate() {
            let (cols, _) = self.row(3 * node_i);
            let neighbours: Vec<usize> = cols.iter().step_by(3).map(|c| c / 3).collect();
            for node_j in neighbours {
                let frame_j = &frames[node_j];
                if frame_i.is_none() && frame_j.is_none() {
                    continue;
                }
                let mut block = [[0.0; 3]; 3];
                for (a, row) in block.iter_mut().enumerate() {
                    for (b, entry) in row.iter_mut().enumerate() {
                        *entry = self.get(3 * node_i + a, 3 * node_j + b);
                    }
                }
                let rotated = rotate_block(&block, frame_i.as_ref(), frame_j.as_ref());
                for (a, row) in rotated.iter().enumerate() {
                    for (b, &v) in row.iter().enumerate() {
                        let p = out
                            .find(3 * node_i + a, 3 * node_j + b)
                            .expect("pattern is not made of 3x3 nodal blocks");
                        out.values[p] = v;
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }
}

/// `Rᵢᵀ B Rⱼ` where the rotation columns are the local frame vectors.
fn rotate_block(block: &Mat3, ri: Option<&Mat3>, rj: Option<&Mat3>) -> Mat3 {
    let mut tmp = *block;
    if let Some(rj) = rj {
        for a in 0..3 {
            for b in 0..3 {
                tmp[a][b] = (0..3).map(|d| block[a][d] * rj[d][b]).sum();
            }
        }
    }
    let mut out = tmp;
    if let Some(ri) = ri {
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] = (0..3).map(|c| ri[c][a] * tmp[c][b]).sum();
            }
        }
    }
    out
}
