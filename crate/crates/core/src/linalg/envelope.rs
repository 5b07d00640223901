//! Profile (envelope) factorizations with reverse Cuthill-McKee ordering.
//!
//! Structured FE meshes give narrow envelopes after RCM, so a skyline
//! factorization is cheap and its fill stays inside the envelope.

use super::{dot, CsrMatrix};
use crate::{Error, Result};
use std::collections::VecDeque;

fn symmetric_adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for (i, list) in adj.iter_mut().enumerate() {
        let (cols, _) = a.row(i);
        list.extend(cols.iter().copied().filter(|&j| j != i));
    }
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if j != i {
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Level structure from `root`; returns (ordered nodes, eccentricity, last level).
fn bfs_levels(adj: &[Vec<usize>], root: usize, mark: &mut [usize], stamp: usize) -> (usize, Vec<usize>) {
    let mut depth = 0;
    let mut current = vec![root];
    mark[root] = stamp;
    loop {
        let mut next = Vec::new();
        for &v in &current {
            for &w in &adj[v] {
                if mark[w] != stamp {
                    mark[w] = stamp;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return (depth, current);
        }
        depth += 1;
        current = next;
    }
}

/// Reverse Cuthill-McKee ordering of the (symmetrized) matrix graph.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0;
    let mut order = Vec::with_capacity(n);

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut root = seed;
        let (mut ecc, mut last) = bfs_levels(&adj, root, &mut mark, stamp);
        stamp += 1;
        for _ in 0..8 {
            let candidate = *last.iter().min_by_key(|&&v| degree[v]).unwrap();
            let (e, l) = bfs_levels(&adj, candidate, &mut mark, stamp);
            stamp += 1;
            if e > ecc {
                root = candidate;
                ecc = e;
                last = l;
            } else {
                break;
            }
        }

        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[derive(Debug)]
struct Profile {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
}

impl Profile {
    fn new(a: &CsrMatrix) -> (Self, Vec<usize>) {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let (cols, _) = a.row(old_i);
            for &old_j in cols {
                let (i, j) = (inv[old_i], inv[old_j]);
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i]));
        }
        (Self { perm, first, offset }, inv)
    }

    fn permute(&self, b: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&old| b[old]).collect()
    }

    fn unpermute(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; y.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    fn envelope_size(&self) -> usize {
        *self.offset.last().unwrap()
    }
}

/// `A = L Lᵀ` on the RCM-permuted envelope.
#[derive(Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let (profile, inv) = Profile::new(a);
        let Profile {
            perm,
            first,
            offset,
        } = profile;
        let mut lower = vec![0.0; *offset.last().unwrap()];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                if j == i {
                    diag[i] = v;
                } else if j < i {
                    lower[offset[i] + j - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let (done, rest) = lower.split_at_mut(offset[i]);
            let row_i = &mut rest[..i - first[i]];
            for j in first[i]..i {
                let k0 = first[i].max(first[j]);
                let li = &row_i[k0 - first[i]..j - first[i]];
                let lj = &done[offset[j] + k0 - first[j]..offset[j] + j - first[j]];
                let s = row_i[j - first[i]] - dot(li, lj);
                row_i[j - first[i]] = s / diag[j];
            }
            let d = diag[i] - dot(row_i, row_i);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization { row: perm[i], pivot: d });
            }
            diag[i] = d.sqrt();
        }
        Ok(Self {
            perm,
            first,
            offset,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            let s = dot(row, &y[self.first[i]..i]);
            y[i] = (y[i] - s) / self.diag[i];
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let xi = y[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            for (yj, l) in y[self.first[i]..i].iter_mut().zip(row) {
                *yj -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// `A = L U` without pivoting on the RCM-permuted envelope of a structurally
/// symmetric matrix. Stable for matrices whose symmetric part is positive
/// definite, which covers the coupled space-time block systems.
#[derive(Debug)]
pub struct EnvelopeLu {
    profile: Profile,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let (profile, inv) = Profile::new(a);
        let size = profile.envelope_size();
        let (first, offset) = (&profile.first, &profile.offset);
        let mut lower = vec![0.0; size];
        let mut upper = vec![0.0; size];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                match j.cmp(&i) {
                    std::cmp::Ordering::Equal => diag[i] = v,
                    // row i, column j < i: strictly lower
                    std::cmp::Ordering::Less => lower[offset[i] + j - first[i]] += v,
                    // row i, column j > i: upper entry U[i][j] stored in column j
                    std::cmp::Ordering::Greater => upper[offset[j] + i - first[j]] += v,
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (l_done, l_rest) = lower.split_at_mut(offset[i]);
            let (u_done, u_rest) = upper.split_at_mut(offset[i]);
            let l_row = &mut l_rest[..i - fi];
            let u_col = &mut u_rest[..i - fi];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                // U[j][i]
                let lj = &l_done[offset[j] + k0 - fj..offset[j] + j - fj];
                let ui = &u_col[k0 - fi..j - fi];
                let s = dot(lj, ui);
                u_col[j - fi] -= s;
                // L[i][j]
                let li = &l_row[k0 - fi..j - fi];
                let uj = &u_done[offset[j] + k0 - fj..offset[j] + j - fj];
                let s = dot(li, uj);
                l_row[j - fi] = (l_row[j - fi] - s) / diag[j];
            }
            let d = diag[i] - dot(l_row, u_col);
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Factorization {
                    row: profile.perm[i],
                    pivot: d,
                });
            }
            diag[i] = d;
        }
        Ok(Self {
            profile,
            lower,
            upper,
            diag,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        assert_eq!(b.len(), n);
        let (first, offset) = (&self.profile.first, &self.profile.offset);
        let mut y = self.profile.permute(b);
        for i in 0..n {
            let row = &self.lower[offset[i]..offset[i + 1]];
            y[i] -= dot(row, &y[first[i]..i]);
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let xi = y[i];
            let col = &self.upper[offset[i]..offset[i + 1]];
            for (yj, u) in y[first[i]..i].iter_mut().zip(col) {
                *yj -= u * xi;
            }
        }
        self.profile.unpermute(&y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_laplacian(nx: usize, ny: usize, shift: f64) -> CsrMatrix {
        let id = |i: usize, j: usize| i + nx * j;
        let mut rows = vec![Vec::new(); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let r = &mut rows[id(i, j)];
                r.push((id(i, j), 4.0 + shift));
                if i > 0 {
                    r.push((id(i - 1, j), -1.0));
                }
                if i + 1 < nx {
                    r.push((id(i + 1, j), -1.0));
                }
                if j > 0 {
                    r.push((id(i, j - 1), -1.0));
                }
                if j + 1 < ny {
                    r.push((id(i, j + 1), -1.0));
                }
            }
        }
        CsrMatrix::from_rows(nx * ny, rows)
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = grid_laplacian(7, 5, 0.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..35).collect::<Vec<_>>());
    }

    #[test]
    fn cholesky_solves_grid_problem() {
        let a = grid_laplacian(12, 9, 0.1);
        let x: Vec<f64> = (0..a.nrows()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let b = a.mul_vec(&x);
        let chol = EnvelopeCholesky::factor(&a).unwrap();
        let sol = chol.solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(EnvelopeCholesky::factor(&a).is_err());
    }

    #[test]
    fn lu_solves_nonsymmetric_positive_real() {
        // symmetric positive definite part plus a skew part
        let base = grid_laplacian(8, 6, 0.5);
        let n = base.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            let (cols, vals) = base.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                rows[i].push((j, v));
                if j > i {
                    let s: f64 = rng.gen_range(-2.0..2.0);
                    rows[i].push((j, s));
                    rows[j].push((i, -s));
                }
            }
        }
        let a = CsrMatrix::from_rows(n, rows);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b = a.mul_vec(&x);
        let lu = EnvelopeLu::factor(&a).unwrap();
        let sol = lu.solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).abs() < 1e-10, "{s} vs {e}");
        }
    }
}
