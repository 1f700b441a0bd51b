//! Sparse-matrix assembly and symmetric positive-definite solves.
//!
//! Assembly goes through [`TripletList`] (duplicate entries are summed on
//! compression, the usual finite-element scatter contract). Dirichlet data is
//! imposed by reduction to free DOFs through [`DofPartition`], never by
//! penalty, so sensitivities stay exact. Factorizations are sparse Cholesky
//! from `faer`; [`SpdSolver`] keeps the symbolic analysis so the driver can
//! refactor matrices with an unchanged pattern each iteration.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Side;

use crate::{Error, Result};

/// Relative residual bound enforced by every solve.
pub const SOLVE_REL_TOL: f64 = 1e-10;

/// Coordinate-format staging area for assembly.
#[derive(Debug, Clone)]
pub struct TripletList {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletList {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self::with_capacity(nrows, ncols, 0)
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletList {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    /// Stages one entry; indices are validated in [`compress`].
    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

/// Compresses a triplet list, summing duplicate entries.
pub fn compress(t: &TripletList) -> Result<SparseMatrix> {
    for k in 0..t.len() {
        if t.rows[k] >= t.nrows || t.cols[k] >= t.ncols {
            return Err(Error::IndexOutOfBounds {
                row: t.rows[k],
                col: t.cols[k],
                nrows: t.nrows,
                ncols: t.ncols,
            });
        }
    }

    // Counting sort by row, then sort each row by column and merge.
    let mut counts = vec![0usize; t.nrows + 1];
    for &r in &t.rows {
        counts[r + 1] += 1;
    }
    for i in 0..t.nrows {
        counts[i + 1] += counts[i];
    }
    let mut next = counts.clone();
    let mut by_row: Vec<(usize, f64)> = vec![(0, 0.0); t.len()];
    for k in 0..t.len() {
        let slot = next[t.rows[k]];
        by_row[slot] = (t.cols[k], t.vals[k]);
        next[t.rows[k]] += 1;
    }

    let mut row_ptr = Vec::with_capacity(t.nrows + 1);
    let mut col_idx = Vec::with_capacity(t.len());
    let mut vals = Vec::with_capacity(t.len());
    row_ptr.push(0);
    for r in 0..t.nrows {
        let seg = &mut by_row[counts[r]..counts[r + 1]];
        seg.sort_unstable_by_key(|&(c, _)| c);
        let mut i = 0;
        while i < seg.len() {
            let c = seg[i].0;
            let mut v = seg[i].1;
            i += 1;
            while i < seg.len() && seg[i].0 == c {
                v += seg[i].1;
                i += 1;
            }
            col_idx.push(c);
            vals.push(v);
        }
        row_ptr.push(col_idx.len());
    }

    Ok(SparseMatrix {
        nrows: t.nrows,
        ncols: t.ncols,
        row_ptr,
        col_idx,
        vals,
    })
}

impl SparseMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entry lookup by binary search within the row; zero when absent.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "mul_transpose_vec dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.vals[k] * xr;
            }
        }
        y
    }

    /// Quadratic form xᵀ M y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let my = self.mul_vec(y);
        x.iter().zip(my.iter()).map(|(a, b)| a * b).sum()
    }

    /// Exact symmetry check (used in tests; assembled matrices are symmetric
    /// by construction).
    pub fn is_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.get(self.col_idx[k], r) != self.vals[k] {
                    return false;
                }
            }
        }
        true
    }

    fn has_same_pattern(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// View a symmetric matrix as faer CSC (identical arrays by symmetry).
    fn to_faer_symmetric(&self) -> SparseColMat<usize, f64> {
        let symbolic = SymbolicSparseColMat::<usize>::new_checked(
            self.nrows,
            self.ncols,
            self.row_ptr.clone(),
            None,
            self.col_idx.clone(),
        );
        SparseColMat::new(symbolic, self.vals.clone())
    }
}

/// Free/fixed DOF partition for Dirichlet reduction.
#[derive(Debug, Clone)]
pub struct DofPartition {
    n: usize,
    free: Vec<usize>,
    fixed: Vec<usize>,
    /// Position of each full index inside its set: `slot[i] = (is_free, pos)`.
    slot: Vec<(bool, usize)>,
}

impl DofPartition {
    pub fn new(n: usize, fixed: &[usize]) -> Result<Self> {
        let mut fixed: Vec<usize> = fixed.to_vec();
        fixed.sort_unstable();
        fixed.dedup();
        if let Some(&bad) = fixed.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfBounds {
                row: bad,
                col: 0,
                nrows: n,
                ncols: 1,
            });
        }
        let mut slot = vec![(true, 0usize); n];
        for (pos, &i) in fixed.iter().enumerate() {
            slot[i] = (false, pos);
        }
        let mut free = Vec::with_capacity(n - fixed.len());
        for (i, s) in slot.iter_mut().enumerate() {
            if s.0 {
                s.1 = free.len();
                free.push(i);
            }
        }
        Ok(DofPartition { n, free, fixed, slot })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Splits a square matrix into its free-free and free-fixed blocks.
    pub fn split(&self, m: &SparseMatrix) -> Result<(SparseMatrix, SparseMatrix)> {
        if m.nrows != self.n || m.ncols != self.n {
            return Err(Error::DimensionMismatch {
                what: "partition split",
                expected: self.n,
                actual: m.nrows,
            });
        }
        let nf = self.free.len();
        let nc = self.fixed.len();
        let mut ff = SparseMatrix {
            nrows: nf,
            ncols: nf,
            row_ptr: Vec::with_capacity(nf + 1),
            col_idx: Vec::new(),
            vals: Vec::new(),
        };
        let mut fc = SparseMatrix {
            nrows: nf,
            ncols: nc,
            row_ptr: Vec::with_capacity(nf + 1),
            col_idx: Vec::new(),
            vals: Vec::new(),
        };
        ff.row_ptr.push(0);
        fc.row_ptr.push(0);
        for &r in &self.free {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                let c = m.col_idx[k];
                let (is_free, pos) = self.slot[c];
                if is_free {
                    ff.col_idx.push(pos);
                    ff.vals.push(m.vals[k]);
                } else {
                    fc.col_idx.push(pos);
                    fc.vals.push(m.vals[k]);
                }
            }
            ff.row_ptr.push(ff.col_idx.len());
            fc.row_ptr.push(fc.col_idx.len());
        }
        Ok((ff, fc))
    }

    /// Extracts the free entries of a full-length vector.
    pub fn gather_free(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Rebuilds a full-length vector from free values plus fixed values;
    /// `fixed_vals` is aligned with the sorted [`Self::fixed`] list.
    pub fn scatter(&self, free_vals: &[f64], fixed_vals: &[f64]) -> Vec<f64> {
        assert_eq!(free_vals.len(), self.free.len());
        assert_eq!(fixed_vals.len(), self.fixed.len());
        let mut full = vec![0.0; self.n];
        for (v, &i) in free_vals.iter().zip(self.free.iter()) {
            full[i] = *v;
        }
        for (v, &i) in fixed_vals.iter().zip(self.fixed.iter()) {
            full[i] = *v;
        }
        full
    }
}

/// Sparse Cholesky factorization of an SPD matrix.
///
/// The symbolic analysis is retained; [`SpdSolver::refactor`] reuses it for a
/// new matrix with the identical sparsity pattern.
pub struct SpdSolver {
    matrix: SparseMatrix,
    symbolic: SymbolicLlt<usize>,
    llt: Llt<usize, f64>,
}

fn check_finite_matrix(m: &SparseMatrix) -> Result<()> {
    if m.vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix values"));
    }
    Ok(())
}

impl SpdSolver {
    /// Full symbolic + numeric factorization.
    pub fn factor(m: &SparseMatrix) -> Result<Self> {
        if m.nrows != m.ncols {
            return Err(Error::Solver(format!(
                "matrix is {}x{}, expected square",
                m.nrows, m.ncols
            )));
        }
        check_finite_matrix(m)?;
        let fm = m.to_faer_symmetric();
        let symbolic = SymbolicLlt::try_new(fm.symbolic(), Side::Lower)
            .map_err(|e| Error::Solver(format!("symbolic Cholesky failed: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), fm.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorization failed (matrix not positive definite?): {e:?}")))?;
        Ok(SpdSolver {
            matrix: m.clone(),
            symbolic,
            llt,
        })
    }

    /// Numeric refactorization for a matrix with the same pattern.
    pub fn refactor(&mut self, m: &SparseMatrix) -> Result<()> {
        if !self.matrix.has_same_pattern(m) {
            return Err(Error::Solver(
                "refactor requires an identical sparsity pattern".into(),
            ));
        }
        check_finite_matrix(m)?;
        let fm = m.to_faer_symmetric();
        self.llt = Llt::try_new_with_symbolic(self.symbolic.clone(), fm.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorization failed (matrix not positive definite?): {e:?}")))?;
        self.matrix.vals.copy_from_slice(&m.vals);
        Ok(())
    }

    /// Solves `M x = b` to relative residual ≤ [`SOLVE_REL_TOL`], applying
    /// iterative refinement if the first pass falls short.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.nrows;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                what: "solve rhs",
                expected: n,
                actual: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solve rhs"));
        }
        if n == 0 {
            return Ok(Vec::new());
        }

        let solve_once = |rhs: &[f64]| -> Vec<f64> {
            let fb = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            let fx = self.llt.solve(&fb);
            (0..n).map(|i| fx[(i, 0)]).collect()
        };

        let norm_b = norm2(b);
        let mut x = solve_once(b);
        for _ in 0..3 {
            let mut r = self.matrix.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            let rel = norm2(&r) / norm_b.max(f64::MIN_POSITIVE);
            if rel <= SOLVE_REL_TOL {
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Solver("solution contains non-finite values".into()));
                }
                return Ok(x);
            }
            let dx = solve_once(&r);
            for i in 0..n {
                x[i] += dx[i];
            }
        }
        Err(Error::Solver(format!(
            "residual above {SOLVE_REL_TOL:.0e} after iterative refinement; system may be numerically singular"
        )))
    }
}

/// One-shot SPD solve.
pub fn spd_solve(m: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SpdSolver::factor(m)?.solve(b)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_to_sparse(d: &[Vec<f64>]) -> SparseMatrix {
        let mut t = TripletList::new(d.len(), d[0].len());
        for (i, row) in d.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        compress(&t).unwrap()
    }

    #[test]
    fn compress_sums_duplicates() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        let m = compress(&t).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn compress_empty_is_zero_matrix() {
        let t = TripletList::new(3, 3);
        let m = compress(&t).unwrap();
        assert_eq!(m.nnz(), 0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn compress_keeps_unsymmetric_entry() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 1, 5.0);
        let m = compress(&t).unwrap();
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn compress_rejects_out_of_range() {
        let mut t = TripletList::new(2, 2);
        t.push(2, 0, 1.0);
        assert!(matches!(
            compress(&t),
            Err(Error::IndexOutOfBounds { .. })
        ));
    }

    #[test]
    fn solve_identity() {
        let m = dense_to_sparse(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let x = spd_solve(&m, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_diagonal_exact() {
        let m = dense_to_sparse(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = spd_solve(&m, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] - 2.0).abs() < 2e-15);
    }

    #[test]
    fn solve_recovers_known_solution() {
        // Generate-and-check: M = GᵀG + I is SPD, b = M x*.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20;
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += g[k][i] * g[k][j];
                }
                m[i][j] = acc + if i == j { 1.0 } else { 0.0 };
            }
        }
        let ms = dense_to_sparse(&m);
        let x_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b = ms.mul_vec(&x_star);
        let x = spd_solve(&ms, &b).unwrap();
        for i in 0..n {
            assert!((x[i] - x_star[i]).abs() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn solve_rejects_indefinite() {
        let m = dense_to_sparse(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(spd_solve(&m, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn solve_rejects_nan_rhs() {
        let m = dense_to_sparse(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            spd_solve(&m, &[f64::NAN, 1.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn solve_rejects_nan_matrix() {
        let m = dense_to_sparse(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            SpdSolver::factor(&m),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn transpose_mul_matches_dense() {
        let m = dense_to_sparse(&[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, 4.0]]);
        let y = m.mul_transpose_vec(&[1.0, 10.0]);
        assert_eq!(y, vec![1.0, 32.0, 40.0]);
    }

    #[test]
    fn partition_split_and_scatter() {
        // 3x3 symmetric with index 1 fixed.
        let m = dense_to_sparse(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 5.0, 2.0],
            vec![0.0, 2.0, 6.0],
        ]);
        let part = DofPartition::new(3, &[1]).unwrap();
        let (ff, fc) = part.split(&m).unwrap();
        assert_eq!(ff.nrows(), 2);
        assert_eq!(ff.get(0, 0), 4.0);
        assert_eq!(ff.get(1, 1), 6.0);
        assert_eq!(ff.get(0, 1), 0.0);
        assert_eq!(fc.get(0, 0), 1.0);
        assert_eq!(fc.get(1, 0), 2.0);
        let full = part.scatter(&[7.0, 8.0], &[9.0]);
        assert_eq!(full, vec![7.0, 9.0, 8.0]);
        assert_eq!(part.gather_free(&full), vec![7.0, 8.0]);
    }

    #[test]
    fn refactor_requires_same_pattern() {
        let m1 = dense_to_sparse(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let m2 = dense_to_sparse(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let mut s = SpdSolver::factor(&m1).unwrap();
        assert!(s.refactor(&m2).is_err());
        let m3 = dense_to_sparse(&[vec![5.0, 0.0], vec![0.0, 3.0]]);
        s.refactor(&m3).unwrap();
        let x = s.solve(&[5.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn spd_solve_residual_bound(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2usize..12);
            let g: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut d = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += g[k][i] * g[k][j];
                    }
                    d[i][j] = acc + if i == j { 0.5 } else { 0.0 };
                }
            }
            let m = dense_to_sparse(&d);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = spd_solve(&m, &b).unwrap();
            let mut r = m.mul_vec(&x);
            for i in 0..n { r[i] = b[i] - r[i]; }
            let rel = norm2(&r) / norm2(&b).max(f64::MIN_POSITIVE);
            prop_assert!(rel <= SOLVE_REL_TOL);
        }

        #[test]
        fn diagonal_solve_machine_exact(vals in proptest::collection::vec(0.5f64..100.0, 1..10)) {
            let n = vals.len();
            let mut t = TripletList::new(n, n);
            for (i, &v) in vals.iter().enumerate() {
                t.push(i, i, v);
            }
            let m = compress(&t).unwrap();
            let b: Vec<f64> = vals.iter().enumerate().map(|(i, &v)| v * (i as f64 + 1.0)).collect();
            let x = spd_solve(&m, &b).unwrap();
            for (i, xi) in x.iter().enumerate() {
                prop_assert!((xi - (i as f64 + 1.0)).abs() < 1e-12);
            }
        }
    }
}
