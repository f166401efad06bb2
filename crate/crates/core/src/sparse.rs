//! Triplet assembly with elimination of prescribed dofs, compressed-row
//! matrices, and a sparse LU wrapper.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::prelude::Solve;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use faer::{Conj, Par, Side};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Reference to one global unknown as seen by a local element matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DofRef {
    Free(usize),
    Fixed(f64),
}

/// A linear system under assembly: coefficient triplets plus right-hand
/// side entries. Entries coupling a free row to a fixed column are moved
/// to the right-hand side; rows of fixed dofs are dropped.
///
/// Both lists are summed in insertion order, so merging per-cell
/// contributions in cell order gives bit-reproducible systems.
#[derive(Clone, Debug, Default)]
pub struct SparseSystem {
    pub dim: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs_entries: Vec<(usize, f64)>,
    pub symmetric: bool,
}

impl SparseSystem {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for &(i, v) in &self.rhs_entries {
            b[i] += v;
        }
        b
    }

    pub fn add(&mut self, row: DofRef, col: DofRef, val: f64) {
        if val == 0.0 {
            return;
        }
        if let DofRef::Free(i) = row {
            match col {
                DofRef::Free(j) => self.triplets.push((i, j, val)),
                DofRef::Fixed(v) => {
                    if v != 0.0 {
                        self.rhs_entries.push((i, -val * v));
                    }
                }
            }
        }
    }

    pub fn add_rhs(&mut self, row: DofRef, val: f64) {
        if let DofRef::Free(i) = row {
            if val != 0.0 {
                self.rhs_entries.push((i, val));
            }
        }
    }

    /// Scatter a dense local matrix.
    pub fn add_local(&mut self, rows: &[DofRef], cols: &[DofRef], local: &DMatrix<f64>) {
        for (a, &r) in rows.iter().enumerate() {
            if matches!(r, DofRef::Fixed(_)) {
                continue;
            }
            for (b, &c) in cols.iter().enumerate() {
                self.add(r, c, local[(a, b)]);
            }
        }
    }

    /// Scatter a dense local matrix and its transpose (for off-diagonal
    /// blocks of symmetric saddle-point systems).
    pub fn add_local_with_transpose(&mut self, rows: &[DofRef], cols: &[DofRef], local: &DMatrix<f64>) {
        self.add_local(rows, cols, local);
        self.add_local(cols, rows, &local.transpose());
    }

    pub fn add_local_vector(&mut self, rows: &[DofRef], local: &[f64]) {
        for (&r, &v) in rows.iter().zip(local) {
            self.add_rhs(r, v);
        }
    }

    pub fn append(&mut self, other: SparseSystem) {
        assert_eq!(self.dim, other.dim);
        self.triplets.extend(other.triplets);
        self.rhs_entries.extend(other.rhs_entries);
    }

    pub fn matrix(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim, self.dim, &self.triplets)
    }

    /// Concatenate per-entity contributions in the given order, so the
    /// result does not depend on how the parts were computed.
    pub fn merge(dim: usize, parts: Vec<SparseSystem>) -> SparseSystem {
        let mut out = SparseSystem::new(dim);
        out.triplets.reserve(parts.iter().map(|p| p.triplets.len()).sum());
        for p in parts {
            out.append(p);
        }
        out
    }

    /// Matrix and right-hand side, releasing the triplet storage.
    pub fn into_parts(self) -> (CsrMatrix, Vec<f64>) {
        let b = self.rhs();
        (CsrMatrix::from_triplet_vec(self.dim, self.dim, self.triplets), b)
    }
}

/// Compressed sparse row matrix with duplicate entries summed.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut pos = counts.clone();
        for &(i, j, v) in triplets {
            cols[pos[i]] = j;
            vals[pos[i]] = v;
            pos[i] += 1;
        }
        Self::compress(nrows, ncols, &counts, cols, vals)
    }

    /// Compress row-bucketed entries in place: sort each row by column and
    /// sum duplicates.
    fn compress(nrows: usize, ncols: usize, counts: &[usize], mut cols: Vec<usize>, mut vals: Vec<f64>) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut out = 0;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_unstable_by_key(|e| e.0);
            let start = out;
            for &(j, v) in &row {
                if out > start && cols[out - 1] == j {
                    vals[out - 1] += v;
                } else {
                    cols[out] = j;
                    vals[out] = v;
                    out += 1;
                }
            }
            row_ptr.push(out);
        }
        cols.truncate(out);
        cols.shrink_to_fit();
        vals.truncate(out);
        vals.shrink_to_fit();
        Self { nrows, ncols, row_ptr, col_idx: cols, values: vals }
    }

    /// Build from triplets, consuming them to keep the peak footprint low.
    pub fn from_triplet_vec(nrows: usize, ncols: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, _, _) in &triplets {
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut pos = counts.clone();
        for (i, j, v) in triplets {
            cols[pos[i]] = j;
            vals[pos[i]] = v;
            pos[i] += 1;
        }
        Self::compress(nrows, ncols, &counts, cols, vals)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// Row vector `1^T A`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                s[j] += v;
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            t.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        CsrMatrix::from_triplet_vec(self.ncols, self.nrows, t)
    }

    /// Symmetry up to `rel_tol * max |a_ij|`, which absorbs summation-order
    /// rounding in assembly.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        self.nrows == self.ncols && (0..self.nrows).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// `a * A + b * B` for matrices of equal shape.
    pub fn linear_combination(a: f64, lhs: &CsrMatrix, b: f64, rhs: &CsrMatrix) -> CsrMatrix {
        assert_eq!((lhs.nrows, lhs.ncols), (rhs.nrows, rhs.ncols));
        let mut t = Vec::with_capacity(lhs.nnz() + rhs.nnz());
        for i in 0..lhs.nrows {
            t.extend(lhs.row(i).map(|(j, v)| (i, j, a * v)));
            t.extend(rhs.row(i).map(|(j, v)| (i, j, b * v)));
        }
        CsrMatrix::from_triplets(lhs.nrows, lhs.ncols, &t)
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// Refinement stops earlier once a sweep fails to halve the residual; the cap
// only bounds slow but steady convergence from a weakly pivoted factor.
const MAX_REFINEMENTS: usize = 20;

/// Iterative refinement of `A x = b` around an approximate inverse, run
/// until the residual stops halving. Fails unless `|A x - b| <= tol |b|`.
fn refine(matrix: &CsrMatrix, b: &[f64], tol: f64, raw_solve: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    let bnorm = norm2(b);
    let mut x = raw_solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("singular matrix (non-finite solution)".into()));
    }
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = matrix.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut r = residual(&x);
    let mut res = norm2(&r);
    for _ in 0..MAX_REFINEMENTS {
        // already at round-off level: another correction cannot help
        if res <= 4.0 * f64::EPSILON * bnorm {
            break;
        }
        let dx = raw_solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let rt = residual(&trial);
        let rest = norm2(&rt);
        if !(rest < 0.5 * res) {
            if rest < res {
                x = trial;
                res = rest;
            }
            break;
        }
        x = trial;
        r = rt;
        res = rest;
    }
    if res <= tol * bnorm {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "residual {res:.3e} exceeds {tol:.1e} x |b| = {:.3e} (matrix likely singular)",
            tol * bnorm
        )))
    }
}

/// Sparse LU factorization with partial pivoting.
pub struct LuSolver {
    matrix: CsrMatrix,
    /// Factorization of the transpose (the row-compressed arrays read as
    /// column-compressed).
    lu_t: Lu<usize, f64>,
}

impl LuSolver {
    pub fn factor(matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::Solver("matrix is not square".into()));
        }
        if matrix.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("matrix has non-finite entries".into()));
        }
        let n = matrix.nrows;
        let symbolic = SymbolicSparseColMatRef::new_checked(n, n, &matrix.row_ptr, None, &matrix.col_idx);
        let at = SparseColMatRef::new(symbolic, &matrix.values);
        let lu_t = at.sp_lu().map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(Self { matrix, lu_t })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Solve without the residual check.
    pub fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu_t.solve_transpose_in_place(m.as_mut());
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }

    /// Solve `A x = b` with iterative refinement; fails unless
    /// `|A x - b| <= tol |b|`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        refine(&self.matrix, b, tol, |r| self.solve_unchecked(r))
    }
}

/// Sparse symmetric indefinite factorization: fill-reducing minimum-degree
/// ordering and supernodal `L B L^T` with Bunch-Kaufman pivoting inside
/// supernodes. Only the lower triangle is read.
pub struct SymmetricSolver {
    matrix: CsrMatrix,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
}

impl SymmetricSolver {
    pub fn factor(matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::Solver("matrix is not square".into()));
        }
        if matrix.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("matrix has non-finite entries".into()));
        }
        let n = matrix.nrows;
        // a symmetric matrix is its own transpose, so CSR arrays read as CSC
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &matrix.row_ptr, None, &matrix.col_idx);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let symbolic = factorize_symbolic_cholesky(pattern, Side::Lower, SymmetricOrdering::Amd, params)
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut perm_fwd = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let par = Par::Seq;
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()));
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut perm_fwd,
            &mut perm_inv,
            SparseColMatRef::new(pattern, &matrix.values),
            Side::Lower,
            par,
            MemStack::new(&mut mem),
            Default::default(),
        );
        if values.iter().chain(&subdiag).any(|v| !v.is_finite()) {
            return Err(Error::Solver("singular matrix (non-finite factor)".into()));
        }
        Ok(Self { matrix, symbolic, values, subdiag, perm_fwd, perm_inv })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let perm = PermRef::new_checked(&self.perm_fwd, &self.perm_inv, n);
        let lblt = IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        lblt.solve_in_place_with_conj(Conj::No, m.as_mut(), Par::Seq, MemStack::new(&mut mem));
        (0..n).map(|i| m[(i, 0)]).collect()
    }

    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        refine(&self.matrix, b, tol, |r| self.solve_unchecked(r))
    }
}

/// Factorization of the condensed system, chosen by symmetry.
enum GlobalSolver {
    Symmetric(SymmetricSolver),
    General(LuSolver),
}

impl GlobalSolver {
    fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Symmetric(s) => s.solve_unchecked(b),
            Self::General(s) => s.solve_unchecked(b),
        }
    }
}

/// One group of unknowns eliminated locally (for instance the cell dofs of
/// one element).
struct CondensedBlock {
    idx: Vec<usize>,
    /// Global (non-eliminated) unknowns coupled to this block, in reduced
    /// numbering.
    gcols: Vec<usize>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// `L^{-1} C` with `C = A[idx, gcols]`.
    linv_c: DMatrix<f64>,
    /// `A[gcols, idx]`.
    ct: DMatrix<f64>,
}

/// Direct solver that eliminates block-local unknowns (static
/// condensation) and factors the Schur complement on the rest.
///
/// Blocks must not couple to each other directly.
pub struct CondensedSolver {
    matrix: CsrMatrix,
    blocks: Vec<CondensedBlock>,
    globals: Vec<usize>,
    schur: GlobalSolver,
}

const NONE: usize = usize::MAX;

impl CondensedSolver {
    pub fn factor(matrix: CsrMatrix, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = matrix.nrows;
        if matrix.ncols != n {
            return Err(Error::Solver("matrix is not square".into()));
        }
        let mut block_of = vec![NONE; n];
        for (b, idx) in blocks.iter().enumerate() {
            for &i in idx {
                if block_of[i] != NONE {
                    return Err(Error::Solver(format!("unknown {i} assigned to two blocks")));
                }
                block_of[i] = b;
            }
        }
        let mut global_of = vec![NONE; n];
        let mut globals = Vec::new();
        for i in 0..n {
            if block_of[i] == NONE {
                global_of[i] = globals.len();
                globals.push(i);
            }
        }
        // near-symmetric input is condensed as symmetric; refinement against
        // the true matrix removes the difference
        let symmetric = matrix.is_symmetric(1e-14);
        let transpose = if symmetric { None } else { Some(matrix.transpose()) };
        let trans = transpose.as_ref().unwrap_or(&matrix);

        let blocks: Vec<CondensedBlock> = blocks
            .into_par_iter()
            .enumerate()
            .map(|(b, idx)| -> Result<_> {
                let nb = idx.len();
                let mut pos = std::collections::HashMap::with_capacity(nb);
                for (a, &i) in idx.iter().enumerate() {
                    pos.insert(i, a);
                }
                let mut gcols: Vec<usize> = Vec::new();
                for &i in &idx {
                    for (j, _) in matrix.row(i).chain(trans.row(i)) {
                        if global_of[j] != NONE {
                            gcols.push(global_of[j]);
                        } else if block_of[j] != b {
                            return Err(Error::Solver(format!("blocks {b} and {} are coupled", block_of[j])));
                        }
                    }
                }
                gcols.sort_unstable();
                gcols.dedup();
                let ng = gcols.len();
                let gpos = |g: usize| gcols.binary_search(&g).unwrap();
                let mut l = DMatrix::zeros(nb, nb);
                let mut c = DMatrix::zeros(nb, ng);
                let mut ct = DMatrix::zeros(ng, nb);
                for (a, &i) in idx.iter().enumerate() {
                    for (j, v) in matrix.row(i) {
                        if global_of[j] != NONE {
                            c[(a, gpos(global_of[j]))] += v;
                        } else {
                            l[(a, pos[&j])] += v;
                        }
                    }
                    for (j, v) in trans.row(i) {
                        if global_of[j] != NONE {
                            ct[(gpos(global_of[j]), a)] += v;
                        }
                    }
                }
                let lu = l.lu();
                if lu.solve(&DMatrix::<f64>::identity(nb, nb)).is_none() {
                    return Err(Error::Solver(format!("local block {b} is singular")));
                }
                let linv_c = lu
                    .solve(&c)
                    .filter(|m: &DMatrix<f64>| m.iter().all(|v| v.is_finite()))
                    .ok_or_else(|| Error::Solver(format!("local block {b} is singular")))?;
                Ok(CondensedBlock { idx, gcols, lu, linv_c, ct })
            })
            .collect::<Result<_>>()?;
        drop(transpose);

        // Schur pattern: A_gg plus a dense coupling among each block's globals.
        let ng = globals.len();
        let mut blocks_of: Vec<Vec<u32>> = vec![Vec::new(); ng];
        for (b, blk) in blocks.iter().enumerate() {
            for &g in &blk.gcols {
                blocks_of[g].push(b as u32);
            }
        }
        let mut row_ptr = Vec::with_capacity(ng + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut row: Vec<usize> = Vec::new();
        for (g, &i) in globals.iter().enumerate() {
            row.clear();
            row.extend(matrix.row(i).filter_map(|(j, _)| (global_of[j] != NONE).then_some(global_of[j])));
            for &b in &blocks_of[g] {
                row.extend_from_slice(&blocks[b as usize].gcols);
            }
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        drop(blocks_of);
        let mut values = vec![0.0; col_idx.len()];
        let slot = |i: usize, j: usize| row_ptr[i] + col_idx[row_ptr[i]..row_ptr[i + 1]].binary_search(&j).unwrap();
        for (g, &i) in globals.iter().enumerate() {
            for (j, v) in matrix.row(i) {
                if global_of[j] != NONE {
                    values[slot(g, global_of[j])] += v;
                }
            }
        }
        for blk in &blocks {
            let s = &blk.ct * &blk.linv_c;
            for (a, &ga) in blk.gcols.iter().enumerate() {
                for (bb, &gb) in blk.gcols.iter().enumerate() {
                    values[slot(ga, gb)] -= s[(a, bb)];
                }
            }
        }
        let schur = CsrMatrix { nrows: ng, ncols: ng, row_ptr, col_idx, values };
        let schur = if symmetric {
            GlobalSolver::Symmetric(SymmetricSolver::factor(schur)?)
        } else {
            GlobalSolver::General(LuSolver::factor(schur)?)
        };
        Ok(Self { matrix, blocks, globals, schur })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Number of unknowns in the condensed system.
    pub fn reduced_dim(&self) -> usize {
        self.globals.len()
    }

    pub fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let local: Vec<nalgebra::DVector<f64>> = self
            .blocks
            .par_iter()
            .map(|blk| {
                let bk = nalgebra::DVector::from_iterator(blk.idx.len(), blk.idx.iter().map(|&i| b[i]));
                blk.lu.solve(&bk).expect("checked at factorization")
            })
            .collect();
        let mut rg: Vec<f64> = self.globals.iter().map(|&i| b[i]).collect();
        for (blk, lb) in self.blocks.iter().zip(&local) {
            let t = &blk.ct * lb;
            for (a, &g) in blk.gcols.iter().enumerate() {
                rg[g] -= t[a];
            }
        }
        let y = self.schur.solve_unchecked(&rg);
        let mut x = vec![0.0; b.len()];
        for (g, &i) in self.globals.iter().enumerate() {
            x[i] = y[g];
        }
        for (blk, lb) in self.blocks.iter().zip(local) {
            let yk = nalgebra::DVector::from_iterator(blk.gcols.len(), blk.gcols.iter().map(|&g| y[g]));
            let xk = lb - &blk.linv_c * yk;
            for (a, &i) in blk.idx.iter().enumerate() {
                x[i] = xk[a];
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        refine(&self.matrix, b, tol, |r| self.solve_unchecked(r))
    }
}
