//! Exact linear algebra over F_q: Vandermonde matrices, Gaussian
//! elimination, rank, and row-space membership tests.
//!
//! Elimination pivots on the first nonzero entry in each column; with exact
//! field arithmetic there is nothing numerical to stabilize, and the fixed
//! rule keeps every run deterministic.

use crate::error::{Error, Result};
use crate::gf::{message_combine, mod_inv, mod_mul, mod_sub, Fq, Message};

/// A dense rows x cols matrix over F_q, row-major. Entries are stored as
/// raw residues against a single modulus; `get` rehydrates them as [`Fq`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixFq {
    rows: usize,
    cols: usize,
    modulus: u64,
    entries: Vec<u64>,
}

impl MatrixFq {
    /// All-zero matrix. `rows = 0` (and `cols = 0`) are legal; empty
    /// matrices show up as the A_0 coefficient block when rho = 0.
    pub fn zero(rows: usize, cols: usize, modulus: u64) -> Self {
        MatrixFq {
            rows,
            cols,
            modulus,
            entries: vec![0; rows * cols],
        }
    }

    /// Builds a matrix from rows of raw residues (values reduced mod q).
    pub fn from_rows(rows: &[Vec<u64>], cols: usize, modulus: u64) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in a {}-column matrix",
                    row.len(),
                    cols
                )));
            }
            entries.extend(row.iter().map(|&v| v % modulus));
        }
        Ok(MatrixFq {
            rows: rows.len(),
            cols,
            modulus,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Entry at 0-based (row, col).
    pub fn get(&self, row: usize, col: usize) -> Fq {
        assert!(row < self.rows && col < self.cols, "index out of range");
        let fp = crate::gf::FieldParams::new(self.modulus, 1).expect("modulus is prime");
        fp.elem(self.entries[row * self.cols + col])
    }

    pub(crate) fn get_raw(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.cols + col]
    }

    pub(crate) fn set_raw(&mut self, row: usize, col: usize, value: u64) {
        self.entries[row * self.cols + col] = value % self.modulus;
    }

    pub fn row_values(&self, row: usize) -> &[u64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Applies the matrix to a vector of messages: out[i] = sum_j a[i][j] * msgs[j].
    pub fn apply(&self, msgs: &[Message]) -> Result<Vec<Message>> {
        if msgs.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, got {} messages",
                self.cols,
                msgs.len()
            )));
        }
        let fp = crate::gf::FieldParams::new(self.modulus, 1).expect("modulus is prime");
        (0..self.rows)
            .map(|i| {
                let coeffs: Vec<Fq> = self.row_values(i).iter().map(|&v| fp.elem(v)).collect();
                message_combine(&coeffs, msgs)
            })
            .collect()
    }
}

/// Builds the `num_rows` x `|omegas|` Vandermonde matrix with entry
/// (i, j) = omegas[j]^(i-1) for 1-based i; the first row is all ones
/// (0^0 = 1, so omega = 0 is fine as a point).
pub fn vandermonde(omegas: &[Fq], num_rows: usize) -> Result<MatrixFq> {
    if omegas.is_empty() {
        return Err(Error::DimensionMismatch(
            "vandermonde needs at least one evaluation point".into(),
        ));
    }
    let q = omegas[0].q();
    for w in omegas {
        if w.q() != q {
            return Err(Error::FieldMismatch {
                left: q,
                right: w.q(),
            });
        }
    }
    for (i, a) in omegas.iter().enumerate() {
        for b in omegas.iter().skip(i + 1) {
            if a == b {
                return Err(Error::DuplicateEvaluationPoints);
            }
        }
    }
    if num_rows == 0 || num_rows > omegas.len() {
        return Err(Error::DimensionMismatch(format!(
            "num_rows = {} out of range 1..={}",
            num_rows,
            omegas.len()
        )));
    }
    let mut mat = MatrixFq::zero(num_rows, omegas.len(), q);
    for (j, w) in omegas.iter().enumerate() {
        mat.set_raw(0, j, 1 % q);
        for i in 1..num_rows {
            let prev = mat.get_raw(i - 1, j);
            mat.set_raw(i, j, mod_mul(prev, w.value(), q));
        }
    }
    Ok(mat)
}

/// Convenience: Vandermonde on the canonical points 0, 1, ..., n-1.
/// Requires q >= n so the points are distinct.
pub fn canonical_vandermonde(q: u64, num_points: usize, num_rows: usize) -> Result<MatrixFq> {
    if (num_points as u64) > q {
        return Err(Error::FieldTooSmall {
            q,
            needed: num_points as u64,
        });
    }
    let fp = crate::gf::FieldParams::new(q, 1)?;
    let omegas: Vec<Fq> = (0..num_points as u64).map(|v| fp.elem(v)).collect();
    vandermonde(&omegas, num_rows)
}

/// Solves mat * x = rhs for square invertible `mat`, applying exact
/// Gaussian elimination independently to each of the m message
/// coordinates. Errors with [`Error::SingularSystem`] when `mat` is not
/// invertible.
pub fn solve_square(mat: &MatrixFq, rhs: &[Message]) -> Result<Vec<Message>> {
    if mat.rows != mat.cols {
        return Err(Error::DimensionMismatch(format!(
            "solve_square needs a square matrix, got {}x{}",
            mat.rows, mat.cols
        )));
    }
    if rhs.len() != mat.rows {
        return Err(Error::DimensionMismatch(format!(
            "{} equations vs {} right-hand sides",
            mat.rows,
            rhs.len()
        )));
    }
    let n = mat.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let q = mat.modulus;
    let m = rhs[0].len();
    for msg in rhs {
        if msg.len() != m {
            return Err(Error::DimensionMismatch(
                "right-hand sides have mixed message lengths".into(),
            ));
        }
        if msg.coords()[0].q() != q {
            return Err(Error::FieldMismatch {
                left: q,
                right: msg.coords()[0].q(),
            });
        }
    }

    // Augment: n x (n + m) working matrix, rhs coordinates as extra columns.
    let width = n + m;
    let mut work = vec![0u64; n * width];
    for i in 0..n {
        for j in 0..n {
            work[i * width + j] = mat.get_raw(i, j);
        }
        for (c, coord) in rhs[i].coords().iter().enumerate() {
            work[i * width + n + c] = coord.value();
        }
    }

    // Forward elimination, first-nonzero pivot per column.
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| work[r * width + col] != 0)
            .ok_or(Error::SingularSystem)?;
        work.swap_with_slice_rows(pivot_row, col, width);
        let inv = mod_inv(work[col * width + col], q);
        for j in col..width {
            work[col * width + j] = mod_mul(work[col * width + j], inv, q);
        }
        for r in 0..n {
            if r != col && work[r * width + col] != 0 {
                let factor = work[r * width + col];
                for j in col..width {
                    let delta = mod_mul(factor, work[col * width + j], q);
                    work[r * width + j] = mod_sub(work[r * width + j], delta, q);
                }
            }
        }
    }

    let fp = crate::gf::FieldParams::new(q, m)?;
    (0..n)
        .map(|i| {
            let coords: Vec<u64> = (0..m).map(|c| work[i * width + n + c]).collect();
            fp.message(&coords)
        })
        .collect()
}

trait SwapRows {
    fn swap_with_slice_rows(&mut self, a: usize, b: usize, width: usize);
}

impl SwapRows for Vec<u64> {
    fn swap_with_slice_rows(&mut self, a: usize, b: usize, width: usize) {
        if a == b {
            return;
        }
        for j in 0..width {
            self.swap(a * width + j, b * width + j);
        }
    }
}

/// Row-echelon basis of a set of rows over F_q. Rows are reduced in place;
/// the basis keeps one pivot per column and supports membership tests.
#[derive(Debug, Clone)]
pub(crate) struct EchelonBasis {
    cols: usize,
    modulus: u64,
    /// (pivot column, normalized row) pairs, pivot columns strictly increasing.
    rows: Vec<(usize, Vec<u64>)>,
}

impl EchelonBasis {
    pub(crate) fn new(cols: usize, modulus: u64) -> Self {
        EchelonBasis {
            cols,
            modulus,
            rows: Vec::new(),
        }
    }

    /// Reduces `row` against the basis; returns the residual.
    fn reduce(&self, mut row: Vec<u64>) -> Vec<u64> {
        let q = self.modulus;
        for (pivot, basis_row) in &self.rows {
            let coeff = row[*pivot];
            if coeff != 0 {
                for j in *pivot..self.cols {
                    let delta = mod_mul(coeff, basis_row[j], q);
                    row[j] = mod_sub(row[j], delta, q);
                }
            }
        }
        row
    }

    /// Inserts a row, extending the basis if it is independent.
    /// Returns true when the rank grew.
    pub(crate) fn insert(&mut self, row: Vec<u64>) -> bool {
        let q = self.modulus;
        let row = self.reduce(row);
        match row.iter().position(|&v| v != 0) {
            None => false,
            Some(pivot) => {
                let inv = mod_inv(row[pivot], q);
                let norm: Vec<u64> = row.iter().map(|&v| mod_mul(v, inv, q)).collect();
                // Back-substitute into existing rows to keep reduction one-pass.
                for (_, existing) in self.rows.iter_mut() {
                    let coeff = existing[pivot];
                    if coeff != 0 {
                        for j in 0..self.cols {
                            let delta = mod_mul(coeff, norm[j], q);
                            existing[j] = mod_sub(existing[j], delta, q);
                        }
                    }
                }
                let pos = self
                    .rows
                    .iter()
                    .position(|(p, _)| *p > pivot)
                    .unwrap_or(self.rows.len());
                self.rows.insert(pos, (pivot, norm));
                true
            }
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Is `row` in the span of the basis rows?
    pub(crate) fn contains(&self, row: Vec<u64>) -> bool {
        self.reduce(row).iter().all(|&v| v == 0)
    }
}

/// Rank of `mat` over F_q.
pub fn rank(mat: &MatrixFq) -> usize {
    let mut basis = EchelonBasis::new(mat.cols, mat.modulus);
    for i in 0..mat.rows {
        basis.insert(mat.row_values(i).to_vec());
    }
    basis.rank()
}

/// Decides whether every unit vector e_j, j in `targets`, lies in the row
/// space of `mat` augmented with the unit vectors {e_i : i in `known`}.
///
/// Column indices are 1-based, matching message indexing everywhere else
/// in the crate. For a linear protocol this is exactly the recoverability
/// condition "X_targets is determined by the answer plus X_known".
///
/// The augmented row set is reduced to echelon form once and each target
/// is tested against it; the audits call this on many (known, targets)
/// pairs per matrix.
pub fn units_in_span(
    mat: &MatrixFq,
    known: &std::collections::BTreeSet<usize>,
    targets: &std::collections::BTreeSet<usize>,
) -> Result<bool> {
    for &idx in known.iter().chain(targets.iter()) {
        if idx == 0 || idx > mat.cols {
            return Err(Error::DimensionMismatch(format!(
                "column index {} out of range 1..={}",
                idx, mat.cols
            )));
        }
    }
    let mut basis = EchelonBasis::new(mat.cols, mat.modulus);
    for i in 0..mat.rows {
        basis.insert(mat.row_values(i).to_vec());
    }
    for &idx in known {
        let mut unit = vec![0u64; mat.cols];
        unit[idx - 1] = 1;
        basis.insert(unit);
    }
    for &idx in targets {
        let mut unit = vec![0u64; mat.cols];
        unit[idx - 1] = 1;
        if !basis.contains(unit) {
            return Ok(false);
        }
    }
    Ok(true)
}
