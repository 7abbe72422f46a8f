//! Dense matrices over a [`Field`], with the exact-arithmetic operations the
//! rest of the crate is built on: reduced row echelon form with a recorded
//! row transform, rank factorization through the corner matrix J, canonical
//! subspace keys, and lexicographic enumeration.
//!
//! A `Matrix` does not carry its field; operations that need arithmetic take
//! `&Field`. Matrices with zero rows or zero columns are first-class values:
//! the 0 x 0 matrix is the identity of GL_0 and products through a zero inner
//! dimension give zero matrices, which is exactly what degenerate block
//! decompositions need.

use crate::error::{Error, Result};
use crate::field::{Fe, Field};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    ents: Vec<Fe>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(i, j))?;
            }
        }
        write!(f, "]{}x{}", self.rows, self.cols)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, ents: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// The rows x cols matrix with the r x r identity in the top-left corner
    /// and zeros elsewhere.
    pub fn j_rect(rows: usize, cols: usize, r: usize) -> Matrix {
        debug_assert!(r <= rows.min(cols));
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..r {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(f: &Field, rows: Vec<Vec<u64>>) -> Result<Matrix> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::zeros(nr, nc);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != nc {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, f.elem(v)?);
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Fe) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Fe {
        self.ents[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Fe) {
        self.ents[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.ents.iter().all(|&e| e == 0)
    }

    pub fn is_idempotent(&self, f: &Field) -> bool {
        self.rows == self.cols && self.mul(f, self).as_ref() == Ok(self)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn mul(&self, f: &Field, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.at(i, j), f.mul(a, other.at(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn hcat(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch("hcat row counts differ".into()));
        }
        Ok(Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.at(i, j)
            } else {
                other.at(i, j - self.cols)
            }
        }))
    }

    pub fn vcat(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch("vcat column counts differ".into()));
        }
        Ok(Matrix::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.at(i, j)
            } else {
                other.at(i - self.rows, j)
            }
        }))
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        debug_assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols);
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self.at(r0 + i, c0 + j))
    }

    /// Split into the four blocks around the top-left r x r corner:
    /// (A, B, C, D) with A of shape r x r.
    pub fn block_split(&self, r: usize) -> (Matrix, Matrix, Matrix, Matrix) {
        (
            self.submatrix(0, r, 0, r),
            self.submatrix(0, r, r, self.cols),
            self.submatrix(r, self.rows, 0, r),
            self.submatrix(r, self.rows, r, self.cols),
        )
    }

    /// Entries in row-major order as bytes. Shape-equal matrices compare the
    /// same way under this key as under `Ord`.
    pub fn key_bytes(&self) -> Vec<u8> {
        self.ents.iter().map(|&e| e as u8).collect()
    }

    /// Row-major base-q integer, first entry most significant. Agrees with
    /// the enumeration order of `enumerate_matrices`.
    pub fn canonical_index(&self, q: u16) -> u128 {
        let mut idx: u128 = 0;
        for &e in &self.ents {
            idx = idx * q as u128 + e as u128;
        }
        idx
    }

    pub fn from_canonical_index(rows: usize, cols: usize, q: u16, mut idx: u128) -> Matrix {
        let mut ents = vec![0; rows * cols];
        for e in ents.iter_mut().rev() {
            *e = (idx % q as u128) as Fe;
            idx /= q as u128;
        }
        Matrix { rows, cols, ents }
    }

    pub fn rref(&self, f: &Field) -> Rref {
        let mut r = self.clone();
        let mut t = Matrix::identity(self.rows);
        let mut pivots = Vec::new();
        let mut pr = 0usize;
        for c in 0..self.cols {
            if pr == self.rows {
                break;
            }
            let Some(pivot_row) = (pr..self.rows).find(|&i| r.at(i, c) != 0) else {
                continue;
            };
            r.swap_rows(pr, pivot_row);
            t.swap_rows(pr, pivot_row);
            let scale = f.inv(r.at(pr, c)).unwrap();
            r.scale_row(f, pr, scale);
            t.scale_row(f, pr, scale);
            for i in 0..self.rows {
                if i != pr && r.at(i, c) != 0 {
                    let factor = f.neg(r.at(i, c));
                    r.add_scaled_row(f, i, pr, factor);
                    t.add_scaled_row(f, i, pr, factor);
                }
            }
            pivots.push(c);
            pr += 1;
        }
        Rref { r, t, pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let tmp = self.at(a, j);
            self.set(a, j, self.at(b, j));
            self.set(b, j, tmp);
        }
    }

    fn scale_row(&mut self, f: &Field, i: usize, s: Fe) {
        for j in 0..self.cols {
            self.set(i, j, f.mul(self.at(i, j), s));
        }
    }

    /// row[i] += s * row[src]
    fn add_scaled_row(&mut self, f: &Field, i: usize, src: usize, s: Fe) {
        for j in 0..self.cols {
            let v = f.add(self.at(i, j), f.mul(s, self.at(src, j)));
            self.set(i, j, v);
        }
    }

    pub fn rank(&self, f: &Field) -> usize {
        self.rref(f).pivots.len()
    }

    pub fn inverse(&self, f: &Field) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::NotInvertible);
        }
        let rref = self.rref(f);
        if rref.pivots.len() != self.rows {
            return Err(Error::NotInvertible);
        }
        Ok(rref.t)
    }

    pub fn is_invertible(&self, f: &Field) -> bool {
        self.rows == self.cols && self.rank(f) == self.rows
    }

    /// Canonical key for the row space: the nonzero rows of the reduced
    /// echelon form. Two matrices have equal keys iff their row spaces agree.
    pub fn row_space_key(&self, f: &Field) -> SubspaceKey {
        let rref = self.rref(f);
        let dim = rref.pivots.len();
        SubspaceKey {
            ambient: self.cols as u32,
            dim: dim as u32,
            basis: rref.r.submatrix(0, dim, 0, self.cols).ents,
        }
    }

    pub fn col_space_key(&self, f: &Field) -> SubspaceKey {
        self.transpose().row_space_key(f)
    }

    /// Row(self) contained in Row(other)?
    pub fn row_space_le(&self, f: &Field, other: &Matrix) -> bool {
        debug_assert_eq!(self.cols, other.cols);
        let stacked = other.vcat(self).unwrap();
        stacked.rank(f) == other.rank(f)
    }

    pub fn col_space_le(&self, f: &Field, other: &Matrix) -> bool {
        self.transpose().row_space_le(f, &other.transpose())
    }

    /// Rank factorization through the corner matrix: self = U J V with
    /// U, V invertible and J the corner matrix of the same shape carrying
    /// rank(self).
    pub fn rank_normal_form(&self, f: &Field) -> Rnf {
        let (a, b) = (self.rows, self.cols);
        let rref = self.rref(f);
        let r = rref.pivots.len();
        // Column permutation moving pivot columns to the front.
        let mut order: Vec<usize> = rref.pivots.clone();
        order.extend((0..b).filter(|c| !rref.pivots.contains(c)));
        let mut p = Matrix::zeros(b, b);
        for (j, &src) in order.iter().enumerate() {
            p.set(src, j, 1);
        }
        let rp = rref.r.mul(f, &p).unwrap();
        // rp = [I_r B; 0 0]; clearing B with a unitriangular factor gives J.
        let bblock = rp.submatrix(0, r, r, b);
        let mut e = Matrix::identity(b);
        let mut e_inv = Matrix::identity(b);
        for i in 0..r {
            for j in 0..b - r {
                e.set(i, r + j, f.neg(bblock.at(i, j)));
                e_inv.set(i, r + j, bblock.at(i, j));
            }
        }
        // self = T^-1 J (P E)^-1
        let u = rref.t.inverse(f).unwrap();
        let s = p.mul(f, &e).unwrap();
        let v = e_inv.mul(f, &p.transpose()).unwrap();
        debug_assert_eq!(
            u.mul(f, &Matrix::j_rect(a, b, r)).unwrap().mul(f, &v).unwrap(),
            *self
        );
        Rnf { r, u, v, u_inv: rref.t, v_inv: s }
    }

    /// A generalized inverse: returns G with self * G * self = self and
    /// G * self * G = G. Deterministic, via the rank factorization.
    pub fn inner_inverse(&self, f: &Field) -> Matrix {
        let rnf = self.rank_normal_form(f);
        let j = Matrix::j_rect(self.cols, self.rows, rnf.r);
        rnf.v_inv.mul(f, &j).unwrap().mul(f, &rnf.u_inv).unwrap()
    }

    /// Basis of the right null space {v : self v = 0}, one row per basis
    /// vector, in the order of the free columns of the echelon form.
    pub fn kernel_basis(&self, f: &Field) -> Matrix {
        let rref = self.rref(f);
        let free: Vec<usize> = (0..self.cols).filter(|c| !rref.pivots.contains(c)).collect();
        let mut basis = Matrix::zeros(free.len(), self.cols);
        for (bi, &j) in free.iter().enumerate() {
            basis.set(bi, j, 1);
            for (pi, &p) in rref.pivots.iter().enumerate() {
                basis.set(bi, p, f.neg(rref.r.at(pi, j)));
            }
        }
        basis
    }

    /// Least solution of self * x = rhs, solved column by column with free
    /// variables pinned to zero. None when inconsistent.
    pub fn solve_right(&self, f: &Field, rhs: &Matrix) -> Option<Matrix> {
        if rhs.rows != self.rows {
            return None;
        }
        let rref = self.rref(f);
        let b = rref.t.mul(f, rhs).unwrap();
        // consistency: rows of the echelon form below the rank must be zero
        for i in rref.pivots.len()..self.rows {
            for j in 0..rhs.cols {
                if b.at(i, j) != 0 {
                    return None;
                }
            }
        }
        let mut x = Matrix::zeros(self.cols, rhs.cols);
        for (pi, &p) in rref.pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(p, j, b.at(pi, j));
            }
        }
        debug_assert_eq!(self.mul(f, &x).unwrap(), *rhs);
        Some(x)
    }

    /// Least solution of x * self = rhs; None when inconsistent.
    pub fn solve_left(&self, f: &Field, rhs: &Matrix) -> Option<Matrix> {
        Some(self.transpose().solve_right(f, &rhs.transpose())?.transpose())
    }
}

/// Reduced row echelon form `r` of the input X, with the invertible row
/// transform `t` satisfying r = t X, and the pivot column indices.
pub struct Rref {
    pub r: Matrix,
    pub t: Matrix,
    pub pivots: Vec<usize>,
}

/// Rank factorization X = u J v, with recorded inverses.
pub struct Rnf {
    pub r: usize,
    pub u: Matrix,
    pub v: Matrix,
    pub u_inv: Matrix,
    pub v_inv: Matrix,
}

/// Canonical name for a subspace of GF(q)^ambient: the reduced echelon basis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SubspaceKey {
    pub ambient: u32,
    pub dim: u32,
    basis: Vec<Fe>,
}

impl SubspaceKey {
    /// Compact printable form: dim, then the basis entries row-major.
    pub fn label(&self) -> String {
        let digits: Vec<String> = self.basis.iter().map(|e| e.to_string()).collect();
        format!("{}:{}", self.dim, digits.join(""))
    }
}

/// Assemble the m x n block matrix
/// [ A    A N   ]
/// [ M A  M A N ]
/// from M of shape (m-r) x r, A of shape r x r, N of shape r x (n-r).
pub fn man_compose(
    f: &Field,
    m: usize,
    n: usize,
    mm: &Matrix,
    a: &Matrix,
    nn: &Matrix,
) -> Result<Matrix> {
    let r = a.rows();
    if a.cols() != r || mm.cols() != r || nn.rows() != r {
        return Err(Error::DimensionMismatch("block shapes disagree".into()));
    }
    if mm.rows() != m - r || nn.cols() != n - r {
        return Err(Error::DimensionMismatch("block shapes disagree".into()));
    }
    let an = a.mul(f, nn)?;
    let ma = mm.mul(f, a)?;
    let man = ma.mul(f, nn)?;
    let top = a.hcat(&an)?;
    let bottom = ma.hcat(&man)?;
    top.vcat(&bottom)
}

/// All rows x cols matrices over f in ascending canonical order. Errors if
/// there are more than `budget` of them.
pub fn enumerate_matrices(
    f: &Field,
    rows: usize,
    cols: usize,
    budget: u64,
) -> Result<MatrixEnum> {
    let count = count_matrices(f.q, rows, cols);
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: count.min(u64::MAX as u128) as u64,
            budget,
        });
    }
    Ok(MatrixEnum { q: f.q, next: Some(Matrix::zeros(rows, cols)) })
}

pub fn count_matrices(q: u16, rows: usize, cols: usize) -> u128 {
    let mut count: u128 = 1;
    for _ in 0..rows * cols {
        count = count.saturating_mul(q as u128);
    }
    count
}

pub struct MatrixEnum {
    q: u16,
    next: Option<Matrix>,
}

impl Iterator for MatrixEnum {
    type Item = Matrix;

    fn next(&mut self) -> Option<Matrix> {
        let cur = self.next.take()?;
        // odometer increment, last entry least significant
        let mut succ = cur.clone();
        let mut done = true;
        for e in succ.ents.iter_mut().rev() {
            if *e + 1 < self.q {
                *e += 1;
                done = false;
                break;
            }
            *e = 0;
        }
        // a 0 x n or m x 0 matrix has one value: its odometer is empty
        if !succ.ents.is_empty() && !done {
            self.next = Some(succ);
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u16) -> Field {
        match q {
            4 => Field::new(2, 2, None).unwrap(),
            8 => Field::new(2, 3, None).unwrap(),
            9 => Field::new(3, 2, None).unwrap(),
            p => Field::prime(p).unwrap(),
        }
    }

    #[test]
    fn product_against_corner_matrix() {
        let f = gf(3);
        let x = Matrix::from_rows(&f, vec![vec![1, 0, 0], vec![0, 0, 0]]).unwrap();
        let j = Matrix::j_rect(3, 2, 1);
        let prod = x.mul(&f, &j).unwrap();
        assert_eq!(prod, Matrix::from_rows(&f, vec![vec![1, 0], vec![0, 0]]).unwrap());
        assert!(x.mul(&f, &x).is_err());
    }

    #[test]
    fn rref_and_rank() {
        let f = gf(2);
        let x = Matrix::from_rows(&f, vec![vec![1, 1, 0], vec![1, 1, 1], vec![0, 0, 1]]).unwrap();
        let rref = x.rref(&f);
        assert_eq!(rref.pivots, vec![0, 2]);
        assert_eq!(rref.r.mul(&f, &Matrix::identity(3)).unwrap(), rref.r);
        assert_eq!(rref.t.mul(&f, &x).unwrap(), rref.r);
        assert_eq!(x.rank(&f), 2);
    }

    #[test]
    fn rnf_exhaustive_2x3_gf2() {
        let f = gf(2);
        for x in enumerate_matrices(&f, 2, 3, 1 << 20).unwrap() {
            let rnf = x.rank_normal_form(&f);
            assert_eq!(rnf.r, x.rank(&f));
            assert!(rnf.u.is_invertible(&f));
            assert!(rnf.v.is_invertible(&f));
            assert_eq!(rnf.u.mul(&f, &rnf.u_inv).unwrap(), Matrix::identity(2));
            assert_eq!(rnf.v_inv.mul(&f, &rnf.v).unwrap(), Matrix::identity(3));
            let j = Matrix::j_rect(2, 3, rnf.r);
            assert_eq!(rnf.u.mul(&f, &j).unwrap().mul(&f, &rnf.v).unwrap(), x);
        }
    }

    #[test]
    fn inner_inverse_laws_exhaustive() {
        for q in [2, 3] {
            let f = gf(q);
            for x in enumerate_matrices(&f, 2, 2, 1 << 20).unwrap() {
                let g = x.inner_inverse(&f);
                let xgx = x.mul(&f, &g).unwrap().mul(&f, &x).unwrap();
                let gxg = g.mul(&f, &x).unwrap().mul(&f, &g).unwrap();
                assert_eq!(xgx, x);
                assert_eq!(gxg, g);
            }
        }
    }

    #[test]
    fn subspace_keys_name_spans() {
        let f = gf(2);
        // brute row-space equality: same set of spanned vectors
        let span = |x: &Matrix| -> std::collections::BTreeSet<Vec<Fe>> {
            let mut vs = std::collections::BTreeSet::new();
            for c in enumerate_matrices(&f, 1, x.rows(), 1 << 20).unwrap() {
                vs.insert(c.mul(&f, x).unwrap().ents);
            }
            vs
        };
        let all: Vec<Matrix> = enumerate_matrices(&f, 2, 3, 1 << 20).unwrap().collect();
        for x in &all {
            for y in &all {
                let same_key = x.row_space_key(&f) == y.row_space_key(&f);
                assert_eq!(same_key, span(x) == span(y), "{:?} vs {:?}", x, y);
                assert_eq!(
                    x.row_space_le(&f, y),
                    span(x).is_subset(&span(y)),
                    "{:?} <= {:?}",
                    x,
                    y
                );
            }
        }
    }

    #[test]
    fn man_blocks() {
        let f = gf(2);
        let m = Matrix::from_rows(&f, vec![vec![1]]).unwrap();
        let a = Matrix::from_rows(&f, vec![vec![1]]).unwrap();
        let n = Matrix::from_rows(&f, vec![vec![1]]).unwrap();
        let x = man_compose(&f, 2, 2, &m, &a, &n).unwrap();
        assert_eq!(x, Matrix::from_rows(&f, vec![vec![1, 1], vec![1, 1]]).unwrap());
        // degenerate corner sizes: r = 0 gives the zero matrix
        let e = Matrix::zeros(0, 0);
        let m0 = Matrix::zeros(2, 0);
        let n0 = Matrix::zeros(0, 3);
        assert_eq!(man_compose(&f, 2, 3, &m0, &e, &n0).unwrap(), Matrix::zeros(2, 3));
        // r = rows: the M block is empty
        let m1 = Matrix::zeros(0, 1);
        let n1 = Matrix::from_rows(&f, vec![vec![1, 0]]).unwrap();
        let a1 = Matrix::identity(1);
        assert_eq!(
            man_compose(&f, 1, 3, &m1, &a1, &n1).unwrap(),
            Matrix::from_rows(&f, vec![vec![1, 1, 0]]).unwrap()
        );
    }

    #[test]
    fn enumeration_order_and_budget() {
        let f = gf(2);
        let xs: Vec<Matrix> = enumerate_matrices(&f, 1, 1, 4).unwrap().collect();
        assert_eq!(xs.len(), 2);
        assert!(xs[0].is_zero());
        assert_eq!(xs[1].at(0, 0), 1);
        let f3 = gf(3);
        let ys: Vec<Matrix> = enumerate_matrices(&f3, 1, 2, 16).unwrap().collect();
        assert_eq!(ys.len(), 9);
        assert_eq!(ys[1].ents, vec![0, 1]); // last entry least significant
        assert_eq!(ys[8].ents, vec![2, 2]);
        for (i, y) in ys.iter().enumerate() {
            assert_eq!(y.canonical_index(3), i as u128);
            assert_eq!(Matrix::from_canonical_index(1, 2, 3, i as u128), *y);
        }
        assert!(matches!(
            enumerate_matrices(&f, 3, 3, 100),
            Err(Error::BudgetExceeded { needed: 512, budget: 100 })
        ));
    }

    #[test]
    fn empty_matrices_are_usable() {
        let f = gf(3);
        let e = Matrix::zeros(0, 0);
        assert_eq!(e.rank(&f), 0);
        assert!(e.is_invertible(&f));
        assert_eq!(e.inverse(&f).unwrap(), e);
        let m20 = Matrix::zeros(2, 0);
        let m03 = Matrix::zeros(0, 3);
        assert_eq!(m20.mul(&f, &m03).unwrap(), Matrix::zeros(2, 3));
        let xs: Vec<Matrix> = enumerate_matrices(&f, 0, 3, 8).unwrap().collect();
        assert_eq!(xs, vec![m03]);
    }

    #[test]
    fn kernel_and_linear_solves() {
        let f = gf(3);
        let x = Matrix::from_rows(&f, vec![vec![1, 2, 0], vec![0, 0, 1]]).unwrap();
        let k = x.kernel_basis(&f);
        assert_eq!(k.rows(), 1);
        assert_eq!(x.mul(&f, &k.transpose()).unwrap(), Matrix::zeros(2, 1));
        // every matrix with columns in the column space is solvable
        let rhs = x.mul(&f, &Matrix::from_rows(&f, vec![vec![1], vec![1], vec![2]]).unwrap()).unwrap();
        let sol = x.solve_right(&f, &rhs).unwrap();
        assert_eq!(x.mul(&f, &sol).unwrap(), rhs);
        // e1 + e2 direction is outside Col([e1+2e2 | e3]-ish)? pick an inconsistent rhs
        let bad = Matrix::from_rows(&f, vec![vec![1], vec![0], vec![0]]).unwrap();
        assert!(Matrix::zeros(3, 2).solve_right(&f, &bad).is_none());
        let lhs = Matrix::from_rows(&f, vec![vec![2, 0, 1]]).unwrap();
        let prod = lhs.mul(&f, &x.transpose()).unwrap();
        let lsol = x.transpose().solve_left(&f, &prod).unwrap();
        assert_eq!(lsol.mul(&f, &x.transpose()).unwrap(), prod);
    }

    proptest! {
        #[test]
        fn transpose_antihomomorphism(qi in 0usize..3, seed in 0u64..10_000) {
            let f = gf([2, 3, 4][qi]);
            let total = count_matrices(f.q, 2, 3) as u64;
            let x = Matrix::from_canonical_index(2, 3, f.q, (seed % total) as u128);
            let y = Matrix::from_canonical_index(3, 2, f.q, (seed / total % count_matrices(f.q, 3, 2) as u64) as u128);
            let xy = x.mul(&f, &y).unwrap();
            prop_assert_eq!(xy.transpose(), y.transpose().mul(&f, &x.transpose()).unwrap());
            prop_assert!(xy.rank(&f) <= x.rank(&f).min(y.rank(&f)));
        }

        #[test]
        fn rnf_random(qi in 0usize..4, seed in 0u64..100_000) {
            let f = gf([2, 3, 4, 5][qi]);
            let total = count_matrices(f.q, 3, 2);
            let x = Matrix::from_canonical_index(3, 2, f.q, (seed as u128) % total);
            let rnf = x.rank_normal_form(&f);
            let j = Matrix::j_rect(3, 2, rnf.r);
            prop_assert_eq!(rnf.u.mul(&f, &j).unwrap().mul(&f, &rnf.v).unwrap(), x);
        }
    }
}
