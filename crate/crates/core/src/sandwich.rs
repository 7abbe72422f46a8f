//! Sandwich semigroups of rectangular matrices.
//!
//! Fix m x n matrices over GF(q) and an n x m matrix A. The sandwich product
//! X * Y = X A Y makes M_mn a semigroup whose structure is controlled by
//! r = rank(A). Writing A = U J V with J the rank-r corner matrix, the map
//! X -> V X U is an isomorphism onto the normalized semigroup with sandwich
//! matrix J, and every structural computation here happens on that side:
//! splitting a normalized X into blocks [A B; C D] at row/column r, the
//! product reads [A B; C D] * [E F; G H] = [AE AF; CE CF], regular elements
//! are exactly the block matrices [M,A,N] = [A AN; MA MAN], and Green's
//! classes collapse to row spaces, column spaces and ranks. The context
//! object owns the change of coordinates so callers can stay in the original
//! ones throughout.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_bigint::BigUint;
use serde::Serialize;

use crate::combinatorics::{
    big, gl_order, idempotents_sandwich_total, mmn_dclass_counts, qpow, regular_count,
};
use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::matrix::{count_matrices, enumerate_matrices, man_compose, Matrix, SubspaceKey};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RegFlags {
    pub in_p1: bool,
    pub in_p2: bool,
    pub in_p: bool,
}

/// Canonical parameters of a regular element: X = [A AN; MA MAN].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegTriple {
    pub m_part: Matrix,
    pub a_part: Matrix,
    pub n_part: Matrix,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GreenRel {
    R,
    L,
    H,
    D,
    J,
}

/// Class name under one of the Green's relations of the sandwich semigroup.
/// Keys are equal iff the classes are equal, so each structurally shared
/// class is named by the invariant that determines it and every other element
/// sits in a singleton named by the element itself (in normalized
/// coordinates).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum GreenKey {
    ColClass(SubspaceKey),
    RowClass(SubspaceKey),
    PairClass(SubspaceKey, SubspaceKey),
    RankClass(u32),
    Singleton(Matrix),
}

impl GreenKey {
    pub fn label(&self, q: u16) -> String {
        match self {
            GreenKey::ColClass(k) => format!("c{}", k.label()),
            GreenKey::RowClass(k) => format!("r{}", k.label()),
            GreenKey::PairClass(c, r) => format!("c{}|r{}", c.label(), r.label()),
            GreenKey::RankClass(s) => format!("rank{s}"),
            GreenKey::Singleton(x) => format!("el{}", x.canonical_index(q)),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MaximalClasses {
    /// r = min(m,n): the top regular class is the unique maximal one and is
    /// a subsemigroup.
    UniqueRegular { s: usize, class_size: BigUint },
    /// r < min(m,n), r > 0: every element of rank above r is a maximal
    /// singleton class.
    SingletonsAboveRank { threshold: usize, count: BigUint },
    /// r = 0: all products vanish; every nonzero element is a maximal
    /// singleton.
    ZeroSemigroup { nonzero: BigUint },
}

#[derive(Clone, Debug)]
pub enum IsoWitness {
    /// Zero semigroups of equal size: canonical enumeration order pairs the
    /// elements (index 0 is the zero on both sides).
    IndexBijection,
    /// Same shape and abstract field: X maps to pre * theta(X) * post, where
    /// theta applies the field isomorphism entrywise and pre/post live over
    /// the target field.
    Conjugation { field_map: Vec<Fe>, pre: Matrix, post: Matrix },
}

#[derive(Clone, Debug)]
pub struct ClassifyReport {
    pub isomorphic: bool,
    pub reason: String,
    pub witness: Option<IsoWitness>,
}

#[derive(Debug)]
pub struct CongruenceReport {
    pub u_size: u64,
    pub p_size: u64,
    pub image_size: u64,
    pub pairs_checked: u64,
    pub failures: Vec<String>,
}

impl CongruenceReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug)]
pub struct HhatReport {
    pub s: usize,
    pub hhat_size: u64,
    pub expected_h_classes: BigUint,
    pub expected_h_size: BigUint,
    pub h_classes_found: u64,
    pub h_sizes_uniform: bool,
    pub is_group: bool,
    pub inner_verdicts_match: bool,
    pub phi_injective_per_class: bool,
    /// Rectangular coordinates (row count, column count) when the class is a
    /// group times a rectangular band.
    pub rect_coords: Option<(BigUint, BigUint)>,
}

impl HhatReport {
    pub fn pass(&self) -> bool {
        big(self.h_classes_found) == self.expected_h_classes
            && self.h_sizes_uniform
            && self.inner_verdicts_match
            && self.phi_injective_per_class
    }
}

// ---------------------------------------------------------------------------
// coset cross-sections

/// A subspace W of row vectors, held in echelon form, together with the
/// canonical cross-section of F^width / W: the representatives with zeros at
/// W's pivot coordinates.
struct CosetSpace {
    width: usize,
    basis: Matrix,
    pivots: Vec<usize>,
    free: Vec<usize>,
}

impl CosetSpace {
    fn new(f: &Field, span_rows: &Matrix) -> CosetSpace {
        let rref = span_rows.rref(f);
        let dim = rref.pivots.len();
        let width = span_rows.cols();
        CosetSpace {
            width,
            basis: rref.r.submatrix(0, dim, 0, width),
            free: (0..width).filter(|c| !rref.pivots.contains(c)).collect(),
            pivots: rref.pivots,
        }
    }

    /// Canonical representative of each row of x modulo the subspace.
    fn reduce_rows(&self, f: &Field, x: &Matrix) -> Matrix {
        debug_assert_eq!(x.cols(), self.width);
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (bi, &p) in self.pivots.iter().enumerate() {
                let c = out.at(i, p);
                if c != 0 {
                    for j in 0..self.width {
                        out.set(i, j, f.sub(out.at(i, j), f.mul(c, self.basis.at(bi, j))));
                    }
                }
            }
        }
        out
    }

    fn rep_count(&self, q: u16, rows: usize) -> u128 {
        let mut c: u128 = 1;
        for _ in 0..rows * self.free.len() {
            c = c.saturating_mul(q as u128);
        }
        c
    }

    /// All canonical representative matrices with the given number of rows,
    /// in odometer order over the free coordinates (last coordinate fastest).
    fn reps(&self, f: &Field, rows: usize, budget: u64) -> Result<Vec<Matrix>> {
        let count = self.rep_count(f.q, rows);
        if count > budget as u128 {
            return Err(Error::BudgetExceeded { needed: count.min(u64::MAX as u128) as u64, budget });
        }
        let slots = rows * self.free.len();
        let mut digits = vec![0 as Fe; slots];
        let mut out = Vec::with_capacity(count as usize);
        loop {
            let mut x = Matrix::zeros(rows, self.width);
            for (si, &d) in digits.iter().enumerate() {
                let (i, fi) = (si / self.free.len().max(1), si % self.free.len().max(1));
                x.set(i, self.free[fi], d);
            }
            out.push(x);
            let mut carried = true;
            for d in digits.iter_mut().rev() {
                if *d + 1 < f.q {
                    *d += 1;
                    carried = false;
                    break;
                }
                *d = 0;
            }
            if carried || slots == 0 {
                break;
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// the context

pub struct SandwichContext {
    field: Field,
    m: usize,
    n: usize,
    a: Matrix,
    r: usize,
    u: Matrix,
    u_inv: Matrix,
    v: Matrix,
    v_inv: Matrix,
    normalized: bool,
}

impl SandwichContext {
    pub fn new(field: Field, m: usize, n: usize, a: Matrix) -> Result<SandwichContext> {
        if a.rows() != n || a.cols() != m {
            return Err(Error::DimensionMismatch(format!(
                "sandwich matrix must be {n} x {m}, got {} x {}",
                a.rows(),
                a.cols()
            )));
        }
        let rnf = a.rank_normal_form(&field);
        let normalized = a == Matrix::j_rect(n, m, rnf.r);
        Ok(SandwichContext {
            field,
            m,
            n,
            r: rnf.r,
            u: rnf.u,
            u_inv: rnf.u_inv,
            v: rnf.v,
            v_inv: rnf.v_inv,
            a,
            normalized,
        })
    }

    /// Context with the canonical rank-r sandwich matrix J itself.
    pub fn from_rank(field: Field, m: usize, n: usize, r: usize) -> Result<SandwichContext> {
        if r > m.min(n) {
            return Err(Error::DomainError(format!(
                "rank {r} exceeds min({m}, {n})"
            )));
        }
        SandwichContext::new(field, m, n, Matrix::j_rect(n, m, r))
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn q(&self) -> u16 {
        self.field.q
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn sandwich_matrix(&self) -> &Matrix {
        &self.a
    }
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
    fn l(&self) -> usize {
        self.m.min(self.n)
    }
    fn lmax(&self) -> usize {
        self.m.max(self.n)
    }

    pub fn ambient_size(&self) -> u128 {
        count_matrices(self.field.q, self.m, self.n)
    }

    fn check_shape(&self, x: &Matrix) -> Result<()> {
        if x.rows() != self.m || x.cols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "element must be {} x {}, got {} x {}",
                self.m,
                self.n,
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// The sandwich product X A Y in original coordinates.
    pub fn star(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        x.mul(&self.field, &self.a)?.mul(&self.field, y)
    }

    pub fn to_normalized(&self, x: &Matrix) -> Matrix {
        if self.normalized {
            return x.clone();
        }
        self.v.mul(&self.field, x).unwrap().mul(&self.field, &self.u).unwrap()
    }

    pub fn from_normalized(&self, x: &Matrix) -> Matrix {
        if self.normalized {
            return x.clone();
        }
        self.v_inv.mul(&self.field, x).unwrap().mul(&self.field, &self.u_inv).unwrap()
    }

    /// The product in normalized coordinates: only the first r columns of x
    /// and the first r rows of y survive.
    pub fn star_norm(&self, x: &Matrix, y: &Matrix) -> Matrix {
        let left = x.submatrix(0, self.m, 0, self.r);
        let right = y.submatrix(0, self.r, 0, self.n);
        left.mul(&self.field, &right).unwrap()
    }

    fn flags_norm(&self, xt: &Matrix) -> RegFlags {
        let f = &self.field;
        let rank = xt.rank(f);
        let in_p1 = xt.submatrix(0, self.m, 0, self.r).rank(f) == rank;
        let in_p2 = xt.submatrix(0, self.r, 0, self.n).rank(f) == rank;
        let in_p = xt.submatrix(0, self.r, 0, self.r).rank(f) == rank;
        debug_assert_eq!(in_p, in_p1 && in_p2);
        RegFlags { in_p1, in_p2, in_p }
    }

    /// Which of the rank-preservation sets X belongs to. Membership in all
    /// three is exactly regularity of X in the sandwich semigroup.
    pub fn reg_membership(&self, x: &Matrix) -> Result<RegFlags> {
        self.check_shape(x)?;
        Ok(self.flags_norm(&self.to_normalized(x)))
    }

    pub fn is_regular(&self, x: &Matrix) -> Result<bool> {
        Ok(self.reg_membership(x)?.in_p)
    }

    fn green_key_norm(&self, xt: &Matrix, rel: GreenRel) -> GreenKey {
        let f = &self.field;
        let flags = self.flags_norm(xt);
        match rel {
            GreenRel::R => {
                if flags.in_p1 {
                    GreenKey::ColClass(xt.col_space_key(f))
                } else {
                    GreenKey::Singleton(xt.clone())
                }
            }
            GreenRel::L => {
                if flags.in_p2 {
                    GreenKey::RowClass(xt.row_space_key(f))
                } else {
                    GreenKey::Singleton(xt.clone())
                }
            }
            GreenRel::H => {
                if flags.in_p {
                    GreenKey::PairClass(xt.col_space_key(f), xt.row_space_key(f))
                } else {
                    GreenKey::Singleton(xt.clone())
                }
            }
            GreenRel::D | GreenRel::J => {
                if flags.in_p {
                    GreenKey::RankClass(xt.rank(f) as u32)
                } else if flags.in_p1 {
                    GreenKey::ColClass(xt.col_space_key(f))
                } else if flags.in_p2 {
                    GreenKey::RowClass(xt.row_space_key(f))
                } else {
                    GreenKey::Singleton(xt.clone())
                }
            }
        }
    }

    /// Canonical name of X's class under the chosen Green's relation.
    pub fn green_key(&self, x: &Matrix, rel: GreenRel) -> Result<GreenKey> {
        self.check_shape(x)?;
        Ok(self.green_key_norm(&self.to_normalized(x), rel))
    }

    fn dclass_leq_norm(&self, xt: &Matrix, yt: &Matrix) -> bool {
        if self.green_key_norm(xt, GreenRel::D) == self.green_key_norm(yt, GreenRel::D) {
            return true;
        }
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        if xt.rank(f) <= yt.submatrix(0, r, 0, r).rank(f) {
            return true;
        }
        if xt.row_space_le(f, &yt.submatrix(0, r, 0, n)) {
            return true;
        }
        xt.col_space_le(f, &yt.submatrix(0, m, 0, r))
    }

    /// The partial order of D-classes: is X's class at or below Y's?
    pub fn dclass_leq(&self, x: &Matrix, y: &Matrix) -> Result<bool> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        Ok(self.dclass_leq_norm(&self.to_normalized(x), &self.to_normalized(y)))
    }

    pub fn maximal_dclasses(&self) -> MaximalClasses {
        let (q, m, n) = (self.field.q as u64, self.m as u64, self.n as u64);
        if self.r == 0 {
            let total = qpow(q, m * n);
            return MaximalClasses::ZeroSemigroup { nonzero: total - 1u32 };
        }
        if self.r == self.l() {
            let c = mmn_dclass_counts(q, m, n, self.r as u64);
            return MaximalClasses::UniqueRegular { s: self.r, class_size: c.size };
        }
        let mut count = BigUint::from(0u32);
        for s in self.r + 1..=self.l() {
            count += mmn_dclass_counts(q, m, n, s as u64).size;
        }
        MaximalClasses::SingletonsAboveRank { threshold: self.r, count }
    }

    // -- the regular part, parametrically --

    fn left_section(&self, a: &Matrix) -> CosetSpace {
        // rows w with w a = 0
        CosetSpace::new(&self.field, &a.transpose().kernel_basis(&self.field))
    }

    fn right_section(&self, a: &Matrix) -> CosetSpace {
        // columns v with a v = 0, handled transposed
        CosetSpace::new(&self.field, &a.kernel_basis(&self.field))
    }

    /// All regular elements of rank s, in normalized coordinates, grouped
    /// per middle block in a fixed deterministic order.
    fn layer_norm(&self, s: usize, budget: u64) -> Result<Vec<Matrix>> {
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        let mut out = Vec::new();
        for a in enumerate_matrices(f, r, r, u64::MAX)? {
            if a.rank(f) != s {
                continue;
            }
            let ls = self.left_section(&a);
            let rs = self.right_section(&a);
            let needed = out.len() as u128
                + ls.rep_count(f.q, m - r).saturating_mul(rs.rep_count(f.q, n - r));
            if needed > budget as u128 {
                return Err(Error::BudgetExceeded {
                    needed: needed.min(u64::MAX as u128) as u64,
                    budget,
                });
            }
            let ms = ls.reps(f, m - r, budget)?;
            let ns: Vec<Matrix> = rs
                .reps(f, n - r, budget)?
                .iter()
                .map(|t| t.transpose())
                .collect();
            for mm in &ms {
                for nn in &ns {
                    out.push(man_compose(f, m, n, mm, &a, nn).unwrap());
                }
            }
        }
        Ok(out)
    }

    /// Every regular element, in normalized coordinates, each exactly once.
    pub fn enumerate_p_norm(&self, budget: u64) -> Result<Vec<Matrix>> {
        let needed = regular_count(self.field.q as u64, self.m as u64, self.n as u64, self.r as u64)?;
        if needed > big(budget) {
            return Err(Error::BudgetExceeded {
                needed: needed.to_u64_digits().first().copied().unwrap_or(u64::MAX),
                budget,
            });
        }
        let mut out = Vec::new();
        for s in 0..=self.r {
            out.extend(self.layer_norm(s, budget)?);
        }
        Ok(out)
    }

    /// Every regular element in original coordinates.
    pub fn enumerate_p(&self, budget: u64) -> Result<Vec<Matrix>> {
        Ok(self
            .enumerate_p_norm(budget)?
            .iter()
            .map(|x| self.from_normalized(x))
            .collect())
    }

    /// All sandwich idempotents, parametrically: X * X = X exactly when the
    /// leading block is idempotent in M_r. Optional rank filter.
    pub fn idempotents(&self, s_filter: Option<usize>, budget: u64) -> Result<Vec<Matrix>> {
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        let mut out = Vec::new();
        for a in enumerate_matrices(f, r, r, u64::MAX)? {
            if !a.is_idempotent(f) {
                continue;
            }
            if let Some(s) = s_filter {
                if a.rank(f) != s {
                    continue;
                }
            }
            let ls = self.left_section(&a);
            let rs = self.right_section(&a);
            let needed = out.len() as u128
                + ls.rep_count(f.q, m - r).saturating_mul(rs.rep_count(f.q, n - r));
            if needed > budget as u128 {
                return Err(Error::BudgetExceeded {
                    needed: needed.min(u64::MAX as u128) as u64,
                    budget,
                });
            }
            for mm in &ls.reps(f, m - r, budget)? {
                for nt in &rs.reps(f, n - r, budget)? {
                    let nn = nt.transpose();
                    let e = man_compose(f, m, n, mm, &a, &nn).unwrap();
                    debug_assert_eq!(self.star_norm(&e, &e), e);
                    out.push(self.from_normalized(&e));
                }
            }
        }
        Ok(out)
    }

    /// Canonical block parameters of a regular element. The triple refers to
    /// normalized coordinates; man_recompose inverts it.
    pub fn man_decompose(&self, x: &Matrix) -> Result<RegTriple> {
        self.check_shape(x)?;
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        let xt = self.to_normalized(x);
        if !self.flags_norm(&xt).in_p {
            return Err(Error::NotRegular);
        }
        let a = xt.submatrix(0, r, 0, r);
        let b = xt.submatrix(0, r, r, n);
        let c = xt.submatrix(r, m, 0, r);
        let m0 = a.solve_left(f, &c).expect("solvable since ranks agree");
        let n0 = a.solve_right(f, &b).expect("solvable since ranks agree");
        let mm = self.left_section(&a).reduce_rows(f, &m0);
        let nn = self
            .right_section(&a)
            .reduce_rows(f, &n0.transpose())
            .transpose();
        let back = man_compose(f, m, n, &mm, &a, &nn).unwrap();
        if back != xt {
            return Err(Error::AssertionFailure(
                "block parameters do not recompose".into(),
            ));
        }
        Ok(RegTriple { m_part: mm, a_part: a, n_part: nn })
    }

    /// Inverse of man_decompose, back to original coordinates.
    pub fn man_recompose(&self, t: &RegTriple) -> Result<Matrix> {
        let x = man_compose(&self.field, self.m, self.n, &t.m_part, &t.a_part, &t.n_part)?;
        Ok(self.from_normalized(&x))
    }

    /// The leading r x r block of a regular element; a surjective
    /// homomorphism from the regular part onto M_r.
    pub fn phi_project(&self, x: &Matrix) -> Result<Matrix> {
        self.check_shape(x)?;
        let xt = self.to_normalized(x);
        if !self.flags_norm(&xt).in_p {
            return Err(Error::NotRegular);
        }
        Ok(xt.submatrix(0, self.r, 0, self.r))
    }

    // -- corners and the pullback --

    /// (X J, J X, J X J) for the normalized image of X: the two corner
    /// projections and their common core.
    pub fn corner_images(&self, x: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
        self.check_shape(x)?;
        let xt = self.to_normalized(x);
        let (m, n, r) = (self.m, self.n, self.r);
        let mut xj = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..r {
                xj.set(i, j, xt.at(i, j));
            }
        }
        let mut jx = Matrix::zeros(n, n);
        for i in 0..r {
            for j in 0..n {
                jx.set(i, j, xt.at(i, j));
            }
        }
        let mut jxj = Matrix::zeros(n, m);
        for i in 0..r {
            for j in 0..r {
                jxj.set(i, j, xt.at(i, j));
            }
        }
        Ok((xj, jx, jxj))
    }

    /// Does y lie in the right corner C_m(r): an m x m matrix with zero
    /// trailing columns?
    pub fn in_corner_cols(&self, y: &Matrix) -> bool {
        y.rows() == self.m
            && y.cols() == self.m
            && (self.r..self.m).all(|j| (0..self.m).all(|i| y.at(i, j) == 0))
    }

    pub fn in_corner_rows(&self, z: &Matrix) -> bool {
        z.rows() == self.n
            && z.cols() == self.n
            && (self.r..self.n).all(|i| (0..self.n).all(|j| z.at(i, j) == 0))
    }

    /// Regularity of a column-corner element inside its corner semigroup:
    /// multiplication by J must not drop its rank.
    pub fn corner_col_regular(&self, y: &Matrix) -> bool {
        debug_assert!(self.in_corner_cols(y));
        y.submatrix(0, self.r, 0, self.m).rank(&self.field) == y.rank(&self.field)
    }

    pub fn corner_row_regular(&self, z: &Matrix) -> bool {
        debug_assert!(self.in_corner_rows(z));
        z.submatrix(0, self.n, 0, self.r).rank(&self.field) == z.rank(&self.field)
    }

    /// The corner quotient maps onto M_r: top-left r x r block. These are
    /// homomorphisms on the corner semigroups.
    pub fn corner_project(&self, y: &Matrix) -> Matrix {
        y.submatrix(0, self.r, 0, self.r)
    }

    /// The pair (X J, J X); injective on the regular part.
    pub fn psi_embed(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        if !self.is_regular(x)? {
            return Err(Error::NotRegular);
        }
        let (xj, jx, _) = self.corner_images(x)?;
        Ok((xj, jx))
    }

    /// Inverts psi_embed: recovers the unique regular element whose corner
    /// pair is (y, z), in original coordinates.
    pub fn psi_reconstruct(&self, y: &Matrix, z: &Matrix) -> Result<Matrix> {
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        if !self.in_corner_cols(y) || !self.in_corner_rows(z) {
            return Err(Error::NotInImage);
        }
        // compatibility on the shared core
        if y.submatrix(0, r, 0, r) != z.submatrix(0, r, 0, r) {
            return Err(Error::NotInImage);
        }
        let a = y.submatrix(0, r, 0, r);
        let c = y.submatrix(r, m, 0, r);
        let b = z.submatrix(0, r, r, n);
        let m0 = a.solve_left(f, &c).ok_or(Error::NotInImage)?;
        let n0 = a.solve_right(f, &b).ok_or(Error::NotInImage)?;
        let xt = man_compose(f, m, n, &m0, &a, &n0).unwrap();
        let (xj, jx, _) = self.corner_images(&self.from_normalized(&xt))?;
        if xj != *y || jx != *z {
            return Err(Error::NotInImage);
        }
        Ok(self.from_normalized(&xt))
    }

    /// Exhaustive verification that the triple space with product
    /// (M,A,N)(K,B,L) = (M,AB,L) maps onto the regular part with kernel
    /// exactly the block-agreement relation.
    pub fn man_congruence_check(&self, budget: u64) -> Result<CongruenceReport> {
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        let u_count = count_matrices(f.q, m - r, r)
            .saturating_mul(count_matrices(f.q, r, r))
            .saturating_mul(count_matrices(f.q, r, n - r));
        if u_count > budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: u_count.min(u64::MAX as u128) as u64,
                budget,
            });
        }
        let ms: Vec<Matrix> = enumerate_matrices(f, m - r, r, u64::MAX)?.collect();
        let aas: Vec<Matrix> = enumerate_matrices(f, r, r, u64::MAX)?.collect();
        let ns: Vec<Matrix> = enumerate_matrices(f, r, n - r, u64::MAX)?.collect();
        let mut triples: Vec<(usize, usize, usize)> = Vec::new();
        for mi in 0..ms.len() {
            for ai in 0..aas.len() {
                for ni in 0..ns.len() {
                    triples.push((mi, ai, ni));
                }
            }
        }
        let xi: Vec<Matrix> = triples
            .iter()
            .map(|&(mi, ai, ni)| man_compose(f, m, n, &ms[mi], &aas[ai], &ns[ni]).unwrap())
            .collect();
        let mut failures = Vec::new();
        let mut image: HashMap<&Matrix, Vec<usize>> = HashMap::new();
        for (i, x) in xi.iter().enumerate() {
            image.entry(x).or_default().push(i);
            if !self.flags_norm(x).in_p && failures.len() < 8 {
                failures.push(format!("triple {i} lands outside the regular part"));
            }
        }
        let p_size = regular_count(f.q as u64, m as u64, n as u64, r as u64)?;
        if big(image.len() as u64) != p_size {
            failures.push(format!(
                "image has {} elements, the regular part {}",
                image.len(),
                p_size
            ));
        }
        let mut pairs_checked = 0u64;
        for (i, &(mi, ai, _)) in triples.iter().enumerate() {
            for (j, &(_, aj, nj)) in triples.iter().enumerate() {
                pairs_checked += 1;
                let ab = aas[ai].mul(f, &aas[aj]).unwrap();
                let composed = man_compose(f, m, n, &ms[mi], &ab, &ns[nj]).unwrap();
                if composed != self.star_norm(&xi[i], &xi[j]) {
                    if failures.len() < 8 {
                        failures.push(format!("homomorphism law fails at pair ({i}, {j})"));
                    }
                    continue;
                }
                let sim = aas[ai] == aas[aj]
                    && ms[mi].mul(f, &aas[ai]).unwrap() == ms[triples[j].0].mul(f, &aas[aj]).unwrap()
                    && aas[ai].mul(f, &ns[triples[i].2]).unwrap()
                        == aas[aj].mul(f, &ns[nj]).unwrap();
                if sim != (xi[i] == xi[j]) && failures.len() < 8 {
                    failures.push(format!("kernel disagrees with block relation at ({i}, {j})"));
                }
            }
        }
        // direct congruence spot-check: related pairs stay related under
        // multiplication by every w on either side
        let mut spot = 0;
        'outer: for class in image.values() {
            for &i in class {
                for &j in class {
                    if i >= j {
                        continue;
                    }
                    if spot >= 32 {
                        break 'outer;
                    }
                    spot += 1;
                    for (w, &(mw, aw, nw)) in triples.iter().enumerate() {
                        let left_i = man_compose(
                            f,
                            m,
                            n,
                            &ms[mw],
                            &aas[aw].mul(f, &aas[triples[i].1]).unwrap(),
                            &ns[triples[i].2],
                        )
                        .unwrap();
                        let left_j = man_compose(
                            f,
                            m,
                            n,
                            &ms[mw],
                            &aas[aw].mul(f, &aas[triples[j].1]).unwrap(),
                            &ns[triples[j].2],
                        )
                        .unwrap();
                        let right_i = man_compose(
                            f,
                            m,
                            n,
                            &ms[triples[i].0],
                            &aas[triples[i].1].mul(f, &aas[aw]).unwrap(),
                            &ns[nw],
                        )
                        .unwrap();
                        let right_j = man_compose(
                            f,
                            m,
                            n,
                            &ms[triples[j].0],
                            &aas[triples[j].1].mul(f, &aas[aw]).unwrap(),
                            &ns[nw],
                        )
                        .unwrap();
                        if left_i != left_j || right_i != right_j {
                            failures.push(format!(
                                "congruence broken by w = {w} on pair ({i}, {j})"
                            ));
                            break 'outer;
                        }
                    }
                }
            }
        }
        let image_size = image.len() as u64;
        Ok(CongruenceReport {
            u_size: triples.len() as u64,
            p_size: p_size.to_u64_digits().first().copied().unwrap_or(0),
            image_size,
            pairs_checked,
            failures,
        })
    }

    /// Structure of the preimage under phi of the M_r H-class of X,
    /// intersected with X's layer: how it splits into sandwich H-classes.
    pub fn hhat_structure(&self, x: &Matrix, budget: u64) -> Result<HhatReport> {
        let f = &self.field;
        let (m, n, r) = (self.m, self.n, self.r);
        let a = self.phi_project(x)?;
        let s = a.rank(f);
        let (arow, acol) = (a.row_space_key(f), a.col_space_key(f));
        let mut h_a = Vec::new();
        for b in enumerate_matrices(f, r, r, u64::MAX)? {
            if b.row_space_key(f) == arow && b.col_space_key(f) == acol {
                h_a.push(b);
            }
        }
        let is_group = h_a.iter().any(|b| b.is_idempotent(f));
        let q = f.q as u64;
        let (mu, nu, ru, su) = (m as u64, n as u64, r as u64, s as u64);
        let expected_h_classes = qpow(q, su * (mu + nu - 2 * ru));
        let expected_h_size = gl_order(q, su);
        let total = big(h_a.len() as u64) * &expected_h_classes;
        if total > big(budget) {
            return Err(Error::BudgetExceeded {
                needed: total.to_u64_digits().first().copied().unwrap_or(u64::MAX),
                budget,
            });
        }
        let mut classes: BTreeMap<GreenKey, Vec<Matrix>> = BTreeMap::new();
        for b in &h_a {
            let ls = self.left_section(b);
            let rs = self.right_section(b);
            for mm in &ls.reps(f, m - r, budget)? {
                for nt in &rs.reps(f, n - r, budget)? {
                    let y = man_compose(f, m, n, mm, b, &nt.transpose()).unwrap();
                    let key = self.green_key_norm(&y, GreenRel::H);
                    classes.entry(key).or_default().push(y);
                }
            }
        }
        let h_classes_found = classes.len() as u64;
        let mut h_sizes_uniform = true;
        let mut inner_verdicts_match = true;
        let mut phi_injective_per_class = true;
        let mut hhat_size = 0u64;
        for members in classes.values() {
            hhat_size += members.len() as u64;
            if big(members.len() as u64) != expected_h_size {
                h_sizes_uniform = false;
            }
            let mut blocks = BTreeSet::new();
            for y in members {
                blocks.insert(y.submatrix(0, r, 0, r));
            }
            if blocks.len() != members.len() {
                phi_injective_per_class = false;
            }
            let has_idem = members.iter().any(|y| self.star_norm(y, y) == *y);
            if has_idem != is_group {
                inner_verdicts_match = false;
            }
        }
        let rect_coords = if is_group {
            Some((qpow(q, su * (mu - ru)), qpow(q, su * (nu - ru))))
        } else {
            None
        };
        Ok(HhatReport {
            s,
            hhat_size,
            expected_h_classes,
            expected_h_size,
            h_classes_found,
            h_sizes_uniform,
            is_group,
            inner_verdicts_match,
            phi_injective_per_class,
            rect_coords,
        })
    }

    // -- mididentities and regularity preservation --

    /// Structural test: E is a mididentity (X * E * Z = X * Z always) iff
    /// its normalized leading block is the identity.
    pub fn is_mididentity_structural(&self, e: &Matrix) -> Result<bool> {
        self.check_shape(e)?;
        let et = self.to_normalized(e);
        Ok(et.submatrix(0, self.r, 0, self.r) == Matrix::identity(self.r))
    }

    /// Exhaustive test over all pairs, against the definition.
    pub fn is_mididentity(&self, e: &Matrix, budget: u64) -> Result<bool> {
        self.check_shape(e)?;
        let pairs = self.ambient_size().saturating_mul(self.ambient_size());
        if pairs > budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: pairs.min(u64::MAX as u128) as u64,
                budget,
            });
        }
        let et = self.to_normalized(e);
        let f = &self.field;
        for x in enumerate_matrices(f, self.m, self.n, u64::MAX)? {
            let xe = self.star_norm(&x, &et);
            for z in enumerate_matrices(f, self.m, self.n, u64::MAX)? {
                if self.star_norm(&xe, &z) != self.star_norm(&x, &z) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Brute-force set of regularity-preserving elements of the regular
    /// part: those X for which every U has some V with U X V X U = U (all
    /// products sandwich products). Returned in original coordinates.
    pub fn regularity_preserving_set(&self, budget: u64) -> Result<Vec<Matrix>> {
        let p = self.enumerate_p_norm(budget)?;
        let k = p.len();
        if (k as u128).pow(3) > (budget as u128).saturating_mul(budget as u128) {
            return Err(Error::BudgetExceeded { needed: k as u64, budget });
        }
        let mut index: HashMap<&Matrix, usize> = HashMap::with_capacity(k);
        for (i, x) in p.iter().enumerate() {
            index.insert(x, i);
        }
        let mut table = vec![0u32; k * k];
        for i in 0..k {
            for j in 0..k {
                // the regular part is closed under the product
                table[i * k + j] = index[&self.star_norm(&p[i], &p[j])] as u32;
            }
        }
        let at = |i: usize, j: usize| table[i * k + j] as usize;
        let mut out = Vec::new();
        for x in 0..k {
            let ok = (0..k).all(|u| {
                let ux = at(u, x);
                (0..k).any(|v| at(at(at(ux, v), x), u) == u)
            });
            if ok {
                out.push(self.from_normalized(&p[x]));
            }
        }
        Ok(out)
    }

    // -- classification --

    pub fn classify_iso(&self, other: &SandwichContext) -> ClassifyReport {
        let no = |reason: String| ClassifyReport { isomorphic: false, reason, witness: None };
        match (self.r, other.r) {
            (0, 0) => {
                let (s1, s2) = (self.ambient_size(), other.ambient_size());
                if s1 == s2 {
                    ClassifyReport {
                        isomorphic: true,
                        reason: format!("zero semigroups of equal size {s1}"),
                        witness: Some(IsoWitness::IndexBijection),
                    }
                } else {
                    no(format!("zero semigroups of different sizes {s1} and {s2}"))
                }
            }
            (0, _) | (_, 0) => no("only one side is a zero semigroup".into()),
            _ => {
                if self.r != other.r {
                    return no(format!(
                        "sandwich ranks differ: {} and {}",
                        self.r, other.r
                    ));
                }
                if (self.m, self.n) != (other.m, other.n) {
                    return no(format!(
                        "ambient shapes differ: {}x{} and {}x{}",
                        self.m, self.n, other.m, other.n
                    ));
                }
                if (self.field.p, self.field.k) != (other.field.p, other.field.k) {
                    return no(format!(
                        "fields are not isomorphic: GF({}) and GF({})",
                        self.field.q, other.field.q
                    ));
                }
                let theta = self
                    .field
                    .isomorphism_to(&other.field)
                    .expect("orders agree");
                let map = |x: &Matrix| {
                    Matrix::from_fn(x.rows(), x.cols(), |i, j| theta[x.at(i, j) as usize])
                };
                let pre = other.v_inv.mul(&other.field, &map(&self.v)).unwrap();
                let post = map(&self.u).mul(&other.field, &other.u_inv).unwrap();
                ClassifyReport {
                    isomorphic: true,
                    reason: "equal rank, shape and abstract field".into(),
                    witness: Some(IsoWitness::Conjugation {
                        field_map: theta,
                        pre,
                        post,
                    }),
                }
            }
        }
    }

    /// Applies a classification witness to one element.
    pub fn apply_witness(
        &self,
        other: &SandwichContext,
        w: &IsoWitness,
        x: &Matrix,
    ) -> Result<Matrix> {
        self.check_shape(x)?;
        match w {
            IsoWitness::IndexBijection => {
                let idx = x.canonical_index(self.field.q);
                Ok(Matrix::from_canonical_index(other.m, other.n, other.field.q, idx))
            }
            IsoWitness::Conjugation { field_map, pre, post } => {
                let mapped =
                    Matrix::from_fn(x.rows(), x.cols(), |i, j| field_map[x.at(i, j) as usize]);
                pre.mul(&other.field, &mapped)?.mul(&other.field, post)
            }
        }
    }

    /// Exhaustively checks a witness: bijective and product-preserving.
    pub fn verify_witness(
        &self,
        other: &SandwichContext,
        w: &IsoWitness,
        budget: u64,
    ) -> Result<bool> {
        let size = self.ambient_size();
        if size != other.ambient_size() {
            return Ok(false);
        }
        if size.saturating_mul(size) > budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: size.saturating_mul(size).min(u64::MAX as u128) as u64,
                budget,
            });
        }
        let elems: Vec<Matrix> =
            enumerate_matrices(&self.field, self.m, self.n, u64::MAX)?.collect();
        let images: Vec<Matrix> = elems
            .iter()
            .map(|x| self.apply_witness(other, w, x))
            .collect::<Result<_>>()?;
        let distinct: HashSet<&Matrix> = images.iter().collect();
        if distinct.len() != elems.len() {
            return Ok(false);
        }
        for (i, x) in elems.iter().enumerate() {
            for (j, y) in elems.iter().enumerate() {
                let lhs = self.apply_witness(other, w, &self.star(x, y)?)?;
                let rhs = other.star(&images[i], &images[j])?;
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

// ---------------------------------------------------------------------------
// eggbox reports

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EggboxScope {
    /// Every class of the sandwich semigroup.
    All,
    /// The regular classes only, enumerated parametrically.
    Reg,
    /// One sandwich layer: the regular class of rank s.
    DClass(usize),
    /// The ordinary rank-s class of the ambient matrices, with plain
    /// multiplication structure.
    MDClass(usize),
}

impl EggboxScope {
    pub fn parse(s: &str) -> Result<EggboxScope> {
        let err = || Error::Parse(format!("bad scope '{s}'"));
        match s {
            "all" => Ok(EggboxScope::All),
            "reg" => Ok(EggboxScope::Reg),
            _ => {
                let (kind, v) = s.split_once(':').ok_or_else(err)?;
                let v: usize = v.parse().map_err(|_| err())?;
                match kind {
                    "dclass" => Ok(EggboxScope::DClass(v)),
                    "mdclass" => Ok(EggboxScope::MDClass(v)),
                    _ => Err(err()),
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            EggboxScope::All => "all".into(),
            EggboxScope::Reg => "reg".into(),
            EggboxScope::DClass(s) => format!("dclass:{s}"),
            EggboxScope::MDClass(s) => format!("mdclass:{s}"),
        }
    }
}

#[derive(Serialize, Debug)]
pub struct EggboxParams {
    pub q: u64,
    pub m: usize,
    pub n: usize,
    pub r: usize,
}

#[derive(Debug, Clone)]
pub struct CellEntry {
    pub r_index: usize,
    pub l_index: usize,
    pub size: u64,
    pub is_group: bool,
    pub idempotents: u64,
}

#[derive(Serialize, Debug)]
pub struct DClassEntry {
    pub s: usize,
    pub regular: bool,
    #[serde(rename = "nR")]
    pub n_r: String,
    #[serde(rename = "nL")]
    pub n_l: String,
    #[serde(rename = "hSize")]
    pub h_size: String,
    pub idempotents: String,
    pub size: String,
    #[serde(skip)]
    pub r_labels: Vec<String>,
    #[serde(skip)]
    pub l_labels: Vec<String>,
    #[serde(skip)]
    pub cells: Vec<CellEntry>,
}

#[derive(Serialize, Debug)]
pub struct EggboxReport {
    pub params: EggboxParams,
    pub scope: String,
    pub dclasses: Vec<DClassEntry>,
    pub order: Vec<[usize; 2]>,
}

impl SandwichContext {
    /// Builds the full class-by-class structure report for the requested
    /// scope. Element enumeration is bounded by `budget`.
    pub fn eggbox(&self, scope: EggboxScope, budget: u64) -> Result<EggboxReport> {
        let f = &self.field;
        let sandwich_scope = !matches!(scope, EggboxScope::MDClass(_));
        let elems: Vec<Matrix> = match scope {
            EggboxScope::All => enumerate_matrices(f, self.m, self.n, budget)?.collect(),
            EggboxScope::Reg => self.enumerate_p_norm(budget)?,
            EggboxScope::DClass(s) => {
                if s > self.r {
                    return Err(Error::DomainError(format!(
                        "no regular class of rank {s} when the sandwich rank is {}",
                        self.r
                    )));
                }
                self.layer_norm(s, budget)?
            }
            EggboxScope::MDClass(s) => {
                if s > self.l() {
                    return Err(Error::DomainError(format!(
                        "no rank-{s} class in {} x {} matrices",
                        self.m, self.n
                    )));
                }
                enumerate_matrices(f, self.m, self.n, budget)?
                    .filter(|x| x.rank(f) == s)
                    .collect()
            }
        };
        // elements arrive in normalized coordinates for Reg/DClass, in plain
        // coordinates otherwise; for All the keys still go through
        // normalization
        let key_of = |x: &Matrix, rel: GreenRel| -> GreenKey {
            if sandwich_scope {
                match scope {
                    EggboxScope::All => self.green_key_norm(&self.to_normalized(x), rel),
                    _ => self.green_key_norm(x, rel),
                }
            } else {
                match rel {
                    GreenRel::R => GreenKey::ColClass(x.col_space_key(f)),
                    GreenRel::L => GreenKey::RowClass(x.row_space_key(f)),
                    GreenRel::H => {
                        GreenKey::PairClass(x.col_space_key(f), x.row_space_key(f))
                    }
                    GreenRel::D | GreenRel::J => GreenKey::RankClass(x.rank(f) as u32),
                }
            }
        };
        let norm_of = |x: &Matrix| -> Matrix {
            match scope {
                EggboxScope::All => self.to_normalized(x),
                _ => x.clone(),
            }
        };
        let is_idem = |x: &Matrix| -> bool {
            if sandwich_scope {
                let xt = norm_of(x);
                self.star_norm(&xt, &xt) == xt
            } else if self.m == self.n {
                x.mul(f, x).unwrap() == *x
            } else {
                false
            }
        };

        let mut by_dclass: BTreeMap<(usize, GreenKey), Vec<usize>> = BTreeMap::new();
        for (i, x) in elems.iter().enumerate() {
            let s = if sandwich_scope { norm_of(x).rank(f) } else { x.rank(f) };
            by_dclass.entry((s, key_of(x, GreenRel::D))).or_default().push(i);
        }

        let mut dclasses = Vec::new();
        let mut reps: Vec<Matrix> = Vec::new();
        for ((s, dkey), members) in &by_dclass {
            let regular = if sandwich_scope {
                matches!(dkey, GreenKey::RankClass(_))
            } else {
                true
            };
            let mut r_keys: BTreeSet<GreenKey> = BTreeSet::new();
            let mut l_keys: BTreeSet<GreenKey> = BTreeSet::new();
            for &i in members {
                r_keys.insert(key_of(&elems[i], GreenRel::R));
                l_keys.insert(key_of(&elems[i], GreenRel::L));
            }
            let r_keys: Vec<GreenKey> = r_keys.into_iter().collect();
            let l_keys: Vec<GreenKey> = l_keys.into_iter().collect();
            let mut cells: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
            let mut idem_total = 0u64;
            for &i in members {
                let ri = r_keys.binary_search(&key_of(&elems[i], GreenRel::R)).unwrap();
                let li = l_keys.binary_search(&key_of(&elems[i], GreenRel::L)).unwrap();
                let cell = cells.entry((ri, li)).or_insert((0, 0));
                cell.0 += 1;
                if is_idem(&elems[i]) {
                    cell.1 += 1;
                    idem_total += 1;
                }
            }
            let h_size = cells.values().next().map(|c| c.0).unwrap_or(0);
            debug_assert!(cells.values().all(|c| c.0 == h_size));
            debug_assert_eq!(cells.len(), r_keys.len() * l_keys.len());
            let cell_list: Vec<CellEntry> = cells
                .iter()
                .map(|(&(ri, li), &(size, idems))| CellEntry {
                    r_index: ri,
                    l_index: li,
                    size,
                    is_group: idems > 0,
                    idempotents: idems,
                })
                .collect();
            let q = f.q;
            dclasses.push(DClassEntry {
                s: *s,
                regular,
                n_r: r_keys.len().to_string(),
                n_l: l_keys.len().to_string(),
                h_size: h_size.to_string(),
                idempotents: idem_total.to_string(),
                size: members.len().to_string(),
                r_labels: r_keys.iter().map(|k| k.label(q)).collect(),
                l_labels: l_keys.iter().map(|k| k.label(q)).collect(),
                cells: cell_list,
            });
            reps.push(norm_of(&elems[members[0]]));
        }

        let order: Vec<[usize; 2]> = if sandwich_scope && dclasses.len() > 1 {
            let k = dclasses.len();
            let mut leq = vec![false; k * k];
            for i in 0..k {
                for j in 0..k {
                    leq[i * k + j] = self.dclass_leq_norm(&reps[i], &reps[j]);
                }
            }
            let mut covers = Vec::new();
            for i in 0..k {
                for j in 0..k {
                    if i == j || !leq[i * k + j] || leq[j * k + i] {
                        continue;
                    }
                    let through = (0..k).any(|t| {
                        t != i
                            && t != j
                            && leq[i * k + t]
                            && !leq[t * k + i]
                            && leq[t * k + j]
                            && !leq[j * k + t]
                    });
                    if !through {
                        covers.push([i, j]);
                    }
                }
            }
            covers
        } else {
            Vec::new()
        };

        Ok(EggboxReport {
            params: EggboxParams { q: f.q as u64, m: self.m, n: self.n, r: self.r },
            scope: scope.name(),
            dclasses,
            order,
        })
    }
}

/// DOT rendering: one table node per class (rows = R-classes, columns =
/// L-classes, shaded cells are groups), edges along the covering relation of
/// the class order, drawn upward.
pub fn eggbox_dot(report: &EggboxReport) -> String {
    let mut out = String::new();
    out.push_str("digraph eggbox {\n  rankdir=BT;\n  node [shape=plaintext];\n");
    for (di, d) in report.dclasses.iter().enumerate() {
        let nr: usize = d.r_labels.len();
        let nl: usize = d.l_labels.len();
        let mut label = String::from("<<TABLE BORDER=\"0\" CELLBORDER=\"1\" CELLSPACING=\"0\">");
        for ri in 0..nr {
            label.push_str("<TR>");
            for li in 0..nl {
                let cell = d
                    .cells
                    .iter()
                    .find(|c| c.r_index == ri && c.l_index == li)
                    .expect("dense grid");
                if cell.is_group {
                    label.push_str(&format!(
                        "<TD BGCOLOR=\"lightgray\">{}</TD>",
                        cell.size
                    ));
                } else {
                    label.push_str(&format!("<TD>{}</TD>", cell.size));
                }
            }
            label.push_str("</TR>");
        }
        label.push_str("</TABLE>>");
        out.push_str(&format!(
            "  d{di} [label={label}, tooltip=\"s={} size={}\"];\n",
            d.s, d.size
        ));
    }
    for e in &report.order {
        out.push_str(&format!("  d{} -> d{};\n", e[0], e[1]));
    }
    out.push_str("}\n");
    out
}

/// CSV rendering: one line per H-class.
pub fn eggbox_csv(report: &EggboxReport) -> String {
    let mut out = String::from("s,rKey,lKey,size,isGroup,nIdempotents\n");
    for d in &report.dclasses {
        for c in &d.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.s,
                d.r_labels[c.r_index],
                d.l_labels[c.l_index],
                c.size,
                c.is_group,
                c.idempotents
            ));
        }
    }
    out
}

/// Total idempotent count by the closed form, for cross-checking callers.
pub fn idempotent_total(ctx: &SandwichContext) -> Result<BigUint> {
    idempotents_sandwich_total(
        ctx.field().q as u64,
        ctx.m() as u64,
        ctx.n() as u64,
        ctx.r() as u64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::sandwich_counts;

    fn gf(q: u16) -> Field {
        match q {
            4 => Field::new(2, 2, None).unwrap(),
            8 => Field::new(2, 3, None).unwrap(),
            9 => Field::new(3, 2, None).unwrap(),
            p => Field::prime(p).unwrap(),
        }
    }

    fn all_mats(f: &Field, m: usize, n: usize) -> Vec<Matrix> {
        enumerate_matrices(f, m, n, 1 << 20).unwrap().collect()
    }

    #[test]
    fn normalization_is_a_star_isomorphism() {
        let f = gf(2);
        let a = Matrix::from_rows(&f, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let ctx = SandwichContext::new(f.clone(), 2, 2, a).unwrap();
        assert_eq!(ctx.r(), 2);
        assert!(!ctx.is_normalized());
        for x in all_mats(&f, 2, 2) {
            assert_eq!(ctx.from_normalized(&ctx.to_normalized(&x)), x);
            for y in all_mats(&f, 2, 2) {
                let lhs = ctx.to_normalized(&ctx.star(&x, &y).unwrap());
                let rhs = ctx.star_norm(&ctx.to_normalized(&x), &ctx.to_normalized(&y));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn regularity_flags_match_the_definition() {
        let f = gf(3);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 3, 1).unwrap();
        let elems = all_mats(&f, 2, 3);
        for x in &elems {
            let has_inner = elems.iter().any(|y| {
                let xyx = ctx.star(&ctx.star(x, y).unwrap(), x).unwrap();
                xyx == *x
            });
            assert_eq!(ctx.is_regular(x).unwrap(), has_inner, "at {x:?}");
        }
    }

    #[test]
    fn parametric_regular_part_matches_scan() {
        for (q, m, n, r) in [(2, 2, 3, 2), (3, 2, 2, 1), (2, 3, 2, 1)] {
            let f = gf(q);
            let ctx = SandwichContext::from_rank(f.clone(), m, n, r).unwrap();
            let parametric: BTreeSet<Matrix> =
                ctx.enumerate_p(1 << 20).unwrap().into_iter().collect();
            let scanned: BTreeSet<Matrix> = all_mats(&f, m, n)
                .into_iter()
                .filter(|x| ctx.is_regular(x).unwrap())
                .collect();
            assert_eq!(parametric, scanned);
            // closed under the product
            for x in &parametric {
                for y in &parametric {
                    assert!(parametric.contains(&ctx.star(x, y).unwrap()));
                }
            }
            let expected = regular_count(q as u64, m as u64, n as u64, r as u64).unwrap();
            assert_eq!(big(parametric.len() as u64), expected);
        }
    }

    #[test]
    fn man_round_trip_and_product_rule() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 3, 1).unwrap();
        let p = ctx.enumerate_p(1 << 20).unwrap();
        for x in &p {
            let t = ctx.man_decompose(x).unwrap();
            assert_eq!(ctx.man_recompose(&t).unwrap(), *x);
        }
        for x in &p {
            for y in &p {
                let tx = ctx.man_decompose(x).unwrap();
                let ty = ctx.man_decompose(y).unwrap();
                let ab = tx.a_part.mul(&f, &ty.a_part).unwrap();
                let rule = man_compose(&f, 2, 3, &tx.m_part, &ab, &ty.n_part).unwrap();
                assert_eq!(ctx.to_normalized(&ctx.star(x, y).unwrap()), rule);
            }
        }
        let j = Matrix::j_rect(2, 3, 1);
        let t = ctx.man_decompose(&j).unwrap();
        assert!(t.m_part.is_zero() && t.n_part.is_zero());
        assert_eq!(t.a_part, Matrix::identity(1));
        let bad = Matrix::from_rows(&f, vec![vec![0, 1, 0], vec![0, 0, 0]]).unwrap();
        assert!(matches!(ctx.man_decompose(&bad), Err(Error::NotRegular)));
    }

    #[test]
    fn idempotents_match_brute_scan() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 2, 1).unwrap();
        let parametric: BTreeSet<Matrix> =
            ctx.idempotents(None, 4096).unwrap().into_iter().collect();
        let brute: BTreeSet<Matrix> = all_mats(&f, 2, 2)
            .into_iter()
            .filter(|x| ctx.star(x, x).unwrap() == *x)
            .collect();
        assert_eq!(parametric, brute);
        assert_eq!(parametric.len(), 5);
        assert_eq!(big(5), idempotent_total(&ctx).unwrap());
    }

    #[test]
    fn dclass_order_matches_brute_two_sided_divisibility() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 2, 1).unwrap();
        let elems = all_mats(&f, 2, 2);
        // brute x <= y: x = y, or x = u * y * v / y * v / u * y
        let below = |x: &Matrix, y: &Matrix| -> bool {
            if x == y {
                return true;
            }
            let mut reach = vec![y.clone()];
            for u in &elems {
                reach.push(ctx.star(u, y).unwrap());
                for v in &elems {
                    reach.push(ctx.star(&ctx.star(u, y).unwrap(), v).unwrap());
                }
            }
            for v in &elems {
                reach.push(ctx.star(y, v).unwrap());
            }
            reach.contains(x)
        };
        for x in &elems {
            for y in &elems {
                // D-order equals J-order here; compare class-wise
                let lhs = ctx.dclass_leq(x, y).unwrap();
                let rhs = elems.iter().any(|y2| {
                    ctx.green_key(y2, GreenRel::D).unwrap()
                        == ctx.green_key(y, GreenRel::D).unwrap()
                        && below(x, y2)
                });
                assert_eq!(lhs, rhs, "at {x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn maximal_classes_by_parameters() {
        let f = gf(2);
        let top = SandwichContext::from_rank(f.clone(), 2, 3, 2).unwrap();
        assert!(matches!(
            top.maximal_dclasses(),
            MaximalClasses::UniqueRegular { s: 2, .. }
        ));
        let mid = SandwichContext::from_rank(f.clone(), 2, 2, 1).unwrap();
        match mid.maximal_dclasses() {
            MaximalClasses::SingletonsAboveRank { threshold: 1, count } => {
                assert_eq!(count, big(6)); // the invertibles
            }
            other => panic!("unexpected {other:?}"),
        }
        let zero = SandwichContext::from_rank(f, 2, 2, 0).unwrap();
        assert!(matches!(
            zero.maximal_dclasses(),
            MaximalClasses::ZeroSemigroup { .. }
        ));
    }

    #[test]
    fn pullback_is_injective_with_the_right_image() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 2, 1).unwrap();
        let p = ctx.enumerate_p(1 << 20).unwrap();
        let mut images = BTreeSet::new();
        for x in &p {
            let (y, z) = ctx.psi_embed(x).unwrap();
            assert!(ctx.in_corner_cols(&y) && ctx.in_corner_rows(&z));
            assert_eq!(ctx.psi_reconstruct(&y, &z).unwrap(), *x);
            images.insert((y, z));
        }
        assert_eq!(images.len(), p.len(), "injective on the regular part");
        // image characterization: corner pairs from regular elements with
        // matching cores are all realized
        let pj: BTreeSet<Matrix> =
            p.iter().map(|x| ctx.corner_images(x).unwrap().0).collect();
        let jp: BTreeSet<Matrix> =
            p.iter().map(|x| ctx.corner_images(x).unwrap().1).collect();
        let mut fiber = BTreeSet::new();
        for y in &pj {
            for z in &jp {
                if y.submatrix(0, 1, 0, 1) == z.submatrix(0, 1, 0, 1)
                    && ctx.psi_reconstruct(y, z).is_ok()
                {
                    fiber.insert((y.clone(), z.clone()));
                }
            }
        }
        assert_eq!(fiber, images);
        // corner maps commute with the block projection
        for x in &p {
            let (y, z) = ctx.psi_embed(x).unwrap();
            let a = ctx.phi_project(x).unwrap();
            assert_eq!(ctx.corner_project(&y), a);
            assert_eq!(ctx.corner_project(&z), a);
        }
    }

    #[test]
    fn congruence_report_is_clean() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f, 2, 2, 1).unwrap();
        let report = ctx.man_congruence_check(1 << 16).unwrap();
        assert!(report.pass(), "{:?}", report.failures);
        assert_eq!(report.u_size, 8);
        assert_eq!(report.p_size, 5);
        assert_eq!(report.image_size, 5);
    }

    #[test]
    fn hhat_of_the_corner_matrix() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f, 2, 2, 1).unwrap();
        let j = Matrix::j_rect(2, 2, 1);
        let report = ctx.hhat_structure(&j, 1 << 16).unwrap();
        assert!(report.pass());
        assert_eq!(report.hhat_size, 4);
        assert_eq!(report.h_classes_found, 4);
        assert_eq!(report.expected_h_size, big(1));
        assert!(report.is_group);
        assert_eq!(report.rect_coords, Some((big(2), big(2))));
    }

    #[test]
    fn green_keys_name_the_classes() {
        // spot what the acceptance suite checks at scale: keys vs brute
        use crate::psgp::{brute_green, build_sandwich, MatrixPsgp};
        let f = gf(3);
        let s = MatrixPsgp::new(f.clone(), vec![2], 1 << 20);
        let a = Matrix::from_rows(&f, vec![vec![1, 0], vec![0, 0]]).unwrap();
        let ctx = SandwichContext::new(f, 2, 2, a.clone()).unwrap();
        let (elems, table) = build_sandwich(&s, 0, 0, &a, 4096).unwrap();
        let g = brute_green(&table, 4096).unwrap();
        for rel in [GreenRel::R, GreenRel::L, GreenRel::H, GreenRel::D, GreenRel::J] {
            let keys: Vec<GreenKey> = elems
                .iter()
                .map(|x| ctx.green_key(x, rel).unwrap())
                .collect();
            let brute: &Vec<u32> = match rel {
                GreenRel::R => &g.r_class,
                GreenRel::L => &g.l_class,
                GreenRel::H => &g.h_class,
                GreenRel::D => &g.d_class,
                GreenRel::J => &g.j_class,
            };
            for i in 0..elems.len() {
                for j in 0..elems.len() {
                    assert_eq!(
                        keys[i] == keys[j],
                        brute[i] == brute[j],
                        "{rel:?} at ({i}, {j})"
                    );
                }
            }
        }
        for (i, x) in elems.iter().enumerate() {
            assert_eq!(ctx.is_regular(x).unwrap(), g.regular[i]);
        }
    }

    #[test]
    fn eggbox_reproduces_the_reference_grid() {
        let f = gf(3);
        let ctx = SandwichContext::from_rank(f, 2, 3, 1).unwrap();
        let report = ctx.eggbox(EggboxScope::MDClass(1), 1 << 20).unwrap();
        assert_eq!(report.dclasses.len(), 1);
        let d = &report.dclasses[0];
        assert_eq!((d.n_r.as_str(), d.n_l.as_str()), ("4", "13"));
        assert_eq!(d.h_size, "2");
        assert_eq!(d.size, "104");
        let csv = eggbox_csv(&report);
        assert_eq!(csv.lines().count(), 1 + 4 * 13);

        let reg = ctx.eggbox(EggboxScope::Reg, 1 << 20).unwrap();
        assert_eq!(reg.dclasses.len(), 2);
        assert_eq!(reg.order, vec![[0, 1]]);
        let top = &reg.dclasses[1];
        assert_eq!((top.n_r.as_str(), top.n_l.as_str()), ("3", "9"));
        assert_eq!(top.h_size, "2");
        let counts = sandwich_counts(3, 2, 3, 1, 1).unwrap();
        assert_eq!(top.size, counts.d_size.to_string());
        let dot = eggbox_dot(&reg);
        assert!(dot.contains("TABLE") && dot.contains("d0 -> d1"));
    }

    #[test]
    fn eggbox_all_lists_every_class() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f, 2, 2, 1).unwrap();
        let report = ctx.eggbox(EggboxScope::All, 1 << 20).unwrap();
        let total: u64 = report
            .dclasses
            .iter()
            .map(|d| d.size.parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 16);
        // the zero class, the regular rank-1 class, 5 rank-1 singletons and
        // 6 invertible singletons
        assert_eq!(report.dclasses.len(), 13);
        let regular: Vec<_> = report.dclasses.iter().filter(|d| d.regular).collect();
        assert_eq!(regular.len(), 2);
        assert!(regular.iter().any(|d| d.size == "4"));
    }

    #[test]
    fn mididentities_are_the_identity_block_elements() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 3, 1).unwrap();
        for e in all_mats(&f, 2, 3) {
            let structural = ctx.is_mididentity_structural(&e).unwrap();
            let exhaustive = ctx.is_mididentity(&e, 1 << 20).unwrap();
            assert_eq!(structural, exhaustive, "at {e:?}");
        }
    }

    #[test]
    fn regularity_preserving_elements_are_the_top_class() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f, 2, 2, 1).unwrap();
        let rp = ctx.regularity_preserving_set(1 << 16).unwrap();
        let top: Vec<Matrix> = ctx
            .enumerate_p(1 << 16)
            .unwrap()
            .into_iter()
            .filter(|x| x.rank(ctx.field()) == 1)
            .collect();
        assert_eq!(
            rp.iter().collect::<BTreeSet<_>>(),
            top.iter().collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn classification_and_witnesses() {
        let f2 = gf(2);
        let f4 = gf(4);
        let zero1 = SandwichContext::from_rank(f2.clone(), 2, 2, 0).unwrap();
        let zero2 = SandwichContext::from_rank(f4.clone(), 2, 1, 0).unwrap();
        let verdict = zero1.classify_iso(&zero2);
        assert!(verdict.isomorphic);
        let w = verdict.witness.unwrap();
        assert!(zero1.verify_witness(&zero2, &w, 1 << 20).unwrap());

        let a = Matrix::from_rows(&f2, vec![vec![0, 1], vec![0, 0]]).unwrap();
        let c1 = SandwichContext::from_rank(f2.clone(), 2, 2, 1).unwrap();
        let c2 = SandwichContext::new(f2.clone(), 2, 2, a).unwrap();
        let verdict = c1.classify_iso(&c2);
        assert!(verdict.isomorphic);
        let w = verdict.witness.unwrap();
        assert!(c1.verify_witness(&c2, &w, 1 << 20).unwrap());

        let c3 = SandwichContext::from_rank(f2.clone(), 2, 2, 2).unwrap();
        assert!(!c1.classify_iso(&c3).isomorphic);
        let c4 = SandwichContext::from_rank(f2.clone(), 2, 3, 1).unwrap();
        assert!(!c1.classify_iso(&c4).isomorphic);
        assert!(!zero1.classify_iso(&c1).isomorphic);
        // different presentations of GF(8), rank 1: the field map does the
        // work
        let g1 = Field::new(2, 3, Some(vec![1, 1, 0, 1])).unwrap();
        let g2 = Field::new(2, 3, Some(vec![1, 0, 1, 1])).unwrap();
        let d1 = SandwichContext::from_rank(g1, 1, 2, 1).unwrap();
        let d2 = SandwichContext::from_rank(g2, 1, 2, 1).unwrap();
        let verdict = d1.classify_iso(&d2);
        assert!(verdict.isomorphic);
        let w = verdict.witness.unwrap();
        assert!(d1.verify_witness(&d2, &w, 1 << 20).unwrap());
    }

    #[test]
    fn zero_rank_context_degenerates_cleanly() {
        let f = gf(2);
        let ctx = SandwichContext::from_rank(f.clone(), 2, 2, 0).unwrap();
        for x in all_mats(&f, 2, 2) {
            for y in all_mats(&f, 2, 2) {
                assert!(ctx.star(&x, &y).unwrap().is_zero());
            }
        }
        assert_eq!(ctx.enumerate_p(16).unwrap(), vec![Matrix::zeros(2, 2)]);
        assert_eq!(ctx.idempotents(None, 16).unwrap().len(), 1);
        let report = ctx.eggbox(EggboxScope::All, 1 << 20).unwrap();
        assert_eq!(report.dclasses.len(), 16);
        assert_eq!(report.dclasses.iter().filter(|d| d.regular).count(), 1);
    }
}
