//! Finite partial semigroups and brute-force Green's relations.
//!
//! A partial semigroup here is a family of finite hom-sets S_ij between
//! abstract objects, with an associative product defined exactly when the
//! inner objects match. Matrices of varying shapes over a fixed field are the
//! motivating instance. Fixing a hom-set S_ij and an element a of S_ji turns
//! S_ij into an honest finite semigroup under x * y = x a y; this module
//! builds that semigroup's full multiplication table and computes Green's
//! relations on tables by raw definition-chasing. Nothing in here knows about
//! ranks or row spaces, which is the point: the structural formulas elsewhere
//! in the crate are tested against these tables.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::{count_matrices, enumerate_matrices, Matrix};

/// Default cap on the number of elements a brute-force table may hold.
pub const DEFAULT_TABLE_BUDGET: u64 = 4096;

pub trait PartialSemigroup {
    type Elem: Clone + Eq + Ord + std::hash::Hash + std::fmt::Debug;

    fn object_count(&self) -> usize;

    /// Elements of S_ij in a fixed canonical order.
    fn hom(&self, i: usize, j: usize) -> Result<Vec<Self::Elem>>;

    /// Defined exactly when rho(x) == lam(y).
    fn product(&self, x: &Self::Elem, y: &Self::Elem) -> Option<Self::Elem>;

    fn lam(&self, x: &Self::Elem) -> usize;
    fn rho(&self, x: &Self::Elem) -> usize;

    /// Two-sided identity of S_ii if this partial semigroup has one there.
    fn identity_at(&self, _i: usize) -> Option<Self::Elem> {
        None
    }
}

/// Rectangular matrices over a fixed field, with one object per distinct
/// dimension in `dims`.
pub struct MatrixPsgp {
    pub field: Field,
    pub dims: Vec<usize>,
    pub budget: u64,
}

impl MatrixPsgp {
    pub fn new(field: Field, mut dims: Vec<usize>, budget: u64) -> MatrixPsgp {
        dims.sort_unstable();
        dims.dedup();
        MatrixPsgp { field, dims, budget }
    }

    fn object_of(&self, d: usize) -> usize {
        self.dims.iter().position(|&x| x == d).expect("dimension not among the objects")
    }
}

impl PartialSemigroup for MatrixPsgp {
    type Elem = Matrix;

    fn object_count(&self) -> usize {
        self.dims.len()
    }

    fn hom(&self, i: usize, j: usize) -> Result<Vec<Matrix>> {
        Ok(enumerate_matrices(&self.field, self.dims[i], self.dims[j], self.budget)?.collect())
    }

    fn product(&self, x: &Matrix, y: &Matrix) -> Option<Matrix> {
        x.mul(&self.field, y).ok()
    }

    fn lam(&self, x: &Matrix) -> usize {
        self.object_of(x.rows())
    }

    fn rho(&self, x: &Matrix) -> usize {
        self.object_of(x.cols())
    }

    fn identity_at(&self, i: usize) -> Option<Matrix> {
        Some(Matrix::identity(self.dims[i]))
    }
}

/// A partial semigroup given by an explicit table with undefined entries.
///
/// The text format is: the element count n on the first line, then n rows of
/// n whitespace-separated product indices, -1 meaning undefined. The source
/// and target maps are not part of the format; they are reconstructed from
/// the definedness pattern, which is possible exactly when the table is a
/// partial semigroup in the first place.
pub struct TablePsgp {
    n: usize,
    tbl: Vec<i64>,
    lam: Vec<usize>,
    rho: Vec<usize>,
    objects: usize,
    identities: Vec<Option<u32>>,
}

impl TablePsgp {
    pub fn parse(text: &str) -> Result<TablePsgp> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty table".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad element count".into()))?;
        let mut tbl = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let tok = tokens
                .next()
                .ok_or_else(|| Error::Parse("table is short".into()))?;
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad table entry '{tok}'")))?;
            if v < -1 || v >= n as i64 {
                return Err(Error::Parse(format!("table entry {v} out of range")));
            }
            tbl.push(v);
        }
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing tokens after table".into()));
        }
        TablePsgp::from_table(n, tbl)
    }

    pub fn from_table(n: usize, tbl: Vec<i64>) -> Result<TablePsgp> {
        assert_eq!(tbl.len(), n * n);
        let at = |x: usize, y: usize| tbl[x * n + y];
        // Group elements by their definedness row; these are the rho-classes.
        let mut rho = vec![usize::MAX; n];
        let mut row_patterns: Vec<Vec<bool>> = Vec::new();
        for x in 0..n {
            let pat: Vec<bool> = (0..n).map(|y| at(x, y) >= 0).collect();
            let id = match row_patterns.iter().position(|p| *p == pat) {
                Some(id) => id,
                None => {
                    row_patterns.push(pat);
                    row_patterns.len() - 1
                }
            };
            rho[x] = id;
        }
        // Each element's definedness column must be exactly one rho-class
        // (its source object), or empty, which gets a fresh object.
        let mut objects = row_patterns.len();
        let mut lam = vec![usize::MAX; n];
        let mut fresh: HashMap<Vec<bool>, usize> = HashMap::new();
        for y in 0..n {
            let col: Vec<usize> = (0..n).filter(|&x| at(x, y) >= 0).collect();
            if col.is_empty() {
                let pat: Vec<bool> = vec![false; n];
                let id = *fresh.entry(pat).or_insert_with(|| {
                    objects += 1;
                    objects - 1
                });
                lam[y] = id;
                continue;
            }
            let class = rho[col[0]];
            let full_class: Vec<usize> = (0..n).filter(|&x| rho[x] == class).collect();
            if col != full_class {
                return Err(Error::Parse(format!(
                    "definedness pattern of column {y} is not a partial semigroup source"
                )));
            }
            lam[y] = class;
        }
        // Closure laws: lam(xy) = lam(x), rho(xy) = rho(y).
        for x in 0..n {
            for y in 0..n {
                let v = at(x, y);
                if (v >= 0) != (rho[x] == lam[y]) {
                    return Err(Error::Parse(format!(
                        "definedness of {x}*{y} disagrees with the inferred objects"
                    )));
                }
                if v >= 0 {
                    let v = v as usize;
                    if lam[v] != lam[x] || rho[v] != rho[y] {
                        return Err(Error::Parse(format!(
                            "product {x}*{y} lands in the wrong hom-set"
                        )));
                    }
                }
            }
        }
        // Associativity on all composable triples.
        for x in 0..n {
            for y in 0..n {
                if at(x, y) < 0 {
                    continue;
                }
                for z in 0..n {
                    if at(y, z) < 0 {
                        continue;
                    }
                    if at(at(x, y) as usize, z) != at(x, at(y, z) as usize) {
                        return Err(Error::Parse(format!(
                            "associativity fails at ({x}, {y}, {z})"
                        )));
                    }
                }
            }
        }
        let mut identities: Vec<Option<u32>> = vec![None; objects];
        for i in 0..objects {
            'cand: for e in 0..n {
                if lam[e] != i || rho[e] != i {
                    continue;
                }
                for x in 0..n {
                    if lam[x] == i && at(e, x) != x as i64 {
                        continue 'cand;
                    }
                    if rho[x] == i && at(x, e) != x as i64 {
                        continue 'cand;
                    }
                }
                identities[i] = Some(e as u32);
                break;
            }
        }
        Ok(TablePsgp { n, tbl, lam, rho, objects, identities })
    }
}

impl PartialSemigroup for TablePsgp {
    type Elem = u32;

    fn object_count(&self) -> usize {
        self.objects
    }

    fn hom(&self, i: usize, j: usize) -> Result<Vec<u32>> {
        Ok((0..self.n as u32)
            .filter(|&x| self.lam[x as usize] == i && self.rho[x as usize] == j)
            .collect())
    }

    fn product(&self, x: &u32, y: &u32) -> Option<u32> {
        let v = self.tbl[*x as usize * self.n + *y as usize];
        (v >= 0).then_some(v as u32)
    }

    fn lam(&self, x: &u32) -> usize {
        self.lam[*x as usize]
    }

    fn rho(&self, x: &u32) -> usize {
        self.rho[*x as usize]
    }

    fn identity_at(&self, i: usize) -> Option<u32> {
        self.identities[i]
    }
}

/// Square bit matrix, used for Green's preorders.
#[derive(Clone)]
pub struct BitMat {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMat {
    pub fn new(n: usize) -> BitMat {
        let words = n.div_ceil(64);
        BitMat { n, words, data: vec![0; n * words] }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.data[i * self.words + j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    pub fn or_row_from(&mut self, dst: usize, src: &BitMat, src_row: usize) {
        for w in 0..self.words {
            self.data[dst * self.words + w] |= src.data[src_row * self.words + w];
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Full multiplication table of a finite semigroup on indices 0..n.
pub struct SemigroupTable {
    n: usize,
    tbl: Vec<u32>,
}

impl SemigroupTable {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> usize) -> SemigroupTable {
        let mut tbl = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                let v = f(x, y);
                assert!(v < n);
                tbl.push(v as u32);
            }
        }
        SemigroupTable { n, tbl }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> usize {
        self.tbl[x * self.n + y] as usize
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// First associativity violation, if any.
    pub fn associativity_counterexample(&self) -> Option<(usize, usize, usize)> {
        for x in 0..self.n {
            for y in 0..self.n {
                let xy = self.at(x, y);
                for z in 0..self.n {
                    if self.at(xy, z) != self.at(x, self.at(y, z)) {
                        return Some((x, y, z));
                    }
                }
            }
        }
        None
    }
}

/// The sandwich semigroup (S_ij, x * y = x a y) as an indexed table, together
/// with the element list in canonical order.
pub fn build_sandwich<T: PartialSemigroup>(
    s: &T,
    i: usize,
    j: usize,
    a: &T::Elem,
    budget: u64,
) -> Result<(Vec<T::Elem>, SemigroupTable)> {
    if s.lam(a) != j || s.rho(a) != i {
        return Err(Error::BadSandwichElement);
    }
    let elems = s.hom(i, j)?;
    let n = elems.len();
    if n as u64 > budget {
        return Err(Error::BudgetExceeded { needed: n as u64, budget });
    }
    let mut index: HashMap<&T::Elem, u32> = HashMap::with_capacity(n);
    for (k, e) in elems.iter().enumerate() {
        index.insert(e, k as u32);
    }
    let mut tbl = vec![0u32; n * n];
    for (x, ex) in elems.iter().enumerate() {
        let xa = s.product(ex, a).expect("x a must be defined");
        for (y, ey) in elems.iter().enumerate() {
            let xay = s.product(&xa, ey).expect("x a y must be defined");
            tbl[x * n + y] = *index.get(&xay).expect("product escaped the hom-set");
        }
    }
    Ok((elems, SemigroupTable { n, tbl }))
}

/// Green's data for a finite semigroup table, computed from the definitions.
/// Class ids are canonical: each class is named by its least member index, so
/// two decompositions agree iff the id vectors are equal.
pub struct GreenData {
    pub n: usize,
    /// below_r.get(x, y) means x lies in y S^1 (x is R-below y)
    pub below_r: BitMat,
    pub below_l: BitMat,
    pub below_j: BitMat,
    pub r_class: Vec<u32>,
    pub l_class: Vec<u32>,
    pub h_class: Vec<u32>,
    pub d_class: Vec<u32>,
    pub j_class: Vec<u32>,
    pub regular: Vec<bool>,
    pub idempotent: Vec<bool>,
}

impl GreenData {
    pub fn d_equals_j(&self) -> bool {
        self.d_class == self.j_class
    }
}

fn classes_from_preorder(below: &BitMat) -> Vec<u32> {
    let n = below.n();
    let mut class = vec![u32::MAX; n];
    for x in 0..n {
        if class[x] != u32::MAX {
            continue;
        }
        class[x] = x as u32;
        for y in x + 1..n {
            if class[y] == u32::MAX && below.get(x, y) && below.get(y, x) {
                class[y] = x as u32;
            }
        }
    }
    class
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Union keeping the smaller index as root.
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
    }
}

pub fn brute_green(t: &SemigroupTable, budget: u64) -> Result<GreenData> {
    let n = t.n();
    if n as u64 > budget {
        return Err(Error::BudgetExceeded { needed: n as u64, budget });
    }
    // x <=_R y iff x in y S^1; right division is transitive as-is.
    let mut below_r = BitMat::new(n);
    let mut below_l = BitMat::new(n);
    // members_r.row(y) = the set y S^1, i.e. {x : x <=_R y}
    let mut members_r = BitMat::new(n);
    let mut left_mult = BitMat::new(n); // row y = S^1 y
    for y in 0..n {
        below_r.set(y, y);
        below_l.set(y, y);
        members_r.set(y, y);
        left_mult.set(y, y);
        for u in 0..n {
            let yu = t.at(y, u);
            below_r.set(yu, y);
            members_r.set(y, yu);
            let uy = t.at(u, y);
            below_l.set(uy, y);
            left_mult.set(y, uy);
        }
    }
    // x <=_J y iff x in S^1 y S^1 = union of w S^1 over w in S^1 y.
    let mut below_j = BitMat::new(n);
    let mut j_members = BitMat::new(n);
    for y in 0..n {
        let row = left_mult.row(y).to_vec();
        for (wi, &word) in row.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let w = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                j_members.or_row_from(y, &members_r, w);
            }
        }
    }
    for y in 0..n {
        let row = j_members.row(y).to_vec();
        for (wi, &word) in row.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let x = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                below_j.set(x, y);
            }
        }
    }

    let r_class = classes_from_preorder(&below_r);
    let l_class = classes_from_preorder(&below_l);
    let j_class = classes_from_preorder(&below_j);

    // H = R meet L; D = R join L.
    let mut h_class = vec![u32::MAX; n];
    let mut h_rep: HashMap<(u32, u32), u32> = HashMap::new();
    for x in 0..n {
        let key = (r_class[x], l_class[x]);
        let rep = *h_rep.entry(key).or_insert(x as u32);
        h_class[x] = rep;
    }
    let mut uf = UnionFind::new(n);
    for x in 0..n {
        uf.union(r_class[x], x as u32);
        uf.union(l_class[x], x as u32);
    }
    let d_class: Vec<u32> = (0..n as u32).map(|x| uf.find(x)).collect();

    let mut regular = vec![false; n];
    let mut idempotent = vec![false; n];
    for x in 0..n {
        idempotent[x] = t.at(x, x) == x;
        regular[x] = (0..n).any(|y| t.at(t.at(x, y), x) == x);
    }

    Ok(GreenData {
        n,
        below_r,
        below_l,
        below_j,
        r_class,
        l_class,
        h_class,
        d_class,
        j_class,
        regular,
        idempotent,
    })
}

/// Green's preorders and classes across all hom-sets of a partial semigroup,
/// by the raw divisibility definitions. Multipliers range over every hom-set
/// (plus the absent identity), so this is Green's theory of S itself, not of
/// any single hom-set with a sandwich product.
pub struct PsgpGreen<E> {
    pub elems: Vec<E>,
    pub index: HashMap<E, usize>,
    pub below_r: BitMat,
    pub below_l: BitMat,
    pub below_j: BitMat,
    pub r_class: Vec<u32>,
    pub l_class: Vec<u32>,
    pub h_class: Vec<u32>,
    pub d_class: Vec<u32>,
    pub j_class: Vec<u32>,
}

impl<E: Clone + Eq + std::hash::Hash> PsgpGreen<E> {
    pub fn idx(&self, e: &E) -> usize {
        self.index[e]
    }

    pub fn r_related(&self, x: &E, y: &E) -> bool {
        self.r_class[self.idx(x)] == self.r_class[self.idx(y)]
    }

    pub fn l_related(&self, x: &E, y: &E) -> bool {
        self.l_class[self.idx(x)] == self.l_class[self.idx(y)]
    }

    pub fn h_related(&self, x: &E, y: &E) -> bool {
        self.h_class[self.idx(x)] == self.h_class[self.idx(y)]
    }

    pub fn d_related(&self, x: &E, y: &E) -> bool {
        self.d_class[self.idx(x)] == self.d_class[self.idx(y)]
    }

    pub fn j_related(&self, x: &E, y: &E) -> bool {
        self.j_class[self.idx(x)] == self.j_class[self.idx(y)]
    }
}

pub fn psgp_green<T: PartialSemigroup>(s: &T, budget: u64) -> Result<PsgpGreen<T::Elem>> {
    let k = s.object_count();
    let mut elems: Vec<T::Elem> = Vec::new();
    for i in 0..k {
        for j in 0..k {
            elems.extend(s.hom(i, j)?);
        }
    }
    let n = elems.len();
    if n as u64 > budget {
        return Err(Error::BudgetExceeded { needed: n as u64, budget });
    }
    let mut index: HashMap<T::Elem, usize> = HashMap::with_capacity(n);
    for (k, e) in elems.iter().enumerate() {
        index.insert(e.clone(), k);
    }
    // hom membership lists for multiplier scans
    let mut by_lam: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (xi, x) in elems.iter().enumerate() {
        by_lam[s.lam(x)].push(xi);
    }

    let mut below_r = BitMat::new(n);
    let mut below_l = BitMat::new(n);
    let mut members_r = BitMat::new(n);
    let mut left_mult = BitMat::new(n);
    for (yi, y) in elems.iter().enumerate() {
        below_r.set(yi, yi);
        below_l.set(yi, yi);
        members_r.set(yi, yi);
        left_mult.set(yi, yi);
        for &ui in &by_lam[s.rho(y)] {
            let yu = s.product(y, &elems[ui]).expect("composable by construction");
            let zi = index[&yu];
            below_r.set(zi, yi);
            members_r.set(yi, zi);
        }
    }
    for (ui, u) in elems.iter().enumerate() {
        for &yi in &by_lam[s.rho(u)] {
            let uy = s.product(u, &elems[yi]).expect("composable by construction");
            let zi = index[&uy];
            below_l.set(zi, yi);
            left_mult.set(yi, zi);
        }
        let _ = ui;
    }
    let mut below_j = BitMat::new(n);
    let mut j_members = BitMat::new(n);
    for y in 0..n {
        let row = left_mult.row(y).to_vec();
        for (wi, &word) in row.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let w = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                j_members.or_row_from(y, &members_r, w);
            }
        }
    }
    for y in 0..n {
        let row = j_members.row(y).to_vec();
        for (wi, &word) in row.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let x = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                below_j.set(x, y);
            }
        }
    }
    let r_class = classes_from_preorder(&below_r);
    let l_class = classes_from_preorder(&below_l);
    let j_class = classes_from_preorder(&below_j);
    let mut h_class = vec![u32::MAX; n];
    let mut h_rep: HashMap<(u32, u32), u32> = HashMap::new();
    for x in 0..n {
        let key = (r_class[x], l_class[x]);
        let rep = *h_rep.entry(key).or_insert(x as u32);
        h_class[x] = rep;
    }
    let mut uf = UnionFind::new(n);
    for x in 0..n {
        uf.union(r_class[x], x as u32);
        uf.union(l_class[x], x as u32);
    }
    let d_class: Vec<u32> = (0..n as u32).map(|x| uf.find(x)).collect();
    Ok(PsgpGreen {
        elems,
        index,
        below_r,
        below_l,
        below_j,
        r_class,
        l_class,
        h_class,
        d_class,
        j_class,
    })
}

/// Result of checking the sandwich Green's classes of (S_ij, *_a) against the
/// Green's classes of S itself: each relation's classes must be the
/// advertised intersections or singletons.
#[derive(Debug)]
pub struct GreenSijReport {
    pub n: usize,
    pub p1_size: usize,
    pub p2_size: usize,
    pub p3_size: usize,
    pub p_size: usize,
    pub reg_matches_p: bool,
    pub d_equals_j: bool,
    pub failures: Vec<String>,
}

impl GreenSijReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Clause-by-clause verification that the sandwich Green's relations on
/// (S_ij, *_a) restrict and collapse the relations of S in the expected way:
///
/// - R-classes: R^a_x = R_x intersected with P1 for x in P1, else {x}
/// - L-classes: dual, with P2
/// - H-classes: H^a_x = H_x for x in P = P1 n P2, else {x}
/// - D-classes: D_x n P for x in P; R^a_x on P1 \ P2; L^a_x on P2 \ P1;
///   {x} outside P1 u P2
/// - J-classes: J_x n P3 for x in P3, else D^a_x
///
/// where P1 = {x : x R x a}, P2 = {x : x L a x}, P3 = {x : x J a x a}.
/// Additionally, when a is regular in S the regular elements of the sandwich
/// are exactly P, and D^a = J^a always (finite, hence stable).
pub fn verify_green_sij<T: PartialSemigroup>(
    s: &T,
    i: usize,
    j: usize,
    a: &T::Elem,
    budget: u64,
) -> Result<GreenSijReport> {
    if s.lam(a) != j || s.rho(a) != i {
        return Err(Error::BadSandwichElement);
    }
    let (elems, table) = build_sandwich(s, i, j, a, budget)?;
    let sg = brute_green(&table, budget)?;
    let gg = psgp_green(s, budget)?;
    let n = elems.len();
    let gidx: Vec<usize> = elems.iter().map(|e| gg.idx(e)).collect();

    let mut in_p1 = vec![false; n];
    let mut in_p2 = vec![false; n];
    let mut in_p3 = vec![false; n];
    for (xi, x) in elems.iter().enumerate() {
        let xa = s.product(x, a).expect("x a defined");
        let ax = s.product(a, x).expect("a x defined");
        let axa = s.product(&ax, a).expect("a x a defined");
        in_p1[xi] = gg.r_class[gidx[xi]] == gg.r_class[gg.idx(&xa)];
        in_p2[xi] = gg.l_class[gidx[xi]] == gg.l_class[gg.idx(&ax)];
        in_p3[xi] = gg.j_class[gidx[xi]] == gg.j_class[gg.idx(&axa)];
    }
    let in_p: Vec<bool> = (0..n).map(|x| in_p1[x] && in_p2[x]).collect();

    let mut failures = Vec::new();
    let mut fail = |msg: String, failures: &mut Vec<String>| {
        if failures.len() < 8 {
            failures.push(msg);
        }
    };

    for x in 0..n {
        for y in 0..n {
            // R clause
            let expected = if in_p1[x] {
                in_p1[y] && gg.r_class[gidx[x]] == gg.r_class[gidx[y]]
            } else {
                x == y
            };
            if (sg.r_class[x] == sg.r_class[y]) != expected {
                fail(format!("R clause fails at pair ({x}, {y})"), &mut failures);
            }
            // L clause
            let expected = if in_p2[x] {
                in_p2[y] && gg.l_class[gidx[x]] == gg.l_class[gidx[y]]
            } else {
                x == y
            };
            if (sg.l_class[x] == sg.l_class[y]) != expected {
                fail(format!("L clause fails at pair ({x}, {y})"), &mut failures);
            }
            // H clause
            let expected = if in_p[x] {
                gg.h_class[gidx[x]] == gg.h_class[gidx[y]]
            } else {
                x == y
            };
            if (sg.h_class[x] == sg.h_class[y]) != expected {
                fail(format!("H clause fails at pair ({x}, {y})"), &mut failures);
            }
            // D clause
            let expected = if in_p[x] {
                in_p[y] && gg.d_class[gidx[x]] == gg.d_class[gidx[y]]
            } else if in_p1[x] {
                sg.r_class[x] == sg.r_class[y]
            } else if in_p2[x] {
                sg.l_class[x] == sg.l_class[y]
            } else {
                x == y
            };
            if (sg.d_class[x] == sg.d_class[y]) != expected {
                fail(format!("D clause fails at pair ({x}, {y})"), &mut failures);
            }
            // J clause
            let expected = if in_p3[x] {
                in_p3[y] && gg.j_class[gidx[x]] == gg.j_class[gidx[y]]
            } else {
                sg.d_class[x] == sg.d_class[y]
            };
            if (sg.j_class[x] == sg.j_class[y]) != expected {
                fail(format!("J clause fails at pair ({x}, {y})"), &mut failures);
            }
        }
    }

    // a regular in S implies Reg(S_ij, *_a) = P
    let a_regular = {
        let homij = s.hom(i, j)?;
        homij.iter().any(|x| {
            let axa = s
                .product(&s.product(a, x).expect("a x defined"), a)
                .expect("a x a defined");
            axa == *a
        })
    };
    let reg_matches_p = if a_regular {
        let ok = (0..n).all(|x| sg.regular[x] == in_p[x]);
        if !ok {
            fail("regular elements do not match P".into(), &mut failures);
        }
        ok
    } else {
        true
    };
    let d_equals_j = sg.d_equals_j();
    if !d_equals_j {
        fail("D differs from J on a finite semigroup".into(), &mut failures);
    }

    Ok(GreenSijReport {
        n,
        p1_size: in_p1.iter().filter(|&&b| b).count(),
        p2_size: in_p2.iter().filter(|&&b| b).count(),
        p3_size: in_p3.iter().filter(|&&b| b).count(),
        p_size: in_p.iter().filter(|&&b| b).count(),
        reg_matches_p,
        d_equals_j,
        failures,
    })
}

/// Checks the corner isomorphisms tied to a sandwich element a in S_ji with
/// inner inverse b in S_ij (a b a = a, b a b = b):
///
/// - (a S_ij a, *_b) is a monoid with identity a, and (b S_ji b, *_a) is a
///   monoid with identity b;
/// - x -> b x b and y -> a y a are mutually inverse isomorphisms between
///   them;
/// - x -> x a and x -> a x are homomorphisms from (S_ij, *_a) onto the
///   corner subsemigroups S_ij a and a S_ij of S.
#[derive(Debug)]
pub struct CornerLawsReport {
    pub corner_a_size: usize,
    pub corner_b_size: usize,
    pub failures: Vec<String>,
}

impl CornerLawsReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_corner_laws<T: PartialSemigroup>(
    s: &T,
    i: usize,
    j: usize,
    a: &T::Elem,
    b: &T::Elem,
    budget: u64,
) -> Result<CornerLawsReport> {
    if s.lam(a) != j || s.rho(a) != i || s.lam(b) != i || s.rho(b) != j {
        return Err(Error::BadSandwichElement);
    }
    let prod3 = |x: &T::Elem, y: &T::Elem, z: &T::Elem| {
        s.product(&s.product(x, y).expect("composable"), z).expect("composable")
    };
    if prod3(a, b, a) != *a || prod3(b, a, b) != *b {
        return Err(Error::NotRegular);
    }
    let homij = s.hom(i, j)?;
    if homij.len() as u64 > budget {
        return Err(Error::BudgetExceeded { needed: homij.len() as u64, budget });
    }
    let mut failures = Vec::new();

    let mut corner_a: Vec<T::Elem> = homij.iter().map(|x| prod3(a, x, a)).collect();
    corner_a.sort();
    corner_a.dedup();
    let homji = s.hom(j, i)?;
    let mut corner_b: Vec<T::Elem> = homji.iter().map(|y| prod3(b, y, b)).collect();
    corner_b.sort();
    corner_b.dedup();

    // monoid laws
    for x in &corner_a {
        if prod3(a, b, x) != *x || prod3(x, b, a) != *x {
            failures.push("a is not the identity of (a S a, *_b)".into());
            break;
        }
    }
    for y in &corner_b {
        if prod3(b, a, y) != *y || prod3(y, a, b) != *y {
            failures.push("b is not the identity of (b S b, *_a)".into());
            break;
        }
    }
    // closure of the corners under their sandwich products
    for x in &corner_a {
        for y in &corner_a {
            if corner_a.binary_search(&prod3(x, b, y)).is_err() {
                failures.push("(a S a, *_b) is not closed".into());
            }
        }
    }
    // mutually inverse isomorphisms
    for x in &corner_a {
        let bx = prod3(b, x, b);
        if corner_b.binary_search(&bx).is_err() {
            failures.push("b x b leaves the b-corner".into());
        }
        if prod3(a, &bx, a) != *x {
            failures.push("a(bxb)a does not return x".into());
        }
    }
    for x in &corner_a {
        for y in &corner_a {
            let lhs = prod3(b, &prod3(x, b, y), b);
            let rhs = prod3(&prod3(b, x, b), a, &prod3(b, y, b));
            if lhs != rhs {
                failures.push("x -> b x b is not a homomorphism".into());
            }
        }
    }
    // x -> x a and x -> a x are homomorphisms from the sandwich semigroup
    for x in homij.iter().take(64) {
        for y in homij.iter().take(64) {
            let star = prod3(x, a, y);
            let lhs = s.product(&star, a).expect("composable");
            let rhs = s
                .product(&s.product(x, a).expect("composable"), &s.product(y, a).expect("composable"))
                .expect("composable");
            if lhs != rhs {
                failures.push("x -> x a is not a homomorphism".into());
            }
            let lhs = s.product(a, &star).expect("composable");
            let rhs = s
                .product(&s.product(a, x).expect("composable"), &s.product(a, y).expect("composable"))
                .expect("composable");
            if lhs != rhs {
                failures.push("x -> a x is not a homomorphism".into());
            }
        }
    }
    failures.dedup();
    Ok(CornerLawsReport {
        corner_a_size: corner_a.len(),
        corner_b_size: corner_b.len(),
        failures,
    })
}

pub fn matrix_psgp_size(q: u16, dims: &[usize]) -> u128 {
    let mut total: u128 = 0;
    for &a in dims {
        for &b in dims {
            total += count_matrices(q, a, b);
        }
    }
    total
}
