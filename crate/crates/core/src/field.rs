//! Arithmetic in GF(q) for q = p^k up to 256.
//!
//! Elements are integer representatives in [0, q). For extension fields the
//! representative is read base p, least significant digit first, as the
//! coefficients of a polynomial in the generator x modulo a monic irreducible
//! `modulus`. All operations go through tables built at construction, so a
//! `Field` is cheap to use and moderately cheap to clone.

use crate::error::{Error, Result};

/// Field element representative. Always < q <= 256.
pub type Fe = u16;

pub const MAX_Q: u64 = 256;

#[derive(Clone)]
pub struct Field {
    pub p: u16,
    pub k: u32,
    pub q: u16,
    /// Monic modulus of degree k over GF(p), constant coefficient first.
    /// For k = 1 this is the canonical [0, 1] (the polynomial x).
    pub modulus: Vec<u16>,
    add_t: Vec<Fe>,
    mul_t: Vec<Fe>,
    neg_t: Vec<Fe>,
    inv_t: Vec<Fe>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}
impl Eq for Field {}

impl std::fmt::Debug for Field {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "Field({})", self.literal())
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// --- dense polynomials over GF(p), coefficient vectors with c[0] the constant term ---

fn poly_trim(c: &mut Vec<u16>) {
    while c.last() == Some(&0) {
        c.pop();
    }
}

fn poly_mul(p: u16, a: &[u16], b: &[u16]) -> Vec<u16> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u32; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + ai as u32 * bj as u32) % p as u32;
        }
    }
    let mut out: Vec<u16> = out.into_iter().map(|c| c as u16).collect();
    poly_trim(&mut out);
    out
}

/// Remainder of a by the monic polynomial m.
fn poly_rem(p: u16, a: &[u16], m: &[u16]) -> Vec<u16> {
    debug_assert_eq!(*m.last().unwrap(), 1);
    let mut r: Vec<u16> = a.to_vec();
    poly_trim(&mut r);
    let d = m.len() - 1;
    while r.len() > d {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - d;
        for i in 0..=d {
            let sub = (lead as u32 * m[i] as u32) % p as u32;
            let cur = r[shift + i] as u32;
            r[shift + i] = ((cur + p as u32 - sub % p as u32) % p as u32) as u16;
        }
        poly_trim(&mut r);
    }
    r
}

/// Irreducibility over GF(p) by trial division against all monic polynomials
/// of degree 1..=deg/2. Fine for the degrees this crate supports.
pub fn is_irreducible(p: u16, poly: &[u16]) -> Result<bool> {
    if !is_prime(p as u64) {
        return Err(Error::NonPrimeCharacteristic(p as u64));
    }
    let mut c = poly.to_vec();
    poly_trim(&mut c);
    if c.len() < 2 {
        return Ok(false);
    }
    if *c.last().unwrap() != 1 {
        return Err(Error::NonMonic);
    }
    let deg = c.len() - 1;
    if c[0] == 0 {
        // divisible by x
        return Ok(deg == 1);
    }
    for d in 1..=deg / 2 {
        // candidate divisors: monic of degree d, low coefficients counted base p
        let count = (p as u64).pow(d as u32);
        for idx in 0..count {
            let mut cand = Vec::with_capacity(d + 1);
            let mut v = idx;
            for _ in 0..d {
                cand.push((v % p as u64) as u16);
                v /= p as u64;
            }
            cand.push(1);
            if poly_rem(p, &c, &cand).is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The lexicographically least monic irreducible polynomial of degree k over
/// GF(p), ordering candidates by their low-coefficient vector read as a base-p
/// integer, constant term least significant.
pub fn least_irreducible(p: u16, k: u32) -> Result<Vec<u16>> {
    let count = (p as u64).pow(k);
    for idx in 0..count {
        let mut cand = Vec::with_capacity(k as usize + 1);
        let mut v = idx;
        for _ in 0..k {
            cand.push((v % p as u64) as u16);
            v /= p as u64;
        }
        cand.push(1);
        if is_irreducible(p, &cand)? {
            return Ok(cand);
        }
    }
    Err(Error::SearchExhausted(format!(
        "no irreducible polynomial of degree {k} over GF({p})"
    )))
}

impl Field {
    /// GF(p) for prime p.
    pub fn prime(p: u16) -> Result<Field> {
        Field::new(p, 1, None)
    }

    /// GF(p^k). With `modulus: None` the lexicographically least monic
    /// irreducible polynomial of degree k is used.
    pub fn new(p: u16, k: u32, modulus: Option<Vec<u16>>) -> Result<Field> {
        if !is_prime(p as u64) {
            return Err(Error::NonPrimeCharacteristic(p as u64));
        }
        if k == 0 {
            return Err(Error::UnsupportedParameters("k must be >= 1".into()));
        }
        let q = (p as u64).checked_pow(k).filter(|&q| q <= MAX_Q).ok_or(
            Error::FieldTooLarge((p as u64).saturating_pow(k)),
        )? as u16;
        let modulus = if k == 1 {
            // ignored for prime fields; keep the canonical x
            vec![0, 1]
        } else {
            match modulus {
                Some(mut m) => {
                    for c in m.iter_mut() {
                        *c %= p;
                    }
                    poly_trim(&mut m);
                    if m.len() != k as usize + 1 {
                        return Err(Error::DomainError(format!(
                            "modulus must have degree {k}"
                        )));
                    }
                    if *m.last().unwrap() != 1 {
                        return Err(Error::NonMonic);
                    }
                    if !is_irreducible(p, &m)? {
                        return Err(Error::ReducibleModulus);
                    }
                    m
                }
                None => least_irreducible(p, k)?,
            }
        };

        let qe = q as usize;
        let mut f = Field {
            p,
            k,
            q,
            modulus,
            add_t: vec![0; qe * qe],
            mul_t: vec![0; qe * qe],
            neg_t: vec![0; qe],
            inv_t: vec![0; qe],
        };
        for a in 0..q {
            for b in 0..q {
                f.add_t[a as usize * qe + b as usize] = f.add_slow(a, b);
                f.mul_t[a as usize * qe + b as usize] = f.mul_slow(a, b);
            }
        }
        for a in 0..q {
            for b in 0..q {
                if f.add_t[a as usize * qe + b as usize] == 0 {
                    f.neg_t[a as usize] = b;
                }
                if a != 0 && f.mul_t[a as usize * qe + b as usize] == 1 {
                    f.inv_t[a as usize] = b;
                }
            }
        }
        Ok(f)
    }

    fn digits(&self, a: Fe) -> Vec<u16> {
        let mut v = Vec::with_capacity(self.k as usize);
        let mut a = a;
        for _ in 0..self.k {
            v.push(a % self.p);
            a /= self.p;
        }
        v
    }

    fn undigits(&self, d: &[u16]) -> Fe {
        let mut a = 0u32;
        for &c in d.iter().rev() {
            a = a * self.p as u32 + c as u32;
        }
        a as Fe
    }

    fn add_slow(&self, a: Fe, b: Fe) -> Fe {
        if self.k == 1 {
            return (a + b) % self.p;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: Vec<u16> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.undigits(&sum)
    }

    fn mul_slow(&self, a: Fe, b: Fe) -> Fe {
        if self.k == 1 {
            return ((a as u32 * b as u32) % self.p as u32) as Fe;
        }
        let prod = poly_mul(self.p, &self.digits(a), &self.digits(b));
        let rem = poly_rem(self.p, &prod, &self.modulus);
        let mut d = rem;
        d.resize(self.k as usize, 0);
        self.undigits(&d)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        self.add_t[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        self.mul_t[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        self.neg_t[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a == 0 {
            return Err(Error::DivideByZero);
        }
        Ok(self.inv_t[a as usize])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc: Fe = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: Fe) -> Result<u64> {
        if a == 0 {
            return Err(Error::DivideByZero);
        }
        let mut x = a;
        let mut ord = 1u64;
        while x != 1 {
            x = self.mul(x, a);
            ord += 1;
        }
        Ok(ord)
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        0..self.q
    }

    /// Checked conversion of an integer representative.
    pub fn elem(&self, v: u64) -> Result<Fe> {
        if v < self.q as u64 {
            Ok(v as Fe)
        } else {
            Err(Error::DomainError(format!(
                "representative {v} out of range for GF({})",
                self.q
            )))
        }
    }

    /// Value-indexed table of a field isomorphism from `self` to `other`.
    ///
    /// Two fields of the same order are isomorphic even when presented with
    /// different moduli; the map is pinned down by sending self's generator x
    /// to the least root of self's modulus inside `other`. The returned table
    /// is verified to respect + and * on every pair before it is returned.
    pub fn isomorphism_to(&self, other: &Field) -> Result<Vec<Fe>> {
        if self.p != other.p || self.k != other.k {
            return Err(Error::DomainError(format!(
                "GF({}) and GF({}) are not isomorphic",
                self.q, other.q
            )));
        }
        // prime-subfield values 0..p encode the same elements in both fields
        let eval = |t: Fe| {
            let mut acc: Fe = 0;
            for &c in self.modulus.iter().rev() {
                acc = other.add(other.mul(acc, t), c);
            }
            acc
        };
        let root = other
            .elements()
            .find(|&t| eval(t) == 0)
            .expect("the modulus splits in any field of the same order");
        let mut table = vec![0 as Fe; self.q as usize];
        for v in 0..self.q {
            // digits of v base p are the coefficients; Horner at the root
            let mut digits = Vec::new();
            let mut rest = v;
            while rest > 0 {
                digits.push(rest % self.p);
                rest /= self.p;
            }
            let mut acc: Fe = 0;
            for &d in digits.iter().rev() {
                acc = other.add(other.mul(acc, root), d);
            }
            table[v as usize] = acc;
        }
        for a in self.elements() {
            for b in self.elements() {
                let hom_mul = table[self.mul(a, b) as usize]
                    == other.mul(table[a as usize], table[b as usize]);
                let hom_add = table[self.add(a, b) as usize]
                    == other.add(table[a as usize], table[b as usize]);
                if !hom_mul || !hom_add {
                    return Err(Error::AssertionFailure(format!(
                        "isomorphism table broken at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(table)
    }

    /// Field literal: `p`, `p^k`, or `p^k/c0,c1,...,ck`.
    ///
    /// The short form `p^k` means the canonical (lexicographically least)
    /// modulus; the long form spells the modulus coefficients, constant term
    /// first. The literal round-trips through `parse_literal`.
    pub fn literal(&self) -> String {
        if self.k == 1 {
            return format!("{}", self.p);
        }
        if self.modulus == least_irreducible(self.p, self.k).unwrap() {
            format!("{}^{}", self.p, self.k)
        } else {
            let coeffs: Vec<String> = self.modulus.iter().map(|c| c.to_string()).collect();
            format!("{}^{}/{}", self.p, self.k, coeffs.join(","))
        }
    }

    pub fn parse_literal(s: &str) -> Result<Field> {
        let s = s.trim();
        let bad = |m: &str| Error::Parse(format!("field literal '{s}': {m}"));
        let (base, modulus) = match s.split_once('/') {
            Some((b, m)) => (b, Some(m)),
            None => (s, None),
        };
        let (p_str, k_str) = match base.split_once('^') {
            Some((p, k)) => (p, Some(k)),
            None => (base, None),
        };
        let p: u16 = p_str.parse().map_err(|_| bad("bad characteristic"))?;
        let k: u32 = match k_str {
            Some(k) => k.parse().map_err(|_| bad("bad exponent"))?,
            None => 1,
        };
        let modulus = match modulus {
            Some(m) => {
                let coeffs: std::result::Result<Vec<u16>, _> =
                    m.split(',').map(|c| c.trim().parse()).collect();
                Some(coeffs.map_err(|_| bad("bad modulus coefficients"))?)
            }
            None => None,
        };
        if modulus.is_some() && k == 1 {
            return Err(bad("prime fields take no modulus"));
        }
        Field::new(p, k, modulus)
    }
}
