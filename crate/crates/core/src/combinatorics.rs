//! Exact cardinality formulas: q-factorials, Gaussian binomials, general
//! linear group orders, and the class counts they assemble into. Everything
//! returns `BigUint` so no parameter range silently overflows.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn qpow(q: u64, e: u64) -> BigUint {
    big(q).pow(e as u32)
}

/// [s]_q = 1 + q + ... + q^(s-1).
pub fn q_int(q: u64, s: u64) -> BigUint {
    let mut acc = BigUint::zero();
    for e in 0..s {
        acc += qpow(q, e);
    }
    acc
}

/// [s]_q! = [1]_q [2]_q ... [s]_q.
pub fn q_factorial(q: u64, s: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 1..=s {
        acc *= q_int(q, i);
    }
    acc
}

/// Gaussian binomial [m choose s]_q: the number of s-dimensional subspaces
/// of GF(q)^m. Zero when s > m.
pub fn q_binomial(q: u64, m: u64, s: u64) -> BigUint {
    if s > m {
        return BigUint::zero();
    }
    // product formula (q^m - q^i) / (q^s - q^i); exact over the integers
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..s {
        num *= qpow(q, m) - qpow(q, i);
        den *= qpow(q, s) - qpow(q, i);
    }
    num / den
}

/// |GL_s(q)| = q^C(s,2) (q-1)^s [s]_q!.
pub fn gl_order(q: u64, s: u64) -> BigUint {
    qpow(q, s * s.saturating_sub(1) / 2) * big(q - 1).pow(s as u32) * q_factorial(q, s)
}

/// Counts for the rank-s class of all m x n matrices: number of R-classes
/// (column spaces), L-classes (row spaces), H-class size, and total size.
#[derive(Debug, Clone)]
pub struct MDClassCounts {
    pub n_r: BigUint,
    pub n_l: BigUint,
    pub h_size: BigUint,
    pub size: BigUint,
}

pub fn mmn_dclass_counts(q: u64, m: u64, n: u64, s: u64) -> MDClassCounts {
    let n_r = q_binomial(q, m, s);
    let n_l = q_binomial(q, n, s);
    let h_size = gl_order(q, s);
    let size = &n_r * &n_l * &h_size;
    MDClassCounts { n_r, n_l, h_size, size }
}

/// Per-class counts in the rank-s regular layer of the sandwich semigroup
/// with parameters (q, m, n, r), 0 <= s <= r.
#[derive(Debug, Clone)]
pub struct SandwichClassCounts {
    /// size of one R-class
    pub r_size: BigUint,
    /// size of one L-class
    pub l_size: BigUint,
    /// size of one H-class
    pub h_size: BigUint,
    /// number of R-classes in the layer
    pub n_r: BigUint,
    /// number of L-classes in the layer
    pub n_l: BigUint,
    /// number of H-classes in the layer
    pub n_h: BigUint,
    /// size of the whole layer
    pub d_size: BigUint,
}

pub fn sandwich_counts(q: u64, m: u64, n: u64, r: u64, s: u64) -> Result<SandwichClassCounts> {
    if r > m.min(n) || s > r {
        return Err(Error::DomainError(format!(
            "need s <= r <= min(m, n); got m={m} n={n} r={r} s={s}"
        )));
    }
    let gl = gl_order(q, s);
    let bin = q_binomial(q, r, s);
    let r_size = qpow(q, s * (n - r)) * &gl * &bin;
    let l_size = qpow(q, s * (m - r)) * &gl * &bin;
    let n_r = qpow(q, s * (m - r)) * &bin;
    let n_l = qpow(q, s * (n - r)) * &bin;
    let n_h = qpow(q, s * (m + n - 2 * r)) * &bin * &bin;
    let d_size = &n_h * &gl;
    Ok(SandwichClassCounts { r_size, l_size, h_size: gl, n_r, n_l, n_h, d_size })
}

/// Number of regular elements of the sandwich semigroup: the sum of the
/// rank-s layer sizes over 0 <= s <= r.
pub fn regular_count(q: u64, m: u64, n: u64, r: u64) -> Result<BigUint> {
    let mut acc = BigUint::zero();
    for s in 0..=r {
        acc += sandwich_counts(q, m, n, r, s)?.d_size;
    }
    Ok(acc)
}

/// Idempotents of rank s among r x r matrices.
pub fn idempotents_mr(q: u64, r: u64, s: u64) -> BigUint {
    qpow(q, s * (r - s)) * q_binomial(q, r, s)
}

/// Idempotents of rank s in the sandwich semigroup with parameters
/// (q, m, n, r), 0 <= s <= r.
pub fn idempotents_sandwich(q: u64, m: u64, n: u64, r: u64, s: u64) -> Result<BigUint> {
    if r > m.min(n) || s > r {
        return Err(Error::DomainError(format!(
            "need s <= r <= min(m, n); got m={m} n={n} r={r} s={s}"
        )));
    }
    Ok(qpow(q, s * (m + n - r - s)) * q_binomial(q, r, s))
}

pub fn idempotents_sandwich_total(q: u64, m: u64, n: u64, r: u64) -> Result<BigUint> {
    let mut acc = BigUint::zero();
    for s in 0..=r {
        acc += idempotents_sandwich(q, m, n, r, s)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankTarget {
    /// the whole sandwich semigroup
    Full,
    /// its regular subsemigroup
    Reg,
    /// the subsemigroup generated by the idempotents
    Idem,
    /// the ideal of regular elements of rank <= s
    Ideal(u64),
}

/// Minimal generating set sizes. Each arm is only valid on the parameter
/// range its derivation covers; outside that range this refuses rather than
/// guessing:
///
/// - every arm wants 0 < r in (reg, idem, ideal) and excludes r = m = n,
///   where the semigroup is the full matrix monoid up to isomorphism and has
///   its own classical answers;
/// - `Full` handles r < min(m, n) (every matrix of larger rank is forced
///   into any generating set) and r = min(m, n) with m != n;
/// - `Ideal(s)` wants s < r; at s = r the ideal is the whole regular part,
///   which is `Reg`'s job.
pub fn rank_formula(q: u64, m: u64, n: u64, r: u64, target: RankTarget) -> Result<BigUint> {
    if r > m.min(n) {
        return Err(Error::DomainError(format!("r={r} exceeds min({m},{n})")));
    }
    if r == m && r == n {
        return Err(Error::UnsupportedParameters(
            "r = m = n: the sandwich semigroup is the full matrix monoid, not covered here".into(),
        ));
    }
    let l = m.min(n) as u64;
    let lmax = m.max(n) as u64;
    match target {
        RankTarget::Full => {
            if r < l {
                // every matrix of rank > r must appear
                let mut acc = BigUint::zero();
                for s in r + 1..=l {
                    acc += mmn_dclass_counts(q, m, n, s).size;
                }
                Ok(acc)
            } else {
                // r = l, m != n
                Ok(q_binomial(q, lmax, l))
            }
        }
        RankTarget::Reg => {
            if r == 0 {
                return Err(Error::UnsupportedParameters(
                    "r = 0: the regular part is the trivial semigroup {0}".into(),
                ));
            }
            Ok(qpow(q, r * (lmax - r)) + BigUint::one())
        }
        RankTarget::Idem => {
            if r == 0 {
                return Err(Error::UnsupportedParameters(
                    "r = 0: the only idempotent is 0".into(),
                ));
            }
            Ok(qpow(q, r * (lmax - r)) + q_int(q, r))
        }
        RankTarget::Ideal(s) => {
            if r == 0 {
                return Err(Error::UnsupportedParameters(
                    "r = 0: the only ideal is the trivial semigroup {0}".into(),
                ));
            }
            if s > r {
                return Err(Error::DomainError(format!("ideal layer s={s} exceeds r={r}")));
            }
            if s == r {
                return rank_formula(q, m, n, r, RankTarget::Reg);
            }
            Ok(qpow(q, s * (lmax - r)) * q_binomial(q, r, s))
        }
    }
}

/// Minimal idempotent generating set size for the ideal of rank <= s
/// matrices inside the full r x r matrix monoid (s < r).
pub fn mr_ideal_rank(q: u64, r: u64, s: u64) -> BigUint {
    q_binomial(q, r, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_values() {
        assert_eq!(q_binomial(3, 3, 1), big(13));
        assert_eq!(q_binomial(2, 3, 1), big(7));
        assert_eq!(q_binomial(2, 3, 2), big(7));
        assert_eq!(q_binomial(2, 2, 1), big(3));
        assert_eq!(gl_order(3, 1), big(2));
        assert_eq!(gl_order(2, 2), big(6));
        assert_eq!(gl_order(2, 3), big(168));
        assert_eq!(gl_order(3, 3), big(11232));
        assert_eq!(q_factorial(3, 2), big(4));
    }

    #[test]
    fn pascal_recurrences() {
        // both q-Pascal rules, across a grid
        for q in [2u64, 3, 4, 5] {
            for m in 1..=8u64 {
                for s in 1..=m {
                    let lhs = q_binomial(q, m, s);
                    let a = q_binomial(q, m - 1, s - 1) + qpow(q, s) * q_binomial(q, m - 1, s);
                    let b = qpow(q, m - s) * q_binomial(q, m - 1, s - 1) + q_binomial(q, m - 1, s);
                    assert_eq!(lhs, a, "q={q} m={m} s={s}");
                    assert_eq!(lhs, b, "q={q} m={m} s={s}");
                }
            }
        }
    }

    #[test]
    fn layers_partition_everything() {
        // sum over s of |rank-s class of M_mn| = q^(mn)
        for q in [2u64, 3] {
            for m in 1..=4u64 {
                for n in 1..=4u64 {
                    let mut acc = BigUint::zero();
                    for s in 0..=m.min(n) {
                        acc += mmn_dclass_counts(q, m, n, s).size;
                    }
                    assert_eq!(acc, qpow(q, m * n));
                }
            }
        }
    }

    #[test]
    fn mdclass_223() {
        // rank layer sizes of 2 x 2 matrices over GF(2): 1, 9, 6
        assert_eq!(mmn_dclass_counts(2, 2, 2, 0).size, big(1));
        assert_eq!(mmn_dclass_counts(2, 2, 2, 1).size, big(9));
        assert_eq!(mmn_dclass_counts(2, 2, 2, 2).size, big(6));
        // 2 x 3 over GF(3), rank 1: 4 column spaces, 13 row spaces, cells of 2
        let c = mmn_dclass_counts(3, 2, 3, 1);
        assert_eq!(c.n_r, big(4));
        assert_eq!(c.n_l, big(13));
        assert_eq!(c.h_size, big(2));
        assert_eq!(c.size, big(104));
    }

    #[test]
    fn sandwich_layer_counts() {
        let c = sandwich_counts(3, 2, 3, 1, 1).unwrap();
        assert_eq!(c.n_r, big(3));
        assert_eq!(c.n_l, big(9));
        assert_eq!(c.h_size, big(2));
        assert_eq!(c.d_size, big(54));
        assert_eq!(regular_count(3, 2, 3, 1).unwrap(), big(55));
        assert_eq!(regular_count(2, 2, 2, 1).unwrap(), big(5));
        let c = sandwich_counts(2, 2, 2, 1, 1).unwrap();
        assert_eq!(c.d_size, big(4));
        assert!(sandwich_counts(2, 2, 2, 3, 0).is_err());
    }

    #[test]
    fn idempotent_counts() {
        assert_eq!(idempotents_sandwich_total(2, 2, 2, 1).unwrap(), big(5));
        // all idempotent 2 x 2 matrices over GF(2): 1 + 6 + 1
        let total: BigUint = (0..=2).map(|s| idempotents_mr(2, 2, s)).sum();
        assert_eq!(total, big(8));
        assert_eq!(idempotents_mr(2, 3, 2), big(28));
        assert_eq!(idempotents_mr(3, 3, 2), big(117));
    }

    #[test]
    fn rank_formula_values() {
        use RankTarget::*;
        assert_eq!(rank_formula(2, 2, 2, 1, Full).unwrap(), big(6));
        assert_eq!(rank_formula(2, 2, 3, 2, Full).unwrap(), big(7));
        assert_eq!(rank_formula(3, 2, 3, 1, Full).unwrap(), big(624));
        assert_eq!(rank_formula(2, 3, 2, 1, Reg).unwrap(), big(5));
        assert_eq!(rank_formula(2, 2, 2, 1, Reg).unwrap(), big(3));
        assert_eq!(rank_formula(2, 2, 2, 1, Idem).unwrap(), big(3));
        assert_eq!(rank_formula(2, 3, 2, 1, Idem).unwrap(), big(5));
        assert_eq!(rank_formula(2, 2, 3, 2, Ideal(1)).unwrap(), big(6));
        assert_eq!(rank_formula(2, 2, 3, 2, Ideal(0)).unwrap(), big(1));
        // refusals
        assert!(matches!(
            rank_formula(2, 2, 2, 2, Full),
            Err(Error::UnsupportedParameters(_))
        ));
        assert!(matches!(
            rank_formula(2, 2, 3, 0, Reg),
            Err(Error::UnsupportedParameters(_))
        ));
        assert!(rank_formula(2, 2, 3, 2, Ideal(3)).is_err());
        // ideal at s = r is the whole regular part
        assert_eq!(
            rank_formula(2, 2, 3, 2, Ideal(2)).unwrap(),
            rank_formula(2, 2, 3, 2, Reg).unwrap()
        );
    }

    #[test]
    fn full_rank_formula_r0_counts_everything_nonzero() {
        assert_eq!(rank_formula(2, 2, 2, 0, RankTarget::Full).unwrap(), big(15));
        assert_eq!(rank_formula(3, 2, 3, 0, RankTarget::Full).unwrap(), big(728));
    }
}
