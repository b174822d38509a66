//! Exact rational coefficients of the transgression forms.
//!
//! Two families live here. The Chern–Simons coefficients
//!
//! ```text
//! A_i = (-1)^i k! (k-1)! / (2^i (k-i-1)! (k+i)!),    0 <= i <= k-1
//! ```
//!
//! weight the terms `P(ω, [ω,ω]^i, Ω^{k-i-1})` of `TP(ω)`, and the two-index
//! family
//!
//! ```text
//! A_ij = (-1)^i (i+j)! (k-j-1)! k! / (2^i (k-i-j-1)! i! (k+i)! j!),   i+j <= k-1
//! ```
//!
//! weights `P(φ, [φ,φ]^i, Ψ^j, Ω^{k-i-j-1})` in `ΦP(ω)`. The column `j = 0`
//! reproduces `A_i`.
//!
//! Note on the denominator of `A_i`: the `(k+i)!` factor is the one forced by
//! the recursion `A_{i,0} = (i-k)/(2(k+i)) A_{i-1,0}`; a `(k+1)!` variant
//! circulates in print and disagrees for `i >= 1`. Only `(k+i)!` is provided.
//!
//! Everything is computed with arbitrary-precision integers; factorials past
//! `k = 10` no longer fit a machine word.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{domain, Error, Result};

/// Exact rational number, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

fn factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, m| acc * BigInt::from(m))
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn check_degree(k: i64) -> Result<()> {
    if k <= 0 {
        return domain(format!("polynomial degree k must be positive, got {k}"));
    }
    Ok(())
}

/// Chern–Simons coefficient `A_i` for a degree-`k` polynomial.
pub fn cs_coefficient(k: i64, i: i64) -> Result<Rational> {
    check_degree(k)?;
    if i < 0 || i > k - 1 {
        return domain(format!("index i={i} outside [0, {}]", k - 1));
    }
    let numer = factorial(k) * factorial(k - 1);
    let denom = BigInt::from(2).pow(i as u32) * factorial(k - i - 1) * factorial(k + i);
    let value = Rational::new(numer, denom);
    Ok(if i % 2 == 1 { -value } else { value })
}

/// Closed form of `A_ij`. Indices outside `i, j >= 0, i + j <= k - 1` give 0.
pub fn phi_coefficient(k: i64, i: i64, j: i64) -> Result<Rational> {
    check_degree(k)?;
    if i < 0 || j < 0 || i + j > k - 1 {
        return Ok(Rational::zero());
    }
    let numer = factorial(i + j) * factorial(k - j - 1) * factorial(k);
    let denom = BigInt::from(2).pow(i as u32)
        * factorial(k - i - j - 1)
        * factorial(i)
        * factorial(k + i)
        * factorial(j);
    let value = Rational::new(numer, denom);
    Ok(if i % 2 == 1 { -value } else { value })
}

/// Table of `A_ij` for one degree `k`. Missing entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    k: i64,
    entries: BTreeMap<(i64, i64), Rational>,
}

impl CoefficientTable {
    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn get(&self, i: i64, j: i64) -> Rational {
        self.entries
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// In-domain entries in `(i, j)` lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, &Rational)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Table filled from the closed form.
    pub fn closed_form(k: i64) -> Result<Self> {
        check_degree(k)?;
        let mut entries = BTreeMap::new();
        for i in 0..k {
            for j in 0..(k - i) {
                entries.insert((i, j), phi_coefficient(k, i, j)?);
            }
        }
        Ok(CoefficientTable { k, entries })
    }
}

/// Ratio `A_ij / A_{i-1,j}` from the second recursion, `i >= 1`.
fn down_ratio(k: i64, i: i64, j: i64) -> Rational {
    Rational::new((i + j) * (i + j - k), 2 * i * (k + i))
}

/// Ratio `A_{i,j-1} / A_{i-1,j}` from the first recursion, `i >= 1`.
fn diagonal_ratio(k: i64, i: i64, j: i64) -> Rational {
    Rational::new(-(j * (k - j)), 2 * i * (k + i))
}

/// Fill the table from `A_00 = 1` using only the two recursions.
///
/// Row 0 follows from the first linear relation at `i = 0`
/// (`A_{0,j} = A_{0,j-1}`). Every entry of a later row is reachable from row
/// `i-1` both vertically (`A_{i-1,j}`) and diagonally (`A_{i-1,j+1}`); the two
/// values must agree exactly.
pub fn build_table_by_recursion(k: i64) -> Result<CoefficientTable> {
    check_degree(k)?;
    let mut entries: BTreeMap<(i64, i64), Rational> = BTreeMap::new();
    entries.insert((0, 0), Rational::one());
    for j in 1..k {
        let prev = entries[&(0, j - 1)].clone();
        entries.insert((0, j), prev);
    }
    for i in 1..k {
        for j in 0..(k - i) {
            let vertical = &down_ratio(k, i, j) * &entries[&(i - 1, j)];
            let diagonal = &diagonal_ratio(k, i, j + 1) * &entries[&(i - 1, j + 1)];
            if vertical != diagonal {
                return Err(Error::Inconsistent {
                    i,
                    j,
                    left: vertical.to_string(),
                    right: diagonal.to_string(),
                });
            }
            entries.insert((i, j), vertical);
        }
    }
    Ok(CoefficientTable { k, entries })
}

/// One exact residual of a linear relation between neighbouring coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationResidual {
    /// `"first"`, `"second"` or `"consistency"`.
    pub relation: &'static str,
    pub i: i64,
    pub j: i64,
    pub residual: Rational,
}

/// Residuals of the linear relations that make `dΦP = P(Ω) - P(Ψ)` hold.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    pub k: i64,
    pub entries: Vec<RelationResidual>,
}

impl RelationReport {
    pub fn all_zero(&self) -> bool {
        self.entries.iter().all(|e| e.residual.is_zero())
    }

    pub fn failures(&self) -> impl Iterator<Item = &RelationResidual> {
        self.entries.iter().filter(|e| !e.residual.is_zero())
    }
}

/// Evaluate, on the closed-form table,
///
/// ```text
/// 0 = A_ij - ((j+2i)/j) A_{i,j-1} - ½ A_{i-1,j}
/// 0 = 2i A_ij + (k-i-j) A_{i-1,j} + 2 (i(k-i-j)/j) A_{i,j-1}
/// ```
///
/// for `(i,j) != (0,0)`, `j >= 1`, `i+j <= k-1`, plus the consistency of the
/// two recursive expressions for `A_{i+1,j-1}` in terms of `A_{i-1,j}`.
pub fn verify_linear_relations(k: i64) -> Result<RelationReport> {
    let table = CoefficientTable::closed_form(k)?;
    let a = |i: i64, j: i64| table.get(i, j);
    let half = Rational::new(1, 2);
    let mut entries = Vec::new();
    for i in 0..k {
        for j in 1..(k - i) {
            let first = a(i, j) - &Rational::new(j + 2 * i, j) * &a(i, j - 1) - &half * &a(i - 1, j);
            entries.push(RelationResidual {
                relation: "first",
                i,
                j,
                residual: first,
            });
            let second = &int(2 * i) * &a(i, j)
                + &int(k - i - j) * &a(i - 1, j)
                + &Rational::new(2 * i * (k - i - j), j) * &a(i, j - 1);
            entries.push(RelationResidual {
                relation: "second",
                i,
                j,
                residual: second,
            });
        }
    }
    for i in 1..k {
        for j in 1..(k - i) {
            let via_left = &down_ratio(k, i + 1, j - 1) * &diagonal_ratio(k, i, j);
            let via_right = &diagonal_ratio(k, i + 1, j) * &down_ratio(k, i, j);
            entries.push(RelationResidual {
                relation: "consistency",
                i,
                j,
                residual: via_left - via_right,
            });
        }
    }
    Ok(RelationReport { k, entries })
}

/// `Σ_i A_{i,k-1-i} 2^{-(k-1-i)}`, equal to `k / ((2k-1) 2^{k-1})`.
pub fn fiber_constant(k: i64) -> Result<Rational> {
    check_degree(k)?;
    let mut sum = Rational::zero();
    for i in 0..k {
        let weight = Rational::new(1, BigInt::from(2).pow((k - 1 - i) as u32));
        sum = sum + &phi_coefficient(k, i, k - 1 - i)? * &weight;
    }
    Ok(sum)
}

/// Closed form `k / ((2k-1) 2^{k-1})` of [`fiber_constant`].
pub fn fiber_constant_closed_form(k: i64) -> Result<Rational> {
    check_degree(k)?;
    Ok(Rational::new(
        BigInt::from(k),
        BigInt::from(2 * k - 1) * BigInt::from(2).pow((k - 1) as u32),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    // Independent evaluation with plain u128 factorials (exact up to k = 12).
    fn closed_form_u128(k: i64, i: i64, j: i64) -> (i128, i128) {
        fn f(n: i64) -> u128 {
            (1..=n as u128).product()
        }
        let num = f(i + j) * f(k - j - 1) * f(k);
        let den = (1u128 << i) * f(k - i - j - 1) * f(i) * f(k + i) * f(j);
        let g = num_integer::gcd(num, den);
        let sign = if i % 2 == 1 { -1 } else { 1 };
        (sign * (num / g) as i128, (den / g) as i128)
    }

    #[test]
    fn cs_coefficient_examples() {
        assert_eq!(cs_coefficient(1, 0).unwrap(), q(1, 1));
        assert_eq!(cs_coefficient(2, 1).unwrap(), q(-1, 6));
        assert_eq!(cs_coefficient(2, 0).unwrap(), q(1, 1));
    }

    #[test]
    fn cs_coefficient_matches_first_order_recursion() {
        for k in 1..=12 {
            let mut prev = Rational::one();
            assert_eq!(cs_coefficient(k, 0).unwrap(), prev);
            for i in 1..k {
                prev = &q(i - k, 2 * (k + i)) * &prev;
                assert_eq!(cs_coefficient(k, i).unwrap(), prev, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn cs_coefficient_rejects_out_of_range() {
        assert!(matches!(cs_coefficient(3, 3), Err(Error::Domain(_))));
        assert!(matches!(cs_coefficient(3, -1), Err(Error::Domain(_))));
        assert!(matches!(cs_coefficient(0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_coefficient_examples() {
        assert_eq!(phi_coefficient(2, 0, 1).unwrap(), q(1, 1));
        assert_eq!(phi_coefficient(3, 1, 1).unwrap(), q(-1, 4));
        assert_eq!(phi_coefficient(4, 2, 3).unwrap(), Rational::zero());
        assert_eq!(phi_coefficient(4, -1, 0).unwrap(), Rational::zero());
        assert!(phi_coefficient(0, 0, 0).is_err());
        assert!(phi_coefficient(-2, 0, 0).is_err());
    }

    #[test]
    fn closed_form_matches_u128_oracle() {
        for k in 1..=12 {
            for i in 0..k {
                for j in 0..(k - i) {
                    let (n, d) = closed_form_u128(k, i, j);
                    assert_eq!(phi_coefficient(k, i, j).unwrap(), q(n as i64, d as i64));
                }
            }
        }
    }

    #[test]
    fn recursion_table_small_cases() {
        let t = build_table_by_recursion(2).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.get(0, 0), q(1, 1));
        assert_eq!(t.get(1, 0), q(-1, 6));
        assert_eq!(t.get(0, 1), q(1, 1));

        let t = build_table_by_recursion(1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(0, 0), q(1, 1));

        let t = build_table_by_recursion(3).unwrap();
        for j in 0..3 {
            assert_eq!(t.get(0, j), q(1, 1));
        }
    }

    #[test]
    fn recursion_agrees_with_closed_form_and_cs() {
        for k in 1..=12 {
            let rec = build_table_by_recursion(k).unwrap();
            let closed = CoefficientTable::closed_form(k).unwrap();
            assert_eq!(rec, closed, "k={k}");
            for i in 0..k {
                assert_eq!(rec.get(i, 0), cs_coefficient(k, i).unwrap());
            }
            assert_eq!(rec.get(0, k - 1), Rational::one());
        }
    }

    #[test]
    fn linear_relations_vanish() {
        assert!(verify_linear_relations(1).unwrap().entries.is_empty());
        for k in [2, 8, 12] {
            let report = verify_linear_relations(k).unwrap();
            assert!(!report.entries.is_empty());
            assert!(report.all_zero(), "k={k}: {:?}", report.failures().next());
        }
    }

    #[test]
    fn fiber_constant_examples() {
        assert_eq!(fiber_constant(1).unwrap(), q(1, 1));
        assert_eq!(fiber_constant(2).unwrap(), q(1, 3));
        assert_eq!(fiber_constant(5).unwrap(), q(5, 144));
        for k in 1..=12 {
            assert_eq!(fiber_constant(k).unwrap(), fiber_constant_closed_form(k).unwrap());
        }
    }

    #[test]
    fn wide_values_do_not_overflow() {
        // In lowest terms the denominator of A_{29} for k = 30 exceeds 2^64.
        let a = cs_coefficient(30, 29).unwrap();
        assert!(a.denom() > &BigInt::from(u64::MAX));
        assert_eq!(a.denom().to_string(), "31746406881012769928249344");
        assert!(a.numer() < &BigInt::from(0));
    }

    #[test]
    fn display_is_lowest_terms() {
        assert_eq!(q(6, -4).to_string(), "-3/2");
        assert_eq!(q(4, 2).to_string(), "2");
    }

    proptest! {
        #[test]
        fn product_with_reciprocal_is_one(n in -10_000i64..10_000, d in 1i64..10_000) {
            prop_assume!(n != 0);
            let r = q(n, d);
            prop_assert_eq!(&r * &r.recip(), Rational::one());
            prop_assert!(r.denom() > &BigInt::from(0));
        }
    }
}
