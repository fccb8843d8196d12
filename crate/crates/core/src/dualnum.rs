//! Dual numbers `a + b·ε` with `ε² = 0`.
//!
//! Dual numbers are the scalar ring behind every norm, eigenvalue and
//! distance in this crate. They carry the lexicographic total order
//! (standard part first, ties broken by the infinitesimal part), which is
//! how "largest eigenvalue" and "smaller distance" are decided.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-part absolute tolerance used when comparing dual numbers in tests.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualNumber {
    /// Standard (real) part.
    pub st: f64,
    /// Infinitesimal part, the coefficient of ε.
    pub du: f64,
}

impl DualNumber {
    pub const ZERO: DualNumber = DualNumber { st: 0.0, du: 0.0 };
    pub const ONE: DualNumber = DualNumber { st: 1.0, du: 0.0 };

    #[inline]
    pub const fn new(st: f64, du: f64) -> Self {
        Self { st, du }
    }

    #[inline]
    pub const fn real(st: f64) -> Self {
        Self { st, du: 0.0 }
    }

    /// True when the standard part is nonzero.
    #[inline]
    pub fn is_appreciable(&self) -> bool {
        self.st != 0.0
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.st * s, self.du * s)
    }

    /// `a⁻¹ = a_st⁻¹ (1 − a_du a_st⁻¹ ε)`.
    pub fn inverse(self) -> Result<Self> {
        if self.st == 0.0 {
            return Err(Error::NonAppreciable("dual number inverse"));
        }
        let inv = 1.0 / self.st;
        Ok(Self::new(inv, -self.du * inv * inv))
    }

    /// `√a = √a_st + a_du / (2√a_st) ε`.
    ///
    /// `0 + 0ε` maps to itself. A purely infinitesimal nonzero value has no
    /// dual square root.
    pub fn sqrt(self) -> Result<Self> {
        if self.st < 0.0 {
            return Err(Error::Domain("square root of a dual number with negative standard part"));
        }
        if self.st == 0.0 {
            if self.du == 0.0 {
                return Ok(Self::ZERO);
            }
            return Err(Error::NonAppreciable("dual number square root"));
        }
        let r = self.st.sqrt();
        Ok(Self::new(r, self.du / (2.0 * r)))
    }

    /// `|a| = |a_st| + sgn(a_st) a_du ε`, or `|a_du| ε` for infinitesimal `a`.
    pub fn abs(self) -> Self {
        if self.st > 0.0 {
            self
        } else if self.st < 0.0 {
            -self
        } else {
            Self::new(0.0, self.du.abs())
        }
    }

    /// Lexicographic total order: standard parts first, then infinitesimal parts.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match cmp_f64(self.st, other.st) {
            Ordering::Equal => cmp_f64(self.du, other.du),
            ord => ord,
        }
    }

    /// Per-part absolute closeness.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.st - other.st).abs() <= tol && (self.du - other.du).abs() <= tol
    }
}

// -0.0 and 0.0 compare equal; NaN falls back to IEEE total ordering so the
// comparison stays total.
fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b))
}

impl PartialOrd for DualNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl From<f64> for DualNumber {
    fn from(st: f64) -> Self {
        Self::real(st)
    }
}

impl fmt::Display for DualNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.du < 0.0 {
            write!(f, "{}-{}ε", self.st, -self.du)
        } else {
            write!(f, "{}+{}ε", self.st, self.du)
        }
    }
}

impl Add for DualNumber {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.st + rhs.st, self.du + rhs.du)
    }
}

impl AddAssign for DualNumber {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.st += rhs.st;
        self.du += rhs.du;
    }
}

impl Sub for DualNumber {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.st - rhs.st, self.du - rhs.du)
    }
}

impl SubAssign for DualNumber {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.st -= rhs.st;
        self.du -= rhs.du;
    }
}

impl Mul for DualNumber {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.st * rhs.st, self.st * rhs.du + self.du * rhs.st)
    }
}

impl Mul<f64> for DualNumber {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Neg for DualNumber {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.st, -self.du)
    }
}

impl std::iter::Sum for DualNumber {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dn(st: f64, du: f64) -> DualNumber {
        DualNumber::new(st, du)
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(dn(1.0, 2.0) * dn(3.0, 4.0), dn(3.0, 10.0));
        let a = dn(-1.5, 0.25);
        assert_eq!(a * DualNumber::ONE, a);
        assert_eq!(dn(0.0, 1.0) * dn(0.0, 1.0), DualNumber::ZERO);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(dn(2.0, 4.0).inverse().unwrap(), dn(0.5, -1.0));
        assert_eq!(DualNumber::ONE.inverse().unwrap(), DualNumber::ONE);
        let a = dn(-3.0, 6.0);
        let back = a * a.inverse().unwrap();
        assert!(back.approx_eq(&DualNumber::ONE, DEFAULT_TOL));
        assert!(matches!(dn(0.0, 1.0).inverse(), Err(Error::NonAppreciable(_))));
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(dn(4.0, 4.0).sqrt().unwrap(), dn(2.0, 1.0));
        assert_eq!(DualNumber::ONE.sqrt().unwrap(), DualNumber::ONE);
        let r = dn(9.0, 6.0).sqrt().unwrap();
        assert!((r * r).approx_eq(&dn(9.0, 6.0), DEFAULT_TOL));
        assert_eq!(DualNumber::ZERO.sqrt().unwrap(), DualNumber::ZERO);
        assert!(matches!(dn(-1.0, 0.0).sqrt(), Err(Error::Domain(_))));
        assert!(matches!(dn(0.0, 2.0).sqrt(), Err(Error::NonAppreciable(_))));
    }

    #[test]
    fn abs_examples() {
        assert_eq!(dn(-3.0, 2.0).abs(), dn(3.0, -2.0));
        assert_eq!(dn(0.0, -5.0).abs(), dn(0.0, 5.0));
        assert_eq!(dn(3.0, 2.0).abs(), dn(3.0, 2.0));
    }

    #[test]
    fn ordering_examples() {
        assert_eq!(dn(1.0, 0.0).total_cmp(&dn(0.0, 100.0)), Ordering::Greater);
        assert_eq!(dn(1.0, 2.0).total_cmp(&dn(1.0, 3.0)), Ordering::Less);
        let a = dn(0.3, -0.7);
        assert_eq!(a.total_cmp(&a), Ordering::Equal);
        assert!(dn(1.0, 0.0) > dn(0.0, 100.0));
    }

    fn part() -> impl Strategy<Value = f64> {
        -10.0f64..10.0
    }

    fn appreciable() -> impl Strategy<Value = DualNumber> {
        (prop_oneof![-10.0f64..-0.1, 0.1f64..10.0], part()).prop_map(|(s, d)| dn(s, d))
    }

    proptest! {
        #[test]
        fn inverse_multiplies_back(a in appreciable()) {
            let back = a * a.inverse().unwrap();
            prop_assert!(back.approx_eq(&DualNumber::ONE, 1e-12), "{back}");
        }

        #[test]
        fn sqrt_squares_back(st in 0.1f64..10.0, du in part()) {
            let a = dn(st, du);
            let r = a.sqrt().unwrap();
            prop_assert!((r * r).approx_eq(&a, 1e-12));
        }

        #[test]
        fn total_order_laws(a in (part(), part()), b in (part(), part()), c in (part(), part())) {
            let (a, b, c) = (dn(a.0, a.1), dn(b.0, b.1), dn(c.0, c.1));
            prop_assert_eq!(a.total_cmp(&a), Ordering::Equal);
            prop_assert_eq!(a.total_cmp(&b), b.total_cmp(&a).reverse());
            if a.total_cmp(&b) != Ordering::Greater && b.total_cmp(&c) != Ordering::Greater {
                prop_assert_ne!(a.total_cmp(&c), Ordering::Greater);
            }
        }

        #[test]
        fn abs_is_multiplicative(a in appreciable(), b in appreciable()) {
            let lhs = (a * b).abs();
            let rhs = a.abs() * b.abs();
            prop_assert!(lhs.approx_eq(&rhs, 1e-12));
        }
    }
}
