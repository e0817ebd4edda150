//! Exact arithmetic in the quadratic ring `Z[lambda_m]`.
//!
//! `lambda_m = (m + sqrt(m^2 + 4)) / 2` satisfies `lambda^2 = m*lambda + 1`,
//! so products of elements `a + b*lambda` stay inside the ring. The algebraic
//! conjugate is `lambda' = m - lambda`; the star map `a + b*lambda |->
//! (a + b*m) - b*lambda` sends physical coordinates to internal space and is
//! the workhorse behind every window check.
//!
//! Coefficients are checked 64-bit integers; an overflow aborts with a panic
//! rather than wrapping. Patch enumeration at the scales used here stays far
//! below that limit.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// The noble mean `lambda_m = (m + sqrt(m^2 + 4)) / 2`.
pub fn lambda_value(m: u32) -> f64 {
    assert!(m >= 1, "family parameter m must be positive");
    (m as f64 + sqrt_disc(m)) / 2.0
}

/// The conjugate root `lambda'_m = m - lambda_m`, always in `(-1, 0)`.
pub fn lambda_conj_value(m: u32) -> f64 {
    m as f64 - lambda_value(m)
}

/// `sqrt(m^2 + 4)`, the square root of the discriminant.
pub fn sqrt_disc(m: u32) -> f64 {
    ((m as f64) * (m as f64) + 4.0).sqrt()
}

/// An element `rational + lambda * lambda_m` of `Z[lambda_m]`.
///
/// Values are immutable and `Copy`; all arithmetic is exact. Mixing elements
/// of different families (`m` mismatch) is a usage error and panics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadInt {
    rational: i64,
    lambda: i64,
    m: u32,
}

impl QuadInt {
    pub fn new(m: u32, rational: i64, lambda: i64) -> Self {
        assert!(m >= 1, "family parameter m must be positive");
        QuadInt { rational, lambda, m }
    }

    pub fn zero(m: u32) -> Self {
        QuadInt::new(m, 0, 0)
    }

    pub fn one(m: u32) -> Self {
        QuadInt::new(m, 1, 0)
    }

    /// The generator `lambda_m` itself.
    pub fn lambda(m: u32) -> Self {
        QuadInt::new(m, 0, 1)
    }

    pub fn from_integer(m: u32, n: i64) -> Self {
        QuadInt::new(m, n, 0)
    }

    pub fn rational_part(&self) -> i64 {
        self.rational
    }

    pub fn lambda_part(&self) -> i64 {
        self.lambda
    }

    pub fn family(&self) -> u32 {
        self.m
    }

    /// Galois conjugation: `a + b*lambda |-> (a + b*m) - b*lambda`.
    ///
    /// An involution and a ring homomorphism; fixes the rationals.
    pub fn star(self) -> Self {
        QuadInt {
            rational: checked("star", self.rational as i128 + self.m as i128 * self.lambda as i128),
            lambda: -self.lambda,
            m: self.m,
        }
    }

    /// Numerical value `rational + lambda * lambda_m`.
    pub fn value(self) -> f64 {
        self.rational as f64 + self.lambda as f64 * lambda_value(self.m)
    }

    /// Numerical value of the conjugate, `rational + lambda * lambda'_m`.
    pub fn star_value(self) -> f64 {
        self.rational as f64 + self.lambda as f64 * lambda_conj_value(self.m)
    }

    /// The field trace `x + star(x) = 2*rational + m*lambda`, an integer.
    pub fn trace(self) -> i64 {
        checked(
            "trace",
            2 * self.rational as i128 + self.m as i128 * self.lambda as i128,
        )
    }

    pub fn scale(self, n: i64) -> Self {
        QuadInt {
            rational: checked("scale", self.rational as i128 * n as i128),
            lambda: checked("scale", self.lambda as i128 * n as i128),
            m: self.m,
        }
    }

    pub fn is_zero(self) -> bool {
        self.rational == 0 && self.lambda == 0
    }

    /// Exact sign of the real value, decided in integer arithmetic.
    ///
    /// `2x = u + v*sqrt(D)` with `u = 2a + m*b`, `v = b` and `D = m^2 + 4`
    /// never a perfect square, so `x = 0` only when `u = v = 0`.
    pub fn signum(self) -> Ordering {
        let u = 2 * self.rational as i128 + self.m as i128 * self.lambda as i128;
        let v = self.lambda as i128;
        let d = self.m as i128 * self.m as i128 + 4;
        match (u.cmp(&0), v.cmp(&0)) {
            (Ordering::Equal, Ordering::Equal) => Ordering::Equal,
            (u_ord, Ordering::Equal) => u_ord,
            (Ordering::Equal, v_ord) => v_ord,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            (Ordering::Greater, Ordering::Less) => {
                // u > 0 > v: sign of u^2 - v^2 D
                sq(u).cmp(&sq(v).checked_mul(d).expect("overflow in QuadInt::signum"))
            }
            (Ordering::Less, Ordering::Greater) => {
                // v > 0 > u: sign of v^2 D - u^2
                sq(v)
                    .checked_mul(d)
                    .expect("overflow in QuadInt::signum")
                    .cmp(&sq(u))
            }
        }
    }
}

fn sq(x: i128) -> i128 {
    x.checked_mul(x).expect("overflow in QuadInt::signum")
}

fn checked(op: &str, v: i128) -> i64 {
    i64::try_from(v).unwrap_or_else(|_| panic!("integer overflow in QuadInt::{op}"))
}

fn assert_same_family(x: &QuadInt, y: &QuadInt) {
    assert_eq!(
        x.m, y.m,
        "mixing QuadInt values from different families (m = {} vs {})",
        x.m, y.m
    );
}

impl Add for QuadInt {
    type Output = QuadInt;
    fn add(self, rhs: QuadInt) -> QuadInt {
        assert_same_family(&self, &rhs);
        QuadInt {
            rational: checked("add", self.rational as i128 + rhs.rational as i128),
            lambda: checked("add", self.lambda as i128 + rhs.lambda as i128),
            m: self.m,
        }
    }
}

impl Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, rhs: QuadInt) -> QuadInt {
        self + (-rhs)
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt {
            rational: -self.rational,
            lambda: -self.lambda,
            m: self.m,
        }
    }
}

impl Mul for QuadInt {
    type Output = QuadInt;
    /// Exact product, reduced with `lambda^2 = m*lambda + 1`.
    fn mul(self, rhs: QuadInt) -> QuadInt {
        assert_same_family(&self, &rhs);
        let (a, b) = (self.rational as i128, self.lambda as i128);
        let (c, d) = (rhs.rational as i128, rhs.lambda as i128);
        let m = self.m as i128;
        QuadInt {
            rational: checked("mul", a * c + b * d),
            lambda: checked("mul", a * d + b * c + m * b * d),
            m: self.m,
        }
    }
}

impl Ord for QuadInt {
    fn cmp(&self, other: &Self) -> Ordering {
        assert_same_family(self, other);
        (*self - *other).signum()
    }
}

impl PartialOrd for QuadInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}λ", self.rational, self.lambda)
    }
}

/// A point `numerator / sqrt(m^2 + 4)` of the Fourier module.
///
/// The diffraction of a noble means set is supported on
/// `Z[lambda_m] / sqrt(m^2 + 4)`, the dual module of the embedding lattice
/// `{(x, x*) | x in Z[lambda_m]}`. The star map acts on the numerator only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FourierModulePoint {
    numerator: QuadInt,
}

impl FourierModulePoint {
    pub fn new(numerator: QuadInt) -> Self {
        FourierModulePoint { numerator }
    }

    pub fn from_coeffs(m: u32, rational: i64, lambda: i64) -> Self {
        FourierModulePoint::new(QuadInt::new(m, rational, lambda))
    }

    pub fn numerator(&self) -> QuadInt {
        self.numerator
    }

    pub fn star(self) -> Self {
        FourierModulePoint::new(self.numerator.star())
    }

    /// Numerical value `numerator / sqrt(m^2 + 4)`.
    pub fn value(self) -> f64 {
        self.numerator.value() / sqrt_disc(self.numerator.family())
    }

    /// Numerical value of the conjugate point `numerator* / sqrt(m^2 + 4)`.
    pub fn star_value(self) -> f64 {
        self.numerator.star_value() / sqrt_disc(self.numerator.family())
    }
}

impl fmt::Display for FourierModulePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.numerator.family();
        write!(f, "({})/√{}", self.numerator, m * m + 4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn lambda_values() {
        assert_abs_diff_eq!(lambda_value(1), 1.618_033_988_749_895, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda_value(2), 1.0 + 2f64.sqrt(), epsilon = 1e-12);
        for m in 1..=50 {
            let l = lambda_value(m);
            assert_abs_diff_eq!(l * l, m as f64 * l + 1.0, epsilon = 1e-12 * l * l);
            assert!(lambda_conj_value(m) > -1.0 && lambda_conj_value(m) < 0.0);
        }
    }

    #[test]
    fn golden_ratio_product() {
        // (1 + lambda)^2 = 2 + 3 lambda for m = 1
        let x = QuadInt::one(1) + QuadInt::lambda(1);
        let sq = x * x;
        assert_eq!(sq, QuadInt::new(1, 2, 3));
        assert_abs_diff_eq!(sq.value(), x.value() * x.value(), epsilon = 1e-12);
    }

    #[test]
    fn silver_ratio_square() {
        // lambda_2^2 = 1 + 2 lambda_2
        let l = QuadInt::lambda(2);
        assert_eq!(l * l, QuadInt::new(2, 1, 2));
    }

    #[test]
    fn zero_annihilates() {
        let x = QuadInt::new(1, 17, -5);
        assert_eq!(x * QuadInt::zero(1), QuadInt::zero(1));
    }

    #[test]
    fn star_basics() {
        let l = QuadInt::lambda(1);
        assert_eq!(l.star(), QuadInt::new(1, 1, -1));
        assert_abs_diff_eq!(l.star().value(), -0.618_033_988_749_895, epsilon = 1e-12);
        let n = QuadInt::from_integer(3, 42);
        assert_eq!(n.star(), n);
    }

    #[test]
    #[should_panic(expected = "different families")]
    fn mixing_families_panics() {
        let _ = QuadInt::lambda(1) + QuadInt::lambda(2);
    }

    #[test]
    fn exact_ordering_near_ties() {
        // lambda_1 vs its best small rational approximations
        let l = QuadInt::lambda(1);
        assert!(l > QuadInt::from_integer(1, 1));
        assert!(l < QuadInt::from_integer(1, 2));
        // 987/610 < lambda < 1597/987 in Z[lambda]: compare 610*lambda vs 987
        assert!(l.scale(610) > QuadInt::from_integer(1, 987));
        assert!(l.scale(987) < QuadInt::from_integer(1, 1597));
    }

    #[test]
    fn fourier_module_point() {
        let k = FourierModulePoint::from_coeffs(1, 0, 1);
        assert_abs_diff_eq!(k.value(), lambda_value(1) / 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            k.star_value(),
            lambda_conj_value(1) / 5f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(k.star().star(), k);
    }

    fn quad_int(m: u32) -> impl Strategy<Value = QuadInt> {
        (-1000i64..1000, -1000i64..1000).prop_map(move |(a, b)| QuadInt::new(m, a, b))
    }

    proptest! {
        #[test]
        fn ring_axioms(x in quad_int(2), y in quad_int(2), z in quad_int(2)) {
            prop_assert_eq!((x + y) + z, x + (y + z));
            prop_assert_eq!((x * y) * z, x * (y * z));
            prop_assert_eq!(x * (y + z), x * y + x * z);
            prop_assert_eq!(x * y, y * x);
        }

        #[test]
        fn star_is_ring_hom_and_involution(x in quad_int(3), y in quad_int(3)) {
            prop_assert_eq!((x * y).star(), x.star() * y.star());
            prop_assert_eq!((x + y).star(), x.star() + y.star());
            prop_assert_eq!(x.star().star(), x);
        }

        #[test]
        fn trace_is_integer_sum(x in quad_int(2)) {
            let t = x.value() + x.star().value();
            prop_assert!((t - x.trace() as f64).abs() < 1e-6);
        }

        #[test]
        fn float_agrees_with_exact(x in quad_int(1), y in quad_int(1)) {
            let exact = (x * y).value();
            let float = x.value() * y.value();
            prop_assert!((exact - float).abs() <= 1e-9 * (1.0 + exact.abs()));
        }

        #[test]
        fn signum_matches_float(x in quad_int(2)) {
            let v = x.value();
            if v.abs() > 1e-6 {
                let expected = if v > 0.0 { Ordering::Greater } else { Ordering::Less };
                prop_assert_eq!(x.signum(), expected);
            }
        }
    }
}
