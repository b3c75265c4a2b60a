//! Scalar abstraction shared by the spectral tables, the linear solvers and
//! the rate-matrix builders.
//!
//! Three families are supported:
//!
//! * `f32` / `f64` for fast evaluation at modest truncation orders,
//! * [`Rational`] (arbitrary-precision rationals) for exact solves,
//! * [`BigFloat<P>`] (binary floating point with `P` bits of mantissa) for
//!   large truncation orders, where the monomial triangular systems lose
//!   roughly two bits per order to cancellation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

pub trait Scalar:
    Num
    + Clone
    + fmt::Debug
    + PartialOrd
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Name recorded in output metadata.
    const NAME: &'static str;

    /// Conversion from a double. Exact for every type except `f32`.
    fn from_f64(x: f64) -> Self;

    fn from_i64(n: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// `e^self`. Rationals round-trip through `f64`.
    fn exp(&self) -> Self;

    /// Unit roundoff; zero for exact types.
    fn epsilon() -> f64;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_i64(i64::try_from(n).expect("index fits in i64"))
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn powu(&self, n: u32) -> Self {
        num_traits::pow(self.clone(), n as usize)
    }

    fn is_finite(&self) -> bool {
        true
    }
}

macro_rules! impl_scalar_float {
    ($t:ty, $name:expr) => {
        impl Scalar for $t {
            const NAME: &'static str = $name;

            fn from_f64(x: f64) -> Self {
                x as $t
            }

            fn from_i64(n: i64) -> Self {
                n as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }

            fn epsilon() -> f64 {
                <$t>::EPSILON as f64 / 2.0
            }

            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }

            fn powu(&self, n: u32) -> Self {
                self.powi(n as i32)
            }

            fn is_finite(&self) -> bool {
                <$t>::is_finite(*self)
            }
        }
    };
}

impl_scalar_float!(f32, "f32");
impl_scalar_float!(f64, "f64");

impl Scalar for BigRational {
    const NAME: &'static str = "rational";

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn exp(&self) -> Self {
        Self::from_f64(Scalar::to_f64(self).exp())
    }

    fn epsilon() -> f64 {
        0.0
    }
}

/// Binary floating point with `P` mantissa bits, backed by `dashu-float`.
///
/// Every value carries precision `P`, so arithmetic never silently falls
/// back to the unlimited-precision context of bare integer conversions.
#[derive(Clone, PartialEq)]
pub struct BigFloat<const P: usize>(FBig<HalfEven>);

impl<const P: usize> BigFloat<P> {
    fn wrap(x: FBig<HalfEven>) -> Self {
        BigFloat(x.with_precision(P).value())
    }

    pub fn inner(&self) -> &FBig<HalfEven> {
        &self.0
    }

    /// Nearest value to an exact rational (two roundings).
    pub fn from_rational(r: &Rational) -> Self {
        let parse = |n: &BigInt| Self::from_str_radix(&n.to_string(), 10).expect("integer literal");
        parse(r.numer()) / parse(r.denom())
    }
}

impl<const P: usize> fmt::Debug for BigFloat<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigFloat<{P}>({:e})", self.0.to_f64().value())
    }
}

impl<const P: usize> fmt::Display for BigFloat<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_f64().value())
    }
}

impl<const P: usize> PartialOrd for BigFloat<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! bigfloat_binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident, $op:tt) => {
        impl<const P: usize> $tr for BigFloat<P> {
            type Output = Self;
            fn $f(self, rhs: Self) -> Self {
                BigFloat(self.0 $op rhs.0)
            }
        }
        impl<'a, const P: usize> $tr<&'a BigFloat<P>> for &'a BigFloat<P> {
            type Output = BigFloat<P>;
            fn $f(self, rhs: &'a BigFloat<P>) -> BigFloat<P> {
                BigFloat(&self.0 $op &rhs.0)
            }
        }
        impl<const P: usize> $atr for BigFloat<P> {
            fn $af(&mut self, rhs: Self) {
                self.0 = &self.0 $op &rhs.0;
            }
        }
    };
}

bigfloat_binop!(Add, add, AddAssign, add_assign, +);
bigfloat_binop!(Sub, sub, SubAssign, sub_assign, -);
bigfloat_binop!(Mul, mul, MulAssign, mul_assign, *);
bigfloat_binop!(Div, div, DivAssign, div_assign, /);

impl<const P: usize> Rem for BigFloat<P> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        let q = (&self.0 / &rhs.0).trunc();
        BigFloat(&self.0 - &(q * &rhs.0))
    }
}

impl<const P: usize> Neg for BigFloat<P> {
    type Output = Self;
    fn neg(self) -> Self {
        BigFloat(-self.0)
    }
}

impl<const P: usize> Zero for BigFloat<P> {
    fn zero() -> Self {
        Self::wrap(FBig::ZERO)
    }
    fn is_zero(&self) -> bool {
        self.0.repr().is_zero()
    }
}

impl<const P: usize> One for BigFloat<P> {
    fn one() -> Self {
        Self::wrap(FBig::ONE)
    }
}

impl<const P: usize> Num for BigFloat<P> {
    type FromStrRadixErr = crate::error::Error;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let bad = |e: String| crate::error::Error::InvalidArgument(format!("cannot parse {s:?}: {e}"));
        if radix != 10 {
            return Err(bad(format!("unsupported radix {radix}")));
        }
        let x: FBig<HalfEven, 10> = s.parse().map_err(|e| bad(format!("{e:?}")))?;
        let digits = x.precision().max(1);
        let binary = x.with_precision(digits).value().with_base_and_precision::<2>(P).value();
        Ok(Self::wrap(binary))
    }
}

impl<const P: usize> Scalar for BigFloat<P> {
    const NAME: &'static str = "bigfloat";

    fn from_f64(x: f64) -> Self {
        Self::wrap(FBig::try_from(x).expect("finite float"))
    }

    fn from_i64(n: i64) -> Self {
        Self::wrap(FBig::from(n))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    fn exp(&self) -> Self {
        BigFloat(self.0.exp())
    }

    fn epsilon() -> f64 {
        (-(P as f64)).exp2()
    }
}
