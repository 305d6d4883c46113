//! Scalar p-adic numbers with tracked guaranteed precision.
//!
//! A nonzero value is stored in canonical form `p^v * u` where `u` is a unit
//! known modulo `p^N`. The valuation is exact; only the unit digits carry an
//! error term `O(p^(v + N))`. Two further states exist: the exact zero, and a
//! value whose digits cancelled past the tracked precision. The latter is
//! known only as `O(p^floor)` and is never conflated with zero.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{PadicError, Result};

/// Unit digits carried by values built without an explicit precision.
pub const DEFAULT_PRECISION: u32 = 32;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(PadicError::NotPrime(p))
    }
}

pub(crate) fn pow_p(p: u64, n: u32) -> BigUint {
    BigUint::from(p).pow(n)
}

/// Splits `n = p^k * m` with `p ∤ m`. `n` must be nonzero.
pub(crate) fn split_p(n: &BigUint, p: u64) -> (u32, BigUint) {
    let pb = BigUint::from(p);
    let mut m = n.clone();
    let mut k = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (k, m);
        }
        m = q;
        k += 1;
    }
}

/// An absolute value `p^(-e)`, or zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PadicNorm {
    Zero,
    /// `p^(-e)`; the payload is the valuation `e`.
    Power(i64),
}

impl PadicNorm {
    pub fn from_valuation(v: i64) -> Self {
        PadicNorm::Power(v)
    }

    pub fn one() -> Self {
        PadicNorm::Power(0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PadicNorm::Zero)
    }

    /// The valuation `e` with norm `p^(-e)`; `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        match self {
            PadicNorm::Zero => None,
            PadicNorm::Power(e) => Some(*e),
        }
    }

    pub fn to_f64(&self, p: u64) -> f64 {
        match self {
            PadicNorm::Zero => 0.0,
            PadicNorm::Power(e) => (p as f64).powi(-(*e as i32)),
        }
    }

    /// Renders as `0`, `1`, `3^-2` or `3^4`.
    pub fn render(&self, p: u64) -> String {
        match self {
            PadicNorm::Zero => "0".to_string(),
            PadicNorm::Power(0) => "1".to_string(),
            PadicNorm::Power(e) => format!("{p}^{}", -e),
        }
    }
}

impl Ord for PadicNorm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (PadicNorm::Zero, PadicNorm::Zero) => Ordering::Equal,
            (PadicNorm::Zero, _) => Ordering::Less,
            (_, PadicNorm::Zero) => Ordering::Greater,
            (PadicNorm::Power(a), PadicNorm::Power(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for PadicNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Mul for PadicNorm {
    type Output = PadicNorm;

    fn mul(self, rhs: PadicNorm) -> PadicNorm {
        match (self, rhs) {
            (PadicNorm::Power(a), PadicNorm::Power(b)) => PadicNorm::Power(a + b),
            _ => PadicNorm::Zero,
        }
    }
}

/// JSON form: the valuation `e` of `p^(-e)`, `null` for zero.
impl Serialize for PadicNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PadicNorm::Zero => s.serialize_none(),
            PadicNorm::Power(e) => s.serialize_i64(*e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero,
    Exhausted { floor: i64 },
    Unit { valuation: i64, unit: BigUint },
}

/// An element of `Q_p` at tracked precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicNumber {
    prime: u64,
    /// Unit digits known. For the exact zero this is the context precision
    /// inherited by derived values; for an exhausted value it is 0.
    precision: u32,
    repr: Repr,
}

impl PadicNumber {
    pub fn zero(p: u64, precision: u32) -> Self {
        Self {
            prime: p,
            precision,
            repr: Repr::Zero,
        }
    }

    pub fn one(p: u64, precision: u32) -> Self {
        Self {
            prime: p,
            precision,
            repr: Repr::Unit {
                valuation: 0,
                unit: BigUint::one(),
            },
        }
    }

    /// A value known only to be divisible by `p^floor`.
    pub fn exhausted(p: u64, floor: i64) -> Self {
        Self {
            prime: p,
            precision: 0,
            repr: Repr::Exhausted { floor },
        }
    }

    /// Builds `p^valuation * unit + O(p^(valuation + precision))`, stripping
    /// any factors of `p` from `unit` (each one costs a digit of precision).
    pub fn from_parts(p: u64, valuation: i64, unit: BigUint, precision: u32) -> Self {
        debug_assert!(precision >= 1);
        let unit = unit % pow_p(p, precision);
        if unit.is_zero() {
            return Self::exhausted(p, valuation + precision as i64);
        }
        let (shift, unit) = split_p(&unit, p);
        Self {
            prime: p,
            precision: precision - shift,
            repr: Repr::Unit {
                valuation: valuation + shift as i64,
                unit,
            },
        }
    }

    pub fn from_integer(n: impl Into<BigInt>, p: u64, precision: u32) -> Result<Self> {
        Self::from_rational(n, 1, p, precision)
    }

    /// Converts `num/den` exactly: the valuation is `v_p(num) - v_p(den)` and
    /// the unit is correct modulo `p^precision`.
    pub fn from_rational(
        num: impl Into<BigInt>,
        den: impl Into<BigInt>,
        p: u64,
        precision: u32,
    ) -> Result<Self> {
        check_prime(p)?;
        if precision < 1 {
            return Err(PadicError::InvalidPrecision(precision));
        }
        let num: BigInt = num.into();
        let den: BigInt = den.into();
        if den.is_zero() {
            return Err(PadicError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self::zero(p, precision));
        }
        let negative = (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus);
        let (vn, un) = split_p(num.magnitude(), p);
        let (vd, ud) = split_p(den.magnitude(), p);
        let modulus = pow_p(p, precision);
        let ud_inv = (ud % &modulus)
            .modinv(&modulus)
            .expect("p-free residue is invertible");
        let mut unit = (un % &modulus) * ud_inv % &modulus;
        if negative {
            unit = &modulus - unit;
        }
        Ok(Self {
            prime: p,
            precision,
            repr: Repr::Unit {
                valuation: vn as i64 - vd as i64,
                unit,
            },
        })
    }

    pub fn from_ratio(r: &BigRational, p: u64, precision: u32) -> Result<Self> {
        Self::from_rational(r.numer().clone(), r.denom().clone(), p, precision)
    }

    /// Parses `"a"` or `"a/b"` with integer `a`, `b`.
    pub fn parse_rational(s: &str, p: u64, precision: u32) -> Result<Self> {
        let r = parse_ratio(s)?;
        Self::from_ratio(&r, p, precision)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// Number of unit digits known (0 for an exhausted value).
    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self.repr, Repr::Exhausted { .. })
    }

    /// Exact valuation of a determined nonzero value.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Unit { valuation, .. } => Some(*valuation),
            _ => None,
        }
    }

    /// Largest `e` with the value certainly divisible by `p^e`
    /// (`i64::MAX` for the exact zero).
    pub fn min_valuation(&self) -> i64 {
        match &self.repr {
            Repr::Zero => i64::MAX,
            Repr::Exhausted { floor } => *floor,
            Repr::Unit { valuation, .. } => *valuation,
        }
    }

    pub fn unit(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Unit { unit, .. } => Some(unit),
            _ => None,
        }
    }

    /// Exponent of the error term `O(p^k)`; `None` for the exact zero.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::Exhausted { floor } => Some(*floor),
            Repr::Unit { valuation, .. } => Some(valuation + self.precision as i64),
        }
    }

    pub fn norm(&self) -> Result<PadicNorm> {
        match &self.repr {
            Repr::Zero => Ok(PadicNorm::Zero),
            Repr::Exhausted { floor } => Err(PadicError::PrecisionExhausted { floor: *floor }),
            Repr::Unit { valuation, .. } => Ok(PadicNorm::Power(*valuation)),
        }
    }

    /// A certified upper bound on the norm; exact unless the value is exhausted.
    pub fn norm_bound(&self) -> PadicNorm {
        match &self.repr {
            Repr::Zero => PadicNorm::Zero,
            Repr::Exhausted { floor } => PadicNorm::Power(*floor),
            Repr::Unit { valuation, .. } => PadicNorm::Power(*valuation),
        }
    }

    /// The canonical coefficients `x_0, x_1, …` of the unit part, `x_0 > 0`.
    pub fn digits(&self, count: u32) -> Result<Vec<u64>> {
        match &self.repr {
            Repr::Exhausted { floor } => Err(PadicError::PrecisionExhausted { floor: *floor }),
            Repr::Zero => Ok(vec![0; count as usize]),
            Repr::Unit { unit, .. } => {
                if count > self.precision {
                    return Err(PadicError::DigitsBeyondPrecision {
                        requested: count,
                        available: self.precision,
                    });
                }
                let pb = BigUint::from(self.prime);
                let mut rest = unit.clone();
                let mut out = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let (q, r) = rest.div_rem(&pb);
                    out.push(r.to_u64().expect("digit below p"));
                    rest = q;
                }
                Ok(out)
            }
        }
    }

    /// All known unit digits (empty for zero or an exhausted value).
    pub fn all_digits(&self) -> Vec<u64> {
        match &self.repr {
            Repr::Unit { .. } => self.digits(self.precision).expect("within precision"),
            _ => Vec::new(),
        }
    }

    /// `|self - other|_p <= p^-(v_min + m)`, `v_min` the smaller valuation of
    /// the two operands. Undecidable differences compare unequal.
    pub fn equal_to_precision(&self, other: &PadicNumber, m: u32) -> bool {
        let v_min = self.min_valuation().min(other.min_valuation());
        if v_min == i64::MAX {
            return true;
        }
        let target = v_min + m as i64;
        (self - other).min_valuation() >= target
    }

    /// Drops unit digits beyond `n`.
    pub fn truncate(&self, n: u32) -> Self {
        let n = n.max(1);
        match &self.repr {
            Repr::Zero => Self::zero(self.prime, n),
            Repr::Exhausted { .. } => self.clone(),
            Repr::Unit { valuation, unit } if n < self.precision => Self {
                prime: self.prime,
                precision: n,
                repr: Repr::Unit {
                    valuation: *valuation,
                    unit: unit % pow_p(self.prime, n),
                },
            },
            Repr::Unit { .. } => self.clone(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::Zero => Err(PadicError::DivisionByZero),
            Repr::Exhausted { floor } => Err(PadicError::PrecisionExhausted { floor: *floor }),
            Repr::Unit { valuation, unit } => {
                let modulus = pow_p(self.prime, self.precision);
                let inv = unit.modinv(&modulus).expect("unit is invertible");
                Ok(Self {
                    prime: self.prime,
                    precision: self.precision,
                    repr: Repr::Unit {
                        valuation: -valuation,
                        unit: inv,
                    },
                })
            }
        }
    }

    pub fn checked_div(&self, rhs: &PadicNumber) -> Result<Self> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.prime, self.precision.max(1));
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Multiplies by a small signed integer (exact scalar).
    pub fn scale(&self, k: i64) -> Self {
        if k == 0 {
            return Self::zero(self.prime, self.precision.max(1));
        }
        let factor = Self::from_rational(k, 1, self.prime, self.precision.max(1))
            .expect("prime already validated");
        self * &factor
    }

    /// A representative integer congruent to the value modulo `p^modulus_exp`,
    /// defined when the value is integral and known that far.
    pub fn residue(&self, modulus_exp: u32) -> Result<BigUint> {
        let needed = modulus_exp as i64;
        match &self.repr {
            Repr::Zero => Ok(BigUint::zero()),
            Repr::Exhausted { floor } if *floor >= needed => Ok(BigUint::zero()),
            Repr::Exhausted { floor } => Err(PadicError::PrecisionExhausted { floor: *floor }),
            Repr::Unit { valuation, unit } => {
                if *valuation < 0 {
                    return Err(PadicError::DomainViolation {
                        what: "residue of a non-integral value",
                        valuation: *valuation,
                        required: 0,
                    });
                }
                if *valuation >= needed {
                    return Ok(BigUint::zero());
                }
                if valuation + self.precision as i64 <= needed - 1 {
                    return Err(PadicError::DigitsBeyondPrecision {
                        requested: (needed - valuation) as u32,
                        available: self.precision,
                    });
                }
                let modulus = pow_p(self.prime, modulus_exp);
                Ok(unit * pow_p(self.prime, *valuation as u32) % modulus)
            }
        }
    }

    /// Compact digit rendering, e.g. `3^-1[2 1 0 0 0 0]`.
    pub fn to_digit_string(&self) -> String {
        match &self.repr {
            Repr::Zero => "0".to_string(),
            Repr::Exhausted { floor } => format!("O({}^{floor})", self.prime),
            Repr::Unit { valuation, .. } => {
                let digits: Vec<String> = self.all_digits().iter().map(u64::to_string).collect();
                format!("{}^{}[{}]", self.prime, valuation, digits.join(" "))
            }
        }
    }

    fn assert_same_prime(&self, other: &PadicNumber) {
        assert_eq!(
            self.prime, other.prime,
            "p-adic operands over different primes"
        );
    }
}

pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| PadicError::Parse(s.to_string()))?;
    let den: BigInt = den.parse().map_err(|_| PadicError::Parse(s.to_string()))?;
    if den.is_zero() {
        return Err(PadicError::ZeroDenominator);
    }
    Ok(BigRational::new(num, den))
}

fn add_impl(a: &PadicNumber, b: &PadicNumber) -> PadicNumber {
    a.assert_same_prime(b);
    let p = a.prime;
    match (&a.repr, &b.repr) {
        (Repr::Zero, Repr::Zero) => PadicNumber::zero(p, a.precision.min(b.precision)),
        (Repr::Zero, _) => b.clone(),
        (_, Repr::Zero) => a.clone(),
        (Repr::Exhausted { floor: f }, Repr::Exhausted { floor: g }) => {
            PadicNumber::exhausted(p, (*f).min(*g))
        }
        (Repr::Exhausted { floor }, Repr::Unit { valuation, unit })
        | (Repr::Unit { valuation, unit }, Repr::Exhausted { floor }) => {
            let n = if a.is_exhausted() {
                b.precision
            } else {
                a.precision
            };
            if valuation < floor {
                let keep = (n as i64).min(floor - valuation) as u32;
                PadicNumber::from_parts(p, *valuation, unit.clone(), keep)
            } else {
                PadicNumber::exhausted(p, (*floor).min(valuation + n as i64))
            }
        }
        (
            Repr::Unit {
                valuation: va,
                unit: ua,
            },
            Repr::Unit {
                valuation: vb,
                unit: ub,
            },
        ) => {
            let m = (*va).min(*vb);
            let abs = (va + a.precision as i64).min(vb + b.precision as i64);
            let width = (abs - m) as u32;
            let mut sum = BigUint::zero();
            for (v, u) in [(va, ua), (vb, ub)] {
                let shift = (v - m) as u32;
                if shift < width {
                    sum += u * pow_p(p, shift);
                }
            }
            PadicNumber::from_parts(p, m, sum, width)
        }
    }
}

fn mul_impl(a: &PadicNumber, b: &PadicNumber) -> PadicNumber {
    a.assert_same_prime(b);
    let p = a.prime;
    match (&a.repr, &b.repr) {
        (Repr::Zero, _) => a.clone(),
        (_, Repr::Zero) => b.clone(),
        (Repr::Exhausted { floor: f }, Repr::Exhausted { floor: g }) => {
            PadicNumber::exhausted(p, f + g)
        }
        (Repr::Exhausted { floor }, Repr::Unit { valuation, .. })
        | (Repr::Unit { valuation, .. }, Repr::Exhausted { floor }) => {
            PadicNumber::exhausted(p, floor + valuation)
        }
        (
            Repr::Unit {
                valuation: va,
                unit: ua,
            },
            Repr::Unit {
                valuation: vb,
                unit: ub,
            },
        ) => {
            let n = a.precision.min(b.precision);
            PadicNumber {
                prime: p,
                precision: n,
                repr: Repr::Unit {
                    valuation: va + vb,
                    unit: ua * ub % pow_p(p, n),
                },
            }
        }
    }
}

fn neg_impl(a: &PadicNumber) -> PadicNumber {
    match &a.repr {
        Repr::Unit { valuation, unit } => PadicNumber {
            prime: a.prime,
            precision: a.precision,
            repr: Repr::Unit {
                valuation: *valuation,
                unit: pow_p(a.prime, a.precision) - unit,
            },
        },
        _ => a.clone(),
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $imp:expr) => {
        impl $trait<&PadicNumber> for &PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: &PadicNumber) -> PadicNumber {
                $imp(self, rhs)
            }
        }
        impl $trait<PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: PadicNumber) -> PadicNumber {
                $imp(&self, &rhs)
            }
        }
        impl $trait<&PadicNumber> for PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: &PadicNumber) -> PadicNumber {
                $imp(&self, rhs)
            }
        }
        impl $trait<PadicNumber> for &PadicNumber {
            type Output = PadicNumber;
            fn $method(self, rhs: PadicNumber) -> PadicNumber {
                $imp(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_impl);
forward_binop!(Mul, mul, mul_impl);
forward_binop!(Sub, sub, |a: &PadicNumber, b: &PadicNumber| add_impl(
    a,
    &neg_impl(b)
));

impl Neg for &PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        neg_impl(self)
    }
}

impl Neg for PadicNumber {
    type Output = PadicNumber;
    fn neg(self) -> PadicNumber {
        neg_impl(&self)
    }
}

/// `p^v * (x0 + x1*p + ... ) [prec N]`, showing at most eight terms.
impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prime;
        match &self.repr {
            Repr::Zero => write!(f, "0 [prec {}]", self.precision),
            Repr::Exhausted { floor } => write!(f, "O({p}^{floor})"),
            Repr::Unit { valuation, .. } => {
                let digits = self.all_digits();
                let shown = digits.len().min(8);
                let terms: Vec<String> = digits[..shown]
                    .iter()
                    .enumerate()
                    .map(|(j, d)| match j {
                        0 => d.to_string(),
                        1 => format!("{d}*{p}"),
                        _ => format!("{d}*{p}^{j}"),
                    })
                    .collect();
                let tail = if digits.len() > shown { " + ..." } else { "" };
                write!(
                    f,
                    "{p}^{valuation} * ({}{tail}) [prec {}]",
                    terms.join(" + "),
                    self.precision
                )
            }
        }
    }
}

/// JSON form `{p, v, digits[], precision, zero}`. An exhausted value has
/// `v` equal to its certified valuation floor, no digits and precision 0.
impl Serialize for PadicNumber {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PadicNumber", 5)?;
        st.serialize_field("p", &self.prime)?;
        let v = match &self.repr {
            Repr::Zero => 0,
            Repr::Exhausted { floor } => *floor,
            Repr::Unit { valuation, .. } => *valuation,
        };
        st.serialize_field("v", &v)?;
        st.serialize_field("digits", &self.all_digits())?;
        st.serialize_field("precision", &self.precision)?;
        st.serialize_field("zero", &self.is_zero())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// p-adic long division on plain integers: digit d solves d*den ≡ num (mod p)
    /// by search, then num <- (num - d*den)/p.
    fn long_division_digits(mut num: i128, den: i128, p: i128, count: usize) -> Vec<u64> {
        let mut out = Vec::new();
        for _ in 0..count {
            let d = (0..p).find(|d| (num - d * den).rem_euclid(p) == 0).unwrap();
            out.push(d as u64);
            num = (num - d * den) / p;
        }
        out
    }

    fn q(num: i64, den: i64, p: u64, n: u32) -> PadicNumber {
        PadicNumber::from_rational(num, den, p, n).unwrap()
    }

    #[test]
    fn zero_rational_is_exact_zero() {
        let z = q(0, 1, 3, 6);
        assert!(z.is_zero());
        assert_eq!(z.norm().unwrap(), PadicNorm::Zero);
    }

    #[test]
    fn prime_has_norm_one_over_p() {
        let x = q(3, 1, 3, 6);
        assert_eq!(x.valuation(), Some(1));
        assert_eq!(x.unit().unwrap(), &BigUint::one());
        assert_eq!(x.norm().unwrap(), PadicNorm::Power(1));
    }

    #[test]
    fn five_thirds_matches_long_division() {
        let x = q(5, 3, 3, 6);
        assert_eq!(x.valuation(), Some(-1));
        // 5/3 = 3^-1 * 5; the oracle expands 5/1 directly.
        assert_eq!(long_division_digits(5, 1, 3, 6), vec![2, 1, 0, 0, 0, 0]);
        assert_eq!(x.digits(6).unwrap(), vec![2, 1, 0, 0, 0, 0]);
        assert_eq!(x.norm().unwrap().to_f64(3), 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            PadicNumber::from_rational(1, 1, 4, 6),
            Err(PadicError::NotPrime(4))
        );
        assert_eq!(
            PadicNumber::from_rational(1, 1, 3, 0),
            Err(PadicError::InvalidPrecision(0))
        );
        assert_eq!(
            PadicNumber::from_rational(1, 0, 3, 6),
            Err(PadicError::ZeroDenominator)
        );
    }

    #[test]
    fn digits_beyond_precision_is_an_error() {
        let x = q(7, 1, 5, 4);
        assert!(matches!(
            x.digits(5),
            Err(PadicError::DigitsBeyondPrecision { .. })
        ));
    }

    #[test]
    fn field_operation_examples() {
        let x = q(7, 2, 5, 6);
        assert_eq!(&x + &PadicNumber::zero(5, 6), x);
        let three = q(3, 1, 3, 6);
        let sq = &three * &three;
        assert_eq!(sq.valuation(), Some(2));
        assert_eq!(sq.unit().unwrap(), &BigUint::one());
        let s = q(1, 1, 5, 6) + q(25, 1, 5, 6);
        assert_eq!(s.valuation(), Some(0));
        assert_eq!(s.digits(6).unwrap(), vec![1, 0, 1, 0, 0, 0]);
        assert_eq!(long_division_digits(26, 1, 5, 6), vec![1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn cancellation_is_reported_not_flushed() {
        let x = q(1, 3, 3, 6);
        let d = &x - &x;
        assert!(d.is_exhausted());
        assert!(!d.is_zero());
        assert_eq!(d.norm(), Err(PadicError::PrecisionExhausted { floor: 5 }));
        assert_eq!(d.inv(), Err(PadicError::PrecisionExhausted { floor: 5 }));
        // Partial cancellation costs digits.
        let y = q(1, 1, 3, 6) - q(10, 1, 3, 6);
        assert_eq!(y.valuation(), Some(2));
        assert_eq!(y.precision(), 4);
    }

    #[test]
    fn division_by_zero_errors() {
        let x = q(2, 1, 3, 6);
        assert_eq!(
            x.checked_div(&PadicNumber::zero(3, 6)),
            Err(PadicError::DivisionByZero)
        );
    }

    #[test]
    fn minus_one_is_a_unit() {
        for p in [2, 3, 5, 7, 11] {
            assert_eq!(q(-1, 1, p, 8).norm().unwrap(), PadicNorm::one());
        }
    }

    #[test]
    fn equal_to_precision_examples() {
        let p = 3;
        let m = 5;
        let one = q(1, 1, p, 10);
        assert!(one.equal_to_precision(&one, 10));
        let close = q(1 + 3i64.pow(m), 1, p, 10);
        let far = q(1 + 3i64.pow(m - 1), 1, p, 10);
        assert!(one.equal_to_precision(&close, m));
        assert!(!one.equal_to_precision(&far, m));
    }

    #[test]
    fn renders_text_and_json() {
        let x = q(5, 3, 3, 6);
        assert_eq!(
            x.to_string(),
            "3^-1 * (2 + 1*3 + 0*3^2 + 0*3^3 + 0*3^4 + 0*3^5) [prec 6]"
        );
        assert_eq!(x.to_digit_string(), "3^-1[2 1 0 0 0 0]");
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(
            json,
            r#"{"p":3,"v":-1,"digits":[2,1,0,0,0,0],"precision":6,"zero":false}"#
        );
        let z = serde_json::to_string(&PadicNumber::zero(5, 4)).unwrap();
        assert_eq!(z, r#"{"p":5,"v":0,"digits":[],"precision":4,"zero":true}"#);
    }

    #[test]
    fn parses_rational_strings() {
        let x = PadicNumber::parse_rational(" 5/3 ", 3, 6).unwrap();
        assert_eq!(x, q(5, 3, 3, 6));
        assert!(PadicNumber::parse_rational("1/x", 3, 6).is_err());
        assert_eq!(
            PadicNumber::parse_rational("2/0", 3, 6),
            Err(PadicError::ZeroDenominator)
        );
    }

    #[test]
    fn norm_order_and_product() {
        assert!(PadicNorm::Zero < PadicNorm::Power(10));
        assert!(PadicNorm::Power(2) < PadicNorm::Power(1));
        assert_eq!(
            PadicNorm::Power(2) * PadicNorm::Power(-5),
            PadicNorm::Power(-3)
        );
        assert_eq!(PadicNorm::Power(-2).render(3), "3^2");
    }

    fn rational() -> impl Strategy<Value = (i64, i64)> {
        (-5000i64..5000, 1i64..5000)
    }

    fn prime() -> impl Strategy<Value = u64> {
        prop::sample::select(vec![2u64, 3, 5, 7, 11])
    }

    fn v_p(mut n: i64, p: i64) -> i64 {
        let mut v = 0;
        while n % p == 0 {
            n /= p;
            v += 1;
        }
        v
    }

    proptest! {
        #[test]
        fn strong_triangle_inequality(p in prime(), (a, b) in rational(), (c, d) in rational()) {
            let x = q(a, b, p, 16);
            let y = q(c, d, p, 16);
            let s = &x + &y;
            let nx = x.norm().unwrap();
            let ny = y.norm().unwrap();
            prop_assert!(s.norm_bound() <= nx.max(ny));
            if nx != ny {
                prop_assert_eq!(s.norm().unwrap(), nx.max(ny));
            }
        }

        #[test]
        fn valuations_add(p in prime(), (a, b) in rational(), (c, d) in rational()) {
            prop_assume!(a != 0 && c != 0);
            let x = q(a, b, p, 16);
            let y = q(c, d, p, 16);
            prop_assert_eq!((&x * &y).norm().unwrap(), x.norm().unwrap() * y.norm().unwrap());
        }

        #[test]
        fn agrees_with_rational_arithmetic(p in prime(), (a, b) in rational(), (c, d) in rational()) {
            prop_assume!(c != 0);
            let n = 20;
            let x = q(a, b, p, n);
            let y = q(c, d, p, n);
            let pi = p as i64;
            // Relative precision after the operation is at most n minus the cancellation depth.
            let sum = q(a * d + b * c, b * d, p, n);
            let lost = if a * d + b * c == 0 { n } else {
                (v_p(a * d + b * c, pi) - v_p(b * d, pi)
                    - (v_p(a, pi) - v_p(b, pi)).min(v_p(c, pi) - v_p(d, pi))).max(0) as u32
            };
            prop_assert!((&x + &y).equal_to_precision(&sum, n - lost.min(n)));
            let prod = q(a * c, b * d, p, n);
            prop_assert!((&x * &y).equal_to_precision(&prod, n));
            let quot = q(a * d, b * c, p, n);
            prop_assert!(x.checked_div(&y).unwrap().equal_to_precision(&quot, n));
        }

        #[test]
        fn digits_round_trip(p in prime(), (a, b) in rational()) {
            prop_assume!(a != 0);
            let x = q(a, b, p, 12);
            let v = x.valuation().unwrap();
            let unit = x.digits(12).unwrap().iter().rev()
                .fold(BigUint::zero(), |acc, d| acc * p + *d);
            let back = PadicNumber::from_parts(p, v, unit, 12);
            prop_assert_eq!(back, x);
        }
    }
}
