//! p-adic exponential, logarithm and square roots.
//!
//! `exp_p` and `log_p` are evaluated as truncated power series whose
//! truncation index comes from a provable tail bound on term valuations.
//! Square roots follow the classical criterion (even valuation, residue
//! condition on the leading digits) and are lifted by Newton iteration.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{PadicError, Result};
use crate::padic::{check_prime, pow_p, split_p, PadicNumber};

/// Smallest valuation inside the open ball `|x|_p < p^(-1/(p-1))`:
/// 1 for odd `p`, 2 for `p = 2`.
pub fn exp_threshold(p: u64) -> i64 {
    if p == 2 {
        2
    } else {
        1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// `B(0, p^(-1/(p-1)))`, where `exp_p` converges.
    Exp,
    /// `B(1, 1)`, where the logarithm series converges.
    Log,
}

/// A convergence ball. Membership is a pure valuation comparison because the
/// norm only takes powers of `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DomainBall {
    pub kind: DomainKind,
    pub p: u64,
}

impl DomainBall {
    pub fn exp(p: u64) -> Self {
        Self {
            kind: DomainKind::Exp,
            p,
        }
    }

    pub fn log(p: u64) -> Self {
        Self {
            kind: DomainKind::Log,
            p,
        }
    }

    pub fn contains(&self, x: &PadicNumber) -> bool {
        match self.kind {
            DomainKind::Exp => x.min_valuation() >= exp_threshold(self.p),
            DomainKind::Log => {
                let d = x - &PadicNumber::one(self.p, x.precision().max(1));
                d.min_valuation() >= 1
            }
        }
    }
}

/// `v_p(n!)` via Legendre: `(n - s_p(n)) / (p - 1)`.
pub fn factorial_valuation(n: u64, p: u64) -> u64 {
    let mut s = 0;
    let mut m = n;
    while m > 0 {
        s += m % p;
        m /= p;
    }
    (n - s) / (p - 1)
}

fn ilog(n: u64, p: u64) -> i64 {
    let mut k = 0;
    let mut m = n;
    while m >= p {
        m /= p;
        k += 1;
    }
    k
}

/// First index `T` with `n*v - v_p(n!) >= target` for every `n >= T`.
/// Uses `v_p(n!) <= (n-1)/(p-1)`, which makes the bound nondecreasing in `n`.
pub fn exp_truncation_index(v: i64, p: u64, target: i64) -> u64 {
    let mut n = 1u64;
    loop {
        let bound = n as i64 * v - ((n - 1) / (p - 1)) as i64;
        if bound >= target {
            return n;
        }
        n += 1;
    }
}

/// First index `T` with `n*v - v_p(n) >= target` for every `n >= T`.
fn log_truncation_index(v: i64, p: u64, target: i64) -> u64 {
    let mut n = 1u64;
    loop {
        if n as i64 * v - ilog(n, p) >= target {
            return n;
        }
        n += 1;
    }
}

fn domain_error(what: &'static str, x: &PadicNumber) -> PadicError {
    PadicError::DomainViolation {
        what,
        valuation: x.min_valuation(),
        required: exp_threshold(x.prime()),
    }
}

/// `exp_p(x) = Σ x^n / n!` for `x` in the exponential domain. The result is a
/// unit with `|exp_p(x) - 1|_p = |x|_p`, known to the absolute precision of `x`.
pub fn exp_p(x: &PadicNumber) -> Result<PadicNumber> {
    let p = x.prime();
    let t = exp_threshold(p);
    if x.is_zero() {
        return Ok(PadicNumber::one(p, x.precision().max(1)));
    }
    if x.min_valuation() < t {
        return Err(domain_error("exp_p argument", x));
    }
    let (v, unit) = match (x.valuation(), x.unit()) {
        (Some(v), Some(u)) => (v, u),
        _ => {
            // O(p^f) with f >= t: exp is 1 + O(p^f).
            let f = x.min_valuation();
            return Ok(PadicNumber::from_parts(p, 0, BigUint::one(), f as u32));
        }
    };
    let target = v + x.precision() as i64;
    let modulus = pow_p(p, target as u32);
    let terms = exp_truncation_index(v, p, target);

    let mut sum = BigUint::one();
    let mut upow = BigUint::one();
    let mut fact_unit = BigUint::one();
    let mut fact_val = 0i64;
    for n in 1..terms {
        upow = upow * unit % &modulus;
        let (k, m) = split_p(&BigUint::from(n), p);
        fact_val += k as i64;
        fact_unit = fact_unit * m % &modulus;
        let e = n as i64 * v - fact_val;
        debug_assert_eq!(fact_val as u64, factorial_valuation(n, p));
        if e >= target {
            continue;
        }
        let inv = fact_unit.modinv(&modulus).expect("p-free factorial part");
        sum += &upow * pow_p(p, e as u32) % &modulus * inv % &modulus;
    }
    let result = PadicNumber::from_parts(p, 0, sum, target as u32);
    debug_assert_eq!(result.valuation(), Some(0));
    debug_assert_eq!(
        (&result - &PadicNumber::one(p, result.precision())).valuation(),
        Some(v)
    );
    Ok(result)
}

/// `log_p(y) = Σ (-1)^(n+1) (y-1)^n / n`, restricted to
/// `|y - 1|_p < p^(-1/(p-1))` where it inverts `exp_p`. Satisfies
/// `|log_p(y)|_p = |y - 1|_p`.
pub fn log_p(y: &PadicNumber) -> Result<PadicNumber> {
    let p = y.prime();
    let t = exp_threshold(p);
    if y.is_zero() {
        return Err(PadicError::DomainViolation {
            what: "log_p argument",
            valuation: i64::MIN,
            required: t,
        });
    }
    let x = y - &PadicNumber::one(p, y.precision().max(1));
    if x.min_valuation() < t {
        return Err(domain_error("log_p argument minus one", &x));
    }
    if x.is_zero() {
        return Ok(PadicNumber::zero(p, y.precision().max(1)));
    }
    let (v, unit) = match (x.valuation(), x.unit()) {
        (Some(v), Some(u)) => (v, u),
        _ => return Ok(PadicNumber::exhausted(p, x.min_valuation())),
    };
    let target = v + x.precision() as i64;
    let modulus = pow_p(p, target as u32);
    let terms = log_truncation_index(v, p, target);

    let mut sum = BigUint::zero();
    let mut upow = BigUint::one();
    for n in 1..terms {
        upow = upow * unit % &modulus;
        let (k, m) = split_p(&BigUint::from(n), p);
        let e = n as i64 * v - k as i64;
        if e >= target {
            continue;
        }
        let inv = m.modinv(&modulus).expect("p-free index part");
        let term = &upow * pow_p(p, e as u32) % &modulus * inv % &modulus;
        if n % 2 == 1 {
            sum += term;
        } else {
            sum += &modulus - term;
        }
    }
    let result = PadicNumber::from_parts(p, 0, sum, target as u32);
    debug_assert_eq!(result.valuation(), Some(v));
    Ok(result)
}

/// Why a square root does not exist (or cannot be decided).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum SqrtObstruction {
    /// The valuation is odd.
    OddValuation { valuation: i64 },
    /// Odd `p`: the leading digit is not a quadratic residue.
    NonResidue { a0: u64 },
    /// `p = 2`: the unit is not 1 mod 8.
    NotOneModEight { a1: u64, a2: u64 },
    /// Too few digits are known to decide.
    Undetermined { floor: i64 },
}

impl fmt::Display for SqrtObstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqrtObstruction::OddValuation { valuation } => {
                write!(f, "valuation {valuation} is odd")
            }
            SqrtObstruction::NonResidue { a0 } => {
                write!(f, "leading digit {a0} is not a quadratic residue")
            }
            SqrtObstruction::NotOneModEight { a1, a2 } => {
                write!(f, "unit digits a1={a1}, a2={a2} are not both zero")
            }
            SqrtObstruction::Undetermined { floor } => {
                write!(f, "value is only known modulo p^{floor}")
            }
        }
    }
}

/// Two roots in the reported order; equal for a double root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootPair {
    pub first: PadicNumber,
    pub second: PadicNumber,
}

impl RootPair {
    fn ordered(a: PadicNumber, b: PadicNumber) -> Self {
        if branch_order(&a, &b) == Ordering::Greater {
            Self {
                first: b,
                second: a,
            }
        } else {
            Self {
                first: a,
                second: b,
            }
        }
    }

    pub fn is_double(&self) -> bool {
        self.first == self.second
    }
}

/// Lexicographic order on unit digits read from `x_0` upward; ties broken by
/// valuation. Used only to make root order reproducible.
pub fn branch_order(a: &PadicNumber, b: &PadicNumber) -> Ordering {
    a.all_digits()
        .cmp(&b.all_digits())
        .then(a.min_valuation().cmp(&b.min_valuation()))
}

fn mod_pow(base: u64, mut e: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut b = base as u128 % m128;
    let mut acc = 1u128 % m128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        e >>= 1;
    }
    acc as u64
}

/// Whether `x^2 ≡ a0 (mod p)` is solvable, by Euler's criterion.
pub fn is_quadratic_residue(a0: u64, p: u64) -> Result<bool> {
    check_prime(p)?;
    if a0 % p == 0 {
        return Err(PadicError::NonUnitResidue { residue: a0, p });
    }
    if p == 2 {
        return Ok(true);
    }
    Ok(mod_pow(a0, (p - 1) / 2, p) == 1)
}

/// Both square roots of `a`, or the condition that rules them out.
pub fn sqrt(a: &PadicNumber) -> std::result::Result<RootPair, SqrtObstruction> {
    let p = a.prime();
    if a.is_zero() {
        return Ok(RootPair {
            first: a.clone(),
            second: a.clone(),
        });
    }
    let (v, unit, n) = match (a.valuation(), a.unit()) {
        (Some(v), Some(u)) => (v, u.clone(), a.precision()),
        _ => {
            return Err(SqrtObstruction::Undetermined {
                floor: a.min_valuation(),
            })
        }
    };
    if v % 2 != 0 {
        return Err(SqrtObstruction::OddValuation { valuation: v });
    }
    let half_v = v / 2;
    let (root, root_precision) = if p == 2 {
        if n < 3 {
            return Err(SqrtObstruction::Undetermined {
                floor: v + n as i64,
            });
        }
        let low = (&unit % 8u32).to_u64().expect("small");
        if low != 1 {
            return Err(SqrtObstruction::NotOneModEight {
                a1: (low >> 1) & 1,
                a2: (low >> 2) & 1,
            });
        }
        (sqrt_unit_two(&unit, n), n - 1)
    } else {
        let a0 = (&unit % p).to_u64().expect("digit below p");
        if !is_quadratic_residue(a0, p).expect("unit digit") {
            return Err(SqrtObstruction::NonResidue { a0 });
        }
        (sqrt_unit_odd(&unit, a0, p, n), n)
    };
    let x = PadicNumber::from_parts(p, half_v, root, root_precision);
    debug_assert!((&x * &x).equal_to_precision(a, root_precision.saturating_sub(1)));
    let y = -&x;
    Ok(RootPair::ordered(x, y))
}

/// Newton doubling from a brute-force root modulo `p`.
fn sqrt_unit_odd(unit: &BigUint, a0: u64, p: u64, n: u32) -> BigUint {
    let r0 = (1..p)
        .find(|r| (r * r) % p == a0)
        .expect("residue has a root mod p");
    let mut r = BigUint::from(r0);
    let mut k = 1u32;
    while k < n {
        k = (2 * k).min(n);
        let m = pow_p(p, k);
        let f = (&r * &r + &m - unit % &m) % &m;
        let inv = (BigUint::from(2u32) * &r % &m)
            .modinv(&m)
            .expect("2r is a unit");
        r = (&r + &m - f * inv % &m) % &m;
    }
    r
}

/// Newton iteration `r <- (r + u/r)/2` from `r = 1`, valid once `u ≡ 1 mod 8`.
/// Each step takes `r^2 ≡ u (mod 2^k)` to `mod 2^(2k-2)`. The root is
/// determined modulo `2^(n-1)`.
fn sqrt_unit_two(unit: &BigUint, n: u32) -> BigUint {
    let work = pow_p(2, n + 1);
    let mut r = BigUint::one();
    let mut k = 3u32;
    while k < n {
        let inv = r.modinv(&work).expect("odd");
        let s = (&r + unit * inv) % &work;
        r = s >> 1u32;
        k = 2 * k - 2;
    }
    let m = pow_p(2, n);
    debug_assert_eq!(&r * &r % &m, unit % &m);
    r % pow_p(2, n - 1)
}

/// Roots of the monic quadratic `z^2 + b z + c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadraticRoots {
    pub first: PadicNumber,
    pub second: PadicNumber,
    /// The discriminant is indistinguishable from zero: any root lies within
    /// the reported precision of this double value.
    pub double: bool,
}

/// `z = (-b ± sqrt(b^2 - 4c)) / 2`. Existence is decided on the
/// discriminant; division by 2 is valid in `Q_2` and only costs precision.
pub fn solve_quadratic_monic(
    b: &PadicNumber,
    c: &PadicNumber,
) -> std::result::Result<QuadraticRoots, SqrtObstruction> {
    let p = b.prime();
    let prec = b.precision().max(c.precision()).max(1);
    let four = PadicNumber::from_integer(4, p, prec).expect("prime validated");
    let half = PadicNumber::from_rational(1, 2, p, prec).expect("prime validated");
    let disc = b * b - &four * c;
    let minus_b = -b;
    match sqrt(&disc) {
        Ok(pair) => {
            let z1 = (&minus_b + &pair.first) * &half;
            let z2 = (&minus_b - &pair.first) * &half;
            let double = disc.is_zero();
            let ordered = RootPair::ordered(z1, z2);
            Ok(QuadraticRoots {
                first: ordered.first,
                second: ordered.second,
                double,
            })
        }
        Err(SqrtObstruction::Undetermined { floor }) if disc.is_exhausted() => {
            // sqrt(O(p^f)) = O(p^ceil(f/2)).
            let slack = PadicNumber::exhausted(p, (floor + 1).div_euclid(2));
            let z = (&minus_b + &slack) * &half;
            Ok(QuadraticRoots {
                first: z.clone(),
                second: z,
                double: true,
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::Signed;

    fn q(num: i64, den: i64, p: u64, n: u32) -> PadicNumber {
        PadicNumber::from_rational(num, den, p, n).unwrap()
    }

    /// Exact rational partial sums, converted once at the end.
    fn rational_series(x: &BigRational, terms: u64, exp: bool) -> BigRational {
        let mut sum = if exp {
            BigRational::one()
        } else {
            BigRational::zero()
        };
        let mut pow = BigRational::one();
        let mut fact = BigInt::one();
        for n in 1..terms {
            pow = &pow * x;
            if exp {
                fact *= n;
                sum += &pow / BigRational::from_integer(fact.clone());
            } else {
                let t = &pow / BigRational::from_integer(BigInt::from(n));
                if n % 2 == 1 {
                    sum += t;
                } else {
                    sum -= t;
                }
            }
        }
        sum
    }

    #[test]
    fn factorial_valuation_matches_counting() {
        for p in [2u64, 3, 5, 7] {
            let mut v = 0;
            for n in 1..200u64 {
                let mut m = n;
                while m % p == 0 {
                    m /= p;
                    v += 1;
                }
                assert_eq!(factorial_valuation(n, p), v, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn exp_of_zero_is_one() {
        assert_eq!(
            exp_p(&PadicNumber::zero(5, 10)).unwrap(),
            PadicNumber::one(5, 10)
        );
    }

    #[test]
    fn exp_three_adic_of_three() {
        let x = q(3, 1, 3, 5);
        let e = exp_p(&x).unwrap();
        assert_eq!(e.norm().unwrap().valuation(), Some(0));
        let d = &e - &PadicNumber::one(3, 10);
        assert_eq!(d.norm().unwrap().valuation(), Some(1));
        // Oracle: terms 3^n/n! have valuation n - v_3(n!) >= 6 from n = 12 on.
        let oracle = rational_series(&BigRational::from_integer(3.into()), 40, true);
        let o = PadicNumber::from_ratio(&oracle, 3, 6).unwrap();
        assert!(e.equal_to_precision(&o, 6));
        assert_eq!(e.digits(5).unwrap(), vec![1, 1, 1, 2, 2]);
        assert_eq!(o.digits(5).unwrap(), e.digits(5).unwrap());
    }

    #[test]
    fn exp_rejects_outside_domain() {
        assert!(matches!(
            exp_p(&q(1, 1, 3, 8)),
            Err(PadicError::DomainViolation { .. })
        ));
        assert!(matches!(
            exp_p(&q(2, 1, 2, 8)),
            Err(PadicError::DomainViolation { .. })
        ));
        assert!(exp_p(&q(4, 1, 2, 8)).is_ok());
    }

    #[test]
    fn log_of_one_is_zero() {
        let l = log_p(&PadicNumber::one(7, 10)).unwrap();
        assert!(l.min_valuation() >= 10);
        assert!(
            log_p(&(PadicNumber::zero(7, 10) + PadicNumber::one(7, 10)))
                .unwrap()
                .min_valuation()
                >= 10
        );
    }

    #[test]
    fn log_five_adic_of_six() {
        let l = log_p(&q(6, 1, 5, 6)).unwrap();
        assert_eq!(l.valuation(), Some(1));
        let oracle = rational_series(&BigRational::from_integer(5.into()), 40, false);
        let o = PadicNumber::from_ratio(&oracle, 5, 7).unwrap();
        assert!(l.equal_to_precision(&o, 5));
        assert_eq!(l.digits(5).unwrap(), o.digits(5).unwrap());
        assert_eq!(l.digits(5).unwrap(), vec![1, 2, 4, 2, 0]);
    }

    #[test]
    fn log_rejects_outside_domain() {
        assert!(log_p(&q(2, 1, 3, 8)).is_err());
        assert!(log_p(&q(3, 1, 2, 8)).is_err());
        assert!(log_p(&PadicNumber::zero(3, 8)).is_err());
    }

    #[test]
    fn exp_log_round_trip_at_p5() {
        let n = 20;
        let y = q(6, 1, 5, n);
        let back = exp_p(&log_p(&y).unwrap()).unwrap();
        assert!(back.equal_to_precision(&y, n - 2));
    }

    #[test]
    fn domain_balls() {
        assert!(DomainBall::exp(3).contains(&q(3, 1, 3, 4)));
        assert!(!DomainBall::exp(2).contains(&q(2, 1, 2, 4)));
        assert!(DomainBall::log(2).contains(&q(3, 1, 2, 4)));
        assert!(!DomainBall::log(5).contains(&q(2, 1, 5, 4)));
    }

    /// Brute force over all residues mod p^k.
    fn squares_mod(a: i64, p: i64, k: u32) -> Vec<i64> {
        let m = p.pow(k);
        (0..m).filter(|x| (x * x - a).rem_euclid(m) == 0).collect()
    }

    #[test]
    fn sqrt_of_p_squared() {
        for p in [2u64, 3, 5, 7] {
            let pair = sqrt(&q((p * p) as i64, 1, p, 10)).unwrap();
            let pp = q(p as i64, 1, p, 10);
            assert!(
                pair.first.equal_to_precision(&pp, 8) || pair.second.equal_to_precision(&pp, 8)
            );
            assert!((&pair.first + &pair.second).min_valuation() >= 1 + 8);
        }
    }

    #[test]
    fn sqrt_seven_in_three_adics() {
        for k in 1..=6 {
            assert!(!squares_mod(7, 3, k).is_empty());
        }
        assert_eq!(squares_mod(7, 3, 2), vec![4, 5]);
        let pair = sqrt(&q(7, 1, 3, 12)).unwrap();
        // 4 ≡ [1, 1] and 5 ≡ [2, 1]; the smaller leading digit comes first.
        assert_eq!(pair.first.residue(2).unwrap(), BigUint::from(4u32));
        assert_eq!(pair.second.residue(2).unwrap(), BigUint::from(5u32));
        assert!((&pair.first * &pair.first).equal_to_precision(&q(7, 1, 3, 12), 10));
    }

    #[test]
    fn sqrt_two_in_five_adics_is_absent() {
        assert!(squares_mod(2, 5, 1).is_empty());
        assert_eq!(
            sqrt(&q(2, 1, 5, 8)),
            Err(SqrtObstruction::NonResidue { a0: 2 })
        );
    }

    #[test]
    fn sqrt_obstructions() {
        assert_eq!(
            sqrt(&q(3, 1, 3, 8)),
            Err(SqrtObstruction::OddValuation { valuation: 1 })
        );
        assert_eq!(
            sqrt(&q(5, 1, 2, 8)),
            Err(SqrtObstruction::NotOneModEight { a1: 0, a2: 1 })
        );
        assert_eq!(
            sqrt(&q(3, 1, 2, 8)),
            Err(SqrtObstruction::NotOneModEight { a1: 1, a2: 0 })
        );
        let exhausted = &q(1, 1, 3, 4) - &q(1, 1, 3, 4);
        assert!(matches!(
            sqrt(&exhausted),
            Err(SqrtObstruction::Undetermined { .. })
        ));
    }

    #[test]
    fn two_adic_square_root() {
        let a = q(17, 1, 2, 20);
        let pair = sqrt(&a).unwrap();
        assert_eq!(pair.first.precision(), 19);
        assert!((&pair.first * &pair.first).equal_to_precision(&a, 19));
        assert!((&pair.first + &pair.second).min_valuation() >= 19);
    }

    #[test]
    fn quadratic_residue_examples() {
        assert!(is_quadratic_residue(1, 11).unwrap());
        assert!(is_quadratic_residue(4, 7).unwrap());
        assert!(!is_quadratic_residue(2, 5).unwrap());
        assert!(is_quadratic_residue(10, 5).is_err());
    }

    #[test]
    fn euler_criterion_agrees_with_enumeration() {
        for p in (3u64..100).filter(|&n| crate::padic::is_prime(n)) {
            let squares: Vec<u64> = (1..p).map(|x| x * x % p).collect();
            for a in 1..p {
                assert_eq!(
                    is_quadratic_residue(a, p).unwrap(),
                    squares.contains(&a),
                    "a={a} p={p}"
                );
            }
        }
    }

    #[test]
    fn quadratic_double_root() {
        let b = q(-2, 1, 7, 16);
        let c = q(1, 1, 7, 16);
        let roots = solve_quadratic_monic(&b, &c).unwrap();
        assert!(roots.double);
        assert!(roots.first.equal_to_precision(&PadicNumber::one(7, 16), 8));
    }

    #[test]
    fn quadratic_without_roots() {
        let b = PadicNumber::zero(5, 16);
        let c = q(-2, 1, 5, 16);
        assert_eq!(
            solve_quadratic_monic(&b, &c),
            Err(SqrtObstruction::NonResidue { a0: 3 })
        );
    }

    #[test]
    fn quadratic_roots_satisfy_polynomial() {
        for (p, bn, cn) in [(3u64, 1i64, -5i64), (2, 1, -2), (5, -3, -4), (7, 5, 6)] {
            let b = q(bn, 1, p, 24);
            let c = q(cn, 1, p, 24);
            let Ok(r) = solve_quadratic_monic(&b, &c) else {
                continue;
            };
            for z in [&r.first, &r.second] {
                let f = z * z + &b * z + &c;
                assert!(f.min_valuation() >= 18, "p={p} f={f}");
            }
            assert!((&r.first + &r.second + &b).min_valuation() >= 18);
        }
    }

    #[test]
    fn rational_oracle_sanity() {
        let x = BigRational::from_integer(BigInt::from(3));
        assert!(rational_series(&x, 5, true).is_positive());
    }
}
