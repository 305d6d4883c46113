//! Seeded random p-adic values for property checks and perturbed fields.

use num_bigint::{BigUint, RandBigInt};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::exp_threshold;
use crate::padic::{pow_p, PadicNumber};
use crate::potts::FieldVector;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform residue modulo `p^digits` with nonzero leading digit.
pub fn random_unit<R: Rng>(rng: &mut R, p: u64, digits: u32) -> BigUint {
    let modulus = pow_p(p, digits);
    loop {
        let u = rng.gen_biguint_below(&modulus);
        if &u % p != BigUint::from(0u32) {
            return u;
        }
    }
}

/// `p^valuation * u` with `u` a uniform unit known to `precision` digits.
pub fn random_padic<R: Rng>(rng: &mut R, p: u64, valuation: i64, precision: u32) -> PadicNumber {
    PadicNumber::from_parts(p, valuation, random_unit(rng, p, precision), precision)
}

/// A value in the exponential domain with valuation drawn from
/// `[t, t + spread]`, `t` the domain threshold.
pub fn random_domain_scalar<R: Rng>(
    rng: &mut R,
    p: u64,
    precision: u32,
    spread: i64,
) -> PadicNumber {
    let v = exp_threshold(p) + rng.gen_range(0..=spread);
    random_padic(rng, p, v, precision)
}

/// A field with every component of valuation exactly `valuation`
/// (clamped into the domain).
pub fn random_field<R: Rng>(
    rng: &mut R,
    p: u64,
    q: u32,
    valuation: i64,
    precision: u32,
) -> FieldVector {
    let v = valuation.max(exp_threshold(p));
    let components = (0..q - 1)
        .map(|_| random_padic(rng, p, v, precision))
        .collect();
    FieldVector::new(p, components)
}
