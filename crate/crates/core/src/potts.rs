//! Boundary-field recursion of the Potts model on a Cayley tree and its
//! translation-invariant reduction.
//!
//! Fields are stored in reduced coordinates: spin label `q` couples to 0 and
//! label `i < q` couples to `h_i`. In these coordinates a field `h` on the
//! children of `x` induces
//!
//! ```text
//! exp(h_x,i) = Π_y ((θ-1) e_{y,i} + Σ_j e_{y,j} + 1) / (Σ_j e_{y,j} + θ),   e = exp(h)
//! ```
//!
//! and constant fields `(log z, 0, …, 0)` reduce this to
//! `z = ((θz + q - 1) / (z + θ + q - 2))^k`.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::analytic::{
    exp_p, exp_threshold, is_quadratic_residue, log_p, solve_quadratic_monic, sqrt, SqrtObstruction,
};
use crate::error::{ModelError, PadicError};
use crate::padic::{check_prime, parse_ratio, pow_p, PadicNorm, PadicNumber};
use crate::sampling::{random_unit, rng_from_seed};

/// Extra digits carried by every model computation beyond the requested
/// precision.
pub const GUARD: u32 = 8;

type ModelResult<T> = Result<T, ModelError>;

/// `(p, q, k, J)` with `J` in the exponential domain.
#[derive(Clone, Debug)]
pub struct ModelParams {
    p: u64,
    q: u32,
    k: u32,
    coupling: BigRational,
    precision: u32,
    j: PadicNumber,
    theta: PadicNumber,
}

impl ModelParams {
    pub fn new(p: u64, q: u32, k: u32, coupling: BigRational, precision: u32) -> ModelResult<Self> {
        check_prime(p)?;
        if q < 2 {
            return Err(ModelError::InvalidParams(format!(
                "q = {q}; need at least 2 spin states"
            )));
        }
        if k < 1 {
            return Err(ModelError::InvalidParams(
                "tree order k must be at least 1".into(),
            ));
        }
        if precision < 1 {
            return Err(PadicError::InvalidPrecision(precision).into());
        }
        if coupling.is_zero() {
            return Err(ModelError::ZeroCoupling);
        }
        let work = precision + GUARD;
        let j = PadicNumber::from_ratio(&coupling, p, work)?;
        let required = exp_threshold(p);
        let v = j.valuation().expect("nonzero rational");
        if v < required {
            return Err(ModelError::CouplingOutsideDomain {
                valuation: v,
                required,
            });
        }
        let theta = exp_p(&j)?;
        Ok(Self {
            p,
            q,
            k,
            coupling,
            precision,
            j,
            theta,
        })
    }

    pub fn parse(p: u64, q: u32, k: u32, coupling: &str, precision: u32) -> ModelResult<Self> {
        Self::new(p, q, k, parse_ratio(coupling)?, precision)
    }

    /// Same model at a different precision.
    pub fn with_precision(&self, precision: u32) -> Self {
        Self::new(self.p, self.q, self.k, self.coupling.clone(), precision)
            .expect("parameters already validated")
    }

    pub fn with_order(&self, k: u32) -> ModelResult<Self> {
        Self::new(self.p, self.q, k, self.coupling.clone(), self.precision)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coupling(&self) -> &BigRational {
        &self.coupling
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn working_precision(&self) -> u32 {
        self.precision + GUARD
    }

    pub fn j(&self) -> &PadicNumber {
        &self.j
    }

    pub fn theta(&self) -> &PadicNumber {
        &self.theta
    }

    pub fn coupling_valuation(&self) -> i64 {
        self.j.valuation().expect("coupling is nonzero")
    }

    /// `q ∈ pN`.
    pub fn q_divisible(&self) -> bool {
        self.q as u64 % self.p == 0
    }

    /// The class in which a second translation-invariant solution is possible:
    /// `p | q` for odd `p`, `4 | q` for `p = 2`.
    pub fn in_solvable_class(&self) -> bool {
        if self.p == 2 {
            self.q % 4 == 0
        } else {
            self.q_divisible()
        }
    }

    pub fn constant(&self, n: i64) -> PadicNumber {
        PadicNumber::from_integer(n, self.p, self.working_precision()).expect("prime validated")
    }

    pub fn one(&self) -> PadicNumber {
        PadicNumber::one(self.p, self.working_precision())
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} q={} k={} J={} N={}",
            self.p, self.q, self.k, self.coupling, self.precision
        )
    }
}

impl Serialize for ModelParams {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ModelParams", 5)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("q", &self.q)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("J", &self.coupling.to_string())?;
        st.serialize_field("precision", &self.precision)?;
        st.end()
    }
}

/// How a spin label pairs with a field vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinAction {
    /// Label `i < q` gives `h_i`, label `q` gives 0.
    Reduced,
    /// Label `i < q` gives `h_i`, label `q` gives `Σ h_i`.
    Symmetric,
}

/// A boundary field in `Q_p^(q-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldVector {
    p: u64,
    components: Vec<PadicNumber>,
}

impl FieldVector {
    pub fn new(p: u64, components: Vec<PadicNumber>) -> Self {
        debug_assert!(components.iter().all(|c| c.prime() == p));
        Self { p, components }
    }

    pub fn zero(p: u64, q: u32, precision: u32) -> Self {
        Self::new(p, vec![PadicNumber::zero(p, precision); q as usize - 1])
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Number of components, `q - 1`.
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PadicNumber] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PadicNumber {
        &self.components[i]
    }

    /// Max norm, certified as an upper bound when a component is exhausted.
    pub fn norm(&self) -> PadicNorm {
        self.components
            .iter()
            .map(PadicNumber::norm_bound)
            .max()
            .unwrap_or(PadicNorm::Zero)
    }

    pub fn min_valuation(&self) -> i64 {
        self.components
            .iter()
            .map(PadicNumber::min_valuation)
            .min()
            .unwrap_or(i64::MAX)
    }

    pub fn check_domain(&self) -> ModelResult<()> {
        let required = exp_threshold(self.p);
        for (index, c) in self.components.iter().enumerate() {
            let v = c.min_valuation();
            if v < required {
                return Err(ModelError::FieldOutsideDomain {
                    index,
                    valuation: v,
                    required,
                });
            }
        }
        Ok(())
    }

    pub fn check_dim(&self, q: u32) -> ModelResult<()> {
        if self.dim() + 1 != q as usize {
            return Err(ModelError::FieldDimension {
                expected: q as usize - 1,
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn sum(&self) -> PadicNumber {
        let prec = self
            .components
            .iter()
            .map(|c| c.precision())
            .max()
            .unwrap_or(1)
            .max(1);
        self.components
            .iter()
            .fold(PadicNumber::zero(self.p, prec), |acc, c| acc + c)
    }

    /// The value paired with spin `label` (0-based, `label < q`).
    pub fn spin_term(&self, label: usize, action: SpinAction) -> PadicNumber {
        if label < self.dim() {
            return self.components[label].clone();
        }
        match action {
            SpinAction::Reduced => {
                let prec = self.components.first().map_or(1, |c| c.precision().max(1));
                PadicNumber::zero(self.p, prec)
            }
            SpinAction::Symmetric => self.sum(),
        }
    }

    /// `h'_i = Σ_{j≠i} h_j`.
    pub fn to_primed(&self) -> Self {
        let s = self.sum();
        Self::new(self.p, self.components.iter().map(|c| &s - c).collect())
    }

    /// Inverse of [`to_primed`](Self::to_primed): `h_i = S'/(q-2) - h'_i`
    /// with `S' = Σ h'_i`. Undefined for `q = 2`.
    pub fn from_primed(primed: &FieldVector) -> ModelResult<Self> {
        let q = primed.dim() + 1;
        if q == 2 {
            return Err(ModelError::InvalidParams(
                "the primed coordinate change is singular for q = 2".into(),
            ));
        }
        let s_primed = primed.sum();
        let prec = s_primed.precision().max(1);
        let inv = PadicNumber::from_rational(1, q as i64 - 2, primed.p, prec)?;
        let s = &s_primed * &inv;
        Ok(Self::new(
            primed.p,
            primed.components.iter().map(|c| &s - c).collect(),
        ))
    }

    /// The field that induces the same measures as `self` under the
    /// symmetric spin action: `g_i - Σg/(q-2)`. Undefined for `q = 2`, and
    /// may leave the domain when `p | q - 2`.
    pub fn to_symmetric(&self) -> ModelResult<Self> {
        let negated = Self::new(self.p, self.components.iter().map(|c| -c).collect());
        let h = Self::from_primed(&negated)?;
        h.check_domain()?;
        Ok(h)
    }

    /// Componentwise agreement to `m` digits below the smaller of the two
    /// vectors' valuations.
    pub fn equal_to_precision(&self, other: &FieldVector, m: u32) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let v_min = self.min_valuation().min(other.min_valuation());
        if v_min == i64::MAX {
            return true;
        }
        let target = v_min + m as i64;
        self.components
            .iter()
            .zip(&other.components)
            .all(|(a, b)| (a - b).min_valuation() >= target)
    }

    pub fn perturbed(&self, delta: &FieldVector) -> Self {
        Self::new(
            self.p,
            self.components
                .iter()
                .zip(&delta.components)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

fn field_exps(h: &FieldVector) -> ModelResult<Vec<PadicNumber>> {
    h.components
        .iter()
        .map(|c| exp_p(c).map_err(ModelError::from))
        .collect()
}

fn sum_all(p: u64, prec: u32, xs: &[PadicNumber]) -> PadicNumber {
    xs.iter().fold(PadicNumber::zero(p, prec), |acc, x| acc + x)
}

fn ratio_from_exps(e: &[PadicNumber], i: usize, params: &ModelParams) -> ModelResult<PadicNumber> {
    let theta = params.theta();
    let one = params.one();
    let s = sum_all(params.p(), params.working_precision(), e);
    let num = (theta - &one) * &e[i] + &s + &one;
    let den = &s + theta;
    Ok(num.checked_div(&den)?)
}

/// `((θ-1) e_i + Σ_j e_j + 1) / (Σ_j e_j + θ)` with `e = exp_p(h)`.
pub fn boltzmann_ratio(
    h: &FieldVector,
    i: usize,
    params: &ModelParams,
) -> ModelResult<PadicNumber> {
    h.check_dim(params.q())?;
    h.check_domain()?;
    let e = field_exps(h)?;
    ratio_from_exps(&e, i, params)
}

fn log_component(x: &PadicNumber, index: usize) -> ModelResult<PadicNumber> {
    log_p(x).map_err(|e| match e {
        PadicError::DomainViolation {
            valuation,
            required,
            ..
        } => ModelError::FieldOutsideDomain {
            index,
            valuation,
            required,
        },
        other => other.into(),
    })
}

/// One step of the boundary recursion: component `i` of the result is
/// `log_p Π_y ratio(h_y, i)`.
///
/// The logarithm is taken of the product rather than summed per child: a
/// single ratio can sit outside the logarithm's domain (e.g. near `-1`)
/// while the product over the children lies inside it.
pub fn recursion_step(children: &[FieldVector], params: &ModelParams) -> ModelResult<FieldVector> {
    if children.is_empty() {
        return Err(ModelError::InvalidParams(
            "recursion needs at least one child".into(),
        ));
    }
    // Equal children contribute equal factors; evaluate each distinct one once.
    let mut groups: Vec<(&FieldVector, u32)> = Vec::new();
    for h in children {
        match groups.iter_mut().find(|(g, _)| *g == h) {
            Some((_, count)) => *count += 1,
            None => groups.push((h, 1)),
        }
    }
    let exps: Vec<(Vec<PadicNumber>, u32)> = groups
        .iter()
        .map(|(h, count)| {
            h.check_dim(params.q())?;
            h.check_domain()?;
            Ok((field_exps(h)?, *count))
        })
        .collect::<ModelResult<_>>()?;
    let dim = params.q() as usize - 1;
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut prod = params.one();
        for (e, count) in &exps {
            prod = prod * ratio_from_exps(e, i, params)?.pow(*count);
        }
        out.push(log_component(&prod, i)?);
    }
    Ok(FieldVector::new(params.p(), out))
}

/// `A = θz + q - 1`, `B = z + θ + q - 2` and the discriminant
/// `D = (θ-1)^2 + 4(1-q)` of the order-2 reduction.
#[derive(Clone, Debug, Serialize)]
pub struct TIReduction {
    pub z: PadicNumber,
    pub a: PadicNumber,
    pub b: PadicNumber,
    pub discriminant: PadicNumber,
}

pub fn ti_reduction(z: &PadicNumber, params: &ModelParams) -> TIReduction {
    let q = params.q() as i64;
    let theta = params.theta();
    TIReduction {
        z: z.clone(),
        a: theta * z + params.constant(q - 1),
        b: z + theta + params.constant(q - 2),
        discriminant: discriminant(params),
    }
}

pub fn discriminant(params: &ModelParams) -> PadicNumber {
    let t1 = params.theta() - &params.one();
    &t1 * &t1 + params.constant(4 * (1 - params.q() as i64))
}

/// `z - (A/B)^k`; its norm certifies a translation-invariant fixed point.
pub fn ti_residual(z: &PadicNumber, params: &ModelParams) -> ModelResult<PadicNumber> {
    let r = ti_reduction(z, params);
    let ratio = r.a.checked_div(&r.b)?;
    Ok(z - &ratio.pow(params.k()))
}

/// `|z - 1|_p < p^(-1/(p-1))`, equivalently `log_p z` is a domain field.
pub fn is_admissible(z: &PadicNumber) -> bool {
    let d = z - &PadicNumber::one(z.prime(), z.precision().max(1));
    d.min_valuation() >= exp_threshold(z.prime())
}

/// `A^k - B^k` and `(θ-1)(z-1) Σ_i A^(k-1-i) B^i`, equal for every `z`
/// because `A - B = (θ-1)(z-1)`.
pub fn factorization_sides(z: &PadicNumber, params: &ModelParams) -> (PadicNumber, PadicNumber) {
    let r = ti_reduction(z, params);
    let k = params.k();
    let lhs = r.a.pow(k) - r.b.pow(k);
    let rhs = (params.theta() - &params.one()) * (z - &params.one()) * geometric_sum(&r.a, &r.b, k);
    (lhs, rhs)
}

/// `B^k` and `(θ-1) Σ_i A^(k-1-i) B^i`: the fixed-point equation with the
/// trivial factor `z - 1` removed. The sides agree exactly at nontrivial
/// fixed points.
pub fn reduced_equation_sides(z: &PadicNumber, params: &ModelParams) -> (PadicNumber, PadicNumber) {
    let r = ti_reduction(z, params);
    let k = params.k();
    let lhs = r.b.pow(k);
    let rhs = (params.theta() - &params.one()) * geometric_sum(&r.a, &r.b, k);
    (lhs, rhs)
}

fn geometric_sum(a: &PadicNumber, b: &PadicNumber, k: u32) -> PadicNumber {
    let p = a.prime();
    let prec = a.precision().max(b.precision()).max(1);
    (0..k).fold(PadicNumber::zero(p, prec), |acc, i| {
        acc + a.pow(k - 1 - i) * b.pow(i)
    })
}

/// A candidate fixed point with its certificates.
#[derive(Clone, Debug, Serialize)]
pub struct RootCertificate {
    pub z: PadicNumber,
    /// `log_p z` when admissible.
    pub h: Option<PadicNumber>,
    pub admissible: bool,
    pub distance_to_one: PadicNorm,
    /// Certified upper bound on `|z - (A/B)^k|_p`.
    pub residual: PadicNorm,
}

pub fn verify_ti_root(z: &PadicNumber, params: &ModelParams) -> RootCertificate {
    let admissible = is_admissible(z);
    let distance_to_one = (z - &params.one()).norm_bound();
    let residual = match ti_residual(z, params) {
        Ok(r) => r.norm_bound(),
        Err(_) => PadicNorm::Power(i64::MIN),
    };
    let h = if admissible { log_p(z).ok() } else { None };
    RootCertificate {
        z: z.clone(),
        h,
        admissible,
        distance_to_one,
        residual,
    }
}

/// The nontrivial translation-invariant solutions for `k ∈ {1, 2}`.
#[derive(Clone, Debug, Serialize)]
pub struct TiSolution {
    pub roots: Vec<RootCertificate>,
    pub inadmissible: Vec<RootCertificate>,
    pub obstruction: Option<SqrtObstruction>,
    pub double: bool,
    pub working_precision: u32,
}

impl TiSolution {
    pub fn admissible_count(&self) -> usize {
        self.roots.len()
    }
}

/// Coefficients `(b, c)` of `z^2 + b z + c`, the `k = 2` equation with the
/// trivial root removed.
pub fn ti_quadratic_coefficients(params: &ModelParams) -> (PadicNumber, PadicNumber) {
    let theta = params.theta();
    let q = params.q() as i64;
    let b = theta.scale(2) - theta * theta + params.constant(2 * q - 3);
    let c = params.constant((q - 1) * (q - 1));
    (b, c)
}

fn residual_meets(cert: &RootCertificate, target: i64) -> bool {
    match cert.residual {
        PadicNorm::Zero => true,
        PadicNorm::Power(e) => e >= target,
    }
}

fn solve_k2_at(params: &ModelParams) -> TiSolution {
    let (b, c) = ti_quadratic_coefficients(params);
    let mut sol = TiSolution {
        roots: Vec::new(),
        inadmissible: Vec::new(),
        obstruction: None,
        double: false,
        working_precision: params.working_precision(),
    };
    match solve_quadratic_monic(&b, &c) {
        Ok(r) => {
            sol.double = r.double;
            let zs = if r.double {
                vec![r.first]
            } else {
                vec![r.first, r.second]
            };
            for z in zs {
                let cert = verify_ti_root(&z, params);
                if cert.admissible {
                    sol.roots.push(cert);
                } else {
                    sol.inadmissible.push(cert);
                }
            }
        }
        Err(e) => sol.obstruction = Some(e),
    }
    sol
}

/// Solves the `k = 2` fixed-point equation. Precision is widened until each
/// root's residual is below `p^-(N-4)`.
pub fn solve_ti_k2(params: &ModelParams) -> ModelResult<TiSolution> {
    if params.k() != 2 {
        return Err(ModelError::InvalidParams(format!(
            "the quadratic reduction needs k = 2, got k = {}",
            params.k()
        )));
    }
    let target = params.precision() as i64 - 4;
    let extra = 2 * params.coupling_valuation().max(0) as u32;
    let mut sol = solve_k2_at(&params.with_precision(params.precision() + extra));
    for widen in [16u32, 48, 112] {
        let done = sol
            .roots
            .iter()
            .chain(&sol.inadmissible)
            .all(|r| residual_meets(r, target));
        if done {
            break;
        }
        sol = solve_k2_at(&params.with_precision(params.precision() + extra + widen));
    }
    Ok(sol)
}

/// `k = 1`: after removing `z - 1` the equation is linear, `B = θ - 1`,
/// with the single solution `z = 1 - q`.
pub fn solve_ti_k1(params: &ModelParams) -> ModelResult<TiSolution> {
    if params.k() != 1 {
        return Err(ModelError::InvalidParams(format!(
            "the linear reduction needs k = 1, got k = {}",
            params.k()
        )));
    }
    let z = params.constant(1 - params.q() as i64);
    let cert = verify_ti_root(&z, params);
    let mut sol = TiSolution {
        roots: Vec::new(),
        inadmissible: Vec::new(),
        obstruction: None,
        double: false,
        working_precision: params.working_precision(),
    };
    if cert.admissible {
        sol.roots.push(cert);
    } else {
        sol.inadmissible.push(cert);
    }
    Ok(sol)
}

/// Nontrivial translation-invariant solutions where a closed form exists.
pub fn solve_ti(params: &ModelParams) -> ModelResult<TiSolution> {
    match params.k() {
        1 => solve_ti_k1(params),
        2 => solve_ti_k2(params),
        k => Err(ModelError::InvalidParams(format!(
            "no closed-form solver for k = {k}; use the residue search"
        ))),
    }
}

/// Residues `r mod p^m` of admissible `z` at which the reduced equation
/// `B^k - (θ-1) Σ A^(k-1-i) B^i` vanishes mod `p^m`. The reduced equation is
/// a polynomial with integral coefficients, so its value mod `p^m` depends
/// only on `z mod p^m`. Exhaustive over `z = 1 + p^t s`: `p^(m-t)` evaluations.
pub fn search_ti_roots_mod(params: &ModelParams, m: u32) -> ModelResult<Vec<BigUint>> {
    if m == 0 || m > 8 {
        return Err(ModelError::InvalidParams(format!(
            "search depth m = {m} must be in 1..=8"
        )));
    }
    let p = params.p();
    let t = exp_threshold(p) as u32;
    if m <= t {
        return Ok(Vec::new());
    }
    let count = p.pow(m - t);
    let modulus = pow_p(p, m);
    let mut found = Vec::new();
    for s in 0..count {
        let z_int = BigUint::from(1u32) + pow_p(p, t) * BigUint::from(s);
        let z = PadicNumber::from_integer(
            num_bigint::BigInt::from(z_int.clone()),
            p,
            params.working_precision(),
        )?;
        let (lhs, rhs) = reduced_equation_sides(&z, params);
        if (lhs - rhs).min_valuation() >= m as i64 {
            found.push(z_int % &modulus);
        }
    }
    Ok(found)
}

/// `h* = (log_p z, 0, …, 0)`.
pub fn lift_root_to_field(z: &PadicNumber, params: &ModelParams) -> ModelResult<FieldVector> {
    if !is_admissible(z) {
        return Err(ModelError::InadmissibleRoot);
    }
    let h = log_component(z, 0)?;
    let prec = h.precision().max(params.working_precision());
    let mut components = vec![h];
    components.extend((1..params.q() - 1).map(|_| PadicNumber::zero(params.p(), prec)));
    Ok(FieldVector::new(params.p(), components))
}

/// Norm class of `A` or `B` at admissible `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormClass {
    /// `≤ 1/p` (odd `p`).
    AtMostInvP,
    /// `≤ 1/4` (`p = 2`).
    AtMostQuarter,
    /// `= 1/2` (`p = 2`).
    Half,
    One,
}

impl NormClass {
    pub fn contains(&self, n: PadicNorm) -> bool {
        match (self, n.valuation()) {
            (NormClass::AtMostInvP, v) => v.map_or(true, |v| v >= 1),
            (NormClass::AtMostQuarter, v) => v.map_or(true, |v| v >= 2),
            (NormClass::Half, v) => v == Some(1),
            (NormClass::One, v) => v == Some(0),
        }
    }
}

/// What the norms say about the reduced equation `B^k = (θ-1) Σ A^(k-1-i) B^i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solvability {
    /// `p = 2`, `q ≡ 2 mod 4`: `|B^k| = 2^-k` exceeds the right side's `2^-(k+1)` bound.
    ValuationClash,
    /// `q ∉ pN` (odd `q` for `p = 2`): `|B^k| = 1` while the right side is `≤ 1/p`.
    UnitNorms,
    /// Norms alone do not exclude a solution.
    PossiblySolvable,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledNorms {
    pub z: PadicNumber,
    pub a: PadicNorm,
    pub b: PadicNorm,
    /// `|B^k|` and `|(θ-1) Σ A^(k-1-i) B^i|`.
    pub lhs: PadicNorm,
    pub rhs: PadicNorm,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub a_class: NormClass,
    pub b_class: NormClass,
    pub solvability: Solvability,
    pub explanation: String,
    pub samples: Vec<SampledNorms>,
    /// Every sample fell in the predicted classes, and for the unsolvable
    /// classes the two sides of the reduced equation had different norms.
    pub consistent: bool,
}

pub fn norm_case_analysis(params: &ModelParams) -> NormReport {
    let p = params.p();
    let q = params.q();
    let k = params.k() as i64;
    let (class, solvability, explanation) = if p == 2 {
        match q % 4 {
            0 => (
                NormClass::AtMostQuarter,
                Solvability::PossiblySolvable,
                "q ≡ 0 mod 4: |A|, |B| ≤ 1/4, norms do not exclude a solution".to_string(),
            ),
            2 => (
                NormClass::Half,
                Solvability::ValuationClash,
                format!(
                    "q ≡ 2 mod 4: |B^k| = 2^-{k} but |(θ-1) Σ A^(k-1-i) B^i| ≤ 2^-{}",
                    k + 1
                ),
            ),
            _ => (
                NormClass::One,
                Solvability::UnitNorms,
                "q odd: |B^k| = 1 but the right side is at most 1/4".to_string(),
            ),
        }
    } else if params.q_divisible() {
        (
            NormClass::AtMostInvP,
            Solvability::PossiblySolvable,
            format!("q ∈ {p}N: |A|, |B| ≤ 1/{p}, norms do not exclude a solution"),
        )
    } else {
        (
            NormClass::One,
            Solvability::UnitNorms,
            format!("q ∉ {p}N: |B^k| = 1 but the right side is at most 1/{p}"),
        )
    };

    let t = exp_threshold(p);
    let mut rng = rng_from_seed(0);
    let prec = params.working_precision();
    let mut samples = Vec::new();
    let mut consistent = true;
    for extra in 0..6 {
        let u = random_unit(&mut rng, p, prec);
        let z = params.one() + PadicNumber::from_parts(p, t + extra, u, prec);
        let r = ti_reduction(&z, params);
        let (lhs, rhs) = reduced_equation_sides(&z, params);
        let s = SampledNorms {
            z,
            a: r.a.norm_bound(),
            b: r.b.norm_bound(),
            lhs: lhs.norm_bound(),
            rhs: rhs.norm_bound(),
        };
        consistent &= class.contains(s.a) && class.contains(s.b);
        if solvability != Solvability::PossiblySolvable {
            consistent &= s.lhs > s.rhs;
        }
        samples.push(s);
    }
    NormReport {
        a_class: class,
        b_class: class,
        solvability,
        explanation,
        samples,
        consistent,
    }
}

/// Square-root existence for `D = (θ-1)^2 + 4(1-q)` read off its digits,
/// alongside the closed-form predictions from the expansion of `D`.
#[derive(Clone, Debug, Serialize)]
pub struct DiscriminantReport {
    pub discriminant: PadicNumber,
    pub gamma: Option<i64>,
    pub a0: Option<u64>,
    pub a1: Option<u64>,
    pub a2: Option<u64>,
    pub sqrt_exists: bool,
    pub obstruction: Option<SqrtObstruction>,
    /// Whether `(p, q)` is in the class where the expansion applies.
    pub applicable: bool,
    /// Predicted square-root existence from the expansion rule.
    pub predicted: Option<bool>,
    pub rule: String,
    /// `None` when no prediction applies.
    pub agrees: Option<bool>,
}

pub fn discriminant_analysis(params: &ModelParams) -> DiscriminantReport {
    let p = params.p();
    // D = (θ-1)^2 (…) loses 2 v(J) digits to the square; widen accordingly.
    let wide = params.with_precision(params.precision() + 2 * params.coupling_valuation() as u32);
    let d = discriminant(&wide);
    let gamma = d.valuation();
    let digit = |i: u32| d.digits(i + 1).ok().map(|ds| ds[i as usize]);
    let (a0, a1, a2) = (digit(0), digit(1), digit(2));
    let root = sqrt(&d);
    let sqrt_exists = root.is_ok();
    let obstruction = root.err();
    let applicable = params.in_solvable_class();

    let (predicted, rule) = if !applicable {
        (
            None,
            "outside the divisible class; see the norm case analysis".to_string(),
        )
    } else if p == 2 {
        // q = 2^(2+m) s, θ - 1 = 2^γ ε. The stated rule below misses m = 1 with
        // γ ≥ 3 (the true condition is m ≥ 1 there); `agrees` exposes it.
        let m = params.q().trailing_zeros() as i64 - 2;
        let g = params.coupling_valuation();
        let pred = (m == 0 && g == 2) || (m > 1 && g > 2);
        (
            Some(pred),
            format!(
                "stated: a1 = a2 = 0 iff (m = 0, γ = 2) or (m > 1, γ > 2); here m = {m}, γ = {g}"
            ),
        )
    } else {
        // a0 = 1 for p = 3 and a0 = 4 for p ≥ 5, both squares.
        let expected = if p == 3 { 1 } else { 4 % p };
        let residue = is_quadratic_residue(expected, p).expect("nonzero residue");
        (
            Some(residue && a0 == Some(expected) && gamma == Some(0)),
            format!("γ(D) = 0 and a0 = {expected}, a quadratic residue mod {p}"),
        )
    };
    let agrees = predicted.map(|pr| pr == sqrt_exists);
    DiscriminantReport {
        discriminant: d,
        gamma,
        a0,
        a1,
        a2,
        sqrt_exists,
        obstruction,
        applicable,
        predicted,
        rule,
        agrees,
    }
}

/// Norms of the translation-invariant iteration `h ← step(h, …, h)`.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionTrace {
    pub norms: Vec<PadicNorm>,
    /// Whether the per-step factor `1/p` was required (only for `q ∉ pN`).
    pub bound_asserted: bool,
}

/// Iterates the recursion with `k` identical children. For `q ∉ pN` each
/// step must shrink the norm by at least `1/p`; a violation is an error.
pub fn contraction_trace(
    params: &ModelParams,
    h0: &FieldVector,
    iterations: usize,
) -> ModelResult<ContractionTrace> {
    h0.check_dim(params.q())?;
    h0.check_domain()?;
    let wide = params.with_precision(params.precision() + 2 * iterations as u32);
    let assert_bound = !params.q_divisible();
    let mut h = h0.clone();
    let mut norms = vec![h.norm()];
    for step in 0..iterations {
        let children = vec![h.clone(); params.k() as usize];
        h = recursion_step(&children, &wide)?;
        let n = h.norm();
        let prev = *norms.last().expect("nonempty");
        if assert_bound && determined_norm(&h) > shrink(prev) {
            return Err(ModelError::ContractionBoundViolated { step: step + 1 });
        }
        norms.push(n);
    }
    Ok(ContractionTrace {
        norms,
        bound_asserted: assert_bound,
    })
}

/// Max norm over components whose valuation is known; exhausted components
/// cannot witness a violation.
fn determined_norm(h: &FieldVector) -> PadicNorm {
    h.components()
        .iter()
        .filter_map(|c| c.valuation())
        .map(PadicNorm::Power)
        .max()
        .unwrap_or(PadicNorm::Zero)
}

fn shrink(n: PadicNorm) -> PadicNorm {
    match n {
        PadicNorm::Zero => PadicNorm::Zero,
        PadicNorm::Power(e) => PadicNorm::Power(e.saturating_add(1)),
    }
}

/// `u_i = Π_{j≠i} exp_p(h_j)`.
pub fn exp_products(h: &FieldVector) -> ModelResult<Vec<PadicNumber>> {
    h.check_domain()?;
    let e = field_exps(h)?;
    let prec = e.iter().map(|x| x.precision()).max().unwrap_or(1);
    Ok((0..e.len())
        .map(|i| {
            e.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(PadicNumber::one(h.prime(), prec), |acc, (_, x)| acc * x)
        })
        .collect())
}

/// `K_i = ((θ-1) u_i + Σ_j u_j + 1) / (Σ_j u_j + θ)` with `u` from
/// [`exp_products`].
pub fn product_ratio(h: &FieldVector, i: usize, params: &ModelParams) -> ModelResult<PadicNumber> {
    let u = exp_products(h)?;
    ratio_from_exps(&u, i, params)
}

/// `U_i = Π_{j≠i} K_j`.
pub fn ratio_complement(
    h: &FieldVector,
    i: usize,
    params: &ModelParams,
) -> ModelResult<PadicNumber> {
    let u = exp_products(h)?;
    let mut acc = params.one();
    for j in (0..u.len()).filter(|&j| j != i) {
        acc = acc * ratio_from_exps(&u, j, params)?;
    }
    Ok(acc)
}

/// `R_i = Π_y U_i(h_y)`.
pub fn children_ratio_product(
    children: &[FieldVector],
    i: usize,
    params: &ModelParams,
) -> ModelResult<PadicNumber> {
    let mut acc = params.one();
    for h in children {
        acc = acc * ratio_complement(h, i, params)?;
    }
    Ok(acc)
}

/// Valuation of a small integer, used for norm comparisons in reports.
pub fn integer_valuation(n: u64, p: u64) -> Option<i64> {
    if n == 0 {
        return None;
    }
    let mut v = 0;
    let mut m = n;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    Some(v)
}

/// Digits of `z` rendered for reports, at most `count`.
pub fn leading_digits(z: &PadicNumber, count: u32) -> Vec<u64> {
    let n = count.min(z.precision());
    z.digits(n).unwrap_or_default()
}
