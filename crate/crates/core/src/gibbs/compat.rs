//! Brute-force check that `μ^(n)` marginalizes onto `μ^(n-1)`.

use rayon::prelude::*;
use serde::Serialize;

use super::measure::{BoundaryFieldAssignment, WeightKernel};
use super::volume::{CayleyVolume, Configuration};
use crate::analytic::{exp_p, exp_threshold};
use crate::error::ModelError;
use crate::padic::{PadicNorm, PadicNumber};
use crate::potts::{lift_root_to_field, solve_ti, FieldVector, ModelParams, SpinAction};

type ModelResult<T> = Result<T, ModelError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompatStatus {
    Compatible,
    Incompatible,
    /// Precision ran out before agreement or disagreement could be certified.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatReport {
    pub status: CompatStatus,
    /// Largest certified nonzero deviation, if any.
    pub max_deviation: Option<PadicNorm>,
    /// Digits of agreement demanded below each marginal's valuation.
    pub precision_digits: u32,
    pub working_precision: u32,
    pub configs: u64,
    pub marginal_classes: u64,
    pub agreeing_classes: u64,
    pub partition_norms: [PadicNorm; 2],
}

/// Marginal weights `Σ_{σ^(n)} w(σ_(n-1), σ^(n))` indexed by the id of
/// `σ_(n-1)`, by enumerating every configuration on `V_n`. With vertex 0 least
/// significant, the configurations extending class `c` are `c + Q r` for
/// `Q = q^|V_(n-1)|`.
fn inner_marginals(
    volume: &CayleyVolume,
    inner: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
) -> ModelResult<Vec<PadicNumber>> {
    let kernel = WeightKernel::new(volume, fields, params)?;
    let classes = inner
        .configuration_count(params.q())
        .expect("checked by caller");
    let extensions = (params.q() as u64).pow(volume.boundary().len() as u32);
    let zero = PadicNumber::zero(params.p(), params.working_precision());
    Ok((0..classes)
        .into_par_iter()
        .map(|c| (0..extensions).fold(zero.clone(), |acc, r| acc + kernel.weight(c + classes * r)))
        .collect())
}

fn boundary_exps(fields: &BoundaryFieldAssignment, q: usize) -> ModelResult<Vec<Vec<PadicNumber>>> {
    fields
        .fields()
        .iter()
        .map(|h| {
            (0..q)
                .map(|s| exp_p(&h.spin_term(s, fields.action())).map_err(ModelError::from))
                .collect()
        })
        .collect()
}

fn theta_powers(params: &ModelParams, max: usize) -> Vec<PadicNumber> {
    let mut out = vec![params.one()];
    for _ in 0..max {
        let next = out.last().expect("nonempty") * params.theta();
        out.push(next);
    }
    out
}

fn inner_weights(
    inner: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
) -> ModelResult<Vec<PadicNumber>> {
    let q = params.q() as usize;
    let exps = boundary_exps(fields, q)?;
    let total = inner
        .configuration_count(params.q())
        .expect("checked by caller");
    let theta_powers = theta_powers(params, inner.edges().len());
    Ok((0..total)
        .into_par_iter()
        .map(|id| {
            let c = Configuration::from_id(id, params.q(), inner.size());
            let m = c.monochromatic_edges(inner);
            inner
                .boundary()
                .zip(&exps)
                .fold(theta_powers[m].clone(), |acc, (x, e)| acc * &e[c.spin(x)])
        })
        .collect())
}

fn sum(params: &ModelParams, xs: &[PadicNumber]) -> PadicNumber {
    xs.iter().fold(
        PadicNumber::zero(params.p(), params.working_precision()),
        |a, x| a + x,
    )
}

/// Compares `Σ_{σ^(n)} μ^(n)(σ_(n-1), σ^(n))` with `μ^(n-1)(σ_(n-1))` for
/// every `σ_(n-1)`, demanding agreement to `digits` digits below the
/// smaller valuation of the two sides.
pub fn check_compatibility_with(
    volume: &CayleyVolume,
    outer: &BoundaryFieldAssignment,
    inner_fields: &BoundaryFieldAssignment,
    params: &ModelParams,
    digits: u32,
    cap: u64,
) -> ModelResult<CompatReport> {
    if volume.radius() < 2 {
        return Err(ModelError::InvalidVolume(
            "compatibility needs n >= 2".into(),
        ));
    }
    let configs = volume.check_cap(params.q(), cap)?;
    let inner = CayleyVolume::new(volume.k(), volume.radius() - 1)?;
    validate(volume, outer, params)?;
    validate(&inner, inner_fields, params)?;

    let marginals = inner_marginals(volume, &inner, outer, params)?;
    let smaller = inner_weights(&inner, inner_fields, params)?;
    let z_outer = sum(params, &marginals);
    let z_inner = sum(params, &smaller);
    let partition_norms = [z_inner.norm_bound(), z_outer.norm_bound()];
    let classes = marginals.len() as u64;

    let (inv_outer, inv_inner) = match (z_outer.inv(), z_inner.inv()) {
        (Ok(a), Ok(b)) => (a, b),
        _ => {
            return Ok(CompatReport {
                status: CompatStatus::Inconclusive,
                max_deviation: None,
                precision_digits: digits,
                working_precision: params.working_precision(),
                configs,
                marginal_classes: classes,
                agreeing_classes: 0,
                partition_norms,
            })
        }
    };

    let mut agreeing = 0u64;
    let mut undecided = false;
    let mut max_deviation: Option<PadicNorm> = None;
    for (m, w) in marginals.iter().zip(&smaller) {
        let lhs = m * &inv_outer;
        let rhs = w * &inv_inner;
        let (Some(vl), Some(vr)) = (lhs.valuation(), rhs.valuation()) else {
            undecided = true;
            continue;
        };
        let d = &lhs - &rhs;
        if d.min_valuation() >= vl.min(vr) + digits as i64 {
            agreeing += 1;
        } else if let Some(v) = d.valuation() {
            let n = PadicNorm::Power(v);
            max_deviation = Some(max_deviation.map_or(n, |cur| cur.max(n)));
        } else {
            undecided = true;
        }
    }
    let status = if max_deviation.is_some() {
        CompatStatus::Incompatible
    } else if undecided {
        CompatStatus::Inconclusive
    } else {
        CompatStatus::Compatible
    };
    Ok(CompatReport {
        status,
        max_deviation,
        precision_digits: digits,
        working_precision: params.working_precision(),
        configs,
        marginal_classes: classes,
        agreeing_classes: agreeing,
        partition_norms,
    })
}

fn validate(
    volume: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
) -> ModelResult<()> {
    if fields.fields().len() != volume.boundary().len() {
        return Err(ModelError::InvalidVolume(format!(
            "{} boundary fields for |W_n| = {}",
            fields.fields().len(),
            volume.boundary().len()
        )));
    }
    for h in fields.fields() {
        h.check_dim(params.q())?;
        h.check_domain()?;
    }
    Ok(())
}

/// Compatibility for a translation-invariant field `h` placed on both
/// boundary shells, at `N - 6` digits.
pub fn check_compatibility(
    volume: &CayleyVolume,
    h: &FieldVector,
    action: SpinAction,
    params: &ModelParams,
    cap: u64,
) -> ModelResult<CompatReport> {
    let inner = CayleyVolume::new(volume.k(), volume.radius().saturating_sub(1).max(1))?;
    let outer = BoundaryFieldAssignment::constant(volume, h, action);
    let inner_fields = BoundaryFieldAssignment::constant(&inner, h, action);
    let digits = params.precision().saturating_sub(6).max(1);
    check_compatibility_with(volume, &outer, &inner_fields, params, digits, cap)
}

/// Which translation-invariant field to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FieldChoice {
    Zero,
    /// 1-based index into the admissible nontrivial fixed points.
    Root {
        index: usize,
    },
    /// A fixed point (or zero) shifted by `p^t` times small random units.
    Perturbed {
        seed: u64,
    },
}

/// The reduced-coordinate field for `choice`, at the model's working precision.
pub fn resolve_field(choice: FieldChoice, params: &ModelParams) -> ModelResult<FieldVector> {
    let p = params.p();
    let prec = params.working_precision();
    match choice {
        FieldChoice::Zero => Ok(FieldVector::zero(p, params.q(), prec)),
        FieldChoice::Root { index } => {
            let sol = solve_ti(params)?;
            let root = index
                .checked_sub(1)
                .and_then(|i| sol.roots.get(i))
                .ok_or_else(|| {
                    ModelError::InvalidParams(format!(
                        "root {index} requested but {} admissible roots exist",
                        sol.roots.len()
                    ))
                })?;
            lift_root_to_field(&root.z, params)
        }
        FieldChoice::Perturbed { seed } => {
            use rand::Rng;
            let base = match solve_ti(params) {
                Ok(sol) if !sol.roots.is_empty() => lift_root_to_field(&sol.roots[0].z, params)?,
                _ => FieldVector::zero(p, params.q(), prec),
            };
            let mut rng = crate::sampling::rng_from_seed(seed);
            let t = exp_threshold(p);
            let scale = p.pow(t as u32) as i64;
            // Exact small integers, so the perturbation is the same at every precision.
            let delta = (0..params.q() - 1)
                .map(|_| loop {
                    let u: i64 = rng.gen_range(1..(p as i64).pow(4));
                    if u % p as i64 != 0 {
                        break PadicNumber::from_integer(u * scale, p, prec)
                            .expect("prime validated");
                    }
                })
                .collect();
            Ok(base.perturbed(&FieldVector::new(p, delta)))
        }
    }
}

/// Runs [`check_compatibility`] at increasing working precision until the
/// answer is no longer inconclusive. Deep cancellation in `Z_n` when
/// `q ∈ pN` can eat tens of digits.
pub fn verify_compatibility(
    params: &ModelParams,
    n: u32,
    choice: FieldChoice,
    cap: u64,
) -> ModelResult<CompatReport> {
    let volume = CayleyVolume::new(params.k(), n)?;
    volume.check_cap(params.q(), cap)?;
    let digits = params.precision().saturating_sub(6).max(1);
    let mut report = None;
    for guard in [16u32, 32, 64, 128, 256] {
        let wide = params.with_precision(params.precision() + guard);
        let h = resolve_field(choice, &wide)?;
        let inner = CayleyVolume::new(volume.k(), n - 1)?;
        let outer = BoundaryFieldAssignment::constant(&volume, &h, SpinAction::Reduced);
        let inner_fields = BoundaryFieldAssignment::constant(&inner, &h, SpinAction::Reduced);
        let r = check_compatibility_with(&volume, &outer, &inner_fields, &wide, digits, cap)?;
        let done = r.status != CompatStatus::Inconclusive;
        report = Some(r);
        if done {
            break;
        }
    }
    Ok(report.expect("at least one attempt"))
}
