//! Phase-transition verdicts for `(p, q, k, J)` with computed witnesses.

use std::fmt;

use serde::Serialize;

use crate::analytic::{exp_threshold, SqrtObstruction};
use crate::error::ModelError;
use crate::gibbs::{
    build_volume, norm_profile, transition_matrix, verify_compatibility, BoundaryFieldAssignment,
    CompatReport, CompatStatus, FieldChoice,
};
use crate::padic::PadicNorm;
use crate::potts::{
    contraction_trace, discriminant_analysis, norm_case_analysis, solve_ti, verify_ti_root,
    DiscriminantReport, FieldVector, ModelParams, NormReport, RootCertificate, SpinAction,
};
use crate::sampling::{random_field, rng_from_seed};

type ModelResult<T> = Result<T, ModelError>;

/// Iterations and seed of the contraction witness attached to uniqueness verdicts.
pub const CONTRACTION_ITERATIONS: usize = 10;
pub const CONTRACTION_SEED: u64 = 0;
/// Path lengths reported as boundedness evidence.
pub const PATH_NORM_DEPTH: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Outcome {
    PhaseTransition,
    NoPhaseTransition,
    /// No second translation-invariant solution. Weaker than
    /// `NoPhaseTransition`: non-invariant measures are not excluded.
    NoSecondTISolution,
    UnresolvedConjecture,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::PhaseTransition => "PhaseTransition",
            Outcome::NoPhaseTransition => "NoPhaseTransition",
            Outcome::NoSecondTISolution => "NoSecondTISolution",
            Outcome::UnresolvedConjecture => "UnresolvedConjecture",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Boundedness {
    Bounded,
    Unbounded,
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundedness::Bounded => "bounded",
            Boundedness::Unbounded => "unbounded",
        })
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Witnesses {
    pub roots: Vec<RootCertificate>,
    pub residual_norms: Vec<PadicNorm>,
    pub contraction: Vec<PadicNorm>,
    pub boundedness: Option<Boundedness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_case: Option<NormReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discriminant: Option<DiscriminantReport>,
    /// Computations that contradict the expected witness, if any.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub params: ModelParams,
    pub outcome: Outcome,
    pub basis: Vec<String>,
    pub witnesses: Witnesses,
}

fn obstruction_name(o: &SqrtObstruction) -> &'static str {
    match o {
        SqrtObstruction::OddValuation { .. } => "odd-valuation",
        SqrtObstruction::NonResidue { .. } => "non-residue",
        SqrtObstruction::NotOneModEight { .. } => "not-one-mod-eight",
        SqrtObstruction::Undetermined { .. } => "undetermined",
    }
}

fn boundedness_rule(params: &ModelParams) -> Boundedness {
    if params.q_divisible() {
        Boundedness::Unbounded
    } else {
        Boundedness::Bounded
    }
}

fn contraction_witness(params: &ModelParams, w: &mut Witnesses) -> ModelResult<()> {
    let mut rng = rng_from_seed(CONTRACTION_SEED);
    let p = params.p();
    let h0 = random_field(
        &mut rng,
        p,
        params.q(),
        exp_threshold(p),
        params.working_precision(),
    );
    match contraction_trace(params, &h0, CONTRACTION_ITERATIONS) {
        Ok(trace) => w.contraction = trace.norms,
        Err(ModelError::ContractionBoundViolated { step }) => w
            .findings
            .push(format!("contraction factor 1/{p} violated at step {step}")),
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Decision procedure over the parameter classes. Errors only when precision
/// runs out.
pub fn classify(params: &ModelParams) -> ModelResult<Verdict> {
    let p = params.p();
    let q = params.q();
    let mut w = Witnesses {
        boundedness: Some(boundedness_rule(params)),
        ..Witnesses::default()
    };
    let mut basis = Vec::new();

    let outcome = if q == 2 {
        basis.push("ising-uniqueness".to_string());
        if !params.q_divisible() {
            contraction_witness(params, &mut w)?;
        }
        Outcome::NoPhaseTransition
    } else if !params.q_divisible() {
        basis.push("contraction-uniqueness".to_string());
        contraction_witness(params, &mut w)?;
        Outcome::NoPhaseTransition
    } else if p == 2 && q % 4 == 2 {
        basis.push("norm-clash-q-2-mod-4".to_string());
        w.norm_case = Some(norm_case_analysis(params));
        Outcome::NoSecondTISolution
    } else if params.k() >= 3 {
        basis.push("unresolved-higher-order-tree".to_string());
        w.norm_case = Some(norm_case_analysis(params));
        Outcome::UnresolvedConjecture
    } else {
        let sol = solve_ti(params)?;
        w.residual_norms = sol
            .roots
            .iter()
            .chain(&sol.inadmissible)
            .map(|r| r.residual)
            .collect();
        if params.k() == 1 {
            // The trivial solution z = 1 is the second fixed point.
            w.roots = sol.roots.clone();
            if sol.roots.is_empty() {
                basis.push("k1-linear-root-inadmissible".to_string());
                Outcome::NoSecondTISolution
            } else {
                w.roots.insert(0, verify_ti_root(&params.one(), params));
                basis.push("k1-linear-second-solution".to_string());
                Outcome::PhaseTransition
            }
        } else {
            w.discriminant = Some(discriminant_analysis(params));
            w.roots = sol.roots.clone();
            if sol.roots.len() >= 2 {
                basis.push("two-admissible-quadratic-roots".to_string());
                Outcome::PhaseTransition
            } else {
                match &sol.obstruction {
                    Some(o) => basis.push(format!("no-square-root:{}", obstruction_name(o))),
                    None if sol.double => basis.push("double-root".to_string()),
                    None => basis.push("roots-not-admissible".to_string()),
                }
                Outcome::NoSecondTISolution
            }
        }
    };
    Ok(Verdict {
        params: params.clone(),
        outcome,
        basis,
        witnesses: w,
    })
}

/// `max |μ^(n)|` on one enumerated volume.
#[derive(Clone, Debug, Serialize)]
pub struct VolumeNorm {
    pub n: u32,
    pub configs: u64,
    pub max_measure_norm: PadicNorm,
    pub all_weights_units: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundednessReport {
    pub verdict: Boundedness,
    pub volumes: Vec<VolumeNorm>,
    /// Radii skipped because `q^|V_n|` exceeds the cap.
    pub skipped: Vec<u32>,
    pub path_norms: Vec<PadicNorm>,
    pub entries_at_least_p: bool,
    /// Whether the computed norms support the verdict.
    pub evidence_agrees: bool,
}

/// Bounded iff `q ∉ pN`, with measure norms on `V_1..V_max_n` (those under
/// `cap`) and path-marginal norms as evidence. `h` should be a fixed point.
pub fn boundedness_verdict(
    params: &ModelParams,
    h: &FieldVector,
    max_n: u32,
    cap: u64,
) -> ModelResult<BoundednessReport> {
    let verdict = boundedness_rule(params);
    let mut volumes = Vec::new();
    let mut skipped = Vec::new();
    for n in 1..=max_n {
        let volume = match build_volume(params.k(), n, params.q(), cap) {
            Ok(v) => v,
            Err(ModelError::EnumerationCap { .. }) => {
                skipped.push(n);
                continue;
            }
            Err(e) => return Err(e),
        };
        let fields = BoundaryFieldAssignment::constant(&volume, h, SpinAction::Reduced);
        let prof = norm_profile(&volume, &fields, params, cap)?;
        volumes.push(VolumeNorm {
            n,
            configs: prof.configs,
            max_measure_norm: prof.max_measure_norm,
            all_weights_units: prof.all_weights_units,
        });
    }
    let t = transition_matrix(params, h)?;
    let path_norms = t.path_norms(PATH_NORM_DEPTH)?;
    let one = PadicNorm::one();
    let evidence_agrees = match verdict {
        Boundedness::Bounded => {
            volumes.iter().all(|v| v.max_measure_norm == one)
                && path_norms.iter().all(|n| *n <= one)
        }
        Boundedness::Unbounded => {
            volumes.iter().all(|v| v.max_measure_norm > one)
                && path_norms
                    .iter()
                    .enumerate()
                    .all(|(n, norm)| *norm >= PadicNorm::Power(-(n as i64)))
        }
    };
    Ok(BoundednessReport {
        verdict,
        volumes,
        skipped,
        path_norms,
        entries_at_least_p: t.entries_at_least_p,
        evidence_agrees,
    })
}

/// The outcome asserted by the published conditions alone, `None` where they
/// make no claim.
pub fn stated_outcome(params: &ModelParams) -> Option<Outcome> {
    let p = params.p();
    let q = params.q();
    if q == 2 || !params.q_divisible() {
        return Some(Outcome::NoPhaseTransition);
    }
    if p == 2 && q % 4 == 2 {
        return Some(Outcome::NoSecondTISolution);
    }
    match params.k() {
        2 if p != 2 => Some(Outcome::PhaseTransition),
        2 => {
            let g = params.coupling_valuation();
            let m = q.trailing_zeros();
            if (m == 2 && g == 2) || (m >= 3 && g >= 2) {
                Some(Outcome::PhaseTransition)
            } else {
                None
            }
        }
        1 => None,
        _ => Some(Outcome::UnresolvedConjecture),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub params: ModelParams,
    pub stated: Option<Outcome>,
    pub computed: Outcome,
    pub consistent: bool,
    pub discriminant: Option<DiscriminantReport>,
    /// Brute-force compatibility of each root lift at `n = 2`.
    pub compatibility: Vec<CompatReport>,
    pub discrepancies: Vec<String>,
}

/// Compares the stated outcome with the computed one, the closed-form
/// discriminant rule with the digit computation, and (when affordable) checks
/// compatibility of every root by enumeration. Mismatches are reported, not
/// resolved.
pub fn cross_check(params: &ModelParams, cap: u64) -> ModelResult<CrossCheck> {
    let verdict = classify(params)?;
    let stated = stated_outcome(params);
    let mut discrepancies = Vec::new();
    if let Some(s) = stated {
        if s != verdict.outcome {
            discrepancies.push(format!("stated {s}, computed {}", verdict.outcome));
        }
    }
    let discriminant =
        (params.k() == 2 && params.in_solvable_class()).then(|| discriminant_analysis(params));
    if let Some(d) = &discriminant {
        if d.agrees == Some(false) {
            discrepancies.push(format!(
                "closed-form rule predicts sqrt {} but digits give {} ({})",
                if d.predicted == Some(true) {
                    "exists"
                } else {
                    "absent"
                },
                if d.sqrt_exists { "exists" } else { "absent" },
                d.rule
            ));
        }
    }
    let mut compatibility = Vec::new();
    if params.k() == 2 {
        let count = verdict.witnesses.roots.len();
        let fits = build_volume(params.k(), 2, params.q(), cap).is_ok();
        for index in 1..=count {
            if !fits {
                break;
            }
            let r = verify_compatibility(params, 2, FieldChoice::Root { index }, cap)?;
            if r.status != CompatStatus::Compatible {
                discrepancies.push(format!(
                    "root {index} is not compatible at n = 2: {:?}",
                    r.status
                ));
            }
            compatibility.push(r);
        }
    }
    discrepancies.extend(verdict.witnesses.findings.iter().cloned());
    Ok(CrossCheck {
        params: params.clone(),
        stated,
        computed: verdict.outcome,
        consistent: discrepancies.is_empty(),
        discriminant,
        compatibility,
        discrepancies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u64, q: u32, k: u32, j: &str) -> ModelParams {
        ModelParams::parse(p, q, k, j, 32).unwrap()
    }

    #[test]
    fn divisible_odd_prime_has_transition() {
        let v = classify(&params(3, 3, 2, "3")).unwrap();
        assert_eq!(v.outcome, Outcome::PhaseTransition);
        assert_eq!(v.witnesses.roots.len(), 2);
        assert_ne!(v.witnesses.roots[0].z, v.witnesses.roots[1].z);
        assert_eq!(v.witnesses.boundedness, Some(Boundedness::Unbounded));
    }

    #[test]
    fn unit_q_is_unique_with_trace() {
        let m = params(5, 3, 2, "5");
        let v = classify(&m).unwrap();
        assert_eq!(v.outcome, Outcome::NoPhaseTransition);
        assert_eq!(v.witnesses.contraction.len(), CONTRACTION_ITERATIONS + 1);
        assert!(v.witnesses.findings.is_empty());
    }

    #[test]
    fn ising_is_unique() {
        let v = classify(&params(7, 2, 4, "7")).unwrap();
        assert_eq!(v.outcome, Outcome::NoPhaseTransition);
        assert_eq!(v.basis, vec!["ising-uniqueness"]);
        let v = classify(&params(2, 2, 2, "4")).unwrap();
        assert_eq!(v.outcome, Outcome::NoPhaseTransition);
        assert!(v.witnesses.contraction.is_empty());
    }

    #[test]
    fn two_mod_four_has_no_ti_solution() {
        let v = classify(&params(2, 6, 2, "4")).unwrap();
        assert_eq!(v.outcome, Outcome::NoSecondTISolution);
        assert!(v.witnesses.norm_case.is_some());
    }

    #[test]
    fn higher_order_is_unresolved() {
        let v = classify(&params(3, 3, 3, "3")).unwrap();
        assert_eq!(v.outcome, Outcome::UnresolvedConjecture);
    }

    #[test]
    fn k1_uses_the_linear_root() {
        let v = classify(&params(3, 3, 1, "3")).unwrap();
        assert_eq!(v.outcome, Outcome::PhaseTransition);
        assert_eq!(v.witnesses.roots.len(), 2);
        assert!(v.witnesses.roots.iter().all(|r| r.admissible));
    }

    #[test]
    fn obstruction_named_in_basis() {
        // q = 8, |J| = 1/4: D is 5 mod 8 in the unit part.
        let v = classify(&params(2, 8, 2, "4")).unwrap();
        assert_eq!(v.outcome, Outcome::NoSecondTISolution);
        assert!(v.basis[0].starts_with("no-square-root:"), "{:?}", v.basis);
    }

    #[test]
    fn stated_table() {
        assert_eq!(
            stated_outcome(&params(2, 4, 2, "4")),
            Some(Outcome::PhaseTransition)
        );
        assert_eq!(stated_outcome(&params(2, 4, 2, "8")), None);
        assert_eq!(
            stated_outcome(&params(2, 8, 2, "4")),
            Some(Outcome::PhaseTransition)
        );
        assert_eq!(stated_outcome(&params(3, 6, 1, "3")), None);
    }

    #[test]
    fn cross_check_agrees_on_the_main_case() {
        let c = cross_check(&params(3, 3, 2, "3"), 100_000).unwrap();
        assert!(c.consistent, "{:?}", c.discrepancies);
        assert_eq!(c.compatibility.len(), 2);
    }

    #[test]
    fn cross_check_surfaces_q8_quarter() {
        let c = cross_check(&params(2, 8, 2, "4"), 1000).unwrap();
        assert!(!c.consistent);
        assert!(c.compatibility.is_empty());
    }

    #[test]
    fn boundedness_dichotomy() {
        let m = params(3, 4, 2, "3");
        let r = boundedness_verdict(&m, &FieldVector::zero(3, 4, 40), 1, 1000).unwrap();
        assert_eq!(r.verdict, Boundedness::Bounded);
        assert!(r.evidence_agrees);
        let m = params(3, 3, 2, "3");
        let r = boundedness_verdict(&m, &FieldVector::zero(3, 3, 40), 2, 100_000).unwrap();
        assert_eq!(r.verdict, Boundedness::Unbounded);
        assert!(r.evidence_agrees, "{r:?}");
        assert_eq!(r.volumes.len(), 2);
    }

    #[test]
    fn classify_is_deterministic() {
        let m = params(5, 4, 3, "25");
        let a = serde_json::to_string(&classify(&m).unwrap()).unwrap();
        let b = serde_json::to_string(&classify(&m).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
