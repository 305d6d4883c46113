//! Nearest-neighbour transition matrix of a translation-invariant field and
//! norms of the induced measure on a path.

use serde::Serialize;

use crate::analytic::exp_p;
use crate::error::{ModelError, PadicError};
use crate::padic::{PadicNorm, PadicNumber};
use crate::potts::{FieldVector, ModelParams, SpinAction};

type ModelResult<T> = Result<T, ModelError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantMethod {
    /// Gaussian elimination on `π (P - I) = 0`, `Σ π = 1`.
    Elimination,
    /// `π_i ∝ D_i`, valid because `K` is symmetric; used when elimination
    /// hits a pivot that precision cannot separate from zero.
    DetailedBalance,
}

/// `P_ij = K_ij / D_i` with `K_ij = exp_p(J δ_ij + g_i + g_j)`,
/// `D_i = Σ_j K_ij` and `g` the field in reduced coordinates (`g_q = 0`).
#[derive(Clone, Debug, Serialize)]
pub struct TransitionMatrix {
    pub q: u32,
    pub entries: Vec<Vec<PadicNumber>>,
    pub norms: Vec<Vec<PadicNorm>>,
    pub row_sums: Vec<PadicNumber>,
    pub invariant: Vec<PadicNumber>,
    pub invariant_method: InvariantMethod,
    /// Every `|P_ij|_p ≥ p`, the growth condition behind unboundedness.
    pub entries_at_least_p: bool,
}

pub fn transition_matrix(params: &ModelParams, h: &FieldVector) -> ModelResult<TransitionMatrix> {
    h.check_dim(params.q())?;
    h.check_domain()?;
    let q = params.q() as usize;
    let g: Vec<PadicNumber> = (0..q)
        .map(|s| h.spin_term(s, SpinAction::Reduced))
        .collect();
    let mut kernel = vec![Vec::with_capacity(q); q];
    for i in 0..q {
        for j in 0..q {
            let mut e = &g[i] + &g[j];
            if i == j {
                e = e + params.j();
            }
            kernel[i].push(exp_p(&e)?);
        }
    }
    let zero = PadicNumber::zero(params.p(), params.working_precision());
    let d: Vec<PadicNumber> = kernel
        .iter()
        .map(|row| row.iter().fold(zero.clone(), |a, x| a + x))
        .collect();
    let mut entries = Vec::with_capacity(q);
    for (row, di) in kernel.iter().zip(&d) {
        let inv = di.inv()?;
        entries.push(row.iter().map(|x| x * &inv).collect::<Vec<_>>());
    }
    let norms: Vec<Vec<PadicNorm>> = entries
        .iter()
        .map(|row| row.iter().map(PadicNumber::norm_bound).collect())
        .collect();
    let row_sums = entries
        .iter()
        .map(|row| row.iter().fold(zero.clone(), |a, x| a + x))
        .collect();
    let (invariant, invariant_method) = match eliminate(&entries, params) {
        Some(pi) => (pi, InvariantMethod::Elimination),
        None => {
            let total = d.iter().fold(zero.clone(), |a, x| a + x);
            let inv = total.inv()?;
            (
                d.iter().map(|x| x * &inv).collect(),
                InvariantMethod::DetailedBalance,
            )
        }
    };
    let entries_at_least_p = norms
        .iter()
        .flatten()
        .all(|n| n.valuation().is_some_and(|v| v <= -1));
    Ok(TransitionMatrix {
        q: params.q(),
        entries,
        norms,
        row_sums,
        invariant,
        invariant_method,
        entries_at_least_p,
    })
}

/// Solves `π P = π`, `Σ π = 1` with max-norm pivoting. `None` if a pivot is
/// not a determined nonzero value.
fn eliminate(p_matrix: &[Vec<PadicNumber>], params: &ModelParams) -> Option<Vec<PadicNumber>> {
    let q = p_matrix.len();
    let one = params.one();
    let zero = PadicNumber::zero(params.p(), params.working_precision());
    // Row r of the system is column r of P^T - I; the last row is Σ π = 1.
    let mut a: Vec<Vec<PadicNumber>> = (0..q)
        .map(|r| {
            if r == q - 1 {
                vec![one.clone(); q]
            } else {
                (0..q)
                    .map(|c| {
                        let x = p_matrix[c][r].clone();
                        if r == c {
                            x - &one
                        } else {
                            x
                        }
                    })
                    .collect()
            }
        })
        .collect();
    let mut b: Vec<PadicNumber> = (0..q)
        .map(|r| {
            if r == q - 1 {
                one.clone()
            } else {
                zero.clone()
            }
        })
        .collect();
    for col in 0..q {
        let pivot = (col..q)
            .filter(|&r| a[r][col].valuation().is_some())
            .min_by_key(|&r| a[r][col].valuation())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].inv().ok()?;
        for r in 0..q {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..q {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
            let t = &f * &b[col];
            b[r] = &b[r] - &t;
        }
    }
    Some(
        (0..q)
            .map(|i| &b[i] * &a[i][i].inv().expect("pivot checked"))
            .collect(),
    )
}

impl TransitionMatrix {
    /// `max |π_(ω_0)| Π |P_(ω_m ω_(m+1))|` over spin paths with `2n`
    /// transitions (`2n + 1` vertices), for `n = 0..=max_n`, by a min-plus
    /// recursion on valuations.
    pub fn path_norms(&self, max_n: usize) -> ModelResult<Vec<PadicNorm>> {
        let val = |x: &PadicNumber| {
            x.valuation()
                .ok_or(ModelError::Padic(PadicError::PrecisionExhausted {
                    floor: x.min_valuation(),
                }))
        };
        let mut best: Vec<i64> = self.invariant.iter().map(val).collect::<ModelResult<_>>()?;
        let pv: Vec<Vec<i64>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(val).collect::<ModelResult<Vec<_>>>())
            .collect::<ModelResult<_>>()?;
        let q = best.len();
        let mut out = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            if n > 0 {
                for _ in 0..2 {
                    best = (0..q)
                        .map(|j| (0..q).map(|i| best[i] + pv[i][j]).min().expect("q >= 2"))
                        .collect();
                }
            }
            out.push(PadicNorm::Power(*best.iter().min().expect("q >= 2")));
        }
        Ok(out)
    }
}

/// Worst-case `|μ_π(ω_n)|_p` on a path of `2n + 1` vertices, `n = 0..=max_n`.
pub fn marginal_path_norms(
    params: &ModelParams,
    h: &FieldVector,
    max_n: usize,
) -> ModelResult<Vec<PadicNorm>> {
    transition_matrix(params, h)?.path_norms(max_n)
}
