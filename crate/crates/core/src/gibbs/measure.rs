use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::volume::{CayleyVolume, Configuration};
use crate::analytic::exp_p;
use crate::error::ModelError;
use crate::padic::{PadicNorm, PadicNumber};
use crate::potts::{FieldVector, ModelParams, SpinAction};

type ModelResult<T> = Result<T, ModelError>;

/// Fields on the boundary shell `W_n`, one per boundary vertex.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryFieldAssignment {
    fields: Vec<FieldVector>,
    action: SpinAction,
}

impl BoundaryFieldAssignment {
    /// The same field on every boundary vertex.
    pub fn constant(volume: &CayleyVolume, h: &FieldVector, action: SpinAction) -> Self {
        Self {
            fields: vec![h.clone(); volume.boundary().len()],
            action,
        }
    }

    pub fn per_vertex(fields: Vec<FieldVector>, action: SpinAction) -> Self {
        Self { fields, action }
    }

    pub fn fields(&self) -> &[FieldVector] {
        &self.fields
    }

    pub fn action(&self) -> SpinAction {
        self.action
    }

    fn validate(&self, volume: &CayleyVolume, params: &ModelParams) -> ModelResult<()> {
        if self.fields.len() != volume.boundary().len() {
            return Err(ModelError::InvalidVolume(format!(
                "{} boundary fields for |W_n| = {}",
                self.fields.len(),
                volume.boundary().len()
            )));
        }
        for h in &self.fields {
            h.check_dim(params.q())?;
            h.check_domain()?;
        }
        Ok(())
    }

    /// `Σ_{x ∈ W_n} h_x σ(x)`.
    pub fn boundary_term(&self, config: &Configuration, volume: &CayleyVolume) -> PadicNumber {
        let zero = match self.fields.first().and_then(|h| h.components().first()) {
            Some(c) => PadicNumber::zero(c.prime(), c.precision().max(1)),
            None => PadicNumber::zero(2, 1),
        };
        volume
            .boundary()
            .zip(&self.fields)
            .fold(zero, |acc, (x, h)| {
                acc + h.spin_term(config.spin(x), self.action)
            })
    }
}

/// `H_n(σ) = -J · #{monochromatic edges}`.
pub fn hamiltonian(config: &Configuration, volume: &CayleyVolume, j: &PadicNumber) -> PadicNumber {
    let m = config.monochromatic_edges(volume) as i64;
    -j.scale(m)
}

/// `exp_p(-H_n(σ) + Σ_{x ∈ W_n} h_x σ(x))`, evaluated literally.
pub fn weight(
    config: &Configuration,
    volume: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
) -> ModelResult<PadicNumber> {
    fields.validate(volume, params)?;
    let exponent = -hamiltonian(config, volume, params.j()) + fields.boundary_term(config, volume);
    Ok(exp_p(&exponent)?)
}

/// Precomputed factors for `weight(σ) = θ^m(σ) · Π_{x ∈ W_n} exp_p(h_x σ(x))`.
pub(crate) struct WeightKernel<'a> {
    volume: &'a CayleyVolume,
    q: u32,
    theta_powers: Vec<PadicNumber>,
    boundary_exps: Vec<Vec<PadicNumber>>,
}

impl<'a> WeightKernel<'a> {
    pub(crate) fn new(
        volume: &'a CayleyVolume,
        fields: &BoundaryFieldAssignment,
        params: &ModelParams,
    ) -> ModelResult<Self> {
        fields.validate(volume, params)?;
        let mut theta_powers = vec![params.one()];
        for _ in 0..volume.edges().len() {
            let next = theta_powers.last().expect("nonempty") * params.theta();
            theta_powers.push(next);
        }
        let boundary_exps = fields
            .fields()
            .iter()
            .map(|h| {
                (0..params.q() as usize)
                    .map(|s| exp_p(&h.spin_term(s, fields.action())).map_err(ModelError::from))
                    .collect::<ModelResult<Vec<_>>>()
            })
            .collect::<ModelResult<Vec<_>>>()?;
        Ok(Self {
            volume,
            q: params.q(),
            theta_powers,
            boundary_exps,
        })
    }

    pub(crate) fn weight(&self, id: u64) -> PadicNumber {
        let config = Configuration::from_id(id, self.q, self.volume.size());
        let m = config.monochromatic_edges(self.volume);
        self.volume
            .boundary()
            .zip(&self.boundary_exps)
            .fold(self.theta_powers[m].clone(), |acc, (x, e)| {
                acc * &e[config.spin(x)]
            })
    }
}

/// Weights, normalized measures and `Z_n` over all of `Ω_(V_n)`.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureTable {
    pub q: u32,
    pub volume_size: usize,
    pub weights: Vec<PadicNumber>,
    pub measures: Vec<PadicNumber>,
    pub partition: PadicNumber,
}

impl MeasureTable {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest `|μ(σ)|_p`.
    pub fn max_measure_norm(&self) -> PadicNorm {
        self.measures
            .iter()
            .map(PadicNumber::norm_bound)
            .max()
            .unwrap_or(PadicNorm::Zero)
    }

    pub fn total(&self) -> PadicNumber {
        let p = self.partition.prime();
        self.measures
            .iter()
            .fold(PadicNumber::zero(p, 1), |acc, m| acc + m)
    }

    /// `config_id,spins,weight,measure,measure_norm` rows.
    pub fn to_csv(&self) -> String {
        let p = self.partition.prime();
        let mut out = String::from("config_id,spins,weight,measure,measure_norm\n");
        for (id, (w, m)) in self.weights.iter().zip(&self.measures).enumerate() {
            let c = Configuration::from_id(id as u64, self.q, self.volume_size);
            let _ = writeln!(
                out,
                "{id},{},{},{},{}",
                c.render(),
                w.to_digit_string(),
                m.to_digit_string(),
                m.norm_bound().render(p)
            );
        }
        out
    }
}

pub fn partition_and_measures(
    volume: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
    cap: u64,
) -> ModelResult<MeasureTable> {
    let total = volume.check_cap(params.q(), cap)?;
    let kernel = WeightKernel::new(volume, fields, params)?;
    let weights: Vec<PadicNumber> = (0..total)
        .into_par_iter()
        .map(|id| kernel.weight(id))
        .collect();
    let partition = sum(params, &weights);
    let inv = partition.inv()?;
    let measures = weights.par_iter().map(|w| w * &inv).collect();
    Ok(MeasureTable {
        q: params.q(),
        volume_size: volume.size(),
        weights,
        measures,
        partition,
    })
}

fn sum(params: &ModelParams, xs: &[PadicNumber]) -> PadicNumber {
    let zero = PadicNumber::zero(params.p(), params.working_precision());
    xs.par_chunks(4096)
        .map(|c| c.iter().fold(zero.clone(), |acc, x| acc + x))
        .reduce(|| zero.clone(), |a, b| a + b)
}

/// Streaming `Z_n`, without storing the table.
pub fn partition_function(
    volume: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
    cap: u64,
) -> ModelResult<PadicNumber> {
    Ok(norm_profile(volume, fields, params, cap)?.partition)
}

/// Norm summary of `μ^(n)` computed in one streaming pass.
#[derive(Clone, Debug, Serialize)]
pub struct NormProfile {
    pub configs: u64,
    pub partition: PadicNumber,
    pub partition_norm: PadicNorm,
    /// Weights are values of `exp_p`, so every one must be a unit.
    pub all_weights_units: bool,
    /// `max_σ |μ(σ)|_p = 1 / |Z_n|_p` when all weights are units.
    pub max_measure_norm: PadicNorm,
    pub min_measure_norm: PadicNorm,
}

pub fn norm_profile(
    volume: &CayleyVolume,
    fields: &BoundaryFieldAssignment,
    params: &ModelParams,
    cap: u64,
) -> ModelResult<NormProfile> {
    let total = volume.check_cap(params.q(), cap)?;
    let kernel = WeightKernel::new(volume, fields, params)?;
    let zero = PadicNumber::zero(params.p(), params.working_precision());
    let (partition, units) = (0..total)
        .into_par_iter()
        .fold(
            || (zero.clone(), true),
            |(acc, units), id| {
                let w = kernel.weight(id);
                let unit = w.valuation() == Some(0);
                (acc + w, units && unit)
            },
        )
        .reduce(|| (zero.clone(), true), |a, b| (a.0 + b.0, a.1 && b.1));
    let partition_norm = partition.norm()?;
    let inverse = match partition_norm {
        PadicNorm::Power(e) => PadicNorm::Power(-e),
        PadicNorm::Zero => {
            unreachable!("norm() errors instead of returning zero for a sum of units")
        }
    };
    Ok(NormProfile {
        configs: total,
        partition,
        partition_norm,
        all_weights_units: units,
        max_measure_norm: inverse,
        min_measure_norm: inverse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_field, rng_from_seed};

    fn params(p: u64, q: u32, k: u32, j: &str) -> ModelParams {
        ModelParams::parse(p, q, k, j, 24).unwrap()
    }

    #[test]
    fn hamiltonian_counts_edges() {
        let m = params(3, 3, 2, "3");
        let v = CayleyVolume::new(2, 1).unwrap();
        let constant = Configuration::new(vec![1; 4]);
        assert!(hamiltonian(&constant, &v, m.j()).equal_to_precision(&-m.j().scale(3), 20));
        let alternating = Configuration::new(vec![0, 1, 1, 1]);
        assert!(hamiltonian(&alternating, &v, m.j()).is_zero());
    }

    #[test]
    fn hamiltonian_matches_edge_scan() {
        let m = params(3, 3, 2, "3");
        let v = CayleyVolume::new(2, 2).unwrap();
        for id in [0u64, 7, 1234, 59048] {
            let c = Configuration::from_id(id, 3, v.size());
            let mut count = 0;
            for x in 0..v.size() {
                for y in v.successors(x) {
                    if c.spin(x) == c.spin(y) {
                        count += 1;
                    }
                }
            }
            let h = hamiltonian(&c, &v, m.j());
            let expected = -m.j().scale(count);
            assert!(h.equal_to_precision(&expected, 20) || (h.is_zero() && count == 0));
            assert!(h.min_valuation() >= m.j().min_valuation());
        }
    }

    #[test]
    fn fast_weight_matches_literal() {
        let m = params(3, 3, 2, "3");
        let v = CayleyVolume::new(2, 1).unwrap();
        let mut rng = rng_from_seed(4);
        let h = random_field(&mut rng, 3, 3, 1, 30);
        for action in [SpinAction::Reduced, SpinAction::Symmetric] {
            let f = BoundaryFieldAssignment::constant(&v, &h, action);
            let kernel = WeightKernel::new(&v, &f, &m).unwrap();
            for id in 0..81 {
                let c = Configuration::from_id(id, 3, v.size());
                let lit = weight(&c, &v, &f, &m).unwrap();
                assert!(
                    kernel.weight(id).equal_to_precision(&lit, 24),
                    "id {id} {action:?} {} vs {lit}",
                    kernel.weight(id)
                );
                assert_eq!(lit.valuation(), Some(0));
            }
        }
    }

    #[test]
    fn zero_field_weight_is_exp_of_minus_h() {
        let m = params(5, 3, 2, "5");
        let v = CayleyVolume::new(2, 1).unwrap();
        let f = BoundaryFieldAssignment::constant(
            &v,
            &FieldVector::zero(5, 3, 30),
            SpinAction::Reduced,
        );
        let c = Configuration::from_id(17, 3, 4);
        let w = weight(&c, &v, &f, &m).unwrap();
        let direct = exp_p(&-hamiltonian(&c, &v, m.j())).unwrap();
        assert!(w.equal_to_precision(&direct, 24));
    }

    #[test]
    fn symmetric_last_label_pairs_with_sum() {
        let v = CayleyVolume::new(2, 1).unwrap();
        let mut rng = rng_from_seed(8);
        let h = random_field(&mut rng, 3, 3, 1, 20);
        let f = BoundaryFieldAssignment::constant(&v, &h, SpinAction::Symmetric);
        let all_q = Configuration::new(vec![2; 4]);
        let term = f.boundary_term(&all_q, &v);
        assert!(term.equal_to_precision(&h.sum().scale(3), 18));
    }

    #[test]
    fn measures_normalize() {
        for (p, q) in [(3u64, 4u32), (3, 3), (5, 3)] {
            let m = params(p, q, 2, &p.to_string());
            let v = CayleyVolume::new(2, 1).unwrap();
            let mut rng = rng_from_seed(p);
            let h = random_field(&mut rng, p, q, 1, 30);
            let f = BoundaryFieldAssignment::constant(&v, &h, SpinAction::Reduced);
            let t = partition_and_measures(&v, &f, &m, 1_000_000).unwrap();
            let one = PadicNumber::one(p, 20);
            assert!(t.total().equal_to_precision(&one, 10), "p={p} q={q}");
        }
    }

    #[test]
    fn unit_q_gives_unit_measures() {
        let m = params(3, 4, 2, "3");
        let v = CayleyVolume::new(2, 1).unwrap();
        let f = BoundaryFieldAssignment::constant(
            &v,
            &FieldVector::zero(3, 4, 30),
            SpinAction::Reduced,
        );
        let t = partition_and_measures(&v, &f, &m, 1_000_000).unwrap();
        assert_eq!(t.partition.valuation(), Some(0));
        assert!(t.measures.iter().all(|x| x.valuation() == Some(0)));
    }

    #[test]
    fn divisible_q_gives_large_measures() {
        let m = params(3, 3, 2, "3");
        let v = CayleyVolume::new(2, 1).unwrap();
        let f = BoundaryFieldAssignment::constant(
            &v,
            &FieldVector::zero(3, 3, 30),
            SpinAction::Reduced,
        );
        let t = partition_and_measures(&v, &f, &m, 1_000_000).unwrap();
        assert!(t.partition.min_valuation() >= 1);
        assert!(t.max_measure_norm() >= PadicNorm::Power(-1));
        let prof = norm_profile(&v, &f, &m, 1_000_000).unwrap();
        assert!(prof.all_weights_units);
        assert_eq!(prof.partition_norm, t.partition.norm().unwrap());
    }

    #[test]
    fn summation_order_is_irrelevant() {
        let m = params(3, 3, 2, "3");
        let v = CayleyVolume::new(2, 1).unwrap();
        let f = BoundaryFieldAssignment::constant(
            &v,
            &FieldVector::zero(3, 3, 30),
            SpinAction::Reduced,
        );
        let t = partition_and_measures(&v, &f, &m, 1_000_000).unwrap();
        let reversed = t
            .weights
            .iter()
            .rev()
            .fold(PadicNumber::zero(3, 32), |a, w| a + w);
        assert_eq!(reversed, t.partition);
    }

    #[test]
    fn csv_has_a_row_per_configuration() {
        let m = params(5, 2, 1, "5");
        let v = CayleyVolume::new(1, 1).unwrap();
        let f = BoundaryFieldAssignment::constant(
            &v,
            &FieldVector::zero(5, 2, 30),
            SpinAction::Reduced,
        );
        let t = partition_and_measures(&v, &f, &m, 100).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 1 + 8);
        assert!(csv.starts_with("config_id,spins,weight,measure,measure_norm\n0,1 1 1,"));
    }
}
