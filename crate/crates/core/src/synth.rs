//! Synthetic worlds with planted ground truth.
//!
//! * `bilinear_planted`: a random two-sided model generates the labels.
//! * `additive_effects`: each domain's linear model is a shared vector plus
//!   one offset per factor level.
//! * `attribute_classes`: each class is a spherical Gaussian whose mean, and
//!   hence whose optimal linear scorer, is a fixed linear image of a ±1
//!   attribute vector; used for one-vs-rest and zero-shot checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ClassDataset, Dataset, Group, TaskKind};
use crate::descriptor::{Descriptor, DescriptorSchema, EncodingMode, Factor};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{Activation, TwoSidedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WorldKind {
    #[default]
    BilinearPlanted,
    AdditiveEffects,
    AttributeClasses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub world: WorldKind,
    /// Feature dimension D.
    pub d: usize,
    /// Factor cardinalities of the domain grid.
    pub factors: Vec<usize>,
    /// Hidden width of the planted bilinear model.
    pub k_true: usize,
    pub noise: f64,
    pub per_domain: usize,
    pub seed: u64,
    /// Nonlinearity of the planted bilinear model.
    pub activation: Activation,
    /// Encoding of the returned descriptors.
    pub encoding: EncodingMode,
    pub shared_bias: bool,
    /// Draw the planted `Q` from a half-normal, which keeps every grid
    /// descriptor in the active region of the nonlinearity. With a
    /// zero-mean `Q` some cells are clipped to a zero model, and a clipped
    /// cell cannot be inferred from the other cells of its row and column.
    pub nonnegative_q: bool,
    /// attribute_classes only.
    pub classes: usize,
    pub attribute_dim: usize,
    pub per_class: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            world: WorldKind::BilinearPlanted,
            d: 10,
            factors: vec![3, 3],
            k_true: 3,
            noise: 0.1,
            per_domain: 100,
            seed: 0,
            activation: Activation::Relu,
            encoding: EncodingMode::Distributed,
            shared_bias: false,
            nonnegative_q: true,
            classes: 10,
            attribute_dim: 10,
            per_class: 60,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic spec: {m}")));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad("noise must be a nonnegative number");
        }
        match self.world {
            WorldKind::AttributeClasses => {
                if self.classes < 2 || self.attribute_dim == 0 || self.per_class == 0 {
                    return bad("attribute_classes needs classes >= 2, attribute_dim >= 1, per_class >= 1");
                }
                if self.attribute_dim < 63 && self.classes as u64 > (1u64 << self.attribute_dim) {
                    return bad("more classes than distinct attribute vectors");
                }
            }
            _ => {
                if self.factors.is_empty() || self.factors.contains(&0) {
                    return bad("factors must be a nonempty list of positive cardinalities");
                }
                if self.k_true == 0 || self.per_domain == 0 {
                    return bad("k_true and per_domain must be at least 1");
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<DescriptorSchema> {
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, &c)| Factor::new(format!("f{i}"), c))
            .collect();
        DescriptorSchema::new(factors, self.encoding, self.shared_bias)
    }
}

/// Ground truth of a regression world.
#[derive(Debug, Clone)]
pub enum Oracle {
    Bilinear {
        /// Planted model over the world's own distributed encoding
        /// (with bias iff `shared_bias` is set).
        model: TwoSidedModel<f64>,
        schema: DescriptorSchema,
    },
    Additive {
        shared: Vec<f64>,
        /// One `p_f × D` offset table per factor.
        offsets: Vec<Matrix<f64>>,
    },
}

impl Oracle {
    /// The true linear model of the domain at `levels`.
    pub fn weights(&self, levels: &[usize]) -> Result<Vec<f64>> {
        match self {
            Oracle::Bilinear { model, schema } => {
                let z: Descriptor<f64> = schema.encode(levels)?;
                model.effective_weights(&z.encoded)
            }
            Oracle::Additive { shared, offsets } => {
                let mut w = shared.clone();
                for (table, &l) in offsets.iter().zip(levels) {
                    for (wi, &o) in w.iter_mut().zip(table.row(l)) {
                        *wi += o;
                    }
                }
                Ok(w)
            }
        }
    }

    pub fn predict(&self, x: &[f64], levels: &[usize]) -> Result<f64> {
        Ok(dot(x, &self.weights(levels)?))
    }
}

#[derive(Debug, Clone)]
pub struct RegressionWorld {
    pub data: Dataset<f64>,
    pub schema: DescriptorSchema,
    pub oracle: Oracle,
}

#[derive(Debug, Clone)]
pub struct ClassWorld {
    pub data: ClassDataset<f64>,
    /// ±1 attribute vector per class.
    pub attributes: Vec<Vec<f64>>,
    /// `D × attribute_dim` map from attributes to class means.
    pub map: Matrix<f64>,
}

impl ClassWorld {
    pub fn descriptors(&self) -> Vec<Descriptor<f64>> {
        self.attributes.iter().cloned().map(Descriptor::raw).collect()
    }

    pub fn class_mean(&self, c: usize) -> Vec<f64> {
        self.map.matvec(&self.attributes[c]).expect("attribute_dim columns")
    }
}

#[derive(Debug, Clone)]
pub enum World {
    Regression(RegressionWorld),
    Classes(ClassWorld),
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_matrix(rows: usize, cols: usize, sd: f64, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let data = (0..rows * cols).map(|_| sd * normal(rng)).collect();
    Matrix::new(rows, cols, data).expect("sized")
}

pub fn synth_generate(spec: &SyntheticSpec) -> Result<World> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.world {
        WorldKind::BilinearPlanted => {
            let truth_schema = spec
                .schema()?
                .with_encoding(EncodingMode::Distributed, spec.shared_bias);
            let b = truth_schema.encoded_len();
            let f = spec.factors.len() + usize::from(spec.shared_bias);
            let p = normal_matrix(spec.d, spec.k_true, 1.0 / (spec.d as f64).sqrt(), &mut rng);
            let mut q = normal_matrix(b, spec.k_true, 1.0 / ((f * spec.k_true) as f64).sqrt(), &mut rng);
            if spec.nonnegative_q {
                q = q.map(f64::abs);
            }
            let model = TwoSidedModel::from_parts(p, q, spec.activation, false, None)?;
            let oracle = Oracle::Bilinear {
                model,
                schema: truth_schema,
            };
            regression_world(spec, oracle, &mut rng).map(World::Regression)
        }
        WorldKind::AdditiveEffects => {
            let sd = 1.0 / (spec.d as f64).sqrt();
            let shared = (0..spec.d).map(|_| sd * normal(&mut rng)).collect();
            let offsets = spec
                .factors
                .iter()
                .map(|&p| normal_matrix(p, spec.d, sd, &mut rng))
                .collect();
            regression_world(spec, Oracle::Additive { shared, offsets }, &mut rng).map(World::Regression)
        }
        WorldKind::AttributeClasses => class_world(spec, &mut rng).map(World::Classes),
    }
}

/// Groups in lexicographic order of level combination, instances grouped
/// by domain; `x ~ N(0, I)`, `y = x · w_domain + noise`.
fn regression_world(spec: &SyntheticSpec, oracle: Oracle, rng: &mut ChaCha8Rng) -> Result<RegressionWorld> {
    let schema = spec.schema()?;
    let m = schema.combinations();
    let groups: Vec<Group<f64>> = (0..m)
        .map(|g| {
            let levels = schema.levels_of(g);
            let name = levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-");
            schema.encode(&levels).map(|descriptor| Group { name, descriptor })
        })
        .collect::<Result<_>>()?;
    let mut data = Dataset::new(spec.d, TaskKind::Regression, groups)?;
    for g in 0..m {
        let w = oracle.weights(&schema.levels_of(g))?;
        for _ in 0..spec.per_domain {
            let x: Vec<f64> = (0..spec.d).map(|_| normal(rng)).collect();
            let y = dot(&x, &w) + spec.noise * normal(rng);
            data.push(x, y, g)?;
        }
    }
    Ok(RegressionWorld { data, schema, oracle })
}

fn class_world(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<ClassWorld> {
    let mut attributes: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    while attributes.len() < spec.classes {
        let a: Vec<f64> = (0..spec.attribute_dim)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        if !attributes.contains(&a) {
            attributes.push(a);
        }
    }
    let map = normal_matrix(spec.d, spec.attribute_dim, 1.0 / (spec.attribute_dim as f64).sqrt(), rng);
    let names = (0..spec.classes).map(|c| format!("class{c}")).collect();
    let mut data = ClassDataset::new(spec.d, names);
    for (c, a) in attributes.iter().enumerate() {
        let mean = map.matvec(a)?;
        for _ in 0..spec.per_class {
            let x = mean.iter().map(|&m| m + spec.noise * normal(rng)).collect();
            data.push(x, c)?;
        }
    }
    Ok(ClassWorld { data, attributes, map })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regression(spec: &SyntheticSpec) -> RegressionWorld {
        match synth_generate(spec).unwrap() {
            World::Regression(w) => w,
            World::Classes(_) => unreachable!(),
        }
    }

    #[test]
    fn noiseless_oracle_is_exact() {
        for world in [WorldKind::BilinearPlanted, WorldKind::AdditiveEffects] {
            let spec = SyntheticSpec { world, noise: 0.0, per_domain: 20, ..Default::default() };
            let w = regression(&spec);
            for inst in w.data.instances() {
                let levels = &w.data.groups()[inst.group].descriptor.levels;
                let yhat = w.oracle.predict(&inst.x, levels).unwrap();
                assert!((yhat - inst.y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_rmse_matches_noise_level() {
        let spec = SyntheticSpec {
            noise: 0.3,
            factors: vec![2, 2],
            per_domain: 2500,
            ..Default::default()
        };
        let w = regression(&spec);
        assert_eq!(w.data.len(), 10_000);
        let sse: f64 = w
            .data
            .instances()
            .iter()
            .map(|i| {
                let levels = &w.data.groups()[i.group].descriptor.levels;
                (w.oracle.predict(&i.x, levels).unwrap() - i.y).powi(2)
            })
            .sum();
        let rmse = (sse / w.data.len() as f64).sqrt();
        assert!((rmse - 0.3).abs() < 0.03, "rmse {rmse}");
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec { per_domain: 5, ..Default::default() };
        assert_eq!(regression(&spec).data.instances(), regression(&spec).data.instances());
        let cspec = SyntheticSpec { world: WorldKind::AttributeClasses, per_class: 3, ..Default::default() };
        let (a, b) = match (synth_generate(&cspec).unwrap(), synth_generate(&cspec).unwrap()) {
            (World::Classes(a), World::Classes(b)) => (a, b),
            _ => unreachable!(),
        };
        assert_eq!(a.data, b.data);
        assert_eq!(a.attributes, b.attributes);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SyntheticSpec { d: 0, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { noise: -1.0, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { factors: vec![2, 0], ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec {
            world: WorldKind::AttributeClasses,
            classes: 5,
            attribute_dim: 2,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
