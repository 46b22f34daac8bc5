//! Mini-batch SGD on the per-domain averaged empirical risk, with optional
//! structural regularisers on either side of the network.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_fro, norm_l1, norm_l21, Matrix};
use crate::loss::{loss, loss_grad, LossKind};
use crate::model::{hidden_width, GradientPair, Structure, TwoSidedModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RegKind {
    #[default]
    None,
    Frobenius,
    L1,
    L21,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RegSpec {
    pub kind: RegKind,
    pub strength: f64,
}

impl RegSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(kind: RegKind, strength: f64) -> Self {
        Self { kind, strength }
    }

    fn is_active(&self) -> bool {
        self.kind != RegKind::None && self.strength != 0.0
    }
}

/// `λ · norm(w)`.
pub fn reg_value<T: Scalar>(spec: &RegSpec, w: &Matrix<T>) -> T {
    if !spec.is_active() {
        return T::zero();
    }
    let norm = match spec.kind {
        RegKind::None => T::zero(),
        RegKind::Frobenius => norm_fro(w),
        RegKind::L1 => norm_l1(w),
        RegKind::L21 => norm_l21(w),
    };
    T::of(spec.strength) * norm
}

/// A subgradient of `λ · norm(w)`; zero at every kink.
pub fn reg_subgrad<T: Scalar>(spec: &RegSpec, w: &Matrix<T>) -> Matrix<T> {
    if !spec.is_active() {
        return Matrix::zeros(w.rows(), w.cols());
    }
    let lambda = T::of(spec.strength);
    match spec.kind {
        RegKind::None => Matrix::zeros(w.rows(), w.cols()),
        RegKind::Frobenius => {
            let n = norm_fro(w);
            if n == T::zero() {
                Matrix::zeros(w.rows(), w.cols())
            } else {
                w.scale(lambda / n)
            }
        }
        RegKind::L1 => w.map(|v| {
            if v > T::zero() {
                lambda
            } else if v < T::zero() {
                -lambda
            } else {
                T::zero()
            }
        }),
        RegKind::L21 => {
            let mut g = Matrix::zeros(w.rows(), w.cols());
            for r in 0..w.rows() {
                let n = norm2(w.row(r));
                if n > T::zero() {
                    for (o, &v) in g.row_mut(r).iter_mut().zip(w.row(r)) {
                        *o = lambda * v / n;
                    }
                }
            }
            g
        }
    }
}

/// Penalty on `Q`, evaluated on `Q' = Qᵀ` whose rows are hidden units.
///
/// With `P = I` the hidden units are the features, so an ℓ2,1 penalty here
/// selects features jointly across domains.
fn reg_value_q<T: Scalar>(spec: &RegSpec, q: &Matrix<T>) -> T {
    match spec.kind {
        RegKind::L21 => reg_value(spec, &q.transpose()),
        _ => reg_value(spec, q),
    }
}

fn reg_subgrad_q<T: Scalar>(spec: &RegSpec, q: &Matrix<T>) -> Matrix<T> {
    match spec.kind {
        RegKind::L21 => reg_subgrad(spec, &q.transpose()).transpose(),
        _ => reg_subgrad(spec, q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainWeighting {
    #[default]
    PerDomainMean,
    PerInstanceMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum HiddenWidth {
    #[default]
    Auto,
    Fixed(usize),
}

impl HiddenWidth {
    pub fn resolve(self, d: usize) -> Result<usize> {
        match self {
            HiddenWidth::Auto => hidden_width(d),
            HiddenWidth::Fixed(0) => Err(Error::InvalidDimension("K must be at least 1".into())),
            HiddenWidth::Fixed(k) => Ok(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossKind,
    pub k: HiddenWidth,
    pub reg_p: RegSpec,
    pub reg_q: RegSpec,
    pub domain_weighting: DomainWeighting,
    pub momentum: f64,
    /// Multiplicative learning-rate decay applied every `lr_decay_every` epochs.
    pub lr_decay: f64,
    pub lr_decay_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            loss: LossKind::Squared,
            k: HiddenWidth::Auto,
            reg_p: RegSpec::none(),
            reg_q: RegSpec::none(),
            domain_weighting: DomainWeighting::PerDomainMean,
            momentum: 0.0,
            lr_decay: 0.5,
            lr_decay_every: 80,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.lr_decay > 0.0) {
            return Err(Error::Config("lr_decay must be positive".into()));
        }
        for (side, r) in [("reg_p", &self.reg_p), ("reg_q", &self.reg_q)] {
            if !(r.strength >= 0.0) || !r.strength.is_finite() {
                return Err(Error::Config(format!(
                    "{side} strength must be a nonnegative number, got {}",
                    r.strength
                )));
            }
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let steps = if self.lr_decay_every == 0 {
            0
        } else {
            epoch / self.lr_decay_every
        };
        self.learning_rate * self.lr_decay.powi(steps as i32)
    }
}

/// Weight of each instance's loss in the objective.
fn instance_weights<T: Scalar>(data: &Dataset<T>, weighting: DomainWeighting) -> Result<Vec<T>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("objective over an empty dataset".into()));
    }
    let sizes = data.group_sizes();
    if let Some(g) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::DegenerateDomain(format!(
            "group `{}` has no instances",
            data.groups()[g].name
        )));
    }
    let m = T::of(sizes.len() as f64);
    let n = T::of(data.len() as f64);
    Ok(data
        .instances()
        .iter()
        .map(|inst| match weighting {
            DomainWeighting::PerDomainMean => T::one() / (m * T::of(sizes[inst.group] as f64)),
            DomainWeighting::PerInstanceMean => T::one() / n,
        })
        .collect())
}

/// Empirical risk plus regularisers.
pub fn objective<T: Scalar>(
    model: &TwoSidedModel<T>,
    data: &Dataset<T>,
    config: &TrainConfig,
) -> Result<T> {
    let weights = instance_weights(data, config.domain_weighting)?;
    let codes = group_codes(model, data)?;
    let mut total = T::zero();
    for (inst, &w) in data.instances().iter().zip(&weights) {
        let h = model.represent(&inst.x)?;
        let yhat = crate::linalg::dot(&h, &codes[inst.group]);
        total += w * loss(config.loss, yhat, inst.y)?;
    }
    Ok(total + regularization(model, config))
}

fn regularization<T: Scalar>(model: &TwoSidedModel<T>, config: &TrainConfig) -> T {
    let p = if model.p_fixed() {
        T::zero()
    } else {
        reg_value(&config.reg_p, model.p())
    };
    p + reg_value_q(&config.reg_q, model.q())
}

fn group_codes<T: Scalar>(model: &TwoSidedModel<T>, data: &Dataset<T>) -> Result<Vec<Vec<T>>> {
    data.groups()
        .iter()
        .map(|g| model.construct(&g.descriptor.encoded))
        .collect()
}

/// A trained model with its per-epoch objective.
#[derive(Debug, Clone)]
pub struct Trained<T> {
    pub model: TwoSidedModel<T>,
    pub curve: Vec<(usize, f64)>,
    pub final_objective: f64,
}

/// Resolves the hidden width from the structure, falling back to the config.
pub fn resolve_k<T: Scalar>(d: usize, config: &TrainConfig, structure: &Structure<T>) -> Result<usize> {
    if let Some(p) = &structure.fixed_p {
        return Ok(p.cols());
    }
    if let Some(mask) = &structure.q_mask {
        return Ok(mask.cols());
    }
    config.k.resolve(d)
}

pub fn train<T: Scalar>(
    data: &Dataset<T>,
    config: &TrainConfig,
    structure: &Structure<T>,
) -> Result<Trained<T>> {
    config.validate()?;
    let k = resolve_k(data.dim(), config, structure)?;
    let model = TwoSidedModel::init(data.dim(), data.descriptor_len(), k, config.seed, structure)?;
    train_from(model, data, config)
}

/// Runs SGD starting from `model`.
pub fn train_from<T: Scalar>(
    mut model: TwoSidedModel<T>,
    data: &Dataset<T>,
    config: &TrainConfig,
) -> Result<Trained<T>> {
    config.validate()?;
    for inst in data.instances() {
        config.loss.check_label(inst.y)?;
    }
    let weights = instance_weights(data, config.domain_weighting)?;
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let momentum = T::of(config.momentum);
    let mut velocity = GradientPair::zeros_like(&model);
    let mut grad = GradientPair::zeros_like(&model);
    let mut curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = T::of(config.learning_rate_at(epoch));
        for batch in order.chunks(config.batch_size) {
            grad.dp.as_mut_slice().fill(T::zero());
            grad.dq.as_mut_slice().fill(T::zero());
            let scale = T::of(n as f64 / batch.len() as f64);
            for &i in batch {
                let inst = data.read(i);
                let z = data.z(inst.group);
                let h = model.represent(&inst.x)?;
                let a = model.preactivation(z)?;
                let yhat: T = h
                    .iter()
                    .zip(&a)
                    .map(|(&hk, &ak)| hk * model.activation().apply(ak))
                    .sum();
                let upstream = scale * weights[i] * loss_grad(config.loss, yhat, inst.y)?;
                model.accumulate_backward_cached(&inst.x, z, &h, &a, upstream, &mut grad);
            }
            if !model.p_fixed() {
                grad.dp.axpy(T::one(), &reg_subgrad(&config.reg_p, model.p()))?;
            }
            grad.dq.axpy(T::one(), &reg_subgrad_q(&config.reg_q, model.q()))?;

            for (v, &g) in velocity.dp.as_mut_slice().iter_mut().zip(grad.dp.as_slice()) {
                *v = momentum * *v + g;
            }
            for (v, &g) in velocity.dq.as_mut_slice().iter_mut().zip(grad.dq.as_slice()) {
                *v = momentum * *v + g;
            }
            let step = GradientPair {
                dp: velocity.dp.scale(lr),
                dq: velocity.dq.scale(lr),
            };
            model.apply_update(&step)?;
        }
        let obj = objective(&model, data, config)?.to_f64_lossy();
        if !obj.is_finite() || !model.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        curve.push((epoch, obj));
    }
    let final_objective = curve.last().map_or(f64::NAN, |&(_, o)| o);
    Ok(Trained {
        model,
        curve,
        final_objective,
    })
}
