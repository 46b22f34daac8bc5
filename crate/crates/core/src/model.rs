//! The two-sided network: `ŷ = (x P) · act(z Q)`.
//!
//! The left branch maps features through `P` (D×K) with no nonlinearity.
//! The right branch turns a semantic descriptor into a K-dimensional code
//! through `Q` (B×K) followed by ReLU or the identity. Their inner product is
//! the prediction, so every descriptor induces an ordinary linear model
//! `w* = P · act(z Q)ᵀ` over the features.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, relu_scalar, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::Relu => relu_scalar(a),
            Activation::Linear => a,
        }
    }

    /// Derivative; ReLU at exactly 0 maps to 0.
    #[inline]
    pub fn derivative<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::Relu if a > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Linear => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Structural constraints applied at initialisation and kept through training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Structure<T> {
    pub activation: Activation,
    /// When set, `P` is this matrix and is never updated.
    pub fixed_p: Option<Matrix<T>>,
    /// Binary B×K mask; zero entries of `Q` stay zero.
    pub q_mask: Option<Matrix<T>>,
}

impl<T: Scalar> Structure<T> {
    pub fn free(activation: Activation) -> Self {
        Self {
            activation,
            fixed_p: None,
            q_mask: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedModel<T> {
    p: Matrix<T>,
    q: Matrix<T>,
    activation: Activation,
    p_fixed: bool,
    q_mask: Option<Matrix<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair<T> {
    pub dp: Matrix<T>,
    pub dq: Matrix<T>,
}

impl<T: Scalar> GradientPair<T> {
    pub fn zeros_like(m: &TwoSidedModel<T>) -> Self {
        Self {
            dp: Matrix::zeros(m.d(), m.k()),
            dq: Matrix::zeros(m.b(), m.k()),
        }
    }
}

/// `K = ceil(D / ln D)`.
pub fn hidden_width(d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "hidden width needs D >= 2, got {d}"
        )));
    }
    let d = d as f64;
    Ok(((d / d.ln()).ceil() as usize).max(1))
}

impl<T: Scalar> TwoSidedModel<T> {
    /// Assembles a model from explicit parameters.
    pub fn from_parts(
        p: Matrix<T>,
        q: Matrix<T>,
        activation: Activation,
        p_fixed: bool,
        q_mask: Option<Matrix<T>>,
    ) -> Result<Self> {
        if p.cols() != q.cols() {
            return Err(Error::Shape(format!(
                "P is {}x{} but Q is {}x{}; hidden widths differ",
                p.rows(),
                p.cols(),
                q.rows(),
                q.cols()
            )));
        }
        if p.cols() == 0 {
            return Err(Error::InvalidDimension("K must be at least 1".into()));
        }
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::InvalidDimension("parameters must be finite".into()));
        }
        let mut model = Self {
            p,
            q,
            activation,
            p_fixed,
            q_mask: None,
        };
        if let Some(mask) = q_mask {
            model.set_q_mask(mask)?;
        }
        Ok(model)
    }

    /// Random initialisation: free entries uniform in ±1/√fan-in.
    pub fn init(d: usize, b: usize, k: usize, seed: u64, structure: &Structure<T>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension("K must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize, fan_in: usize| {
            let r = 1.0 / (fan_in.max(1) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| T::of(rng.random_range(-r..=r)))
                .collect();
            Matrix::new(rows, cols, data).expect("sized above")
        };
        let p_random = draw(d, k, d);
        let q = draw(b, k, b);
        let (p, p_fixed) = match &structure.fixed_p {
            Some(fixed) => {
                if fixed.shape() != (d, k) {
                    return Err(Error::Shape(format!(
                        "fixed P is {}x{}, model needs {d}x{k}",
                        fixed.rows(),
                        fixed.cols()
                    )));
                }
                (fixed.clone(), true)
            }
            None => (p_random, false),
        };
        Self::from_parts(p, q, structure.activation, p_fixed, structure.q_mask.clone())
    }

    pub fn p(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn q_mask(&self) -> Option<&Matrix<T>> {
        self.q_mask.as_ref()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn p_fixed(&self) -> bool {
        self.p_fixed
    }

    pub fn d(&self) -> usize {
        self.p.rows()
    }

    pub fn b(&self) -> usize {
        self.q.rows()
    }

    pub fn k(&self) -> usize {
        self.p.cols()
    }

    fn set_q_mask(&mut self, mask: Matrix<T>) -> Result<()> {
        if mask.shape() != self.q.shape() {
            return Err(Error::Shape(format!(
                "q_mask is {}x{}, Q is {}x{}",
                mask.rows(),
                mask.cols(),
                self.q.rows(),
                self.q.cols()
            )));
        }
        if mask
            .as_slice()
            .iter()
            .any(|&v| v != T::zero() && v != T::one())
        {
            return Err(Error::Shape("q_mask must be binary".into()));
        }
        for (q, &m) in self.q.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            if m == T::zero() {
                *q = T::zero();
            }
        }
        self.q_mask = Some(mask);
        Ok(())
    }

    fn check_x(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::Shape(format!(
                "feature vector has length {}, model expects D = {}",
                x.len(),
                self.d()
            )));
        }
        Ok(())
    }

    fn check_z(&self, z: &[T]) -> Result<()> {
        if z.len() != self.b() {
            return Err(Error::Shape(format!(
                "descriptor has length {}, model expects B = {}",
                z.len(),
                self.b()
            )));
        }
        Ok(())
    }

    /// Feature representation `x P`.
    pub fn represent(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_x(x)?;
        self.p.vecmat(x)
    }

    /// Pre-activation `z Q`.
    pub fn preactivation(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_z(z)?;
        self.q.vecmat(z)
    }

    /// Constructed model code `act(z Q)`.
    pub fn construct(&self, z: &[T]) -> Result<Vec<T>> {
        Ok(self
            .preactivation(z)?
            .into_iter()
            .map(|a| self.activation.apply(a))
            .collect())
    }

    pub fn forward(&self, x: &[T], z: &[T]) -> Result<T> {
        let h = self.represent(x)?;
        let g = self.construct(z)?;
        Ok(dot(&h, &g))
    }

    /// Gradient of `upstream · ŷ` with respect to `P` and `Q`.
    pub fn backward(&self, x: &[T], z: &[T], upstream: T) -> Result<GradientPair<T>> {
        let mut grad = GradientPair::zeros_like(self);
        self.accumulate_backward(x, z, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Adds the gradient of `upstream · ŷ` into `grad`, honouring the
    /// structural constraints.
    pub fn accumulate_backward(
        &self,
        x: &[T],
        z: &[T],
        upstream: T,
        grad: &mut GradientPair<T>,
    ) -> Result<()> {
        let h = self.represent(x)?;
        let a = self.preactivation(z)?;
        self.accumulate_backward_cached(x, z, &h, &a, upstream, grad);
        Ok(())
    }

    /// Backward pass given precomputed `h = xP` and `a = zQ`.
    pub(crate) fn accumulate_backward_cached(
        &self,
        x: &[T],
        z: &[T],
        h: &[T],
        a: &[T],
        upstream: T,
        grad: &mut GradientPair<T>,
    ) {
        if upstream == T::zero() {
            return;
        }
        let k = self.k();
        if !self.p_fixed {
            let g: Vec<T> = a.iter().map(|&v| self.activation.apply(v) * upstream).collect();
            for (d, &xd) in x.iter().enumerate() {
                if xd == T::zero() {
                    continue;
                }
                for (o, &gk) in grad.dp.row_mut(d).iter_mut().zip(&g) {
                    *o += xd * gk;
                }
            }
        }
        let delta: Vec<T> = h
            .iter()
            .zip(a)
            .map(|(&hk, &ak)| hk * self.activation.derivative(ak) * upstream)
            .collect();
        for (b, &zb) in z.iter().enumerate() {
            if zb == T::zero() {
                continue;
            }
            let row = grad.dq.row_mut(b);
            match &self.q_mask {
                Some(mask) => {
                    let mrow = &mask.as_slice()[b * k..(b + 1) * k];
                    for ((o, &dk), &m) in row.iter_mut().zip(&delta).zip(mrow) {
                        *o += zb * dk * m;
                    }
                }
                None => {
                    for (o, &dk) in row.iter_mut().zip(&delta) {
                        *o += zb * dk;
                    }
                }
            }
        }
    }

    /// Linear model `w* = P · act(zQ)ᵀ` induced by descriptor `z`.
    pub fn effective_weights(&self, z: &[T]) -> Result<Vec<T>> {
        let g = self.construct(z)?;
        self.p.matvec(&g)
    }

    /// Applies `P -= step_p`, `Q -= step_q`, respecting fixed and masked entries.
    pub fn apply_update(&mut self, step: &GradientPair<T>) -> Result<()> {
        if !self.p_fixed {
            self.p.axpy(-T::one(), &step.dp)?;
        }
        self.q.axpy(-T::one(), &step.dq)?;
        self.enforce_mask();
        Ok(())
    }

    pub(crate) fn enforce_mask(&mut self) {
        if let Some(mask) = &self.q_mask {
            for (q, &m) in self.q.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                if m == T::zero() {
                    *q = T::zero();
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }
}
