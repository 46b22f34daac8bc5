use crate::data::{Dataset, Group};
use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::loss::LossKind;
use crate::model::{Activation, Structure};
use crate::optim::{train, HiddenWidth, RegKind, RegSpec, TrainConfig};
use crate::scalar::Scalar;

/// Ridge regression `argmin ‖X w − y‖² + λ‖w‖²` via the normal equations.
pub fn ridge<T: Scalar>(xs: &[&[T]], ys: &[T], lambda: f64) -> Result<Vec<T>> {
    let d = xs.first().map_or(0, |x| x.len());
    if xs.is_empty() || d == 0 {
        return Err(Error::EmptyDataset("ridge regression with no data".into()));
    }
    let mut gram = Matrix::zeros(d, d);
    let mut rhs = Matrix::zeros(d, 1);
    for (x, &y) in xs.iter().zip(ys) {
        for i in 0..d {
            rhs[(i, 0)] += x[i] * y;
            let row = gram.row_mut(i);
            for (j, g) in row.iter_mut().enumerate() {
                *g += x[i] * x[j];
            }
        }
    }
    for i in 0..d {
        gram[(i, i)] += T::of(lambda);
    }
    solve_spd(&gram, &rhs)
        .map(Matrix::into_vec)
        .map_err(|e| match e {
            Error::Singular(msg) if lambda == 0.0 => Error::Singular(format!(
                "{msg}; the unregularised system is rank deficient, use lambda > 0"
            )),
            other => other,
        })
}

/// ℓ2-regularised hinge on one problem, trained by SGD on a
/// single-descriptor network with `P = I`, which is exactly a linear model.
fn hinge_fit<T: Scalar>(
    data: &Dataset<T>,
    idx: &[usize],
    lambda: f64,
    base: &TrainConfig,
) -> Result<Vec<T>> {
    let group = Group {
        name: "pooled".into(),
        descriptor: Descriptor::raw(vec![T::one()]),
    };
    let mut one = Dataset::new(data.dim(), data.kind(), vec![group])?;
    for &i in idx {
        let inst = data.read(i);
        one.push(inst.x.clone(), inst.y, 0)?;
    }
    let config = TrainConfig {
        loss: LossKind::Hinge,
        k: HiddenWidth::Fixed(data.dim()),
        reg_p: RegSpec::none(),
        reg_q: RegSpec::new(RegKind::Frobenius, lambda),
        ..base.clone()
    };
    let structure = Structure {
        activation: Activation::Linear,
        fixed_p: Some(Matrix::identity(data.dim())),
        q_mask: None,
    };
    let trained = train(&one, &config, &structure)?;
    Ok(trained.model.q().row(0).to_vec())
}

fn fit_one<T: Scalar>(data: &Dataset<T>, idx: &[usize], loss: LossKind, lambda: f64, base: &TrainConfig) -> Result<Vec<T>> {
    match loss {
        LossKind::Squared => {
            let insts: Vec<_> = idx.iter().map(|&i| data.read(i)).collect();
            let xs: Vec<&[T]> = insts.iter().map(|i| i.x.as_slice()).collect();
            let ys: Vec<T> = insts.iter().map(|i| i.y).collect();
            ridge(&xs, &ys, lambda)
        }
        LossKind::Hinge => hinge_fit(data, idx, lambda, base),
    }
}

/// Independent linear model per group, in group order.
///
/// Groups with no instances are an error; subset the data first.
pub fn stl_fit<T: Scalar>(
    data: &Dataset<T>,
    loss: LossKind,
    lambda: f64,
    base: &TrainConfig,
) -> Result<Vec<Vec<T>>> {
    (0..data.groups().len())
        .map(|g| {
            let idx = data.indices_of_group(g);
            if idx.is_empty() {
                return Err(Error::DegenerateDomain(format!(
                    "group `{}` has no instances",
                    data.groups()[g].name
                )));
            }
            fit_one(data, &idx, loss, lambda, base)
        })
        .collect()
}

/// One linear model on all instances pooled together (blind transfer).
pub fn stl_fit_pooled<T: Scalar>(
    data: &Dataset<T>,
    loss: LossKind,
    lambda: f64,
    base: &TrainConfig,
) -> Result<Vec<T>> {
    let idx: Vec<usize> = (0..data.len()).collect();
    fit_one(data, &idx, loss, lambda, base)
}
