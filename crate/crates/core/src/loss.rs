use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-instance loss. Squared error carries no ½ factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Hinge,
}

impl LossKind {
    pub fn check_label<T: Scalar>(self, y: T) -> Result<()> {
        match self {
            LossKind::Squared if y.is_finite() => Ok(()),
            LossKind::Squared => Err(Error::InvalidLabel(format!(
                "squared loss needs a finite label, got {y}"
            ))),
            LossKind::Hinge if y == T::one() || y == -T::one() => Ok(()),
            LossKind::Hinge => Err(Error::InvalidLabel(format!(
                "hinge loss needs a label in {{-1, +1}}, got {y}"
            ))),
        }
    }
}

pub fn loss<T: Scalar>(kind: LossKind, yhat: T, y: T) -> Result<T> {
    kind.check_label(y)?;
    Ok(match kind {
        LossKind::Squared => (yhat - y) * (yhat - y),
        LossKind::Hinge => (T::one() - y * yhat).max(T::zero()),
    })
}

/// Derivative of [`loss`] with respect to `yhat`; the hinge kink maps to 0.
pub fn loss_grad<T: Scalar>(kind: LossKind, yhat: T, y: T) -> Result<T> {
    kind.check_label(y)?;
    Ok(match kind {
        LossKind::Squared => T::of(2.0) * (yhat - y),
        LossKind::Hinge => {
            if T::one() - y * yhat > T::zero() {
                -y
            } else {
                T::zero()
            }
        }
    })
}
