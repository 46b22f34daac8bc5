//! Classic multi-task / multi-domain methods expressed as fixed structures
//! of the two-sided network, plus the single-task and tensor-completion
//! baselines used for comparison.

mod stl;
mod tensor;

pub use stl::{ridge, stl_fit, stl_fit_pooled};
pub use tensor::{select_rank, tensor_complete, tensor_store, Completion, ModelTensor};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::descriptor::DescriptorSchema;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{hidden_width, Activation, Structure};
use crate::optim::{HiddenWidth, RegKind, RegSpec, TrainConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BaselineName {
    Stl,
    Rmtl,
    Feda,
    Mtfl,
    Gomtl,
}

impl BaselineName {
    pub const ALL: [BaselineName; 5] = [
        BaselineName::Stl,
        BaselineName::Rmtl,
        BaselineName::Feda,
        BaselineName::Mtfl,
        BaselineName::Gomtl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineName::Stl => "STL",
            BaselineName::Rmtl => "RMTL",
            BaselineName::Feda => "FEDA",
            BaselineName::Mtfl => "MTFL",
            BaselineName::Gomtl => "GOMTL",
        }
    }
}

impl fmt::Display for BaselineName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "STL" | "LR" => Ok(BaselineName::Stl),
            "RMTL" => Ok(BaselineName::Rmtl),
            "FEDA" => Ok(BaselineName::Feda),
            "MTFL" => Ok(BaselineName::Mtfl),
            "GOMTL" => Ok(BaselineName::Gomtl),
            _ => Err(Error::UnknownBaseline(s.to_string())),
        }
    }
}

/// Default penalty strength for the norm-regularised reconstructions.
pub const DEFAULT_BASELINE_STRENGTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSpec<T> {
    pub name: BaselineName,
    /// Atomic schema over the M domains; every reconstruction ignores any
    /// richer descriptor the data carries.
    pub schema: DescriptorSchema,
    pub structure: Structure<T>,
    pub reg_p: RegSpec,
    pub reg_q: RegSpec,
    pub k: usize,
}

impl<T: Scalar> BaselineSpec<T> {
    /// Replaces each group's descriptor with its atomic encoding.
    pub fn encode_dataset(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        let m = self.schema.combinations();
        if data.groups().len() != m {
            return Err(Error::Shape(format!(
                "{} baseline was built for {m} domains, data has {}",
                self.name,
                data.groups().len()
            )));
        }
        let rows: Vec<_> = (0..m)
            .map(|g| self.schema.encode(&[g]))
            .collect::<Result<_>>()?;
        data.with_descriptors(|g, _| rows[g].clone())
    }

    /// Training config with this baseline's regularisers and width.
    pub fn train_config(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            reg_p: self.reg_p,
            reg_q: self.reg_q,
            k: HiddenWidth::Fixed(self.k),
            ..base.clone()
        }
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        if self.reg_p.kind != RegKind::None {
            self.reg_p.strength = strength;
        }
        if self.reg_q.kind != RegKind::None {
            self.reg_q.strength = strength;
        }
        self
    }
}

/// Row mask of FEDA's block structure.
///
/// Hidden units come in M+1 blocks of D: block 0 is the shared model `w0`,
/// block j ≥ 1 is domain j's private model. The bias row (index M) may only
/// write block 0 and domain row i only block i+1.
fn feda_mask<T: Scalar>(m: usize, d: usize) -> Matrix<T> {
    let mut mask = Matrix::zeros(m + 1, (m + 1) * d);
    for c in 0..d {
        mask[(m, c)] = T::one();
    }
    for i in 0..m {
        for c in 0..d {
            mask[(i, (i + 1) * d + c)] = T::one();
        }
    }
    mask
}

pub fn make_baseline<T: Scalar>(name: BaselineName, m: usize, d: usize) -> Result<BaselineSpec<T>> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidDimension(format!(
            "baseline needs M >= 1 and D >= 1, got M = {m}, D = {d}"
        )));
    }
    let fixed_identity = || Structure {
        activation: Activation::Linear,
        fixed_p: Some(Matrix::identity(d)),
        q_mask: None,
    };
    let s = DEFAULT_BASELINE_STRENGTH;
    Ok(match name {
        BaselineName::Stl => BaselineSpec {
            name,
            schema: DescriptorSchema::atomic("domain", m, false)?,
            structure: fixed_identity(),
            reg_p: RegSpec::none(),
            reg_q: RegSpec::none(),
            k: d,
        },
        BaselineName::Rmtl => BaselineSpec {
            name,
            schema: DescriptorSchema::atomic("domain", m, true)?,
            structure: fixed_identity(),
            reg_p: RegSpec::none(),
            reg_q: RegSpec::none(),
            k: d,
        },
        BaselineName::Feda => {
            let a = Matrix::filled(1, m + 1, T::one());
            let p = a.kron(&Matrix::identity(d));
            BaselineSpec {
                name,
                schema: DescriptorSchema::atomic("domain", m, true)?,
                structure: Structure {
                    activation: Activation::Linear,
                    fixed_p: Some(p),
                    q_mask: Some(feda_mask(m, d)),
                },
                reg_p: RegSpec::none(),
                reg_q: RegSpec::none(),
                k: (m + 1) * d,
            }
        }
        BaselineName::Mtfl => BaselineSpec {
            name,
            schema: DescriptorSchema::atomic("domain", m, false)?,
            structure: fixed_identity(),
            reg_p: RegSpec::none(),
            reg_q: RegSpec::new(RegKind::L21, s),
            k: d,
        },
        BaselineName::Gomtl => {
            let k = if d >= 2 { hidden_width(d)? } else { 1 };
            BaselineSpec {
                name,
                schema: DescriptorSchema::atomic("domain", m, false)?,
                structure: Structure::free(Activation::Linear),
                reg_p: RegSpec::new(RegKind::Frobenius, s),
                reg_q: RegSpec::new(RegKind::L1, s),
                k,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmtl_schema_matrix() {
        let spec = make_baseline::<f64>(BaselineName::Rmtl, 3, 4).unwrap();
        assert_eq!(
            spec.schema.schema_matrix::<f64>(),
            Matrix::from_rows(&[
                [1.0, 0.0, 0.0, 1.0],
                [0.0, 1.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 1.0]
            ])
            .unwrap()
        );
        assert_eq!(spec.structure.fixed_p, Some(Matrix::identity(4)));
    }

    #[test]
    fn feda_replicates_features() {
        let spec = make_baseline::<f64>(BaselineName::Feda, 3, 2).unwrap();
        let p = spec.structure.fixed_p.as_ref().unwrap();
        assert_eq!(p.shape(), (2, 8));
        let xp = p.vecmat(&[5.0, 7.0]).unwrap();
        assert_eq!(xp, vec![5.0, 7.0, 5.0, 7.0, 5.0, 7.0, 5.0, 7.0]);
        let mask = spec.structure.q_mask.as_ref().unwrap();
        // bias row writes the shared block only
        assert_eq!(mask.row(3), &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        // domain 1 writes its private block only
        assert_eq!(mask.row(1), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn mtfl_and_gomtl_structure() {
        let mtfl = make_baseline::<f64>(BaselineName::Mtfl, 3, 5).unwrap();
        assert_eq!(mtfl.schema.schema_matrix::<f64>(), Matrix::identity(3));
        assert_eq!(mtfl.reg_q.kind, RegKind::L21);
        let go = make_baseline::<f64>(BaselineName::Gomtl, 3, 23).unwrap();
        assert_eq!(go.reg_p.kind, RegKind::Frobenius);
        assert_eq!(go.reg_q.kind, RegKind::L1);
        assert_eq!(go.k, 8);
        assert!(go.structure.fixed_p.is_none());
        for name in BaselineName::ALL {
            let spec = make_baseline::<f64>(name, 3, 4).unwrap();
            assert_eq!(spec.structure.activation, Activation::Linear);
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("go-mtl".parse::<BaselineName>().unwrap(), BaselineName::Gomtl);
        assert_eq!("LR".parse::<BaselineName>().unwrap(), BaselineName::Stl);
        assert!(matches!("svm".parse::<BaselineName>(), Err(Error::UnknownBaseline(_))));
    }
}
