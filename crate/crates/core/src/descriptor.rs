//! Semantic descriptors: categorical factor schemas and their encodings.
//!
//! Two encodings are supported. `Distributed` concatenates one one-hot block
//! per factor, so unseen factor combinations still map onto trained rows of
//! the model-construction weights. `OneHotAtomic` assigns one indicator per
//! full combination, which is what classic multi-task methods assume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    #[default]
    Distributed,
    OneHotAtomic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    #[default]
    Categorical,
    Continuous,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub cardinality: usize,
    #[serde(default)]
    pub kind: FactorKind,
}

impl Factor {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Self {
        Self {
            name: name.into(),
            cardinality,
            kind: FactorKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorSchema {
    factors: Vec<Factor>,
    mode: EncodingMode,
    shared_bias: bool,
}

impl DescriptorSchema {
    pub fn new(factors: Vec<Factor>, mode: EncodingMode, shared_bias: bool) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if f.cardinality == 0 {
                return Err(Error::InvalidSchema(format!(
                    "factor `{}` has cardinality 0",
                    f.name
                )));
            }
            if f.kind != FactorKind::Categorical {
                return Err(Error::InvalidSchema(format!(
                    "factor `{}` is {:?}; only categorical factors are supported",
                    f.name, f.kind
                )));
            }
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate factor name `{}`",
                    f.name
                )));
            }
        }
        Ok(Self {
            factors,
            mode,
            shared_bias,
        })
    }

    /// Single-factor atomic schema indexing `m` domains or tasks.
    pub fn atomic(name: &str, m: usize, shared_bias: bool) -> Result<Self> {
        Self::new(vec![Factor::new(name, m)], EncodingMode::OneHotAtomic, shared_bias)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn mode(&self) -> EncodingMode {
        self.mode
    }

    pub fn shared_bias(&self) -> bool {
        self.shared_bias
    }

    /// Same factors under a different encoding.
    pub fn with_encoding(&self, mode: EncodingMode, shared_bias: bool) -> Self {
        Self {
            factors: self.factors.clone(),
            mode,
            shared_bias,
        }
    }

    /// Number of distinct level combinations.
    pub fn combinations(&self) -> usize {
        self.factors.iter().map(|f| f.cardinality).product()
    }

    /// Encoded length `B`.
    pub fn encoded_len(&self) -> usize {
        let core = match self.mode {
            EncodingMode::Distributed => self.factors.iter().map(|f| f.cardinality).sum(),
            EncodingMode::OneHotAtomic => self.combinations(),
        };
        core + usize::from(self.shared_bias)
    }

    pub fn validate_levels(&self, levels: &[usize]) -> Result<()> {
        if levels.len() != self.factors.len() {
            return Err(Error::Shape(format!(
                "schema has {} factors, got {} levels",
                self.factors.len(),
                levels.len()
            )));
        }
        for (f, &l) in self.factors.iter().zip(levels) {
            if l >= f.cardinality {
                return Err(Error::InvalidLevel {
                    factor: f.name.clone(),
                    cardinality: f.cardinality,
                    level: l,
                });
            }
        }
        Ok(())
    }

    /// Mixed-radix index of a level combination, last factor fastest.
    pub fn combination_index(&self, levels: &[usize]) -> Result<usize> {
        self.validate_levels(levels)?;
        Ok(self
            .factors
            .iter()
            .zip(levels)
            .fold(0, |acc, (f, &l)| acc * f.cardinality + l))
    }

    /// Inverse of [`combination_index`](Self::combination_index).
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.factors.len()];
        for (slot, f) in levels.iter_mut().zip(&self.factors).rev() {
            *slot = index % f.cardinality;
            index /= f.cardinality;
        }
        levels
    }

    pub fn encode<T: Scalar>(&self, levels: &[usize]) -> Result<Descriptor<T>> {
        self.validate_levels(levels)?;
        let mut z = vec![T::zero(); self.encoded_len()];
        match self.mode {
            EncodingMode::Distributed => {
                let mut offset = 0;
                for (f, &l) in self.factors.iter().zip(levels) {
                    z[offset + l] = T::one();
                    offset += f.cardinality;
                }
            }
            EncodingMode::OneHotAtomic => {
                z[self.combination_index(levels)?] = T::one();
            }
        }
        if self.shared_bias {
            *z.last_mut().expect("bias slot") = T::one();
        }
        Ok(Descriptor {
            levels: levels.to_vec(),
            encoded: z,
        })
    }

    /// One row per level combination, in lexicographic order.
    pub fn schema_matrix<T: Scalar>(&self) -> Matrix<T> {
        let rows: Vec<Vec<T>> = (0..self.combinations())
            .map(|i| {
                self.encode(&self.levels_of(i))
                    .expect("enumerated levels are valid")
                    .encoded
            })
            .collect();
        if rows.is_empty() {
            return Matrix::zeros(0, self.encoded_len());
        }
        Matrix::from_rows(&rows).expect("rows share the encoded length")
    }
}

/// An encoded descriptor `z` together with the levels that produced it.
///
/// Raw descriptors (attribute vectors, externally supplied embeddings) carry
/// no levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor<T> {
    pub levels: Vec<usize>,
    pub encoded: Vec<T>,
}

impl<T: Scalar> Descriptor<T> {
    pub fn raw(encoded: Vec<T>) -> Self {
        Self {
            levels: Vec::new(),
            encoded,
        }
    }

    pub fn len(&self) -> usize {
        self.encoded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encoded.is_empty()
    }
}

/// Joint multi-domain multi-task descriptor `[z_domain, z_task]`.
pub fn concat_mdmt<T: Scalar>(domain: &Descriptor<T>, task: &Descriptor<T>) -> Descriptor<T> {
    let mut levels = domain.levels.clone();
    levels.extend_from_slice(&task.levels);
    let mut encoded = domain.encoded.clone();
    encoded.extend_from_slice(&task.encoded);
    Descriptor { levels, encoded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn ab(mode: EncodingMode, bias: bool) -> DescriptorSchema {
        DescriptorSchema::new(vec![Factor::new("A", 2), Factor::new("B", 2)], mode, bias).unwrap()
    }

    #[test]
    fn distributed_and_atomic_rows() {
        let d: Descriptor<f64> = ab(EncodingMode::Distributed, false).encode(&[0, 1]).unwrap();
        assert_eq!(d.encoded, vec![1.0, 0.0, 0.0, 1.0]);
        let a: Descriptor<f64> = ab(EncodingMode::OneHotAtomic, false).encode(&[1, 0]).unwrap();
        assert_eq!(a.encoded, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn bias_goes_last() {
        let s = DescriptorSchema::new(vec![Factor::new("A", 2)], EncodingMode::Distributed, true)
            .unwrap();
        let d: Descriptor<f64> = s.encode(&[0]).unwrap();
        assert_eq!(d.encoded, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn out_of_range_level_names_factor() {
        let err = ab(EncodingMode::Distributed, false)
            .encode::<f64>(&[0, 2])
            .unwrap_err();
        assert!(err.to_string().contains("`B`"), "{err}");
    }

    #[test]
    fn schema_validation() {
        assert!(DescriptorSchema::new(
            vec![Factor::new("A", 2), Factor::new("A", 3)],
            EncodingMode::Distributed,
            false
        )
        .is_err());
        assert!(DescriptorSchema::new(vec![Factor::new("A", 0)], EncodingMode::Distributed, false)
            .is_err());
        let mut f = Factor::new("angle", 4);
        f.kind = FactorKind::Periodic;
        assert!(matches!(
            DescriptorSchema::new(vec![f], EncodingMode::Distributed, false),
            Err(Error::InvalidSchema(_))
        ));
    }

    #[test]
    fn schema_matrices_match_layouts() {
        let rmtl = DescriptorSchema::atomic("domain", 3, true).unwrap();
        let m: Matrix<f64> = rmtl.schema_matrix();
        assert_eq!(
            m,
            Matrix::from_rows(&[
                [1.0, 0.0, 0.0, 1.0],
                [0.0, 1.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 1.0]
            ])
            .unwrap()
        );
        let mtfl = DescriptorSchema::atomic("domain", 3, false).unwrap();
        assert_eq!(mtfl.schema_matrix::<f64>(), Matrix::identity(3));
        let dist: Matrix<f64> = ab(EncodingMode::Distributed, false).schema_matrix();
        assert_eq!(
            dist,
            Matrix::from_rows(&[
                [1.0, 0.0, 1.0, 0.0],
                [1.0, 0.0, 0.0, 1.0],
                [0.0, 1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0, 1.0]
            ])
            .unwrap()
        );
    }

    #[test]
    fn concat_cases() {
        let d = Descriptor::raw(vec![1.0, 0.0]);
        let t = Descriptor::raw(vec![0.0, 1.0, 0.0]);
        assert_eq!(concat_mdmt(&d, &t).encoded, vec![1.0, 0.0, 0.0, 1.0, 0.0]);
        let e = Descriptor::<f64>::raw(vec![]);
        assert_eq!(concat_mdmt(&d, &e), d);

        let dom = DescriptorSchema::atomic("restaurant", 8, false).unwrap();
        let task = DescriptorSchema::atomic("task", 3, false).unwrap();
        let z = concat_mdmt::<f64>(&dom.encode(&[5]).unwrap(), &task.encode(&[2]).unwrap());
        assert_eq!(z.len(), 11);
        assert_eq!(z.encoded.iter().filter(|&&v| v == 1.0).count(), 2);
        assert_eq!(z.levels, vec![5, 2]);
    }

    #[test]
    fn row_sums_injectivity_and_matrix_rows() {
        let schemas = [
            DescriptorSchema::new(
                vec![Factor::new("a", 3), Factor::new("b", 2), Factor::new("c", 4)],
                EncodingMode::Distributed,
                false,
            )
            .unwrap(),
            DescriptorSchema::new(
                vec![Factor::new("a", 3), Factor::new("b", 2), Factor::new("c", 4)],
                EncodingMode::Distributed,
                true,
            )
            .unwrap(),
            ab(EncodingMode::OneHotAtomic, false),
            ab(EncodingMode::OneHotAtomic, true),
            DescriptorSchema::atomic("d", 5, true).unwrap(),
        ];
        for s in &schemas {
            let m: Matrix<f64> = s.schema_matrix();
            let expected_sum = match s.mode() {
                EncodingMode::Distributed => s.factors().len(),
                EncodingMode::OneHotAtomic => 1,
            } + usize::from(s.shared_bias());
            let mut seen = HashSet::new();
            for i in 0..s.combinations() {
                let levels = s.levels_of(i);
                assert_eq!(s.combination_index(&levels).unwrap(), i);
                let z: Descriptor<f64> = s.encode(&levels).unwrap();
                assert_eq!(m.row(i), z.encoded.as_slice());
                assert_eq!(z.encoded.iter().sum::<f64>(), expected_sum as f64);
                let key: Vec<u64> = z.encoded.iter().map(|v| v.to_bits()).collect();
                assert!(seen.insert(key), "encoding not injective for {s:?}");
            }
        }
    }
}
