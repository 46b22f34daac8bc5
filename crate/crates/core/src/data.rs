//! Datasets grouped by domain/task, train/test splits and standardisation.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[default]
    Regression,
    Binary,
}

impl TaskKind {
    pub fn default_loss(self) -> LossKind {
        match self {
            TaskKind::Regression => LossKind::Squared,
            TaskKind::Binary => LossKind::Hinge,
        }
    }
}

/// A domain, task, or (domain, task) cell sharing one descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Group<T> {
    pub name: String,
    pub descriptor: Descriptor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub x: Vec<T>,
    pub y: T,
    pub group: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset<T> {
    dim: usize,
    kind: TaskKind,
    groups: Vec<Group<T>>,
    instances: Vec<Instance<T>>,
    reads: Option<Arc<Vec<AtomicUsize>>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(dim: usize, kind: TaskKind, groups: Vec<Group<T>>) -> Result<Self> {
        if let Some(first) = groups.first() {
            let b = first.descriptor.len();
            if let Some(g) = groups.iter().find(|g| g.descriptor.len() != b) {
                return Err(Error::Shape(format!(
                    "group `{}` has descriptor length {}, expected {b}",
                    g.name,
                    g.descriptor.len()
                )));
            }
        }
        Ok(Self {
            dim,
            kind,
            groups,
            instances: Vec::new(),
            reads: None,
        })
    }

    pub fn push(&mut self, x: Vec<T>, y: T, group: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "instance has {} features, dataset has {}",
                x.len(),
                self.dim
            )));
        }
        if group >= self.groups.len() {
            return Err(Error::Shape(format!(
                "group index {group} out of range ({} groups)",
                self.groups.len()
            )));
        }
        if self.kind == TaskKind::Binary && y != T::one() && y != -T::one() {
            return Err(Error::InvalidLabel(format!(
                "binary labels must be -1 or +1, got {y}"
            )));
        }
        self.instances.push(Instance { x, y, group });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    /// Descriptor length `B`.
    pub fn descriptor_len(&self) -> usize {
        self.groups.first().map_or(0, |g| g.descriptor.len())
    }

    pub fn groups(&self) -> &[Group<T>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Uncounted access, for evaluation and reporting.
    pub fn instances(&self) -> &[Instance<T>] {
        &self.instances
    }

    /// Counted access used on every training path.
    pub fn read(&self, i: usize) -> &Instance<T> {
        let inst = &self.instances[i];
        if let Some(reads) = &self.reads {
            reads[inst.group].fetch_add(1, Ordering::Relaxed);
        }
        inst
    }

    /// Enables per-group read counters shared by every clone and subset.
    pub fn instrument(&mut self) {
        self.reads = Some(Arc::new(
            (0..self.groups.len()).map(|_| AtomicUsize::new(0)).collect(),
        ));
    }

    pub fn read_counts(&self) -> Option<Vec<usize>> {
        self.reads
            .as_ref()
            .map(|r| r.iter().map(|c| c.load(Ordering::Relaxed)).collect())
    }

    pub fn z(&self, group: usize) -> &[T] {
        &self.groups[group].descriptor.encoded
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups.len()];
        for inst in &self.instances {
            sizes[inst.group] += 1;
        }
        sizes
    }

    pub fn indices_of_group(&self, group: usize) -> Vec<usize> {
        (0..self.instances.len())
            .filter(|&i| self.instances[i].group == group)
            .collect()
    }

    /// Instances at `indices` with only the groups they touch, renumbered in
    /// original group order. Reads are counted against the source groups.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut used = vec![false; self.groups.len()];
        for &i in indices {
            used[self.instances[i].group] = true;
        }
        let mut remap = vec![usize::MAX; self.groups.len()];
        let mut groups = Vec::new();
        for (g, &u) in used.iter().enumerate() {
            if u {
                remap[g] = groups.len();
                groups.push(self.groups[g].clone());
            }
        }
        let instances = indices
            .iter()
            .map(|&i| {
                let inst = self.read(i);
                Instance {
                    x: inst.x.clone(),
                    y: inst.y,
                    group: remap[inst.group],
                }
            })
            .collect();
        Self {
            dim: self.dim,
            kind: self.kind,
            groups,
            instances,
            reads: None,
        }
    }

    /// Replaces every group's descriptor.
    pub fn with_descriptors(
        &self,
        mut f: impl FnMut(usize, &Group<T>) -> Descriptor<T>,
    ) -> Result<Self> {
        let groups: Vec<Group<T>> = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| Group {
                name: g.name.clone(),
                descriptor: f(i, g),
            })
            .collect();
        let mut out = Self::new(self.dim, self.kind, groups)?;
        out.instances = self.instances.clone();
        out.reads = self.reads.clone();
        Ok(out)
    }

    /// Appends each instance's descriptor to its feature vector.
    pub fn with_descriptor_features(&self) -> Self {
        let mut out = self.clone();
        out.dim += self.descriptor_len();
        for inst in &mut out.instances {
            inst.x.extend_from_slice(&self.groups[inst.group].descriptor.encoded);
        }
        out
    }

    /// Appends a constant-1 feature as the last column.
    pub fn append_bias_feature(&mut self) {
        self.dim += 1;
        for inst in &mut self.instances {
            inst.x.push(T::one());
        }
    }

    /// Z-scores features with statistics from `train` only.
    pub fn standardize(&mut self, train: &[usize]) -> Result<Standardizer<T>> {
        let s = Standardizer::fit(self, train)?;
        for inst in &mut self.instances {
            s.apply(&mut inst.x);
        }
        Ok(s)
    }
}

/// Instances labelled with one of C classes, for one-vs-rest and zero-shot
/// protocols. Class descriptors are kept alongside, never inside, the
/// feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDataset<T> {
    pub dim: usize,
    pub x: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl<T: Scalar> ClassDataset<T> {
    pub fn new(dim: usize, class_names: Vec<String>) -> Self {
        Self {
            dim,
            x: Vec::new(),
            labels: Vec::new(),
            class_names,
        }
    }

    pub fn push(&mut self, x: Vec<T>, label: usize) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "instance has {} features, dataset has {}",
                x.len(),
                self.dim
            )));
        }
        if label >= self.class_names.len() {
            return Err(Error::InvalidLabel(format!(
                "class index {label} out of range ({} classes)",
                self.class_names.len()
            )));
        }
        self.x.push(x);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    /// Instances at `indices`, keeping the full class list.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Instances of the listed classes, relabelled `0..classes.len()` in the
    /// order given.
    pub fn restrict_classes(&self, classes: &[usize]) -> Self {
        let mut out = Self::new(
            self.dim,
            classes.iter().map(|&c| self.class_names[c].clone()).collect(),
        );
        for (x, &l) in self.x.iter().zip(&self.labels) {
            if let Some(pos) = classes.iter().position(|&c| c == l) {
                out.x.push(x.clone());
                out.labels.push(pos);
            }
        }
        out
    }

    /// Appends a constant-1 feature as the last column.
    pub fn append_bias_feature(&mut self) {
        self.dim += 1;
        for x in &mut self.x {
            x.push(T::one());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(data: &Dataset<T>, train: &[usize]) -> Result<Self> {
        let rows: Vec<&[T]> = train.iter().map(|&i| data.instances[i].x.as_slice()).collect();
        Self::fit_rows(&rows, data.dim)
    }

    /// Statistics of `rows`, each of length `dim`.
    pub fn fit_rows(rows: &[&[T]], dim: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset(
                "cannot standardise from an empty training split".into(),
            ));
        }
        let n = T::of(rows.len() as f64);
        let mut mean = vec![T::zero(); dim];
        for x in rows {
            for (m, &v) in mean.iter_mut().zip(x.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for x in rows {
            for ((s, &v), &m) in var.iter_mut().zip(x.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                // constant columns are only centred
                if sd > T::epsilon() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &mut [T]) {
        for ((v, &m), &s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stratification {
    #[default]
    PerDomain,
    PerClass,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub fraction: f64,
    pub seed: u64,
    pub stratification: Stratification,
}

impl Split {
    /// Random split where `fraction` of every stratum (rounded) goes to
    /// training. `strata[i]` is the stratum of item `i`.
    pub fn stratified(
        strata: &[usize],
        fraction: f64,
        seed: u64,
        stratification: Stratification,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!(
                "split fraction must be in [0, 1], got {fraction}"
            )));
        }
        let n_strata = match stratification {
            Stratification::None => 1,
            _ => strata.iter().max().map_or(0, |&m| m + 1),
        };
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
        for (i, &s) in strata.iter().enumerate() {
            let s = if stratification == Stratification::None { 0 } else { s };
            buckets[s].push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for mut bucket in buckets {
            bucket.shuffle(&mut rng);
            let n_train = (fraction * bucket.len() as f64).round() as usize;
            train.extend_from_slice(&bucket[..n_train]);
            test.extend_from_slice(&bucket[n_train..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok(Self {
            train,
            test,
            fraction,
            seed,
            stratification,
        })
    }

    pub fn per_domain<T: Scalar>(data: &Dataset<T>, fraction: f64, seed: u64) -> Result<Self> {
        let strata: Vec<usize> = data.instances.iter().map(|i| i.group).collect();
        Self::stratified(&strata, fraction, seed, Stratification::PerDomain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::DescriptorSchema;
    use proptest::prelude::*;

    fn toy(sizes: &[usize]) -> Dataset<f64> {
        let schema = DescriptorSchema::atomic("d", sizes.len(), false).unwrap();
        let groups = (0..sizes.len())
            .map(|g| Group {
                name: format!("d{g}"),
                descriptor: schema.encode(&[g]).unwrap(),
            })
            .collect();
        let mut data = Dataset::new(2, TaskKind::Regression, groups).unwrap();
        let mut v = 0.0;
        for (g, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                v += 1.0;
                data.push(vec![v, v * v], v, g).unwrap();
            }
        }
        data
    }

    #[test]
    fn standardize_uses_training_split() {
        let mut data = toy(&[10, 7]);
        let split = Split::per_domain(&data, 0.5, 3).unwrap();
        data.standardize(&split.train).unwrap();
        let n = split.train.len() as f64;
        for d in 0..2 {
            let mean: f64 = split.train.iter().map(|&i| data.instances()[i].x[d]).sum::<f64>() / n;
            let var: f64 = split
                .train
                .iter()
                .map(|&i| (data.instances()[i].x[d] - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn subset_drops_untouched_groups_and_counts_reads() {
        let mut data = toy(&[3, 2, 4]);
        data.instrument();
        let idx: Vec<usize> = data.indices_of_group(0).into_iter().chain(data.indices_of_group(2)).collect();
        let sub = data.subset(&idx);
        assert_eq!(sub.groups().len(), 2);
        assert_eq!(sub.groups()[1].name, "d2");
        assert_eq!(sub.group_sizes(), vec![3, 4]);
        assert_eq!(data.read_counts().unwrap(), vec![3, 0, 4]);
    }

    #[test]
    fn descriptor_features_and_bias() {
        let mut data = toy(&[1, 1]);
        let with_z = data.with_descriptor_features();
        assert_eq!(with_z.dim(), 4);
        assert_eq!(with_z.instances()[1].x[2..], [0.0, 1.0]);
        data.append_bias_feature();
        assert_eq!(*data.instances()[0].x.last().unwrap(), 1.0);
    }

    #[test]
    fn binary_labels_checked() {
        let schema = DescriptorSchema::atomic("d", 1, false).unwrap();
        let groups = vec![Group { name: "a".into(), descriptor: schema.encode(&[0]).unwrap() }];
        let mut data = Dataset::<f64>::new(1, TaskKind::Binary, groups).unwrap();
        assert!(data.push(vec![1.0], 1.0, 0).is_ok());
        assert!(matches!(data.push(vec![1.0], 0.0, 0), Err(Error::InvalidLabel(_))));
    }

    proptest! {
        #[test]
        fn split_is_deterministic_disjoint_and_stratified(
            sizes in prop::collection::vec(1usize..20, 1..6),
            seed in any::<u64>(),
            fraction in 0.0f64..1.0,
        ) {
            let strata: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &n)| std::iter::repeat_n(g, n)).collect();
            let a = Split::stratified(&strata, fraction, seed, Stratification::PerDomain).unwrap();
            let b = Split::stratified(&strata, fraction, seed, Stratification::PerDomain).unwrap();
            prop_assert_eq!(&a, &b);
            let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..strata.len()).collect::<Vec<_>>());
            for (g, &n) in sizes.iter().enumerate() {
                let got = a.train.iter().filter(|&&i| strata[i] == g).count();
                prop_assert_eq!(got, (fraction * n as f64).round() as usize);
            }
        }
    }
}
