//! Experiment configuration files.
//!
//! A config is TOML with the flat sections `dataset`, `schema`, `train`,
//! `baseline`, `protocol` and `synthetic`; every key has a default so an
//! empty file is valid. [`Config::normalize`] writes every key back out, and
//! parsing that text gives the same config again.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineName;
use crate::data::{Stratification, TaskKind};
use crate::descriptor::EncodingMode;
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::model::Activation;
use crate::optim::{DomainWeighting, HiddenWidth, RegKind, RegSpec, TrainConfig};
use crate::protocols::RunConfig;
use crate::synth::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Csv,
    School,
    Restaurant,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: Source,
    /// Data file; relative paths resolve against the config file's directory.
    pub path: Option<PathBuf>,
    pub delimiter: char,
    /// Feature columns; empty means every column that is not the label or a factor.
    pub features: Vec<String>,
    pub label: String,
    /// Columns whose distinct values become the levels of descriptor factors.
    pub factors: Vec<String>,
    /// Regression or binary labels for the domain settings. Class labels for
    /// `mtl`/`zsl` are read from `label` when `class_descriptors` is set.
    pub task: TaskKind,
    /// CSV with a `class` column and one column per attribute; turns the
    /// file into a class-labelled dataset.
    pub class_descriptors: Option<PathBuf>,
    pub standardize: bool,
    pub append_bias_feature: bool,
    /// School loader: minimum students per (school, year group) cell.
    pub min_students: usize,
    pub split_fraction: f64,
    pub split_seed: u64,
    pub stratification: Stratification,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: Source::Csv,
            path: None,
            delimiter: ',',
            features: Vec::new(),
            label: "y".into(),
            factors: Vec::new(),
            task: TaskKind::Regression,
            class_descriptors: None,
            standardize: false,
            append_bias_feature: false,
            min_students: 50,
            split_fraction: 0.5,
            split_seed: 0,
            stratification: Stratification::PerDomain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub encoding: EncodingMode,
    pub shared_bias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Defaults to the dataset's natural loss.
    pub loss: Option<LossKind>,
    /// Hidden width K; 0 picks `ceil(D / ln D)`.
    pub hidden_width: usize,
    pub activation: Activation,
    pub reg_p: RegKind,
    pub reg_p_strength: f64,
    pub reg_q: RegKind,
    pub reg_q_strength: f64,
    pub domain_weighting: DomainWeighting,
    pub momentum: f64,
    pub lr_decay: f64,
    pub lr_decay_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: t.seed,
            loss: None,
            hidden_width: 0,
            activation: Activation::Relu,
            reg_p: RegKind::None,
            reg_p_strength: 0.0,
            reg_q: RegKind::None,
            reg_q_strength: 0.0,
            domain_weighting: t.domain_weighting,
            momentum: t.momentum,
            lr_decay: t.lr_decay,
            lr_decay_every: t.lr_decay_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    /// Method trained by the `baseline` subcommand.
    pub name: BaselineName,
    /// Baselines scored next to the two-sided model.
    pub compare: Vec<BaselineName>,
    /// Penalty of the regularised baselines; unset keeps their defaults.
    pub strength: Option<f64>,
    pub stl_lambda: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            name: BaselineName::Stl,
            compare: Vec::new(),
            strength: None,
            stl_lambda: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    /// Tensor-completion rank; 0 selects it by leave-one-cell-out.
    pub tc_rank: usize,
    pub tc_max_rank: usize,
    pub tc_iters: usize,
    /// Class names held out for zero-shot recognition.
    pub novel_classes: Vec<String>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            tc_rank: 0,
            tc_max_rank: 3,
            tc_iters: 500,
            novel_classes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dataset: DatasetConfig,
    pub schema: SchemaConfig,
    pub train: TrainSection,
    pub baseline: BaselineSection,
    pub protocol: ProtocolSection,
    pub synthetic: SyntheticSpec,
    /// Directory relative data paths resolve against; not serialised.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Every key written out explicitly, in a fixed order.
    pub fn normalize(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(one_line(&e.to_string())))
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.dataset.split_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("split_fraction must lie in (0, 1), got {f}")));
        }
        if self.baseline.stl_lambda < 0.0 {
            return Err(Error::Config("stl_lambda must be nonnegative".into()));
        }
        if self.dataset.source == Source::Synthetic {
            self.synthetic.validate()?;
        }
        self.train_config(TaskKind::Regression).validate()
    }

    /// Resolves a data path against the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn train_config(&self, kind: TaskKind) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: t.seed,
            loss: t.loss.unwrap_or(kind.default_loss()),
            k: match t.hidden_width {
                0 => HiddenWidth::Auto,
                k => HiddenWidth::Fixed(k),
            },
            reg_p: RegSpec::new(t.reg_p, t.reg_p_strength),
            reg_q: RegSpec::new(t.reg_q, t.reg_q_strength),
            domain_weighting: t.domain_weighting,
            momentum: t.momentum,
            lr_decay: t.lr_decay,
            lr_decay_every: t.lr_decay_every,
        }
    }

    /// The protocol-level run settings; `snapshot` is the normalised text.
    pub fn run_config(&self, kind: TaskKind) -> Result<RunConfig> {
        Ok(RunConfig {
            train: self.train_config(kind),
            activation: self.train.activation,
            compare: self.baseline.compare.clone(),
            baseline_strength: self.baseline.strength,
            stl_lambda: self.baseline.stl_lambda,
            tc_rank: (self.protocol.tc_rank > 0).then_some(self.protocol.tc_rank),
            tc_max_rank: self.protocol.tc_max_rank,
            tc_iters: self.protocol.tc_iters,
            snapshot: self.normalize()?,
        })
    }

    /// Overrides the training and split seeds, and the synthetic seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.dataset.split_seed = seed;
        self.synthetic.seed = seed;
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
