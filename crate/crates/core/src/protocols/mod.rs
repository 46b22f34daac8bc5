//! Experiment runners for the learning settings: multi-domain (MDL),
//! zero-shot domain adaptation (ZSDA), one-vs-rest multi-task
//! classification (MTL), zero-shot recognition (ZSL) and joint
//! multi-domain multi-task learning (MDMT).
//!
//! Every runner takes the split explicitly so that settings run over the
//! same `(data, seed)` share their test sets.

mod metrics;

pub use metrics::{argmax, metric_error_rate, metric_multiclass_acc, metric_rmse};

use rayon::prelude::*;

use crate::baselines::{
    make_baseline, select_rank, stl_fit, stl_fit_pooled, tensor_complete, tensor_store, BaselineName,
};
use crate::data::{ClassDataset, Dataset, Group, Split, TaskKind};
use crate::descriptor::{concat_mdmt, Descriptor, DescriptorSchema, EncodingMode};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::loss::LossKind;
use crate::model::{Activation, Structure, TwoSidedModel};
use crate::optim::{train, DomainWeighting, TrainConfig, Trained};
use crate::report::{config_hash, Aggregation, Curve, ExperimentReport, MethodResult, ReportRow};
use crate::scalar::Scalar;

/// Everything a protocol run needs beyond the data and the split.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Right-branch nonlinearity of the two-sided model.
    pub activation: Activation,
    /// Baselines trained and scored on the same split (MDL, MDMT, MTL).
    pub compare: Vec<BaselineName>,
    /// Overrides the default penalty of norm-regularised baselines.
    pub baseline_strength: Option<f64>,
    /// Ridge / hinge penalty of the single-task baselines.
    pub stl_lambda: f64,
    /// CP rank of the tensor-completion baseline; `None` selects it by
    /// leave-one-cell-out validation up to `tc_max_rank`.
    pub tc_rank: Option<usize>,
    pub tc_max_rank: usize,
    pub tc_iters: usize,
    /// Text of the configuration the run was made from, hashed into the report.
    pub snapshot: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            activation: Activation::Relu,
            compare: Vec::new(),
            baseline_strength: None,
            stl_lambda: 1e-2,
            tc_rank: None,
            tc_max_rank: 3,
            tc_iters: 500,
            snapshot: String::new(),
        }
    }
}

fn weighting_name(w: DomainWeighting) -> &'static str {
    match w {
        DomainWeighting::PerDomainMean => "per_domain_mean",
        DomainWeighting::PerInstanceMean => "per_instance_mean",
    }
}

fn metric_name(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Regression => "rmse",
        TaskKind::Binary => "error_rate",
    }
}

fn score(kind: TaskKind, preds: &[f64], labels: &[f64]) -> Result<f64> {
    match kind {
        TaskKind::Regression => metric_rmse(preds, labels),
        TaskKind::Binary => metric_error_rate(preds, labels),
    }
}

fn new_report(
    setting: &str,
    method: &str,
    metric: &str,
    aggregation: Aggregation,
    cfg: &RunConfig,
    rows: Vec<ReportRow>,
) -> ExperimentReport {
    ExperimentReport {
        setting: setting.into(),
        method: method.into(),
        metric: metric.into(),
        aggregation,
        config_hash: config_hash(&cfg.snapshot),
        seed: cfg.train.seed,
        domain_weighting: weighting_name(cfg.train.domain_weighting).into(),
        aggregate: aggregation.aggregate(&rows),
        rows,
        curves: Vec::new(),
        baselines: Vec::new(),
        config: cfg.snapshot.clone(),
    }
}

fn loss_for(kind: TaskKind, cfg: &RunConfig) -> Result<LossKind> {
    let want = kind.default_loss();
    if cfg.train.loss != want {
        return Err(Error::Config(format!(
            "{kind:?} data needs {want:?} loss, config asks for {:?}",
            cfg.train.loss
        )));
    }
    Ok(want)
}

/// Per-group test metric of a linear model per group.
fn score_groups<T: Scalar>(
    data: &Dataset<T>,
    test: &[usize],
    weights: impl Fn(usize) -> Result<Vec<T>>,
) -> Result<Vec<ReportRow>> {
    let mut by_group: Vec<Vec<usize>> = vec![Vec::new(); data.groups().len()];
    for &i in test {
        by_group[data.instances()[i].group].push(i);
    }
    let mut rows = Vec::new();
    for (g, idx) in by_group.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let w = weights(g)?;
        let preds: Vec<f64> = idx
            .iter()
            .map(|&i| dot(&data.instances()[i].x, &w).to_f64_lossy())
            .collect();
        let labels: Vec<f64> = idx.iter().map(|&i| data.instances()[i].y.to_f64_lossy()).collect();
        rows.push(ReportRow {
            domain: data.groups()[g].name.clone(),
            metric: score(data.kind(), &preds, &labels)?,
            n_test: idx.len(),
        });
    }
    Ok(rows)
}

fn train_two_sided<T: Scalar>(
    data: &Dataset<T>,
    train_idx: &[usize],
    config: &TrainConfig,
    structure: &Structure<T>,
) -> Result<Trained<T>> {
    let sub = data.subset(train_idx);
    train(&sub, config, structure)
}

/// Trains the two-sided model on `split.train` and scores every group.
fn fit_ours<T: Scalar>(
    data: &Dataset<T>,
    split: &Split,
    cfg: &RunConfig,
) -> Result<(Vec<ReportRow>, Trained<T>)> {
    let trained = train_two_sided(data, &split.train, &cfg.train, &Structure::free(cfg.activation))?;
    let rows = score_groups(data, &split.test, |g| trained.model.effective_weights(data.z(g)))?;
    Ok((rows, trained))
}

/// Trains and scores one classic baseline over atomic group indices.
pub fn fit_baseline<T: Scalar>(
    data: &Dataset<T>,
    split: &Split,
    name: BaselineName,
    cfg: &RunConfig,
) -> Result<Vec<ReportRow>> {
    let loss = loss_for(data.kind(), cfg)?;
    if name == BaselineName::Stl {
        let train_set = data.subset(&split.train);
        if train_set.groups().len() != data.groups().len() {
            return Err(Error::DegenerateDomain(
                "every group needs training instances for single-task fitting".into(),
            ));
        }
        let models = stl_fit(&train_set, loss, cfg.stl_lambda, &cfg.train)?;
        return score_groups(data, &split.test, |g| Ok(models[g].clone()));
    }
    let mut spec = make_baseline::<T>(name, data.groups().len(), data.dim())?;
    if let Some(s) = cfg.baseline_strength {
        spec = spec.with_strength(s);
    }
    let encoded = spec.encode_dataset(data)?;
    let trained = train_two_sided(&encoded, &split.train, &spec.train_config(&cfg.train), &spec.structure)?;
    score_groups(&encoded, &split.test, |g| trained.model.effective_weights(encoded.z(g)))
}

fn run_comparisons<T: Scalar>(
    data: &Dataset<T>,
    split: &Split,
    cfg: &RunConfig,
    aggregation: Aggregation,
) -> Result<Vec<MethodResult>> {
    let rows: Vec<Result<Vec<ReportRow>>> = cfg
        .compare
        .par_iter()
        .map(|&name| fit_baseline(data, split, name, cfg))
        .collect();
    cfg.compare
        .iter()
        .zip(rows)
        .map(|(name, r)| r.map(|rows| MethodResult::new(name.as_str(), aggregation, rows)))
        .collect()
}

/// Multi-domain learning: one model over all domains' training data,
/// scored per domain and averaged.
pub fn run_mdl<T: Scalar>(data: &Dataset<T>, split: &Split, cfg: &RunConfig) -> Result<ExperimentReport> {
    if data.groups().len() < 2 {
        return Err(Error::Config("multi-domain learning needs at least 2 domains".into()));
    }
    loss_for(data.kind(), cfg)?;
    let (rows, trained) = fit_ours(data, split, cfg)?;
    let mut report = new_report("mdl", "ours", metric_name(data.kind()), Aggregation::MeanOverRows, cfg, rows);
    report.curves.push(Curve::new("ours", &trained.curve));
    report.baselines = run_comparisons(data, split, cfg, Aggregation::MeanOverRows)?;
    Ok(report)
}

/// One classic baseline alone, scored like [`run_mdl`].
pub fn run_baseline<T: Scalar>(
    data: &Dataset<T>,
    split: &Split,
    name: BaselineName,
    cfg: &RunConfig,
) -> Result<ExperimentReport> {
    let rows = fit_baseline(data, split, name, cfg)?;
    Ok(new_report(
        "mdl",
        name.as_str(),
        metric_name(data.kind()),
        Aggregation::MeanOverRows,
        cfg,
        rows,
    ))
}

/// Trains the two-sided model on the training split only.
pub fn fit_model<T: Scalar>(data: &Dataset<T>, split: &Split, cfg: &RunConfig) -> Result<Trained<T>> {
    loss_for(data.kind(), cfg)?;
    train_two_sided(data, &split.train, &cfg.train, &Structure::free(cfg.activation))
}

/// Scores a given model on the test split, per group.
pub fn evaluate_model<T: Scalar>(
    model: &TwoSidedModel<T>,
    data: &Dataset<T>,
    split: &Split,
    cfg: &RunConfig,
) -> Result<ExperimentReport> {
    if model.d() != data.dim() || model.b() != data.descriptor_len() {
        return Err(Error::Shape(format!(
            "model expects D={} B={}, data has D={} B={}",
            model.d(),
            model.b(),
            data.dim(),
            data.descriptor_len()
        )));
    }
    let rows = score_groups(data, &split.test, |g| model.effective_weights(data.z(g)))?;
    Ok(new_report(
        "eval",
        "ours",
        metric_name(data.kind()),
        Aggregation::MeanOverRows,
        cfg,
        rows,
    ))
}

/// Scores of one leave-one-domain-out fold.
#[derive(Debug, Clone)]
pub struct ZsdaFold {
    pub held_out: usize,
    pub ours: ReportRow,
    pub blind: ReportRow,
    /// `None` when the held-out cell cannot be placed in a factor grid.
    pub tensor: Option<ReportRow>,
    pub curve: Vec<(usize, f64)>,
}

fn held_out_row<T: Scalar>(data: &Dataset<T>, idx: &[usize], w: &[T], extra: Option<&[T]>) -> Result<ReportRow> {
    let preds: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let x = &data.instances()[i].x;
            let mut p = dot(x, &w[..x.len()]);
            if let Some(z) = extra {
                p += dot(z, &w[x.len()..]);
            }
            p.to_f64_lossy()
        })
        .collect();
    let labels: Vec<f64> = idx.iter().map(|&i| data.instances()[i].y.to_f64_lossy()).collect();
    let g = data.instances()[idx[0]].group;
    Ok(ReportRow {
        domain: data.groups()[g].name.clone(),
        metric: score(data.kind(), &preds, &labels)?,
        n_test: idx.len(),
    })
}

/// One ZSDA fold: trains on every other domain's training split and scores
/// domain `held_out` on its test split with the model synthesised from its
/// descriptor, against blind transfer and tensor completion.
pub fn zsda_fold<T: Scalar>(
    data: &Dataset<T>,
    schema: &DescriptorSchema,
    split: &Split,
    held_out: usize,
    cfg: &RunConfig,
) -> Result<ZsdaFold> {
    let loss = loss_for(data.kind(), cfg)?;
    let train_idx: Vec<usize> = split
        .train
        .iter()
        .copied()
        .filter(|&i| data.instances()[i].group != held_out)
        .collect();
    let test_idx: Vec<usize> = split
        .test
        .iter()
        .copied()
        .filter(|&i| data.instances()[i].group == held_out)
        .collect();
    if test_idx.is_empty() {
        return Err(Error::EmptyEvaluation(format!(
            "held-out domain `{}` has no test instances",
            data.groups()[held_out].name
        )));
    }
    let z = data.z(held_out);

    let trained = train_two_sided(data, &train_idx, &cfg.train, &Structure::free(cfg.activation))?;
    let w = trained.model.effective_weights(z)?;
    let ours = held_out_row(data, &test_idx, &w, None)?;

    let blind_data = data.subset(&train_idx).with_descriptor_features();
    let blind_w = stl_fit_pooled(&blind_data, loss, cfg.stl_lambda, &cfg.train)?;
    let blind = held_out_row(data, &test_idx, &blind_w, Some(z))?;

    let tensor = tensor_fold(data, schema, &train_idx, held_out, &test_idx, loss, cfg)?;

    Ok(ZsdaFold {
        held_out,
        ours,
        blind,
        tensor,
        curve: trained.curve,
    })
}

fn tensor_fold<T: Scalar>(
    data: &Dataset<T>,
    schema: &DescriptorSchema,
    train_idx: &[usize],
    held_out: usize,
    test_idx: &[usize],
    loss: LossKind,
    cfg: &RunConfig,
) -> Result<Option<ReportRow>> {
    let grid: Vec<usize> = schema.factors().iter().map(|f| f.cardinality).collect();
    let target = &data.groups()[held_out].descriptor.levels;
    if target.len() != grid.len() {
        return Ok(None);
    }
    let sub = data.subset(train_idx);
    let models = stl_fit(&sub, loss, cfg.stl_lambda, &cfg.train)?;
    let cells: Vec<(Vec<usize>, Vec<T>)> = sub
        .groups()
        .iter()
        .map(|g| g.descriptor.levels.clone())
        .zip(models)
        .collect();
    let tensor = tensor_store(&cells, &grid)?;
    let rank = match cfg.tc_rank {
        Some(r) => r,
        None => select_rank(&tensor, cfg.tc_max_rank, cfg.tc_iters, cfg.train.seed)?,
    };
    let done = tensor_complete(&tensor, rank, cfg.tc_iters, cfg.train.seed)?;
    let w = done.tensor.slice(target)?.to_vec();
    held_out_row(data, test_idx, &w, None).map(Some)
}

/// Zero-shot domain adaptation, holding out each domain in turn.
pub fn run_zsda<T: Scalar>(
    data: &Dataset<T>,
    schema: &DescriptorSchema,
    split: &Split,
    cfg: &RunConfig,
) -> Result<ExperimentReport> {
    if schema.mode() == EncodingMode::OneHotAtomic {
        return Err(Error::UnsupportedSchema(
            "zero-shot domain adaptation needs a distributed descriptor; under one-hot atomic \
             encoding the held-out domain's descriptor row is never trained"
                .into(),
        ));
    }
    if data.groups().len() < 2 {
        return Err(Error::Config("zero-shot domain adaptation needs at least 2 domains".into()));
    }
    let folds: Vec<Result<ZsdaFold>> = (0..data.groups().len())
        .into_par_iter()
        .map(|g| zsda_fold(data, schema, split, g, cfg))
        .collect();
    let folds: Vec<ZsdaFold> = folds.into_iter().collect::<Result<_>>()?;
    let agg = Aggregation::MeanOverRows;
    let rows = folds.iter().map(|f| f.ours.clone()).collect();
    let mut report = new_report("zsda", "ours", metric_name(data.kind()), agg, cfg, rows);
    report.curves = folds
        .iter()
        .map(|f| Curve::new(format!("held_out:{}", data.groups()[f.held_out].name), &f.curve))
        .collect();
    report.baselines.push(MethodResult::new(
        "blind_lr",
        agg,
        folds.iter().map(|f| f.blind.clone()).collect(),
    ));
    if folds.iter().all(|f| f.tensor.is_some()) {
        report.baselines.push(MethodResult::new(
            "tensor_completion",
            agg,
            folds.iter().filter_map(|f| f.tensor.clone()).collect(),
        ));
    }
    Ok(report)
}

/// Expands class-labelled instances into one ±1 binary instance per
/// (instance, class) pair, one group per class.
fn one_vs_rest<T: Scalar>(data: &ClassDataset<T>, descriptors: &[Descriptor<T>]) -> Result<Dataset<T>> {
    let groups = descriptors
        .iter()
        .zip(&data.class_names)
        .map(|(d, name)| Group {
            name: name.clone(),
            descriptor: d.clone(),
        })
        .collect();
    let mut out = Dataset::new(data.dim, TaskKind::Binary, groups)?;
    for (x, &label) in data.x.iter().zip(&data.labels) {
        for c in 0..descriptors.len() {
            let y = if c == label { T::one() } else { -T::one() };
            out.push(x.clone(), y, c)?;
        }
    }
    Ok(out)
}

fn check_descriptors<T: Scalar>(classes: usize, descriptors: &[Descriptor<T>]) -> Result<()> {
    if classes < 2 {
        return Err(Error::Config("need at least 2 classes".into()));
    }
    if descriptors.len() != classes {
        return Err(Error::Config(format!(
            "{classes} classes but {} class descriptors",
            descriptors.len()
        )));
    }
    let b = descriptors[0].len();
    if b == 0 || descriptors.iter().any(|d| d.len() != b) {
        return Err(Error::Config("class descriptors must share a nonzero length".into()));
    }
    Ok(())
}

fn class_config(cfg: &RunConfig) -> TrainConfig {
    TrainConfig {
        loss: LossKind::Hinge,
        ..cfg.train.clone()
    }
}

/// Predicts by ranking every candidate descriptor's score.
fn rank_predict<T: Scalar>(model: &TwoSidedModel<T>, x: &[Vec<T>], candidates: &[Descriptor<T>]) -> Result<Vec<usize>> {
    let weights: Vec<Vec<T>> = candidates
        .iter()
        .map(|d| model.effective_weights(&d.encoded))
        .collect::<Result<_>>()?;
    Ok(x.iter()
        .map(|xi| {
            let scores: Vec<f64> = weights.iter().map(|w| dot(xi, w).to_f64_lossy()).collect();
            argmax(&scores)
        })
        .collect())
}

fn per_class_rows(names: &[String], preds: &[usize], labels: &[usize]) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (c, name) in names.iter().enumerate() {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        let p: Vec<usize> = idx.iter().map(|&i| preds[i]).collect();
        let l: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        rows.push(ReportRow {
            domain: name.clone(),
            metric: metric_multiclass_acc(&p, &l)?,
            n_test: idx.len(),
        });
    }
    Ok(rows)
}

/// Multi-class classification as C one-vs-rest tasks sharing one network.
///
/// The class descriptors define the tasks; at test time every descriptor is
/// scored and the best wins, so the label is never an input.
pub fn run_mtl_multiclass<T: Scalar>(
    data: &ClassDataset<T>,
    split: &Split,
    descriptors: &[Descriptor<T>],
    cfg: &RunConfig,
) -> Result<ExperimentReport> {
    check_descriptors(data.classes(), descriptors)?;
    let train_set = one_vs_rest(&data.subset(&split.train), descriptors)?;
    let trained = train(&train_set, &class_config(cfg), &Structure::free(cfg.activation))?;
    let test = data.subset(&split.test);
    let preds = rank_predict(&trained.model, &test.x, descriptors)?;
    let rows = per_class_rows(&data.class_names, &preds, &test.labels)?;
    let mut report = new_report("mtl", "ours", "accuracy", Aggregation::MeanOverRows, cfg, rows);
    report.curves.push(Curve::new("ours", &trained.curve));

    for &name in &cfg.compare {
        let rows = mtl_baseline(data, split, name, cfg)?;
        report
            .baselines
            .push(MethodResult::new(name.as_str(), Aggregation::MeanOverRows, rows));
    }
    Ok(report)
}

/// A classic baseline on the one-vs-rest expansion with atomic task indices.
fn mtl_baseline<T: Scalar>(
    data: &ClassDataset<T>,
    split: &Split,
    name: BaselineName,
    cfg: &RunConfig,
) -> Result<Vec<ReportRow>> {
    let c = data.classes();
    let atomic = DescriptorSchema::atomic("class", c, false)?;
    let descriptors: Vec<Descriptor<T>> = (0..c).map(|j| atomic.encode(&[j])).collect::<Result<_>>()?;
    let train_set = one_vs_rest(&data.subset(&split.train), &descriptors)?;
    let test = data.subset(&split.test);
    let config = class_config(cfg);
    let weights: Vec<Vec<T>> = if name == BaselineName::Stl {
        stl_fit(&train_set, LossKind::Hinge, cfg.stl_lambda, &config)?
    } else {
        let mut spec = make_baseline::<T>(name, c, data.dim)?;
        if let Some(s) = cfg.baseline_strength {
            spec = spec.with_strength(s);
        }
        let encoded = spec.encode_dataset(&train_set)?;
        let trained = train(&encoded, &spec.train_config(&config), &spec.structure)?;
        (0..c)
            .map(|j| trained.model.effective_weights(encoded.z(j)))
            .collect::<Result<_>>()?
    };
    let preds: Vec<usize> = test
        .x
        .iter()
        .map(|xi| {
            let scores: Vec<f64> = weights.iter().map(|w| dot(xi, w).to_f64_lossy()).collect();
            argmax(&scores)
        })
        .collect();
    per_class_rows(&data.class_names, &preds, &test.labels)
}

/// Zero-shot recognition: train one-vs-rest on seen classes, then classify
/// instances of novel classes by ranking the novel descriptors.
pub fn run_zsl<T: Scalar>(
    seen: &ClassDataset<T>,
    seen_descriptors: &[Descriptor<T>],
    novel: &ClassDataset<T>,
    novel_descriptors: &[Descriptor<T>],
    cfg: &RunConfig,
) -> Result<ExperimentReport> {
    check_descriptors(seen.classes(), seen_descriptors)?;
    if novel_descriptors.is_empty() || novel_descriptors.len() != novel.classes() {
        return Err(Error::Config(format!(
            "{} novel classes but {} novel descriptors",
            novel.classes(),
            novel_descriptors.len()
        )));
    }
    if novel_descriptors.iter().any(|d| d.len() != seen_descriptors[0].len()) {
        return Err(Error::Config("novel descriptors differ in length from seen ones".into()));
    }
    if novel.dim != seen.dim {
        return Err(Error::Shape(format!(
            "seen data has {} features, novel data {}",
            seen.dim, novel.dim
        )));
    }
    for (j, d) in novel_descriptors.iter().enumerate() {
        if let Some(s) = seen_descriptors.iter().position(|s| s.encoded == d.encoded) {
            return Err(Error::ProtocolViolation(format!(
                "novel class `{}` has the same descriptor as seen class `{}`",
                novel.class_names[j], seen.class_names[s]
            )));
        }
    }
    if novel.is_empty() {
        return Err(Error::EmptyEvaluation("no novel-class instances".into()));
    }
    let train_set = one_vs_rest(seen, seen_descriptors)?;
    let trained = train(&train_set, &class_config(cfg), &Structure::free(cfg.activation))?;
    let preds = rank_predict(&trained.model, &novel.x, novel_descriptors)?;
    let rows = per_class_rows(&novel.class_names, &preds, &novel.labels)?;
    let mut report = new_report("zsl", "ours", "accuracy", Aggregation::MeanOverRows, cfg, rows);
    // overall accuracy over all novel instances, alongside the per-class mean
    report.baselines.push(MethodResult {
        method: "ours_overall".into(),
        aggregate: metric_multiclass_acc(&preds, &novel.labels)?,
        rows: Vec::new(),
    });
    report.curves.push(Curve::new("ours", &trained.curve));
    Ok(report)
}

/// Joint multi-domain multi-task learning with `[z_domain, z_task]`
/// descriptors, scored by RMSE over all test records and compared with the
/// same network under one-hot atomic (domain, task) indices.
///
/// Every group of `data` must carry `[domain level, task level]`.
pub fn run_mdmt<T: Scalar>(
    data: &Dataset<T>,
    domain_schema: &DescriptorSchema,
    task_schema: &DescriptorSchema,
    split: &Split,
    cfg: &RunConfig,
) -> Result<ExperimentReport> {
    loss_for(data.kind(), cfg)?;
    let joint = data.with_descriptors(|_, g| {
        let levels = &g.descriptor.levels;
        let d = domain_schema.encode(&levels[..1.min(levels.len())]);
        let t = task_schema.encode(levels.get(1..).unwrap_or(&[]));
        match (d, t) {
            (Ok(d), Ok(t)) => concat_mdmt(&d, &t),
            _ => Descriptor::raw(Vec::new()),
        }
    })?;
    if joint.groups().iter().any(|g| g.descriptor.is_empty()) {
        return Err(Error::Config(
            "every (domain, task) group needs valid [domain, task] levels".into(),
        ));
    }
    let agg = Aggregation::PooledRmse;
    let (rows, trained) = fit_ours(&joint, split, cfg)?;
    let mut report = new_report("mdmt", "ours", metric_name(data.kind()), agg, cfg, rows);
    report.curves.push(Curve::new("ours", &trained.curve));

    let atomic = DescriptorSchema::atomic("domain_task", data.groups().len(), false)?;
    let atomic_data = data.with_descriptors(|g, _| atomic.encode(&[g]).expect("index in range"))?;
    let (atomic_rows, atomic_trained) = fit_ours(&atomic_data, split, cfg)?;
    report.baselines.push(MethodResult::new("ours_atomic", agg, atomic_rows));
    report.curves.push(Curve::new("ours_atomic", &atomic_trained.curve));
    report
        .baselines
        .extend(run_comparisons(data, split, cfg, agg)?);
    Ok(report)
}
