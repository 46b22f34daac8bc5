use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use twosided::checkpoint;
use twosided::config::Config;
use twosided::data::TaskKind;
use twosided::descriptor::{DescriptorSchema, EncodingMode};
use twosided::loaders::{self, ClassData, DomainData, Prepared};
use twosided::protocols::{self, RunConfig};
use twosided::report::ExperimentReport;
use twosided::synth::{synth_generate, World};
use twosided::{Error, Model64};

#[derive(Parser)]
#[command(name = "twosided", version, about = "Two-sided networks for multi-task and multi-domain learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML with dataset/schema/train/baseline/protocol sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the training, split and synthetic seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model checkpoint path.
    #[arg(long)]
    model: Option<PathBuf>,
    /// No summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train the two-sided model on the training split and save a checkpoint.
    Train(Common),
    /// Score a saved checkpoint on the test split.
    Eval(Common),
    /// Multi-domain learning with the configured comparison baselines.
    Mdl(Common),
    /// Zero-shot domain adaptation, leaving out each domain in turn.
    Zsda(Common),
    /// Zero-shot recognition of the config's novel classes.
    Zsl(Common),
    /// Multi-task learning: one-vs-rest classes, or regression tasks.
    Mtl(Common),
    /// Joint multi-domain multi-task learning.
    Mdmt(Common),
    /// Write a synthetic regression world as CSV.
    Synth {
        /// Config whose [synthetic] section describes the world.
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train and score the baseline named in the [baseline] section.
    Baseline(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<Error>().map_or("error", Error::kind);
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {kind}: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &Common) -> anyhow::Result<Config> {
    let Some(path) = &common.config else {
        bail!(Error::Config("--config is required".into()));
    };
    let mut cfg = Config::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn domains(cfg: &Config) -> anyhow::Result<(DomainData, twosided::data::Split)> {
    match loaders::load(cfg)? {
        Prepared::Domains { data, split, .. } => Ok((data, split)),
        Prepared::Classes { .. } => bail!(Error::Config(
            "this command needs domain-labelled data, not class data".into()
        )),
    }
}

fn emit(report: &ExperimentReport, common: &Common) -> anyhow::Result<()> {
    match &common.out {
        Some(path) => report
            .write(path)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", report.to_toml()?),
    }
    if !common.quiet {
        eprintln!(
            "{} {} {} = {:.6}",
            report.setting, report.method, report.metric, report.aggregate
        );
        for b in &report.baselines {
            eprintln!("{} {} {} = {:.6}", report.setting, b.method, report.metric, b.aggregate);
        }
    }
    Ok(())
}

fn model_path(common: &Common) -> anyhow::Result<&Path> {
    common
        .model
        .as_deref()
        .ok_or_else(|| Error::Config("--model is required".into()).into())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let (d, split) = domains(&cfg)?;
            let rc = cfg.run_config(d.data.kind())?;
            let trained = protocols::fit_model(&d.data, &split, &rc)?;
            let path = model_path(&c)?;
            checkpoint::save(&trained.model, path).with_context(|| format!("writing {}", path.display()))?;
            if !c.quiet {
                eprintln!("final objective = {:.6}", trained.final_objective);
            }
            if c.out.is_some() {
                emit(&protocols::evaluate_model(&trained.model, &d.data, &split, &rc)?, &c)?;
            }
            Ok(())
        }
        Command::Eval(c) => {
            let cfg = load_config(&c)?;
            let (d, split) = domains(&cfg)?;
            let rc = cfg.run_config(d.data.kind())?;
            let path = model_path(&c)?;
            let model: Model64 = checkpoint::load(path).with_context(|| format!("reading {}", path.display()))?;
            emit(&protocols::evaluate_model(&model, &d.data, &split, &rc)?, &c)
        }
        Command::Mdl(c) => {
            let cfg = load_config(&c)?;
            let (d, split) = domains(&cfg)?;
            let rc = cfg.run_config(d.data.kind())?;
            emit(&protocols::run_mdl(&d.data, &split, &rc)?, &c)
        }
        Command::Zsda(c) => {
            let cfg = load_config(&c)?;
            let (d, split) = domains(&cfg)?;
            let rc = cfg.run_config(d.data.kind())?;
            emit(&protocols::run_zsda(&d.data, &d.schema, &split, &rc)?, &c)
        }
        Command::Zsl(c) => {
            let cfg = load_config(&c)?;
            let Prepared::Classes { data, .. } = loaders::load(&cfg)? else {
                bail!(Error::Config("zsl needs class data with class descriptors".into()));
            };
            let rc = cfg.run_config(TaskKind::Binary)?;
            emit(&zsl(&data, &cfg.protocol.novel_classes, &rc)?, &c)
        }
        Command::Mtl(c) => {
            let cfg = load_config(&c)?;
            let report = match loaders::load(&cfg)? {
                Prepared::Classes { data, split } => {
                    let rc = cfg.run_config(TaskKind::Binary)?;
                    protocols::run_mtl_multiclass(&data.data, &split, &data.descriptors, &rc)?
                }
                Prepared::Domains { data, split, .. } => {
                    let rc = cfg.run_config(data.data.kind())?;
                    let mut r = protocols::run_mdl(&data.data, &split, &rc)?;
                    r.setting = "mtl".into();
                    r
                }
            };
            emit(&report, &c)
        }
        Command::Mdmt(c) => {
            let cfg = load_config(&c)?;
            let (d, split) = domains(&cfg)?;
            let (domain, task) = mdmt_schemas(&d, cfg.schema.shared_bias)?;
            let rc = cfg.run_config(d.data.kind())?;
            emit(&protocols::run_mdmt(&d.data, &domain, &task, &split, &rc)?, &c)
        }
        Command::Synth { spec, common } => {
            let cfg = load_config(&Common {
                config: Some(spec),
                ..common.clone()
            })?;
            let World::Regression(world) = synth_generate(&cfg.synthetic)? else {
                bail!(Error::Config("synth writes regression worlds only".into()));
            };
            let Some(out) = &common.out else {
                bail!(Error::Config("--out is required".into()));
            };
            let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
            loaders::write_synthetic_csv(&world, BufWriter::new(file))?;
            if !common.quiet {
                eprintln!(
                    "wrote {} instances in {} domains to {}",
                    world.data.len(),
                    world.data.groups().len(),
                    out.display()
                );
            }
            Ok(())
        }
        Command::Baseline(c) => {
            let cfg = load_config(&c)?;
            let (d, split) = domains(&cfg)?;
            let rc = cfg.run_config(d.data.kind())?;
            emit(&protocols::run_baseline(&d.data, &split, cfg.baseline.name, &rc)?, &c)
        }
    }
}

/// Seen classes train on all their instances; novel classes are only scored.
fn zsl(data: &ClassData, novel_names: &[String], rc: &RunConfig) -> anyhow::Result<ExperimentReport> {
    if novel_names.is_empty() {
        bail!(Error::Config("protocol.novel_classes is empty".into()));
    }
    let names = &data.data.class_names;
    let mut novel = Vec::new();
    for n in novel_names {
        match names.iter().position(|c| c == n) {
            Some(i) => novel.push(i),
            None => bail!(Error::Config(format!("unknown novel class `{n}`"))),
        }
    }
    let seen: Vec<usize> = (0..names.len()).filter(|c| !novel.contains(c)).collect();
    let pick = |idx: &[usize]| idx.iter().map(|&c| data.descriptors[c].clone()).collect::<Vec<_>>();
    Ok(protocols::run_zsl(
        &data.data.restrict_classes(&seen),
        &pick(&seen),
        &data.data.restrict_classes(&novel),
        &pick(&novel),
        rc,
    )?)
}

/// Domain and task schemas: the loader's, or the two factors of a CSV.
fn mdmt_schemas(d: &DomainData, shared_bias: bool) -> anyhow::Result<(DescriptorSchema, DescriptorSchema)> {
    if let Some(task) = &d.task_schema {
        return Ok((d.schema.clone(), task.clone()));
    }
    let f = d.schema.factors();
    if f.len() != 2 {
        bail!(Error::InvalidSchema(format!(
            "mdmt needs exactly two factors (domain, task), found {}",
            f.len()
        )));
    }
    Ok((
        DescriptorSchema::new(vec![f[0].clone()], EncodingMode::Distributed, shared_bias)?,
        DescriptorSchema::new(vec![f[1].clone()], EncodingMode::Distributed, false)?,
    ))
}
