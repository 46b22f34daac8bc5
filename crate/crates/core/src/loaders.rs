//! CSV ingestion and the dataset-specific layouts.
//!
//! Every loader returns the data together with its descriptor schema; the
//! split, standardisation and bias column are applied afterwards by
//! [`prepare`] so they behave identically for all sources.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use crate::config::{Config, DatasetConfig, Source};
use crate::data::{ClassDataset, Dataset, Group, Split, Standardizer, Stratification, TaskKind};
use crate::descriptor::{Descriptor, DescriptorSchema, EncodingMode, Factor};
use crate::error::{Error, Result};
use crate::synth::{synth_generate, RegressionWorld, World};

/// Number of feature columns of the school layout after the year-group
/// indicators move into the descriptor.
pub const SCHOOL_FEATURES: usize = 23;
pub const RESTAURANT_FEATURES: usize = 43;
pub const RESTAURANT_DOMAINS: usize = 8;
pub const RESTAURANT_TASKS: [&str; 3] = ["food", "service", "overall"];

/// A header row plus string cells, with 1-based file line numbers for errors.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn read(path: &Path, delimiter: char) -> Result<Self> {
        if !delimiter.is_ascii() {
            return Err(Error::Config(format!("delimiter `{delimiter}` is not ASCII")));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter as u8)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Loader(format!("{}: {other:?}", path.display())),
            })?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(Error::EmptyDataset(format!("{} has no header row", path.display())));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset(format!("{} has no data rows", path.display())));
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 1,
            column: name.into(),
            message: format!("missing column; header has [{}]", self.header.join(", ")),
        })
    }

    fn number(&self, line: usize, cells: &[String], col: usize) -> Result<f64> {
        let cell = &cells[col];
        cell.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                row: line,
                column: self.header[col].clone(),
                message: format!("`{cell}` is not a finite number"),
            })
    }
}

/// Distinct values of a factor column in level order: numeric order when
/// every value parses as a number, lexicographic otherwise.
fn factor_levels<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut distinct: Vec<String> = values.map(str::to_string).collect();
    distinct.sort();
    distinct.dedup();
    let numeric: Option<Vec<f64>> = distinct.iter().map(|v| v.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut paired: Vec<(f64, String)> = nums.into_iter().zip(distinct).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        return paired.into_iter().map(|(_, s)| s).collect();
    }
    distinct
}

/// Groups rows by their factor levels. Groups are ordered by combination
/// index and named by their level values joined with `-`.
fn build_groups(
    schema: &DescriptorSchema,
    level_names: &[Vec<String>],
    row_levels: &[Vec<usize>],
) -> Result<(Vec<Group<f64>>, Vec<usize>)> {
    let mut by_index: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for levels in row_levels {
        by_index.entry(schema.combination_index(levels)?).or_insert_with(|| levels.clone());
    }
    let mut slot = HashMap::new();
    let mut groups = Vec::new();
    for (idx, levels) in by_index {
        slot.insert(idx, groups.len());
        let name = levels
            .iter()
            .zip(level_names)
            .map(|(&l, names)| names[l].as_str())
            .collect::<Vec<_>>()
            .join("-");
        groups.push(Group {
            name,
            descriptor: schema.encode(&levels)?,
        });
    }
    let group_of = row_levels
        .iter()
        .map(|l| schema.combination_index(l).map(|i| slot[&i]))
        .collect::<Result<_>>()?;
    Ok((groups, group_of))
}

/// Domain-labelled data with the schema of its descriptors. `task_schema`
/// is set for multi-domain multi-task data, whose groups carry
/// `[domain, task]` levels.
#[derive(Debug, Clone)]
pub struct DomainData {
    pub data: Dataset<f64>,
    pub schema: DescriptorSchema,
    pub task_schema: Option<DescriptorSchema>,
}

#[derive(Debug, Clone)]
pub struct ClassData {
    pub data: ClassDataset<f64>,
    pub descriptors: Vec<Descriptor<f64>>,
}

/// Reads a generic CSV: features, a label and zero or more factor columns.
pub fn load_csv(path: &Path, cfg: &DatasetConfig, mode: EncodingMode, shared_bias: bool) -> Result<DomainData> {
    let table = Table::read(path, cfg.delimiter)?;
    let label = table.column(&cfg.label)?;
    let factor_cols: Vec<usize> = cfg.factors.iter().map(|f| table.column(f)).collect::<Result<_>>()?;
    let feature_cols = feature_columns(&table, cfg, &[label], &factor_cols)?;

    let level_names: Vec<Vec<String>> = factor_cols
        .iter()
        .map(|&c| factor_levels(table.rows.iter().map(|(_, r)| r[c].as_str())))
        .collect();
    let schema = if factor_cols.is_empty() {
        DescriptorSchema::atomic("all", 1, shared_bias)?.with_encoding(mode, shared_bias)
    } else {
        let factors = cfg
            .factors
            .iter()
            .zip(&level_names)
            .map(|(n, l)| Factor::new(n.clone(), l.len()))
            .collect();
        DescriptorSchema::new(factors, mode, shared_bias)?
    };
    let row_levels: Vec<Vec<usize>> = table
        .rows
        .iter()
        .map(|(_, r)| {
            if factor_cols.is_empty() {
                return vec![0];
            }
            factor_cols
                .iter()
                .zip(&level_names)
                .map(|(&c, names)| names.iter().position(|n| *n == r[c]).expect("level collected"))
                .collect()
        })
        .collect();
    let names = if factor_cols.is_empty() { vec![vec!["all".to_string()]] } else { level_names };
    let (groups, group_of) = build_groups(&schema, &names, &row_levels)?;

    let mut data = Dataset::new(feature_cols.len(), cfg.task, groups)?;
    for ((line, cells), g) in table.rows.iter().zip(group_of) {
        let x = feature_cols
            .iter()
            .map(|&c| table.number(*line, cells, c))
            .collect::<Result<Vec<_>>>()?;
        let y = table.number(*line, cells, label)?;
        data.push(x, y, g).map_err(|e| Error::Parse {
            row: *line,
            column: cfg.label.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(DomainData {
        data,
        schema,
        task_schema: None,
    })
}

fn feature_columns(table: &Table, cfg: &DatasetConfig, label: &[usize], factors: &[usize]) -> Result<Vec<usize>> {
    let cols: Vec<usize> = if cfg.features.is_empty() {
        (0..table.header.len())
            .filter(|c| !label.contains(c) && !factors.contains(c))
            .collect()
    } else {
        cfg.features.iter().map(|f| table.column(f)).collect::<Result<_>>()?
    };
    if cols.is_empty() {
        return Err(Error::Config("no feature columns".into()));
    }
    Ok(cols)
}

/// Reads a class-labelled CSV and its class-descriptor table.
///
/// The descriptor CSV has a `class` column and one numeric column per
/// attribute; classes are ordered as its rows, and every label in the data
/// must name one of them.
pub fn load_classes(path: &Path, descriptors: &Path, cfg: &DatasetConfig) -> Result<ClassData> {
    let desc = Table::read(descriptors, cfg.delimiter)?;
    let class_col = desc.column("class")?;
    let mut class_names = Vec::new();
    let mut encoded = Vec::new();
    for (line, cells) in &desc.rows {
        let attrs = (0..desc.header.len())
            .filter(|&c| c != class_col)
            .map(|c| desc.number(*line, cells, c))
            .collect::<Result<Vec<_>>>()?;
        if class_names.contains(&cells[class_col]) {
            return Err(Error::Parse {
                row: *line,
                column: "class".into(),
                message: format!("class `{}` listed twice", cells[class_col]),
            });
        }
        class_names.push(cells[class_col].clone());
        encoded.push(Descriptor::raw(attrs));
    }

    let table = Table::read(path, cfg.delimiter)?;
    let label = table.column(&cfg.label)?;
    let feature_cols = feature_columns(&table, cfg, &[label], &[])?;
    let mut data = ClassDataset::new(feature_cols.len(), class_names.clone());
    for (line, cells) in &table.rows {
        let class = class_names.iter().position(|c| *c == cells[label]).ok_or_else(|| Error::Parse {
            row: *line,
            column: cfg.label.clone(),
            message: format!("class `{}` has no descriptor", cells[label]),
        })?;
        let x = feature_cols
            .iter()
            .map(|&c| table.number(*line, cells, c))
            .collect::<Result<Vec<_>>>()?;
        data.push(x, class)?;
    }
    Ok(ClassData {
        data,
        descriptors: encoded,
    })
}

/// Loads the school exam data.
///
/// Assumed layout: a header row with `school`, `year` (the year group) and
/// `score` (the exam grade) plus exactly 23 numeric feature columns; the
/// three year-group indicators of the original 26 features are replaced by
/// the single `year` column. Any other layout is rejected.
///
/// With `min_students = 0` every school is kept. Otherwise only schools
/// in which each of the year groups has more than `min_students` students
/// are kept. The label stays on its raw scale.
pub fn load_school(path: &Path, min_students: usize) -> Result<DomainData> {
    let table = Table::read(path, ',')?;
    let layout = || {
        Error::Loader(format!(
            "school layout needs columns `school`, `year`, `score` and {SCHOOL_FEATURES} feature columns; found [{}]",
            table.header.join(", ")
        ))
    };
    let (school, year, score) = match (table.column("school"), table.column("year"), table.column("score")) {
        (Ok(s), Ok(y), Ok(g)) => (s, y, g),
        _ => return Err(layout()),
    };
    if table.header.len() != SCHOOL_FEATURES + 3 {
        return Err(layout());
    }
    let years = factor_levels(table.rows.iter().map(|(_, r)| r[year].as_str()));
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (_, r) in &table.rows {
        let y = years.iter().position(|v| *v == r[year]).expect("level collected");
        counts.entry(r[school].as_str()).or_insert_with(|| vec![0; years.len()])[y] += 1;
    }
    let kept: Vec<&str> = counts
        .iter()
        .filter(|(_, c)| min_students == 0 || c.iter().all(|&n| n > min_students))
        .map(|(s, _)| *s)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no school has more than {min_students} students in every year group"
        )));
    }
    let schools = factor_levels(kept.iter().copied());
    let rows: Vec<&(usize, Vec<String>)> = table
        .rows
        .iter()
        .filter(|(_, r)| schools.contains(&r[school]))
        .collect();

    let schema = DescriptorSchema::new(
        vec![Factor::new("school", schools.len()), Factor::new("year", years.len())],
        EncodingMode::Distributed,
        false,
    )?;
    let row_levels: Vec<Vec<usize>> = rows
        .iter()
        .map(|(_, r)| {
            vec![
                schools.iter().position(|v| *v == r[school]).expect("kept"),
                years.iter().position(|v| *v == r[year]).expect("level collected"),
            ]
        })
        .collect();
    let (groups, group_of) = build_groups(&schema, &[schools.clone(), years.clone()], &row_levels)?;
    let features: Vec<usize> = (0..table.header.len())
        .filter(|&c| c != school && c != year && c != score)
        .collect();
    let mut data = Dataset::new(SCHOOL_FEATURES, TaskKind::Regression, groups)?;
    for ((line, cells), g) in rows.into_iter().zip(group_of) {
        let x = features
            .iter()
            .map(|&c| table.number(*line, cells, c))
            .collect::<Result<Vec<_>>>()?;
        data.push(x, table.number(*line, cells, score)?, g)?;
    }
    Ok(DomainData {
        data,
        schema,
        task_schema: None,
    })
}

/// Loads the restaurant and consumer ratings as a multi-domain multi-task
/// problem.
///
/// Assumed layout: one joined record per rating with `restaurant`, the
/// three scores `food`, `service`, `overall` and exactly 43 numeric
/// feature columns. The 8 most frequently rated restaurants are kept
/// (ties broken by id order) and each record becomes three instances, one
/// per score. Groups carry `[restaurant, task]` levels and the 11-bit
/// concatenated descriptor.
pub fn load_restaurant(path: &Path) -> Result<DomainData> {
    let table = Table::read(path, ',')?;
    let layout = || {
        Error::Loader(format!(
            "restaurant layout needs columns `restaurant`, `food`, `service`, `overall` and {RESTAURANT_FEATURES} feature columns; found [{}]",
            table.header.join(", ")
        ))
    };
    let rest = table.column("restaurant").map_err(|_| layout())?;
    let tasks: Vec<usize> = RESTAURANT_TASKS
        .iter()
        .map(|t| table.column(t))
        .collect::<Result<_>>()
        .map_err(|_| layout())?;
    if table.header.len() != RESTAURANT_FEATURES + 4 {
        return Err(layout());
    }
    let ids = factor_levels(table.rows.iter().map(|(_, r)| r[rest].as_str()));
    let mut counts: Vec<(usize, &String)> = ids
        .iter()
        .map(|id| (table.rows.iter().filter(|(_, r)| r[rest] == *id).count(), id))
        .collect();
    // stable sort keeps id order among equal counts
    counts.sort_by(|a, b| b.0.cmp(&a.0));
    if counts.len() < RESTAURANT_DOMAINS {
        return Err(Error::Loader(format!(
            "need at least {RESTAURANT_DOMAINS} restaurants, found {}",
            counts.len()
        )));
    }
    let mut top: Vec<String> = counts[..RESTAURANT_DOMAINS].iter().map(|(_, id)| (*id).clone()).collect();
    top = factor_levels(top.iter().map(String::as_str));

    let domain_schema = DescriptorSchema::new(
        vec![Factor::new("restaurant", RESTAURANT_DOMAINS)],
        EncodingMode::Distributed,
        false,
    )?;
    let task_schema = DescriptorSchema::new(
        vec![Factor::new("task", RESTAURANT_TASKS.len())],
        EncodingMode::Distributed,
        false,
    )?;
    let joint = DescriptorSchema::new(
        vec![Factor::new("restaurant", RESTAURANT_DOMAINS), Factor::new("task", RESTAURANT_TASKS.len())],
        EncodingMode::Distributed,
        false,
    )?;
    let task_names: Vec<String> = RESTAURANT_TASKS.iter().map(|t| t.to_string()).collect();
    let mut row_levels = Vec::new();
    let mut records = Vec::new();
    for (line, cells) in &table.rows {
        let Some(d) = top.iter().position(|id| *id == cells[rest]) else {
            continue;
        };
        for (t, &col) in tasks.iter().enumerate() {
            row_levels.push(vec![d, t]);
            records.push((*line, cells, col));
        }
    }
    let (groups, group_of) = build_groups(&joint, &[top.clone(), task_names], &row_levels)?;
    let features: Vec<usize> = (0..table.header.len())
        .filter(|&c| c != rest && !tasks.contains(&c))
        .collect();
    let mut data = Dataset::new(RESTAURANT_FEATURES, TaskKind::Regression, groups)?;
    for ((line, cells, col), g) in records.into_iter().zip(group_of) {
        let x = features
            .iter()
            .map(|&c| table.number(line, cells, c))
            .collect::<Result<Vec<_>>>()?;
        data.push(x, table.number(line, cells, col)?, g)?;
    }
    Ok(DomainData {
        data,
        schema: domain_schema,
        task_schema: Some(task_schema),
    })
}

/// Writes a regression world as CSV: `x0..`, `y`, then one level-index
/// column per factor (`f0..`). Values use the shortest exact decimal
/// representation, so reading the file back reproduces the data.
pub fn write_synthetic_csv(world: &RegressionWorld, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = world.data.dim();
    let factors = world.schema.factors();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    header.extend(factors.iter().map(|f| f.name.clone()));
    w.write_record(&header)?;
    for inst in world.data.instances() {
        let mut rec: Vec<String> = inst.x.iter().map(|v| v.to_string()).collect();
        rec.push(inst.y.to_string());
        rec.extend(
            world.data.groups()[inst.group]
                .descriptor
                .levels
                .iter()
                .map(|l| l.to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Data with its split, after the configured standardisation and bias column.
#[derive(Debug, Clone)]
pub enum Prepared {
    Domains {
        data: DomainData,
        split: Split,
        standardizer: Option<Standardizer<f64>>,
    },
    Classes {
        data: ClassData,
        split: Split,
    },
}

/// Splits and post-processes domain data as the dataset section asks.
pub fn prepare(mut d: DomainData, cfg: &DatasetConfig) -> Result<Prepared> {
    if d.data.is_empty() {
        return Err(Error::EmptyDataset("no instances".into()));
    }
    let strata: Vec<usize> = d.data.instances().iter().map(|i| i.group).collect();
    let split = Split::stratified(&strata, cfg.split_fraction, cfg.split_seed, cfg.stratification)?;
    let standardizer = if cfg.standardize {
        Some(d.data.standardize(&split.train)?)
    } else {
        None
    };
    if cfg.append_bias_feature {
        d.data.append_bias_feature();
    }
    Ok(Prepared::Domains {
        data: d,
        split,
        standardizer,
    })
}

/// Class data gets the same treatment; with `shared_bias` every class
/// descriptor also gains a constant-1 slot.
pub fn prepare_classes(mut c: ClassData, cfg: &DatasetConfig, shared_bias: bool) -> Result<Prepared> {
    if c.data.is_empty() {
        return Err(Error::EmptyDataset("no instances".into()));
    }
    let strat = match cfg.stratification {
        Stratification::None => Stratification::None,
        _ => Stratification::PerClass,
    };
    let split = Split::stratified(&c.data.labels, cfg.split_fraction, cfg.split_seed, strat)?;
    if cfg.standardize {
        let rows: Vec<&[f64]> = split.train.iter().map(|&i| c.data.x[i].as_slice()).collect();
        let s = Standardizer::fit_rows(&rows, c.data.dim)?;
        c.data.x.iter_mut().for_each(|x| s.apply(x));
    }
    if cfg.append_bias_feature {
        c.data.append_bias_feature();
    }
    if shared_bias {
        for d in &mut c.descriptors {
            d.encoded.push(1.0);
        }
    }
    Ok(Prepared::Classes { data: c, split })
}

/// Loads whatever the config's dataset section describes.
pub fn load(cfg: &Config) -> Result<Prepared> {
    let ds = &cfg.dataset;
    let path = || {
        ds.path
            .as_deref()
            .map(|p| cfg.resolve(p))
            .ok_or_else(|| Error::Config("dataset.path is required for this source".into()))
    };
    match ds.source {
        Source::Csv => match &ds.class_descriptors {
            Some(desc) => prepare_classes(load_classes(&path()?, &cfg.resolve(desc), ds)?, ds, cfg.schema.shared_bias),
            None => prepare(load_csv(&path()?, ds, cfg.schema.encoding, cfg.schema.shared_bias)?, ds),
        },
        Source::School => prepare(load_school(&path()?, ds.min_students)?, ds),
        Source::Restaurant => prepare(load_restaurant(&path()?)?, ds),
        Source::Synthetic => match synth_generate(&cfg.synthetic)? {
            World::Regression(w) => prepare(
                DomainData {
                    data: w.data,
                    schema: w.schema,
                    task_schema: None,
                },
                ds,
            ),
            World::Classes(w) => {
                let descriptors = w.descriptors();
                prepare_classes(
                    ClassData {
                        data: w.data,
                        descriptors,
                    },
                    ds,
                    cfg.schema.shared_bias,
                )
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    fn csv_cfg(factors: &[&str]) -> DatasetConfig {
        DatasetConfig {
            factors: factors.iter().map(|s| s.to_string()).collect(),
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn toy_two_by_two_gives_four_domains() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "x,y,A,B\n1,2,a,p\n3,4,a,q\n5,6,b,p\n7,8,b,q\n");
        let d = load_csv(&p, &csv_cfg(&["A", "B"]), EncodingMode::Distributed, false).unwrap();
        assert_eq!(d.data.groups().len(), 4);
        let z: Vec<Vec<f64>> = (0..4).map(|g| d.data.z(g).to_vec()).collect();
        assert_eq!(z[0], vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(z[1], vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(z[2], vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(z[3], vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(d.data.groups()[3].name, "b-q");
    }

    #[test]
    fn numeric_levels_sort_numerically() {
        assert_eq!(factor_levels(["10", "9", "2"].into_iter()), vec!["2", "9", "10"]);
        assert_eq!(factor_levels(["b", "a", "b"].into_iter()), vec!["a", "b"]);
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "x,y,A\n1,2,a\n3,oops,b\n");
        let e = load_csv(&p, &csv_cfg(&["A"]), EncodingMode::Distributed, false).unwrap_err();
        match e {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "y");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "x,y\n1,2\n");
        let e = load_csv(&p, &csv_cfg(&["A"]), EncodingMode::Distributed, false).unwrap_err();
        assert!(matches!(e, Error::Parse { ref column, .. } if column == "A"));
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "x,y,A\n");
        let e = load_csv(&p, &csv_cfg(&["A"]), EncodingMode::Distributed, false).unwrap_err();
        assert!(matches!(e, Error::EmptyDataset(_)));
        let p = write(&dir, "u.csv", "");
        assert!(load_csv(&p, &csv_cfg(&["A"]), EncodingMode::Distributed, false).is_err());
    }

    #[test]
    fn standardize_uses_training_statistics() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("x1,x2,y,A\n");
        for i in 0..40 {
            let v = i as f64;
            text += &format!("{},{},{},{}\n", v * 0.5 + 3.0, (v * 1.7).sin() * 10.0, v, i % 2);
        }
        let p = write(&dir, "t.csv", &text);
        let cfg = DatasetConfig {
            standardize: true,
            ..csv_cfg(&["A"])
        };
        let raw = load_csv(&p, &cfg, EncodingMode::Distributed, false).unwrap();
        let Prepared::Domains { data, split, .. } = prepare(raw, &cfg).unwrap() else {
            unreachable!()
        };
        let n = split.train.len() as f64;
        for j in 0..2 {
            let vals: Vec<f64> = split.train.iter().map(|&i| data.data.instances()[i].x[j]).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "var {var}");
        }
        // labels untouched
        assert_eq!(data.data.instances()[5].y, 5.0);
    }

    #[test]
    fn bias_column_goes_last() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "x,y,A\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n");
        let cfg = DatasetConfig {
            append_bias_feature: true,
            ..csv_cfg(&["A"])
        };
        let Prepared::Domains { data, .. } = prepare(load_csv(&p, &cfg, EncodingMode::Distributed, false).unwrap(), &cfg).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(data.data.instances()[1].x, vec![3.0, 1.0]);
    }

    fn school_csv(schools: &[(usize, [usize; 3])]) -> String {
        let mut s = String::from("school,year,score");
        for j in 0..SCHOOL_FEATURES {
            s += &format!(",f{j}");
        }
        s.push('\n');
        for &(id, per_year) in schools {
            for (y, &n) in per_year.iter().enumerate() {
                for k in 0..n {
                    s += &format!("{id},{},{}", y + 1, 10 + k);
                    for j in 0..SCHOOL_FEATURES {
                        s += &format!(",{}", (j + k) % 2);
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    #[test]
    fn school_filter_keeps_full_schools_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", &school_csv(&[(1, [3, 3, 3]), (2, [3, 0, 3]), (3, [1, 3, 3]), (4, [2, 2, 2])]));
        let all = load_school(&p, 0).unwrap();
        assert_eq!(all.schema.factors()[0].cardinality, 4);
        assert_eq!(all.data.groups().len(), 11);
        let full = load_school(&p, 1).unwrap();
        assert_eq!(full.schema.factors()[0].cardinality, 2);
        assert_eq!(full.data.groups().len(), 6);
        assert_eq!(full.data.dim(), SCHOOL_FEATURES);
        // retained rows keep their values
        assert_eq!(full.data.instances()[2].y, 12.0);
    }

    #[test]
    fn school_layout_mismatch_names_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "school,year,score,f0\n1,1,3,0\n");
        let e = load_school(&p, 0).unwrap_err();
        assert!(matches!(e, Error::Loader(_)));
        assert!(e.to_string().contains("`score`"));
    }

    #[test]
    fn restaurant_keeps_eight_and_expands_tasks() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = String::from("restaurant,food,service,overall");
        for j in 0..RESTAURANT_FEATURES {
            s += &format!(",f{j}");
        }
        s.push('\n');
        // restaurant r has r+1 records; ids 0..10
        for r in 0..10 {
            for k in 0..=r {
                s += &format!("{r},{},{},{}", k % 3, (k + 1) % 3, (k + 2) % 3);
                for j in 0..RESTAURANT_FEATURES {
                    s += &format!(",{}", (j * k) % 5);
                }
                s.push('\n');
            }
        }
        let p = write(&dir, "r.csv", &s);
        let d = load_restaurant(&p).unwrap();
        assert_eq!(d.data.groups().len(), 24);
        assert_eq!(d.data.descriptor_len(), 11);
        assert_eq!(d.data.groups()[0].name, "2-food");
        let records: usize = (2..10).map(|r| r + 1).sum();
        assert_eq!(d.data.len(), 3 * records);
        assert_eq!(d.schema.encoded_len() + d.task_schema.unwrap().encoded_len(), 11);
    }

    #[test]
    fn synthetic_csv_round_trips_exactly() {
        let spec = crate::synth::SyntheticSpec {
            per_domain: 5,
            ..Default::default()
        };
        let World::Regression(w) = synth_generate(&spec).unwrap() else {
            unreachable!()
        };
        let mut buf = Vec::new();
        write_synthetic_csv(&w, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, buf).unwrap();
        let back = load_csv(&p, &csv_cfg(&["f0", "f1"]), EncodingMode::Distributed, false).unwrap();
        assert_eq!(back.data.instances(), w.data.instances());
        for g in 0..w.data.groups().len() {
            assert_eq!(back.data.groups()[g], w.data.groups()[g]);
        }
    }
}
