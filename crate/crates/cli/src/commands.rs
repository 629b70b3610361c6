use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use serde::{Deserialize, Serialize};

use empathy_core::analysis::{
    class_conditional_curves, rank_feature_contributions, subset_evaluation, write_findings_csv,
    write_subsets_csv,
};
use empathy_core::features::{
    featurize_dataset, read_sequences, resample_dataset, split_summary_name, write_sequences,
    SummaryTable,
};
use empathy_core::harness::{
    compare_models, fit_fold, grid_search, run_cv, CVConfig, CVReport, FoldArtifacts,
};
use empathy_core::ingest::{
    clean_features, group_features, load_dataset, write_dataset, FeatureCatalog,
};
use empathy_core::labels::{cronbach_alpha, label_responses, read_questionnaires, Label, LabelSet};
use empathy_core::learners::ModelSpec;
use empathy_core::seed::derive;
use empathy_core::synth::{generate_dataset, write_synth, SynthConfig};

use crate::manifest::RunManifest;
use crate::{Cli, Command, Global, UsageError};

fn require(path: &Path) -> Result<PathBuf> {
    if !path.exists() {
        return Err(UsageError(format!("{} does not exist", path.display())).into());
    }
    Ok(path.to_path_buf())
}

fn read_config_table(global: &Global) -> Result<toml::Table> {
    match &global.config {
        None => Ok(toml::Table::new()),
        Some(path) => {
            let text = fs::read_to_string(require(path)?)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).map_err(|e| {
                empathy_core::Error::Validation(format!("{}: {e}", path.display())).into()
            })
        }
    }
}

fn from_table<T: for<'de> Deserialize<'de>>(table: toml::Table, what: &str) -> Result<T> {
    toml::Value::Table(table).try_into().map_err(|e| {
        empathy_core::Error::Validation(format!("invalid {what} configuration: {e}")).into()
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<File> {
    File::open(require(path)?).with_context(|| format!("opening {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn read_table(path: &Path) -> Result<SummaryTable> {
    Ok(SummaryTable::read_csv(open(path)?)?)
}

fn read_labels(path: &Path) -> Result<LabelSet> {
    Ok(LabelSet::read_csv(open(path)?)?)
}

/// Cross-validation settings plus an optional model grid.
struct EvaluateConfig {
    cv: CVConfig,
    grid: Vec<ModelSpec>,
}

fn evaluate_config(global: &Global, manifest: &mut RunManifest) -> Result<EvaluateConfig> {
    let mut table = read_config_table(global)?;
    let grid: Vec<ModelSpec> = match table.remove("grid") {
        Some(v) => v
            .try_into()
            .map_err(|e| empathy_core::Error::Validation(format!("invalid model grid: {e}")))?,
        None => Vec::new(),
    };
    if !table.contains_key("model") {
        let reference = toml::Value::try_from(ModelSpec::reference_gbt(0))?;
        table.insert("model".into(), reference);
    }
    let mut cv: CVConfig = from_table(table, "evaluation")?;
    let mut grid = grid;
    if let Some(s) = global.seed {
        cv.seed = derive(s, 0);
        cv.model = cv.model.reseeded(derive(s, 1));
        grid = grid.into_iter().map(|m| m.reseeded(derive(s, 1))).collect();
    }
    manifest.seeds.insert("cv".into(), cv.seed);
    manifest.seeds.insert("model".into(), cv.model.seed);
    Ok(EvaluateConfig { cv, grid })
}

fn write_report(dir: &Path, report: &CVReport, outputs: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    fs::write(&path, report.to_json()? + "\n")?;
    outputs.push(path);
    let path = dir.join("folds.jsonl");
    report.write_fold_records(create(&path)?)?;
    outputs.push(path);
    let path = dir.join("aggregate.csv");
    report.write_aggregate_csv(create(&path)?)?;
    outputs.push(path);
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    let name = match &cli.command {
        Command::Synth => "synth",
        Command::Ingest { .. } => "ingest",
        Command::Label { .. } => "label",
        Command::Featurize { .. } => "featurize",
        Command::Train { .. } => "train",
        Command::Evaluate { .. } => "evaluate",
        Command::Compare { .. } => "compare",
        Command::Analyze { .. } => "analyze",
    };
    let mut m = RunManifest::new(name, g.config.as_deref(), g.jobs);
    let out = g.out.clone();
    match cli.command {
        Command::Synth => synth(&g, &mut m)?,
        Command::Ingest { input } => ingest(&input, &out, &mut m)?,
        Command::Label { questionnaires } => label(&questionnaires, &out, &mut m)?,
        Command::Featurize { input, labels } => featurize(&input, labels.as_deref(), &out, &mut m)?,
        Command::Train { table } => train(&g, &table, &mut m)?,
        Command::Evaluate { table } => evaluate(&g, &table, &mut m)?,
        Command::Compare { a, b } => compare(&a, &b, &out, &mut m)?,
        Command::Analyze {
            report,
            table,
            top_n,
            sequences,
            labels,
            feature,
            subsets,
        } => analyze(
            &report,
            &table,
            top_n,
            sequences.as_deref().zip(labels.as_deref()),
            &feature,
            subsets,
            &out,
            &mut m,
        )?,
    }
    let path = m.write(&out)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn synth(g: &Global, m: &mut RunManifest) -> Result<()> {
    let mut config: SynthConfig = from_table(read_config_table(g)?, "synth")?;
    if let Some(s) = g.seed {
        config.seed = s;
    }
    m.seeds.insert("synth".into(), config.seed);
    let output = generate_dataset(&config)?;
    m.outputs = write_synth(&g.out, &output)?;
    let path = g.out.join("synth_config.json");
    write_json(&path, &config)?;
    m.outputs.push(path);
    info!("generated {} sessions", output.dataset.sessions.len());
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    sessions: usize,
    frames: usize,
    features_in: usize,
    features_kept: usize,
    removed_features: Vec<String>,
    low_quality_sessions: Vec<String>,
}

fn ingest(input: &Path, out: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(require(input)?);
    let dataset = load_dataset(input)?;
    let (clean, removed) = clean_features(&dataset)?;
    let summary = IngestSummary {
        sessions: clean.sessions.len(),
        frames: clean.sessions.iter().map(|s| s.frames().len()).sum(),
        features_in: dataset.catalog.len(),
        features_kept: clean.catalog.len(),
        low_quality_sessions: clean
            .sessions
            .iter()
            .filter(|s| s.is_low_quality())
            .map(|s| s.key().to_string())
            .collect(),
        removed_features: removed,
    };
    m.outputs = write_dataset(out, &clean)?;
    let path = out.join("ingest_summary.json");
    write_json(&path, &summary)?;
    m.outputs.push(path);
    info!(
        "{} sessions, {} of {} features kept",
        summary.sessions, summary.features_kept, summary.features_in
    );
    Ok(())
}

#[derive(Serialize)]
struct LabelSummary {
    responses: usize,
    cronbach_alpha: Option<f64>,
    median: f64,
    empathic: usize,
    less_empathic: usize,
}

fn label(questionnaires: &Path, out: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(require(questionnaires)?);
    let responses = read_questionnaires(open(questionnaires)?)?;
    let labels = label_responses(&responses)?;
    let summary = LabelSummary {
        responses: responses.len(),
        cronbach_alpha: cronbach_alpha(&responses).ok(),
        median: labels.median,
        empathic: labels.count(Label::Empathic),
        less_empathic: labels.count(Label::LessEmpathic),
    };
    let path = out.join("labels.csv");
    labels.write_csv(create(&path)?)?;
    m.outputs.push(path);
    let path = out.join("label_summary.json");
    write_json(&path, &summary)?;
    m.outputs.push(path);
    info!(
        "median score {}; {} empathic, {} less empathic",
        summary.median, summary.empathic, summary.less_empathic
    );
    Ok(())
}

fn featurize(input: &Path, labels: Option<&Path>, out: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(require(input)?);
    let labels = match labels {
        Some(p) => {
            m.inputs.push(require(p)?);
            Some(read_labels(p)?)
        }
        None => None,
    };
    let (dataset, _) = clean_features(&load_dataset(input)?)?;
    let table = featurize_dataset(&dataset, labels.as_ref())?;
    let path = out.join("summary.csv");
    table.write_csv(create(&path)?)?;
    m.outputs.push(path);
    let sequences = resample_dataset(&dataset)?;
    let path = out.join("sequences.csv");
    write_sequences(create(&path)?, &sequences)?;
    m.outputs.push(path);
    info!(
        "{} samples x {} summary columns",
        table.len(),
        table.names.len()
    );
    Ok(())
}

fn train(g: &Global, table_path: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(require(table_path)?);
    let config = evaluate_config(g, m)?;
    let table = read_table(table_path)?;
    let x = table.matrix();
    let y = table.targets()?;
    let k = config.cv.k_best.min(x.ncols());
    // every row is on the training side of fold 0
    let everything = vec![1; y.len()];
    let artifacts: FoldArtifacts = fit_fold(
        x.view(),
        &y,
        &table.names,
        &everything,
        0,
        k,
        &config.cv.model,
    )?;
    let path = g.out.join("model.json");
    write_json(&path, &artifacts)?;
    m.outputs.push(path);
    info!(
        "trained {} on {} samples",
        config.cv.model.algorithm,
        y.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct RankingRow {
    rank: usize,
    algorithm: String,
    hyperparameters: String,
    accuracy: f64,
    auc_roc: Option<f64>,
}

fn evaluate(g: &Global, table_path: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(require(table_path)?);
    let config = evaluate_config(g, m)?;
    let table = read_table(table_path)?;
    if config.grid.is_empty() {
        let report = run_cv(&table, &config.cv)?;
        write_report(&g.out, &report, &mut m.outputs)?;
        println!(
            "accuracy={} auc_roc={} folds={}",
            report.aggregate.accuracy,
            report
                .aggregate
                .auc_roc
                .map(|v| v.to_string())
                .unwrap_or_else(|| "undefined".into()),
            report.folds.len()
        );
        return Ok(());
    }
    let ranked = grid_search(&table, &config.grid, &config.cv)?;
    let path = g.out.join("ranking.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for (i, run) in ranked.iter().enumerate() {
        w.serialize(RankingRow {
            rank: i + 1,
            algorithm: run.spec.algorithm.to_string(),
            hyperparameters: serde_json::to_string(&run.spec.hyperparameters)?,
            accuracy: run.report.aggregate.accuracy,
            auc_roc: run.report.aggregate.auc_roc,
        })?;
        write_report(
            &g.out.join(format!("rank_{:02}", i + 1)),
            &run.report,
            &mut m.outputs,
        )?;
    }
    w.flush()?;
    m.outputs.push(path);
    println!(
        "best: {} accuracy={}",
        ranked[0].spec.algorithm, ranked[0].report.aggregate.accuracy
    );
    Ok(())
}

fn read_report(path: &Path) -> Result<CVReport> {
    let text = fs::read_to_string(require(path)?)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(CVReport::from_json(&text)?)
}

fn compare(a: &Path, b: &Path, out: &Path, m: &mut RunManifest) -> Result<()> {
    m.inputs.push(require(a)?);
    m.inputs.push(require(b)?);
    let result = compare_models(&read_report(a)?, &read_report(b)?)?;
    let path = out.join("comparison.json");
    write_json(&path, &result)?;
    m.outputs.push(path);
    println!("statistic={} p={}", result.statistic, result.p_value);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    report_path: &Path,
    table_path: &Path,
    top_n: usize,
    curves: Option<(&Path, &Path)>,
    feature: &str,
    subsets: bool,
    out: &Path,
    m: &mut RunManifest,
) -> Result<()> {
    m.inputs.push(require(report_path)?);
    m.inputs.push(require(table_path)?);
    let report = read_report(report_path)?;
    let table = read_table(table_path)?;
    let findings = rank_feature_contributions(&report, &table, top_n)?;
    let path = out.join("findings.csv");
    write_findings_csv(create(&path)?, &findings)?;
    m.outputs.push(path);

    if let Some((seq_path, labels_path)) = curves {
        m.inputs.push(require(seq_path)?);
        m.inputs.push(require(labels_path)?);
        let sequences = read_sequences(open(seq_path)?)?;
        let labels = read_labels(labels_path)?;
        let curves = class_conditional_curves(&sequences, &labels, feature)?;
        let path = out.join(format!("curves_{feature}.csv"));
        curves.write_csv(create(&path)?)?;
        m.outputs.push(path);
        println!(
            "{feature}: empathic mean {} vs less empathic {}",
            curves.empathic_mean, curves.less_empathic_mean
        );
    }

    if subsets {
        let mut bases: Vec<&str> = table
            .names
            .iter()
            .filter_map(|n| split_summary_name(n).map(|(b, _)| b))
            .collect();
        bases.dedup();
        let mut unique = BTreeMap::new();
        for (i, b) in bases.iter().enumerate() {
            unique.entry(*b).or_insert(i);
        }
        let mut ordered: Vec<(&str, usize)> = unique.into_iter().collect();
        ordered.sort_by_key(|&(_, i)| i);
        let names: Vec<&str> = ordered.into_iter().map(|(b, _)| b).collect();
        let groups = group_features(&FeatureCatalog::from_names(&names)?);
        let results = subset_evaluation(&table, &groups, &report.config)?;
        let path = out.join("subsets.csv");
        write_subsets_csv(create(&path)?, &results)?;
        m.outputs.push(path);
    }
    for f in findings.iter().take(5) {
        println!(
            "{} importance={:.4} significant={}",
            f.feature, f.importance, f.significant
        );
    }
    Ok(())
}
