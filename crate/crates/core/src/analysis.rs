//! Interpretability outputs: ranked feature contributions with group
//! differences, class-conditional time curves and per-group ablation.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{split_summary_name, ResampledSequence, SummaryTable};
use crate::harness::{run_cv, Aggregate, CVConfig, CVReport};
use crate::ingest::FeatureGroup;
use crate::labels::{Label, LabelSet};
use crate::learners::supports_importances;
use crate::stats::{welch_t_test, TestResult};

/// Significance level for the per-feature group tests.
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherInEmpathic,
    LowerInEmpathic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFinding {
    /// Summary column, e.g. `AU14_r__mean`.
    pub feature: String,
    pub importance: f64,
    pub empathic_mean: f64,
    pub less_empathic_mean: f64,
    /// `None` when both groups are constant.
    pub welch: Option<TestResult>,
    pub direction: Direction,
    pub significant: bool,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean normalized importance of every summary column over all folds of the
/// report (0 in folds where the column was not selected).
pub fn mean_importances(report: &CVReport, names: &[String]) -> Result<Vec<f64>> {
    if !supports_importances(report.config.model.algorithm) {
        return Err(Error::Unsupported(format!(
            "{} does not provide feature importances",
            report.config.model.algorithm
        )));
    }
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut totals = vec![0.0; names.len()];
    for fold in &report.folds {
        let imp = fold
            .importances
            .as_ref()
            .ok_or_else(|| Error::Unsupported("fold without importances".into()))?;
        for (name, v) in fold.selected_features.iter().zip(imp) {
            let &j = index.get(name.as_str()).ok_or_else(|| {
                Error::Comparison(format!("report feature {name} is not in the table"))
            })?;
            totals[j] += v;
        }
    }
    let folds = report.folds.len().max(1) as f64;
    Ok(totals.into_iter().map(|t| t / folds).collect())
}

/// The `top_n` summary columns by mean importance, each with a Welch test of
/// empathic against less-empathic sample values.
pub fn rank_feature_contributions(
    report: &CVReport,
    table: &SummaryTable,
    top_n: usize,
) -> Result<Vec<FeatureFinding>> {
    if table.ids() != report.sample_ids {
        return Err(Error::Comparison(
            "table samples differ from the report".into(),
        ));
    }
    let importances = mean_importances(report, &table.names)?;
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    let y = table.targets()?;
    let x = table.matrix();
    order
        .into_iter()
        .take(top_n)
        .map(|j| {
            let col = x.column(j);
            let emp: Vec<f64> = (0..y.len()).filter(|&i| y[i]).map(|i| col[i]).collect();
            let less: Vec<f64> = (0..y.len()).filter(|&i| !y[i]).map(|i| col[i]).collect();
            let welch = match welch_t_test(&emp, &less) {
                Ok(t) => Some(t),
                Err(Error::Validation(_)) => None,
                Err(e) => return Err(e),
            };
            let (em, lm) = (mean(&emp), mean(&less));
            Ok(FeatureFinding {
                feature: table.names[j].clone(),
                importance: importances[j],
                empathic_mean: em,
                less_empathic_mean: lm,
                significant: welch.as_ref().is_some_and(|t| t.p_value < ALPHA),
                welch,
                direction: if em >= lm {
                    Direction::HigherInEmpathic
                } else {
                    Direction::LowerInEmpathic
                },
            })
        })
        .collect()
}

pub fn write_findings_csv<W: Write>(writer: W, findings: &[FeatureFinding]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "rank",
        "feature",
        "base_feature",
        "statistic",
        "importance",
        "empathic_mean",
        "less_empathic_mean",
        "direction",
        "welch_t",
        "welch_dof",
        "p_value",
        "significant",
    ])?;
    for (rank, f) in findings.iter().enumerate() {
        let (base, stat) = split_summary_name(&f.feature)
            .map(|(b, s)| (b.to_string(), s.to_string()))
            .unwrap_or_else(|| (f.feature.clone(), String::new()));
        let direction = match f.direction {
            Direction::HigherInEmpathic => "higher_in_empathic",
            Direction::LowerInEmpathic => "lower_in_empathic",
        };
        let welch = |g: fn(&TestResult) -> f64| {
            f.welch
                .as_ref()
                .map(|t| g(t).to_string())
                .unwrap_or_default()
        };
        w.write_record([
            (rank + 1).to_string(),
            f.feature.clone(),
            base,
            stat,
            f.importance.to_string(),
            f.empathic_mean.to_string(),
            f.less_empathic_mean.to_string(),
            direction.to_string(),
            welch(|t| t.statistic),
            welch(|t| t.dof),
            welch(|t| t.p_value),
            f.significant.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<findings>", e))?;
    Ok(())
}

/// Per-second class means of one feature. Bin `k` is the `k`-th second of
/// each session; only sessions covering that second contribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCurves {
    pub feature: String,
    pub empathic: Vec<Option<f64>>,
    pub less_empathic: Vec<Option<f64>>,
    /// Mean over empathic sessions of each session's time average.
    pub empathic_mean: f64,
    pub less_empathic_mean: f64,
    pub empathic_sessions: usize,
    pub less_empathic_sessions: usize,
}

pub fn class_conditional_curves(
    sequences: &[ResampledSequence],
    labels: &LabelSet,
    feature: &str,
) -> Result<ClassCurves> {
    // [class][bin] = (sum, count)
    let mut bins: [Vec<(f64, usize)>; 2] = [Vec::new(), Vec::new()];
    let mut session_means: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for seq in sequences {
        let column = seq.column(feature).ok_or_else(|| {
            Error::Validation(format!("feature {feature} is not in sequence {}", seq.key))
        })?;
        let Some(label) = labels.label(&seq.key) else {
            log::warn!("sequence {} has no label and is skipped", seq.key);
            continue;
        };
        let c = usize::from(label == Label::Empathic);
        if bins[c].len() < column.len() {
            bins[c].resize(column.len(), (0.0, 0));
        }
        for (k, v) in column.iter().enumerate() {
            bins[c][k].0 += v;
            bins[c][k].1 += 1;
        }
        session_means[c].push(mean(&column));
    }
    if session_means.iter().any(Vec::is_empty) {
        return Err(Error::DegenerateLabels);
    }
    let len = bins[0].len().max(bins[1].len());
    let curve = |c: usize| -> Vec<Option<f64>> {
        (0..len)
            .map(|k| {
                bins[c]
                    .get(k)
                    .filter(|b| b.1 > 0)
                    .map(|&(s, n)| s / n as f64)
            })
            .collect()
    };
    Ok(ClassCurves {
        feature: feature.to_string(),
        empathic: curve(1),
        less_empathic: curve(0),
        empathic_mean: mean(&session_means[1]),
        less_empathic_mean: mean(&session_means[0]),
        empathic_sessions: session_means[1].len(),
        less_empathic_sessions: session_means[0].len(),
    })
}

impl ClassCurves {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["second", "empathic", "less_empathic"])?;
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (k, (e, l)) in self.empathic.iter().zip(&self.less_empathic).enumerate() {
            w.write_record([k.to_string(), cell(*e), cell(*l)])?;
        }
        w.flush().map_err(|e| Error::io("<curves>", e))?;
        Ok(())
    }
}

/// Name of the all-features entry in a subset comparison.
pub const ALL_FEATURES: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub subset: String,
    pub summary_columns: usize,
    pub k_best: usize,
    pub aggregate: Aggregate,
}

/// Cross-validation restricted to each group's summary columns, followed by
/// the all-features run.
pub fn subset_evaluation(
    table: &SummaryTable,
    groups: &BTreeMap<FeatureGroup, Vec<String>>,
    config: &CVConfig,
) -> Result<Vec<SubsetResult>> {
    let mut results = Vec::with_capacity(groups.len() + 1);
    for (group, features) in groups {
        let columns: Vec<String> = table
            .names
            .iter()
            .filter(|n| {
                split_summary_name(n).is_some_and(|(base, _)| features.iter().any(|f| f == base))
            })
            .cloned()
            .collect();
        if columns.is_empty() {
            log::warn!(
                "feature group {} has no summary columns and is skipped",
                group.as_str()
            );
            continue;
        }
        let cfg = CVConfig {
            k_best: config.k_best.min(columns.len()),
            ..config.clone()
        };
        let report = run_cv(&table.select_columns(&columns)?, &cfg)?;
        results.push(SubsetResult {
            subset: group.as_str().to_string(),
            summary_columns: columns.len(),
            k_best: cfg.k_best,
            aggregate: report.aggregate,
        });
    }
    let report = run_cv(table, config)?;
    results.push(SubsetResult {
        subset: ALL_FEATURES.to_string(),
        summary_columns: table.names.len(),
        k_best: config.k_best,
        aggregate: report.aggregate,
    });
    Ok(results)
}

pub fn write_subsets_csv<W: Write>(writer: W, results: &[SubsetResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "subset",
        "summary_columns",
        "k_best",
        "accuracy",
        "auc_roc",
        "auc_pr",
        "precision_macro",
        "recall_macro",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in results {
        let a = &r.aggregate;
        w.write_record([
            r.subset.clone(),
            r.summary_columns.to_string(),
            r.k_best.to_string(),
            a.accuracy.to_string(),
            opt(a.auc_roc),
            opt(a.auc_pr),
            a.precision_macro.to_string(),
            a.recall_macro.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<subsets>", e))?;
    Ok(())
}
