//! Cross-validation engine: per-fold standardization and feature selection,
//! stratified repeated folds, aggregation, paired model comparison and a
//! small grid search.

mod scaler;
mod select;

use std::io::Write;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SummaryTable;
use crate::learners::{self, ModelSpec, TrainedModel};
use crate::seed;
use crate::stats::{classification_metrics, mcnemar_test, MetricReport, TestResult};

pub use scaler::{standardize_apply, standardize_fit, Scaler};
pub use select::select_top_k_features;

/// How paired outcomes are formed for model comparison.
pub const MCNEMAR_PAIRING: &str = "pooled_across_repeats";

fn default_folds() -> usize {
    5
}
fn default_repeats() -> usize {
    10
}
fn default_k_best() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CVConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_k_best")]
    pub k_best: usize,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
}

impl CVConfig {
    pub fn new(model: ModelSpec, seed: u64) -> Self {
        CVConfig {
            folds: default_folds(),
            repeats: default_repeats(),
            k_best: default_k_best(),
            seed,
            model,
        }
    }

    pub fn validate(&self, feature_count: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Validation(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        if self.repeats < 1 {
            return Err(Error::Validation("repeats must be at least 1".into()));
        }
        if self.k_best < 1 || self.k_best > feature_count {
            return Err(Error::Validation(format!(
                "k_best = {} must lie in 1..={feature_count}",
                self.k_best
            )));
        }
        self.model.params()?;
        Ok(())
    }
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin
/// starting from fold 0.
pub fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; y.len()];
    for class in [false, true] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.len() < folds {
            return Err(Error::Stratification(format!(
                "class {} has {} samples, fewer than {folds} folds",
                u8::from(class),
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Everything fitted on the training portion of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldArtifacts {
    pub scaler: Scaler,
    /// Selected column indices, best first.
    pub selected: Vec<usize>,
    pub model: TrainedModel,
}

fn indices_where(assignment: &[usize], pred: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..assignment.len())
        .filter(|&i| pred(assignment[i]))
        .collect()
}

/// Fits scaler, selector and model for `fold`, reading only rows whose
/// assignment differs from `fold`.
pub fn fit_fold(
    x: ArrayView2<f64>,
    y: &[bool],
    names: &[String],
    assignment: &[usize],
    fold: usize,
    k_best: usize,
    spec: &ModelSpec,
) -> Result<FoldArtifacts> {
    let train = indices_where(assignment, |f| f != fold);
    let train_x = x.select(Axis(0), &train);
    let train_y: Vec<bool> = train.iter().map(|&i| y[i]).collect();
    let scaler = standardize_fit(train_x.view())?;
    let scaled = standardize_apply(&scaler, train_x.view())?;
    let selected = select_top_k_features(scaled.view(), &train_y, k_best)?;
    let mut model = learners::fit(spec, scaled.select(Axis(1), &selected).view(), &train_y)?;
    model.feature_names = Some(selected.iter().map(|&j| names[j].clone()).collect());
    Ok(FoldArtifacts {
        scaler,
        selected,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub test_indices: Vec<usize>,
    pub test_ids: Vec<String>,
    pub y_true: Vec<bool>,
    pub predictions: Vec<bool>,
    pub scores: Vec<f64>,
    pub metrics: MetricReport,
    pub selected_features: Vec<String>,
    /// Normalized importances aligned with `selected_features`.
    pub importances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: f64,
    /// Mean over folds where the metric is defined.
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub fold_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub config: CVConfig,
    pub sample_ids: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub aggregate: Aggregate,
    /// `correctness[repeat][sample]`: out-of-fold prediction was right.
    pub correctness: Vec<Vec<bool>>,
    pub mcnemar_pairing: String,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn aggregate(folds: &[FoldResult]) -> Aggregate {
    let metric =
        |f: fn(&MetricReport) -> Option<f64>| mean(folds.iter().filter_map(|r| f(&r.metrics)));
    Aggregate {
        accuracy: metric(|m| Some(m.accuracy)).unwrap_or(f64::NAN),
        auc_roc: metric(|m| m.auc_roc),
        auc_pr: metric(|m| m.auc_pr),
        precision_macro: metric(|m| Some(m.precision_macro)).unwrap_or(f64::NAN),
        recall_macro: metric(|m| Some(m.recall_macro)).unwrap_or(f64::NAN),
        fold_count: folds.len(),
    }
}

/// Per-fold model seed, fixed by the model seed, repeat and fold.
pub fn fold_seed(model_seed: u64, repeat: usize, fold: usize) -> u64 {
    seed::derive(seed::derive(model_seed, repeat as u64), fold as u64)
}

/// Fold assignments for every repeat.
pub fn partitions(y: &[bool], config: &CVConfig) -> Result<Vec<Vec<usize>>> {
    (0..config.repeats)
        .map(|r| stratified_folds(y, config.folds, seed::derive(config.seed, r as u64)))
        .collect()
}

/// Repeated stratified cross-validation on a labelled summary table.
pub fn run_cv(table: &SummaryTable, config: &CVConfig) -> Result<CVReport> {
    let x = table.matrix();
    let y = table.targets()?;
    let ids = table.ids();
    config.validate(x.ncols())?;
    let parts = partitions(&y, config)?;
    let tasks: Vec<(usize, usize)> = (0..config.repeats)
        .flat_map(|r| (0..config.folds).map(move |f| (r, f)))
        .collect();
    let folds: Vec<FoldResult> = tasks
        .par_iter()
        .map(|&(r, f)| {
            let spec = config.model.reseeded(fold_seed(config.model.seed, r, f));
            let art = fit_fold(
                x.view(),
                &y,
                &table.names,
                &parts[r],
                f,
                config.k_best,
                &spec,
            )?;
            let test = indices_where(&parts[r], |g| g == f);
            let test_x = standardize_apply(&art.scaler, x.select(Axis(0), &test).view())?;
            let test_x = test_x.select(Axis(1), &art.selected);
            let scores = learners::predict_scores(&art.model, test_x.view())?;
            let predictions = learners::labels_from_scores(&scores, art.model.score_kind());
            let y_true: Vec<bool> = test.iter().map(|&i| y[i]).collect();
            let metrics = classification_metrics(&y_true, &predictions, &scores)?;
            let importances = if learners::supports_importances(spec.algorithm) {
                Some(learners::feature_importances(&art.model)?)
            } else {
                None
            };
            Ok(FoldResult {
                repeat: r,
                fold: f,
                test_ids: test.iter().map(|&i| ids[i].clone()).collect(),
                test_indices: test,
                y_true,
                predictions,
                scores,
                metrics,
                selected_features: art.model.feature_names.clone().unwrap_or_default(),
                importances,
            })
        })
        .collect::<Result<_>>()?;
    let mut correctness = vec![vec![false; y.len()]; config.repeats];
    for fr in &folds {
        for (k, &i) in fr.test_indices.iter().enumerate() {
            correctness[fr.repeat][i] = fr.predictions[k] == fr.y_true[k];
        }
    }
    Ok(CVReport {
        config: config.clone(),
        sample_ids: ids,
        aggregate: aggregate(&folds),
        folds,
        correctness,
        mcnemar_pairing: MCNEMAR_PAIRING.to_string(),
    })
}

/// `run_cv` on a dedicated pool of `jobs` threads.
pub fn run_cv_with_jobs(table: &SummaryTable, config: &CVConfig, jobs: usize) -> Result<CVReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_cv(table, config))
}

/// McNemar test on out-of-fold correctness pooled over all repeats.
pub fn compare_models(a: &CVReport, b: &CVReport) -> Result<TestResult> {
    let same = a.sample_ids == b.sample_ids
        && a.config.folds == b.config.folds
        && a.config.repeats == b.config.repeats
        && a.config.seed == b.config.seed
        && a.folds.len() == b.folds.len()
        && a.folds.iter().zip(&b.folds).all(|(x, y)| {
            x.repeat == y.repeat && x.fold == y.fold && x.test_indices == y.test_indices
        });
    if !same {
        return Err(Error::Comparison(
            "reports do not share samples, folds and seeds".into(),
        ));
    }
    let pa: Vec<bool> = a.correctness.concat();
    let pb: Vec<bool> = b.correctness.concat();
    mcnemar_test(&pa, &pb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRun {
    pub spec: ModelSpec,
    pub report: CVReport,
}

/// Runs cross-validation for every spec and ranks by accuracy, then ROC-AUC.
pub fn grid_search(
    table: &SummaryTable,
    grid: &[ModelSpec],
    config: &CVConfig,
) -> Result<Vec<RankedRun>> {
    if grid.is_empty() {
        return Err(Error::Validation("model grid is empty".into()));
    }
    let mut runs = grid
        .iter()
        .map(|spec| {
            let cfg = CVConfig {
                model: spec.clone(),
                ..config.clone()
            };
            Ok(RankedRun {
                spec: spec.clone(),
                report: run_cv(table, &cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let key = |r: &RankedRun| {
        (
            r.report.aggregate.accuracy,
            r.report.aggregate.auc_roc.unwrap_or(f64::NEG_INFINITY),
        )
    };
    runs.sort_by(|p, q| {
        let (pa, pu) = key(p);
        let (qa, qu) = key(q);
        qa.total_cmp(&pa).then(qu.total_cmp(&pu))
    });
    Ok(runs)
}

impl CVReport {
    /// One JSON record per fold.
    pub fn write_fold_records<W: Write>(&self, mut writer: W) -> Result<()> {
        for fold in &self.folds {
            serde_json::to_writer(&mut writer, fold)?;
            writeln!(writer).map_err(|e| Error::io("<fold records>", e))?;
        }
        Ok(())
    }

    pub fn write_aggregate_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "algorithm",
            "folds",
            "repeats",
            "k_best",
            "fold_count",
            "accuracy",
            "auc_roc",
            "auc_pr",
            "precision_macro",
            "recall_macro",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let a = &self.aggregate;
        w.write_record([
            self.config.model.algorithm.to_string(),
            self.config.folds.to_string(),
            self.config.repeats.to_string(),
            self.config.k_best.to_string(),
            a.fold_count.to_string(),
            a.accuracy.to_string(),
            opt(a.auc_roc),
            opt(a.auc_pr),
            a.precision_macro.to_string(),
            a.recall_macro.to_string(),
        ])?;
        w.flush().map_err(|e| Error::io("<aggregate>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SummarySample;
    use crate::ingest::{SessionKey, StoryId};
    use crate::labels::Label;
    use crate::learners::Algorithm;
    use rand::Rng;
    use std::sync::Arc;

    pub(crate) fn table(n: usize, p: usize, signal: f64, seed: u64) -> SummaryTable {
        let mut rng = crate::seed::rng(seed);
        let names: Vec<String> = (0..p).map(|j| format!("pose_Tx__f{j}")).collect();
        let arc: Arc<[String]> = names.clone().into();
        let samples = (0..n)
            .map(|i| {
                let pos = i % 2 == 0;
                let mut vector: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
                if pos {
                    vector[0] += signal;
                }
                SummarySample {
                    key: SessionKey {
                        participant_id: format!("P{i:03}"),
                        story_id: StoryId::S1,
                    },
                    names: arc.clone(),
                    vector,
                    label: Some(Label::from_positive(pos)),
                }
            })
            .collect();
        SummaryTable::new(names, samples).unwrap()
    }

    fn quick(alg: Algorithm) -> CVConfig {
        CVConfig {
            folds: 5,
            repeats: 3,
            k_best: 3,
            seed: 11,
            model: ModelSpec::with_defaults(alg, 2),
        }
    }

    #[test]
    fn folds_are_stratified_and_cover_every_sample() {
        let y: Vec<bool> = (0..23).map(|i| i % 3 == 0).collect();
        let a = stratified_folds(&y, 5, 1).unwrap();
        for f in 0..5 {
            let pos = (0..23).filter(|&i| a[i] == f && y[i]).count();
            let neg = (0..23).filter(|&i| a[i] == f && !y[i]).count();
            assert!((1..=2).contains(&pos), "{pos}");
            assert!((3..=4).contains(&neg), "{neg}");
        }
        assert_eq!(a, stratified_folds(&y, 5, 1).unwrap());
        assert_ne!(a, stratified_folds(&y, 5, 2).unwrap());
    }

    proptest::proptest! {
        #[test]
        fn fold_class_counts_differ_by_at_most_one(
            y in proptest::collection::vec(proptest::bool::ANY, 10..80),
            folds in 2usize..6,
            s in 0u64..1000,
        ) {
            let pos = y.iter().filter(|&&v| v).count();
            proptest::prop_assume!(pos >= folds && y.len() - pos >= folds);
            let a = stratified_folds(&y, folds, s).unwrap();
            for class in [false, true] {
                let counts: Vec<usize> = (0..folds)
                    .map(|f| (0..y.len()).filter(|&i| a[i] == f && y[i] == class).count())
                    .collect();
                let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                proptest::prop_assert!(hi - lo <= 1);
            }
        }
    }

    #[test]
    fn too_few_in_a_class() {
        let y = [true, true, true, false, false, false, false, false];
        assert!(matches!(
            stratified_folds(&y, 5, 0),
            Err(Error::Stratification(_))
        ));
    }

    #[test]
    fn fifty_folds_and_each_sample_tested_once_per_repeat() {
        let t = table(40, 6, 1.0, 1);
        let cfg = CVConfig {
            repeats: 10,
            ..quick(Algorithm::LogisticRegression)
        };
        let report = run_cv(&t, &cfg).unwrap();
        assert_eq!(report.folds.len(), 50);
        let mut count = [0; 40];
        for r in 0..10 {
            let mut seen = [false; 40];
            for f in report.folds.iter().filter(|f| f.repeat == r) {
                for &i in &f.test_indices {
                    assert!(!seen[i]);
                    seen[i] = true;
                    count[i] += 1;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
        assert!(count.iter().all(|&c| c == 10));
        let mean_acc = report.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / 50.0;
        assert!((report.aggregate.accuracy - mean_acc).abs() < 1e-12);
    }

    #[test]
    fn chance_baseline_is_half() {
        let t = table(42, 4, 0.0, 3);
        let report = run_cv(&t, &quick(Algorithm::ChanceBaseline)).unwrap();
        assert_eq!(report.aggregate.accuracy, 0.5);
        assert!(report.folds.iter().all(|f| f.importances.is_none()));
    }

    #[test]
    fn self_comparison_and_mismatch() {
        let t = table(30, 4, 2.0, 5);
        let a = run_cv(&t, &quick(Algorithm::DecisionTree)).unwrap();
        assert_eq!(compare_models(&a, &a).unwrap().p_value, 1.0);
        let other = CVConfig {
            seed: 12,
            ..quick(Algorithm::DecisionTree)
        };
        let b = run_cv(&t, &other).unwrap();
        assert!(matches!(compare_models(&a, &b), Err(Error::Comparison(_))));
    }

    #[test]
    fn config_validation() {
        let t = table(20, 4, 0.0, 5);
        for cfg in [
            CVConfig {
                folds: 1,
                ..quick(Algorithm::DecisionTree)
            },
            CVConfig {
                repeats: 0,
                ..quick(Algorithm::DecisionTree)
            },
            CVConfig {
                k_best: 5,
                ..quick(Algorithm::DecisionTree)
            },
            CVConfig {
                k_best: 0,
                ..quick(Algorithm::DecisionTree)
            },
        ] {
            assert!(run_cv(&t, &cfg).is_err());
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let t = table(30, 6, 1.0, 7);
        let cfg = quick(Algorithm::RandomForest);
        let a = run_cv_with_jobs(&t, &cfg, 1).unwrap().to_json().unwrap();
        let b = run_cv_with_jobs(&t, &cfg, 4).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_ranks_signal_above_chance() {
        let t = table(40, 5, 3.0, 9);
        let grid = [
            ModelSpec::with_defaults(Algorithm::ChanceBaseline, 0),
            ModelSpec::with_defaults(Algorithm::LogisticRegression, 0),
        ];
        let ranked = grid_search(&t, &grid, &quick(Algorithm::ChanceBaseline)).unwrap();
        assert_eq!(ranked[0].spec.algorithm, Algorithm::LogisticRegression);
        assert!(grid_search(&t, &[], &quick(Algorithm::ChanceBaseline)).is_err());
        let single = grid_search(&t, &grid[1..], &quick(Algorithm::ChanceBaseline)).unwrap();
        let direct = run_cv(
            &t,
            &CVConfig {
                model: grid[1].clone(),
                ..quick(Algorithm::ChanceBaseline)
            },
        )
        .unwrap();
        assert_eq!(single[0].report, direct);
    }

    #[test]
    fn config_from_toml_like_json() {
        let cfg: CVConfig = serde_json::from_str(
            r#"{"seed": 3, "model": {"algorithm": "gradient_boosted_trees"}}"#,
        )
        .unwrap();
        assert_eq!(
            (cfg.folds, cfg.repeats, cfg.k_best, cfg.seed),
            (5, 10, 25, 3)
        );
        assert!(serde_json::from_str::<CVConfig>(
            r#"{"fold": 3, "model": {"algorithm": "linear_svm"}}"#
        )
        .is_err());
    }

    #[test]
    fn exports() {
        let t = table(20, 4, 1.0, 5);
        let r = run_cv(
            &t,
            &CVConfig {
                repeats: 1,
                ..quick(Algorithm::DecisionTree)
            },
        )
        .unwrap();
        let mut lines = Vec::new();
        r.write_fold_records(&mut lines).unwrap();
        assert_eq!(String::from_utf8(lines).unwrap().lines().count(), 5);
        let mut agg = Vec::new();
        r.write_aggregate_csv(&mut agg).unwrap();
        assert_eq!(String::from_utf8(agg).unwrap().lines().count(), 2);
        assert_eq!(CVReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
