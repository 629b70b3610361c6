//! Binary classifiers behind one fit / predict / importance contract.
//!
//! Every learner is deterministic given its [`ModelSpec`] (including the
//! seed). Scores are probabilities in [0, 1] except for `linear_svm` and
//! `adaboost`, which return real-valued margins (see [`ScoreKind`]).

pub mod adaboost;
pub mod forest;
pub mod gbt;
pub mod linear;
pub mod params;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
pub use params::{ParamValue, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    LogisticRegression,
    LinearSvm,
    DecisionTree,
    Bagging,
    RandomForest,
    Adaboost,
    GradientBoostedTrees,
    ChanceBaseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::LogisticRegression,
        Algorithm::LinearSvm,
        Algorithm::DecisionTree,
        Algorithm::Bagging,
        Algorithm::RandomForest,
        Algorithm::Adaboost,
        Algorithm::GradientBoostedTrees,
        Algorithm::ChanceBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::LinearSvm => "linear_svm",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::Bagging => "bagging",
            Algorithm::RandomForest => "random_forest",
            Algorithm::Adaboost => "adaboost",
            Algorithm::GradientBoostedTrees => "gradient_boosted_trees",
            Algorithm::ChanceBaseline => "chance_baseline",
        }
    }

    pub fn score_kind(self) -> ScoreKind {
        match self {
            Algorithm::LinearSvm | Algorithm::Adaboost => ScoreKind::Margin,
            _ => ScoreKind::Probability,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Probability,
    Margin,
}

impl ScoreKind {
    /// Scores strictly above the threshold are positive.
    pub fn threshold(self) -> f64 {
        match self {
            ScoreKind::Probability => 0.5,
            ScoreKind::Margin => 0.0,
        }
    }
}

#[derive(Deserialize)]
struct RawSpec {
    algorithm: Algorithm,
    #[serde(default)]
    hyperparameters: BTreeMap<String, ParamValue>,
    #[serde(default)]
    seed: u64,
}

/// Algorithm choice, hyperparameters and seed. Unknown or out-of-range
/// hyperparameters are rejected at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub hyperparameters: BTreeMap<String, ParamValue>,
    pub seed: u64,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ModelSpec::new(raw.algorithm, raw.hyperparameters, raw.seed)
    }
}

impl ModelSpec {
    pub fn new(
        algorithm: Algorithm,
        hyperparameters: BTreeMap<String, ParamValue>,
        seed: u64,
    ) -> Result<Self> {
        params::resolve(algorithm, &hyperparameters)?;
        Ok(ModelSpec {
            algorithm,
            hyperparameters,
            seed,
        })
    }

    pub fn with_defaults(algorithm: Algorithm, seed: u64) -> Self {
        ModelSpec {
            algorithm,
            hyperparameters: BTreeMap::new(),
            seed,
        }
    }

    /// Builder-style hyperparameter override.
    pub fn set(mut self, key: &str, value: impl Into<ParamValue>) -> Result<Self> {
        self.hyperparameters.insert(key.to_string(), value.into());
        params::resolve(self.algorithm, &self.hyperparameters)?;
        Ok(self)
    }

    /// Gradient boosting with learning rate 0.12, depth 6 and uniform sampling.
    pub fn reference_gbt(seed: u64) -> Self {
        let hp = [
            ("learning_rate", ParamValue::Number(0.12)),
            ("max_depth", ParamValue::Number(6.0)),
            ("sampling", ParamValue::Text("uniform".into())),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        ModelSpec::new(Algorithm::GradientBoostedTrees, hp, seed)
            .expect("reference configuration is valid")
    }

    pub fn params(&self) -> Result<Params> {
        params::resolve(self.algorithm, &self.hyperparameters)
    }

    /// Copy of the spec with a different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        ModelSpec {
            seed,
            ..self.clone()
        }
    }
}

/// Fitted parameters of each algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Fitted {
    Linear(linear::LinearModel),
    Tree(tree::Tree),
    Ensemble(forest::VoteEnsemble),
    Adaboost(adaboost::Adaboost),
    Gbt(gbt::GbtModel),
    Chance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    pub fitted: Fitted,
}

impl TrainedModel {
    pub fn score_kind(&self) -> ScoreKind {
        self.spec.algorithm.score_kind()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn check_shape(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.feature_count {
            return Err(Error::Validation(format!(
                "model expects {} features, got {}",
                self.feature_count,
                x.ncols()
            )));
        }
        Ok(())
    }
}

fn check_training_data(spec: &ModelSpec, x: &ArrayView2<f64>, y: &[bool]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Validation(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Validation("training matrix is empty".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "training matrix has non-finite values".into(),
        ));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if spec.algorithm != Algorithm::ChanceBaseline && (positives == 0 || positives == y.len()) {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

pub fn fit(spec: &ModelSpec, x: ArrayView2<f64>, y: &[bool]) -> Result<TrainedModel> {
    check_training_data(spec, &x, y)?;
    let fitted = match spec.params()? {
        Params::Logistic(p) => Fitted::Linear(linear::fit_logistic(x, y, &p)),
        Params::Svm(p) => Fitted::Linear(linear::fit_svm(x, y, &p, &mut seed::rng(spec.seed))),
        Params::Tree(p) => Fitted::Tree(tree::fit_tree(x, y, &vec![1.0; y.len()], &p, None)),
        Params::Ensemble(p) => Fitted::Ensemble(forest::fit_ensemble(x, y, &p, spec.seed)),
        Params::Adaboost(p) => Fitted::Adaboost(adaboost::fit_adaboost(x, y, &p)),
        Params::Gbt(p) => Fitted::Gbt(gbt::train(x, y, &p, spec.seed).0),
        Params::Chance => Fitted::Chance,
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_count: x.ncols(),
        feature_names: None,
        fitted,
    })
}

/// Per-sample scores; probabilities or margins depending on the algorithm.
pub fn predict_scores(model: &TrainedModel, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    model.check_shape(&x)?;
    let rows = x.rows().into_iter();
    let scores = match &model.fitted {
        Fitted::Linear(m) => match model.score_kind() {
            ScoreKind::Probability => rows.map(|r| linear::sigmoid(m.decision(r))).collect(),
            ScoreKind::Margin => rows.map(|r| m.decision(r)).collect(),
        },
        Fitted::Tree(t) => rows.map(|r| t.predict_row(r)).collect(),
        Fitted::Ensemble(e) => rows.map(|r| e.vote_fraction(r)).collect(),
        Fitted::Adaboost(a) => rows.map(|r| a.margin(r)).collect(),
        Fitted::Gbt(g) => rows.map(|r| g.probability(r)).collect(),
        Fitted::Chance => vec![1.0; x.nrows()],
    };
    Ok(scores)
}

pub fn labels_from_scores(scores: &[f64], kind: ScoreKind) -> Vec<bool> {
    let threshold = kind.threshold();
    scores.iter().map(|&s| s > threshold).collect()
}

pub fn predict_labels(model: &TrainedModel, x: ArrayView2<f64>) -> Result<Vec<bool>> {
    Ok(labels_from_scores(
        &predict_scores(model, x)?,
        model.score_kind(),
    ))
}

/// Normalized per-feature importances: total split gain for tree models,
/// absolute weights for linear models.
pub fn feature_importances(model: &TrainedModel) -> Result<Vec<f64>> {
    match &model.fitted {
        Fitted::Linear(m) => Ok(tree::normalize(
            &m.weights.iter().map(|w| w.abs()).collect::<Vec<_>>(),
        )),
        Fitted::Tree(t) => Ok(t.normalized_gain()),
        Fitted::Ensemble(e) => Ok(e.importances()),
        Fitted::Adaboost(a) => Ok(a.importances()),
        Fitted::Gbt(g) => Ok(g.importances(model.feature_count)),
        Fitted::Chance => Err(Error::Unsupported(
            "the chance baseline has no feature importances".into(),
        )),
    }
}

pub fn supports_importances(algorithm: Algorithm) -> bool {
    algorithm != Algorithm::ChanceBaseline
}
