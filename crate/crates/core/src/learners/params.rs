use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::error::{Error, Result};

/// A hyperparameter value as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Number(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

struct Reader<'a> {
    algorithm: Algorithm,
    map: &'a BTreeMap<String, ParamValue>,
    used: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(algorithm: Algorithm, map: &'a BTreeMap<String, ParamValue>) -> Self {
        Reader {
            algorithm,
            map,
            used: BTreeSet::new(),
        }
    }

    fn bad(&self, key: &str, why: &str) -> Error {
        Error::Validation(format!("{}: hyperparameter {key} {why}", self.algorithm))
    }

    fn number(
        &mut self,
        key: &'static str,
        default: f64,
        valid: impl Fn(f64) -> bool,
    ) -> Result<f64> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(ParamValue::Number(v)) if v.is_finite() && valid(*v) => Ok(*v),
            Some(ParamValue::Number(v)) => Err(self.bad(key, &format!("has invalid value {v}"))),
            Some(ParamValue::Text(t)) => {
                Err(self.bad(key, &format!("must be a number, got {t:?}")))
            }
        }
    }

    fn count(&mut self, key: &'static str, default: usize) -> Result<usize> {
        self.optional_count(key).map(|v| v.unwrap_or(default))
    }

    fn optional_count(&mut self, key: &'static str) -> Result<Option<usize>> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(None),
            Some(ParamValue::Number(v)) if *v >= 1.0 && v.fract() == 0.0 && *v < 1e9 => {
                Ok(Some(*v as usize))
            }
            Some(other) => {
                Err(self.bad(key, &format!("must be a positive integer, got {other:?}")))
            }
        }
    }

    fn text(&mut self, key: &'static str, default: &str, allowed: &[&str]) -> Result<String> {
        self.used.insert(key);
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(t)) if allowed.contains(&t.as_str()) => Ok(t.clone()),
            Some(other) => {
                Err(self.bad(key, &format!("must be one of {allowed:?}, got {other:?}")))
            }
        }
    }

    fn finish(self) -> Result<()> {
        let unknown: Vec<&str> = self
            .map
            .keys()
            .map(String::as_str)
            .filter(|k| !self.used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "{}: unknown hyperparameters {}",
                self.algorithm,
                unknown.join(", ")
            )))
        }
    }
}

/// L2-regularized logistic regression fitted by gradient descent.
///
/// Defaults: `l2 = 1.0`, `max_iter = 1000`, `tol = 1e-6` (gradient ∞-norm).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

/// Hinge-loss linear SVM. Defaults: `c = 1.0`, `epochs = 200`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

/// CART settings. `max_depth` unset means unlimited; `min_samples_leaf = 1`;
/// `max_features` unset means all features at every split.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: Option<usize>,
}

/// Bootstrap ensembles. Default `n_estimators = 100`; random forests default
/// to ⌈√features⌉ split candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub sqrt_features: bool,
}

/// SAMME boosting of depth-1 stumps. Defaults: `n_estimators = 100`,
/// `learning_rate = 1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaboostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
}

/// Second-order gradient boosting on the logistic loss.
///
/// Defaults: `learning_rate = 0.12`, `max_depth = 6`, `n_estimators = 100`,
/// `lambda = 1.0`, `gamma = 0.0`, `min_child_weight = 1.0`, `subsample = 1.0`,
/// `sampling = "uniform"`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            learning_rate: 0.12,
            max_depth: 6,
            n_estimators: 100,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Logistic(LogisticParams),
    Svm(SvmParams),
    Tree(TreeParams),
    Ensemble(EnsembleParams),
    Adaboost(AdaboostParams),
    Gbt(GbtParams),
    Chance,
}

fn tree_params(r: &mut Reader<'_>) -> Result<TreeParams> {
    Ok(TreeParams {
        max_depth: r.optional_count("max_depth")?,
        min_samples_leaf: r.count("min_samples_leaf", 1)?,
        max_features: None,
    })
}

pub fn resolve(algorithm: Algorithm, map: &BTreeMap<String, ParamValue>) -> Result<Params> {
    let mut r = Reader::new(algorithm, map);
    let params = match algorithm {
        Algorithm::LogisticRegression => Params::Logistic(LogisticParams {
            l2: r.number("l2", 1.0, |v| v >= 0.0)?,
            max_iter: r.count("max_iter", 1000)?,
            tol: r.number("tol", 1e-6, |v| v > 0.0)?,
        }),
        Algorithm::LinearSvm => Params::Svm(SvmParams {
            c: r.number("c", 1.0, |v| v > 0.0)?,
            epochs: r.count("epochs", 200)?,
        }),
        Algorithm::DecisionTree => Params::Tree(tree_params(&mut r)?),
        Algorithm::Bagging => Params::Ensemble(EnsembleParams {
            n_estimators: r.count("n_estimators", 100)?,
            tree: tree_params(&mut r)?,
            sqrt_features: false,
        }),
        Algorithm::RandomForest => {
            let n_estimators = r.count("n_estimators", 100)?;
            let mut tree = tree_params(&mut r)?;
            tree.max_features = r.optional_count("max_features")?;
            Params::Ensemble(EnsembleParams {
                n_estimators,
                sqrt_features: tree.max_features.is_none(),
                tree,
            })
        }
        Algorithm::Adaboost => Params::Adaboost(AdaboostParams {
            n_estimators: r.count("n_estimators", 100)?,
            learning_rate: r.number("learning_rate", 1.0, |v| v > 0.0)?,
        }),
        Algorithm::GradientBoostedTrees => {
            let d = GbtParams::default();
            let p = GbtParams {
                learning_rate: r
                    .number("learning_rate", d.learning_rate, |v| v > 0.0 && v <= 1.0)?,
                max_depth: r.count("max_depth", d.max_depth)?,
                n_estimators: r.count("n_estimators", d.n_estimators)?,
                lambda: r.number("lambda", d.lambda, |v| v >= 0.0)?,
                gamma: r.number("gamma", d.gamma, |v| v >= 0.0)?,
                min_child_weight: r.number("min_child_weight", d.min_child_weight, |v| v >= 0.0)?,
                subsample: r.number("subsample", d.subsample, |v| v > 0.0 && v <= 1.0)?,
            };
            r.text("sampling", "uniform", &["uniform"])?;
            Params::Gbt(p)
        }
        Algorithm::ChanceBaseline => Params::Chance,
    };
    r.finish()?;
    Ok(params)
}
