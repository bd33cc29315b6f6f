//! Five binary classifiers behind one train/predict contract.
//!
//! Labels are [`CategoryLabel`]s; `"34"` is the positive class and wins
//! every tie (equal posteriors, a score exactly on the boundary, split votes).

mod forest;
mod logistic;
mod naive_bayes;
mod serialize;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use crate::corpus::CategoryLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureMethod, FeatureVector};

pub use forest::{majority_vote, RandomForest};
pub use logistic::{logistic_objective, LogisticFit, LogisticModel};
pub use naive_bayes::{NaiveBayesModel, NbParams};
pub use svm::LinearSvm;
pub use tree::{DecisionTree, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    NaiveBayes,
    LogisticRegression,
    DecisionTree,
    RandomForest,
    LinearSvm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::NaiveBayes,
        Algorithm::LogisticRegression,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::LinearSvm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::LinearSvm => "linear_svm",
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
        Ok(match s {
            "naive_bayes" | "nb" => Algorithm::NaiveBayes,
            "logistic_regression" | "lr" => Algorithm::LogisticRegression,
            "decision_tree" | "tree" => Algorithm::DecisionTree,
            "random_forest" | "forest" | "rf" => Algorithm::RandomForest,
            "linear_svm" | "svm" => Algorithm::LinearSvm,
            other => return Err(Error::InvalidConfig(format!("unknown algorithm {other:?}"))),
        })
    }
}

/// Event model used by naive Bayes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbVariant {
    /// Smoothed term counts; features must be non-negative.
    Multinomial,
    /// Per-class normal densities; any real features.
    Gaussian,
}

impl NbVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            NbVariant::Multinomial => "multinomial",
            NbVariant::Gaussian => "gaussian",
        }
    }
}

impl FromStr for NbVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(NbVariant::Multinomial),
            "gaussian" => Ok(NbVariant::Gaussian),
            other => Err(Error::InvalidConfig(format!(
                "unknown naive Bayes variant {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrParams {
    /// L2 penalty weight on `w` (the bias is not penalized).
    pub lambda: f64,
    /// Initial step; halved whenever a step would increase the loss.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the gradient's infinity norm drops below this.
    pub tol: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            lambda: 1e-4,
            learning_rate: 0.1,
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 20,
            min_samples_split: 2,
        }
    }
}

/// Candidate features examined at each forest split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    /// `ceil(sqrt(dim))`.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((dim as f64).sqrt().ceil() as usize).clamp(1, dim.max(1)),
            MaxFeatures::All => dim,
            MaxFeatures::Count(n) => n.clamp(1, dim.max(1)),
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" => Ok(MaxFeatures::All),
            n => n
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .map(MaxFeatures::Count)
                .ok_or_else(|| Error::InvalidConfig(format!("bad max_features {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hyperparameters {
    pub nb: NbParams,
    pub lr: LrParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub svm: SvmParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub hyper: Hyperparameters,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        TrainConfig {
            algorithm,
            seed,
            hyper: Hyperparameters::default(),
        }
    }

    /// Defaults suited to `method`: multinomial naive Bayes for counts,
    /// Gaussian for embedding averages.
    pub fn for_method(algorithm: Algorithm, seed: u64, method: FeatureMethod) -> Self {
        let mut c = TrainConfig::new(algorithm, seed);
        c.hyper.nb.variant = match method {
            FeatureMethod::Bow => NbVariant::Multinomial,
            FeatureMethod::Embeddings => NbVariant::Gaussian,
        };
        c
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyper;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("nb.alpha", h.nb.alpha)?;
        if !(h.lr.lambda >= 0.0 && h.lr.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lr.lambda must be non-negative, got {}",
                h.lr.lambda
            )));
        }
        positive("lr.learning_rate", h.lr.learning_rate)?;
        positive("lr.tol", h.lr.tol)?;
        positive("svm.lambda", h.svm.lambda)?;
        if h.tree.min_samples_split == 0 || h.forest.tree.min_samples_split == 0 {
            return Err(Error::InvalidConfig(
                "min_samples_split must be positive".into(),
            ));
        }
        if h.forest.n_trees == 0 {
            return Err(Error::InvalidConfig(
                "forest.n_trees must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Rows of equal dimension with one label each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<FeatureVector>,
    labels: Vec<CategoryLabel>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Vec<FeatureVector>, labels: Vec<CategoryLabel>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let Some(first) = rows.first() else {
            return Err(Error::InvalidDataset("no rows".into()));
        };
        let dim = first.dim();
        if let Some(i) = rows.iter().position(|r| r.dim() != dim) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has dimension {}, expected {dim}",
                rows[i].dim()
            )));
        }
        Ok(Dataset { rows, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[CategoryLabel] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    /// New dataset with the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    fn check_trainable(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {}",
                self.len()
            )));
        }
        match self.class_counts() {
            [0, _] => Err(Error::SingleClass(CategoryLabel::High)),
            [_, 0] => Err(Error::SingleClass(CategoryLabel::Low)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    NaiveBayes(NaiveBayesModel),
    Logistic(LogisticModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    Svm(LinearSvm),
}

/// A fitted classifier with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    config: TrainConfig,
    dim: usize,
    params: ModelParams,
}

impl TrainedModel {
    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<CategoryLabel> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let x = x.values();
        Ok(match &self.params {
            ModelParams::NaiveBayes(m) => m.predict(x),
            ModelParams::Logistic(m) => m.predict(x),
            ModelParams::Tree(m) => m.predict(x),
            ModelParams::Forest(m) => m.predict(x),
            ModelParams::Svm(m) => m.predict(x),
        })
    }

    /// Assemble a model from already-fitted parameters.
    pub fn from_parts(config: TrainConfig, dim: usize, params: ModelParams) -> Result<Self> {
        let consistent = match (&params, config.algorithm) {
            (ModelParams::NaiveBayes(m), Algorithm::NaiveBayes) => m.dim() == dim,
            (ModelParams::Logistic(m), Algorithm::LogisticRegression) => m.weights.len() == dim,
            (ModelParams::Tree(m), Algorithm::DecisionTree) => m.max_feature() < dim,
            (ModelParams::Forest(m), Algorithm::RandomForest) => {
                m.trees().iter().all(|t| t.max_feature() < dim)
            }
            (ModelParams::Svm(m), Algorithm::LinearSvm) => m.weights.len() == dim,
            _ => false,
        };
        if !consistent || dim == 0 {
            return Err(Error::Format {
                what: "model",
                reason: format!(
                    "parameters inconsistent with kind {} and dim {dim}",
                    config.algorithm
                ),
            });
        }
        Ok(TrainedModel {
            config,
            dim,
            params,
        })
    }
}

pub fn predict_label(model: &TrainedModel, x: &FeatureVector) -> Result<CategoryLabel> {
    model.predict(x)
}

pub fn fit_naive_bayes(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    data.check_trainable()?;
    let m = naive_bayes::fit(data, &config.hyper.nb)?;
    TrainedModel::from_parts(*config, data.dim(), ModelParams::NaiveBayes(m))
}

pub fn fit_logistic_regression(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    data.check_trainable()?;
    let fit = logistic::fit(data, &config.hyper.lr)?;
    TrainedModel::from_parts(*config, data.dim(), ModelParams::Logistic(fit.model))
}

/// Logistic regression with the full loss trajectory.
pub fn fit_logistic_path(data: &Dataset, params: &LrParams) -> Result<LogisticFit> {
    data.check_trainable()?;
    logistic::fit(data, params)
}

pub fn fit_decision_tree(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    data.check_trainable()?;
    let t = tree::fit(data, &config.hyper.tree);
    TrainedModel::from_parts(*config, data.dim(), ModelParams::Tree(t))
}

pub fn fit_random_forest(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    data.check_trainable()?;
    let f = forest::fit(data, &config.hyper.forest, config.seed);
    TrainedModel::from_parts(*config, data.dim(), ModelParams::Forest(f))
}

pub fn fit_linear_svm(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    data.check_trainable()?;
    let m = svm::fit(data, &config.hyper.svm, config.seed)?;
    TrainedModel::from_parts(*config, data.dim(), ModelParams::Svm(m))
}

/// Dispatch on `config.algorithm`.
pub fn fit(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    match config.algorithm {
        Algorithm::NaiveBayes => fit_naive_bayes(data, config),
        Algorithm::LogisticRegression => fit_logistic_regression(data, config),
        Algorithm::DecisionTree => fit_decision_tree(data, config),
        Algorithm::RandomForest => fit_random_forest(data, config),
        Algorithm::LinearSvm => fit_linear_svm(data, config),
    }
}

pub(crate) fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::new(vec![fv(&[1.0])], vec![]).is_err());
        assert!(Dataset::new(
            vec![fv(&[1.0]), fv(&[1.0, 2.0])],
            vec![CategoryLabel::Low, CategoryLabel::High]
        )
        .is_err());
        let single = Dataset::new(
            vec![fv(&[1.0]), fv(&[2.0])],
            vec![CategoryLabel::Low, CategoryLabel::Low],
        )
        .unwrap();
        for alg in Algorithm::ALL {
            assert!(matches!(
                fit(&single, &TrainConfig::new(alg, 0)),
                Err(Error::SingleClass(_))
            ));
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let d = Dataset::new(
            vec![fv(&[0.0, 1.0]), fv(&[1.0, 0.0])],
            vec![CategoryLabel::Low, CategoryLabel::High],
        )
        .unwrap();
        for alg in Algorithm::ALL {
            let m = fit(&d, &TrainConfig::new(alg, 1)).unwrap();
            assert!(matches!(
                m.predict(&fv(&[1.0])),
                Err(Error::DimensionMismatch {
                    expected: 2,
                    found: 1
                })
            ));
        }
    }

    #[test]
    fn names_parse() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.as_str().parse::<Algorithm>().unwrap(), alg);
        }
        assert!("knn".parse::<Algorithm>().is_err());
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 4);
        assert_eq!(MaxFeatures::Sqrt.resolve(9), 3);
        assert_eq!(MaxFeatures::Count(50).resolve(10), 10);
    }
}
