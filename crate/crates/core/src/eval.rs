//! Stratified k-fold cross-validation with precision, recall and F1.
//!
//! `"34"` is the positive class for the binary confusion matrix. Reports
//! carry per-class scores plus macro and support-weighted averages, per fold,
//! averaged over folds, and over the pooled out-of-fold predictions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{self, Dataset, TrainConfig};
use crate::corpus::{CategoryLabel, LabeledTweet};
use crate::error::{Error, Result};
use crate::features::{EmbeddingTable, FeatureExtractor, FeatureMethod};
use crate::rng::{substream, Domain};

/// Fold index for every example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Shuffle each class with the seed, then deal its examples round-robin over
/// the folds. The deal continues where the previous class stopped, which
/// keeps fold sizes within one of each other.
pub fn stratified_kfold(labels: &[CategoryLabel], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let mut assignment = vec![0; labels.len()];
    let mut next = 0usize;
    for class in CategoryLabel::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::TooFewExamples {
                label: class,
                count: idx.len(),
                k,
            });
        }
        idx.shuffle(&mut substream(
            seed,
            Domain::FoldShuffle,
            class.index() as u64,
        ));
        for i in idx {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, assignment })
}

/// Binary confusion counts with `"34"` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[CategoryLabel], predicted: &[CategoryLabel]) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            cm.record(*t, *p);
        }
        cm
    }

    pub fn record(&mut self, truth: CategoryLabel, predicted: CategoryLabel) {
        use CategoryLabel::{High, Low};
        match (truth, predicted) {
            (High, High) => self.tp += 1,
            (Low, High) => self.fp += 1,
            (High, Low) => self.fn_ += 1,
            (Low, Low) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts with `"12"` treated as positive.
    pub fn flipped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn merge(&self, other: &ConfusionMatrix) -> Self {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and F1 of the positive class; any 0/0 is 0.
pub fn f1_from_confusion(cm: &ConfusionMatrix) -> Prf {
    let tp = cm.tp as f64;
    let precision = ratio(tp, tp + cm.fp as f64);
    let recall = ratio(tp, tp + cm.fn_ as f64);
    Prf {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSet {
    pub n: usize,
    pub accuracy: f64,
    /// Keyed by label, `"12"` and `"34"`.
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

impl MetricsSet {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let n = cm.total();
        let high = f1_from_confusion(cm);
        let low = f1_from_confusion(&cm.flipped());
        let support = [cm.tn + cm.fp, cm.tp + cm.fn_];
        let scores = [low, high];
        let weighted = |get: fn(&Prf) -> f64| {
            ratio(
                (0..2).map(|c| get(&scores[c]) * support[c] as f64).sum(),
                n as f64,
            )
        };
        let per_class = CategoryLabel::ALL
            .iter()
            .map(|l| {
                let s = scores[l.index()];
                (
                    l.as_str().to_string(),
                    ClassMetrics {
                        precision: s.precision,
                        recall: s.recall,
                        f1: s.f1,
                        support: support[l.index()],
                    },
                )
            })
            .collect();
        MetricsSet {
            n,
            accuracy: ratio((cm.tp + cm.tn) as f64, n as f64),
            per_class,
            macro_f1: (low.f1 + high.f1) / 2.0,
            weighted_precision: weighted(|p| p.precision),
            weighted_recall: weighted(|p| p.recall),
            weighted_f1: weighted(|p| p.f1),
        }
    }

    /// Field-wise mean; supports and `n` are summed.
    pub fn mean(sets: &[MetricsSet]) -> Self {
        let k = sets.len().max(1) as f64;
        let avg = |get: &dyn Fn(&MetricsSet) -> f64| sets.iter().map(get).sum::<f64>() / k;
        let per_class = CategoryLabel::ALL
            .iter()
            .map(|l| {
                let key = l.as_str();
                let get = |s: &MetricsSet| s.per_class[key];
                (
                    key.to_string(),
                    ClassMetrics {
                        precision: avg(&|s| get(s).precision),
                        recall: avg(&|s| get(s).recall),
                        f1: avg(&|s| get(s).f1),
                        support: sets.iter().map(|s| get(s).support).sum(),
                    },
                )
            })
            .collect();
        MetricsSet {
            n: sets.iter().map(|s| s.n).sum(),
            accuracy: avg(&|s| s.accuracy),
            per_class,
            macro_f1: avg(&|s| s.macro_f1),
            weighted_precision: avg(&|s| s.weighted_precision),
            weighted_recall: avg(&|s| s.weighted_recall),
            weighted_f1: avg(&|s| s.weighted_f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Feature dimension seen by the classifier in this fold.
    pub dim: usize,
    /// Held-out documents with no in-vocabulary token (zero vectors).
    pub zero_vector_test_docs: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub algorithm: String,
    pub features: String,
    pub seed: u64,
    pub k: usize,
    /// Where the bag-of-words vocabulary came from.
    pub vocabulary: String,
    pub hyperparameters: BTreeMap<String, String>,
    pub n_examples: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub folds: Vec<FoldReport>,
    pub mean: MetricsSet,
    pub pooled_confusion: ConfusionMatrix,
    pub pooled: MetricsSet,
}

/// One line of the plot-ready table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatRow {
    pub fold: String,
    pub algorithm: String,
    pub features: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricsReport {
    /// Headline score: weighted F1 over pooled out-of-fold predictions.
    pub fn f1(&self) -> f64 {
        self.pooled.weighted_f1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per fold, then `mean` and `pooled`; support-weighted scores.
    pub fn flat_rows(&self) -> Vec<FlatRow> {
        let row = |fold: String, m: &MetricsSet| FlatRow {
            fold,
            algorithm: self.algorithm.clone(),
            features: self.features.clone(),
            precision: m.weighted_precision,
            recall: m.weighted_recall,
            f1: m.weighted_f1,
        };
        self.folds
            .iter()
            .map(|f| row(f.fold.to_string(), &f.metrics))
            .chain([
                row("mean".into(), &self.mean),
                row("pooled".into(), &self.pooled),
            ])
            .collect()
    }
}

/// How tweets become vectors inside cross-validation.
#[derive(Debug, Clone)]
pub enum FeatureSpec {
    Bow { min_freq: usize },
    Embeddings(Arc<EmbeddingTable>),
}

impl FeatureSpec {
    pub fn method(&self) -> FeatureMethod {
        match self {
            FeatureSpec::Bow { .. } => FeatureMethod::Bow,
            FeatureSpec::Embeddings(_) => FeatureMethod::Embeddings,
        }
    }

    /// Extractor fitted on `texts` (only bag-of-words uses them).
    pub fn extractor<'a, I>(
        &self,
        texts: I,
        blocklist: &BTreeSet<String>,
    ) -> Result<FeatureExtractor>
    where
        I: IntoIterator<Item = &'a str>,
    {
        match self {
            FeatureSpec::Bow { min_freq } => {
                FeatureExtractor::fit_bow(texts, *min_freq, blocklist.clone())
            }
            FeatureSpec::Embeddings(t) => {
                Ok(FeatureExtractor::embeddings(t.clone(), blocklist.clone()))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub features: FeatureSpec,
    pub blocklist: BTreeSet<String>,
    /// Build the vocabulary from the whole corpus instead of each training split.
    pub leaky_vocab: bool,
}

impl CvOptions {
    pub fn new(features: FeatureSpec) -> Self {
        CvOptions {
            features,
            blocklist: BTreeSet::new(),
            leaky_vocab: false,
        }
    }

    fn vocabulary_note(&self) -> &'static str {
        match (&self.features, self.leaky_vocab) {
            (FeatureSpec::Embeddings(_), _) => "n/a",
            (FeatureSpec::Bow { .. }, false) => "per-fold training split",
            (FeatureSpec::Bow { .. }, true) => "whole corpus",
        }
    }
}

struct FoldOutcome {
    report: FoldReport,
}

fn fold_metrics(
    fold: usize,
    n_train: usize,
    dim: usize,
    zero_docs: usize,
    truth: &[CategoryLabel],
    predicted: &[CategoryLabel],
) -> FoldOutcome {
    let confusion = ConfusionMatrix::from_predictions(truth, predicted);
    FoldOutcome {
        report: FoldReport {
            fold,
            n_train,
            n_test: truth.len(),
            dim,
            zero_vector_test_docs: zero_docs,
            confusion,
            metrics: MetricsSet::from_confusion(&confusion),
        },
    }
}

fn assemble(
    config: &TrainConfig,
    features: &str,
    vocabulary: &str,
    k: usize,
    seed: u64,
    labels: &[CategoryLabel],
    outcomes: Vec<FoldOutcome>,
) -> MetricsReport {
    let folds: Vec<FoldReport> = outcomes.into_iter().map(|o| o.report).collect();
    let pooled_confusion = folds
        .iter()
        .fold(ConfusionMatrix::default(), |acc, f| acc.merge(&f.confusion));
    let per_fold: Vec<MetricsSet> = folds.iter().map(|f| f.metrics.clone()).collect();
    let mut class_counts = BTreeMap::new();
    for l in labels {
        *class_counts.entry(l.as_str().to_string()).or_insert(0) += 1;
    }
    MetricsReport {
        algorithm: config.algorithm.to_string(),
        features: features.to_string(),
        seed,
        k,
        vocabulary: vocabulary.to_string(),
        hyperparameters: config
            .hyper
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        n_examples: labels.len(),
        class_counts,
        mean: MetricsSet::mean(&per_fold),
        pooled: MetricsSet::from_confusion(&pooled_confusion),
        pooled_confusion,
        folds,
    }
}

/// Cross-validate labeled tweets. Examples are sorted by tweet id before
/// fold assignment, so the report depends only on the set of tweets.
/// Bag-of-words vocabularies come from each training split unless
/// `options.leaky_vocab` is set.
pub fn cross_validate(
    tweets: &[LabeledTweet],
    options: &CvOptions,
    config: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<MetricsReport> {
    config.validate()?;
    let mut sorted: Vec<&LabeledTweet> = tweets.iter().collect();
    sorted.sort_by(|a, b| a.tweet.id.cmp(&b.tweet.id));
    let labels: Vec<CategoryLabel> = sorted.iter().map(|t| t.label).collect();
    let folds = stratified_kfold(&labels, k, seed)?;

    let shared = if options.leaky_vocab || matches!(options.features, FeatureSpec::Embeddings(_)) {
        Some(options.features.extractor(
            sorted.iter().map(|t| t.tweet.text.as_str()),
            &options.blocklist,
        )?)
    } else {
        None
    };

    let outcomes = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<FoldOutcome> {
            let train = folds.train_indices(fold);
            let test = folds.test_indices(fold);
            let fitted;
            let extractor = match &shared {
                Some(e) => e,
                None => {
                    fitted = options.features.extractor(
                        train.iter().map(|&i| sorted[i].tweet.text.as_str()),
                        &options.blocklist,
                    )?;
                    &fitted
                }
            };
            let vectorize = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| extractor.vectorize(&sorted[i].tweet.text))
                    .collect::<Vec<_>>()
            };
            let train_vecs = vectorize(&train);
            let data = Dataset::new(
                train_vecs.into_iter().map(|v| v.vector).collect(),
                train.iter().map(|&i| labels[i]).collect(),
            )?;
            let model = classify::fit(&data, config)?;
            let test_vecs = vectorize(&test);
            let zero_docs = test_vecs.iter().filter(|v| v.in_vocab == 0).count();
            let predicted = test_vecs
                .iter()
                .map(|v| model.predict(&v.vector))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<CategoryLabel> = test.iter().map(|&i| labels[i]).collect();
            Ok(fold_metrics(
                fold,
                train.len(),
                extractor.dim(),
                zero_docs,
                &truth,
                &predicted,
            ))
        })
        .enumerate()
        .map(|(fold, r)| {
            r.map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(assemble(
        config,
        options.features.method().as_str(),
        options.vocabulary_note(),
        k,
        seed,
        &labels,
        outcomes,
    ))
}

/// Cross-validate pre-computed feature vectors, in the given row order.
pub fn cross_validate_dataset(
    data: &Dataset,
    config: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<MetricsReport> {
    config.validate()?;
    let folds = stratified_kfold(data.labels(), k, seed)?;
    let outcomes = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<FoldOutcome> {
            let train = folds.train_indices(fold);
            let test = folds.test_indices(fold);
            let model = classify::fit(&data.subset(&train)?, config)?;
            let predicted = test
                .iter()
                .map(|&i| model.predict(&data.rows()[i]))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<CategoryLabel> = test.iter().map(|&i| data.labels()[i]).collect();
            let zero = test
                .iter()
                .filter(|&&i| data.rows()[i].values().iter().all(|v| *v == 0.0))
                .count();
            Ok(fold_metrics(
                fold,
                train.len(),
                data.dim(),
                zero,
                &truth,
                &predicted,
            ))
        })
        .enumerate()
        .map(|(fold, r)| {
            r.map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        config,
        "precomputed",
        "n/a",
        k,
        seed,
        data.labels(),
        outcomes,
    ))
}

/// Scores of uniformly random predictions against `labels`.
pub fn random_label_baseline(labels: &[CategoryLabel], seed: u64) -> MetricsSet {
    let mut rng = substream(seed, Domain::Baseline, 0);
    let predicted: Vec<CategoryLabel> = labels
        .iter()
        .map(|_| CategoryLabel::from_index(rng.random_range(0..2)))
        .collect();
    MetricsSet::from_confusion(&ConfusionMatrix::from_predictions(labels, &predicted))
}
