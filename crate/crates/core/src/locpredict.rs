//! Majority-vote category prediction for a single place.

use serde::Serialize;

use crate::classify::TrainedModel;
use crate::corpus::{CategoryLabel, Tweet};
use crate::error::{Error, Result};
use crate::features::FeatureExtractor;

pub const DEFAULT_MIN_TWEETS: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    #[serde(rename = "12")]
    pub low: usize,
    #[serde(rename = "34")]
    pub high: usize,
}

impl Tally {
    pub fn from_labels<'a, I: IntoIterator<Item = &'a CategoryLabel>>(labels: I) -> Self {
        let mut t = Tally::default();
        for l in labels {
            t.add(*l);
        }
        t
    }

    pub fn add(&mut self, label: CategoryLabel) {
        match label {
            CategoryLabel::Low => self.low += 1,
            CategoryLabel::High => self.high += 1,
        }
    }

    pub fn get(&self, label: CategoryLabel) -> usize {
        match label {
            CategoryLabel::Low => self.low,
            CategoryLabel::High => self.high,
        }
    }

    pub fn total(&self) -> usize {
        self.low + self.high
    }

    /// `"12"` only when it strictly outnumbers `"34"`.
    pub fn majority(&self) -> CategoryLabel {
        if self.low > self.high {
            CategoryLabel::Low
        } else {
            CategoryLabel::High
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationPrediction {
    pub place: String,
    pub n_tweets: usize,
    pub tally: Tally,
    pub predicted: CategoryLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<CategoryLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_fraction: Option<f64>,
    pub warnings: Vec<String>,
}

/// Fraction of `labels` equal to `truth`.
pub fn correct_fraction(labels: &[CategoryLabel], truth: CategoryLabel) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("per-tweet labels"));
    }
    let hits = labels.iter().filter(|l| **l == truth).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Build the prediction record from per-tweet labels.
pub fn predict_from_labels(
    place: &str,
    labels: &[CategoryLabel],
    truth: Option<CategoryLabel>,
    min_tweets: usize,
) -> Result<LocationPrediction> {
    if labels.is_empty() {
        return Err(Error::Empty("tweets for place"));
    }
    let tally = Tally::from_labels(labels);
    let mut warnings = Vec::new();
    if labels.len() < min_tweets {
        warnings.push(format!(
            "only {} tweets for {place}, fewer than {min_tweets}; prediction is unreliable",
            labels.len()
        ));
    }
    Ok(LocationPrediction {
        place: place.to_string(),
        n_tweets: labels.len(),
        tally,
        predicted: tally.majority(),
        truth,
        correct_fraction: truth.map(|t| correct_fraction(labels, t)).transpose()?,
        warnings,
    })
}

/// Classify each tweet, tally the labels and predict the majority.
pub fn predict_location(
    model: &TrainedModel,
    tweets: &[Tweet],
    extractor: &FeatureExtractor,
    place: &str,
    truth: Option<CategoryLabel>,
    min_tweets: usize,
) -> Result<LocationPrediction> {
    if extractor.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: extractor.dim(),
        });
    }
    let labels = tweets
        .iter()
        .map(|t| model.predict(&extractor.vectorize(&t.text).vector))
        .collect::<Result<Vec<_>>>()?;
    predict_from_labels(place, &labels, truth, min_tweets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use CategoryLabel::{High, Low};

    fn label_strategy() -> impl Strategy<Value = CategoryLabel> {
        prop_oneof![Just(Low), Just(High)]
    }

    #[test]
    fn majority_examples() {
        let p = predict_from_labels("x", &[High, High, Low], None, 1).unwrap();
        assert_eq!(p.predicted, High);
        assert_eq!(p.tally, Tally { low: 1, high: 2 });
        assert_eq!(
            predict_from_labels("x", &[Low, Low, High], None, 1)
                .unwrap()
                .predicted,
            Low
        );
        assert_eq!(
            predict_from_labels("x", &[Low, Low, High, High], None, 1)
                .unwrap()
                .predicted,
            High
        );
    }

    #[test]
    fn empty_is_an_error() {
        assert!(predict_from_labels("x", &[], None, 1).is_err());
        assert!(correct_fraction(&[], High).is_err());
    }

    #[test]
    fn correct_fraction_examples() {
        let mut labels = vec![High; 33];
        labels.extend([Low; 4]);
        let f = correct_fraction(&labels, High).unwrap();
        assert!((f - 0.892).abs() < 5e-4);
        assert_eq!(correct_fraction(&[Low, Low], Low).unwrap(), 1.0);
        assert_eq!(correct_fraction(&[Low, Low], High).unwrap(), 0.0);
    }

    #[test]
    fn small_samples_warn() {
        let p = predict_from_labels("Tiny", &[High; 3], Some(High), 10).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.correct_fraction, Some(1.0));
        assert!(predict_from_labels("Big", &[High; 10], None, 10)
            .unwrap()
            .warnings
            .is_empty());
    }

    proptest! {
        #[test]
        fn predicted_attains_max(labels in prop::collection::vec(label_strategy(), 1..40)) {
            let p = predict_from_labels("x", &labels, None, 0).unwrap();
            prop_assert_eq!(p.tally.total(), p.n_tweets);
            prop_assert!(p.tally.get(p.predicted) >= p.tally.get(p.predicted.other()));
        }

        #[test]
        fn adding_majority_keeps_prediction(labels in prop::collection::vec(label_strategy(), 1..40)) {
            let p = predict_from_labels("x", &labels, None, 0).unwrap();
            let mut more = labels.clone();
            more.push(p.predicted);
            prop_assert_eq!(predict_from_labels("x", &more, None, 0).unwrap().predicted, p.predicted);
        }

        #[test]
        fn fractions_are_complementary(labels in prop::collection::vec(label_strategy(), 1..40)) {
            let a = correct_fraction(&labels, High).unwrap();
            let b = correct_fraction(&labels, Low).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(labels in prop::collection::vec(label_strategy(), 1..40), rot in 0usize..40) {
            let mut r = labels.clone();
            let n = r.len();
            r.rotate_left(rot % n);
            r.reverse();
            prop_assert_eq!(
                predict_from_labels("x", &labels, Some(High), 0).unwrap(),
                predict_from_labels("x", &r, Some(High), 0).unwrap()
            );
        }
    }
}
