use super::{Dataset, NbVariant};
use crate::corpus::CategoryLabel;
use crate::error::{Error, Result};

/// Gaussian variances never drop below this.
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbParams {
    /// Additive (Laplace) smoothing for the multinomial variant.
    pub alpha: f64,
    pub variant: NbVariant,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            alpha: 1.0,
            variant: NbVariant::Multinomial,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NaiveBayesModel {
    Multinomial {
        /// `ln(n_c / n)`, indexed by [`CategoryLabel::index`].
        log_prior: [f64; 2],
        /// `ln((N_cf + alpha) / (N_c + alpha * dim))` per class and feature.
        feature_log_prob: [Vec<f64>; 2],
    },
    Gaussian {
        log_prior: [f64; 2],
        mean: [Vec<f64>; 2],
        var: [Vec<f64>; 2],
    },
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        match self {
            NaiveBayesModel::Multinomial {
                feature_log_prob, ..
            } => feature_log_prob[0].len(),
            NaiveBayesModel::Gaussian { mean, .. } => mean[0].len(),
        }
    }

    pub fn log_prior(&self) -> [f64; 2] {
        match self {
            NaiveBayesModel::Multinomial { log_prior, .. }
            | NaiveBayesModel::Gaussian { log_prior, .. } => *log_prior,
        }
    }

    /// Unnormalized log posterior `ln P(c) + ln P(x | c)` for each class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        match self {
            NaiveBayesModel::Multinomial {
                log_prior,
                feature_log_prob,
            } => [0, 1].map(|c| {
                log_prior[c]
                    + x.iter()
                        .zip(&feature_log_prob[c])
                        .filter(|(xi, _)| **xi != 0.0)
                        .map(|(xi, lp)| xi * lp)
                        .sum::<f64>()
            }),
            NaiveBayesModel::Gaussian {
                log_prior,
                mean,
                var,
            } => [0, 1].map(|c| {
                log_prior[c]
                    + x.iter()
                        .zip(mean[c].iter().zip(&var[c]))
                        .map(|(xi, (m, v))| {
                            -0.5 * (2.0 * std::f64::consts::PI * v).ln()
                                - (xi - m).powi(2) / (2.0 * v)
                        })
                        .sum::<f64>()
            }),
        }
    }

    /// Normalized log posterior, `ln P(c | x)`.
    pub fn log_posterior(&self, x: &[f64]) -> [f64; 2] {
        let j = self.joint_log_likelihood(x);
        let m = j[0].max(j[1]);
        let lse = m + ((j[0] - m).exp() + (j[1] - m).exp()).ln();
        [j[0] - lse, j[1] - lse]
    }

    pub fn predict(&self, x: &[f64]) -> CategoryLabel {
        let j = self.joint_log_likelihood(x);
        if j[1] >= j[0] {
            CategoryLabel::High
        } else {
            CategoryLabel::Low
        }
    }
}

pub(super) fn fit(data: &Dataset, params: &NbParams) -> Result<NaiveBayesModel> {
    let n = data.len() as f64;
    let counts = data.class_counts();
    let log_prior = [0, 1].map(|c| (counts[c] as f64 / n).ln());
    let dim = data.dim();
    match params.variant {
        NbVariant::Multinomial => {
            let mut feature_counts = [vec![0.0; dim], vec![0.0; dim]];
            for (row_i, (row, label)) in data.rows().iter().zip(data.labels()).enumerate() {
                let fc = &mut feature_counts[label.index()];
                for (col, &v) in row.values().iter().enumerate() {
                    if v < 0.0 {
                        return Err(Error::NegativeFeature {
                            row: row_i,
                            col,
                            value: v,
                        });
                    }
                    fc[col] += v;
                }
            }
            let alpha = params.alpha;
            let feature_log_prob = feature_counts.map(|fc| {
                let total: f64 = fc.iter().sum();
                let denom = (total + alpha * dim as f64).ln();
                fc.iter().map(|c| (c + alpha).ln() - denom).collect()
            });
            Ok(NaiveBayesModel::Multinomial {
                log_prior,
                feature_log_prob,
            })
        }
        NbVariant::Gaussian => {
            let mut sum = [vec![0.0; dim], vec![0.0; dim]];
            for (row, label) in data.rows().iter().zip(data.labels()) {
                sum[label.index()]
                    .iter_mut()
                    .zip(row.values())
                    .for_each(|(s, v)| *s += v);
            }
            let mean = [0, 1].map(|c| {
                sum[c]
                    .iter()
                    .map(|s| s / counts[c] as f64)
                    .collect::<Vec<_>>()
            });
            let mut sq = [vec![0.0; dim], vec![0.0; dim]];
            for (row, label) in data.rows().iter().zip(data.labels()) {
                let c = label.index();
                sq[c]
                    .iter_mut()
                    .zip(row.values().iter().zip(&mean[c]))
                    .for_each(|(s, (v, m))| *s += (v - m).powi(2));
            }
            let var = [0, 1].map(|c| {
                sq[c]
                    .iter()
                    .map(|s| (s / counts[c] as f64).max(VARIANCE_FLOOR))
                    .collect::<Vec<_>>()
            });
            Ok(NaiveBayesModel::Gaussian {
                log_prior,
                mean,
                var,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tests::fv;
    use crate::classify::Algorithm;
    use crate::classify::{fit_naive_bayes, ModelParams, TrainConfig};
    use CategoryLabel::{High, Low};

    fn model(data: &Dataset, variant: NbVariant) -> NaiveBayesModel {
        let mut cfg = TrainConfig::new(Algorithm::NaiveBayes, 0);
        cfg.hyper.nb.variant = variant;
        match fit_naive_bayes(data, &cfg).unwrap().params() {
            ModelParams::NaiveBayes(m) => m.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn balanced_priors_are_log_half() {
        let d = Dataset::new(
            vec![
                fv(&[1.0, 0.0]),
                fv(&[2.0, 0.0]),
                fv(&[0.0, 1.0]),
                fv(&[0.0, 3.0]),
            ],
            vec![Low, Low, High, High],
        )
        .unwrap();
        assert_eq!(
            model(&d, NbVariant::Multinomial).log_prior(),
            [0.5f64.ln(); 2]
        );
    }

    #[test]
    fn smoothing_for_absent_feature() {
        // Class "12" has 5 token occurrences over dim 3; feature 2 never appears.
        let d = Dataset::new(
            vec![
                fv(&[2.0, 1.0, 0.0]),
                fv(&[1.0, 1.0, 0.0]),
                fv(&[0.0, 0.0, 4.0]),
            ],
            vec![Low, Low, High],
        )
        .unwrap();
        let NaiveBayesModel::Multinomial {
            feature_log_prob, ..
        } = model(&d, NbVariant::Multinomial)
        else {
            unreachable!()
        };
        assert!((feature_log_prob[Low.index()][2] - (1.0f64 / 8.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn negative_features_rejected_by_multinomial() {
        let d = Dataset::new(vec![fv(&[-1.0]), fv(&[1.0])], vec![Low, High]).unwrap();
        let cfg = TrainConfig::new(Algorithm::NaiveBayes, 0);
        assert!(matches!(
            fit_naive_bayes(&d, &cfg),
            Err(Error::NegativeFeature { row: 0, col: 0, .. })
        ));
        // Gaussian accepts any reals.
        model(&d, NbVariant::Gaussian);
    }

    #[test]
    fn gaussian_separates_means_and_floors_variance() {
        let d = Dataset::new(
            vec![
                fv(&[-1.0, 5.0]),
                fv(&[-1.2, 5.0]),
                fv(&[1.0, 5.0]),
                fv(&[1.1, 5.0]),
            ],
            vec![Low, Low, High, High],
        )
        .unwrap();
        let m = model(&d, NbVariant::Gaussian);
        let NaiveBayesModel::Gaussian { var, .. } = &m else {
            unreachable!()
        };
        assert_eq!(var[0][1], VARIANCE_FLOOR);
        assert_eq!(m.predict(&[-0.9, 5.0]), Low);
        assert_eq!(m.predict(&[0.9, 5.0]), High);
        let p = m.log_posterior(&[0.0, 5.0]);
        assert!((p[0].exp() + p[1].exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_posteriors_go_to_34() {
        let d = Dataset::new(vec![fv(&[1.0, 0.0]), fv(&[0.0, 1.0])], vec![Low, High]).unwrap();
        let m = model(&d, NbVariant::Multinomial);
        assert_eq!(m.predict(&[0.0, 0.0]), High);
        assert_eq!(m.predict(&[1.0, 1.0]), High);
        assert_eq!(m.predict(&[2.0, 1.0]), Low);
    }
}
