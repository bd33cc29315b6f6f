use hurricat::classify::{
    fit, fit_decision_tree, fit_linear_svm, fit_logistic_path, fit_naive_bayes, fit_random_forest,
    logistic_objective, LrParams, MaxFeatures, ModelParams, NaiveBayesModel,
};
use hurricat::rng::{substream, Domain};
use hurricat::{Algorithm, CategoryLabel, Dataset, FeatureVector, TrainConfig};
use proptest::prelude::*;
use rand::Rng;

use CategoryLabel::{High, Low};

fn fv(v: &[f64]) -> FeatureVector {
    FeatureVector::new(v.to_vec()).unwrap()
}

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<CategoryLabel>) -> Dataset {
    Dataset::new(
        rows.into_iter()
            .map(FeatureVector::new)
            .collect::<Result<_, _>>()
            .unwrap(),
        labels,
    )
    .unwrap()
}

fn random_dataset(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = substream(seed, Domain::Synthetic, 77);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|r| {
            if r[0] + 0.5 * r[1] + rng.random_range(-1.0..1.0) > 0.0 {
                High
            } else {
                Low
            }
        })
        .collect();
    dataset(rows, labels)
}

/// Posterior of the smoothed multinomial model computed in probability space.
fn brute_force_posterior(
    rows: &[Vec<u32>],
    labels: &[CategoryLabel],
    x: &[u32],
    alpha: f64,
) -> [f64; 2] {
    let dim = x.len();
    let mut joint = [0.0; 2];
    for c in CategoryLabel::ALL {
        let members: Vec<&Vec<u32>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == c)
            .map(|(r, _)| r)
            .collect();
        let prior = members.len() as f64 / rows.len() as f64;
        let total: u32 = members.iter().flat_map(|r| r.iter()).sum();
        let mut p = prior;
        for f in 0..dim {
            let count: u32 = members.iter().map(|r| r[f]).sum();
            let theta = (count as f64 + alpha) / (total as f64 + alpha * dim as f64);
            p *= theta.powi(x[f] as i32);
        }
        joint[c.index()] = p;
    }
    let z = joint[0] + joint[1];
    [(joint[0] / z).ln(), (joint[1] / z).ln()]
}

fn nb_case() -> impl Strategy<Value = (Vec<Vec<u32>>, Vec<CategoryLabel>, Vec<u32>)> {
    (1usize..=5, 2usize..=6).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(prop::collection::vec(0u32..4, dim), n),
            prop::collection::vec(prop_oneof![Just(Low), Just(High)], n - 2),
            prop::collection::vec(0u32..4, dim),
        )
            .prop_map(|(rows, mut labels, x)| {
                labels.insert(0, Low);
                labels.insert(1, High);
                (rows, labels, x)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn multinomial_nb_matches_brute_force((rows, labels, x) in nb_case()) {
        let d = dataset(rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect(), labels.clone());
        let m = fit_naive_bayes(&d, &TrainConfig::new(Algorithm::NaiveBayes, 0)).unwrap();
        let ModelParams::NaiveBayes(nb @ NaiveBayesModel::Multinomial { .. }) = m.params() else {
            panic!("expected multinomial model");
        };
        let got = nb.log_posterior(&x.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let want = brute_force_posterior(&rows, &labels, &x, 1.0);
        for c in 0..2 {
            prop_assert!((got[c] - want[c]).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn tree_ignores_positive_rescaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = substream(seed, Domain::Synthetic, 5);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng.random_range(0u32..5) as f64).collect()).collect();
        let mut labels: Vec<_> = rows.iter().map(|r| if r[1] + r[2] > 4.0 { High } else { Low }).collect();
        labels[0] = Low;
        labels[1] = High;
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let cfg = TrainConfig::new(Algorithm::DecisionTree, 0);
        let a = fit_decision_tree(&dataset(rows.clone(), labels.clone()), &cfg).unwrap();
        let b = fit_decision_tree(&dataset(scaled.clone(), labels), &cfg).unwrap();
        for i in 0..rows.len() {
            prop_assert_eq!(a.predict(&fv(&rows[i])).unwrap(), b.predict(&fv(&scaled[i])).unwrap());
        }
    }
}

#[test]
fn lr_gradient_matches_finite_differences() {
    let d = random_dataset(40, 3, 1);
    let mut rng = substream(2, Domain::Synthetic, 0);
    let h = 1e-6;
    for _ in 0..10 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = rng.random_range(-2.0..2.0);
        let lambda = 0.1;
        let (_, gw, gb) = logistic_objective(&d, &w, b, lambda);
        let mut numeric = Vec::new();
        for j in 0..3 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            numeric.push(
                (logistic_objective(&d, &up, b, lambda).0
                    - logistic_objective(&d, &down, b, lambda).0)
                    / (2.0 * h),
            );
        }
        numeric.push(
            (logistic_objective(&d, &w, b + h, lambda).0
                - logistic_objective(&d, &w, b - h, lambda).0)
                / (2.0 * h),
        );
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(1e-12);
        assert!(diff / norm < 1e-5, "relative error {}", diff / norm);
    }
}

#[test]
fn lr_loss_never_increases_even_with_a_large_rate() {
    let d = random_dataset(60, 3, 3);
    let params = LrParams {
        learning_rate: 50.0,
        ..LrParams::default()
    };
    let path = fit_logistic_path(&d, &params).unwrap();
    assert!(path.loss_history.len() > 1);
    assert!(path.loss_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn lr_separable_weight_is_positive_and_zero_iterations_tie() {
    let d = dataset(
        vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
        vec![Low, Low, High, High],
    );
    let path = fit_logistic_path(&d, &LrParams::default()).unwrap();
    assert!(path.model.weights[0] > 0.0);
    let zero = fit_logistic_path(
        &d,
        &LrParams {
            max_iters: 0,
            ..LrParams::default()
        },
    )
    .unwrap();
    assert_eq!(zero.model.weights, vec![0.0]);
    assert_eq!(zero.model.predict(&[-100.0]), High);
}

#[test]
fn single_tree_forest_equals_tree() {
    let d = random_dataset(200, 5, 9);
    let mut cfg = TrainConfig::new(Algorithm::RandomForest, 4);
    cfg.hyper.forest.n_trees = 1;
    cfg.hyper.forest.bootstrap = false;
    cfg.hyper.forest.max_features = MaxFeatures::All;
    let forest = fit_random_forest(&d, &cfg).unwrap();
    let tree = fit_decision_tree(&d, &TrainConfig::new(Algorithm::DecisionTree, 4)).unwrap();
    let probe = random_dataset(200, 5, 10);
    for x in d.rows().iter().chain(probe.rows()) {
        assert_eq!(forest.predict(x).unwrap(), tree.predict(x).unwrap());
    }
}

#[test]
fn tree_fits_xor_and_svm_fits_separable_blobs() {
    let xor = dataset(
        vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ],
        vec![Low, High, High, Low],
    );
    let tree = fit_decision_tree(&xor, &TrainConfig::new(Algorithm::DecisionTree, 0)).unwrap();
    for (x, y) in xor.rows().iter().zip(xor.labels()) {
        assert_eq!(tree.predict(x).unwrap(), *y);
    }

    let mut rng = substream(6, Domain::Synthetic, 0);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..80 {
        let (cx, y) = if i % 2 == 0 { (2.0, High) } else { (-2.0, Low) };
        rows.push(vec![
            cx + rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]);
        labels.push(y);
    }
    let blobs = dataset(rows, labels);
    let mut cfg = TrainConfig::new(Algorithm::LinearSvm, 1);
    cfg.hyper.svm.epochs = 200;
    let svm = fit_linear_svm(&blobs, &cfg).unwrap();
    for (x, y) in blobs.rows().iter().zip(blobs.labels()) {
        assert_eq!(svm.predict(x).unwrap(), *y);
    }
}

#[test]
fn svm_heavy_regularization_shrinks_weights() {
    let d = random_dataset(50, 4, 12);
    let mut cfg = TrainConfig::new(Algorithm::LinearSvm, 0);
    cfg.hyper.svm.lambda = 1e6;
    let m = fit_linear_svm(&d, &cfg).unwrap();
    let ModelParams::Svm(s) = m.params() else {
        panic!()
    };
    let norm = s.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    assert!(norm < 0.01, "{norm}");
}

#[test]
fn svm_duplicating_data_keeps_decision_function() {
    let d = random_dataset(40, 3, 13);
    let rows: Vec<FeatureVector> = d.rows().iter().chain(d.rows()).cloned().collect();
    let labels: Vec<CategoryLabel> = d.labels().iter().chain(d.labels()).copied().collect();
    let doubled = Dataset::new(rows, labels).unwrap();
    let cfg = TrainConfig::new(Algorithm::LinearSvm, 5);
    let (ModelParams::Svm(a), ModelParams::Svm(b)) = (
        fit_linear_svm(&d, &cfg).unwrap().params().clone(),
        fit_linear_svm(&doubled, &cfg).unwrap().params().clone(),
    ) else {
        panic!()
    };
    for x in random_dataset(50, 3, 14).rows() {
        assert!((a.decision(x.values()) - b.decision(x.values())).abs() < 1e-6);
    }
}

#[test]
fn every_fit_is_deterministic() {
    let d = random_dataset(60, 4, 15);
    let pos = Dataset::new(
        d.rows()
            .iter()
            .map(|r| {
                fv(&r
                    .values()
                    .iter()
                    .map(|v| v.abs().round())
                    .collect::<Vec<_>>())
            })
            .collect(),
        d.labels().to_vec(),
    )
    .unwrap();
    for alg in Algorithm::ALL {
        let mut cfg = TrainConfig::new(alg, 21);
        cfg.hyper.forest.n_trees = 10;
        let a = fit(&pos, &cfg).unwrap().to_text();
        let b = fit(&pos, &cfg).unwrap().to_text();
        assert_eq!(a, b, "{alg}");
    }
}

#[test]
fn prediction_rejects_wrong_dimension() {
    let d = random_dataset(20, 3, 16);
    let m = fit_decision_tree(&d, &TrainConfig::new(Algorithm::DecisionTree, 0)).unwrap();
    assert!(m.predict(&fv(&[1.0, 2.0])).is_err());
}
