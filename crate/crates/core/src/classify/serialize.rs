//! Versioned line-oriented text format for trained models.
//!
//! ```text
//! hurricat-model 1
//! kind <algorithm>
//! dim <n>
//! seed <u64>
//! hyper <key> <value>      (one line per hyperparameter)
//! params
//! ...                      (kind-specific)
//! end
//! ```
//!
//! Floats are written with Rust's shortest round-trip representation, so a
//! model read back compares equal to the one written and re-serializes to
//! identical bytes.

use std::fmt::Write as _;

use super::{
    Algorithm, DecisionTree, Hyperparameters, LinearSvm, LogisticModel, ModelParams,
    NaiveBayesModel, NbVariant, Node, RandomForest, TrainConfig, TrainedModel,
};
use crate::corpus::CategoryLabel;
use crate::error::{Error, Result};

const MAGIC: &str = "hurricat-model";
const VERSION: u32 = 1;

impl Hyperparameters {
    /// Every hyperparameter as `(key, value)`, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("nb.alpha", self.nb.alpha.to_string()),
            ("nb.variant", self.nb.variant.as_str().to_string()),
            ("lr.lambda", self.lr.lambda.to_string()),
            ("lr.learning_rate", self.lr.learning_rate.to_string()),
            ("lr.max_iters", self.lr.max_iters.to_string()),
            ("lr.tol", self.lr.tol.to_string()),
            ("tree.max_depth", self.tree.max_depth.to_string()),
            (
                "tree.min_samples_split",
                self.tree.min_samples_split.to_string(),
            ),
            ("forest.n_trees", self.forest.n_trees.to_string()),
            ("forest.bootstrap", self.forest.bootstrap.to_string()),
            ("forest.max_features", self.forest.max_features.to_string()),
            ("forest.max_depth", self.forest.tree.max_depth.to_string()),
            (
                "forest.min_samples_split",
                self.forest.tree.min_samples_split.to_string(),
            ),
            ("svm.lambda", self.svm.lambda.to_string()),
            ("svm.epochs", self.svm.epochs.to_string()),
        ]
    }

    /// Set one hyperparameter by its [`entries`](Self::entries) key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value {v:?} for {key}")))
        }
        match key {
            "nb.alpha" => self.nb.alpha = num(key, value)?,
            "nb.variant" => self.nb.variant = value.trim().parse()?,
            "lr.lambda" => self.lr.lambda = num(key, value)?,
            "lr.learning_rate" => self.lr.learning_rate = num(key, value)?,
            "lr.max_iters" => self.lr.max_iters = num(key, value)?,
            "lr.tol" => self.lr.tol = num(key, value)?,
            "tree.max_depth" => self.tree.max_depth = num(key, value)?,
            "tree.min_samples_split" => self.tree.min_samples_split = num(key, value)?,
            "forest.n_trees" => self.forest.n_trees = num(key, value)?,
            "forest.bootstrap" => self.forest.bootstrap = num(key, value)?,
            "forest.max_features" => self.forest.max_features = value.trim().parse()?,
            "forest.max_depth" => self.forest.tree.max_depth = num(key, value)?,
            "forest.min_samples_split" => self.forest.tree.min_samples_split = num(key, value)?,
            "svm.lambda" => self.svm.lambda = num(key, value)?,
            "svm.epochs" => self.svm.epochs = num(key, value)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown hyperparameter {other:?}"
                )))
            }
        }
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

fn write_tree(out: &mut String, t: &DecisionTree) {
    let _ = writeln!(out, "nodes {}", t.nodes().len());
    for n in t.nodes() {
        match n {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(out, "split {feature} {threshold} {left} {right}");
            }
            Node::Leaf(l) => {
                let _ = writeln!(out, "leaf {l}");
            }
        }
    }
}

impl TrainedModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "kind {}", self.config.algorithm);
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "seed {}", self.config.seed);
        for (k, v) in self.config.hyper.entries() {
            let _ = writeln!(out, "hyper {k} {v}");
        }
        out.push_str("params\n");
        match &self.params {
            ModelParams::NaiveBayes(NaiveBayesModel::Multinomial {
                log_prior,
                feature_log_prob,
            }) => {
                let _ = writeln!(out, "nb multinomial");
                let _ = writeln!(out, "log_prior {}", join(log_prior));
                for l in CategoryLabel::ALL {
                    let _ = writeln!(
                        out,
                        "feature_log_prob {l} {}",
                        join(&feature_log_prob[l.index()])
                    );
                }
            }
            ModelParams::NaiveBayes(NaiveBayesModel::Gaussian {
                log_prior,
                mean,
                var,
            }) => {
                let _ = writeln!(out, "nb gaussian");
                let _ = writeln!(out, "log_prior {}", join(log_prior));
                for l in CategoryLabel::ALL {
                    let _ = writeln!(out, "mean {l} {}", join(&mean[l.index()]));
                }
                for l in CategoryLabel::ALL {
                    let _ = writeln!(out, "var {l} {}", join(&var[l.index()]));
                }
            }
            ModelParams::Logistic(LogisticModel { weights, bias })
            | ModelParams::Svm(LinearSvm { weights, bias }) => {
                let _ = writeln!(out, "weights {}", join(weights));
                let _ = writeln!(out, "bias {bias}");
            }
            ModelParams::Tree(t) => write_tree(&mut out, t),
            ModelParams::Forest(f) => {
                let _ = writeln!(out, "forest_seed {}", f.seed());
                let _ = writeln!(out, "trees {}", f.trees().len());
                for t in f.trees() {
                    write_tree(&mut out, t);
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let version = r.keyed(MAGIC)?;
        if version != VERSION.to_string() {
            return Err(r.bad(format!("unsupported model version {version:?}")));
        }
        let algorithm: Algorithm = r.keyed("kind")?.parse()?;
        let dim: usize = r.keyed_parse("dim")?;
        let seed: u64 = r.keyed_parse("seed")?;
        let mut hyper = Hyperparameters::default();
        loop {
            let line = r.line()?;
            if line == "params" {
                break;
            }
            let rest = line
                .strip_prefix("hyper ")
                .ok_or_else(|| r.bad("expected `hyper` or `params`".into()))?;
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| r.bad("expected `hyper <key> <value>`".into()))?;
            hyper.set(k, v).map_err(|e| r.bad(e.to_string()))?;
        }
        let config = TrainConfig {
            algorithm,
            seed,
            hyper,
        };
        let params = match algorithm {
            Algorithm::NaiveBayes => {
                let variant: NbVariant = r.keyed("nb")?.parse()?;
                let lp = r.floats("log_prior", 2)?;
                let log_prior = [lp[0], lp[1]];
                match variant {
                    NbVariant::Multinomial => {
                        ModelParams::NaiveBayes(NaiveBayesModel::Multinomial {
                            log_prior,
                            feature_log_prob: r.per_class("feature_log_prob", dim)?,
                        })
                    }
                    NbVariant::Gaussian => {
                        let mean = r.per_class("mean", dim)?;
                        let var = r.per_class("var", dim)?;
                        ModelParams::NaiveBayes(NaiveBayesModel::Gaussian {
                            log_prior,
                            mean,
                            var,
                        })
                    }
                }
            }
            Algorithm::LogisticRegression | Algorithm::LinearSvm => {
                let weights = r.floats("weights", dim)?;
                let bias = r.floats("bias", 1)?[0];
                if algorithm == Algorithm::LinearSvm {
                    ModelParams::Svm(LinearSvm { weights, bias })
                } else {
                    ModelParams::Logistic(LogisticModel { weights, bias })
                }
            }
            Algorithm::DecisionTree => ModelParams::Tree(r.tree()?),
            Algorithm::RandomForest => {
                let forest_seed: u64 = r.keyed_parse("forest_seed")?;
                let n: usize = r.keyed_parse("trees")?;
                let trees = (0..n).map(|_| r.tree()).collect::<Result<Vec<_>>>()?;
                ModelParams::Forest(
                    RandomForest::from_trees(trees, forest_seed)
                        .ok_or_else(|| r.bad("forest without trees".into()))?,
                )
            }
        };
        if r.line()? != "end" {
            return Err(r.bad("expected `end`".into()));
        }
        TrainedModel::from_parts(config, dim, params)
    }
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    current: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate().peekable(),
            current: 0,
        }
    }

    fn bad(&self, reason: String) -> Error {
        Error::Parse {
            what: "model file",
            line: self.current,
            reason,
        }
    }

    /// Next non-comment line.
    fn line(&mut self) -> Result<&'a str> {
        loop {
            let (i, l) = self.lines.next().ok_or_else(|| Error::Format {
                what: "model file",
                reason: "unexpected end of file".into(),
            })?;
            self.current = i + 1;
            let l = l.trim_end();
            if !l.starts_with('#') && !l.is_empty() {
                return Ok(l);
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.line()?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ => Err(self.bad(format!("expected `{key}`"))),
        }
    }

    fn keyed_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        v.parse()
            .map_err(|_| self.bad(format!("bad {key} value {v:?}")))
    }

    fn floats(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        let rest = self.keyed(key)?;
        self.parse_floats(rest, n)
    }

    fn parse_floats(&self, s: &str, n: usize) -> Result<Vec<f64>> {
        let v = s
            .split(' ')
            .map(|f| f.parse::<f64>().ok().filter(|x| !x.is_nan()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.bad("non-numeric value".into()))?;
        if v.len() != n {
            return Err(self.bad(format!("expected {n} values, found {}", v.len())));
        }
        Ok(v)
    }

    fn per_class(&mut self, key: &str, dim: usize) -> Result<[Vec<f64>; 2]> {
        let mut out = [Vec::new(), Vec::new()];
        for l in CategoryLabel::ALL {
            let rest = self.keyed(key)?;
            let (label, values) = rest
                .split_once(' ')
                .ok_or_else(|| self.bad(format!("expected `{key} <label> <values>`")))?;
            if label != l.as_str() {
                return Err(self.bad(format!("expected label {l}, found {label:?}")));
            }
            out[l.index()] = self.parse_floats(values, dim)?;
        }
        Ok(out)
    }

    fn tree(&mut self) -> Result<DecisionTree> {
        let n: usize = self.keyed_parse("nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let l = self.line()?;
            let parts: Vec<&str> = l.split(' ').collect();
            let node = match parts.as_slice() {
                ["leaf", label] => {
                    Node::Leaf(label.parse().map_err(|e: Error| self.bad(e.to_string()))?)
                }
                ["split", f, t, left, right] => {
                    let bad = || self.bad(format!("malformed split {l:?}"));
                    Node::Split {
                        feature: f.parse().map_err(|_| bad())?,
                        threshold: t.parse().map_err(|_| bad())?,
                        left: left.parse().map_err(|_| bad())?,
                        right: right.parse().map_err(|_| bad())?,
                    }
                }
                _ => return Err(self.bad(format!("expected node, found {l:?}"))),
            };
            nodes.push(node);
        }
        DecisionTree::from_nodes(nodes).ok_or_else(|| self.bad("malformed tree".into()))
    }
}
