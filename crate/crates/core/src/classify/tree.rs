//! CART with Gini impurity. No pruning.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, TreeParams};
use crate::corpus::CategoryLabel;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(CategoryLabel),
}

/// Nodes in preorder; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<Node>) -> Option<Self> {
        let n = nodes.len();
        let ok = n > 0
            && nodes.iter().enumerate().all(|(i, node)| match node {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => *left > i && *right > i && *left < n && *right < n && threshold.is_finite(),
                Node::Leaf(_) => true,
            });
        ok.then_some(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> CategoryLabel {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Longest root-to-leaf path, counted in edges.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub(crate) fn max_feature(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Majority label of `idx`; ties go to `"34"`.
fn majority(labels: &[CategoryLabel], idx: &[usize]) -> CategoryLabel {
    let high = idx
        .iter()
        .filter(|&&i| labels[i] == CategoryLabel::High)
        .count();
    if 2 * high >= idx.len() {
        CategoryLabel::High
    } else {
        CategoryLabel::Low
    }
}

/// Sum of `n_child * gini(child)` over both children.
fn weighted_gini(left: [usize; 2], right: [usize; 2]) -> f64 {
    let part = |c: [usize; 2]| {
        let n = (c[0] + c[1]) as f64;
        let (a, b) = (c[0] as f64, c[1] as f64);
        n - (a * a + b * b) / n
    };
    part(left) + part(right)
}

#[derive(Debug, Clone, Copy)]
struct Split {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Split {
    /// Lower impurity wins, then lower feature index, then lower threshold.
    fn better_than(&self, other: &Split) -> bool {
        self.score
            .total_cmp(&other.score)
            .then(self.feature.cmp(&other.feature))
            .then(self.threshold.total_cmp(&other.threshold))
            .is_lt()
    }
}

/// Best split on one feature, or `None` if all values are equal.
fn best_split_on(
    data: &Dataset,
    idx: &[usize],
    feature: usize,
    scratch: &mut Vec<(f64, usize)>,
) -> Option<Split> {
    let rows = data.rows();
    let labels = data.labels();
    let first = rows[*idx.first()?][feature];
    if idx.iter().all(|&i| rows[i][feature] == first) {
        return None;
    }
    scratch.clear();
    scratch.extend(idx.iter().map(|&i| (rows[i][feature], labels[i].index())));
    scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = [0usize; 2];
    scratch.iter().for_each(|&(_, c)| total[c] += 1);
    let mut left = [0usize; 2];
    let mut best: Option<Split> = None;
    for j in 0..scratch.len() - 1 {
        left[scratch[j].1] += 1;
        let (v, next) = (scratch[j].0, scratch[j + 1].0);
        if v == next {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let mut threshold = v + (next - v) / 2.0;
        if threshold >= next {
            threshold = v;
        }
        let cand = Split {
            score: weighted_gini(left, right),
            feature,
            threshold,
        };
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    }
    best
}

/// Random feature subsampling for forest trees.
pub(super) struct FeatureSampler<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub max_features: usize,
}

pub(super) struct Builder<'a> {
    data: &'a Dataset,
    params: TreeParams,
    sampler: Option<FeatureSampler<'a>>,
    nodes: Vec<Node>,
    scratch: Vec<(f64, usize)>,
    order: Vec<usize>,
}

impl<'a> Builder<'a> {
    pub fn new(data: &'a Dataset, params: TreeParams, sampler: Option<FeatureSampler<'a>>) -> Self {
        Builder {
            data,
            params,
            sampler,
            nodes: Vec::new(),
            scratch: Vec::new(),
            order: (0..data.dim()).collect(),
        }
    }

    pub fn build(mut self, idx: Vec<usize>) -> DecisionTree {
        self.grow(idx, 0);
        DecisionTree { nodes: self.nodes }
    }

    fn find_split(&mut self, idx: &[usize]) -> Option<Split> {
        let mut best: Option<Split> = None;
        let consider = |s: Option<Split>, best: &mut Option<Split>| -> bool {
            match s {
                Some(s) => {
                    if best.as_ref().is_none_or(|b| s.better_than(b)) {
                        *best = Some(s);
                    }
                    true
                }
                None => false,
            }
        };
        match self.sampler.as_mut() {
            None => {
                for f in 0..self.data.dim() {
                    let s = best_split_on(self.data, idx, f, &mut self.scratch);
                    consider(s, &mut best);
                }
            }
            Some(sampler) => {
                // Visit features in random order until `max_features` of them
                // admit a split; constant features are not counted.
                self.order.shuffle(sampler.rng);
                let mut usable = 0;
                for &f in &self.order {
                    if usable == sampler.max_features {
                        break;
                    }
                    let s = best_split_on(self.data, idx, f, &mut self.scratch);
                    if consider(s, &mut best) {
                        usable += 1;
                    }
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let labels = self.data.labels();
        let at = self.nodes.len();
        let pure = idx.iter().all(|&i| labels[i] == labels[idx[0]]);
        if pure || depth >= self.params.max_depth || idx.len() < self.params.min_samples_split {
            self.nodes.push(Node::Leaf(majority(labels, &idx)));
            return at;
        }
        let Some(split) = self.find_split(&idx) else {
            self.nodes.push(Node::Leaf(majority(labels, &idx)));
            return at;
        };
        let rows = self.data.rows();
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| rows[i][split.feature] <= split.threshold);
        self.nodes.push(Node::Leaf(CategoryLabel::High));
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

pub(super) fn fit(data: &Dataset, params: &TreeParams) -> DecisionTree {
    Builder::new(data, *params, None).build((0..data.len()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tests::fv;
    use CategoryLabel::{High, Low};

    fn xor() -> Dataset {
        Dataset::new(
            vec![
                fv(&[0.0, 0.0]),
                fv(&[0.0, 1.0]),
                fv(&[1.0, 0.0]),
                fv(&[1.0, 1.0]),
            ],
            vec![Low, High, High, Low],
        )
        .unwrap()
    }

    #[test]
    fn fits_xor_with_depth_two() {
        let d = xor();
        let t = fit(&d, &TreeParams::default());
        for (x, y) in d.rows().iter().zip(d.labels()) {
            assert_eq!(t.predict(x.values()), *y);
        }
        assert_eq!(t.depth(), 2);
        // Both root candidates tie on impurity; the lower feature index wins.
        assert!(
            matches!(t.nodes()[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5)
        );
    }

    #[test]
    fn depth_limit_is_respected() {
        let t = fit(
            &xor(),
            &TreeParams {
                max_depth: 1,
                min_samples_split: 2,
            },
        );
        assert_eq!(t.depth(), 1);
        let t = fit(
            &xor(),
            &TreeParams {
                max_depth: 0,
                min_samples_split: 2,
            },
        );
        assert_eq!(t.nodes(), &[Node::Leaf(High)]);
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let d = Dataset::new(vec![fv(&[0.0]), fv(&[1.0])], vec![Low, Low]).unwrap();
        let t = Builder::new(&d, TreeParams::default(), None).build(vec![0, 1]);
        assert_eq!(t.nodes(), &[Node::Leaf(Low)]);
        let single = DecisionTree::from_nodes(vec![Node::Leaf(Low)]).unwrap();
        assert_eq!(single.predict(&[123.0]), Low);
    }

    #[test]
    fn constant_feature_is_never_chosen() {
        let d = Dataset::new(
            vec![
                fv(&[7.0, 0.0]),
                fv(&[7.0, 1.0]),
                fv(&[7.0, 2.0]),
                fv(&[7.0, 3.0]),
            ],
            vec![Low, Low, High, High],
        )
        .unwrap();
        let t = fit(&d, &TreeParams::default());
        assert!(t
            .nodes()
            .iter()
            .all(|n| !matches!(n, Node::Split { feature: 0, .. })));
        let only_constant = Dataset::new(
            vec![fv(&[7.0]), fv(&[7.0]), fv(&[7.0])],
            vec![Low, High, Low],
        )
        .unwrap();
        assert_eq!(
            fit(&only_constant, &TreeParams::default()).nodes(),
            &[Node::Leaf(Low)]
        );
    }

    #[test]
    fn split_tie_goes_to_34_at_leaves() {
        let d = Dataset::new(vec![fv(&[1.0]), fv(&[1.0])], vec![Low, High]).unwrap();
        assert_eq!(fit(&d, &TreeParams::default()).nodes(), &[Node::Leaf(High)]);
    }

    #[test]
    fn from_nodes_rejects_cycles() {
        let bad = vec![Node::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
        }];
        assert!(DecisionTree::from_nodes(bad).is_none());
        assert!(DecisionTree::from_nodes(vec![]).is_none());
    }
}
