use super::{check_rows, FlatDataset, Prediction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: usize,
        counts: Vec<usize>,
    },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier with Gini impurity. Nodes live in an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub classes: usize,
    pub d: usize,
    pub max_depth: Option<usize>,
    pub nodes: Vec<TreeNode>,
}

/// Exact split quality `Σ_l c²/n_l + Σ_r c²/n_r` kept as a fraction. Maximising it
/// minimises the size-weighted Gini impurity of the children.
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of_children(sq_left: u64, n_left: u64, sq_right: u64, n_right: u64) -> Self {
        Purity {
            num: sq_left as u128 * n_right as u128 + sq_right as u128 * n_left as u128,
            den: n_left as u128 * n_right as u128,
        }
    }

    fn greater(&self, other: &Purity) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    purity: Purity,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a / 2.0 + b / 2.0;
    if t >= b || !t.is_finite() {
        a
    } else {
        t
    }
}

fn majority(counts: &[usize]) -> usize {
    (0..counts.len()).fold(0, |best, c| if counts[c] > counts[best] { c } else { best })
}

struct Builder<'a> {
    data: &'a FlatDataset,
    max_depth: Option<usize>,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.data.classes];
        for &i in rows {
            counts[self.data.y[i]] += 1;
        }
        counts
    }

    fn best_split(&self, rows: &[usize], counts: &[usize]) -> Option<Candidate> {
        let n = rows.len() as u64;
        let sq = |c: &[u64]| c.iter().map(|v| v * v).sum::<u64>();
        let parent_sq: u64 = counts.iter().map(|&v| (v * v) as u64).sum();
        let parent = Purity {
            num: parent_sq as u128,
            den: n as u128,
        };
        let mut best: Option<Candidate> = None;
        let mut order = rows.to_vec();
        for f in 0..self.data.d {
            let value = |i: usize| self.data.x[i * self.data.d + f];
            order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            let mut left = vec![0u64; self.data.classes];
            let mut right: Vec<u64> = counts.iter().map(|&c| c as u64).collect();
            let (mut sq_l, mut sq_r) = (0u64, sq(&right));
            for (pos, pair) in order.windows(2).enumerate() {
                let k = self.data.y[pair[0]];
                sq_l += 2 * left[k] + 1;
                sq_r -= 2 * right[k] - 1;
                left[k] += 1;
                right[k] -= 1;
                let (a, b) = (value(pair[0]), value(pair[1]));
                if a >= b {
                    continue;
                }
                let n_l = pos as u64 + 1;
                let purity = Purity::of_children(sq_l, n_l, sq_r, n - n_l);
                // Strict improvement over the parent and over earlier candidates.
                if !purity.greater(&parent) {
                    continue;
                }
                if best.as_ref().is_none_or(|b| purity.greater(&b.purity)) {
                    best = Some(Candidate {
                        feature: f,
                        threshold: midpoint(a, b),
                        purity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            label: majority(&counts),
            counts: counts.clone(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some(split) = self.best_split(&rows, &counts) else {
            return id;
        };
        let d = self.data.d;
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.data.x[i * d + split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub fn fit(train: &FlatDataset, max_depth: Option<usize>) -> Result<Self> {
        if train.n == 0 {
            return Err(Error::Fit("decision tree needs at least one training row".into()));
        }
        let mut b = Builder {
            data: train,
            max_depth,
            nodes: Vec::new(),
        };
        b.grow((0..train.n).collect(), 0);
        Ok(DecisionTree {
            classes: train.classes,
            d: train.d,
            max_depth,
            nodes: b.nodes,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_for(&self, row: &[f64]) -> &TreeNode {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    /// Scores are the class frequencies of the reached leaf.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let n = check_rows(x, self.d, "DecisionTree::predict")?;
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n * self.classes);
        for row in x.chunks_exact(self.d) {
            let TreeNode::Leaf { label, counts } = self.leaf_for(row) else {
                unreachable!("walk ends at a leaf")
            };
            let total: usize = counts.iter().sum();
            labels.push(*label);
            scores.extend(counts.iter().map(|&c| c as f64 / total as f64));
        }
        Ok(Prediction {
            classes: self.classes,
            labels,
            scores,
        })
    }
}

pub fn decision_tree_fit_predict(train: &FlatDataset, test_x: &[f64], max_depth: Option<usize>) -> Result<Prediction> {
    DecisionTree::fit(train, max_depth)?.predict(test_x)
}
