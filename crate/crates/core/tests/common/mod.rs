//! Brute-force reference implementations shared by the test targets.
#![allow(dead_code)]

use fnwl_core::baselines::FlatDataset;
use fnwl_core::evaluation::ConfusionMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fig3() -> ConfusionMatrix {
    ConfusionMatrix::from_rows(vec![
        vec![5020, 41, 10, 22],
        vec![44, 4936, 49, 28],
        vec![10, 24, 4982, 35],
        vec![45, 34, 83, 4874],
    ])
    .unwrap()
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counted half.
pub fn pairwise_auc(scores: &[f64], actual: &[usize], k: usize, c: usize) -> Option<f64> {
    let pos: Vec<f64> = (0..actual.len())
        .filter(|&i| actual[i] == c)
        .map(|i| scores[i * k + c])
        .collect();
    let neg: Vec<f64> = (0..actual.len())
        .filter(|&i| actual[i] != c)
        .map(|i| scores[i * k + c])
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

pub fn knn_oracle(train: &FlatDataset, x: &[f64], k: usize) -> Vec<usize> {
    x.chunks(train.d)
        .map(|row| {
            let mut all: Vec<(f64, usize)> = (0..train.n).map(|i| (dist2(row, train.row(i)), i)).collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let nearest = &all[..k];
            let mut votes = vec![0; train.classes];
            for &(_, i) in nearest {
                votes[train.y[i]] += 1;
            }
            let top = *votes.iter().max().unwrap();
            nearest
                .iter()
                .map(|&(_, i)| train.y[i])
                .find(|&c| votes[c] == top)
                .unwrap()
        })
        .collect()
}

pub fn centroid_oracle(train: &FlatDataset, x: &[f64]) -> Vec<usize> {
    let centroids: Vec<Vec<f64>> = (0..train.classes)
        .map(|c| {
            let members: Vec<usize> = (0..train.n).filter(|&i| train.y[i] == c).collect();
            (0..train.d)
                .map(|j| members.iter().map(|&i| train.row(i)[j]).sum::<f64>() / members.len() as f64)
                .collect()
        })
        .collect();
    x.chunks(train.d)
        .map(|row| {
            let mut best = 0;
            for c in 1..train.classes {
                if dist2(row, &centroids[c]) < dist2(row, &centroids[best]) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub fn nb_oracle(train: &FlatDataset, x: &[f64]) -> Vec<usize> {
    let var_of = |rows: &[usize], j: usize| {
        let m = rows.iter().map(|&i| train.row(i)[j]).sum::<f64>() / rows.len() as f64;
        let v = rows.iter().map(|&i| (train.row(i)[j] - m).powi(2)).sum::<f64>() / rows.len() as f64;
        (m, v)
    };
    let all: Vec<usize> = (0..train.n).collect();
    let eps = 1e-9 * (0..train.d).map(|j| var_of(&all, j).1).fold(0.0, f64::max);
    let params: Vec<(f64, Vec<(f64, f64)>)> = (0..train.classes)
        .map(|c| {
            let rows: Vec<usize> = (0..train.n).filter(|&i| train.y[i] == c).collect();
            let prior = rows.len() as f64 / train.n as f64;
            (
                prior,
                (0..train.d)
                    .map(|j| {
                        let (m, v) = var_of(&rows, j);
                        (m, v + eps)
                    })
                    .collect(),
            )
        })
        .collect();
    x.chunks(train.d)
        .map(|row| {
            let score = |c: usize| {
                let (prior, ref mv) = params[c];
                let mut s = prior.ln();
                for j in 0..train.d {
                    let (m, v) = mv[j];
                    s += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (row[j] - m).powi(2) / (2.0 * v);
                }
                s
            };
            let mut best = 0;
            for c in 1..train.classes {
                if score(c) > score(best) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Naive CART: every candidate threshold is re-scored by scanning all rows.
pub struct OracleTree {
    nodes: Vec<OracleNode>,
}

enum OracleNode {
    Leaf(usize),
    Split(usize, f64, usize, usize),
}

impl OracleTree {
    pub fn fit(train: &FlatDataset, max_depth: Option<usize>) -> Self {
        let mut t = OracleTree { nodes: Vec::new() };
        t.grow(train, (0..train.n).collect(), 0, max_depth);
        t
    }

    fn grow(&mut self, data: &FlatDataset, rows: Vec<usize>, depth: usize, max_depth: Option<usize>) -> usize {
        let mut counts = vec![0i128; data.classes];
        for &i in &rows {
            counts[data.y[i]] += 1;
        }
        let mut label = 0;
        for c in 0..data.classes {
            if counts[c] > counts[label] {
                label = c;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(OracleNode::Leaf(label));
        let classes_present = counts.iter().filter(|&&c| c > 0).count();
        if classes_present <= 1 || max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let n = rows.len() as i128;
        // Size-weighted child Gini times n_l·n_r: n·n_l·n_r − Σl²·n_r − Σr²·n_l over n_l·n_r.
        let parent = (n * n - counts.iter().map(|c| c * c).sum::<i128>(), n);
        let mut best: Option<(usize, f64, (i128, i128))> = None;
        for f in 0..data.d {
            let mut vals: Vec<f64> = rows.iter().map(|&i| data.row(i)[f]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for w in vals.windows(2) {
                let mut t = w[0] / 2.0 + w[1] / 2.0;
                if t >= w[1] {
                    t = w[0];
                }
                let mut l = vec![0i128; data.classes];
                let mut r = vec![0i128; data.classes];
                for &i in &rows {
                    if data.row(i)[f] <= t {
                        l[data.y[i]] += 1;
                    } else {
                        r[data.y[i]] += 1;
                    }
                }
                let (nl, nr) = (l.iter().sum::<i128>(), r.iter().sum::<i128>());
                let sl: i128 = l.iter().map(|c| c * c).sum();
                let sr: i128 = r.iter().map(|c| c * c).sum();
                let imp = (n * nl * nr - sl * nr - sr * nl, nl * nr);
                // imp/n_l n_r < parent/n, i.e. strictly lower weighted impurity.
                let better_than = |o: (i128, i128)| imp.0 * o.1 < o.0 * imp.1;
                if !better_than(parent) {
                    continue;
                }
                if best.is_none_or(|b| better_than(b.2)) {
                    best = Some((f, t, imp));
                }
            }
        }
        let Some((f, t, _)) = best else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| data.row(i)[f] <= t);
        let li = self.grow(data, l, depth + 1, max_depth);
        let ri = self.grow(data, r, depth + 1, max_depth);
        self.nodes[id] = OracleNode::Split(f, t, li, ri);
        id
    }

    pub fn predict(&self, d: usize, x: &[f64]) -> Vec<usize> {
        x.chunks(d)
            .map(|row| {
                let mut id = 0;
                loop {
                    match self.nodes[id] {
                        OracleNode::Leaf(c) => return c,
                        OracleNode::Split(f, t, l, r) => id = if row[f] <= t { l } else { r },
                    }
                }
            })
            .collect()
    }
}

/// Random instance with coarse integer features so distance and threshold ties occur.
pub fn random_instance(seed: u64, n: usize, d: usize, classes: usize) -> (FlatDataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        if (0..classes).any(|c| !y.contains(&c)) {
            continue;
        }
        let x: Vec<f64> = (0..n * d)
            .map(|i| (rng.random_range(0..7) as f64) + 0.5 * y[i / d] as f64)
            .collect();
        let test: Vec<f64> = (0..n * d).map(|_| rng.random_range(0..9) as f64 * 0.75).collect();
        return (FlatDataset::new(x, y, d, classes).unwrap(), test);
    }
}

/// Labels independent of features.
pub fn chance_instance(seed: u64, n: usize, d: usize, classes: usize) -> (FlatDataset, FlatDataset) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let make = |rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        FlatDataset::new(x, y, d, classes).unwrap()
    };
    let train = make(&mut rng);
    let test = make(&mut rng);
    (train, test)
}

pub fn accuracy(pred: &[usize], actual: &[usize]) -> f64 {
    pred.iter().zip(actual).filter(|(a, b)| a == b).count() as f64 / actual.len() as f64
}
