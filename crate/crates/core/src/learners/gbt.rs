//! Histogram-based gradient-boosted regression trees on binary log-loss.
//!
//! Each round fits a depth-limited tree to the gradient and Hessian of the
//! log-loss with Newton leaf values, shrunk by the learning rate. Features
//! are pre-binned at quantiles; splits are stored as real-valued cut points
//! so prediction works on raw covariates.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;

use super::config::GbtParams;
use crate::rng;

struct Bins {
    /// Column-major bin index of every training value.
    codes: Vec<Vec<u16>>,
    /// Per feature, the cut point between bin `b` and bin `b + 1`.
    cuts: Vec<Vec<f64>>,
}

impl Bins {
    fn new(x: ArrayView2<'_, f64>, max_bins: usize) -> Self {
        let mut codes = Vec::with_capacity(x.ncols());
        let mut cuts = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mut sorted: Vec<f64> = col.to_vec();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut uniq = sorted.clone();
            uniq.dedup();
            // upper edges of each bin, taken from the data
            let edges: Vec<f64> = if uniq.len() <= max_bins {
                uniq.clone()
            } else {
                let n = sorted.len();
                let mut e: Vec<f64> = (1..max_bins).map(|b| sorted[b * n / max_bins - 1]).collect();
                e.push(*sorted.last().expect("non-empty column"));
                e.dedup();
                e
            };
            let c: Vec<f64> = edges
                .iter()
                .take(edges.len().saturating_sub(1))
                .map(|&e| {
                    let next = uniq[uniq.partition_point(|&u| u <= e)];
                    0.5 * (e + next)
                })
                .collect();
            codes.push(col.iter().map(|&v| c.partition_point(|&cut| cut < v) as u16).collect());
            cuts.push(c);
        }
        Self { codes, cuts }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split { feature: usize, bin: u16, cut: f64, left: usize, right: usize },
    Leaf(f64),
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, cut, left, right, .. } => {
                    i = if row[feature] <= cut { left } else { right };
                }
            }
        }
    }

    fn predict_binned(&self, bins: &Bins, r: usize) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, bin, left, right, .. } => {
                    i = if bins.codes[feature][r] <= bin { left } else { right };
                }
            }
        }
    }
}

/// Per-bin gradient sum, Hessian sum and count for every feature of a node,
/// flattened with `offsets[f]` marking the first bin of feature `f`.
#[derive(Clone)]
struct Histogram {
    cells: Vec<(f64, f64, u32)>,
}

impl Histogram {
    fn subtract(&mut self, other: &Histogram) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.0 -= b.0;
            a.1 -= b.1;
            a.2 -= b.2;
        }
    }
}

struct Grower<'a> {
    bins: &'a Bins,
    offsets: Vec<usize>,
    gh: &'a [(f64, f64)],
    params: &'a GbtParams,
    nodes: Vec<Node>,
}

impl<'a> Grower<'a> {
    fn new(bins: &'a Bins, gh: &'a [(f64, f64)], params: &'a GbtParams) -> Self {
        let mut offsets = Vec::with_capacity(bins.cuts.len() + 1);
        let mut total = 0;
        for c in &bins.cuts {
            offsets.push(total);
            total += c.len() + 1;
        }
        offsets.push(total);
        Self { bins, offsets, gh, params, nodes: Vec::new() }
    }

    fn histogram(&self, rows: &[usize]) -> Histogram {
        let mut cells = vec![(0.0, 0.0, 0u32); *self.offsets.last().expect("offsets")];
        for (f, codes) in self.bins.codes.iter().enumerate() {
            if self.bins.cuts[f].is_empty() {
                continue;
            }
            let h = &mut cells[self.offsets[f]..self.offsets[f + 1]];
            for &r in rows {
                let c = &mut h[codes[r] as usize];
                let (g, hs) = self.gh[r];
                c.0 += g;
                c.1 += hs;
                c.2 += 1;
            }
        }
        Histogram { cells }
    }

    fn totals(&self, rows: &[usize]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + self.gh[r].0, h + self.gh[r].1))
    }

    fn best_split(&self, hist: &Histogram, n: usize, gt: f64, ht: f64) -> Option<(usize, u16, f64)> {
        let l2 = self.params.l2;
        let min_leaf = self.params.min_samples_leaf;
        let parent = gt * gt / (ht + l2);
        let mut best: Option<(usize, u16, f64)> = None;
        for (f, cuts) in self.bins.cuts.iter().enumerate() {
            if cuts.is_empty() {
                continue;
            }
            let h = &hist.cells[self.offsets[f]..self.offsets[f + 1]];
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for (b, cell) in h.iter().enumerate().take(h.len() - 1) {
                gl += cell.0;
                hl += cell.1;
                cl += cell.2 as usize;
                let cr = n - cl;
                if cl < min_leaf {
                    continue;
                }
                if cr < min_leaf {
                    break;
                }
                let (gr, hr) = (gt - gl, ht - hl);
                if hl < 1e-6 || hr < 1e-6 {
                    continue;
                }
                let gain = gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, b as u16, gain));
                }
            }
        }
        best
    }

    /// Grows the subtree over `rows`; `hist` is the node's histogram when
    /// the parent already derived it.
    fn grow(&mut self, rows: Vec<usize>, depth: usize, hist: Option<Histogram>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let (gt, ht) = self.totals(&rows);
        let splittable = depth < self.params.max_depth && rows.len() >= 2 * self.params.min_samples_leaf;
        let mut hist = if splittable { Some(hist.unwrap_or_else(|| self.histogram(&rows))) } else { None };
        let split = hist.as_ref().and_then(|h| self.best_split(h, rows.len(), gt, ht));
        match split {
            None => {
                self.nodes[id] = Node::Leaf(-gt / (ht + self.params.l2));
            }
            Some((feature, bin, _)) => {
                let codes = &self.bins.codes[feature];
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| codes[i] <= bin);
                let cut = self.bins.cuts[feature][bin as usize];
                // children that will split get histograms: the smaller one
                // directly, the larger one by subtraction from the parent
                let (lh, rh) = if depth + 1 < self.params.max_depth {
                    let mut parent = hist.take().expect("split implies histogram");
                    if l.len() <= r.len() {
                        let small = self.histogram(&l);
                        parent.subtract(&small);
                        (Some(small), Some(parent))
                    } else {
                        let small = self.histogram(&r);
                        parent.subtract(&small);
                        (Some(parent), Some(small))
                    }
                } else {
                    (None, None)
                };
                let left = self.grow(l, depth + 1, lh);
                let right = self.grow(r, depth + 1, rh);
                self.nodes[id] = Node::Split { feature, bin, cut, left, right };
            }
        }
        id
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn mean_log_loss(scores: &[f64], y: &[f64]) -> f64 {
    // log(1 + e^s) - y s
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(&s, &t)| s.max(0.0) + (-s.abs()).exp().ln_1p() - t * s)
        .sum();
    total / scores.len() as f64
}

#[derive(Debug, Clone)]
pub struct BinaryBooster {
    base_score: f64,
    trees: Vec<Tree>,
    train_losses: Vec<f64>,
}

impl BinaryBooster {
    fn fit(x: ArrayView2<'_, f64>, y: &[f64], params: &GbtParams, seed: u64) -> Self {
        let n = x.nrows();
        let bins = Bins::new(x, params.max_bins);
        let mean = (y.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (mean / (1.0 - mean)).ln();
        let mut scores = vec![base_score; n];
        let mut gh = vec![(0.0, 0.0); n];
        let mut trees = Vec::with_capacity(params.n_trees);
        let mut train_losses = Vec::with_capacity(params.n_trees + 1);
        train_losses.push(mean_log_loss(&scores, y));
        let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let mut rng = rng::rng_from_seed(seed);
        for _ in 0..params.n_trees {
            for i in 0..n {
                let p = sigmoid(scores[i]);
                gh[i] = (p - y[i], (p * (1.0 - p)).max(1e-16));
            }
            let rows: Vec<usize> = if n_sub < n {
                let mut r = sample(&mut rng, n, n_sub).into_vec();
                r.sort_unstable();
                r
            } else {
                (0..n).collect()
            };
            let mut grower = Grower::new(&bins, &gh, params);
            grower.grow(rows, 0, None);
            let mut tree = Tree { nodes: grower.nodes };
            for node in tree.nodes.iter_mut() {
                if let Node::Leaf(v) = node {
                    *v *= params.learning_rate;
                }
            }
            for (i, s) in scores.iter_mut().enumerate() {
                *s += tree.predict_binned(&bins, i);
            }
            train_losses.push(mean_log_loss(&scores, y));
            trees.push(tree);
        }
        Self { base_score, trees, train_losses }
    }

    fn predict(&self, row: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>())
    }
}

/// Binary booster, or one booster per class (one-vs-rest) for `K > 2`.
#[derive(Debug, Clone)]
pub struct GbtClassifier {
    n_classes: usize,
    boosters: Vec<BinaryBooster>,
}

impl GbtClassifier {
    pub(crate) fn fit(x: ArrayView2<'_, f64>, labels: &[usize], n_classes: usize, params: &GbtParams, seed: u64) -> Self {
        let boosters = if n_classes == 2 {
            let y: Vec<f64> = labels.iter().map(|&l| f64::from(l == 1)).collect();
            vec![BinaryBooster::fit(x, &y, params, seed)]
        } else {
            (0..n_classes)
                .map(|k| {
                    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l == k)).collect();
                    BinaryBooster::fit(x, &y, params, rng::derive_seed(seed, &[k as u64]))
                })
                .collect()
        };
        Self { n_classes, boosters }
    }

    pub(crate) fn predict_row(&self, row: ArrayView1<'_, f64>, out: &mut [f64]) {
        if self.n_classes == 2 {
            let p = self.boosters[0].predict(row);
            out[0] = 1.0 - p;
            out[1] = p;
        } else {
            for (o, b) in out.iter_mut().zip(&self.boosters) {
                *o = b.predict(row);
            }
        }
    }

    pub(crate) fn train_losses(&self) -> Option<&[f64]> {
        (self.n_classes == 2).then(|| self.boosters[0].train_losses.as_slice())
    }
}
