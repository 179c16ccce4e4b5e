//! Splits, standardization, the full-graph training loop, evaluation metrics
//! and a feature-only logistic-regression baseline.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Label, Partition};
use crate::model::{sample_negative_pairs, LossBreakdown, LossInputs, SageFinConfig, SageFinModel};
use crate::tensor::{adam_step, sigmoid, AdamState, Dense, Mode};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Confusion counts for the positive (fraud / edge-exists) class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }

    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::dims("metrics", actual.len(), predicted.len()));
        }
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        Ok(Self::from_counts(tp, fp, fn_, tn))
    }

    pub fn support(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Node metrics per partition plus edge-prediction metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub u: Metrics,
    pub v: Metrics,
    pub edges: Metrics,
}

impl EvalReport {
    pub fn node_f1(&self) -> f64 {
        (self.u.f1 + self.v.f1) / 2.0
    }

    pub fn partition(&self, partition: Partition) -> &Metrics {
        match partition {
            Partition::U => &self.u,
            Partition::V => &self.v,
        }
    }
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-column mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on the given rows of `x`.
    pub fn fit(x: &Dense, rows: &[usize]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::DegenerateInput(format!(
                "standardization needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; x.cols()];
        for &r in rows {
            if r >= x.rows() {
                return Err(Error::IndexOutOfRange {
                    what: "standardization row",
                    index: r,
                    len: x.rows(),
                });
            }
            for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for &r in rows {
            for ((s, &v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    /// Zero-variance columns map to 0.
    pub fn apply(&self, x: &Dense) -> Result<Dense> {
        if x.cols() != self.mean.len() {
            return Err(Error::dims("standardize", self.mean.len(), x.cols()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        Ok(out)
    }
}

/// Standardizes every column using statistics of all rows.
pub fn standardize(x: &Dense) -> Result<(Dense, Standardizer)> {
    let rows: Vec<usize> = (0..x.rows()).collect();
    let s = Standardizer::fit(x, &rows)?;
    Ok((s.apply(x)?, s))
}

/// Standardizers for the three feature matrices of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStandardizer {
    pub u: Standardizer,
    pub v: Standardizer,
    pub e: Option<Standardizer>,
}

impl GraphStandardizer {
    /// Node statistics come from nodes outside the validation and test label
    /// splits; edge statistics come from training edges.
    pub fn fit(graph: &BipartiteGraph, splits: &SplitMasks) -> Result<Self> {
        let rows = |p: Partition| -> Vec<usize> {
            let val = &splits.node(p).val;
            let test = &splits.node(p).test;
            (0..graph.len(p)).filter(|&i| !val[i] && !test[i]).collect()
        };
        let train_edges = splits.edge_indices(Split::Train);
        let e = if graph.e_features().cols() > 0 && train_edges.len() >= 2 {
            Some(Standardizer::fit(graph.e_features(), &train_edges)?)
        } else {
            None
        };
        Ok(Self {
            u: Standardizer::fit(graph.u_features(), &rows(Partition::U))?,
            v: Standardizer::fit(graph.v_features(), &rows(Partition::V))?,
            e,
        })
    }

    pub fn apply(&self, graph: &BipartiteGraph) -> Result<BipartiteGraph> {
        let e = match &self.e {
            Some(s) => s.apply(graph.e_features())?,
            None => graph.e_features().clone(),
        };
        graph.with_features(self.u.apply(graph.u_features())?, self.v.apply(graph.v_features())?, e)
    }
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split ratios must be >= 0 and sum to 1: {self:?}")));
        }
        Ok(())
    }

    /// Largest-remainder allocation of `n` items.
    pub fn allocate(&self, n: usize) -> [usize; 3] {
        let quotas = [self.train, self.val, self.test].map(|r| r * n as f64);
        let mut counts = quotas.map(|q| q.floor() as usize);
        let mut rest = n - counts.iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Train/val/test membership over one index family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    test: Vec<bool>,
}

impl SplitSet {
    fn new(n: usize) -> Self {
        Self {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    fn assign(&mut self, items: &[usize], counts: [usize; 3]) {
        let (train, rest) = items.split_at(counts[0]);
        let (val, test) = rest.split_at(counts[1]);
        for &i in train {
            self.train[i] = true;
        }
        for &i in val {
            self.val[i] = true;
        }
        for &i in test {
            self.test[i] = true;
        }
    }
}

/// Node label splits per partition and an independent edge split.
///
/// Test masks are only reachable through [`SplitMasks::mask`], which counts
/// every read so the training loop can assert it never looked at them.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplitMasks {
    u: SplitSet,
    v: SplitSet,
    edges: SplitSet,
    #[serde(skip)]
    test_reads: AtomicUsize,
}

impl Clone for SplitMasks {
    fn clone(&self) -> Self {
        Self {
            u: self.u.clone(),
            v: self.v.clone(),
            edges: self.edges.clone(),
            test_reads: AtomicUsize::new(self.test_reads()),
        }
    }
}

impl PartialEq for SplitMasks {
    fn eq(&self, other: &Self) -> bool {
        self.u == other.u && self.v == other.v && self.edges == other.edges
    }
}

impl SplitMasks {
    fn node(&self, partition: Partition) -> &SplitSet {
        match partition {
            Partition::U => &self.u,
            Partition::V => &self.v,
        }
    }

    fn set_mask<'a>(&self, set: &'a SplitSet, split: Split) -> &'a [bool] {
        match split {
            Split::Train => &set.train,
            Split::Val => &set.val,
            Split::Test => {
                self.test_reads.fetch_add(1, Ordering::Relaxed);
                &set.test
            }
        }
    }

    pub fn mask(&self, partition: Partition, split: Split) -> &[bool] {
        self.set_mask(self.node(partition), split)
    }

    pub fn edge_mask(&self, split: Split) -> &[bool] {
        self.set_mask(&self.edges, split)
    }

    pub fn edge_indices(&self, split: Split) -> Vec<usize> {
        let m = self.edge_mask(split);
        (0..m.len()).filter(|&i| m[i]).collect()
    }

    /// Number of test-mask reads so far.
    pub fn test_reads(&self) -> usize {
        self.test_reads.load(Ordering::Relaxed)
    }

    pub fn sizes(&self, partition: Partition) -> [usize; 3] {
        let s = self.node(partition);
        [&s.train, &s.val, &s.test].map(|m| m.iter().filter(|&&b| b).count())
    }

    pub fn edge_sizes(&self) -> [usize; 3] {
        [&self.edges.train, &self.edges.val, &self.edges.test].map(|m| m.iter().filter(|&&b| b).count())
    }
}

/// Minimum labeled members per class for a stratified split.
pub const MIN_CLASS_COUNT: usize = 3;

/// Label-stratified node splits and a random edge split.
pub fn make_splits(graph: &BipartiteGraph, ratios: SplitRatios, seed: u64) -> Result<SplitMasks> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut node_split = |partition: Partition| -> Result<SplitSet> {
        let labels = graph.labels(partition);
        let mut set = SplitSet::new(labels.len());
        for (class, name) in [(Label::Fraud, "fraud"), (Label::NonFraud, "non-fraud")] {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if members.len() < MIN_CLASS_COUNT {
                return Err(Error::InsufficientLabels {
                    partition: partition.tag(),
                    class: name,
                    count: members.len(),
                    needed: MIN_CLASS_COUNT,
                });
            }
            members.shuffle(&mut rng);
            set.assign(&members, ratios.allocate(members.len()));
        }
        Ok(set)
    };
    let u = node_split(Partition::U)?;
    let v = node_split(Partition::V)?;
    let mut edge_order: Vec<usize> = (0..graph.n_e()).collect();
    edge_order.shuffle(&mut rng);
    let mut edges = SplitSet::new(graph.n_e());
    edges.assign(&edge_order, ratios.allocate(graph.n_e()));
    Ok(SplitMasks {
        u,
        v,
        edges,
        test_reads: AtomicUsize::new(0),
    })
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub threshold: f64,
    pub split: SplitRatios,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.005,
            threshold: 0.5,
            split: SplitRatios::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!("threshold must lie in (0,1), got {}", self.threshold)));
        }
        AdamState::new(self.learning_rate).validate()?;
        self.split.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub val: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub test: Option<EvalReport>,
}

impl TrainReport {
    /// One JSON record per epoch.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.epochs {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch]
    }
}

/// Best-validation model together with its optimizer state.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SageFinModel,
    pub optimizer: AdamState,
    pub report: TrainReport,
}

const NEGATIVE_STREAM: u64 = 0x6e65_6761_7469_7665;
const VALIDATION_STREAM: u64 = 0x7661_6c69_6461_7465;

/// Full-graph training on an already standardized graph.
///
/// Each epoch draws fresh negatives, takes one Adam step on the training
/// loss and scores the validation split. The returned model is the epoch
/// with the best mean validation node F1, ties going to the better edge F1
/// and then to the earlier epoch.
pub fn train(
    graph: &BipartiteGraph,
    splits: &SplitMasks,
    model_config: &SageFinConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let reads_before = splits.test_reads();
    let mut model = SageFinModel::for_graph(model_config.clone(), graph)?;
    let mut optimizer = AdamState::new(config.learning_rate);
    let seed = model_config.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NEGATIVE_STREAM);
    let view = graph.view();
    let train_edges = splits.edge_indices(Split::Train);
    let u_mask = splits.mask(Partition::U, Split::Train).to_vec();
    let v_mask = splits.mask(Partition::V, Split::Train).to_vec();
    let val_edges = splits.edge_indices(Split::Val);
    let mut val_rng = ChaCha8Rng::seed_from_u64(seed ^ VALIDATION_STREAM);
    let val_negatives = sample_negative_pairs(graph, model_config.negative_ratio * val_edges.len(), &mut val_rng)?;

    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, f64, usize, SageFinModel, AdamState)> = None;
    for epoch in 0..config.epochs {
        let negatives = sample_negative_pairs(graph, model_config.negative_ratio * train_edges.len(), &mut rng)?;
        let inputs = LossInputs {
            u_mask: &u_mask,
            v_mask: &v_mask,
            positive_edges: &train_edges,
            negatives: &negatives,
        };
        let (loss, grads, caches) = model.loss_and_gradients(&view, &inputs)?;
        if let Some((term, value)) = loss.non_finite_term() {
            log::error!("non-finite loss at epoch {epoch}: {loss:?}");
            return Err(Error::NonFiniteLoss { term, epoch, value });
        }
        adam_step(&mut model.params_mut(), &grads.0, &mut optimizer)?;
        model.absorb(&caches);
        model.mark_trained(1);

        let val = evaluate_with(
            &model,
            graph,
            splits,
            Split::Val,
            &val_edges,
            &val_negatives,
            config.threshold,
        )?;
        log::debug!(
            "epoch {epoch}: loss {:.5} val node F1 {:.4} edge F1 {:.4}",
            loss.total,
            val.node_f1(),
            val.edges.f1
        );
        let key = (val.node_f1(), val.edges.f1);
        let improved = match &best {
            None => true,
            Some((n, e, ..)) => key.0 > *n || (key.0 == *n && key.1 > *e),
        };
        if improved {
            best = Some((key.0, key.1, epoch, model.clone(), optimizer.clone()));
        }
        epochs.push(EpochRecord { epoch, loss, val });
    }
    debug_assert_eq!(splits.test_reads(), reads_before, "training read a test mask");
    let (_, _, best_epoch, model, optimizer) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        optimizer,
        report: TrainReport {
            epochs,
            best_epoch,
            test: None,
        },
    })
}

fn node_metrics(
    model: &SageFinModel,
    latent: &crate::conv::LayerState,
    graph: &BipartiteGraph,
    partition: Partition,
    mask: &[bool],
    threshold: f64,
) -> Result<Metrics> {
    let labels = graph.labels(partition);
    let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i] && labels[i].is_known()).collect();
    if rows.is_empty() {
        return Err(Error::EmptyMask(match partition {
            Partition::U => "no labeled U nodes in split",
            Partition::V => "no labeled V nodes in split",
        }));
    }
    let logits = model.node_logits(latent, partition)?;
    let predicted: Vec<bool> = rows.iter().map(|&i| sigmoid(logits[i]) >= threshold).collect();
    let actual: Vec<bool> = rows.iter().map(|&i| labels[i] == Label::Fraud).collect();
    Metrics::from_predictions(&predicted, &actual)
}

fn evaluate_with(
    model: &SageFinModel,
    graph: &BipartiteGraph,
    splits: &SplitMasks,
    split: Split,
    positives: &[usize],
    negatives: &[(usize, usize)],
    threshold: f64,
) -> Result<EvalReport> {
    let view = graph.view();
    let latent = model.encode(&view, Mode::Eval)?;
    let u = node_metrics(model, &latent, graph, Partition::U, splits.mask(Partition::U, split), threshold)?;
    let v = node_metrics(model, &latent, graph, Partition::V, splits.mask(Partition::V, split), threshold)?;
    let mut pairs = Vec::with_capacity(positives.len() + negatives.len());
    for &e in positives {
        pairs.push(graph.edge(e)?);
    }
    pairs.extend_from_slice(negatives);
    let logits = model.edge_logits(&latent, &pairs)?;
    let predicted: Vec<bool> = logits.iter().map(|&z| sigmoid(z) >= threshold).collect();
    let actual: Vec<bool> = (0..pairs.len()).map(|i| i < positives.len()).collect();
    Ok(EvalReport {
        u,
        v,
        edges: Metrics::from_predictions(&predicted, &actual)?,
    })
}

/// Node metrics on the labeled nodes of `split`, edge metrics on the split's
/// edges against `negative_ratio` times as many sampled non-edges.
pub fn evaluate(
    model: &SageFinModel,
    graph: &BipartiteGraph,
    splits: &SplitMasks,
    split: Split,
    threshold: f64,
) -> Result<EvalReport> {
    let positives = splits.edge_indices(split);
    let stream = match split {
        Split::Train => 1,
        Split::Val => VALIDATION_STREAM,
        Split::Test => 3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed ^ stream);
    let negatives = sample_negative_pairs(graph, model.config.negative_ratio * positives.len(), &mut rng)?;
    evaluate_with(model, graph, splits, split, &positives, &negatives, threshold)
}

/// Splits a raw graph and standardizes it with training-side statistics.
/// Deterministic in `seed`, so later commands can rebuild the same inputs.
pub fn prepare(raw: &BipartiteGraph, ratios: SplitRatios, seed: u64) -> Result<(BipartiteGraph, SplitMasks)> {
    let splits = make_splits(raw, ratios, seed)?;
    let graph = GraphStandardizer::fit(raw, &splits)?.apply(raw)?;
    Ok((graph, splits))
}

/// Standardizes, trains and scores the test split.
pub fn fit(
    raw: &BipartiteGraph,
    model_config: &SageFinConfig,
    config: &TrainConfig,
) -> Result<(BipartiteGraph, SplitMasks, TrainOutcome)> {
    let (graph, splits) = prepare(raw, config.split, model_config.seed)?;
    let mut outcome = train(&graph, &splits, model_config, config)?;
    outcome.report.test = Some(evaluate(&outcome.model, &graph, &splits, Split::Test, config.threshold)?);
    Ok((graph, splits, outcome))
}

// ---------------------------------------------------------------------------
// Logistic-regression baseline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub threshold: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
            threshold: 0.5,
        }
    }
}

/// Fitted weights of a logistic model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Logistic {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Full-batch gradient descent on mean BCE over the labeled training rows.
pub fn fit_logistic(features: &Dense, labels: &[Label], train: &[bool], config: &LogisticConfig) -> Result<Logistic> {
    if labels.len() != features.rows() || train.len() != features.rows() {
        return Err(Error::dims("logistic inputs", features.rows(), format!("{}/{}", labels.len(), train.len())));
    }
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| train[i] && labels[i].is_known()).collect();
    let positives = rows.iter().filter(|&&i| labels[i] == Label::Fraud).count();
    if positives == 0 || positives == rows.len() {
        return Err(Error::InsufficientLabels {
            partition: "baseline",
            class: if positives == 0 { "fraud" } else { "non-fraud" },
            count: 0,
            needed: 1,
        });
    }
    let d = features.cols();
    let mut model = Logistic {
        weights: vec![0.0; d],
        bias: 0.0,
    };
    let n = rows.len() as f64;
    for _ in 0..config.epochs {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for &i in &rows {
            let x = features.row(i);
            let t = if labels[i] == Label::Fraud { 1.0 } else { 0.0 };
            let r = (sigmoid(model.logit(x)) - t) / n;
            gb += r;
            for (g, &v) in gw.iter_mut().zip(x) {
                *g += r * v;
            }
        }
        model.bias -= config.learning_rate * gb;
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= config.learning_rate * g;
        }
    }
    Ok(model)
}

/// Feature-only logistic regression for one partition, scored on `eval`.
pub fn logistic_baseline(
    features: &Dense,
    labels: &[Label],
    train: &[bool],
    eval: &[bool],
    config: &LogisticConfig,
) -> Result<Metrics> {
    let model = fit_logistic(features, labels, train, config)?;
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| eval[i] && labels[i].is_known()).collect();
    if rows.is_empty() {
        return Err(Error::EmptyMask("no labeled nodes to score the baseline on"));
    }
    let predicted: Vec<bool> = rows
        .iter()
        .map(|&i| sigmoid(model.logit(features.row(i))) >= config.threshold)
        .collect();
    let actual: Vec<bool> = rows.iter().map(|&i| labels[i] == Label::Fraud).collect();
    Metrics::from_predictions(&predicted, &actual)
}

/// Baseline metrics for both partitions on `split`. Edge metrics are left at
/// zero because the baseline has no structure decoder.
pub fn baseline_report(
    graph: &BipartiteGraph,
    splits: &SplitMasks,
    split: Split,
    config: &LogisticConfig,
) -> Result<EvalReport> {
    let run = |p: Partition| {
        logistic_baseline(
            graph.features(p),
            graph.labels(p),
            splits.mask(p, Split::Train),
            splits.mask(p, split),
            config,
        )
    };
    Ok(EvalReport {
        u: run(Partition::U)?,
        v: run(Partition::V)?,
        edges: Metrics::default(),
    })
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

/// Benchmark table: precision, recall and F1 for wallets (V) and
/// transactions (U), plus edge-prediction F1 where the model has one.
pub fn format_table(rows: &[(&str, &EvalReport, bool)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} | {:>9} {:>9} {:>9} | {:>9} {:>9} {:>9} | {:>8}",
        "model", "wallet_P", "wallet_R", "wallet_F1", "tx_P", "tx_R", "tx_F1", "edge_F1"
    );
    let _ = writeln!(out, "{}", "-".repeat(14 + 3 + 29 + 3 + 29 + 3 + 8));
    for (name, r, has_edges) in rows {
        let edge = if *has_edges {
            format!("{:.4}", r.edges.f1)
        } else {
            "-".to_string()
        };
        let _ = writeln!(
            out,
            "{:<14} | {:>9.4} {:>9.4} {:>9.4} | {:>9.4} {:>9.4} {:>9.4} | {:>8}",
            name, r.v.precision, r.v.recall, r.v.f1, r.u.precision, r.u.recall, r.u.f1, edge
        );
    }
    out
}
