//! The SAGE-FIN network.
//!
//! A stack of `P` BEAN layers split evenly into an encoder and a feature
//! decoder, plus two MLP heads on the encoder latents: a structure decoder
//! scoring `(u, v)` pairs for edge existence and one fraud classifier per
//! partition. Training minimizes
//!
//! ```text
//! λ_feat·(mse_u + mse_v + mse_e) + λ_struct·bce_edges + λ_class·(bce_u + bce_v)
//! ```
//!
//! where the classification terms only see labeled nodes selected by the
//! caller's masks.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conv::{bean_conv_backward, bean_conv_forward, Aggregator, BeanConvCache, BeanConvParams, Dims, LayerState};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, GraphView, Partition};
use crate::tensor::{
    bce_with_logits, bce_with_logits_backward, linear_backward, linear_forward, mse, mse_backward, relu,
    relu_backward, AdamState, Dense, LinearGrads, LinearParams, Mode, Param,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub feature: f64,
    pub structure: f64,
    pub classification: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            feature: 1.0,
            structure: 1.0,
            classification: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SageFinConfig {
    /// Total BEAN layers `P`; half encode, half decode.
    pub layers: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    /// Dense layers in each MLP head.
    pub mlp_depth: usize,
    pub negative_ratio: usize,
    pub loss_weights: LossWeights,
    pub reconstruct_edges: bool,
    pub aggregator: Aggregator,
    pub seed: u64,
}

impl Default for SageFinConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            hidden_dim: 32,
            latent_dim: 32,
            mlp_depth: 4,
            negative_ratio: 5,
            loss_weights: LossWeights::default(),
            reconstruct_edges: true,
            aggregator: Aggregator::Mean,
            seed: 0,
        }
    }
}

impl SageFinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 || self.layers % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "layers must be even and >= 2, got {}",
                self.layers
            )));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 || self.mlp_depth == 0 {
            return Err(Error::InvalidConfig("dimensions and mlp depth must be positive".into()));
        }
        if self.negative_ratio < 1 {
            return Err(Error::InvalidConfig("negative_ratio must be >= 1".into()));
        }
        let w = self.loss_weights;
        if [w.feature, w.structure, w.classification]
            .iter()
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return Err(Error::InvalidConfig(format!("loss weights must be finite and >= 0: {w:?}")));
        }
        Ok(())
    }

    pub fn encoder_layers(&self) -> usize {
        self.layers / 2
    }
}

// ---------------------------------------------------------------------------
// MLP heads
// ---------------------------------------------------------------------------

/// Dense stack with ReLU between layers and a single linear output unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<LinearParams>,
}

#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Dense>,
    pre: Vec<Dense>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, depth: usize, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(depth);
        let mut width = input;
        for i in 0..depth {
            let out = if i + 1 == depth { 1 } else { hidden };
            layers.push(LinearParams::glorot(width, out, rng));
            width = out;
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn forward(&self, x: &Dense) -> Result<(Dense, MlpCache)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = linear_forward(&h, layer)?;
            inputs.push(h);
            h = if i + 1 == self.layers.len() { z.clone() } else { relu(&z) };
            pre.push(z);
        }
        Ok((h, MlpCache { inputs, pre }))
    }

    pub fn backward(&self, cache: &MlpCache, dy: &Dense) -> Result<(Dense, Vec<LinearGrads>)> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::MissingForwardCache("mlp"));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d = dy.clone();
        for i in (0..self.layers.len()).rev() {
            if i + 1 != self.layers.len() {
                d = relu_backward(&cache.pre[i], &d)?;
            }
            let (dx, g) = linear_backward(&cache.inputs[i], &self.layers[i], &d)?;
            grads.push(g);
            d = dx;
        }
        grads.reverse();
        Ok((d, grads))
    }

    pub fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Param>) {
        for l in &mut self.layers {
            l.params_mut(out);
        }
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SageFinModel {
    pub config: SageFinConfig,
    pub features: Dims,
    pub encoder: Vec<BeanConvParams>,
    pub decoder: Vec<BeanConvParams>,
    pub structure: Mlp,
    pub classifier_u: Mlp,
    pub classifier_v: Mlp,
    /// Optimizer epochs applied so far.
    pub epochs_trained: usize,
}

/// Loss terms of one evaluation. `total` is the weighted sum of the parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub feature_u: f64,
    pub feature_v: f64,
    pub feature_e: f64,
    pub edge_prediction: f64,
    pub class_u: f64,
    pub class_v: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn feature(&self) -> f64 {
        self.feature_u + self.feature_v + self.feature_e
    }

    pub fn classification(&self) -> f64 {
        self.class_u + self.class_v
    }

    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.feature * self.feature() + w.structure * self.edge_prediction + w.classification * self.classification()
    }

    /// First non-finite term, if any.
    pub fn non_finite_term(&self) -> Option<(&'static str, f64)> {
        [
            ("feature_u", self.feature_u),
            ("feature_v", self.feature_v),
            ("feature_e", self.feature_e),
            ("edge_prediction", self.edge_prediction),
            ("class_u", self.class_u),
            ("class_v", self.class_v),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
    }
}

/// What the loss is computed over.
#[derive(Clone, Copy, Debug)]
pub struct LossInputs<'a> {
    /// Nodes whose labels may enter the classification term. Nodes with an
    /// `Unknown` label are skipped even when masked in.
    pub u_mask: &'a [bool],
    pub v_mask: &'a [bool],
    /// Edge indices scored as positives by the structure decoder.
    pub positive_edges: &'a [usize],
    pub negatives: &'a [(usize, usize)],
}

/// Parameter gradients, in the order of [`SageFinModel::params_mut`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads(pub Vec<Dense>);

/// Forward caches of a training pass, used to update batch-norm running stats.
pub struct TrainCaches {
    encoder: Vec<BeanConvCache>,
    decoder: Vec<BeanConvCache>,
}

struct PassCaches {
    encoder: Vec<BeanConvCache>,
    decoder: Vec<BeanConvCache>,
    latent: LayerState,
    recon: LayerState,
    pairs: Vec<(usize, usize)>,
    structure: Option<(Vec<f64>, MlpCache)>,
    class_u: Option<(Vec<usize>, Vec<f64>, Vec<f64>, MlpCache)>,
    class_v: Option<(Vec<usize>, Vec<f64>, Vec<f64>, MlpCache)>,
}

impl SageFinModel {
    pub fn new(config: SageFinConfig, features: Dims) -> Result<Self> {
        config.validate()?;
        if features.u == 0 || features.v == 0 {
            return Err(Error::InvalidConfig("node feature dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let half = config.encoder_layers();
        let hidden = Dims::uniform(config.hidden_dim);
        let latent = Dims::uniform(config.latent_dim);
        let mut encoder = Vec::with_capacity(half);
        let mut input = features;
        for i in 0..half {
            let out = if i + 1 == half { latent } else { hidden };
            encoder.push(BeanConvParams::new(input, out, config.aggregator, true, &mut rng));
            input = out;
        }
        let mut decoder = Vec::with_capacity(half);
        for i in 0..half {
            let last = i + 1 == half;
            let out = if last { features } else { hidden };
            decoder.push(BeanConvParams::new(input, out, config.aggregator, !last, &mut rng));
            input = out;
        }
        let structure = Mlp::new(2 * config.latent_dim, config.hidden_dim, config.mlp_depth, &mut rng);
        let classifier_u = Mlp::new(config.latent_dim, config.hidden_dim, config.mlp_depth, &mut rng);
        let classifier_v = Mlp::new(config.latent_dim, config.hidden_dim, config.mlp_depth, &mut rng);
        let model = Self {
            config,
            features,
            encoder,
            decoder,
            structure,
            classifier_u,
            classifier_v,
            epochs_trained: 0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn for_graph(config: SageFinConfig, graph: &BipartiteGraph) -> Result<Self> {
        Self::new(
            config,
            Dims {
                u: graph.u_features().cols(),
                v: graph.v_features().cols(),
                e: graph.e_features().cols(),
            },
        )
    }

    /// Checks the layer dimension chain end to end.
    pub fn validate(&self) -> Result<()> {
        let mut expected = self.features;
        for layer in self.encoder.iter().chain(&self.decoder) {
            layer.validate()?;
            if layer.input != expected {
                return Err(Error::dims("layer chain", format!("{expected:?}"), format!("{:?}", layer.input)));
            }
            expected = layer.output;
        }
        if expected != self.features {
            return Err(Error::dims(
                "decoder output",
                format!("{:?}", self.features),
                format!("{expected:?}"),
            ));
        }
        let latent = self.config.latent_dim;
        if self.encoder.last().map(|l| l.output) != Some(Dims::uniform(latent)) {
            return Err(Error::dims("encoder output", latent, "other"));
        }
        if self.structure.input_dim() != 2 * latent
            || self.classifier_u.input_dim() != latent
            || self.classifier_v.input_dim() != latent
        {
            return Err(Error::dims("head input", latent, "other"));
        }
        Ok(())
    }

    fn check_graph(&self, graph: &BipartiteGraph) -> Result<()> {
        let found = Dims {
            u: graph.u_features().cols(),
            v: graph.v_features().cols(),
            e: graph.e_features().cols(),
        };
        if found != self.features {
            return Err(Error::dims(
                "graph feature dims",
                format!("{:?}", self.features),
                format!("{found:?}"),
            ));
        }
        Ok(())
    }

    pub fn classifier(&self, partition: Partition) -> &Mlp {
        match partition {
            Partition::U => &self.classifier_u,
            Partition::V => &self.classifier_v,
        }
    }

    /// Every learnable tensor in a fixed order.
    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        for layer in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            layer.params_mut(&mut out);
        }
        self.structure.params_mut(&mut out);
        self.classifier_u.params_mut(&mut out);
        self.classifier_v.params_mut(&mut out);
        out
    }

    pub fn param_count(&mut self) -> usize {
        self.params_mut().iter().map(|p| p.value.data().len()).sum()
    }

    /// Applies batch statistics collected in a training-mode pass.
    pub fn absorb(&mut self, caches: &TrainCaches) {
        for (layer, c) in self.encoder.iter_mut().zip(&caches.encoder) {
            layer.absorb(c);
        }
        for (layer, c) in self.decoder.iter_mut().zip(&caches.decoder) {
            layer.absorb(c);
        }
    }

    fn encode_with_caches(&self, view: &GraphView<'_>, mode: Mode) -> Result<(LayerState, Vec<BeanConvCache>)> {
        self.check_graph(view.graph())?;
        let mut state = LayerState::from_graph(view);
        let mut caches = Vec::with_capacity(self.encoder.len());
        for layer in &self.encoder {
            let (next, cache) = bean_conv_forward(view, &state, layer, mode)?;
            state = next;
            caches.push(cache);
        }
        Ok((state, caches))
    }

    /// Latent U, V and edge representations of width `latent_dim`.
    pub fn encode(&self, view: &GraphView<'_>, mode: Mode) -> Result<LayerState> {
        Ok(self.encode_with_caches(view, mode)?.0)
    }

    fn decode_with_caches(
        &self,
        view: &GraphView<'_>,
        latent: &LayerState,
        mode: Mode,
    ) -> Result<(LayerState, Vec<BeanConvCache>)> {
        let mut state = latent.clone();
        let mut caches = Vec::with_capacity(self.decoder.len());
        for layer in &self.decoder {
            let (next, cache) = bean_conv_forward(view, &state, layer, mode)?;
            state = next;
            caches.push(cache);
        }
        Ok((state, caches))
    }

    /// Reconstructed U, V and edge features. The last decoder layer is linear.
    pub fn decode_features(&self, view: &GraphView<'_>, latent: &LayerState, mode: Mode) -> Result<LayerState> {
        Ok(self.decode_with_caches(view, latent, mode)?.0)
    }

    /// Edge-existence logit for one `(z_u, z_v)` latent pair.
    pub fn predict_edge(&self, z_u: &[f64], z_v: &[f64]) -> Result<f64> {
        let l = self.config.latent_dim;
        if z_u.len() != l || z_v.len() != l {
            return Err(Error::dims("predict_edge", l, format!("{}/{}", z_u.len(), z_v.len())));
        }
        let x = Dense::from_vec(1, 2 * l, [z_u, z_v].concat())?;
        Ok(self.structure.forward(&x)?.0.data()[0])
    }

    fn pair_matrix(latent: &LayerState, pairs: &[(usize, usize)]) -> Result<Dense> {
        let l = latent.u.cols();
        let mut x = Dense::zeros(pairs.len(), 2 * l);
        for (r, &(u, v)) in pairs.iter().enumerate() {
            if u >= latent.u.rows() || v >= latent.v.rows() {
                return Err(Error::IndexOutOfRange {
                    what: "pair endpoint",
                    index: u.max(v),
                    len: latent.u.rows().min(latent.v.rows()),
                });
            }
            let row = x.row_mut(r);
            row[..l].copy_from_slice(latent.u.row(u));
            row[l..].copy_from_slice(latent.v.row(v));
        }
        Ok(x)
    }

    pub fn edge_logits(&self, latent: &LayerState, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let x = Self::pair_matrix(latent, pairs)?;
        Ok(self.structure.forward(&x)?.0.into_vec())
    }

    /// Fraud logit for one latent row of the given partition.
    pub fn predict_node(&self, latent_row: &[f64], partition: Partition) -> Result<f64> {
        let head = self.classifier(partition);
        if latent_row.len() != head.input_dim() {
            return Err(Error::dims("predict_node", head.input_dim(), latent_row.len()));
        }
        let x = Dense::from_vec(1, latent_row.len(), latent_row.to_vec())?;
        Ok(head.forward(&x)?.0.data()[0])
    }

    /// Fraud logits for every node of a partition.
    pub fn node_logits(&self, latent: &LayerState, partition: Partition) -> Result<Vec<f64>> {
        let rows = match partition {
            Partition::U => &latent.u,
            Partition::V => &latent.v,
        };
        if rows.rows() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.classifier(partition).forward(rows)?.0.into_vec())
    }

    fn run(&self, view: &GraphView<'_>, inputs: &LossInputs<'_>, mode: Mode) -> Result<(LossBreakdown, PassCaches)> {
        let g = view.graph();
        if inputs.u_mask.len() != g.n_u() || inputs.v_mask.len() != g.n_v() {
            return Err(Error::dims(
                "label masks",
                format!("{}/{}", g.n_u(), g.n_v()),
                format!("{}/{}", inputs.u_mask.len(), inputs.v_mask.len()),
            ));
        }
        let (latent, encoder) = self.encode_with_caches(view, mode)?;
        let (recon, decoder) = self.decode_with_caches(view, &latent, mode)?;

        let feature_u = mse(&recon.u, g.u_features())?;
        let feature_v = mse(&recon.v, g.v_features())?;
        let feature_e = if self.config.reconstruct_edges {
            mse(&recon.e, g.e_features())?
        } else {
            0.0
        };

        let mut pairs = Vec::with_capacity(inputs.positive_edges.len() + inputs.negatives.len());
        for &e in inputs.positive_edges {
            pairs.push(g.edge(e)?);
        }
        pairs.extend_from_slice(inputs.negatives);
        let (edge_prediction, structure) = if pairs.is_empty() {
            (0.0, None)
        } else {
            let x = Self::pair_matrix(&latent, &pairs)?;
            let (out, cache) = self.structure.forward(&x)?;
            let logits = out.into_vec();
            let mut targets = vec![1.0; inputs.positive_edges.len()];
            targets.resize(pairs.len(), 0.0);
            let loss = bce_with_logits(&logits, &targets)?;
            let grad = bce_with_logits_backward(&logits, &targets)?;
            (loss, Some((grad, cache)))
        };

        let class_term = |partition: Partition, mask: &[bool]| -> Result<(f64, Option<_>)> {
            let labels = g.labels(partition);
            let mut rows = Vec::new();
            let mut targets = Vec::new();
            for (i, (&m, l)) in mask.iter().zip(labels).enumerate() {
                if let (true, Some(t)) = (m, l.target()) {
                    rows.push(i);
                    targets.push(t);
                }
            }
            if rows.is_empty() {
                log::debug!("classification mask for partition {partition} is empty; term is 0");
                return Ok((0.0, None));
            }
            let latent_rows = match partition {
                Partition::U => &latent.u,
                Partition::V => &latent.v,
            };
            let x = latent_rows.select_rows(&rows)?;
            let (out, cache) = self.classifier(partition).forward(&x)?;
            let logits = out.into_vec();
            let loss = bce_with_logits(&logits, &targets)?;
            let grad = bce_with_logits_backward(&logits, &targets)?;
            Ok((loss, Some((rows, targets, grad, cache))))
        };
        let (class_u, cu) = class_term(Partition::U, inputs.u_mask)?;
        let (class_v, cv) = class_term(Partition::V, inputs.v_mask)?;

        let mut loss = LossBreakdown {
            feature_u,
            feature_v,
            feature_e,
            edge_prediction,
            class_u,
            class_v,
            total: 0.0,
        };
        loss.total = loss.weighted_total(&self.config.loss_weights);
        Ok((
            loss,
            PassCaches {
                encoder,
                decoder,
                latent,
                recon,
                pairs,
                structure,
                class_u: cu,
                class_v: cv,
            },
        ))
    }

    /// Composite loss without gradients.
    pub fn loss(&self, view: &GraphView<'_>, inputs: &LossInputs<'_>, mode: Mode) -> Result<LossBreakdown> {
        Ok(self.run(view, inputs, mode)?.0)
    }

    /// Training-mode loss with exact gradients for every parameter.
    pub fn loss_and_gradients(
        &self,
        view: &GraphView<'_>,
        inputs: &LossInputs<'_>,
    ) -> Result<(LossBreakdown, ModelGrads, TrainCaches)> {
        let (loss, caches) = self.run(view, inputs, Mode::Train)?;
        let g = view.graph();
        let w = self.config.loss_weights;

        // feature decoder
        let mut d_recon = LayerState {
            u: mse_backward(&caches.recon.u, g.u_features())?,
            v: mse_backward(&caches.recon.v, g.v_features())?,
            e: if self.config.reconstruct_edges {
                mse_backward(&caches.recon.e, g.e_features())?
            } else {
                Dense::zeros(g.n_e(), self.features.e)
            },
        };
        d_recon.u.scale(w.feature);
        d_recon.v.scale(w.feature);
        d_recon.e.scale(w.feature);
        let mut decoder_grads = Vec::with_capacity(self.decoder.len());
        let mut upstream = d_recon;
        for (layer, cache) in self.decoder.iter().zip(&caches.decoder).rev() {
            let (d_in, grads) = bean_conv_backward(view, cache, layer, &upstream)?;
            decoder_grads.push(grads);
            upstream = d_in;
        }
        decoder_grads.reverse();
        let mut d_latent = upstream;

        // structure decoder
        let l = self.config.latent_dim;
        let structure_grads = match &caches.structure {
            Some((grad, cache)) => {
                let dy = Dense::from_vec(grad.len(), 1, grad.iter().map(|g| g * w.structure).collect())?;
                let (dx, grads) = self.structure.backward(cache, &dy)?;
                for (r, &(u, v)) in caches.pairs.iter().enumerate() {
                    let row = dx.row(r);
                    for (o, &x) in d_latent.u.row_mut(u).iter_mut().zip(&row[..l]) {
                        *o += x;
                    }
                    for (o, &x) in d_latent.v.row_mut(v).iter_mut().zip(&row[l..]) {
                        *o += x;
                    }
                }
                grads
            }
            None => zero_mlp_grads(&self.structure),
        };

        // classification heads
        let mut class_grads = Vec::with_capacity(2);
        for (partition, cache) in [(Partition::U, &caches.class_u), (Partition::V, &caches.class_v)] {
            let head = self.classifier(partition);
            match cache {
                Some((rows, _targets, grad, mc)) => {
                    let dy = Dense::from_vec(grad.len(), 1, grad.iter().map(|g| g * w.classification).collect())?;
                    let (dx, grads) = head.backward(mc, &dy)?;
                    let target = match partition {
                        Partition::U => &mut d_latent.u,
                        Partition::V => &mut d_latent.v,
                    };
                    for (r, &i) in rows.iter().enumerate() {
                        for (o, &x) in target.row_mut(i).iter_mut().zip(dx.row(r)) {
                            *o += x;
                        }
                    }
                    class_grads.push(grads);
                }
                None => class_grads.push(zero_mlp_grads(head)),
            }
        }

        // encoder
        let mut encoder_grads = Vec::with_capacity(self.encoder.len());
        let mut upstream = d_latent;
        for (layer, cache) in self.encoder.iter().zip(&caches.encoder).rev() {
            let (d_in, grads) = bean_conv_backward(view, cache, layer, &upstream)?;
            encoder_grads.push(grads);
            upstream = d_in;
        }
        encoder_grads.reverse();

        let mut flat = Vec::new();
        for grads in encoder_grads.into_iter().chain(decoder_grads) {
            grads.flatten_into(&mut flat);
        }
        for grads in std::iter::once(structure_grads).chain(class_grads) {
            for lg in grads {
                lg.flatten_into(&mut flat);
            }
        }
        debug_assert_eq!(caches.latent.u.cols(), l);
        Ok((
            loss,
            ModelGrads(flat),
            TrainCaches {
                encoder: caches.encoder,
                decoder: caches.decoder,
            },
        ))
    }

    pub fn mark_trained(&mut self, epochs: usize) {
        self.epochs_trained += epochs;
    }
}

fn zero_mlp_grads(mlp: &Mlp) -> Vec<LinearGrads> {
    mlp.layers
        .iter()
        .map(|l| LinearGrads {
            weight: Dense::zeros(l.input_dim(), l.output_dim()),
            bias: Dense::zeros(1, l.output_dim()),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Negative sampling
// ---------------------------------------------------------------------------

/// `count` distinct `(u, v)` pairs that are not edges of the graph, drawn
/// uniformly without replacement.
pub fn sample_negative_pairs<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let existing: HashSet<(usize, usize)> = graph.edges().iter().copied().collect();
    let space = graph.n_u() * graph.n_v();
    let available = space - existing.len();
    if count > available {
        return Err(Error::ExhaustedSpace {
            requested: count,
            available,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if count * 2 > available {
        let mut all: Vec<(usize, usize)> = (0..graph.n_u())
            .flat_map(|u| (0..graph.n_v()).map(move |v| (u, v)))
            .filter(|p| !existing.contains(p))
            .collect();
        let (chosen, _) = all.partial_shuffle(rng, count);
        return Ok(chosen.to_vec());
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pair = (rng.gen_range(0..graph.n_u()), rng.gen_range(0..graph.n_v()));
        if !existing.contains(&pair) && chosen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// `ratio · |E|` non-edges.
pub fn sample_negative_edges<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    ratio: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if ratio < 1 {
        return Err(Error::InvalidConfig("negative ratio must be >= 1".into()));
    }
    sample_negative_pairs(graph, ratio * graph.n_e(), rng)
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

pub const CHECKPOINT_FORMAT: &str = "sagefin-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume or reproduce a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub model: SageFinModel,
    pub optimizer: AdamState,
}

impl Checkpoint {
    pub fn new(model: SageFinModel, optimizer: AdamState) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            seed: model.config.seed,
            model,
            optimizer,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        ckpt.model.validate()?;
        Ok(ckpt)
    }
}
