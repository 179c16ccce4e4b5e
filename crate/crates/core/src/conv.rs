//! BEAN convolution: one synchronous message-passing step that updates U-node,
//! V-node and edge representations together.
//!
//! For a U node the message is `[h_self ; ⊕ h_v over neighbors ; ⊕ h_e over
//! incident edges]`, symmetrically for V nodes, and `[h_u ; h_v ; h_e]` for an
//! edge. Each target type owns one linear map over its concatenated message
//! (its weight blocks act as the per-source feature transforms), followed by
//! batch normalization and ReLU. All three outputs read only the previous
//! layer state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphView, NodeRef, Partition};
use crate::tensor::{
    batchnorm_backward, batchnorm_forward, linear_backward, linear_forward, relu, relu_backward, BatchNormCache,
    BatchNormGrads, BatchNormParams, Dense, LinearGrads, LinearParams, Mode, Param,
};

/// Neighborhood aggregator `⊕`. `MeanMax` concatenates mean and max.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    Mean,
    MeanMax,
}

impl Aggregator {
    fn blocks(self) -> usize {
        match self {
            Aggregator::Mean => 1,
            Aggregator::MeanMax => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub u: usize,
    pub v: usize,
    pub e: usize,
}

impl Dims {
    pub fn uniform(d: usize) -> Self {
        Self { u: d, v: d, e: d }
    }
}

/// Hidden representations of all U nodes, V nodes and edges at one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub u: Dense,
    pub v: Dense,
    pub e: Dense,
}

impl LayerState {
    /// Raw features as layer-0 state.
    pub fn from_graph(view: &GraphView<'_>) -> Self {
        let g = view.graph();
        Self {
            u: g.u_features().clone(),
            v: g.v_features().clone(),
            e: g.e_features().clone(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            u: Dense::zeros(self.u.rows(), self.u.cols()),
            v: Dense::zeros(self.v.rows(), self.v.cols()),
            e: Dense::zeros(self.e.rows(), self.e.cols()),
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            u: self.u.cols(),
            v: self.v.cols(),
            e: self.e.cols(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.e.is_finite()
    }

    pub fn add_assign(&mut self, other: &LayerState) -> Result<()> {
        self.u.add_assign(&other.u)?;
        self.v.add_assign(&other.v)?;
        self.e.add_assign(&other.e)
    }
}

/// Linear map plus optional batch norm. Blocks with a norm also apply ReLU;
/// blocks without one are plain linear outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeBlock {
    pub linear: LinearParams,
    pub norm: Option<BatchNormParams>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeBlockGrads {
    pub linear: LinearGrads,
    pub norm: Option<BatchNormGrads>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeanConvParams {
    pub aggregator: Aggregator,
    pub input: Dims,
    pub output: Dims,
    pub u: TypeBlock,
    pub v: TypeBlock,
    pub e: TypeBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeanConvGrads {
    pub u: TypeBlockGrads,
    pub v: TypeBlockGrads,
    pub e: TypeBlockGrads,
}

impl BeanConvParams {
    /// Concatenated message widths for the U, V and edge updates.
    pub fn message_widths(input: Dims, aggregator: Aggregator) -> Dims {
        let k = aggregator.blocks();
        Dims {
            u: input.u + k * input.v + k * input.e,
            v: input.v + k * input.u + k * input.e,
            e: input.u + input.v + input.e,
        }
    }

    /// Glorot-initialized layer. `activate = false` gives a purely linear
    /// output layer (no batch norm, no ReLU).
    pub fn new<R: rand::Rng + ?Sized>(
        input: Dims,
        output: Dims,
        aggregator: Aggregator,
        activate: bool,
        rng: &mut R,
    ) -> Self {
        let widths = Self::message_widths(input, aggregator);
        let block = |w: usize, out: usize, rng: &mut R| TypeBlock {
            linear: LinearParams::glorot(w, out, rng),
            norm: activate.then(|| BatchNormParams::new(out)),
        };
        Self {
            aggregator,
            input,
            output,
            u: block(widths.u, output.u, rng),
            v: block(widths.v, output.v, rng),
            e: block(widths.e, output.e, rng),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = Self::message_widths(self.input, self.aggregator);
        for (name, block, w, out) in [
            ("u block", &self.u, widths.u, self.output.u),
            ("v block", &self.v, widths.v, self.output.v),
            ("e block", &self.e, widths.e, self.output.e),
        ] {
            if block.linear.input_dim() != w || block.linear.output_dim() != out {
                return Err(Error::dims(
                    "bean conv layer",
                    format!("{name} {w}x{out}"),
                    format!("{}x{}", block.linear.input_dim(), block.linear.output_dim()),
                ));
            }
            if let Some(n) = &block.norm {
                if n.dim() != out {
                    return Err(Error::dims("bean conv batch norm", out, n.dim()));
                }
            }
        }
        Ok(())
    }

    /// Folds the batch statistics of a training-mode forward pass into the
    /// running statistics.
    pub fn absorb(&mut self, cache: &BeanConvCache) {
        for (block, tc) in [(&mut self.u, &cache.u), (&mut self.v, &cache.v), (&mut self.e, &cache.e)] {
            if let (Some(norm), Some(nc)) = (&mut block.norm, &tc.norm) {
                if let Some(stats) = &nc.stats {
                    norm.absorb(stats);
                }
            }
        }
    }

    pub fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Param>) {
        for block in [&mut self.u, &mut self.v, &mut self.e] {
            block.linear.params_mut(out);
            if let Some(n) = &mut block.norm {
                n.params_mut(out);
            }
        }
    }
}

impl BeanConvGrads {
    pub fn flatten_into(self, out: &mut Vec<Dense>) {
        for block in [self.u, self.v, self.e] {
            block.linear.flatten_into(out);
            if let Some(n) = block.norm {
                n.flatten_into(out);
            }
        }
    }
}

/// Mean of the selected rows; the empty set gives the zero vector.
pub fn aggregate_mean(rows: &Dense, index_set: &[usize]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; rows.cols()];
    for &i in index_set {
        if i >= rows.rows() {
            return Err(Error::IndexOutOfRange {
                what: "aggregation row",
                index: i,
                len: rows.rows(),
            });
        }
        for (o, &x) in out.iter_mut().zip(rows.row(i)) {
            *o += x;
        }
    }
    if !index_set.is_empty() {
        let n = index_set.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    }
    Ok(out)
}

/// Per-node aggregates of neighbor and incident-edge rows.
#[derive(Clone, Debug)]
struct Aggregates {
    counts: Vec<usize>,
    mean_nbr: Dense,
    mean_edge: Dense,
    /// Max values and, per entry, the source row that attained it
    /// (`usize::MAX` for empty sets).
    max_nbr: Option<(Dense, Vec<usize>)>,
    max_edge: Option<(Dense, Vec<usize>)>,
}

fn aggregate(
    view: &GraphView<'_>,
    target: Partition,
    nbr_rows: &Dense,
    edge_rows: &Dense,
    aggregator: Aggregator,
) -> Aggregates {
    let g = view.graph();
    let n = g.len(target);
    let (dn, de) = (nbr_rows.cols(), edge_rows.cols());
    let with_max = aggregator == Aggregator::MeanMax;
    let mut counts = vec![0usize; n];
    let mut mean_nbr = Dense::zeros(n, dn);
    let mut mean_edge = Dense::zeros(n, de);
    let mut max_nbr = with_max.then(|| (Dense::zeros(n, dn), vec![usize::MAX; n * dn]));
    let mut max_edge = with_max.then(|| (Dense::zeros(n, de), vec![usize::MAX; n * de]));
    let other = target.other();
    for i in 0..n {
        let mut count = 0usize;
        for e in view.incident(NodeRef { partition: target, index: i }) {
            let j = g.endpoint(e, other);
            count += 1;
            for (o, &x) in mean_nbr.row_mut(i).iter_mut().zip(nbr_rows.row(j)) {
                *o += x;
            }
            for (o, &x) in mean_edge.row_mut(i).iter_mut().zip(edge_rows.row(e)) {
                *o += x;
            }
            if let Some((vals, arg)) = &mut max_nbr {
                update_max(vals.row_mut(i), &mut arg[i * dn..(i + 1) * dn], nbr_rows.row(j), j);
            }
            if let Some((vals, arg)) = &mut max_edge {
                update_max(vals.row_mut(i), &mut arg[i * de..(i + 1) * de], edge_rows.row(e), e);
            }
        }
        if count > 0 {
            let inv = 1.0 / count as f64;
            mean_nbr.row_mut(i).iter_mut().for_each(|o| *o *= inv);
            mean_edge.row_mut(i).iter_mut().for_each(|o| *o *= inv);
        }
        counts[i] = count;
    }
    Aggregates {
        counts,
        mean_nbr,
        mean_edge,
        max_nbr,
        max_edge,
    }
}

fn update_max(vals: &mut [f64], arg: &mut [usize], src: &[f64], src_row: usize) {
    for c in 0..vals.len() {
        if arg[c] == usize::MAX || src[c] > vals[c] {
            vals[c] = src[c];
            arg[c] = src_row;
        }
    }
}

#[derive(Clone, Debug)]
pub struct TypeCache {
    input: Dense,
    linear_out: Dense,
    normed: Option<Dense>,
    norm: Option<BatchNormCache>,
}

#[derive(Clone, Debug)]
pub struct BeanConvCache {
    u: TypeCache,
    v: TypeCache,
    e: TypeCache,
    agg_u: Aggregates,
    agg_v: Aggregates,
    input: Dims,
}

fn block_forward(x: Dense, block: &TypeBlock, mode: Mode) -> Result<(Dense, TypeCache)> {
    let z = linear_forward(&x, &block.linear)?;
    match &block.norm {
        Some(norm) => {
            let (y, nc) = batchnorm_forward(&z, norm, mode)?;
            let out = relu(&y);
            Ok((
                out,
                TypeCache {
                    input: x,
                    linear_out: z,
                    normed: Some(y),
                    norm: Some(nc),
                },
            ))
        }
        None => Ok((
            z.clone(),
            TypeCache {
                input: x,
                linear_out: z,
                normed: None,
                norm: None,
            },
        )),
    }
}

fn block_backward(cache: &TypeCache, block: &TypeBlock, dy: &Dense) -> Result<(Dense, TypeBlockGrads)> {
    let (dz, norm_grads) = match (&block.norm, &cache.norm, &cache.normed) {
        (Some(norm), Some(nc), Some(normed)) => {
            let d_normed = relu_backward(normed, dy)?;
            let (dz, g) = batchnorm_backward(nc, norm, &d_normed)?;
            (dz, Some(g))
        }
        (None, None, _) => (dy.clone(), None),
        _ => return Err(Error::MissingForwardCache("batch norm")),
    };
    if dz.shape() != cache.linear_out.shape() {
        return Err(Error::dims(
            "bean conv upstream gradient",
            format!("{:?}", cache.linear_out.shape()),
            format!("{:?}", dz.shape()),
        ));
    }
    let (dx, linear) = linear_backward(&cache.input, &block.linear, &dz)?;
    Ok((
        dx,
        TypeBlockGrads {
            linear,
            norm: norm_grads,
        },
    ))
}

fn node_message(self_rows: &Dense, agg: &Aggregates) -> Result<Dense> {
    let mut parts = vec![self_rows, &agg.mean_nbr];
    if let Some((m, _)) = &agg.max_nbr {
        parts.push(m);
    }
    parts.push(&agg.mean_edge);
    if let Some((m, _)) = &agg.max_edge {
        parts.push(m);
    }
    Dense::hconcat(&parts)
}

fn edge_message(view: &GraphView<'_>, state: &LayerState) -> Result<Dense> {
    let g = view.graph();
    let (du, dv, de) = (state.u.cols(), state.v.cols(), state.e.cols());
    let mut out = Dense::zeros(g.n_e(), du + dv + de);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let row = out.row_mut(e);
        row[..du].copy_from_slice(state.u.row(u));
        row[du..du + dv].copy_from_slice(state.v.row(v));
        row[du + dv..].copy_from_slice(state.e.row(e));
    }
    Ok(out)
}

fn check_state(view: &GraphView<'_>, state: &LayerState, input: Dims) -> Result<()> {
    let g = view.graph();
    let rows = (state.u.rows(), state.v.rows(), state.e.rows());
    if rows != (g.n_u(), g.n_v(), g.n_e()) {
        return Err(Error::dims(
            "layer state rows",
            format!("{}/{}/{}", g.n_u(), g.n_v(), g.n_e()),
            format!("{}/{}/{}", rows.0, rows.1, rows.2),
        ));
    }
    if state.dims() != input {
        return Err(Error::dims(
            "layer state widths",
            format!("{input:?}"),
            format!("{:?}", state.dims()),
        ));
    }
    Ok(())
}

/// One synchronous BEAN layer over the active edges of `view`.
pub fn bean_conv_forward(
    view: &GraphView<'_>,
    state: &LayerState,
    params: &BeanConvParams,
    mode: Mode,
) -> Result<(LayerState, BeanConvCache)> {
    check_state(view, state, params.input)?;
    let agg_u = aggregate(view, Partition::U, &state.v, &state.e, params.aggregator);
    let agg_v = aggregate(view, Partition::V, &state.u, &state.e, params.aggregator);
    let (u, cu) = block_forward(node_message(&state.u, &agg_u)?, &params.u, mode)?;
    let (v, cv) = block_forward(node_message(&state.v, &agg_v)?, &params.v, mode)?;
    let (e, ce) = block_forward(edge_message(view, state)?, &params.e, mode)?;
    Ok((
        LayerState { u, v, e },
        BeanConvCache {
            u: cu,
            v: cv,
            e: ce,
            agg_u,
            agg_v,
            input: params.input,
        },
    ))
}

fn scatter_node_grads(
    view: &GraphView<'_>,
    target: Partition,
    agg: &Aggregates,
    d_msg: &Dense,
    widths: (usize, usize, usize),
    blocks: usize,
    grads: &mut LayerState,
) -> Result<()> {
    let (d_self, d_nbr, d_edge) = widths;
    let mut split = vec![d_self, d_nbr];
    if blocks == 2 {
        split.push(d_nbr);
    }
    split.push(d_edge);
    if blocks == 2 {
        split.push(d_edge);
    }
    let parts = d_msg.hsplit(&split)?;
    let (self_grad, nbr_rows_grad, edge_rows_grad) = match target {
        Partition::U => (&mut grads.u, &mut grads.v, &mut grads.e),
        Partition::V => (&mut grads.v, &mut grads.u, &mut grads.e),
    };
    self_grad.add_assign(&parts[0])?;
    let d_mean_nbr = &parts[1];
    let d_mean_edge = &parts[if blocks == 2 { 3 } else { 2 }];
    let g = view.graph();
    let other = target.other();
    for i in 0..g.len(target) {
        let count = agg.counts[i];
        if count == 0 {
            continue;
        }
        let inv = 1.0 / count as f64;
        for e in view.incident(NodeRef { partition: target, index: i }) {
            let j = g.endpoint(e, other);
            for (o, &gv) in nbr_rows_grad.row_mut(j).iter_mut().zip(d_mean_nbr.row(i)) {
                *o += gv * inv;
            }
            for (o, &gv) in edge_rows_grad.row_mut(e).iter_mut().zip(d_mean_edge.row(i)) {
                *o += gv * inv;
            }
        }
    }
    if blocks == 2 {
        let route = |grad: &mut Dense, dmax: &Dense, arg: &[usize]| {
            let cols = dmax.cols();
            for i in 0..dmax.rows() {
                for c in 0..cols {
                    let src = arg[i * cols + c];
                    if src != usize::MAX {
                        let cur = grad.get(src, c);
                        grad.set(src, c, cur + dmax.get(i, c));
                    }
                }
            }
        };
        let (_, arg_nbr) = agg.max_nbr.as_ref().ok_or(Error::MissingForwardCache("max aggregation"))?;
        let (_, arg_edge) = agg.max_edge.as_ref().ok_or(Error::MissingForwardCache("max aggregation"))?;
        route(nbr_rows_grad, &parts[2], arg_nbr);
        route(edge_rows_grad, &parts[4], arg_edge);
    }
    Ok(())
}

/// Gradients with respect to the previous layer state and the layer
/// parameters, given the gradient of the layer output.
pub fn bean_conv_backward(
    view: &GraphView<'_>,
    cache: &BeanConvCache,
    params: &BeanConvParams,
    upstream: &LayerState,
) -> Result<(LayerState, BeanConvGrads)> {
    let g = view.graph();
    if cache.input != params.input {
        return Err(Error::MissingForwardCache("bean conv (cache from another layer)"));
    }
    let (du, dv, de) = (cache.input.u, cache.input.v, cache.input.e);
    let mut grads = LayerState {
        u: Dense::zeros(g.n_u(), du),
        v: Dense::zeros(g.n_v(), dv),
        e: Dense::zeros(g.n_e(), de),
    };
    let blocks = params.aggregator.blocks();

    let (d_msg_u, gu) = block_backward(&cache.u, &params.u, &upstream.u)?;
    scatter_node_grads(view, Partition::U, &cache.agg_u, &d_msg_u, (du, dv, de), blocks, &mut grads)?;

    let (d_msg_v, gv) = block_backward(&cache.v, &params.v, &upstream.v)?;
    scatter_node_grads(view, Partition::V, &cache.agg_v, &d_msg_v, (dv, du, de), blocks, &mut grads)?;

    let (d_msg_e, ge) = block_backward(&cache.e, &params.e, &upstream.e)?;
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let row = d_msg_e.row(e);
        for (o, &x) in grads.u.row_mut(u).iter_mut().zip(&row[..du]) {
            *o += x;
        }
        for (o, &x) in grads.v.row_mut(v).iter_mut().zip(&row[du..du + dv]) {
            *o += x;
        }
        for (o, &x) in grads.e.row_mut(e).iter_mut().zip(&row[du + dv..]) {
            *o += x;
        }
    }
    Ok((grads, BeanConvGrads { u: gu, v: gv, e: ge }))
}
