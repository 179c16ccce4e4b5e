//! Dense numerical core: row-major `f64` matrices, linear layers, batch
//! normalization, ReLU, losses and the Adam optimizer.
//!
//! Every forward op has an explicit backward counterpart. Forward functions
//! never mutate parameters; batch-normalization running statistics are
//! folded in afterwards with [`BatchNormParams::absorb`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("Dense::from_vec", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a `0 x 0` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dims("Dense::from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Uniform Glorot initialization in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            rows: fan_in,
            cols: fan_out,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Dense> {
        let mut out = Dense::zeros(indices.len(), self.cols);
        for (dst, &src) in indices.iter().enumerate() {
            if src >= self.rows {
                return Err(Error::IndexOutOfRange {
                    what: "row",
                    index: src,
                    len: self.rows,
                });
            }
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        Ok(out)
    }

    /// `self · other`
    pub fn matmul(&self, other: &Dense) -> Result<Dense> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matmul",
                format!("inner dim {}", self.cols),
                format!("{}", other.rows),
            ));
        }
        let mut out = Dense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let o_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`
    pub fn t_matmul(&self, other: &Dense) -> Result<Dense> {
        if self.rows != other.rows {
            return Err(Error::dims(
                "t_matmul",
                format!("rows {}", self.rows),
                format!("{}", other.rows),
            ));
        }
        let mut out = Dense::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let b_row = other.row(r);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let o_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`
    pub fn matmul_t(&self, other: &Dense) -> Result<Dense> {
        if self.cols != other.cols {
            return Err(Error::dims(
                "matmul_t",
                format!("cols {}", self.cols),
                format!("{}", other.cols),
            ));
        }
        let mut out = Dense::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                let b_row = other.row(j);
                out.data[i * other.rows + j] = a_row.iter().zip(b_row).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    /// Horizontal concatenation; all parts must share the row count.
    pub fn hconcat(parts: &[&Dense]) -> Result<Dense> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if let Some(bad) = parts.iter().find(|p| p.rows != rows) {
            return Err(Error::dims("hconcat", rows, bad.rows));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Dense::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            let dst = out.row_mut(r);
            for p in parts {
                dst[offset..offset + p.cols].copy_from_slice(p.row(r));
                offset += p.cols;
            }
        }
        Ok(out)
    }

    /// Inverse of [`Dense::hconcat`]: splits columns into blocks of the given widths.
    pub fn hsplit(&self, widths: &[usize]) -> Result<Vec<Dense>> {
        let total: usize = widths.iter().sum();
        if total != self.cols {
            return Err(Error::dims("hsplit", self.cols, total));
        }
        let mut out: Vec<Dense> = widths.iter().map(|&w| Dense::zeros(self.rows, w)).collect();
        for r in 0..self.rows {
            let src = self.row(r);
            let mut offset = 0;
            for (block, &w) in out.iter_mut().zip(widths) {
                block.row_mut(r).copy_from_slice(&src[offset..offset + w]);
                offset += w;
            }
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Dense) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                "add_assign",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Column sums as a `1 x cols` matrix.
    pub fn column_sums(&self) -> Dense {
        let mut out = Dense::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, &x) in out.data.iter_mut().zip(self.row(r)) {
                *o += x;
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Dense) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A learnable tensor together with its Adam moment buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub value: Dense,
    pub m: Dense,
    pub v: Dense,
}

impl Param {
    pub fn new(value: Dense) -> Self {
        let (r, c) = value.shape();
        Self {
            value,
            m: Dense::zeros(r, c),
            v: Dense::zeros(r, c),
        }
    }
}

/// Train mode uses batch statistics in batch normalization; eval mode uses
/// the running statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// `[in x out]`
    pub weight: Param,
    /// `[1 x out]`
    pub bias: Param,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearGrads {
    pub weight: Dense,
    pub bias: Dense,
}

impl LinearParams {
    pub fn glorot<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            weight: Param::new(Dense::glorot(input, output, rng)),
            bias: Param::new(Dense::zeros(1, output)),
        }
    }

    pub fn from_parts(weight: Dense, bias: Vec<f64>) -> Result<Self> {
        if weight.cols() != bias.len() {
            return Err(Error::dims("LinearParams::from_parts", weight.cols(), bias.len()));
        }
        let n = bias.len();
        Ok(Self {
            weight: Param::new(weight),
            bias: Param::new(Dense::from_vec(1, n, bias)?),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Param>) {
        out.push(&mut self.weight);
        out.push(&mut self.bias);
    }
}

impl LinearGrads {
    pub fn flatten_into(self, out: &mut Vec<Dense>) {
        out.push(self.weight);
        out.push(self.bias);
    }
}

/// `x · W + b`, bias broadcast over rows.
pub fn linear_forward(x: &Dense, p: &LinearParams) -> Result<Dense> {
    if x.cols() != p.input_dim() {
        return Err(Error::dims("linear_forward", p.input_dim(), x.cols()));
    }
    let mut out = x.matmul(&p.weight.value)?;
    let bias = p.bias.value.row(0);
    for r in 0..out.rows() {
        for (o, b) in out.row_mut(r).iter_mut().zip(bias) {
            *o += b;
        }
    }
    Ok(out)
}

/// Returns `(dx, grads)` for upstream gradient `dy` at input `x`.
pub fn linear_backward(x: &Dense, p: &LinearParams, dy: &Dense) -> Result<(Dense, LinearGrads)> {
    if dy.cols() != p.output_dim() || dy.rows() != x.rows() {
        return Err(Error::dims(
            "linear_backward",
            format!("{}x{}", x.rows(), p.output_dim()),
            format!("{}x{}", dy.rows(), dy.cols()),
        ));
    }
    let dx = dy.matmul_t(&p.weight.value)?;
    let weight = x.t_matmul(dy)?;
    let bias = dy.column_sums();
    Ok((dx, LinearGrads { weight, bias }))
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormGrads {
    pub gamma: Dense,
    pub beta: Dense,
}

impl BatchNormGrads {
    pub fn flatten_into(self, out: &mut Vec<Dense>) {
        out.push(self.gamma);
        out.push(self.beta);
    }
}

/// Per-column statistics of one training-mode batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (population) variance.
    pub var: Vec<f64>,
    pub rows: usize,
}

#[derive(Clone, Debug)]
pub struct BatchNormCache {
    x_hat: Dense,
    inv_std: Vec<f64>,
    mode: Mode,
    /// `None` in eval mode or for empty batches.
    pub stats: Option<BatchStats>,
}

impl BatchNormParams {
    pub const DEFAULT_MOMENTUM: f64 = 0.1;
    pub const DEFAULT_EPSILON: f64 = 1e-5;

    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Param::new(Dense::filled(1, dim, 1.0)),
            beta: Param::new(Dense::zeros(1, dim)),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: Self::DEFAULT_MOMENTUM,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn dim(&self) -> usize {
        self.running_mean.len()
    }

    /// Exponential moving average update of the running statistics. The
    /// running variance uses the unbiased batch estimate.
    pub fn absorb(&mut self, stats: &BatchStats) {
        let m = self.momentum;
        let n = stats.rows as f64;
        let correction = if stats.rows > 1 { n / (n - 1.0) } else { 1.0 };
        for j in 0..self.dim() {
            self.running_mean[j] = (1.0 - m) * self.running_mean[j] + m * stats.mean[j];
            self.running_var[j] = (1.0 - m) * self.running_var[j] + m * stats.var[j] * correction;
        }
    }

    pub fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Param>) {
        out.push(&mut self.gamma);
        out.push(&mut self.beta);
    }
}

pub fn batchnorm_forward(x: &Dense, p: &BatchNormParams, mode: Mode) -> Result<(Dense, BatchNormCache)> {
    let d = p.dim();
    if x.cols() != d {
        return Err(Error::dims("batchnorm_forward", d, x.cols()));
    }
    let n = x.rows();
    let (mean, var, stats) = match mode {
        Mode::Train => {
            if n == 1 {
                return Err(Error::DegenerateBatch { rows: n });
            }
            if n == 0 {
                (vec![0.0; d], vec![1.0; d], None)
            } else {
                let mut mean = vec![0.0; d];
                for r in 0..n {
                    for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0; d];
                for r in 0..n {
                    for ((s, &v), &m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s /= n as f64);
                let stats = BatchStats {
                    mean: mean.clone(),
                    var: var.clone(),
                    rows: n,
                };
                (mean, var, Some(stats))
            }
        }
        Mode::Eval => (p.running_mean.clone(), p.running_var.clone(), None),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + p.epsilon).sqrt()).collect();
    let gamma = p.gamma.value.row(0);
    let beta = p.beta.value.row(0);
    let mut x_hat = Dense::zeros(n, d);
    let mut out = Dense::zeros(n, d);
    for r in 0..n {
        let src = x.row(r);
        for j in 0..d {
            let h = (src[j] - mean[j]) * inv_std[j];
            x_hat.set(r, j, h);
            out.set(r, j, gamma[j] * h + beta[j]);
        }
    }
    Ok((
        out,
        BatchNormCache {
            x_hat,
            inv_std,
            mode,
            stats,
        },
    ))
}

pub fn batchnorm_backward(
    cache: &BatchNormCache,
    p: &BatchNormParams,
    dy: &Dense,
) -> Result<(Dense, BatchNormGrads)> {
    let (n, d) = cache.x_hat.shape();
    if dy.shape() != (n, d) {
        return Err(Error::dims(
            "batchnorm_backward",
            format!("{n}x{d}"),
            format!("{}x{}", dy.rows(), dy.cols()),
        ));
    }
    let gamma = p.gamma.value.row(0);
    let mut d_gamma = Dense::zeros(1, d);
    let mut d_beta = Dense::zeros(1, d);
    for r in 0..n {
        for j in 0..d {
            let g = dy.get(r, j);
            d_beta.data_mut()[j] += g;
            d_gamma.data_mut()[j] += g * cache.x_hat.get(r, j);
        }
    }
    let mut dx = Dense::zeros(n, d);
    match cache.mode {
        Mode::Eval => {
            for r in 0..n {
                for j in 0..d {
                    dx.set(r, j, dy.get(r, j) * gamma[j] * cache.inv_std[j]);
                }
            }
        }
        Mode::Train if n > 0 => {
            // dx = (γ·σ⁻¹ / N) · (N·dx̂ − Σdx̂ − x̂·Σ(dx̂·x̂)), with dx̂ = dy·γ
            // folded into the column sums d_beta / d_gamma.
            let nf = n as f64;
            for r in 0..n {
                for j in 0..d {
                    let scale = gamma[j] * cache.inv_std[j] / nf;
                    let v = nf * dy.get(r, j) - d_beta.data()[j] - cache.x_hat.get(r, j) * d_gamma.data()[j];
                    dx.set(r, j, scale * v);
                }
            }
        }
        Mode::Train => {}
    }
    Ok((
        dx,
        BatchNormGrads {
            gamma: d_gamma,
            beta: d_beta,
        },
    ))
}

// ---------------------------------------------------------------------------
// Activations and losses
// ---------------------------------------------------------------------------

pub fn relu(x: &Dense) -> Dense {
    x.map(|v| v.max(0.0))
}

/// Gradient through ReLU given the pre-activation input.
pub fn relu_backward(pre: &Dense, dy: &Dense) -> Result<Dense> {
    if pre.shape() != dy.shape() {
        return Err(Error::dims(
            "relu_backward",
            format!("{:?}", pre.shape()),
            format!("{:?}", dy.shape()),
        ));
    }
    let data = pre
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect();
    Dense::from_vec(pre.rows(), pre.cols(), data)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Stable per-element binary cross-entropy on a logit.
#[inline]
pub fn bce_logit(z: f64, t: f64) -> f64 {
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy over logits. Empty input gives 0.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> Result<f64> {
    if logits.len() != targets.len() {
        return Err(Error::dims("bce_with_logits", logits.len(), targets.len()));
    }
    if logits.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = logits.iter().zip(targets).map(|(&z, &t)| bce_logit(z, t)).sum();
    Ok(total / logits.len() as f64)
}

/// Gradient of [`bce_with_logits`] with respect to each logit.
pub fn bce_with_logits_backward(logits: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if logits.len() != targets.len() {
        return Err(Error::dims("bce_with_logits_backward", logits.len(), targets.len()));
    }
    let n = logits.len().max(1) as f64;
    Ok(logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| (sigmoid(z) - t) / n)
        .collect())
}

/// Mean squared error over all entries. Empty input gives 0.
pub fn mse(x: &Dense, target: &Dense) -> Result<f64> {
    if x.shape() != target.shape() {
        return Err(Error::dims(
            "mse",
            format!("{:?}", target.shape()),
            format!("{:?}", x.shape()),
        ));
    }
    let n = x.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let s: f64 = x.data().iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / n as f64)
}

pub fn mse_backward(x: &Dense, target: &Dense) -> Result<Dense> {
    if x.shape() != target.shape() {
        return Err(Error::dims(
            "mse_backward",
            format!("{:?}", target.shape()),
            format!("{:?}", x.shape()),
        ));
    }
    let n = x.data().len().max(1) as f64;
    let data = x
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| 2.0 * (a - b) / n)
        .collect();
    Dense::from_vec(x.rows(), x.cols(), data)
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad Adam hyperparameters: {self:?}")))
        }
    }
}

/// One bias-corrected Adam update over a parameter set. `state.t` advances
/// exactly once per call regardless of how many tensors are updated.
pub fn adam_step(params: &mut [&mut Param], grads: &[Dense], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::dims("adam_step", params.len(), grads.len()));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.value.shape() != g.shape() {
            return Err(Error::dims(
                "adam_step",
                format!("{:?}", p.value.shape()),
                format!("{:?}", g.shape()),
            ));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (p, g) in params.iter_mut().zip(grads) {
        let Param { value, m, v } = &mut **p;
        for (((w, m), v), &g) in value
            .data_mut()
            .iter_mut()
            .zip(m.data_mut())
            .zip(v.data_mut())
            .zip(g.data())
        {
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
