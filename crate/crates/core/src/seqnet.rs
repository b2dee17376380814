//! Binary sequence classifier: a stacked LSTM over tangent-vector sequences
//! with inverted dropout between layers, a fully connected head with sigmoid
//! output, binary cross-entropy loss, and an Adam optimizer — all with
//! analytic gradients (backpropagation through time), checked against finite
//! differences in the tests.
//!
//! Everything is deterministic under a fixed seed: parameter initialization,
//! per-epoch shuffling, and dropout masks all draw from one seeded stream in
//! a fixed order, so training twice yields bit-identical parameters.

#![allow(clippy::needless_range_loop)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SeqNetError {
    #[error("sequence step dimension {got} does not match network input {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty dataset or empty sequence")]
    EmptyData,
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("non-finite gradient at epoch {epoch}, batch {batch}; step aborted")]
    NonFiniteGradient { epoch: usize, batch: usize },
    #[error("bad training configuration: {reason}")]
    BadConfig { reason: String },
}

/// One labelled sequence of equal-dimension tangent vectors.
#[derive(Debug, Clone)]
pub struct VectorSequence {
    /// T steps, each of the same dimension.
    pub steps: Vec<Vec<f64>>,
    /// `true` is the positive class.
    pub label: bool,
    pub subject_id: String,
}

impl VectorSequence {
    pub fn dim(&self) -> usize {
        self.steps.first().map(|s| s.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// What feeds the fully connected head: the last hidden state of the top
/// layer, or its mean over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum Pooling {
    #[default]
    FinalStep,
    MeanOverTime,
}


impl std::str::FromStr for Pooling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "final" | "final-step" => Ok(Pooling::FinalStep),
            "mean" | "mean-over-time" => Ok(Pooling::MeanOverTime),
            other => Err(format!("unknown pooling `{other}`")),
        }
    }
}

/// Gate order everywhere in this module and in checkpoints: input, forget,
/// cell, output.
pub const GATES: usize = 4;

/// One LSTM layer's weights: per gate an input matrix (hidden×input,
/// row-major), a recurrent matrix (hidden×hidden, row-major), and a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub input_dim: usize,
    pub hidden: usize,
    pub w: [Vec<f64>; 4],
    pub u: [Vec<f64>; 4],
    pub b: [Vec<f64>; 4],
}

/// Full parameter set: stacked LSTM layers plus the affine head.
///
/// The canonical flattening order (used by Adam and by checkpoints) is:
/// for each layer, `w[i,f,g,o]`, then `u[i,f,g,o]`, then `b[i,f,g,o]`;
/// then the head weights; then the head bias.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub layers: Vec<LstmLayer>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
    pub pooling: Pooling,
}

impl NetParams {
    /// Uniform `±1/√fan_in` initialization, forget-gate bias 1.0.
    pub fn init(
        input_dim: usize,
        hidden: usize,
        layers: usize,
        pooling: Pooling,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut out_layers = Vec::with_capacity(layers);
        let mut dim = input_dim;
        for _ in 0..layers {
            let wb = 1.0 / (dim as f64).sqrt();
            let ub = 1.0 / (hidden as f64).sqrt();
            let mut mk = |len: usize, bound: f64| -> Vec<f64> {
                (0..len).map(|_| rng.random_range(-bound..bound)).collect()
            };
            let w = [
                mk(hidden * dim, wb),
                mk(hidden * dim, wb),
                mk(hidden * dim, wb),
                mk(hidden * dim, wb),
            ];
            let u = [
                mk(hidden * hidden, ub),
                mk(hidden * hidden, ub),
                mk(hidden * hidden, ub),
                mk(hidden * hidden, ub),
            ];
            let b = [
                vec![0.0; hidden],
                vec![1.0; hidden], // forget gate opens by default
                vec![0.0; hidden],
                vec![0.0; hidden],
            ];
            out_layers.push(LstmLayer {
                input_dim: dim,
                hidden,
                w,
                u,
                b,
            });
            dim = hidden;
        }
        let hb = 1.0 / (hidden as f64).sqrt();
        let head_w = (0..hidden).map(|_| rng.random_range(-hb..hb)).collect();
        Self {
            layers: out_layers,
            head_w,
            head_b: 0.0,
            pooling,
        }
    }

    /// All-zero parameters (the network then outputs exactly 0.5).
    pub fn zeros(input_dim: usize, hidden: usize, layers: usize, pooling: Pooling) -> Self {
        let mut out_layers = Vec::with_capacity(layers);
        let mut dim = input_dim;
        for _ in 0..layers {
            out_layers.push(LstmLayer {
                input_dim: dim,
                hidden,
                w: std::array::from_fn(|_| vec![0.0; hidden * dim]),
                u: std::array::from_fn(|_| vec![0.0; hidden * hidden]),
                b: std::array::from_fn(|_| vec![0.0; hidden]),
            });
            dim = hidden;
        }
        Self {
            layers: out_layers,
            head_w: vec![0.0; hidden],
            head_b: 0.0,
            pooling,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.input_dim).unwrap_or(0)
    }

    pub fn hidden(&self) -> usize {
        self.layers.first().map(|l| l.hidden).unwrap_or(0)
    }

    /// Canonical flat view; see the type docs for the order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            for g in 0..GATES {
                out.extend_from_slice(&l.w[g]);
            }
            for g in 0..GATES {
                out.extend_from_slice(&l.u[g]);
            }
            for g in 0..GATES {
                out.extend_from_slice(&l.b[g]);
            }
        }
        out.extend_from_slice(&self.head_w);
        out.push(self.head_b);
        out
    }

    /// Inverse of [`NetParams::flatten`]; shapes come from `self`.
    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        let take = |dst: &mut [f64], pos: &mut usize| {
            dst.copy_from_slice(&flat[*pos..*pos + dst.len()]);
            *pos += dst.len();
        };
        for l in &mut self.layers {
            for g in 0..GATES {
                take(&mut l.w[g], &mut pos);
            }
            for g in 0..GATES {
                take(&mut l.u[g], &mut pos);
            }
            for g in 0..GATES {
                take(&mut l.b[g], &mut pos);
            }
        }
        take(&mut self.head_w, &mut pos);
        self.head_b = flat[pos];
    }
}

/// Gradients in the same shapes (and canonical order) as [`NetParams`].
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub layers: Vec<LstmLayer>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

impl NetGrads {
    pub fn zeros_like(params: &NetParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| LstmLayer {
                input_dim: l.input_dim,
                hidden: l.hidden,
                w: std::array::from_fn(|_| vec![0.0; l.hidden * l.input_dim]),
                u: std::array::from_fn(|_| vec![0.0; l.hidden * l.hidden]),
                b: std::array::from_fn(|_| vec![0.0; l.hidden]),
            })
            .collect();
        Self {
            layers,
            head_w: vec![0.0; params.head_w.len()],
            head_b: 0.0,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            for g in 0..GATES {
                out.extend_from_slice(&l.w[g]);
            }
            for g in 0..GATES {
                out.extend_from_slice(&l.u[g]);
            }
            for g in 0..GATES {
                out.extend_from_slice(&l.b[g]);
            }
        }
        out.extend_from_slice(&self.head_w);
        out.push(self.head_b);
        out
    }
}

/// Training hyperparameters. Learning-rate and moment defaults follow the
/// usual Adam recipe; epochs default to 50.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: usize,
    pub layers: usize,
    pub pooling: Pooling,
    /// Loss weight of the positive class (1.0 = unweighted).
    pub positive_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 50,
            dropout_rate: 0.5,
            batch_size: 32,
            seed: 42,
            hidden: 128,
            layers: 2,
            pooling: Pooling::FinalStep,
            positive_weight: 1.0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), SeqNetError> {
        let bad = |reason: &str| {
            Err(SeqNetError::BadConfig {
                reason: reason.into(),
            })
        };
        if self.lr.is_nan() || self.lr < 0.0 {
            return bad("lr must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if self.hidden < 1 || self.layers < 1 {
            return bad("hidden and layers must be at least 1");
        }
        if self.positive_weight.is_nan() || self.positive_weight <= 0.0 {
            return bad("positive_weight must be positive");
        }
        Ok(())
    }
}

/// Gradient clipping threshold on the global gradient norm.
const CLIP_NORM: f64 = 5.0;
/// Probability clamp for the cross-entropy loss.
const PROB_CLAMP: f64 = 1e-7;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy `−[y·log p + (1−y)·log(1−p)]` with the probability
/// clamped to `[1e-7, 1−1e-7]`.
pub fn bce_loss(prob: f64, label: bool) -> f64 {
    weighted_bce_loss(prob, label, 1.0)
}

fn weighted_bce_loss(prob: f64, label: bool, positive_weight: f64) -> f64 {
    let p = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if label {
        -positive_weight * p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Inverted-scaling dropout masks for one sequence: one mask per inter-layer
/// boundary per time step, entries `0` or `1/(1−rate)`.
#[derive(Debug, Clone)]
pub struct DropoutMasks {
    /// `[boundary][t][unit]`
    masks: Vec<Vec<Vec<f64>>>,
}

impl DropoutMasks {
    /// All-ones masks (dropout disabled) for shape compatibility.
    pub fn ones(boundaries: usize, t: usize, hidden: usize) -> Self {
        Self {
            masks: vec![vec![vec![1.0; hidden]; t]; boundaries],
        }
    }
}

/// Sample masks for one sequence of length `t`, in a fixed draw order.
pub fn sample_masks(
    params: &NetParams,
    t: usize,
    dropout_rate: f64,
    rng: &mut ChaCha8Rng,
) -> DropoutMasks {
    let boundaries = params.layers.len().saturating_sub(1);
    let hidden = params.hidden();
    let keep = 1.0 - dropout_rate;
    let masks = (0..boundaries)
        .map(|_| {
            (0..t)
                .map(|_| {
                    (0..hidden)
                        .map(|_| {
                            if dropout_rate == 0.0 || rng.random_range(0.0..1.0) >= dropout_rate {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    DropoutMasks { masks }
}

/// `out += W·x` for a row-major `rows×cols` matrix.
fn matvec_add(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Wᵀ·a` for a row-major `rows×cols` matrix.
fn matvec_t_add(w: &[f64], a: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (row, &av) in w.chunks_exact(cols).zip(a) {
        if av == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(row) {
            *o += av * wv;
        }
    }
}

/// `W += scale·a⊗x`.
fn outer_add(w: &mut [f64], a: &[f64], x: &[f64], scale: f64) {
    let cols = x.len();
    for (row, &av) in w.chunks_exact_mut(cols).zip(a) {
        let s = av * scale;
        if s == 0.0 {
            continue;
        }
        for (wv, &xv) in row.iter_mut().zip(x) {
            *wv += s * xv;
        }
    }
}

struct StepCache {
    x: Vec<f64>,
    gates: [Vec<f64>; 4], // post-activation i, f, g, o
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

struct ForwardCache {
    layers: Vec<Vec<StepCache>>,
    feature: Vec<f64>,
    prob: f64,
}

fn forward_cached(
    params: &NetParams,
    seq: &VectorSequence,
    masks: Option<&DropoutMasks>,
) -> Result<ForwardCache, SeqNetError> {
    if seq.is_empty() {
        return Err(SeqNetError::EmptyData);
    }
    if seq.dim() != params.input_dim() {
        return Err(SeqNetError::DimensionMismatch {
            expected: params.input_dim(),
            got: seq.dim(),
        });
    }
    let t_len = seq.len();
    let mut caches: Vec<Vec<StepCache>> = Vec::with_capacity(params.layers.len());
    for (li, layer) in params.layers.iter().enumerate() {
        let h = layer.hidden;
        let mut steps = Vec::with_capacity(t_len);
        let mut c_prev = vec![0.0; h];
        let mut h_prev = vec![0.0; h];
        for t in 0..t_len {
            let x: Vec<f64> = if li == 0 {
                if seq.steps[t].len() != layer.input_dim {
                    return Err(SeqNetError::DimensionMismatch {
                        expected: layer.input_dim,
                        got: seq.steps[t].len(),
                    });
                }
                seq.steps[t].clone()
            } else {
                let below = &caches[li - 1][t].h;
                match masks {
                    Some(m) => below
                        .iter()
                        .zip(&m.masks[li - 1][t])
                        .map(|(v, k)| v * k)
                        .collect(),
                    None => below.clone(),
                }
            };
            let mut acts: [Vec<f64>; 4] = std::array::from_fn(|g| layer.b[g].clone());
            for g in 0..GATES {
                matvec_add(&layer.w[g], &x, &mut acts[g]);
                matvec_add(&layer.u[g], &h_prev, &mut acts[g]);
            }
            let i: Vec<f64> = acts[0].iter().map(|&z| sigmoid(z)).collect();
            let f: Vec<f64> = acts[1].iter().map(|&z| sigmoid(z)).collect();
            let g: Vec<f64> = acts[2].iter().map(|&z| z.tanh()).collect();
            let o: Vec<f64> = acts[3].iter().map(|&z| sigmoid(z)).collect();
            let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|&v| v.tanh()).collect();
            let h_now: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
            c_prev = c.clone();
            h_prev = h_now.clone();
            steps.push(StepCache {
                x,
                gates: [i, f, g, o],
                c,
                tanh_c,
                h: h_now,
            });
        }
        caches.push(steps);
    }

    let top = caches.last().expect("at least one layer");
    let hidden = params.hidden();
    let feature: Vec<f64> = match params.pooling {
        Pooling::FinalStep => top[t_len - 1].h.clone(),
        Pooling::MeanOverTime => {
            let mut acc = vec![0.0; hidden];
            for step in top {
                for (a, &v) in acc.iter_mut().zip(&step.h) {
                    *a += v;
                }
            }
            for a in acc.iter_mut() {
                *a /= t_len as f64;
            }
            acc
        }
    };
    let z = params
        .head_w
        .iter()
        .zip(&feature)
        .map(|(w, f)| w * f)
        .sum::<f64>()
        + params.head_b;
    Ok(ForwardCache {
        layers: caches,
        feature,
        prob: sigmoid(z),
    })
}

/// Forward pass to a probability in `(0, 1)`. `masks = None` is evaluation
/// mode (deterministic dropout no-op); pass masks for training mode.
pub fn forward(
    params: &NetParams,
    seq: &VectorSequence,
    masks: Option<&DropoutMasks>,
) -> Result<f64, SeqNetError> {
    Ok(forward_cached(params, seq, masks)?.prob)
}

/// Mean weighted BCE loss of a batch under fixed masks (or eval mode).
pub fn batch_loss(
    params: &NetParams,
    batch: &[&VectorSequence],
    masks: Option<&[DropoutMasks]>,
    positive_weight: f64,
) -> Result<f64, SeqNetError> {
    if batch.is_empty() {
        return Err(SeqNetError::EmptyData);
    }
    let mut total = 0.0;
    for (bi, seq) in batch.iter().enumerate() {
        let m = masks.map(|ms| &ms[bi]);
        let prob = forward(params, seq, m)?;
        total += weighted_bce_loss(prob, seq.label, positive_weight);
    }
    Ok(total / batch.len() as f64)
}

/// Analytic gradients of the mean batch loss via backpropagation through
/// time. Returns `(mean_loss, grads)`.
pub fn batch_gradients(
    params: &NetParams,
    batch: &[&VectorSequence],
    masks: Option<&[DropoutMasks]>,
    positive_weight: f64,
) -> Result<(f64, NetGrads), SeqNetError> {
    if batch.is_empty() {
        return Err(SeqNetError::EmptyData);
    }
    let mut grads = NetGrads::zeros_like(params);
    let scale = 1.0 / batch.len() as f64;
    let mut total_loss = 0.0;

    for (bi, seq) in batch.iter().enumerate() {
        let m = masks.map(|ms| &ms[bi]);
        let cache = forward_cached(params, seq, m)?;
        let p = cache.prob;
        let y = if seq.label { 1.0 } else { 0.0 };
        total_loss += weighted_bce_loss(p, seq.label, positive_weight);
        // d(loss)/d(logit); for weighted BCE: −w·y·(1−p) + (1−y)·p.
        let dz = (-positive_weight * y * (1.0 - p) + (1.0 - y) * p) * scale;

        let t_len = seq.len();
        // Per-layer dL/dh accumulators.
        let mut dh: Vec<Vec<Vec<f64>>> = params
            .layers
            .iter()
            .map(|l| vec![vec![0.0; l.hidden]; t_len])
            .collect();
        let top = params.layers.len() - 1;
        match params.pooling {
            Pooling::FinalStep => {
                for (d, &w) in dh[top][t_len - 1].iter_mut().zip(&params.head_w) {
                    *d += dz * w;
                }
            }
            Pooling::MeanOverTime => {
                let per = dz / t_len as f64;
                for t in 0..t_len {
                    for (d, &w) in dh[top][t].iter_mut().zip(&params.head_w) {
                        *d += per * w;
                    }
                }
            }
        }
        for (gw, &f) in grads.head_w.iter_mut().zip(&cache.feature) {
            *gw += dz * f;
        }
        grads.head_b += dz;

        for li in (0..params.layers.len()).rev() {
            let layer = &params.layers[li];
            let lg = &mut grads.layers[li];
            let steps = &cache.layers[li];
            let h = layer.hidden;
            let mut dc_carry = vec![0.0; h];
            for t in (0..t_len).rev() {
                let step = &steps[t];
                let [gi, gf, gg, go] = &step.gates;
                let dh_t = &dh[li][t];
                // dc = carry + dh ∘ o ∘ (1 − tanh²c)
                let mut dc = dc_carry.clone();
                for k in 0..h {
                    dc[k] += dh_t[k] * go[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
                }
                let c_prev: &[f64] = if t > 0 { &steps[t - 1].c } else { &[] };
                let mut da_i = vec![0.0; h];
                let mut da_f = vec![0.0; h];
                let mut da_g = vec![0.0; h];
                let mut da_o = vec![0.0; h];
                for k in 0..h {
                    da_o[k] = dh_t[k] * step.tanh_c[k] * go[k] * (1.0 - go[k]);
                    let cp = if t > 0 { c_prev[k] } else { 0.0 };
                    da_f[k] = dc[k] * cp * gf[k] * (1.0 - gf[k]);
                    da_i[k] = dc[k] * gg[k] * gi[k] * (1.0 - gi[k]);
                    da_g[k] = dc[k] * gi[k] * (1.0 - gg[k] * gg[k]);
                }
                let das = [&da_i, &da_f, &da_g, &da_o];
                for g in 0..GATES {
                    outer_add(&mut lg.w[g], das[g], &step.x, 1.0);
                    if t > 0 {
                        outer_add(&mut lg.u[g], das[g], &steps[t - 1].h, 1.0);
                    }
                    for (bg, &d) in lg.b[g].iter_mut().zip(das[g]) {
                        *bg += d;
                    }
                }
                if li > 0 {
                    // dL/dx flows to the layer below through the dropout mask.
                    let mut dx = vec![0.0; layer.input_dim];
                    for g in 0..GATES {
                        matvec_t_add(&layer.w[g], das[g], &mut dx);
                    }
                    let below = &mut dh[li - 1][t];
                    match m {
                        Some(masks) => {
                            for ((b, d), k) in below.iter_mut().zip(&dx).zip(&masks.masks[li - 1][t])
                            {
                                *b += d * k;
                            }
                        }
                        None => {
                            for (b, d) in below.iter_mut().zip(&dx) {
                                *b += d;
                            }
                        }
                    }
                }
                if t > 0 {
                    let dh_prev = &mut dh[li][t - 1];
                    for g in 0..GATES {
                        matvec_t_add(&layer.u[g], das[g], dh_prev);
                    }
                    for k in 0..h {
                        dc_carry[k] = dc[k] * gf[k];
                    }
                } else {
                    dc_carry.iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
    }

    Ok((total_loss * scale, grads))
}

/// Training result: the fitted parameters and the per-epoch mean loss curve.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetParams,
    pub epoch_losses: Vec<f64>,
}

/// Train with Adam (bias-corrected moments) and global-norm gradient
/// clipping at 5.0. Fixed seed ⇒ bit-reproducible parameter trajectory.
pub fn train(data: &[VectorSequence], cfg: &TrainConfig) -> Result<TrainOutcome, SeqNetError> {
    cfg.validate()?;
    if data.is_empty() || data.iter().any(|s| s.is_empty()) {
        return Err(SeqNetError::EmptyData);
    }
    let n_pos = data.iter().filter(|s| s.label).count();
    if n_pos == 0 || n_pos == data.len() {
        return Err(SeqNetError::SingleClass);
    }
    let input_dim = data[0].dim();
    for s in data {
        if s.dim() != input_dim {
            return Err(SeqNetError::DimensionMismatch {
                expected: input_dim,
                got: s.dim(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = NetParams::init(input_dim, cfg.hidden, cfg.layers, cfg.pooling, &mut rng);
    let mut flat = params.flatten();
    let mut m = vec![0.0; flat.len()];
    let mut v = vec![0.0; flat.len()];
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&VectorSequence> = chunk.iter().map(|&i| &data[i]).collect();
            let masks: Option<Vec<DropoutMasks>> = if cfg.dropout_rate > 0.0 {
                Some(
                    batch
                        .iter()
                        .map(|s| sample_masks(&params, s.len(), cfg.dropout_rate, &mut rng))
                        .collect(),
                )
            } else {
                None
            };
            let (loss, grads) =
                batch_gradients(&params, &batch, masks.as_deref(), cfg.positive_weight)?;
            let mut g = grads.flatten();
            if g.iter().any(|x| !x.is_finite()) || !loss.is_finite() {
                return Err(SeqNetError::NonFiniteGradient {
                    epoch,
                    batch: batch_idx,
                });
            }
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > CLIP_NORM {
                let s = CLIP_NORM / norm;
                for x in g.iter_mut() {
                    *x *= s;
                }
            }
            step += 1;
            let bc1 = 1.0 - cfg.beta1.powi(step as i32);
            let bc2 = 1.0 - cfg.beta2.powi(step as i32);
            for idx in 0..flat.len() {
                m[idx] = cfg.beta1 * m[idx] + (1.0 - cfg.beta1) * g[idx];
                v[idx] = cfg.beta2 * v[idx] + (1.0 - cfg.beta2) * g[idx] * g[idx];
                let m_hat = m[idx] / bc1;
                let v_hat = v[idx] / bc2;
                flat[idx] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            params.assign_from_flat(&flat);
            loss_sum += loss * batch.len() as f64;
        }
        epoch_losses.push(loss_sum / data.len() as f64);
    }

    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

/// One evaluated sample: probability and thresholded label (`p ≥ 0.5` maps
/// to the positive class).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub prob: f64,
    pub label: bool,
}

/// Evaluate sequences in eval mode (no dropout).
pub fn predict(
    params: &NetParams,
    seqs: &[VectorSequence],
) -> Result<Vec<Prediction>, SeqNetError> {
    seqs.iter()
        .map(|s| {
            forward(params, s, None).map(|prob| Prediction {
                prob,
                label: prob >= 0.5,
            })
        })
        .collect()
}
