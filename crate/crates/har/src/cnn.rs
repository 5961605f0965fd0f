//! Pipeline 3: per-axis 1D convolutional feature learning with concatenated
//! feature maps and a fully-connected softmax classifier, trained by
//! backpropagation with class-weighted cross-entropy and momentum SGD.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::ActivityLabel;
use crate::segment::SegmentTensor;
use crate::{HarError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnArchitecture {
    pub window_len: usize,
    pub n_channels: usize,
    pub n_filters: usize,
    pub filter_size: usize,
    pub pool_size: usize,
    pub fc1: usize,
    pub fc2: usize,
    pub n_classes: usize,
}

impl CnnArchitecture {
    /// Reference architecture: 3 filters of size 20, pool 3, FC 1024/30.
    pub fn standard(window_len: usize, n_channels: usize, n_classes: usize) -> Self {
        CnnArchitecture {
            window_len,
            n_channels,
            n_filters: 3,
            filter_size: 20,
            pool_size: 3,
            fc1: 1024,
            fc2: 30,
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < self.filter_size {
            return Err(HarError::Config(format!(
                "window {} shorter than filter {}",
                self.window_len, self.filter_size
            )));
        }
        if self.pool_size == 0 || self.conv_len() < self.pool_size {
            return Err(HarError::Config("pool size larger than conv output".into()));
        }
        if self.n_filters == 0 || self.fc1 == 0 || self.fc2 == 0 || self.n_classes == 0 {
            return Err(HarError::Config("zero-sized CNN layer".into()));
        }
        Ok(())
    }

    /// Valid convolution, stride 1: T - filter_size + 1 (45 for T=64).
    pub fn conv_len(&self) -> usize {
        self.window_len - self.filter_size + 1
    }

    /// Non-overlapping max-pool, floor division (15 for the defaults).
    pub fn pool_len(&self) -> usize {
        self.conv_len() / self.pool_size
    }

    /// Flattened width per axis (45 for the defaults).
    pub fn per_axis_width(&self) -> usize {
        self.pool_len() * self.n_filters
    }

    /// Concatenated width across axes (180 for m=4).
    pub fn concat_width(&self) -> usize {
        self.per_axis_width() * self.n_channels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnWeights {
    pub arch: CnnArchitecture,
    /// [channel][filter][tap]
    pub conv_w: Vec<f64>,
    /// [channel][filter]
    pub conv_b: Vec<f64>,
    /// [unit][input]
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl CnnWeights {
    pub fn zeros(arch: CnnArchitecture) -> Self {
        CnnWeights {
            arch,
            conv_w: vec![0.0; arch.n_channels * arch.n_filters * arch.filter_size],
            conv_b: vec![0.0; arch.n_channels * arch.n_filters],
            fc1_w: vec![0.0; arch.fc1 * arch.concat_width()],
            fc1_b: vec![0.0; arch.fc1],
            fc2_w: vec![0.0; arch.fc2 * arch.fc1],
            fc2_b: vec![0.0; arch.fc2],
            out_w: vec![0.0; arch.n_classes * arch.fc2],
            out_b: vec![0.0; arch.n_classes],
        }
    }

    /// He-style initialization, scale sqrt(2 / fan_in), biases zero.
    pub fn he_init(arch: CnnArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = CnnWeights::zeros(arch);
        let fill = |values: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng| {
            let scale = (2.0 / fan_in as f64).sqrt();
            for v in values {
                *v = scale * standard_normal(rng);
            }
        };
        fill(&mut w.conv_w, arch.filter_size, &mut rng);
        fill(&mut w.fc1_w, arch.concat_width(), &mut rng);
        fill(&mut w.fc2_w, arch.fc1, &mut rng);
        fill(&mut w.out_w, arch.fc2, &mut rng);
        w
    }

    fn tensors(&self) -> [&Vec<f64>; 8] {
        [
            &self.conv_w,
            &self.conv_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.conv_w,
            &mut self.conv_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn from_flat(arch: CnnArchitecture, flat: &[f64]) -> Self {
        let mut w = CnnWeights::zeros(arch);
        let mut pos = 0;
        for t in w.tensors_mut() {
            let len = t.len();
            t.copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        }
        assert_eq!(pos, flat.len());
        w
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Input batch view: row-major (sample, time, channel), matching the
/// segment tensor layout.
pub struct Batch<'a> {
    pub data: &'a [f64],
    pub n: usize,
    pub window_len: usize,
    pub n_channels: usize,
}

impl<'a> Batch<'a> {
    pub fn from_tensor(tensor: &'a SegmentTensor) -> Self {
        Batch {
            data: &tensor.data,
            n: tensor.n_segments,
            window_len: tensor.window_len,
            n_channels: crate::segment::CHANNELS,
        }
    }

    fn value(&self, b: usize, t: usize, ch: usize) -> f64 {
        self.data[(b * self.window_len + t) * self.n_channels + ch]
    }
}

/// All intermediate activations of one forward pass.
pub struct ForwardCache {
    /// conv pre-activations, [b][ch][f][i]
    conv: Vec<f64>,
    /// pooled ReLU outputs = flattened/concatenated input to fc1, [b][width]
    concat: Vec<f64>,
    /// argmax source index (within conv) per pooled cell
    pool_src: Vec<usize>,
    fc1_out: Vec<f64>,
    fc2_out: Vec<f64>,
    pub probabilities: Vec<f64>,
}

fn check_shapes(weights: &CnnWeights, batch: &Batch) -> Result<()> {
    if batch.window_len != weights.arch.window_len || batch.n_channels != weights.arch.n_channels
    {
        return Err(HarError::InvalidInput(format!(
            "cnn shape mismatch: batch {}x{} vs arch {}x{}",
            batch.window_len, batch.n_channels, weights.arch.window_len, weights.arch.n_channels
        )));
    }
    Ok(())
}

/// Forward pass: per axis conv -> ReLU -> max-pool -> flatten, concatenate,
/// fc1 ReLU -> fc2 ReLU -> softmax.
pub fn forward(weights: &CnnWeights, batch: &Batch) -> Result<ForwardCache> {
    check_shapes(weights, batch)?;
    let arch = &weights.arch;
    let conv_len = arch.conv_len();
    let pool_len = arch.pool_len();
    let width = arch.concat_width();
    let n = batch.n;

    let mut conv = vec![0.0; n * arch.n_channels * arch.n_filters * conv_len];
    let mut concat = vec![0.0; n * width];
    let mut pool_src = vec![0usize; n * width];

    for b in 0..n {
        for ch in 0..arch.n_channels {
            for f in 0..arch.n_filters {
                let w_base = (ch * arch.n_filters + f) * arch.filter_size;
                let bias = weights.conv_b[ch * arch.n_filters + f];
                let conv_base = ((b * arch.n_channels + ch) * arch.n_filters + f) * conv_len;
                for i in 0..conv_len {
                    let mut acc = bias;
                    for tap in 0..arch.filter_size {
                        acc += weights.conv_w[w_base + tap] * batch.value(b, i + tap, ch);
                    }
                    conv[conv_base + i] = acc;
                }
                // ReLU then non-overlapping max-pool; ties keep the earliest
                let flat_base = b * width + (ch * arch.n_filters + f) * pool_len;
                for j in 0..pool_len {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for p in 0..arch.pool_size {
                        let idx = j * arch.pool_size + p;
                        let v = conv[conv_base + idx].max(0.0);
                        if v > best {
                            best = v;
                            best_idx = idx;
                        }
                    }
                    concat[flat_base + j] = best;
                    pool_src[flat_base + j] = best_idx;
                }
            }
        }
    }

    let dense = |input: &[f64], w: &[f64], bias: &[f64], in_dim: usize, out_dim: usize, relu: bool| {
        let rows = input.len() / in_dim;
        let mut out = vec![0.0; rows * out_dim];
        for r in 0..rows {
            let x = &input[r * in_dim..(r + 1) * in_dim];
            for u in 0..out_dim {
                let wrow = &w[u * in_dim..(u + 1) * in_dim];
                let mut acc = bias[u];
                for (a, b) in wrow.iter().zip(x) {
                    acc += a * b;
                }
                out[r * out_dim + u] = if relu { acc.max(0.0) } else { acc };
            }
        }
        out
    };

    let fc1_out = dense(&concat, &weights.fc1_w, &weights.fc1_b, width, arch.fc1, true);
    let fc2_out = dense(&fc1_out, &weights.fc2_w, &weights.fc2_b, arch.fc1, arch.fc2, true);
    let mut logits = dense(
        &fc2_out,
        &weights.out_w,
        &weights.out_b,
        arch.fc2,
        arch.n_classes,
        false,
    );
    // stable softmax, in place
    for b in 0..n {
        let row = &mut logits[b * arch.n_classes..(b + 1) * arch.n_classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }

    Ok(ForwardCache {
        conv,
        concat,
        pool_src,
        fc1_out,
        fc2_out,
        probabilities: logits,
    })
}

pub struct LossAndGrads {
    pub loss: f64,
    pub grads: CnnWeights,
    /// Set when a predicted probability had to be clamped at 1e-12.
    pub numerical_warning: bool,
}

/// Class-weighted cross-entropy and full reverse-mode gradients.
///
/// `label_indices` index into the model's class list; `class_weights` is one
/// weight per class index.
pub fn loss_and_grads(
    weights: &CnnWeights,
    batch: &Batch,
    label_indices: &[usize],
    class_weights: &[f64],
) -> Result<(LossAndGrads, ForwardCache)> {
    let arch = weights.arch;
    if label_indices.len() != batch.n {
        return Err(HarError::InvalidInput(format!(
            "cnn: {} labels for batch of {}",
            label_indices.len(),
            batch.n
        )));
    }
    if label_indices.iter().any(|&y| y >= arch.n_classes) {
        return Err(HarError::InvalidInput("cnn: label index out of range".into()));
    }
    let cache = forward(weights, batch)?;
    let n = batch.n;
    let l = arch.n_classes;
    let inv_n = if n > 0 { 1.0 / n as f64 } else { 0.0 };

    let mut loss = 0.0;
    let mut numerical_warning = false;
    // fused softmax + cross-entropy gradient on the logits
    let mut d_logits = vec![0.0; n * l];
    for b in 0..n {
        let y = label_indices[b];
        let w = class_weights[y];
        let p = cache.probabilities[b * l + y];
        let p_clamped = if p < 1e-12 {
            numerical_warning = true;
            1e-12
        } else {
            p
        };
        loss += w * (-p_clamped.ln()) * inv_n;
        for c in 0..l {
            let indicator = if c == y { 1.0 } else { 0.0 };
            d_logits[b * l + c] = w * (cache.probabilities[b * l + c] - indicator) * inv_n;
        }
    }

    let mut grads = CnnWeights::zeros(arch);

    // dense backward: returns gradient w.r.t. the layer input
    let dense_backward = |d_out: &[f64],
                          input: &[f64],
                          w: &[f64],
                          in_dim: usize,
                          out_dim: usize,
                          gw: &mut [f64],
                          gb: &mut [f64]| {
        let rows = d_out.len() / out_dim;
        let mut d_in = vec![0.0; rows * in_dim];
        for r in 0..rows {
            let x = &input[r * in_dim..(r + 1) * in_dim];
            let d = &d_out[r * out_dim..(r + 1) * out_dim];
            let dx = &mut d_in[r * in_dim..(r + 1) * in_dim];
            for u in 0..out_dim {
                let g = d[u];
                if g == 0.0 {
                    continue;
                }
                gb[u] += g;
                let wrow = &w[u * in_dim..(u + 1) * in_dim];
                let gwrow = &mut gw[u * in_dim..(u + 1) * in_dim];
                for i in 0..in_dim {
                    gwrow[i] += g * x[i];
                    dx[i] += g * wrow[i];
                }
            }
        }
        d_in
    };
    // ReLU subgradient: 0 at 0
    let relu_backward = |d: &mut [f64], activations: &[f64]| {
        for (g, &a) in d.iter_mut().zip(activations) {
            if a <= 0.0 {
                *g = 0.0;
            }
        }
    };

    let width = arch.concat_width();
    let mut d_fc2 = dense_backward(
        &d_logits,
        &cache.fc2_out,
        &weights.out_w,
        arch.fc2,
        l,
        &mut grads.out_w,
        &mut grads.out_b,
    );
    relu_backward(&mut d_fc2, &cache.fc2_out);
    let mut d_fc1 = dense_backward(
        &d_fc2,
        &cache.fc1_out,
        &weights.fc2_w,
        arch.fc1,
        arch.fc2,
        &mut grads.fc2_w,
        &mut grads.fc2_b,
    );
    relu_backward(&mut d_fc1, &cache.fc1_out);
    let d_concat = dense_backward(
        &d_fc1,
        &cache.concat,
        &weights.fc1_w,
        width,
        arch.fc1,
        &mut grads.fc1_w,
        &mut grads.fc1_b,
    );

    // route pooled gradients to the argmax conv cell, through the ReLU
    let conv_len = arch.conv_len();
    let pool_len = arch.pool_len();
    for b in 0..n {
        for ch in 0..arch.n_channels {
            for f in 0..arch.n_filters {
                let flat_base = b * width + (ch * arch.n_filters + f) * pool_len;
                let conv_base = ((b * arch.n_channels + ch) * arch.n_filters + f) * conv_len;
                let w_base = (ch * arch.n_filters + f) * arch.filter_size;
                for j in 0..pool_len {
                    let g = d_concat[flat_base + j];
                    if g == 0.0 {
                        continue;
                    }
                    let src = cache.pool_src[flat_base + j];
                    if cache.conv[conv_base + src] <= 0.0 {
                        continue; // ReLU clipped the winning cell
                    }
                    grads.conv_b[ch * arch.n_filters + f] += g;
                    for tap in 0..arch.filter_size {
                        grads.conv_w[w_base + tap] += g * batch.value(b, src + tap, ch);
                    }
                }
            }
        }
    }

    Ok((
        LossAndGrads {
            loss,
            grads,
            numerical_warning,
        },
        cache,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            class_weighting: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 {
            return Err(HarError::Config("cnn.learning_rate must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(HarError::Config("cnn.momentum must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(HarError::Config("cnn.batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub weights: CnnWeights,
    pub classes: Vec<ActivityLabel>,
    pub loss_history: Vec<f64>,
}

/// Momentum SGD over shuffled mini-batches.
pub fn train(
    tensor: &SegmentTensor,
    arch: CnnArchitecture,
    config: &TrainConfig,
    class_weights: Option<&BTreeMap<u8, f64>>,
) -> Result<CnnModel> {
    arch.validate()?;
    config.validate()?;
    if tensor.n_segments == 0 {
        return Err(HarError::Training("cnn: empty training tensor".into()));
    }
    let mut classes: Vec<ActivityLabel> = tensor.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != arch.n_classes {
        return Err(HarError::Config(format!(
            "cnn: arch expects {} classes, training data has {}",
            arch.n_classes,
            classes.len()
        )));
    }
    let label_indices: Vec<usize> = tensor
        .labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let weights_per_class: Vec<f64> = classes
        .iter()
        .map(|c| match class_weights {
            Some(w) if config.class_weighting => *w.get(&c.id()).unwrap_or(&1.0),
            _ => 1.0,
        })
        .collect();

    let mut weights = CnnWeights::he_init(arch, config.seed);
    let mut velocity = CnnWeights::zeros(arch);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..tensor.n_segments).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    let row_len = tensor.window_len * crate::segment::CHANNELS;
    let mut batch_buf = vec![0.0; config.batch_size * row_len];
    let mut batch_labels = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            batch_labels.clear();
            for (slot, &seg) in chunk.iter().enumerate() {
                batch_buf[slot * row_len..(slot + 1) * row_len]
                    .copy_from_slice(&tensor.data[seg * row_len..(seg + 1) * row_len]);
                batch_labels.push(label_indices[seg]);
            }
            let batch = Batch {
                data: &batch_buf[..chunk.len() * row_len],
                n: chunk.len(),
                window_len: tensor.window_len,
                n_channels: crate::segment::CHANNELS,
            };
            let (step, _) = loss_and_grads(&weights, &batch, &batch_labels, &weights_per_class)?;
            if !step.loss.is_finite() {
                return Err(HarError::Training(format!(
                    "non-finite loss at epoch {epoch}, batch {n_batches}"
                )));
            }
            epoch_loss += step.loss;
            n_batches += 1;
            for (w_tensor, (v_tensor, g_tensor)) in weights
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut().into_iter().zip(step.grads.tensors()))
            {
                for ((w, v), &g) in w_tensor.iter_mut().zip(v_tensor.iter_mut()).zip(g_tensor.iter())
                {
                    *v = config.momentum * *v - config.learning_rate * g;
                    *w += *v;
                }
            }
        }
        loss_history.push(epoch_loss / n_batches.max(1) as f64);
    }

    Ok(CnnModel {
        weights,
        classes,
        loss_history,
    })
}

/// Argmax of the softmax output; ties go to the lowest class id.
pub fn predict(model: &CnnModel, tensor: &SegmentTensor) -> Result<Vec<ActivityLabel>> {
    if tensor.n_segments == 0 {
        return Ok(Vec::new());
    }
    let cache = forward(&model.weights, &Batch::from_tensor(tensor))?;
    let l = model.weights.arch.n_classes;
    Ok((0..tensor.n_segments)
        .map(|b| {
            let row = &cache.probabilities[b * l..(b + 1) * l];
            let mut best = 0usize;
            for c in 1..l {
                if row[c] > row[best] {
                    best = c;
                }
            }
            model.classes[best]
        })
        .collect())
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"HARCNN01";

/// Versioned checkpoint: magic, arch fields, per-tensor lengths, then all
/// parameters as little-endian f64. Save/load round-trips bit-exactly.
pub fn save_weights(model: &CnnModel, path: &Path) -> Result<()> {
    let arch = model.weights.arch;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    for field in [
        arch.window_len,
        arch.n_channels,
        arch.n_filters,
        arch.filter_size,
        arch.pool_size,
        arch.fc1,
        arch.fc2,
        arch.n_classes,
    ] {
        buf.extend_from_slice(&(field as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(model.classes.len() as u64).to_le_bytes());
    for c in &model.classes {
        buf.extend_from_slice(&(c.id() as u32).to_le_bytes());
    }
    let tensors = model.weights.tensors();
    buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for t in tensors {
        buf.extend_from_slice(&(t.len() as u64).to_le_bytes());
    }
    for t in model.weights.tensors() {
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| HarError::io(path.display().to_string(), e))
}

pub fn load_weights(path: &Path) -> Result<CnnModel> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| HarError::io(path.display().to_string(), e))?;
    struct Cursor<'a> {
        bytes: &'a [u8],
        pos: usize,
        path: &'a Path,
    }
    impl<'a> Cursor<'a> {
        fn bad(&self) -> HarError {
            HarError::InvalidInput(format!("corrupt checkpoint {}", self.path.display()))
        }
        fn take(&mut self, n: usize) -> Result<&'a [u8]> {
            let slice = self
                .bytes
                .get(self.pos..self.pos + n)
                .ok_or_else(|| self.bad())?;
            self.pos += n;
            Ok(slice)
        }
        fn u64_field(&mut self) -> Result<usize> {
            Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize)
        }
    }
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if cur.take(8)? != CHECKPOINT_MAGIC {
        return Err(HarError::InvalidInput(format!(
            "not a weight checkpoint: {}",
            path.display()
        )));
    }
    let arch = CnnArchitecture {
        window_len: cur.u64_field()?,
        n_channels: cur.u64_field()?,
        n_filters: cur.u64_field()?,
        filter_size: cur.u64_field()?,
        pool_size: cur.u64_field()?,
        fc1: cur.u64_field()?,
        fc2: cur.u64_field()?,
        n_classes: cur.u64_field()?,
    };
    let n_classes = cur.u64_field()?;
    let mut classes = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let id = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        classes.push(ActivityLabel::new(id as u8)?);
    }
    let n_tensors = cur.u64_field()?;
    let mut lengths = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        lengths.push(cur.u64_field()?);
    }
    let mut weights = CnnWeights::zeros(arch);
    let tensors = weights.tensors_mut();
    if lengths.len() != tensors.len() {
        return Err(cur.bad());
    }
    for (t, &len) in tensors.into_iter().zip(&lengths) {
        if t.len() != len {
            return Err(cur.bad());
        }
        for v in t.iter_mut() {
            *v = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        }
    }
    Ok(CnnModel {
        weights,
        classes,
        loss_history: Vec::new(),
    })
}
