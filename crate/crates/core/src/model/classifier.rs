use super::lstm::{backward_direction, run_direction, CellCache, LstmParams};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const NUM_CLASSES: usize = 5;

/// Floor applied to the gold-class probability inside the loss.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifierShape {
    pub input: usize,
    pub hidden: usize,
    pub bidirectional: bool,
}

impl ClassifierShape {
    pub fn context_dim(&self) -> usize {
        if self.bidirectional {
            2 * self.hidden
        } else {
            self.hidden
        }
    }

    fn lstm_len(&self) -> usize {
        LstmParams::len_for(self.hidden, self.input)
    }

    fn backward_offset(&self) -> usize {
        self.lstm_len()
    }

    fn dense_w_offset(&self) -> usize {
        self.lstm_len() * if self.bidirectional { 2 } else { 1 }
    }

    fn dense_b_offset(&self) -> usize {
        self.dense_w_offset() + NUM_CLASSES * self.context_dim()
    }

    /// Length of the flat parameter vector.
    pub fn param_count(&self) -> usize {
        self.dense_b_offset() + NUM_CLASSES
    }
}

/// All classifier weights in one flat vector, ordered: forward LSTM,
/// backward LSTM (bi-directional only), dense `W` (`5 × C`, row-major),
/// dense `b` (5).
///
/// `generation` increments on every mutable access so that forward caches
/// computed against older weights are rejected by [`backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub shape: ClassifierShape,
    data: Vec<f64>,
    generation: u64,
}

impl ClassifierParams {
    pub fn from_flat(shape: ClassifierShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                shape.param_count(),
                data.len()
            )));
        }
        Ok(ClassifierParams {
            shape,
            data,
            generation: 0,
        })
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.data
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn forward_lstm(&self) -> LstmParams<'_> {
        let s = &self.shape;
        LstmParams::new(s.hidden, s.input, &self.data[..s.lstm_len()])
            .expect("layout is consistent with shape")
    }

    pub fn backward_lstm(&self) -> Option<LstmParams<'_>> {
        let s = &self.shape;
        s.bidirectional.then(|| {
            let o = s.backward_offset();
            LstmParams::new(s.hidden, s.input, &self.data[o..o + s.lstm_len()])
                .expect("layout is consistent with shape")
        })
    }

    pub fn dense_w(&self) -> &[f64] {
        &self.data[self.shape.dense_w_offset()..self.shape.dense_b_offset()]
    }

    pub fn dense_b(&self) -> &[f64] {
        &self.data[self.shape.dense_b_offset()..]
    }
}

fn glorot(rng: &mut SplitMix64, out: &mut [f64], fan_in: usize, fan_out: usize) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for x in out {
        *x = rng.uniform(-bound, bound);
    }
}

/// Glorot-uniform weights, zero biases except the forget gate (1.0).
/// Draws happen in flat-layout order.
pub fn init_params(hidden: usize, input: usize, bidirectional: bool, seed: u64) -> Result<ClassifierParams> {
    use super::lstm::Gate;
    if hidden == 0 || input == 0 {
        return Err(Error::InvalidArgument("hidden and input sizes must be > 0".into()));
    }
    let shape = ClassifierShape {
        input,
        hidden,
        bidirectional,
    };
    let mut data = vec![0.0; shape.param_count()];
    let mut rng = SplitMix64::new(seed);
    let directions = if bidirectional { 2 } else { 1 };
    for dir in 0..directions {
        let base = dir * shape.lstm_len();
        for gate in Gate::ALL {
            let w = base + LstmParams::w_offset(hidden, input, gate);
            glorot(&mut rng, &mut data[w..w + hidden * input], input, hidden);
            let u = base + LstmParams::u_offset(hidden, input, gate);
            glorot(&mut rng, &mut data[u..u + hidden * hidden], hidden, hidden);
            if gate == Gate::Forget {
                let b = base + LstmParams::b_offset(hidden, input, gate);
                data[b..b + hidden].iter_mut().for_each(|x| *x = 1.0);
            }
        }
    }
    let c = shape.context_dim();
    let w = shape.dense_w_offset();
    glorot(&mut rng, &mut data[w..w + NUM_CLASSES * c], c, NUM_CLASSES);
    ClassifierParams::from_flat(shape, data)
}

/// Zero-padded batch of feature sequences, `batch × max_len × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub data: Vec<f64>,
    pub dim: usize,
    pub max_len: usize,
    pub lens: Vec<usize>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn size(&self) -> usize {
        self.lens.len()
    }

    pub fn step(&self, item: usize, t: usize) -> &[f64] {
        let o = (item * self.max_len + t) * self.dim;
        &self.data[o..o + self.dim]
    }

    fn steps(&self, item: usize) -> Vec<&[f64]> {
        (0..self.lens[item]).map(|t| self.step(item, t)).collect()
    }
}

fn final_hidden(caches: &[CellCache]) -> impl Iterator<Item = f64> + '_ {
    caches
        .last()
        .into_iter()
        .flat_map(|c| c.o.iter().zip(&c.tanh_c).map(|(o, t)| o * t))
}

fn encode_steps(
    steps: &[&[f64]],
    params: &ClassifierParams,
) -> Result<(Vec<CellCache>, Vec<CellCache>, Vec<f64>)> {
    let fwd = run_direction(steps.iter().copied(), &params.forward_lstm())?;
    let bwd = match params.backward_lstm() {
        Some(p) => run_direction(steps.iter().rev().copied(), &p)?,
        None => Vec::new(),
    };
    let context = final_hidden(&fwd).chain(final_hidden(&bwd)).collect();
    Ok((fwd, bwd, context))
}

/// Context vector of the first `mask_len` steps of `xs`: the forward final
/// hidden state, followed by the backward direction's final hidden state
/// (which has read the steps in reverse) when bi-directional. Steps past
/// `mask_len` are ignored.
pub fn encode_sequence(xs: &[Vec<f64>], mask_len: usize, params: &ClassifierParams) -> Result<Vec<f64>> {
    if mask_len == 0 || mask_len > xs.len() {
        return Err(Error::InvalidArgument(format!(
            "mask length {mask_len} outside 1..={}",
            xs.len()
        )));
    }
    let steps: Vec<&[f64]> = xs[..mask_len].iter().map(Vec::as_slice).collect();
    Ok(encode_steps(&steps, params)?.2)
}

/// `softmax(W · context + b)` with max subtraction.
pub fn dense_softmax(context: &[f64], params: &ClassifierParams) -> Vec<f64> {
    let c = params.shape.context_dim();
    let w = params.dense_w();
    let logits: Vec<f64> = params
        .dense_b()
        .iter()
        .enumerate()
        .map(|(k, b)| b + w[k * c..(k + 1) * c].iter().zip(context).map(|(a, x)| a * x).sum::<f64>())
        .collect();
    softmax(&logits)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln(max(probs[label], 1e-12))`.
pub fn sparse_cce(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or_else(|| {
        Error::InvalidArgument(format!("label {label} out of range 0..{}", probs.len()))
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

#[derive(Debug, Clone)]
struct SequenceCache {
    fwd: Vec<CellCache>,
    bwd: Vec<CellCache>,
    context: Vec<f64>,
    probs: Vec<f64>,
}

/// Forward activations of a batch, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    shape: ClassifierShape,
    sequences: Vec<SequenceCache>,
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub probs: Vec<Vec<f64>>,
    pub cache: ForwardCache,
}

pub fn forward_batch(params: &ClassifierParams, batch: &Batch) -> Result<BatchOutput> {
    if batch.dim != params.shape.input {
        return Err(Error::Shape(format!(
            "batch features have dim {}, model expects {}",
            batch.dim, params.shape.input
        )));
    }
    let mut sequences = Vec::with_capacity(batch.size());
    for item in 0..batch.size() {
        if batch.lens[item] == 0 || batch.lens[item] > batch.max_len {
            return Err(Error::InvalidArgument(format!(
                "sequence length {} outside 1..={}",
                batch.lens[item], batch.max_len
            )));
        }
        let (fwd, bwd, context) = encode_steps(&batch.steps(item), params)?;
        let probs = dense_softmax(&context, params);
        sequences.push(SequenceCache {
            fwd,
            bwd,
            context,
            probs,
        });
    }
    Ok(BatchOutput {
        probs: sequences.iter().map(|s| s.probs.clone()).collect(),
        cache: ForwardCache {
            generation: params.generation(),
            shape: params.shape,
            sequences,
        },
    })
}

/// Mean sparse categorical cross-entropy over a batch.
pub fn mean_loss(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (p, &l) in probs.iter().zip(labels) {
        total += sparse_cce(p, l)?;
    }
    Ok(total / labels.len() as f64)
}

/// Gradient of the mean batch loss w.r.t. every parameter, in flat layout.
pub fn backward(params: &ClassifierParams, cache: &ForwardCache, labels: &[usize]) -> Result<Vec<f64>> {
    if cache.generation != params.generation() {
        return Err(Error::StaleCache {
            cached: cache.generation,
            current: params.generation(),
        });
    }
    if cache.shape != params.shape {
        return Err(Error::Shape("forward cache was computed for a different model shape".into()));
    }
    if labels.len() != cache.sequences.len() {
        return Err(Error::Shape(format!(
            "{} labels for a forward cache of {} sequences",
            labels.len(),
            cache.sequences.len()
        )));
    }
    let shape = params.shape;
    let h = shape.hidden;
    let c = shape.context_dim();
    let scale = 1.0 / labels.len() as f64;
    let mut grad = vec![0.0; shape.param_count()];
    let w_off = shape.dense_w_offset();
    let b_off = shape.dense_b_offset();
    let dense_w = params.dense_w();

    for (seq, &label) in cache.sequences.iter().zip(labels) {
        if label >= NUM_CLASSES {
            return Err(Error::InvalidArgument(format!("label {label} out of range 0..5")));
        }
        let mut dctx = vec![0.0; c];
        for k in 0..NUM_CLASSES {
            let dlogit = (seq.probs[k] - if k == label { 1.0 } else { 0.0 }) * scale;
            grad[b_off + k] += dlogit;
            let row = &mut grad[w_off + k * c..w_off + (k + 1) * c];
            for (g, x) in row.iter_mut().zip(&seq.context) {
                *g += dlogit * x;
            }
            for (d, w) in dctx.iter_mut().zip(&dense_w[k * c..(k + 1) * c]) {
                *d += dlogit * w;
            }
        }
        let lstm_len = shape.lstm_len();
        backward_direction(&params.forward_lstm(), &seq.fwd, &dctx[..h], &mut grad[..lstm_len]);
        if let Some(p) = params.backward_lstm() {
            let o = shape.backward_offset();
            backward_direction(&p, &seq.bwd, &dctx[h..], &mut grad[o..o + lstm_len]);
        }
    }
    Ok(grad)
}
