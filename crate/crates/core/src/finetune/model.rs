//! A small per-position classifier standing in for a frozen backbone.
//!
//! Tokens enter as one-hot vectors, pass through a stack of linear layers
//! with tanh between them, and the last layer produces vocabulary logits.
//! Adapter injection gives every linear layer a per-output scale and shift
//! and optionally adds prompt vectors whose mean is added to every input
//! position.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("model already has adapters")]
    AlreadyAdapted,
    #[error("model has no adapters")]
    NoAdapters,
    #[error("only adapter parameters may be trained; call mark_only_adapter_trainable first")]
    NotTrainable,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("adapter layout mismatch: checkpoint {found}, model {expected}")]
    LayoutMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weight[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(x).map(|(w, v)| w * v).sum();
        }
    }

    /// `out += Wᵀ g`
    fn matvec_t_acc(&self, g: &[f64], out: &mut [f64]) {
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            let row = &self.weight[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * gr;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adapters {
    /// Per layer, one per output unit. Initialised to 1.
    pub scales: Vec<Vec<f64>>,
    /// Per layer, one per output unit. Initialised to 0.
    pub shifts: Vec<Vec<f64>>,
    /// Prompt vectors in input space. Initialised to 0.
    pub prompt: Vec<Vec<f64>>,
}

/// Shape of the adapter parameters, used to check checkpoint compatibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterLayout {
    pub layer_widths: Vec<usize>,
    pub prompt_len: usize,
    pub prompt_dim: usize,
}

impl AdapterLayout {
    pub fn len(&self) -> usize {
        2 * self.layer_widths.iter().sum::<usize>() + self.prompt_len * self.prompt_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for AdapterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths: Vec<String> = self.layer_widths.iter().map(usize::to_string).collect();
        write!(f, "scale_shift:{};prompt:{}x{};values:{}", widths.join(","), self.prompt_len, self.prompt_dim, self.len())
    }
}

impl std::str::FromStr for AdapterLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed adapter layout {s:?}");
        let mut widths = None;
        let mut prompt = None;
        let mut values = None;
        for part in s.split(';') {
            let (k, v) = part.split_once(':').ok_or_else(bad)?;
            match k {
                "scale_shift" => {
                    widths = Some(
                        v.split(',').filter(|x| !x.is_empty()).map(|x| x.parse().map_err(|_| bad())).collect::<Result<Vec<usize>, _>>()?,
                    )
                }
                "prompt" => {
                    let (a, b) = v.split_once('x').ok_or_else(bad)?;
                    prompt = Some((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
                }
                "values" => values = Some(v.parse::<usize>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let (prompt_len, prompt_dim) = prompt.ok_or_else(bad)?;
        let layout = AdapterLayout { layer_widths: widths.ok_or_else(bad)?, prompt_len, prompt_dim };
        if values != Some(layout.len()) {
            return Err(bad());
        }
        Ok(layout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub vocab_size: usize,
    pub layers: Vec<LinearLayer>,
    pub adapters: Option<Adapters>,
    /// True once only adapter parameters are trainable.
    pub adapter_only: bool,
}

/// A batch of equal-length id/target sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub input_ids: Vec<Vec<usize>>,
    pub targets: Vec<Vec<usize>>,
}

impl Batch {
    pub fn validate(&self, vocab: usize) -> Result<usize, ModelError> {
        if self.input_ids.len() != self.targets.len() {
            return Err(ModelError::Shape(format!(
                "{} input sequences but {} target sequences",
                self.input_ids.len(),
                self.targets.len()
            )));
        }
        let mut positions = 0;
        for (i, (x, y)) in self.input_ids.iter().zip(&self.targets).enumerate() {
            if x.len() != y.len() {
                return Err(ModelError::Shape(format!("sequence {i}: {} inputs vs {} targets", x.len(), y.len())));
            }
            if let Some(bad) = x.iter().chain(y).find(|&&t| t >= vocab) {
                return Err(ModelError::Shape(format!("sequence {i}: id {bad} outside vocabulary of {vocab}")));
            }
            positions += x.len();
        }
        if positions == 0 {
            return Err(ModelError::Shape("batch has no positions".into()));
        }
        Ok(positions)
    }
}

pub struct LossOutput {
    /// One row of logits per position, batch-major.
    pub logits: Vec<Vec<f64>>,
    /// Mean cross-entropy over all positions.
    pub loss: f64,
}

impl ToyModel {
    /// Random frozen weights: `vocab -> hidden[0] -> ... -> vocab`.
    pub fn new(vocab_size: usize, hidden: &[usize], seed: u64) -> Self {
        assert!(vocab_size > 0, "vocabulary must be non-empty");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![vocab_size];
        dims.extend_from_slice(hidden);
        dims.push(vocab_size);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (cols, rows) = (d[0], d[1]);
                let w = Normal::new(0.0, 1.0 / (cols as f64).sqrt()).expect("finite std");
                let b = Normal::new(0.0, 0.1).expect("finite std");
                LinearLayer {
                    rows,
                    cols,
                    weight: (0..rows * cols).map(|_| w.sample(&mut rng)).collect(),
                    bias: (0..rows).map(|_| b.sample(&mut rng)).collect(),
                }
            })
            .collect();
        Self { vocab_size, layers, adapters: None, adapter_only: false }
    }

    pub fn frozen_param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn adapter_param_count(&self) -> usize {
        self.adapter_layout().map_or(0, |l| l.len())
    }

    pub fn total_param_count(&self) -> usize {
        self.frozen_param_count() + self.adapter_param_count()
    }

    pub fn trainable_param_count(&self) -> usize {
        if self.adapter_only { self.adapter_param_count() } else { 0 }
    }

    pub fn adapter_layout(&self) -> Option<AdapterLayout> {
        let a = self.adapters.as_ref()?;
        Some(AdapterLayout {
            layer_widths: a.scales.iter().map(Vec::len).collect(),
            prompt_len: a.prompt.len(),
            prompt_dim: self.vocab_size,
        })
    }

    /// Flat adapter values: per layer scales then shifts, then prompt rows.
    pub fn adapter_values(&self) -> Vec<f64> {
        let Some(a) = &self.adapters else { return Vec::new() };
        let mut out = Vec::with_capacity(self.adapter_param_count());
        for (s, d) in a.scales.iter().zip(&a.shifts) {
            out.extend_from_slice(s);
            out.extend_from_slice(d);
        }
        for p in &a.prompt {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn set_adapter_values(&mut self, values: &[f64]) -> Result<(), ModelError> {
        let n = self.adapter_param_count();
        let a = self.adapters.as_mut().ok_or(ModelError::NoAdapters)?;
        if values.len() != n {
            return Err(ModelError::Shape(format!("{} adapter values for {n} parameters", values.len())));
        }
        let mut it = values.iter().copied();
        for (s, d) in a.scales.iter_mut().zip(a.shifts.iter_mut()) {
            s.iter_mut().chain(d.iter_mut()).for_each(|v| *v = it.next().expect("length checked"));
        }
        for p in &mut a.prompt {
            p.iter_mut().for_each(|v| *v = it.next().expect("length checked"));
        }
        Ok(())
    }

    fn prompt_mean(&self) -> Option<Vec<f64>> {
        let a = self.adapters.as_ref()?;
        if a.prompt.is_empty() {
            return None;
        }
        let mut mean = vec![0.0; self.vocab_size];
        for p in &a.prompt {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        let k = a.prompt.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        Some(mean)
    }

    /// Activations for one token: `acts[0]` is the input vector, `acts[l+1]`
    /// the output of layer `l` (tanh applied except on the last layer).
    /// `pre[l]` holds `W_l · acts[l]`.
    fn forward_token(&self, id: usize, prompt_mean: Option<&[f64]>, acts: &mut Vec<Vec<f64>>, pre: &mut Vec<Vec<f64>>) {
        acts.clear();
        pre.clear();
        let mut x = vec![0.0; self.vocab_size];
        x[id] = 1.0;
        if let Some(p) = prompt_mean {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += pi;
            }
        }
        acts.push(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut u = vec![0.0; layer.rows];
            layer.matvec(&acts[l], &mut u);
            let z: Vec<f64> = match &self.adapters {
                Some(a) => (0..layer.rows).map(|r| a.scales[l][r] * u[r] + layer.bias[r] + a.shifts[l][r]).collect(),
                None => (0..layer.rows).map(|r| u[r] + layer.bias[r]).collect(),
            };
            pre.push(u);
            acts.push(if l == last { z } else { z.into_iter().map(f64::tanh).collect() });
        }
    }

    /// Logits for a single sequence.
    pub fn forward(&self, ids: &[usize]) -> Result<Vec<Vec<f64>>, ModelError> {
        if let Some(bad) = ids.iter().find(|&&t| t >= self.vocab_size) {
            return Err(ModelError::Shape(format!("id {bad} outside vocabulary of {}", self.vocab_size)));
        }
        let pm = self.prompt_mean();
        let (mut acts, mut pre) = (Vec::new(), Vec::new());
        Ok(ids
            .iter()
            .map(|&id| {
                self.forward_token(id, pm.as_deref(), &mut acts, &mut pre);
                acts.pop().expect("at least one layer")
            })
            .collect())
    }

    pub fn compute_loss(&self, batch: &Batch) -> Result<LossOutput, ModelError> {
        let n = batch.validate(self.vocab_size)?;
        let mut logits = Vec::with_capacity(n);
        let mut total = 0.0;
        for (x, y) in batch.input_ids.iter().zip(&batch.targets) {
            for (row, &t) in self.forward(x)?.into_iter().zip(y) {
                total += cross_entropy(&row, t);
                logits.push(row);
            }
        }
        Ok(LossOutput { logits, loss: total / n as f64 })
    }

    /// Loss and its gradient with respect to the flat adapter values.
    pub fn loss_and_adapter_grad(&self, batch: &Batch) -> Result<(f64, Vec<f64>), ModelError> {
        let a = self.adapters.as_ref().ok_or(ModelError::NoAdapters)?;
        let n = batch.validate(self.vocab_size)?;
        let inv_n = 1.0 / n as f64;
        let pm = self.prompt_mean();
        let mut g_scale: Vec<Vec<f64>> = a.scales.iter().map(|s| vec![0.0; s.len()]).collect();
        let mut g_shift = g_scale.clone();
        let mut g_input = vec![0.0; self.vocab_size];
        let (mut acts, mut pre) = (Vec::new(), Vec::new());
        let mut total = 0.0;
        for (x, y) in batch.input_ids.iter().zip(&batch.targets) {
            for (&id, &t) in x.iter().zip(y) {
                self.forward_token(id, pm.as_deref(), &mut acts, &mut pre);
                let logits = acts.last().expect("output layer");
                let probs = softmax(logits);
                total += cross_entropy(logits, t);
                let mut dz: Vec<f64> = probs.iter().enumerate().map(|(j, p)| (p - f64::from(j == t)) * inv_n).collect();
                for l in (0..self.layers.len()).rev() {
                    let layer = &self.layers[l];
                    for r in 0..layer.rows {
                        g_scale[l][r] += dz[r] * pre[l][r];
                        g_shift[l][r] += dz[r];
                    }
                    let scaled: Vec<f64> = dz.iter().zip(&a.scales[l]).map(|(d, s)| d * s).collect();
                    let mut da = vec![0.0; layer.cols];
                    layer.matvec_t_acc(&scaled, &mut da);
                    if l == 0 {
                        for (g, d) in g_input.iter_mut().zip(&da) {
                            *g += d;
                        }
                    } else {
                        dz = da.iter().zip(&acts[l]).map(|(d, h)| d * (1.0 - h * h)).collect();
                    }
                }
            }
        }
        let mut grad = Vec::with_capacity(self.adapter_param_count());
        for (s, d) in g_scale.iter().zip(&g_shift) {
            grad.extend_from_slice(s);
            grad.extend_from_slice(d);
        }
        let k = a.prompt.len() as f64;
        for _ in &a.prompt {
            grad.extend(g_input.iter().map(|g| g / k));
        }
        Ok((total * inv_n, grad))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[target]`, computed stably.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

/// Gives every linear layer a unit scale and zero shift, plus `prompt_len`
/// zero prompt vectors. The model computes exactly the same outputs
/// afterwards.
pub fn add_adapter_parameters(model: ToyModel, prompt_len: usize) -> Result<ToyModel, ModelError> {
    if model.adapters.is_some() {
        return Err(ModelError::AlreadyAdapted);
    }
    let adapters = Adapters {
        scales: model.layers.iter().map(|l| vec![1.0; l.rows]).collect(),
        shifts: model.layers.iter().map(|l| vec![0.0; l.rows]).collect(),
        prompt: vec![vec![0.0; model.vocab_size]; prompt_len],
    };
    Ok(ToyModel { adapters: Some(adapters), ..model })
}

pub fn mark_only_adapter_trainable(model: ToyModel) -> Result<ToyModel, ModelError> {
    if model.adapters.is_none() {
        return Err(ModelError::NoAdapters);
    }
    Ok(ToyModel { adapter_only: true, ..model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adapter_counts() {
        let m = ToyModel::new(5, &[8], 1);
        assert_eq!(m.frozen_param_count(), 8 * 5 + 8 + 5 * 8 + 5);
        let m = mark_only_adapter_trainable(add_adapter_parameters(m, 0).unwrap()).unwrap();
        assert_eq!(m.adapter_param_count(), 26);
        assert_eq!(m.trainable_param_count(), 26);
        assert_eq!(m.adapter_values().len(), 26);
        assert_eq!(m.total_param_count(), m.frozen_param_count() + 26);
        assert_eq!(add_adapter_parameters(m, 0).unwrap_err(), ModelError::AlreadyAdapted);
        assert_eq!(mark_only_adapter_trainable(ToyModel::new(5, &[8], 1)).unwrap_err(), ModelError::NoAdapters);
    }

    #[test]
    fn injection_is_identity() {
        let m = ToyModel::new(7, &[16, 9], 3);
        let ids = [0, 3, 6, 2, 2, 5];
        let before = m.forward(&ids).unwrap();
        let after = add_adapter_parameters(m, 2).unwrap().forward(&ids).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn uniform_logits_give_ln_vocab() {
        let mut m = add_adapter_parameters(ToyModel::new(5, &[8], 0), 0).unwrap();
        let a = m.adapters.as_mut().unwrap();
        a.scales.last_mut().unwrap().iter_mut().for_each(|s| *s = 0.0);
        let bias = m.layers.last().unwrap().bias.clone();
        a.shifts.last_mut().unwrap().iter_mut().zip(&bias).for_each(|(d, b)| *d = -b);
        let out = m.compute_loss(&Batch { input_ids: vec![vec![0, 1, 4]], targets: vec![vec![2, 3, 0]] }).unwrap();
        assert!((out.loss - 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn layout_round_trip() {
        let l = AdapterLayout { layer_widths: vec![8, 5], prompt_len: 2, prompt_dim: 5 };
        assert_eq!(l.to_string(), "scale_shift:8,5;prompt:2x5;values:36");
        assert_eq!(l.to_string().parse::<AdapterLayout>().unwrap(), l);
        assert!("scale_shift:8,5;prompt:2x5;values:3".parse::<AdapterLayout>().is_err());
    }

    #[test]
    fn batch_shape_errors() {
        let m = ToyModel::new(5, &[4], 0);
        assert!(m.compute_loss(&Batch { input_ids: vec![vec![0, 1]], targets: vec![vec![0]] }).is_err());
        assert!(m.compute_loss(&Batch { input_ids: vec![vec![9]], targets: vec![vec![0]] }).is_err());
        assert!(m.compute_loss(&Batch { input_ids: vec![], targets: vec![] }).is_err());
    }
}
