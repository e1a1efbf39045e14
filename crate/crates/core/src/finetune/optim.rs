use serde::{Deserialize, Serialize};

use super::model::ModelError;
use crate::util::sha256_hex;

pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub max_iterations: usize,
    pub eval_interval: usize,
    pub warmup_iterations: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0006,
            beta1: 0.9,
            beta2: 0.9999,
            weight_decay: 0.01,
            max_iterations: 200,
            eval_interval: 50,
            warmup_iterations: 0,
            seed: 0,
            batch_size: 8,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid training config: {0}")]
pub struct TrainConfigError(pub String);

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainConfigError> {
        let err = |m: &str| Err(TrainConfigError(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return err("learning_rate must be positive");
        }
        if !(0.0 < self.beta1 && self.beta1 < 1.0 && 0.0 < self.beta2 && self.beta2 < 1.0) {
            return err("betas must lie in (0, 1)");
        }
        if self.beta2 <= self.beta1 {
            return err("beta2 must exceed beta1");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return err("weight_decay must be non-negative");
        }
        if self.max_iterations == 0 || self.eval_interval == 0 || self.batch_size == 0 {
            return err("max_iterations, eval_interval and batch_size must be positive");
        }
        if self.eval_interval > self.max_iterations {
            return err("eval_interval must not exceed max_iterations");
        }
        if self.warmup_iterations >= self.max_iterations {
            return err("warmup_iterations must be below max_iterations");
        }
        Ok(())
    }

    /// Hash of the canonical JSON form.
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }
}

/// One AdamW update with decoupled weight decay.
pub fn adamw_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<(), ModelError> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != state.v.len() {
        return Err(ModelError::Shape(format!(
            "params {}, grads {}, moments {}/{}",
            params.len(),
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * (m_hat / (v_hat.sqrt() + ADAM_EPS) + cfg.weight_decay * params[i]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(wd: f64) -> TrainConfig {
        TrainConfig { weight_decay: wd, ..Default::default() }
    }

    #[test]
    fn zero_grad_no_decay_is_noop() {
        let mut p = vec![1.5, -2.0];
        let mut s = AdamState::new(2);
        adamw_step(&mut p, &[0.0, 0.0], &mut s, &cfg(0.0), 0.1).unwrap();
        assert_eq!(p, vec![1.5, -2.0]);
    }

    #[test]
    fn first_step_hand_value() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        adamw_step(&mut p, &[1.0], &mut s, &cfg(0.0), 0.1).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn decoupled_decay() {
        let mut p = vec![2.0];
        let mut s = AdamState::new(1);
        adamw_step(&mut p, &[0.0], &mut s, &cfg(0.01), 0.1).unwrap();
        assert_eq!(p[0], 2.0 - 0.1 * 0.01 * 2.0);
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { beta1: 0.99, beta2: 0.9, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { eval_interval: 300, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { max_iterations: 0, ..Default::default() }.validate().is_err());
        assert!(adamw_step(&mut [0.0], &[0.0, 1.0], &mut AdamState::new(1), &cfg(0.0), 0.1).is_err());
    }
}
