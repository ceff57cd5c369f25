use serde::{Deserialize, Serialize};

use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip.
    pub clip: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        Adam {
            config,
            m: vec![0.0; params.len()],
            v: vec![0.0; params.len()],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Clips, then applies one bias-corrected update to the trainable
    /// tensors. Returns the pre-clip gradient norm.
    pub fn apply(&mut self, params: &mut ParamStore, grads: &[f64]) -> Result<f64> {
        if grads.len() != params.len() {
            return Err(Error::Contract(format!(
                "gradient length {} does not match {} parameters",
                grads.len(),
                params.len()
            )));
        }
        let mut sq = 0.0;
        for info in params.infos.iter().filter(|i| i.trainable) {
            for i in info.range() {
                let g = grads[i];
                if !g.is_finite() {
                    let bad = grads.iter().filter(|g| !g.is_finite()).count();
                    return Err(Error::Training(format!(
                        "non-finite gradient {g} at {}[{}] on update {}; {bad} of {} entries non-finite",
                        info.name,
                        i - info.offset,
                        self.step + 1,
                        grads.len()
                    )));
                }
                sq += g * g;
            }
        }
        let norm = sq.sqrt();
        let scale = if norm > self.config.clip {
            self.config.clip / norm
        } else {
            1.0
        };
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for info in params.infos.iter().filter(|i| i.trainable) {
            for i in info.range() {
                let g = grads[i] * scale;
                self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
                self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
                let mhat = self.m[i] / bc1;
                let vhat = self.v[i] / bc2;
                params.data[i] -= c.lr * mhat / (vhat.sqrt() + c.eps);
            }
        }
        Ok(norm)
    }
}
