use crate::error::{Error, Result};

use super::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

struct Slot {
    name: String,
    m: Vec<f64>,
    v: Vec<f64>,
    shape: (usize, usize),
}

/// Bias-corrected Adam over a fixed list of named parameter blocks.
pub struct Adam {
    config: AdamConfig,
    t: u64,
    slots: Vec<Slot>,
}

impl Adam {
    pub fn new(config: AdamConfig, blocks: &[(&str, (usize, usize))]) -> Self {
        let slots = blocks
            .iter()
            .map(|(name, (r, c))| Slot {
                name: (*name).to_string(),
                m: vec![0.0; r * c],
                v: vec![0.0; r * c],
                shape: (*r, *c),
            })
            .collect();
        Self {
            config,
            t: 0,
            slots,
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update of every block. Gradients are validated before any
    /// parameter is touched.
    pub fn step(&mut self, params: &mut [&mut DenseMatrix], grads: &[&DenseMatrix]) -> Result<()> {
        if params.len() != self.slots.len() || grads.len() != self.slots.len() {
            return Err(Error::shape(
                "adam_step",
                format!(
                    "{} slots, {} params, {} grads",
                    self.slots.len(),
                    params.len(),
                    grads.len()
                ),
            ));
        }
        for ((slot, p), g) in self.slots.iter().zip(params.iter()).zip(grads) {
            if p.shape() != slot.shape || g.shape() != slot.shape {
                return Err(Error::shape(
                    "adam_step",
                    format!(
                        "block `{}` expects {:?}, got param {:?} grad {:?}",
                        slot.name,
                        slot.shape,
                        p.shape(),
                        g.shape()
                    ),
                ));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(slot.name.clone()));
            }
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for ((slot, p), g) in self.slots.iter_mut().zip(params.iter_mut()).zip(grads) {
            let pv = p.as_mut_slice();
            for (k, &gk) in g.as_slice().iter().enumerate() {
                slot.m[k] = beta1 * slot.m[k] + (1.0 - beta1) * gk;
                slot.v[k] = beta2 * slot.v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = slot.m[k] / bc1;
                let v_hat = slot.v[k] / bc2;
                pv[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
