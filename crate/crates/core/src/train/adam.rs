//! Adam with bias correction, keyed per tensor.

use crate::error::{Error, Result};
use crate::model::params::ParamStore;

#[derive(Debug, Clone)]
pub struct AdamState {
    m: ParamStore,
    v: ParamStore,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub fn new(params: &ParamStore, learning_rate: f64) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

pub fn adam_step(params: &mut ParamStore, grads: &ParamStore, state: &mut AdamState) -> Result<()> {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (key, p) in params.iter_mut() {
        let g = grads.get(key)?;
        if g.rows != p.rows || g.cols != p.cols {
            return Err(Error::shape(
                "adam_step",
                format!(
                    "gradient for {key} is {}x{}, parameter is {}x{}",
                    g.rows, g.cols, p.rows, p.cols
                ),
            ));
        }
        let m = state.m.get_mut(key)?;
        let v = state.v.get_mut(key)?;
        for i in 0..p.data.len() {
            let gi = g.data[i];
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
            let m_hat = m.data[i] / bc1;
            let v_hat = v.data[i] / bc2;
            p.data[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
