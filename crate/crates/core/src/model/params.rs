//! Trainable tensors addressed by (stack, block, layer-name) paths.
//!
//! A stack with weight sharing stores exactly one physical tensor set under
//! block index 0; every block of the stack resolves to it.

use crate::error::{Error, Result};
use crate::model::config::{BasisKind, ModelConfig};
use crate::rng::Rng;
use crate::tensor::Matrix;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    tensors: BTreeMap<String, Matrix>,
}

/// Stable tensor key. Zero-padded indices keep BTreeMap iteration in
/// (stack, block, name) order.
pub fn tensor_key(stack: usize, block: usize, name: &str) -> String {
    format!("s{stack:03}.b{block:03}.{name}")
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: String, tensor: Matrix) {
        self.tensors.insert(key, tensor);
    }

    pub fn get(&self, key: &str) -> Result<&Matrix> {
        self.tensors
            .get(key)
            .ok_or_else(|| Error::invalid("ParamStore", format!("missing tensor {key:?}")))
    }

    pub fn get_mut(&mut self, key: &str) -> Result<&mut Matrix> {
        self.tensors
            .get_mut(key)
            .ok_or_else(|| Error::invalid("ParamStore", format!("missing tensor {key:?}")))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.tensors.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Matrix)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Matrix)> {
        self.tensors.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_params(&self) -> usize {
        self.tensors.values().map(|t| t.data.len()).sum()
    }

    /// Same keys and shapes, all entries zero. Used for gradient stores and
    /// optimizer moments.
    pub fn zeros_like(&self) -> ParamStore {
        let tensors = self
            .tensors
            .iter()
            .map(|(k, v)| (k.clone(), Matrix::zeros(v.rows, v.cols)))
            .collect();
        ParamStore { tensors }
    }

    /// All entries concatenated in key order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for t in self.tensors.values() {
            out.extend_from_slice(&t.data);
        }
        out
    }

    /// Overwrites entries from a flat slice laid out as by `flatten`.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(
                "ParamStore::assign_flat",
                format!("expected {} values, got {}", self.num_params(), flat.len()),
            ));
        }
        let mut offset = 0;
        for t in self.tensors.values_mut() {
            let n = t.data.len();
            t.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(|t| t.all_finite())
    }
}

fn uniform_matrix(rng: &mut Rng, rows: usize, cols: usize, fan_in: usize) -> Matrix {
    let scale = 1.0 / (fan_in.max(1) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data.iter_mut() {
        *v = rng.uniform(-scale, scale);
    }
    m
}

/// Fresh parameters for `cfg`: FC weights and learned bases drawn uniformly
/// with scale 1/sqrt(fan_in), biases zero. Deterministic per seed.
pub fn init_params(cfg: &ModelConfig, rng: &mut Rng) -> ParamStore {
    let mut store = ParamStore::new();
    for (si, stack) in cfg.stacks.iter().enumerate() {
        let physical_blocks = if stack.share_weights { 1 } else { stack.blocks };
        let b = &stack.block;
        for bi in 0..physical_blocks {
            for layer in 0..b.fc_layers {
                let fan_in = if layer == 0 {
                    b.basis.backcast_len
                } else {
                    b.width
                };
                store.insert(
                    tensor_key(si, bi, &format!("fc{layer}.w")),
                    uniform_matrix(rng, b.width, fan_in, fan_in),
                );
                store.insert(
                    tensor_key(si, bi, &format!("fc{layer}.b")),
                    Matrix::zeros(1, b.width),
                );
            }
            store.insert(
                tensor_key(si, bi, "theta_f.w"),
                uniform_matrix(rng, b.theta_f_dim, b.width, b.width),
            );
            store.insert(
                tensor_key(si, bi, "theta_b.w"),
                uniform_matrix(rng, b.theta_b_dim, b.width, b.width),
            );
            if matches!(b.basis.kind, BasisKind::Generic) {
                store.insert(
                    tensor_key(si, bi, "basis.vf"),
                    uniform_matrix(rng, b.basis.forecast_len, b.theta_f_dim, b.theta_f_dim),
                );
                store.insert(
                    tensor_key(si, bi, "basis.bf"),
                    Matrix::zeros(1, b.basis.forecast_len),
                );
                store.insert(
                    tensor_key(si, bi, "basis.vb"),
                    uniform_matrix(rng, b.basis.backcast_len, b.theta_b_dim, b.theta_b_dim),
                );
                store.insert(
                    tensor_key(si, bi, "basis.bb"),
                    Matrix::zeros(1, b.basis.backcast_len),
                );
            }
        }
    }
    store
}
