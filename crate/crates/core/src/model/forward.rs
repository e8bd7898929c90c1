//! Block and model forward/backward passes.
//!
//! The engine is batched: activations are matrices with one sample per row.
//! The single-sample entry points wrap a one-row batch. Summation order is
//! fixed (stacks in order, blocks in order), so repeated calls on the same
//! inputs are bitwise identical.

use crate::error::{Error, Result};
use crate::model::basis::{make_fourier_basis, make_trend_basis};
use crate::model::config::{BasisKind, BlockConfig, ModelConfig, StackConfig, Topology};
use crate::model::params::{tensor_key, ParamStore};
use crate::tensor::{Matrix, Vector};

/// Fixed basis matrices for one stack; `None` for the learned basis.
#[derive(Debug, Clone)]
pub struct StackBases {
    pub back: Option<Matrix>,
    pub fwd: Option<Matrix>,
}

pub fn stack_bases(block: &BlockConfig) -> Result<StackBases> {
    let b = &block.basis;
    match b.kind {
        BasisKind::Generic => Ok(StackBases {
            back: None,
            fwd: None,
        }),
        BasisKind::Trend { degree } => {
            let (back, fwd) = make_trend_basis(b.backcast_len, b.forecast_len, degree);
            Ok(StackBases {
                back: Some(back),
                fwd: Some(fwd),
            })
        }
        BasisKind::Seasonality => {
            let (back, fwd) = make_fourier_basis(b.backcast_len, b.forecast_len)?;
            Ok(StackBases {
                back: Some(back),
                fwd: Some(fwd),
            })
        }
    }
}

fn eff_block(stack: &StackConfig, block: usize) -> usize {
    if stack.share_weights {
        0
    } else {
        block
    }
}

fn add_row_broadcast(m: &mut Matrix, row: &Matrix) {
    debug_assert_eq!(row.rows, 1);
    debug_assert_eq!(row.cols, m.cols);
    for r in 0..m.rows {
        for (v, b) in m.row_mut(r).iter_mut().zip(&row.data) {
            *v += b;
        }
    }
}

fn relu_in_place(m: &mut Matrix) {
    for v in m.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn sub_matrices(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect(),
    }
}

/// Everything the backward pass needs from one block's forward evaluation.
#[derive(Debug, Clone)]
pub struct BlockCache {
    pub stack: usize,
    pub block: usize,
    /// x_l, one row per sample.
    pub input: Matrix,
    /// Post-activation output of each FC layer; the relu mask is recovered
    /// from the sign of these entries.
    post_acts: Vec<Matrix>,
    theta_f: Matrix,
    theta_b: Matrix,
    /// x̂_l.
    pub backcast: Matrix,
    /// ŷ_l.
    pub forecast: Matrix,
}

/// Per-block signals, per-stack partial forecasts and the model forecast.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub blocks: Vec<BlockCache>,
    pub stack_partials: Vec<Matrix>,
    pub forecast: Matrix,
    pub topology: Topology,
}

pub fn block_forward_batch(
    x: &Matrix,
    store: &ParamStore,
    stack_index: usize,
    physical_block: usize,
    cfg: &BlockConfig,
    bases: &StackBases,
) -> Result<BlockCache> {
    if x.cols != cfg.basis.backcast_len {
        return Err(Error::shape(
            "block_forward",
            format!(
                "input has {} columns, block expects backcast length {}",
                x.cols, cfg.basis.backcast_len
            ),
        ));
    }
    let key = |name: &str| tensor_key(stack_index, physical_block, name);

    let mut post_acts: Vec<Matrix> = Vec::with_capacity(cfg.fc_layers);
    for layer in 0..cfg.fc_layers {
        let input = if layer == 0 {
            x
        } else {
            &post_acts[layer - 1]
        };
        let w = store.get(&key(&format!("fc{layer}.w")))?;
        let b = store.get(&key(&format!("fc{layer}.b")))?;
        if w.cols != input.cols {
            return Err(Error::shape(
                "block_forward",
                format!(
                    "fc{layer} weight is {}x{}, input has {} columns",
                    w.rows, w.cols, input.cols
                ),
            ));
        }
        let mut pre = input.matmul_nt(w);
        add_row_broadcast(&mut pre, b);
        relu_in_place(&mut pre);
        post_acts.push(pre);
    }

    let h = post_acts.last().expect("fc_layers >= 1");
    let theta_f = h.matmul_nt(store.get(&key("theta_f.w"))?);
    let theta_b = h.matmul_nt(store.get(&key("theta_b.w"))?);

    let (backcast, forecast) = match cfg.basis.kind {
        BasisKind::Generic => {
            let vf = store.get(&key("basis.vf"))?;
            let bf = store.get(&key("basis.bf"))?;
            let vb = store.get(&key("basis.vb"))?;
            let bb = store.get(&key("basis.bb"))?;
            let mut fc = theta_f.matmul_nt(vf);
            add_row_broadcast(&mut fc, bf);
            let mut bc = theta_b.matmul_nt(vb);
            add_row_broadcast(&mut bc, bb);
            (bc, fc)
        }
        _ => {
            let fwd = bases.fwd.as_ref().expect("fixed basis present");
            let back = bases.back.as_ref().expect("fixed basis present");
            (theta_b.matmul_nt(back), theta_f.matmul_nt(fwd))
        }
    };

    Ok(BlockCache {
        stack: stack_index,
        block: physical_block,
        input: x.clone(),
        post_acts,
        theta_f,
        theta_b,
        backcast,
        forecast,
    })
}

/// Accumulates parameter gradients for one block and returns the gradient
/// with respect to the block input.
#[allow(clippy::too_many_arguments)]
fn block_backward_batch(
    cache: &BlockCache,
    store: &ParamStore,
    grads: &mut ParamStore,
    cfg: &BlockConfig,
    bases: &StackBases,
    grad_forecast: &Matrix,
    grad_backcast: &Matrix,
) -> Result<Matrix> {
    let key = |name: &str| tensor_key(cache.stack, cache.block, name);

    let (grad_theta_f, grad_theta_b) = match cfg.basis.kind {
        BasisKind::Generic => {
            let vf = store.get(&key("basis.vf"))?;
            let vb = store.get(&key("basis.vb"))?;
            grads
                .get_mut(&key("basis.vf"))?
                .add_assign(&grad_forecast.matmul_tn(&cache.theta_f));
            grads
                .get_mut(&key("basis.bf"))?
                .add_assign(&row_of(grad_forecast.col_sum()));
            grads
                .get_mut(&key("basis.vb"))?
                .add_assign(&grad_backcast.matmul_tn(&cache.theta_b));
            grads
                .get_mut(&key("basis.bb"))?
                .add_assign(&row_of(grad_backcast.col_sum()));
            (grad_forecast.matmul(vf), grad_backcast.matmul(vb))
        }
        _ => {
            let fwd = bases.fwd.as_ref().expect("fixed basis present");
            let back = bases.back.as_ref().expect("fixed basis present");
            (grad_forecast.matmul(fwd), grad_backcast.matmul(back))
        }
    };

    let h_last = cache.post_acts.last().expect("fc_layers >= 1");
    grads
        .get_mut(&key("theta_f.w"))?
        .add_assign(&grad_theta_f.matmul_tn(h_last));
    grads
        .get_mut(&key("theta_b.w"))?
        .add_assign(&grad_theta_b.matmul_tn(h_last));

    let wf = store.get(&key("theta_f.w"))?;
    let wb = store.get(&key("theta_b.w"))?;
    let mut grad_h = grad_theta_f.matmul(wf);
    grad_h.add_assign(&grad_theta_b.matmul(wb));

    for layer in (0..cfg.fc_layers).rev() {
        let post = &cache.post_acts[layer];
        // relu'(pre) = 1 iff post > 0
        let mut grad_pre = grad_h;
        for (g, &p) in grad_pre.data.iter_mut().zip(&post.data) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
        let input = if layer == 0 {
            &cache.input
        } else {
            &cache.post_acts[layer - 1]
        };
        grads
            .get_mut(&key(&format!("fc{layer}.w")))?
            .add_assign(&grad_pre.matmul_tn(input));
        grads
            .get_mut(&key(&format!("fc{layer}.b")))?
            .add_assign(&row_of(grad_pre.col_sum()));
        let w = store.get(&key(&format!("fc{layer}.w")))?;
        grad_h = grad_pre.matmul(w);
    }

    Ok(grad_h)
}

fn row_of(v: Vector) -> Matrix {
    Matrix {
        rows: 1,
        cols: v.len(),
        data: v.data,
    }
}

/// Forward pass for any topology, batched.
pub fn forward_batch(x: &Matrix, cfg: &ModelConfig, params: &ParamStore) -> Result<ForwardTrace> {
    if x.cols != cfg.input_len() {
        return Err(Error::shape(
            "forward",
            format!(
                "input has {} columns, model expects {}",
                x.cols,
                cfg.input_len()
            ),
        ));
    }
    let total_blocks = cfg.total_blocks();
    let batch = x.rows;
    let horizon = cfg.horizon;

    let bases: Vec<StackBases> = cfg
        .stacks
        .iter()
        .map(|s| stack_bases(&s.block))
        .collect::<Result<_>>()?;

    let mut blocks = Vec::with_capacity(total_blocks);
    let mut stack_partials: Vec<Matrix> = cfg
        .stacks
        .iter()
        .map(|_| Matrix::zeros(batch, horizon))
        .collect();
    let mut current = x.clone();
    let mut global = 0usize;
    for (si, stack) in cfg.stacks.iter().enumerate() {
        for bi in 0..stack.blocks {
            let input = match cfg.topology {
                Topology::Parallel => x,
                _ => &current,
            };
            let cache = block_forward_batch(
                input,
                params,
                si,
                eff_block(stack, bi),
                &stack.block,
                &bases[si],
            )?;

            let is_last = global == total_blocks - 1;
            if cfg.topology.sums_partials() || is_last {
                stack_partials[si].add_assign(&cache.forecast);
            }

            current = match cfg.topology {
                Topology::Dress | Topology::LastForward => sub_matrices(&cache.input, &cache.backcast),
                Topology::NoResidual | Topology::NoResidualLastForward => cache.backcast.clone(),
                Topology::Parallel => current,
                Topology::ResidualInput => sub_matrices(x, &cache.backcast),
            };

            blocks.push(cache);
            global += 1;
        }
    }

    // The model forecast is the sum of the per-stack partials, in stack
    // order, so the partial-sum identity holds bitwise.
    let mut forecast = Matrix::zeros(batch, horizon);
    for p in &stack_partials {
        forecast.add_assign(p);
    }

    Ok(ForwardTrace {
        blocks,
        stack_partials,
        forecast,
        topology: cfg.topology,
    })
}

/// Reverse pass: gradients of a scalar loss with respect to every physical
/// tensor, given the loss gradient at the model forecast. Shared stacks
/// accumulate contributions from all aliasing blocks.
pub fn model_backward(
    trace: &ForwardTrace,
    grad_forecast: &Matrix,
    cfg: &ModelConfig,
    params: &ParamStore,
) -> Result<ParamStore> {
    if trace.topology != cfg.topology || trace.blocks.len() != cfg.total_blocks() {
        return Err(Error::invalid(
            "model_backward",
            "trace does not match the model configuration",
        ));
    }
    if grad_forecast.rows != trace.forecast.rows || grad_forecast.cols != trace.forecast.cols {
        return Err(Error::shape(
            "model_backward",
            format!(
                "grad is {}x{}, forecast is {}x{}",
                grad_forecast.rows, grad_forecast.cols, trace.forecast.rows, trace.forecast.cols
            ),
        ));
    }

    let bases: Vec<StackBases> = cfg
        .stacks
        .iter()
        .map(|s| stack_bases(&s.block))
        .collect::<Result<_>>()?;
    let stack_of: Vec<usize> = cfg
        .stacks
        .iter()
        .enumerate()
        .flat_map(|(si, s)| std::iter::repeat(si).take(s.blocks))
        .collect();

    let mut grads = params.zeros_like();
    let total = trace.blocks.len();
    let batch = grad_forecast.rows;
    let backcast_len = cfg.input_len();
    let zero_forecast = Matrix::zeros(batch, cfg.horizon);

    // carry = dL/dx_{l+1}, the gradient flowing into the residual stream
    // between block l and block l+1.
    let mut carry: Option<Matrix> = None;
    for l in (0..total).rev() {
        let cache = &trace.blocks[l];
        let si = stack_of[l];
        let included = cfg.topology.sums_partials() || l == total - 1;
        let gy = if included { grad_forecast } else { &zero_forecast };

        let gxhat = match cfg.topology {
            Topology::Parallel => Matrix::zeros(batch, backcast_len),
            Topology::Dress | Topology::LastForward | Topology::ResidualInput => match &carry {
                Some(c) => c.scale_neg(),
                None => Matrix::zeros(batch, backcast_len),
            },
            Topology::NoResidual | Topology::NoResidualLastForward => match &carry {
                Some(c) => c.clone(),
                None => Matrix::zeros(batch, backcast_len),
            },
        };

        let gx = block_backward_batch(
            cache,
            params,
            &mut grads,
            &cfg.stacks[si].block,
            &bases[si],
            gy,
            &gxhat,
        )?;

        carry = match cfg.topology {
            Topology::Dress | Topology::LastForward => Some(match carry {
                Some(mut c) => {
                    c.add_assign(&gx);
                    c
                }
                None => gx,
            }),
            Topology::NoResidual
            | Topology::NoResidualLastForward
            | Topology::ResidualInput => Some(gx),
            Topology::Parallel => None,
        };
    }

    Ok(grads)
}

impl Matrix {
    fn scale_neg(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }
}

fn one_row(x: &Vector) -> Matrix {
    Matrix {
        rows: 1,
        cols: x.len(),
        data: x.data.clone(),
    }
}

/// Single-sample block evaluation; returns (x̂, ŷ, cache).
pub fn block_forward(
    x: &Vector,
    store: &ParamStore,
    stack_index: usize,
    block_index: usize,
    stack: &StackConfig,
) -> Result<(Vector, Vector, BlockCache)> {
    let bases = stack_bases(&stack.block)?;
    let cache = block_forward_batch(
        &one_row(x),
        store,
        stack_index,
        eff_block(stack, block_index),
        &stack.block,
        &bases,
    )?;
    Ok((
        cache.backcast.row_vector(0),
        cache.forecast.row_vector(0),
        cache,
    ))
}

/// Single-sample forward under the doubly residual topology.
pub fn model_forward(x: &Vector, cfg: &ModelConfig, params: &ParamStore) -> Result<ForwardTrace> {
    if cfg.topology != Topology::Dress {
        return Err(Error::invalid(
            "model_forward",
            format!(
                "expected DRESS topology, got {}; use topology_forward",
                cfg.topology.name()
            ),
        ));
    }
    forward_batch(&one_row(x), cfg, params)
}

/// Single-sample forward for the non-DRESS topology variants.
pub fn topology_forward(
    x: &Vector,
    cfg: &ModelConfig,
    params: &ParamStore,
) -> Result<ForwardTrace> {
    if cfg.topology == Topology::Dress {
        return Err(Error::invalid(
            "topology_forward",
            "DRESS is handled by model_forward",
        ));
    }
    forward_batch(&one_row(x), cfg, params)
}
