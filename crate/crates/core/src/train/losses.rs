//! Training losses with per-position masking and analytic gradients.
//!
//! The sMAPE gradient deliberately freezes the denominator: each term's
//! (|y| + |ŷ|) is treated as a constant, so the gradient is that of the
//! surrogate Σ mask |y − ŷ| / const rather than of the full expression.
//! Ties use sign(0) = 0.

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::train::sampler::TrainBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LossKind {
    Smape,
    Mape,
    Mase,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Smape, LossKind::Mape, LossKind::Mase];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Smape => "smape",
            LossKind::Mape => "mape",
            LossKind::Mase => "mase",
        }
    }

    pub fn parse(s: &str) -> Result<LossKind> {
        match s.to_ascii_lowercase().as_str() {
            "smape" => Ok(LossKind::Smape),
            "mape" => Ok(LossKind::Mape),
            "mase" => Ok(LossKind::Mase),
            other => Err(Error::Config(format!(
                "unknown loss {other:?}; expected one of smape, mape, mase"
            ))),
        }
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_lengths(op: &'static str, yhat: &[f64], y: &[f64], mask: &[f64]) -> Result<()> {
    if yhat.len() != y.len() || y.len() != mask.len() {
        return Err(Error::shape(
            op,
            format!(
                "lengths differ: forecast {}, target {}, mask {}",
                yhat.len(),
                y.len(),
                mask.len()
            ),
        ));
    }
    Ok(())
}

/// Masked sMAPE with the stopped-gradient denominator. Terms whose
/// denominator |y| + |ŷ| is zero contribute 0 to both loss and gradient.
pub fn smape_loss(yhat: &[f64], y: &[f64], mask: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_lengths("smape_loss", yhat, y, mask)?;
    let mask_sum: f64 = mask.iter().sum();
    if mask_sum == 0.0 {
        return Err(Error::invalid("smape_loss", "every target position is masked"));
    }
    let scale = 200.0 / mask_sum;
    let mut loss = 0.0;
    let mut grad = vec![0.0; y.len()];
    for i in 0..y.len() {
        if mask[i] == 0.0 {
            continue;
        }
        let denom = y[i].abs() + yhat[i].abs();
        if denom == 0.0 {
            continue;
        }
        let diff = y[i] - yhat[i];
        loss += scale * diff.abs() / denom;
        grad[i] = -scale * sign0(diff) / denom;
    }
    Ok((loss, grad))
}

/// Masked MAPE. Positions with y = 0 are excluded from both the sum and the
/// normalizer; if nothing contributes, that is a hard error.
pub fn mape_loss(yhat: &[f64], y: &[f64], mask: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_lengths("mape_loss", yhat, y, mask)?;
    let count = (0..y.len())
        .filter(|&i| mask[i] != 0.0 && y[i] != 0.0)
        .count();
    if count == 0 {
        return Err(Error::invalid(
            "mape_loss",
            "no unmasked position with a nonzero target",
        ));
    }
    let scale = 100.0 / count as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; y.len()];
    for i in 0..y.len() {
        if mask[i] == 0.0 || y[i] == 0.0 {
            continue;
        }
        let diff = y[i] - yhat[i];
        loss += scale * diff.abs() / y[i].abs();
        grad[i] = -scale * sign0(diff) / y[i].abs();
    }
    Ok((loss, grad))
}

/// Mean |error| of the naive-m predictor over a history window; the
/// training-time MASE denominator.
pub fn naive_scale(history: &[f64], m: usize) -> Option<f64> {
    if m == 0 || history.len() <= m {
        return None;
    }
    let n = history.len() - m;
    let sum: f64 = (m..history.len())
        .map(|j| (history[j] - history[j - m]).abs())
        .sum();
    Some(sum / n as f64)
}

/// Masked training-time MASE: masked mean absolute error divided by the
/// naive-m scale of the history window. A near-zero scale or a history
/// shorter than m+1 makes the sample contribute 0; the second bool reports
/// whether the history was too short.
pub fn mase_loss(
    yhat: &[f64],
    y: &[f64],
    mask: &[f64],
    history: &[f64],
    m: usize,
) -> Result<(f64, Vec<f64>, bool)> {
    check_lengths("mase_loss", yhat, y, mask)?;
    let mask_sum: f64 = mask.iter().sum();
    if mask_sum == 0.0 {
        return Err(Error::invalid("mase_loss", "every target position is masked"));
    }
    let grad_zero = vec![0.0; y.len()];
    let Some(scale) = naive_scale(history, m) else {
        return Ok((0.0, grad_zero, true));
    };
    if scale <= 1e-12 {
        return Ok((0.0, grad_zero, false));
    }
    let norm = 1.0 / (mask_sum * scale);
    let mut loss = 0.0;
    let mut grad = grad_zero;
    for i in 0..y.len() {
        if mask[i] == 0.0 {
            continue;
        }
        let diff = y[i] - yhat[i];
        loss += norm * diff.abs();
        grad[i] = -norm * sign0(diff);
    }
    Ok((loss, grad, false))
}

/// Batch totals for one loss applied row-by-row: the mean sample loss and
/// the gradient with respect to each forecast entry.
pub struct BatchLoss {
    pub loss: f64,
    pub grad: Matrix,
    /// Samples skipped because their MASE history was shorter than m+1.
    pub short_history_warnings: usize,
}

pub fn batch_loss(kind: LossKind, forecast: &Matrix, batch: &TrainBatch) -> Result<BatchLoss> {
    if forecast.rows != batch.targets.rows || forecast.cols != batch.targets.cols {
        return Err(Error::shape(
            "batch_loss",
            format!(
                "forecast is {}x{}, targets are {}x{}",
                forecast.rows, forecast.cols, batch.targets.rows, batch.targets.cols
            ),
        ));
    }
    let n = forecast.rows;
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    let mut grad = Matrix::zeros(forecast.rows, forecast.cols);
    let mut warnings = 0;
    for i in 0..n {
        let yhat = forecast.row(i);
        let y = batch.targets.row(i);
        let mask = batch.target_masks.row(i);
        let (loss, g) = match kind {
            LossKind::Smape => smape_loss(yhat, y, mask)?,
            LossKind::Mape => mape_loss(yhat, y, mask)?,
            LossKind::Mase => {
                let (loss, g, short) =
                    mase_loss(yhat, y, mask, &batch.histories[i].data, batch.periodicity[i])?;
                if short {
                    warnings += 1;
                }
                (loss, g)
            }
        };
        total += inv_n * loss;
        for (dst, src) in grad.row_mut(i).iter_mut().zip(&g) {
            *dst = inv_n * src;
        }
    }
    Ok(BatchLoss {
        loss: total,
        grad,
        short_history_warnings: warnings,
    })
}
