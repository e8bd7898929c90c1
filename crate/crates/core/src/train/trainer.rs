//! The training loop: sample → forward → loss → backward → Adam, with
//! periodic validation on the held-out last horizon and early stopping.

use crate::data::{split_train_validation, SeriesSet, SplitView};
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::forward::forward_batch;
use crate::model::params::{init_params, ParamStore};
use crate::rng::Rng;
use crate::tensor::Matrix;
use crate::train::adam::{adam_step, AdamState};
use crate::train::losses::{batch_loss, smape_loss};
use crate::train::sampler::{latest_input, sample_batch, TrainPlan};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub train_loss: f64,
    pub val_smape: f64,
    pub best: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamStore,
    pub log: Vec<TrainLogRow>,
    pub best_iteration: usize,
    pub best_val_smape: f64,
    /// MASE samples skipped for having too little history, summed over
    /// the run.
    pub short_history_warnings: usize,
}

/// Mean sMAPE of the model's forecasts against the held-out validation
/// tails; None when no series is long enough to hold one out.
pub fn validation_smape(
    view: &SplitView<'_>,
    cfg: &ModelConfig,
    params: &ParamStore,
) -> Result<Option<f64>> {
    let set = view.set();
    let ids: Vec<usize> = (0..set.len())
        .filter(|&i| view.validation_target(i).is_some())
        .collect();
    if ids.is_empty() {
        return Ok(None);
    }
    let input_len = cfg.input_len();
    let mut inputs = Matrix::zeros(ids.len(), input_len);
    for (row, &i) in ids.iter().enumerate() {
        let v = latest_input(view.visible(i), input_len);
        inputs.row_mut(row).copy_from_slice(&v.data);
    }
    let trace = forward_batch(&inputs, cfg, params)?;
    let ones = vec![1.0; cfg.horizon];
    let mut total = 0.0;
    for (row, &i) in ids.iter().enumerate() {
        let target = view.validation_target(i).expect("filtered above");
        let (s, _) = smape_loss(trace.forecast.row(row), target, &ones)?;
        total += s;
    }
    Ok(Some(total / ids.len() as f64))
}

pub fn train_model(set: &SeriesSet, cfg: &ModelConfig, plan: &TrainPlan) -> Result<TrainOutcome> {
    cfg.validate()?;
    plan.validate()?;
    if plan.lookback_multiple != cfg.lookback_multiple {
        return Err(Error::Config(format!(
            "plan lookback multiple {} does not match the model's {}",
            plan.lookback_multiple, cfg.lookback_multiple
        )));
    }
    let horizon = set.uniform_horizon()?;
    if horizon != cfg.horizon {
        return Err(Error::Config(format!(
            "dataset horizon {horizon} does not match the model horizon {}",
            cfg.horizon
        )));
    }

    let view = split_train_validation(set);
    let mut init_rng = Rng::new(plan.seed).fork(0);
    let mut sample_rng = Rng::new(plan.seed).fork(1);
    let mut params = init_params(cfg, &mut init_rng);
    let mut adam = AdamState::new(&params, 0.001);

    let cadence = plan.cadence();
    let mut log = Vec::new();
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_iteration = 0;
    let mut evals_since_best = 0;
    let mut warnings = 0;
    let mut validated = false;

    for iteration in 1..=plan.iterations {
        let batch = sample_batch(&view, horizon, plan, &mut sample_rng)?;
        let trace = forward_batch(&batch.inputs, cfg, &params)?;
        let bl = batch_loss(plan.loss, &trace.forecast, &batch)?;
        warnings += bl.short_history_warnings;
        if !bl.loss.is_finite() {
            return Err(Error::Training {
                iteration,
                msg: format!("non-finite training loss {}", bl.loss),
            });
        }
        let grads = crate::model::forward::model_backward(&trace, &bl.grad, cfg, &params)?;
        adam_step(&mut params, &grads, &mut adam)?;

        if iteration % cadence == 0 || iteration == plan.iterations {
            match validation_smape(&view, cfg, &params)? {
                Some(val) => {
                    validated = true;
                    let improved = val < best_val;
                    if improved {
                        best_val = val;
                        best_iteration = iteration;
                        best_params = params.clone();
                        evals_since_best = 0;
                    } else {
                        evals_since_best += 1;
                    }
                    log.push(TrainLogRow {
                        iteration,
                        train_loss: bl.loss,
                        val_smape: val,
                        best: improved,
                    });
                    if evals_since_best >= plan.patience {
                        break;
                    }
                }
                None => {
                    log.push(TrainLogRow {
                        iteration,
                        train_loss: bl.loss,
                        val_smape: f64::NAN,
                        best: false,
                    });
                }
            }
        }
    }

    // With no validation series the final parameters stand.
    let (params, best_iteration) = if validated {
        (best_params, best_iteration)
    } else {
        (params, plan.iterations)
    };
    Ok(TrainOutcome {
        params,
        log,
        best_iteration,
        best_val_smape: if validated { best_val } else { f64::NAN },
        short_history_warnings: warnings,
    })
}

pub fn training_log_csv(log: &[TrainLogRow]) -> String {
    let mut out = String::from("iteration,train_loss,val_smape,best\n");
    for row in log {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.iteration,
            row.train_loss,
            row.val_smape,
            if row.best { 1 } else { 0 }
        );
    }
    out
}

pub fn write_training_log(log: &[TrainLogRow], path: &Path) -> Result<()> {
    std::fs::write(path, training_log_csv(log))?;
    Ok(())
}
