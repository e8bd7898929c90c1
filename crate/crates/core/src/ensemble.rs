//! Ensembling over losses, lookback windows and bagging repeats, with
//! pointwise median aggregation.
//!
//! Members are expanded loss-major, then by lookback, then repeat; each
//! derives its seed from a stable hash of (base seed, loss, lookback,
//! repeat) so runs reproduce regardless of worker count.

use crate::data::{full_train_view, SeriesSet};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::model::config::ModelConfig;
use crate::model::forward::forward_batch;
use crate::model::params::ParamStore;
use crate::rng::stable_hash64;
use crate::tensor::{Matrix, Vector};
use crate::train::losses::LossKind;
use crate::train::sampler::{latest_input, TrainPlan};
use crate::train::trainer::train_model;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub losses: Vec<LossKind>,
    pub lookback_multiples: Vec<usize>,
    pub repeats: usize,
    pub base_config: ModelConfig,
    pub base_plan: TrainPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemberId {
    pub loss: LossKind,
    pub lookback_multiple: usize,
    pub repeat: usize,
    pub seed: u64,
}

impl MemberId {
    pub fn tag(&self) -> String {
        format!("{}-lb{}-r{}", self.loss.name(), self.lookback_multiple, self.repeat)
    }
}

#[derive(Debug, Clone)]
pub struct MemberForecasts {
    /// Series ids, in dataset order; every member covers exactly these.
    pub series_ids: Vec<String>,
    /// Surviving members with one forecast per series.
    pub members: Vec<(MemberId, Vec<Vector>)>,
    /// Members whose training failed, with the diagnostic.
    pub failures: Vec<(MemberId, String)>,
}

pub fn member_seed(base_seed: u64, loss: LossKind, lookback: usize, repeat: usize) -> u64 {
    stable_hash64(&[
        &base_seed.to_le_bytes(),
        loss.name().as_bytes(),
        &(lookback as u64).to_le_bytes(),
        &(repeat as u64).to_le_bytes(),
    ])
}

/// The loss × lookback × repeat cross product, loss-major, each cell with
/// its derived seed.
pub fn expand_spec(spec: &EnsembleSpec) -> Result<Vec<(MemberId, ModelConfig, TrainPlan)>> {
    if spec.losses.is_empty() || spec.lookback_multiples.is_empty() || spec.repeats == 0 {
        return Err(Error::Ensemble(
            "losses, lookbacks and repeats must all be non-empty".into(),
        ));
    }
    let mut members = Vec::with_capacity(spec.losses.len() * spec.lookback_multiples.len() * spec.repeats);
    for &loss in &spec.losses {
        for &lookback in &spec.lookback_multiples {
            for repeat in 0..spec.repeats {
                let seed = member_seed(spec.base_plan.seed, loss, lookback, repeat);
                let id = MemberId {
                    loss,
                    lookback_multiple: lookback,
                    repeat,
                    seed,
                };
                let cfg = spec.base_config.with_lookback(lookback);
                let mut plan = spec.base_plan.clone();
                plan.loss = loss;
                plan.lookback_multiple = lookback;
                plan.seed = seed;
                members.push((id, cfg, plan));
            }
        }
    }
    Ok(members)
}

/// Forecasts for every series from the full train history.
pub fn forecast_all(
    set: &SeriesSet,
    cfg: &ModelConfig,
    params: &ParamStore,
) -> Result<Vec<Vector>> {
    let view = full_train_view(set);
    let input_len = cfg.input_len();
    let mut inputs = Matrix::zeros(set.len(), input_len);
    for i in 0..set.len() {
        let v = latest_input(view.visible(i), input_len);
        inputs.row_mut(i).copy_from_slice(&v.data);
    }
    let trace = forward_batch(&inputs, cfg, params)?;
    Ok((0..set.len()).map(|i| trace.forecast.row_vector(i)).collect())
}

/// Trains all members (in parallel across `worker_count` threads) and
/// collects their test-input forecasts. Aggregation proceeds only if at
/// least half the members survive.
pub fn train_ensemble(
    spec: &EnsembleSpec,
    set: &SeriesSet,
    worker_count: usize,
) -> Result<MemberForecasts> {
    let expanded = expand_spec(spec)?;
    let total = expanded.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count.max(1))
        .build()
        .map_err(|e| Error::Ensemble(format!("cannot build worker pool: {e}")))?;
    let results: Vec<(MemberId, Result<Vec<Vector>>)> = pool.install(|| {
        expanded
            .par_iter()
            .map(|(id, cfg, plan)| {
                let r = train_model(set, cfg, plan)
                    .and_then(|out| forecast_all(set, cfg, &out.params));
                (*id, r)
            })
            .collect()
    });

    let mut members = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(f) => members.push((id, f)),
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    if members.len() * 2 < total {
        return Err(Error::Ensemble(format!(
            "only {} of {total} members survived; first failure: {}",
            members.len(),
            failures
                .first()
                .map(|(id, e)| format!("{}: {e}", id.tag()))
                .unwrap_or_default()
        )));
    }
    Ok(MemberForecasts {
        series_ids: set.series.iter().map(|s| s.id.clone()).collect(),
        members,
        failures,
    })
}

fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite forecast value"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pointwise median across members; an even count takes the mean of the two
/// central order statistics.
pub fn aggregate_median(forecasts: &MemberForecasts) -> Result<Vec<Vector>> {
    aggregate_median_of(forecasts, forecasts.members.len())
}

fn aggregate_median_of(forecasts: &MemberForecasts, size: usize) -> Result<Vec<Vector>> {
    if size == 0 || forecasts.members.is_empty() {
        return Err(Error::Ensemble("median of zero members".into()));
    }
    let members = &forecasts.members[..size];
    let n_series = forecasts.series_ids.len();
    for (id, f) in members {
        if f.len() != n_series {
            return Err(Error::Ensemble(format!(
                "member {} covers {} series, expected {n_series}",
                id.tag(),
                f.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(n_series);
    for s in 0..n_series {
        let h = members[0].1[s].len();
        let mut agg = Vector::zeros(h);
        let mut column = vec![0.0; members.len()];
        for k in 0..h {
            for (j, (_, f)) in members.iter().enumerate() {
                if f[s].len() != h {
                    return Err(Error::Ensemble("inconsistent forecast lengths".into()));
                }
                column[j] = f[s].data[k];
            }
            agg.data[k] = median_in_place(&mut column);
        }
        out.push(agg);
    }
    Ok(out)
}

/// Evaluates the median of the first `size` members (in expansion order)
/// for each requested size.
pub fn ensemble_size_sweep(
    forecasts: &MemberForecasts,
    set: &SeriesSet,
    sizes: &[usize],
) -> Result<Vec<(usize, EvalReport)>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 || size > forecasts.members.len() {
            return Err(Error::Ensemble(format!(
                "sweep size {size} outside 1..={}",
                forecasts.members.len()
            )));
        }
        let agg = aggregate_median_of(forecasts, size)?;
        out.push((size, evaluate(set, &agg)?));
    }
    Ok(out)
}

pub fn forecast_csv(series_ids: &[String], forecasts: &[Vector]) -> String {
    let mut out = String::new();
    for (id, f) in series_ids.iter().zip(forecasts) {
        out.push_str(id);
        for v in f.iter() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// One CSV per member plus a manifest listing identity, seed and file name.
pub fn write_member_files(forecasts: &MemberForecasts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::from("loss,lookback,repeat,seed,file\n");
    for (id, f) in &forecasts.members {
        let file = format!("member-{}.csv", id.tag());
        std::fs::write(dir.join(&file), forecast_csv(&forecasts.series_ids, f))?;
        let _ = writeln!(
            manifest,
            "{},{},{},{},{file}",
            id.loss.name(),
            id.lookback_multiple,
            id.repeat,
            id.seed
        );
    }
    std::fs::write(dir.join("manifest.csv"), manifest)?;
    Ok(())
}
