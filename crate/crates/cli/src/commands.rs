//! The train / evaluate / decompose / ablate commands.

use crate::config::{Preset, RunConfig};
use anyhow::{anyhow, bail, Context, Result};
use nbeats_core::data::{load_dataset, Series, SeriesSet};
use nbeats_core::ensemble::{
    aggregate_median, ensemble_size_sweep, forecast_all, train_ensemble, write_member_files,
    EnsembleSpec,
};
use nbeats_core::metrics::{
    aggregate_average, evaluate, naive2_baseline, owa_from_means, report_csv, snaive_forecast,
    EvalReport,
};
use nbeats_core::model::{forward_batch, load_params, save_params, ModelConfig, Topology};
use nbeats_core::train::{latest_input, train_model, write_training_log};
use nbeats_core::{Matrix, Vector};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

fn load_set(cfg: &RunConfig) -> Result<SeriesSet> {
    load_dataset(&cfg.train, &cfg.test, &cfg.meta)
        .with_context(|| format!("loading dataset from {}", cfg.train.display()))
}

pub fn cmd_train(cfg: &RunConfig, workers: usize) -> Result<()> {
    let set = load_set(cfg)?;
    let horizon = set.uniform_horizon()?;
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("run_config.txt"), cfg.to_text())?;

    if cfg.member_count() == 1 {
        let loss = cfg.losses[0];
        let lookback = cfg.lookbacks[0];
        let model_cfg = cfg.model_config(horizon, lookback);
        let plan = cfg.train_plan(loss, lookback);
        let outcome = train_model(&set, &model_cfg, &plan)?;
        save_params(&outcome.params, &model_cfg, &cfg.out.join("model.nbts"))?;
        write_training_log(&outcome.log, &cfg.out.join("training_log.csv"))?;
        let forecasts = forecast_all(&set, &model_cfg, &outcome.params)?;
        write_forecasts(&set, &forecasts, &cfg.out.join("forecast.csv"))?;
        let mut manifest = String::from("loss,lookback,repeat,seed,file\n");
        let _ = writeln!(manifest, "{},{lookback},0,{},model.nbts", loss.name(), plan.seed);
        std::fs::write(cfg.out.join("manifest.csv"), manifest)?;
    } else {
        let spec = ensemble_spec(cfg, horizon)?;
        let members = train_ensemble(&spec, &set, workers)?;
        write_member_files(&members, &cfg.out)?;
        let median = aggregate_median(&members)?;
        write_forecasts(&set, &median, &cfg.out.join("forecast.csv"))?;
    }
    Ok(())
}

fn ensemble_spec(cfg: &RunConfig, horizon: usize) -> Result<EnsembleSpec> {
    if cfg.losses.is_empty() || cfg.lookbacks.is_empty() {
        bail!("ensemble axes must be non-empty");
    }
    Ok(EnsembleSpec {
        losses: cfg.losses.clone(),
        lookback_multiples: cfg.lookbacks.clone(),
        repeats: cfg.repeats,
        base_config: cfg.model_config(horizon, cfg.lookbacks[0]),
        base_plan: cfg.train_plan(cfg.losses[0], cfg.lookbacks[0]),
    })
}

fn write_forecasts(set: &SeriesSet, forecasts: &[Vector], path: &Path) -> Result<()> {
    let ids: Vec<String> = set.series.iter().map(|s| s.id.clone()).collect();
    std::fs::write(path, nbeats_core::ensemble::forecast_csv(&ids, forecasts))?;
    Ok(())
}

fn read_forecast_csv(path: &Path, set: &SeriesSet) -> Result<Vec<Vector>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read forecasts {}", path.display()))?;
    let mut by_id: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let id = cells.next().unwrap_or("").trim();
        let values: Vec<f64> = cells
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| anyhow!("non-numeric forecast value for series {id:?}"))?;
        by_id.insert(id, values);
    }
    let missing: Vec<&str> = set
        .series
        .iter()
        .filter(|s| !by_id.contains_key(s.id.as_str()))
        .map(|s| s.id.as_str())
        .collect();
    if !missing.is_empty() {
        bail!("forecast file misses series: {}", missing.join(", "));
    }
    set.series
        .iter()
        .map(|s| {
            let v = &by_id[s.id.as_str()];
            let h = set.meta_for(s).horizon;
            if v.len() != h {
                bail!("forecast for {} has {} values, horizon is {h}", s.id, v.len());
            }
            Ok(Vector::from_slice(v))
        })
        .collect()
}

fn forecasts_from_input(input: &str, set: &SeriesSet) -> Result<Vec<Vector>> {
    match input {
        "naive2" => Ok(naive2_baseline(set)),
        "snaive" => set
            .series
            .iter()
            .map(|s| {
                let m = set.meta_for(s);
                snaive_forecast(&s.train, m.periodicity, m.horizon).map_err(Into::into)
            })
            .collect(),
        path if path.ends_with(".nbts") => {
            let (model_cfg, params) = load_params(Path::new(path), None)?;
            forecast_all(set, &model_cfg, &params).map_err(Into::into)
        }
        path => read_forecast_csv(Path::new(path), set),
    }
}

fn pointwise_median(sets: &[Vec<Vector>]) -> Vec<Vector> {
    let n_series = sets[0].len();
    (0..n_series)
        .map(|s| {
            let h = sets[0][s].len();
            let data = (0..h)
                .map(|k| {
                    let mut column: Vec<f64> = sets.iter().map(|f| f[s].data[k]).collect();
                    column.sort_by(|a, b| a.partial_cmp(b).expect("non-finite forecast"));
                    let n = column.len();
                    if n % 2 == 1 {
                        column[n / 2]
                    } else {
                        0.5 * (column[n / 2 - 1] + column[n / 2])
                    }
                })
                .collect();
            Vector { data }
        })
        .collect()
}

/// Per-subset baseline means read from "frequency,smape,mase" rows.
fn external_baseline(path: &Path, set: &SeriesSet) -> Result<(f64, f64)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read baseline {}", path.display()))?;
    let mut smape = BTreeMap::new();
    let mut mase = BTreeMap::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            bail!("baseline rows must be frequency,smape,mase: {line:?}");
        }
        smape.insert(cells[0].to_string(), cells[1].parse::<f64>()?);
        mase.insert(cells[0].to_string(), cells[2].parse::<f64>()?);
    }
    let mut freqs: Vec<&String> = set.meta.keys().collect();
    freqs.retain(|f| set.series.iter().any(|s| &&s.frequency == f));
    let mut s_means = Vec::new();
    let mut m_means = Vec::new();
    let mut counts = Vec::new();
    let mut horizons = Vec::new();
    for f in freqs {
        let s = smape
            .get(f)
            .ok_or_else(|| anyhow!("baseline file lacks frequency {f}"))?;
        s_means.push(*s);
        m_means.push(*mase.get(f).unwrap());
        counts.push(set.series.iter().filter(|x| &x.frequency == f).count());
        horizons.push(set.meta[f].horizon);
    }
    Ok((
        aggregate_average(&s_means, &counts, &horizons)?,
        aggregate_average(&m_means, &counts, &horizons)?,
    ))
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    inputs: &[String],
    metric: Option<&str>,
    naive2: &str,
    out: Option<&Path>,
) -> Result<()> {
    if inputs.is_empty() {
        bail!("evaluate needs at least one forecast source (file, model, naive2 or snaive)");
    }
    let set = load_set(cfg)?;
    let all: Vec<Vec<Vector>> = inputs
        .iter()
        .map(|i| forecasts_from_input(i, &set))
        .collect::<Result<_>>()?;
    let forecasts = if all.len() == 1 {
        all.into_iter().next().unwrap()
    } else {
        pointwise_median(&all)
    };
    let report = evaluate(&set, &forecasts)?;

    let (base_smape, base_mase) = if naive2 == "internal" {
        let base = evaluate(&set, &naive2_baseline(&set))?;
        (base.smape, base.mase)
    } else {
        external_baseline(Path::new(naive2), &set)?
    };
    let owa = owa_from_means(report.smape, report.mase, base_smape, base_mase)?;

    let text = match metric {
        Some(name) => {
            let value = metric_value(&report, owa, name)?;
            format!("{name},{value}\n")
        }
        None => {
            let mut t = report_csv(&report);
            let _ = writeln!(t, "owa,{owa}");
            let _ = writeln!(t, "nd,{}", report.nd);
            t
        }
    };
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn metric_value(report: &EvalReport, owa: f64, name: &str) -> Result<f64> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "smape" => report.smape,
        "smape_m3" => report.smape_m3,
        "mape" => report.mape,
        "mase" => report.mase,
        "owa" => owa,
        "nd" => report.nd,
        other => bail!("unknown metric {other:?}"),
    })
}

pub fn cmd_decompose(cfg: &RunConfig, model: &Path, series: &[String], out: &Path) -> Result<()> {
    let set = load_set(cfg)?;
    let (model_cfg, params) = load_params(model, None)?;
    if model_cfg.stacks.len() < 2 {
        bail!("decomposition needs a model with at least two stacks");
    }
    std::fs::create_dir_all(out)?;
    for id in series {
        let s = set
            .series
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| anyhow!("unknown series id {id:?}"))?;
        let h = set.meta_for(s).horizon;
        if h != model_cfg.horizon {
            bail!("series {id} has horizon {h}, model expects {}", model_cfg.horizon);
        }
        let input = latest_input(&s.train, model_cfg.input_len());
        let trace = forward_batch(
            &Matrix {
                rows: 1,
                cols: input.len(),
                data: input.data.clone(),
            },
            &model_cfg,
            &params,
        )?;
        let max_actual = s.test.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max_actual > 0.0) {
            bail!("series {id}: normalization divisor must be positive, got {max_actual}");
        }
        let mut csv = String::from("t,ACTUAL,FORECAST");
        for i in 1..=model_cfg.stacks.len() {
            let _ = write!(csv, ",STACK{i}");
        }
        csv.push('\n');
        for t in 0..h {
            let _ = write!(
                csv,
                "{t},{},{}",
                s.test[t] / max_actual,
                trace.forecast.at(0, t) / max_actual
            );
            for p in &trace.stack_partials {
                let _ = write!(csv, ",{}", p.at(0, t) / max_actual);
            }
            csv.push('\n');
        }
        std::fs::write(out.join(format!("decompose-{id}.csv")), csv)?;
    }
    Ok(())
}

/// A derived set whose test tails are the held-out last horizon of each
/// train series; ablation settings are compared on it without touching the
/// real test data.
fn validation_set(set: &SeriesSet) -> Result<SeriesSet> {
    let mut series = Vec::new();
    for s in &set.series {
        let h = set.meta_for(s).horizon;
        if s.train.len() <= h {
            continue;
        }
        let cut = s.train.len() - h;
        series.push(Series {
            id: s.id.clone(),
            frequency: s.frequency.clone(),
            train: s.train[..cut].to_vec(),
            test: s.train[cut..].to_vec(),
        });
    }
    if series.is_empty() {
        bail!("no series long enough to hold out a validation horizon");
    }
    Ok(SeriesSet {
        series,
        meta: set.meta.clone(),
    })
}

fn score_setting(
    cfg: &RunConfig,
    vset: &SeriesSet,
    model_cfg: &ModelConfig,
) -> Result<(f64, f64, f64)> {
    let plan = cfg.train_plan(cfg.losses[0], model_cfg.lookback_multiple);
    let outcome = train_model(vset, model_cfg, &plan)?;
    let forecasts = forecast_all(vset, model_cfg, &outcome.params)?;
    let report = evaluate(vset, &forecasts)?;
    let base = evaluate(vset, &naive2_baseline(vset))?;
    let owa = owa_from_means(report.smape, report.mase, base.smape, base.mase)?;
    Ok((report.smape, report.mase, owa))
}

pub fn cmd_ablate(cfg: &RunConfig, axis: &str, workers: usize, out: Option<&Path>) -> Result<()> {
    let set = load_set(cfg)?;
    let horizon = set.uniform_horizon()?;
    let vset = validation_set(&set)?;
    let lookback = cfg.lookbacks[0];

    let mut csv = String::from("setting,smape,mase,owa\n");
    match axis {
        "stacks" => {
            for &stacks in &cfg.ablate_stacks {
                let mut c = cfg.clone();
                c.stacks = stacks;
                c.preset = Preset::Generic;
                let (s, m, o) = score_setting(&c, &vset, &c.model_config(horizon, lookback))?;
                let _ = writeln!(csv, "stacks={stacks},{s},{m},{o}");
            }
        }
        "basis" => {
            for (t_blocks, s_blocks) in [(0, 2), (2, 0), (1, 1), (3, 3)] {
                let mut c = cfg.clone();
                c.preset = Preset::Interpretable;
                c.t_blocks = t_blocks;
                c.s_blocks = s_blocks;
                let (s, m, o) = score_setting(&c, &vset, &c.model_config(horizon, lookback))?;
                let _ = writeln!(csv, "trend={t_blocks}:seasonality={s_blocks},{s},{m},{o}");
            }
        }
        "topology" => {
            for topology in Topology::ALL {
                let mut c = cfg.clone();
                c.topology = topology;
                let (s, m, o) = score_setting(&c, &vset, &c.model_config(horizon, lookback))?;
                let _ = writeln!(csv, "{},{s},{m},{o}", topology.name());
            }
        }
        "ensemble_size" => {
            let spec = ensemble_spec(cfg, horizon)?;
            let members = train_ensemble(&spec, &vset, workers)?;
            let base = evaluate(&vset, &naive2_baseline(&vset))?;
            for (size, report) in ensemble_size_sweep(&members, &vset, &cfg.ablate_sizes)? {
                let owa = owa_from_means(report.smape, report.mase, base.smape, base.mase)?;
                let _ = writeln!(csv, "size={size},{},{},{owa}", report.smape, report.mase);
            }
        }
        other => bail!("unknown ablation axis {other:?}; expected stacks, basis, topology or ensemble_size"),
    }
    match out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
