//! The anchor-window batch sampler.
//!
//! Each sample picks a series uniformly with replacement, then an anchor
//! uniformly among the last ⌈L_H × H⌉ visible train points. The target is
//! the H points from the anchor onward and the input is the
//! lookback_multiple × H points preceding it; positions outside the visible
//! range are zero-filled and masked out.

use crate::data::SplitView;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Matrix, Vector};
use crate::train::losses::LossKind;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainPlan {
    pub iterations: usize,
    pub batch_size: usize,
    /// Anchor-window length multiplier L_H: anchors are drawn from the last
    /// ⌈L_H × H⌉ visible train points.
    pub l_h: f64,
    pub loss: LossKind,
    pub lookback_multiple: usize,
    /// Consecutive non-improving validation evaluations tolerated before
    /// stopping.
    pub patience: usize,
    /// Batches between validation evaluations; default max(1, iterations/20).
    pub validation_cadence: Option<usize>,
    pub seed: u64,
}

impl TrainPlan {
    pub fn new(iterations: usize, l_h: f64, loss: LossKind, lookback_multiple: usize, seed: u64) -> Self {
        TrainPlan {
            iterations,
            batch_size: 1024,
            l_h,
            loss,
            lookback_multiple,
            patience: 5,
            validation_cadence: None,
            seed,
        }
    }

    pub fn cadence(&self) -> usize {
        self.validation_cadence
            .unwrap_or_else(|| (self.iterations / 20).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if !(self.l_h > 0.0) {
            return Err(Error::Config("L_H must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(2..=7).contains(&self.lookback_multiple) {
            return Err(Error::Config(format!(
                "lookback multiple must be in 2..=7, got {}",
                self.lookback_multiple
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainBatch {
    /// One input window per row, length lookback_multiple × H.
    pub inputs: Matrix,
    /// 1 where the input position holds a real observation, else 0.
    pub input_masks: Matrix,
    /// One target window per row, length H.
    pub targets: Matrix,
    /// 1 where the target position holds a real observation, else 0.
    pub target_masks: Matrix,
    pub series_ids: Vec<usize>,
    /// Seasonal periodicity m per sample, for the MASE scale.
    pub periodicity: Vec<usize>,
    /// Visible train history per sample, for the MASE scale.
    pub histories: Vec<Vector>,
}

/// The most recent `input_len` visible points as a model input, left-padded
/// with zeros when the series is shorter.
pub fn latest_input(visible: &[f64], input_len: usize) -> Vector {
    let mut v = Vector::zeros(input_len);
    let take = visible.len().min(input_len);
    v.data[input_len - take..].copy_from_slice(&visible[visible.len() - take..]);
    v
}

pub fn sample_batch(
    view: &SplitView<'_>,
    horizon: usize,
    plan: &TrainPlan,
    rng: &mut Rng,
) -> Result<TrainBatch> {
    let set = view.set();
    if set.is_empty() {
        return Err(Error::Dataset("cannot sample from an empty series set".into()));
    }
    let input_len = plan.lookback_multiple * horizon;
    let window = (plan.l_h * horizon as f64).ceil() as usize;
    let n = plan.batch_size;

    let mut inputs = Matrix::zeros(n, input_len);
    let mut input_masks = Matrix::zeros(n, input_len);
    let mut targets = Matrix::zeros(n, horizon);
    let mut target_masks = Matrix::zeros(n, horizon);
    let mut series_ids = Vec::with_capacity(n);
    let mut periodicity = Vec::with_capacity(n);
    let mut histories = Vec::with_capacity(n);

    for s in 0..n {
        let id = rng.index(set.len());
        let visible = view.visible(id);
        let len = visible.len();
        let window = window.min(len);
        // Anchor indexes the first target point, inside the visible range.
        let anchor = len - window + rng.index(window);

        for k in 0..input_len {
            let pos = anchor as i64 - input_len as i64 + k as i64;
            if pos >= 0 {
                *inputs.at_mut(s, k) = visible[pos as usize];
                *input_masks.at_mut(s, k) = 1.0;
            }
        }
        for k in 0..horizon {
            let pos = anchor + k;
            if pos < len {
                *targets.at_mut(s, k) = visible[pos];
                *target_masks.at_mut(s, k) = 1.0;
            }
        }

        series_ids.push(id);
        periodicity.push(set.meta_for(&set.series[id]).periodicity);
        histories.push(Vector::from_slice(visible));
    }

    Ok(TrainBatch {
        inputs,
        input_masks,
        targets,
        target_masks,
        series_ids,
        periodicity,
        histories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{full_train_view, split_train_validation, synth_generate, FrequencyMeta, Series, SeriesSet};

    fn tiny_plan(batch_size: usize, lookback: usize) -> TrainPlan {
        let mut plan = TrainPlan::new(10, 1.5, LossKind::Smape, lookback, 7);
        plan.batch_size = batch_size;
        plan
    }

    fn one_series(train: Vec<f64>, horizon: usize) -> SeriesSet {
        SeriesSet {
            series: vec![Series {
                id: "s1".into(),
                frequency: "s".into(),
                train,
                test: vec![0.0; horizon],
            }],
            meta: [(
                "s".to_string(),
                FrequencyMeta {
                    horizon,
                    periodicity: 1,
                },
            )]
            .into(),
        }
    }

    #[test]
    fn anchor_window_is_nine_points_for_lh_1_5_h_6() {
        // L_H = 1.5, H = 6: anchors among the last ceil(9) = 9 points.
        let train: Vec<f64> = (0..40).map(|v| v as f64).collect();
        let set = one_series(train, 6);
        let view = full_train_view(&set);
        let plan = tiny_plan(512, 2);
        let mut rng = Rng::new(1);
        let batch = sample_batch(&view, 6, &plan, &mut rng).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..batch.inputs.rows {
            // target[0] is the anchor value; the series is 0..39 so the
            // value doubles as the index.
            let anchor = batch.targets.at(s, 0) as usize;
            assert!(anchor >= 31 && anchor <= 39, "anchor {anchor}");
            seen.insert(anchor);
        }
        assert_eq!(seen.len(), 9, "all nine anchors should appear: {seen:?}");
    }

    #[test]
    fn short_series_masks_left_input_positions() {
        let set = one_series(vec![5.0, 6.0, 7.0], 2);
        let view = full_train_view(&set);
        let plan = tiny_plan(16, 3); // input length 6 > series length 3
        let mut rng = Rng::new(2);
        let batch = sample_batch(&view, 2, &plan, &mut rng).unwrap();
        for s in 0..batch.inputs.rows {
            assert_eq!(batch.input_masks.at(s, 0), 0.0);
            assert_eq!(batch.inputs.at(s, 0), 0.0);
            // Every sample keeps at least one real target position; the
            // input may be fully masked when the anchor sits at the very
            // start of a short series.
            assert!(batch.target_masks.row(s).iter().sum::<f64>() >= 1.0);
        }
    }

    #[test]
    fn masked_positions_carry_zero_and_every_sample_has_a_target() {
        let mut rng = Rng::new(3);
        let set = synth_generate(6, 25, 4, 3, 1, 0.2, 1.0, &mut rng);
        let view = split_train_validation(&set);
        let plan = tiny_plan(256, 5);
        let batch = sample_batch(&view, 4, &plan, &mut rng).unwrap();
        for s in 0..batch.inputs.rows {
            for k in 0..batch.inputs.cols {
                if batch.input_masks.at(s, k) == 0.0 {
                    assert_eq!(batch.inputs.at(s, k), 0.0);
                }
            }
            assert!(batch.target_masks.row(s).iter().sum::<f64>() >= 1.0);
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_batch() {
        let mut rng = Rng::new(9);
        let set = synth_generate(4, 30, 5, 4, 1, 0.2, 1.0, &mut rng);
        let view = full_train_view(&set);
        let plan = tiny_plan(64, 2);
        let a = sample_batch(&view, 5, &plan, &mut Rng::new(42)).unwrap();
        let b = sample_batch(&view, 5, &plan, &mut Rng::new(42)).unwrap();
        assert_eq!(a.inputs.data, b.inputs.data);
        assert_eq!(a.targets.data, b.targets.data);
        assert_eq!(a.series_ids, b.series_ids);
    }

    #[test]
    fn sampler_never_reads_past_the_visible_boundary() {
        // In validation mode the last H train points are held out; every
        // sampled value must come from the visible prefix.
        let train: Vec<f64> = (0..30).map(|v| 1000.0 + v as f64).collect();
        let set = one_series(train.clone(), 6);
        let view = split_train_validation(&set);
        let visible: std::collections::BTreeSet<u64> = train[..24]
            .iter()
            .map(|v| v.to_bits())
            .collect();
        let plan = tiny_plan(512, 2);
        let batch = sample_batch(&view, 6, &plan, &mut Rng::new(5)).unwrap();
        for s in 0..batch.inputs.rows {
            for k in 0..batch.inputs.cols {
                if batch.input_masks.at(s, k) == 1.0 {
                    assert!(visible.contains(&batch.inputs.at(s, k).to_bits()));
                }
            }
            for k in 0..batch.targets.cols {
                if batch.target_masks.at(s, k) == 1.0 {
                    assert!(visible.contains(&batch.targets.at(s, k).to_bits()));
                }
            }
            for v in batch.histories[s].iter() {
                assert!(visible.contains(&v.to_bits()));
            }
        }
    }

    #[test]
    fn empty_set_is_an_error() {
        let set = SeriesSet {
            series: vec![],
            meta: [(
                "s".to_string(),
                FrequencyMeta {
                    horizon: 2,
                    periodicity: 1,
                },
            )]
            .into(),
        };
        let view = full_train_view(&set);
        assert!(sample_batch(&view, 2, &tiny_plan(4, 2), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn latest_input_pads_on_the_left() {
        let v = latest_input(&[1.0, 2.0, 3.0], 5);
        assert_eq!(v.data, vec![0.0, 0.0, 1.0, 2.0, 3.0]);
        let v = latest_input(&[1.0, 2.0, 3.0], 2);
        assert_eq!(v.data, vec![2.0, 3.0]);
    }
}
