//! Dataset ingestion, the train/validation split rule and a synthetic
//! generator for tests and ablations.
//!
//! Canonical on-disk format: one series per CSV row, "id,v1,v2,...", with
//! variable row length and empty trailing cells ignored. A separate metadata
//! file maps frequency tags to horizon and periodicity, one
//! "frequency,horizon,periodicity" triple per line. A series belongs to the
//! frequency whose tag is the longest prefix of its id; a metadata file with
//! a single entry applies to every series.

use crate::error::{Error, Result};
use crate::rng::Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyMeta {
    pub horizon: usize,
    pub periodicity: usize,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub id: String,
    pub frequency: String,
    /// Full training history.
    pub train: Vec<f64>,
    /// Ground-truth future of length H for the series' frequency.
    pub test: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SeriesSet {
    pub series: Vec<Series>,
    pub meta: BTreeMap<String, FrequencyMeta>,
}

impl SeriesSet {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn meta_for(&self, series: &Series) -> &FrequencyMeta {
        &self.meta[&series.frequency]
    }

    /// Horizon shared by every series in the set; errors if mixed.
    pub fn uniform_horizon(&self) -> Result<usize> {
        let mut horizons = self.series.iter().map(|s| self.meta_for(s).horizon);
        let first = horizons
            .next()
            .ok_or_else(|| Error::Dataset("empty series set".into()))?;
        if horizons.all(|h| h == first) {
            Ok(first)
        } else {
            Err(Error::Dataset(
                "series set mixes horizons; operate per frequency subset".into(),
            ))
        }
    }
}

fn parse_meta(path: &Path) -> Result<BTreeMap<String, FrequencyMeta>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Dataset(format!("cannot read metadata file {}: {e}", path.display()))
    })?;
    let mut meta = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected \"frequency,horizon,periodicity\", got {line:?}"),
            });
        }
        let horizon: usize = parts[1].parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("bad horizon {:?}", parts[1]),
        })?;
        let periodicity: usize = parts[2].parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("bad periodicity {:?}", parts[2]),
        })?;
        meta.insert(
            parts[0].to_string(),
            FrequencyMeta {
                horizon,
                periodicity,
            },
        );
    }
    if meta.is_empty() {
        return Err(Error::Dataset(format!(
            "metadata file {} defines no frequencies",
            path.display()
        )));
    }
    Ok(meta)
}

fn parse_series_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Dataset(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let id = cells
            .next()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "missing series id".into(),
            })?;
        let mut values = Vec::new();
        for cell in cells {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("non-finite value {v}"),
                });
            }
            values.push(v);
        }
        rows.push((id.to_string(), values));
    }
    Ok(rows)
}

fn frequency_of(id: &str, meta: &BTreeMap<String, FrequencyMeta>) -> Option<String> {
    if meta.len() == 1 {
        return meta.keys().next().cloned();
    }
    meta.keys()
        .filter(|tag| id.starts_with(tag.as_str()))
        .max_by_key(|tag| tag.len())
        .cloned()
}

/// Loads matching train and test CSV files under the given metadata. Train
/// and test ids must match one-to-one and each test row must have exactly H
/// values for its frequency.
pub fn load_dataset(train_csv: &Path, test_csv: &Path, meta_path: &Path) -> Result<SeriesSet> {
    let meta = parse_meta(meta_path)?;
    let train_rows = parse_series_csv(train_csv)?;
    let test_rows = parse_series_csv(test_csv)?;

    let mut test_by_id: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (id, values) in test_rows {
        if test_by_id.insert(id.clone(), values).is_some() {
            return Err(Error::Dataset(format!("duplicate test id {id:?}")));
        }
    }

    let mut series = Vec::with_capacity(train_rows.len());
    for (rowno, (id, train)) in train_rows.into_iter().enumerate() {
        if train.is_empty() {
            return Err(Error::Parse {
                path: train_csv.display().to_string(),
                line: rowno + 1,
                msg: format!("series {id:?} has no train values"),
            });
        }
        let frequency = frequency_of(&id, &meta).ok_or_else(|| Error::Parse {
            path: train_csv.display().to_string(),
            line: rowno + 1,
            msg: format!("unknown frequency tag for series id {id:?}"),
        })?;
        let horizon = meta[&frequency].horizon;
        let test = test_by_id
            .remove(&id)
            .ok_or_else(|| Error::Dataset(format!("series {id:?} missing from the test file")))?;
        if test.len() != horizon {
            return Err(Error::Dataset(format!(
                "test row for {id:?} has {} values, expected horizon {horizon}",
                test.len()
            )));
        }
        series.push(Series {
            id,
            frequency,
            train,
            test,
        });
    }
    if let Some(extra) = test_by_id.keys().next() {
        return Err(Error::Dataset(format!(
            "test id {extra:?} has no matching train row"
        )));
    }
    Ok(SeriesSet { series, meta })
}

fn format_rows(rows: impl Iterator<Item = (String, Vec<f64>)>) -> String {
    let mut out = String::new();
    for (id, values) in rows {
        out.push_str(&id);
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes the set back in the canonical format. Values use the shortest
/// representation that parses back to the identical 64-bit float.
pub fn save_dataset(set: &SeriesSet, train_csv: &Path, test_csv: &Path) -> Result<()> {
    std::fs::write(
        train_csv,
        format_rows(set.series.iter().map(|s| (s.id.clone(), s.train.clone()))),
    )?;
    std::fs::write(
        test_csv,
        format_rows(set.series.iter().map(|s| (s.id.clone(), s.test.clone()))),
    )?;
    Ok(())
}

/// Which part of the train history a consumer may see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// The full train history (final fit).
    FullTrain,
    /// Train minus the last horizon, with the held-out tail as validation
    /// target.
    Validation,
}

/// A leakage-controlled view into a SeriesSet: the sampler-visible range
/// per series, and validation targets when in validation mode.
#[derive(Debug, Clone)]
pub struct SplitView<'a> {
    set: &'a SeriesSet,
    mode: SplitMode,
    /// Series too short to hold out a validation tail; they expose their
    /// full train range and no validation target.
    pub short_series: usize,
}

impl<'a> SplitView<'a> {
    pub fn set(&self) -> &'a SeriesSet {
        self.set
    }

    pub fn mode(&self) -> SplitMode {
        self.mode
    }

    /// The sampler-visible range of series `i`.
    pub fn visible(&self, i: usize) -> &'a [f64] {
        let s = &self.set.series[i];
        match self.mode {
            SplitMode::FullTrain => &s.train,
            SplitMode::Validation => {
                let h = self.set.meta_for(s).horizon;
                if s.train.len() > h {
                    &s.train[..s.train.len() - h]
                } else {
                    &s.train
                }
            }
        }
    }

    /// The last H train points, when held out.
    pub fn validation_target(&self, i: usize) -> Option<&'a [f64]> {
        if self.mode != SplitMode::Validation {
            return None;
        }
        let s = &self.set.series[i];
        let h = self.set.meta_for(s).horizon;
        if s.train.len() > h {
            Some(&s.train[s.train.len() - h..])
        } else {
            None
        }
    }
}

pub fn full_train_view(set: &SeriesSet) -> SplitView<'_> {
    SplitView {
        set,
        mode: SplitMode::FullTrain,
        short_series: 0,
    }
}

/// Splits each series at the boundary of the last horizon: the visible range
/// is train[..len-H], the validation target train[len-H..]. Series with
/// train length <= H are excluded from validation (counted) but keep their
/// full range for fitting.
pub fn split_train_validation(set: &SeriesSet) -> SplitView<'_> {
    let short_series = set
        .series
        .iter()
        .filter(|s| s.train.len() <= set.meta_for(s).horizon)
        .count();
    SplitView {
        set,
        mode: SplitMode::Validation,
        short_series,
    }
}

/// Synthetic fixture: polynomial trend plus a period-`m` sinusoid plus
/// uniform noise, shifted positive; the last H points become the test tail.
#[allow(clippy::too_many_arguments)]
pub fn synth_generate(
    count: usize,
    length: usize,
    horizon: usize,
    periodicity: usize,
    trend_degree: usize,
    noise_level: f64,
    amplitude: f64,
    rng: &mut Rng,
) -> SeriesSet {
    assert!(length > horizon, "series length must exceed the horizon");
    let mut meta = BTreeMap::new();
    meta.insert(
        "S".to_string(),
        FrequencyMeta {
            horizon,
            periodicity,
        },
    );
    let shift = 10.0 + amplitude + noise_level;
    let mut series = Vec::with_capacity(count);
    for i in 0..count {
        let coeffs: Vec<f64> = (0..=trend_degree).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let phase = rng.uniform(0.0, 2.0 * PI);
        let amp = if amplitude > 0.0 {
            rng.uniform(0.5 * amplitude, amplitude)
        } else {
            0.0
        };
        let mut values = Vec::with_capacity(length);
        for t in 0..length {
            let u = t as f64 / length as f64;
            let mut trend = 0.0;
            let mut pow = 1.0;
            for c in &coeffs {
                trend += c * pow;
                pow *= u;
            }
            let seasonal = if periodicity > 1 {
                amp * (2.0 * PI * t as f64 / periodicity as f64 + phase).sin()
            } else {
                0.0
            };
            let noise = if noise_level > 0.0 {
                rng.uniform(-noise_level, noise_level)
            } else {
                0.0
            };
            values.push(shift + 2.0 * trend + seasonal + noise);
        }
        let test = values.split_off(length - horizon);
        series.push(Series {
            id: format!("S{i}"),
            frequency: "S".to_string(),
            train: values,
            test,
        });
    }
    SeriesSet { series, meta }
}
