//! Flat "key = value" run configuration.
//!
//! Field names follow the hyperparameter table conventions (L_H, Width,
//! Blocks, Block-layers, Stacks, Sharing, T-width, T-degree, T-blocks,
//! T-block-layers, S-width, S-blocks, S-block-layers, Batch, losses,
//! lookbacks) so a settings table transcribes directly. Lines starting
//! with '#' are comments; unknown keys are hard errors listing the keys.

use anyhow::{anyhow, bail, Context, Result};
use nbeats_core::model::{generic_config, interpretable_config, ModelConfig, Topology};
use nbeats_core::train::{LossKind, TrainPlan};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Generic,
    Interpretable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub meta: PathBuf,
    pub out: PathBuf,
    pub preset: Preset,
    pub topology: Topology,
    pub l_h: f64,
    pub iterations: usize,
    pub batch: usize,
    pub losses: Vec<LossKind>,
    pub lookbacks: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    // Generic preset fields.
    pub width: usize,
    pub blocks: usize,
    pub block_layers: usize,
    pub stacks: usize,
    pub sharing: bool,
    // Interpretable preset fields.
    pub t_width: usize,
    pub t_degree: usize,
    pub t_blocks: usize,
    pub t_block_layers: usize,
    pub s_width: usize,
    pub s_blocks: usize,
    pub s_block_layers: usize,
    // Ablation grids.
    pub ablate_stacks: Vec<usize>,
    pub ablate_sizes: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: PathBuf::from("train.csv"),
            test: PathBuf::from("test.csv"),
            meta: PathBuf::from("meta.csv"),
            out: PathBuf::from("out"),
            preset: Preset::Generic,
            topology: Topology::Dress,
            l_h: 1.0,
            iterations: 1000,
            batch: 1024,
            losses: vec![LossKind::Smape],
            lookbacks: vec![2],
            repeats: 1,
            seed: 0,
            width: 512,
            blocks: 1,
            block_layers: 4,
            stacks: 30,
            sharing: false,
            t_width: 256,
            t_degree: 2,
            t_blocks: 3,
            t_block_layers: 4,
            s_width: 2048,
            s_blocks: 3,
            s_block_layers: 4,
            ablate_stacks: vec![1, 3, 9, 18, 30],
            ablate_sizes: vec![1, 3, 6, 18],
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| anyhow!("bad element {s:?} in list for key {key}"))
        })
        .collect()
}

fn parse_bool(value: &str, key: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("key {key} expects a boolean, got {value:?}"),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut unknown = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value, got {line:?}", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let ctx = || format!("line {}: bad value {value:?} for key {key}", lineno + 1);
            match key {
                "train" => cfg.train = PathBuf::from(value),
                "test" => cfg.test = PathBuf::from(value),
                "meta" => cfg.meta = PathBuf::from(value),
                "out" => cfg.out = PathBuf::from(value),
                "preset" => {
                    cfg.preset = match value.to_ascii_lowercase().as_str() {
                        "generic" => Preset::Generic,
                        "interpretable" => Preset::Interpretable,
                        _ => bail!("preset must be generic or interpretable, got {value:?}"),
                    }
                }
                "topology" => cfg.topology = Topology::parse(value)?,
                "L_H" => cfg.l_h = value.parse().with_context(ctx)?,
                "iterations" => cfg.iterations = value.parse().with_context(ctx)?,
                "Batch" => cfg.batch = value.parse().with_context(ctx)?,
                "losses" => {
                    cfg.losses = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(LossKind::parse)
                        .collect::<nbeats_core::Result<_>>()?
                }
                "lookbacks" => cfg.lookbacks = parse_list(value, key)?,
                "repeats" => cfg.repeats = value.parse().with_context(ctx)?,
                "seed" => cfg.seed = value.parse().with_context(ctx)?,
                "Width" => cfg.width = value.parse().with_context(ctx)?,
                "Blocks" => cfg.blocks = value.parse().with_context(ctx)?,
                "Block-layers" => cfg.block_layers = value.parse().with_context(ctx)?,
                "Stacks" => cfg.stacks = value.parse().with_context(ctx)?,
                "Sharing" => cfg.sharing = parse_bool(value, key)?,
                "T-width" => cfg.t_width = value.parse().with_context(ctx)?,
                "T-degree" => cfg.t_degree = value.parse().with_context(ctx)?,
                "T-blocks" => cfg.t_blocks = value.parse().with_context(ctx)?,
                "T-block-layers" => cfg.t_block_layers = value.parse().with_context(ctx)?,
                "S-width" => cfg.s_width = value.parse().with_context(ctx)?,
                "S-blocks" => cfg.s_blocks = value.parse().with_context(ctx)?,
                "S-block-layers" => cfg.s_block_layers = value.parse().with_context(ctx)?,
                "ablate-stacks" => cfg.ablate_stacks = parse_list(value, key)?,
                "ablate-sizes" => cfg.ablate_sizes = parse_list(value, key)?,
                _ => unknown.push(key.to_string()),
            }
        }
        if !unknown.is_empty() {
            bail!("unknown configuration keys: {}", unknown.join(", "));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        RunConfig::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "train = {}", self.train.display());
        let _ = writeln!(s, "test = {}", self.test.display());
        let _ = writeln!(s, "meta = {}", self.meta.display());
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(
            s,
            "preset = {}",
            match self.preset {
                Preset::Generic => "generic",
                Preset::Interpretable => "interpretable",
            }
        );
        let _ = writeln!(s, "topology = {}", self.topology.name());
        let _ = writeln!(s, "L_H = {}", self.l_h);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "Batch = {}", self.batch);
        let losses: Vec<&str> = self.losses.iter().map(|l| l.name()).collect();
        let _ = writeln!(s, "losses = {}", losses.join(","));
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "lookbacks = {}", join(&self.lookbacks));
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "Width = {}", self.width);
        let _ = writeln!(s, "Blocks = {}", self.blocks);
        let _ = writeln!(s, "Block-layers = {}", self.block_layers);
        let _ = writeln!(s, "Stacks = {}", self.stacks);
        let _ = writeln!(s, "Sharing = {}", self.sharing);
        let _ = writeln!(s, "T-width = {}", self.t_width);
        let _ = writeln!(s, "T-degree = {}", self.t_degree);
        let _ = writeln!(s, "T-blocks = {}", self.t_blocks);
        let _ = writeln!(s, "T-block-layers = {}", self.t_block_layers);
        let _ = writeln!(s, "S-width = {}", self.s_width);
        let _ = writeln!(s, "S-blocks = {}", self.s_blocks);
        let _ = writeln!(s, "S-block-layers = {}", self.s_block_layers);
        let _ = writeln!(s, "ablate-stacks = {}", join(&self.ablate_stacks));
        let _ = writeln!(s, "ablate-sizes = {}", join(&self.ablate_sizes));
        s
    }

    /// The model architecture for a given horizon and lookback multiple.
    pub fn model_config(&self, horizon: usize, lookback: usize) -> ModelConfig {
        let mut cfg = match self.preset {
            Preset::Generic => generic_config(
                horizon,
                lookback,
                self.stacks,
                self.blocks,
                self.width,
                self.block_layers,
                self.sharing,
            ),
            Preset::Interpretable => interpretable_config(
                horizon,
                lookback,
                self.t_blocks,
                self.t_width,
                self.t_degree,
                self.t_block_layers,
                self.s_blocks,
                self.s_width,
                self.s_block_layers,
            ),
        };
        cfg.topology = self.topology;
        cfg
    }

    pub fn train_plan(&self, loss: LossKind, lookback: usize) -> TrainPlan {
        let mut plan = TrainPlan::new(self.iterations, self.l_h, loss, lookback, self.seed);
        plan.batch_size = self.batch;
        plan
    }

    pub fn member_count(&self) -> usize {
        self.losses.len() * self.lookbacks.len() * self.repeats
    }
}
