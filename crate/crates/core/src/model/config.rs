//! Architecture description: basis choice, block and stack shapes, topology.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasisKind {
    /// Learned linear basis with additive bias on both branches.
    Generic,
    /// Fixed polynomial basis of the given degree, no bias.
    Trend { degree: usize },
    /// Fixed harmonic basis (constant plus paired cos/sin columns), no bias.
    Seasonality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub backcast_len: usize,
    pub forecast_len: usize,
}

/// Number of harmonic columns on a grid of `len` points: a constant column
/// plus floor(len/2 - 1) cos/sin pairs.
pub fn fourier_dim(len: usize) -> usize {
    2 * (len / 2).saturating_sub(1) + 1
}

impl BasisSpec {
    pub fn theta_f_dim(&self) -> usize {
        match self.kind {
            BasisKind::Generic => self.forecast_len,
            BasisKind::Trend { degree } => degree + 1,
            BasisKind::Seasonality => fourier_dim(self.forecast_len),
        }
    }

    pub fn theta_b_dim(&self) -> usize {
        match self.kind {
            BasisKind::Generic => self.backcast_len,
            BasisKind::Trend { degree } => degree + 1,
            BasisKind::Seasonality => fourier_dim(self.backcast_len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub width: usize,
    pub fc_layers: usize,
    pub basis: BasisSpec,
    pub theta_f_dim: usize,
    pub theta_b_dim: usize,
}

impl BlockConfig {
    /// Block with theta dimensions derived from the basis. For the generic
    /// basis the expansion dimensions default to the output lengths.
    pub fn new(width: usize, fc_layers: usize, basis: BasisSpec) -> Self {
        let theta_f_dim = basis.theta_f_dim();
        let theta_b_dim = basis.theta_b_dim();
        BlockConfig {
            width,
            fc_layers,
            basis,
            theta_f_dim,
            theta_b_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fc_layers == 0 {
            return Err(Error::invalid("BlockConfig", "fc_layers must be >= 1"));
        }
        if self.width == 0 {
            return Err(Error::invalid("BlockConfig", "width must be >= 1"));
        }
        if self.basis.forecast_len == 0 || self.basis.backcast_len == 0 {
            return Err(Error::invalid(
                "BlockConfig",
                "backcast and forecast lengths must be >= 1",
            ));
        }
        match self.basis.kind {
            BasisKind::Generic => {}
            _ => {
                if self.theta_f_dim != self.basis.theta_f_dim()
                    || self.theta_b_dim != self.basis.theta_b_dim()
                {
                    return Err(Error::invalid(
                        "BlockConfig",
                        format!(
                            "fixed basis requires theta dims ({}, {}), got ({}, {})",
                            self.basis.theta_f_dim(),
                            self.basis.theta_b_dim(),
                            self.theta_f_dim,
                            self.theta_b_dim
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    pub blocks: usize,
    pub block: BlockConfig,
    pub share_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    Dress,
    Parallel,
    NoResidual,
    LastForward,
    NoResidualLastForward,
    ResidualInput,
}

impl Topology {
    pub const ALL: [Topology; 6] = [
        Topology::Dress,
        Topology::Parallel,
        Topology::NoResidual,
        Topology::LastForward,
        Topology::NoResidualLastForward,
        Topology::ResidualInput,
    ];

    pub fn parse(s: &str) -> Result<Topology> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "DRESS" => Ok(Topology::Dress),
            "PARALLEL" => Ok(Topology::Parallel),
            "NO-RESIDUAL" => Ok(Topology::NoResidual),
            "LAST-FORWARD" => Ok(Topology::LastForward),
            "NO-RESIDUAL-LAST-FORWARD" => Ok(Topology::NoResidualLastForward),
            "RESIDUAL-INPUT" => Ok(Topology::ResidualInput),
            other => Err(Error::invalid(
                "Topology",
                format!("unknown topology {other:?}"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Dress => "DRESS",
            Topology::Parallel => "PARALLEL",
            Topology::NoResidual => "NO-RESIDUAL",
            Topology::LastForward => "LAST-FORWARD",
            Topology::NoResidualLastForward => "NO-RESIDUAL-LAST-FORWARD",
            Topology::ResidualInput => "RESIDUAL-INPUT",
        }
    }

    /// Whether every block's partial forecast is summed into the model
    /// forecast, or only the last block's.
    pub fn sums_partials(&self) -> bool {
        !matches!(
            self,
            Topology::LastForward | Topology::NoResidualLastForward
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub stacks: Vec<StackConfig>,
    pub topology: Topology,
    pub lookback_multiple: usize,
    pub horizon: usize,
}

impl ModelConfig {
    pub fn input_len(&self) -> usize {
        self.lookback_multiple * self.horizon
    }

    pub fn total_blocks(&self) -> usize {
        self.stacks.iter().map(|s| s.blocks).sum()
    }

    /// The same architecture with a different lookback multiple: basis
    /// lengths are rebuilt and derived theta dimensions recomputed.
    pub fn with_lookback(&self, lookback_multiple: usize) -> ModelConfig {
        let backcast_len = lookback_multiple * self.horizon;
        let stacks = self
            .stacks
            .iter()
            .map(|s| {
                let basis = BasisSpec {
                    kind: s.block.basis.kind.clone(),
                    backcast_len,
                    forecast_len: s.block.basis.forecast_len,
                };
                StackConfig {
                    blocks: s.blocks,
                    block: BlockConfig::new(s.block.width, s.block.fc_layers, basis),
                    share_weights: s.share_weights,
                }
            })
            .collect();
        ModelConfig {
            stacks,
            topology: self.topology,
            lookback_multiple,
            horizon: self.horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stacks.is_empty() {
            return Err(Error::invalid("ModelConfig", "at least one stack"));
        }
        if !(2..=7).contains(&self.lookback_multiple) {
            return Err(Error::invalid(
                "ModelConfig",
                format!("lookback_multiple {} outside 2..7", self.lookback_multiple),
            ));
        }
        for s in &self.stacks {
            if s.blocks == 0 {
                return Err(Error::invalid("ModelConfig", "stack with zero blocks"));
            }
            s.block.validate()?;
            if s.block.basis.forecast_len != self.horizon
                || s.block.basis.backcast_len != self.input_len()
            {
                return Err(Error::invalid(
                    "ModelConfig",
                    format!(
                        "stack basis lengths ({}, {}) do not match model ({}, {})",
                        s.block.basis.backcast_len,
                        s.block.basis.forecast_len,
                        self.input_len(),
                        self.horizon
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Generic configuration: `stacks` one-block stacks of learned-basis blocks,
/// no weight sharing.
pub fn generic_config(
    horizon: usize,
    lookback_multiple: usize,
    stacks: usize,
    blocks: usize,
    width: usize,
    fc_layers: usize,
    share_weights: bool,
) -> ModelConfig {
    let backcast_len = lookback_multiple * horizon;
    let basis = BasisSpec {
        kind: BasisKind::Generic,
        backcast_len,
        forecast_len: horizon,
    };
    let stack = StackConfig {
        blocks,
        block: BlockConfig::new(width, fc_layers, basis),
        share_weights,
    };
    ModelConfig {
        stacks: vec![stack; stacks],
        topology: Topology::Dress,
        lookback_multiple,
        horizon,
    }
}

/// Interpretable configuration: a polynomial-basis stack followed by a
/// harmonic-basis stack, weights shared within each stack.
#[allow(clippy::too_many_arguments)]
pub fn interpretable_config(
    horizon: usize,
    lookback_multiple: usize,
    trend_blocks: usize,
    trend_width: usize,
    trend_degree: usize,
    trend_layers: usize,
    seasonality_blocks: usize,
    seasonality_width: usize,
    seasonality_layers: usize,
) -> ModelConfig {
    let backcast_len = lookback_multiple * horizon;
    let mut stacks = Vec::new();
    if trend_blocks > 0 {
        stacks.push(StackConfig {
            blocks: trend_blocks,
            block: BlockConfig::new(
                trend_width,
                trend_layers,
                BasisSpec {
                    kind: BasisKind::Trend {
                        degree: trend_degree,
                    },
                    backcast_len,
                    forecast_len: horizon,
                },
            ),
            share_weights: true,
        });
    }
    if seasonality_blocks > 0 {
        stacks.push(StackConfig {
            blocks: seasonality_blocks,
            block: BlockConfig::new(
                seasonality_width,
                seasonality_layers,
                BasisSpec {
                    kind: BasisKind::Seasonality,
                    backcast_len,
                    forecast_len: horizon,
                },
            ),
            share_weights: true,
        });
    }
    ModelConfig {
        stacks,
        topology: Topology::Dress,
        lookback_multiple,
        horizon,
    }
}
