//! The forecasting architecture: basis constructors, blocks, residual
//! stacking topologies, parameter initialization and weight serialization.

pub mod basis;
pub mod config;
pub mod forward;
pub mod io;
pub mod params;

pub use basis::{make_fourier_basis, make_trend_basis};
pub use config::{
    fourier_dim, generic_config, interpretable_config, BasisKind, BasisSpec, BlockConfig,
    ModelConfig, StackConfig, Topology,
};
pub use forward::{
    block_forward, forward_batch, model_backward, model_forward, topology_forward, BlockCache,
    ForwardTrace, StackBases,
};
pub use io::{load_params, save_params};
pub use params::{init_params, tensor_key, ParamStore};
