//! Monotone finite-volume solver on periodic grids over `[0,1)^d`.

mod grid;
mod kernel;
mod scheme;
mod state;

pub use grid::{memory_cap_mb, TorusGrid, MEM_CAP_ENV};
pub use kernel::{godunov_flux, llf_flux, ScalarKernel};
pub use scheme::{advance, cfl_dt, entropy_residual, step_with_dt, FluxRule, SchemeConfig};
pub use state::{l1_deviation, l1_distance, mean_mass, GridState, RunDiagnostics, SnapshotMeta};
