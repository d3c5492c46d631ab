//! Collective-spin (Lipkin-Meshkov-Glick) models for adiabatic preparation of
//! entangled states, with gap bounds and a trapped-ion realization.

pub mod adiabatic;
pub mod error;
pub mod gapbounds;
pub mod iontrap;
pub mod linalg;
pub mod lmg;
pub mod spinops;

pub use error::{Error, Result};
pub use lmg::{CaseLabel, LmgParams, TransferCase};
pub use spinops::{Axis, Basis, DickeBasis, Operator, Spin, StateVector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
