pub mod arithmetic;
pub mod cocycle;
pub mod correlator;
pub mod dd;
pub mod error;
pub mod localization;
pub mod operator;
pub mod resonance;
pub mod sum;

pub use arithmetic::{AlphaSource, Frequency};
pub use error::{Error, Result};
pub use operator::{EigenSystem, ModelParams, SymTridiagonal, Window};
pub use resonance::IntervalSet;
