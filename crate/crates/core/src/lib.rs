#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bessel;
pub mod depth;
pub mod empirical;
pub mod error;
pub mod oracle;
pub mod par;
pub mod quad;
pub mod rates;
pub mod scaling;
pub mod simulator;
pub mod stats;

pub use analytic::{QueueStart, TailCase, TailForm, TailRegime};
pub use depth::DepthDistribution;
pub use error::{Error, Result};
pub use par::Backend;
pub use rates::{CumulativeClock, RateForm, RateSpec};
pub use simulator::{BookConfig, PricePath, StopRule};
