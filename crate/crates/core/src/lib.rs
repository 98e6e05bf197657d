//! Visual preference inference for tabletop rearrangement.

pub mod baselines;
pub mod bench;
pub mod catalog;
pub mod covr;
pub mod episode;
pub mod method;
pub mod metrics;
pub mod render;
pub mod residual;
pub mod scene;
pub mod scenegen;
