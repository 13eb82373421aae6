//! Monte Carlo experiments, CSV records and the property suite.

pub mod codebooks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod props;
pub mod record;
