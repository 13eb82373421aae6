pub mod channel;
pub mod codebook;
pub mod error;
pub mod linalg;
pub mod oia;
pub mod receivers;
pub mod analysis;
pub mod rng;
