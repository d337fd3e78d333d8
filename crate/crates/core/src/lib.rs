pub mod analysis;
pub mod channel;
pub mod dcaim;
pub mod energy;
pub mod error;
pub mod harness;
pub mod mac;
pub mod rng;
pub mod scenario;
pub mod topology;

pub use error::{Error, Result};
