pub mod agent;
pub mod belief;
pub mod error;
pub mod harness;
pub mod intention;
pub mod kitchen;
pub mod mentalizer;
pub mod par;
pub mod planner;

pub use error::{Error, Result};
