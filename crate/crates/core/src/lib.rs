//! Rule-based rug pull detection over raw on-chain token history.

pub mod cli;
pub mod config;
pub mod detector;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod fixed;
pub mod model;
pub mod naming;
pub mod profits;
pub mod report;
pub mod stats;
pub mod syndicates;
pub mod synth;

pub use detector::{classify, Evidence, Outcome, RugKind, Verdict};
pub use fixed::Fixed;
pub use model::{DetectorParams, TokenRecord};
