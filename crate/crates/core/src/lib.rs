//! Skill-relatedness networks, ownership-partitioned industrial cohesion and
//! fixed-effects probit models of regional industry entry and exit.

pub mod analytics;
pub mod cohesion;
pub mod econometrics;
pub mod error;
pub mod format;
pub mod ingest;
pub mod panel;
pub mod pipeline;
pub mod relatedness;
pub mod synth;

pub use error::{Error, Result};
