//! Measure how far apart different bibliometric databases' SDG
//! classifications are: build a joint DOI index, classify per source, compute
//! Venn overlaps, train one language model per (SDG, source), decode a shared
//! prompt set and compare the noun phrases that come back.

pub mod classify;
pub mod corpus;
pub mod decoding;
pub mod error;
pub mod exec;
pub mod lm;
pub mod overlap;
pub mod phrases;
pub mod pipeline;
pub mod query;
pub mod report;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
