#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conv_metrics;
pub mod corpus;
pub mod emo_eval;
pub mod error;
pub mod features;
pub mod ranker;
pub mod signal;

pub use error::{Error, Result};
