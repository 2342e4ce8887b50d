//! Social-bias probing for Text-to-SQL.
//!
//! The crate builds benchmark variants of a Spider-format corpus by adding
//! demographic columns to human-relevant tables and judgmental modifiers to
//! human-relevant questions, then scores model predictions against them.
//!
//! Modules follow the pipeline order:
//! [`spider`] loads corpora, [`relevance`] decides which tables and questions
//! concern people, [`builder`] produces the benchmark, [`sqlparse`] reads
//! predicted SQL and [`evaluate`] computes Bias Score and exact-match
//! accuracy. [`commands`] wires them together for the command-line tool.

pub mod builder;
pub mod commands;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod lexicon;
pub mod relevance;
pub mod spider;
pub mod sqlparse;
pub mod text;

pub use error::{Error, Result};
