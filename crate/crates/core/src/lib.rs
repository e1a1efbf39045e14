//! Toolchain for building HDL debugging datasets from Git hosting history.
//!
//! The crate is split along the data flow:
//!
//! - [`vcs`] talks to the hosting REST API (with on-disk caching and replay),
//! - [`hdl`] screens changes down to (System)Verilog and provides the lexer,
//!   normalizer, preprocessor and FSM extractor,
//! - [`dataset`] cleans, enhances and splits the design pairs,
//! - [`metrics`] holds tokenizers and the ROUGE suite,
//! - [`eval`] drives model adapters and writes score reports,
//! - [`finetune`] is the adapter-only training loop on a toy model,
//! - [`pipeline`] wires everything into the command-line workflow.

pub mod dataset;
pub mod eval;
pub mod finetune;
pub mod hdl;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod vcs;

pub(crate) mod util;
