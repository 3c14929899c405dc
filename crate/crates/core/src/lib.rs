//! Zero-shot claim verification with relation extraction, relation closure
//! and evidence reorganization in front of an instruction-tuned LLM.

pub mod cli;
pub mod closure;
pub mod datasets;
pub mod evalkit;
pub mod gateway;
pub mod pipeline;
pub mod prompts;
pub mod relation;
pub mod stub;

pub use prompts::Verdict;
