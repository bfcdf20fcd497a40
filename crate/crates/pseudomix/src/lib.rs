//! File formats, toy-language data generation, translation drivers, and the
//! experiment pipeline built on top of `pseudomix-core`.

pub mod cli;
pub mod experiment;
pub mod textio;
pub mod toylang;
pub mod translator;
