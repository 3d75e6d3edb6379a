//! Core library for token-level code-switching annotation of Arabic text.

pub mod agreement;
pub mod corpusstore;
pub mod crowd;
pub mod error;
pub mod platform;
pub mod pretag;
pub mod tagschema;
pub mod workflow;

pub use error::{Error, Result};
