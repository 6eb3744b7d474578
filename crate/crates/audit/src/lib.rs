//! Storage, configuration, live access and the pipeline commands built on
//! `recaudit-core`.

pub mod bundle;
pub mod config;
pub mod error;
pub mod lexicon;
pub mod live;
pub mod manifest;
pub mod pipeline;
pub mod store;

pub use error::{AppError, Result};
