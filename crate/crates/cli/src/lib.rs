//! Command-line front end for the minutekit pipeline.

pub mod app;
pub mod backends;
pub mod config;
pub mod error;
pub mod manifest;
pub mod model;
pub mod pipeline;
