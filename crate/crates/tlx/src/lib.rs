//! Storage, wire formats, HTTP service and CLI around `tlx-core`.

pub mod cli;
pub mod docs;
pub mod report;
pub mod service;
pub mod simulate;
pub mod store;
pub mod wire;
