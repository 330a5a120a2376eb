//! HTTP service, file store and command-line interface around
//! [`sar_contrast`].

pub mod api;
pub mod cli;
pub mod store;
