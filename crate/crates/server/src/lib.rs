//! HTTP service and command line for the portal.

pub mod api;
pub mod cli;
pub mod config;
