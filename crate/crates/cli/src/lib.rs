//! The `patland` command line and annotation service.

pub mod commands;
pub mod config;
pub mod service;
