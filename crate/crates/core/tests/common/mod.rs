//! Independent reference implementations shared by integration tests and
//! the acceptance harness.
#![allow(dead_code)]

pub mod fd;
pub mod qp;
pub mod graph;
pub mod suites;
