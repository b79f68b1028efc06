pub mod corpus;
pub mod graph;
pub mod features;
pub mod svm;
pub mod neural;
pub mod active;
pub mod eval;
pub mod models;
pub mod synth;
