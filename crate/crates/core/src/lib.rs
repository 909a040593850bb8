//! Compiles small quantized ReLU networks into hybrid programs: sign
//! conditions that provably fix the output class are checked first and
//! exit early, everything else falls back to the full network.

pub mod codegen;
pub mod cost;
pub mod dataset;
pub mod feas;
pub mod fixtures;
pub mod flow;
pub mod iis;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod tree;
