pub mod coverage;
pub mod gen;
pub mod outcome;
pub mod param;
pub mod targets;
pub mod engine;
pub mod experiment;
