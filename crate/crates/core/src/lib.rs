pub mod audit;
pub mod builtin;
pub mod coupled;
pub mod discretization;
pub mod error;
pub mod field;
pub mod grid;
pub mod ladder;
pub mod problem;
pub mod report;
pub mod truncation;
pub mod mms;
