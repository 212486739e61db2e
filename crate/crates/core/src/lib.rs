pub mod cli;
pub mod credit_audit;
pub mod io;
pub mod mechanisms;
pub mod metrics;
pub mod model;
pub mod num;
pub mod pswc;
pub mod repro;
pub mod workloads;
