pub mod callorder;
pub mod cfront;
pub mod contract;
pub mod critics;
pub mod dataflow;
pub mod sig;
pub mod report;
pub mod source;
pub mod rules;
pub mod run;
