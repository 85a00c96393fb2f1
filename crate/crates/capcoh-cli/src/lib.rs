//! Library surface of the `capcoh` command: scenario config files, experiment
//! orchestration, and result reporting. The binary is a thin dispatcher over
//! these modules, and the integration tests drive them directly.

pub mod config;
pub mod experiment;
pub mod report;
