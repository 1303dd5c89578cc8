//! Configuration, raw-frame format, fix sentence protocol, mission runners,
//! and the sweep harness around the r2usbl-core receive chain.

pub mod artifacts;
pub mod config;
pub mod output;
pub mod rawfile;
pub mod runner;
pub mod scene;
pub mod sentence;
pub mod sweep;
