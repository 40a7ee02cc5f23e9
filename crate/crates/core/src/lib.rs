pub mod changevars;
pub mod cli;
pub mod error;
pub mod hodge;
pub mod kpcheck;
pub mod partitions;
pub mod rational;
pub mod series;
pub mod spectral;
pub mod tau;

pub use error::{Error, Result};
pub use rational::Q;
