pub mod acquisition;
pub mod error;
pub mod http;
pub mod learner;
pub mod math;
pub mod prefmodel;
pub mod seeding;
pub mod session;
pub mod signal;
pub mod simulator;

pub use error::{Error, Result};
