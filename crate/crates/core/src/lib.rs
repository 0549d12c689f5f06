//! Policy-gradient learning of rule weights for fuzzy controllers.
//!
//! A rule base defines an energy over a discrete output grid; its Boltzmann
//! distribution is a stochastic policy whose log-derivative with respect to
//! the rule weights drives an episodic REINFORCE update. The smoothed variant
//! samples around the policy's gravity center with a penalty on output
//! changes between steps. [`car`] supplies the car-following testbed and
//! [`experiment`] the repeated learning runs over it.

pub mod car;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod fuzzy;
pub mod gradient;
pub mod oracle;

pub use error::{Error, Result};
