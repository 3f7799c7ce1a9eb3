//! Diffusive quorum sensing among randomly placed bacteria in two dimensions:
//! expected molecule counts, cooperation probabilities, statistics of the
//! number of cooperators, and a particle simulator to check them against.

pub mod channel;
pub mod cooperation;
pub mod error;
pub mod params;
pub mod pointprocess;
pub mod popstats;
pub mod quadrature;
pub mod simulator;
pub mod specfun;

pub use error::{Error, Result};
pub use params::{validate, EnvParams, EnvSpec, GeometryTerms, Point2, Purpose};
