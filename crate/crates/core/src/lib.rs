//! Low-adaptivity maximization of non-negative, possibly non-monotone
//! submodular functions under p-system and p-extendible constraints.
//!
//! Every objective and constraint evaluation goes through a [`Session`],
//! which batches queries and counts adaptive rounds in a [`RunLedger`].

pub mod baselines;
pub mod constraints;
pub mod error;
pub mod exhaustive;
pub mod objectives;
pub mod oracle;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use oracle::{
    ElementId, GroundSet, Incumbent, IndependenceSystem, Marginals, RunLedger, Session, SolutionSet, SubmodularFn,
};
pub use rng::StreamSeed;
pub use sampling::{rep_sampling, RunResult, SamplingParams, Tracer};
