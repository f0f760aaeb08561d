//! Simulation library for cascading bandits.
//!
//! A learning agent recommends an ordered list of `K` items out of `L`.
//! The simulated user scans the list top-down and clicks the first
//! attractive item, so only the prefix up to the click is observed. This
//! crate provides:
//!
//! - [`model`]: items, lists, click feedback, the list reward and regret.
//! - [`estimation`]: running means, the UCB1 radius and the KL-UCB index.
//! - [`env`]: the Bernoulli cascade user, the DBN user and the `B_LB`
//!   synthetic problem family.
//! - [`policy`]: CascadeUCB1, CascadeKL-UCB, RankedKL-UCB and a static oracle.
//! - [`bounds`]: closed-form regret bounds and exhaustive checks of the
//!   product decomposition and the KL peeling inequality.
//! - [`harness`]: configs, seeded multi-run experiments, CSV output and the
//!   predefined reproduction suites used by the CLI.

pub mod bounds;
pub mod env;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod model;
pub mod policy;
pub mod rng;
pub mod selfcheck;

pub use error::{Error, Result};
pub use model::{
    AttractionModel, CascadeFeedback, ItemId, Recommendation, WeightVector,
};
