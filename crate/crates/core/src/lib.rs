//! Search-and-rescue POMDP planning with contrastive explanations.
//!
//! The crate solves grid search-and-rescue POMDPs, evaluates the discounted
//! feature expectations of closed-loop policies and of user-drawn open-loop
//! paths, and turns the contrast between the two into a short templated
//! explanation.

pub mod counterfactual;
pub mod explain;
pub mod features;
pub mod pomdp;
pub mod sar;
pub mod scenario;
pub mod simulate;
pub mod solver;
pub mod workflow;

pub use pomdp::{DiscreteDistribution, FactoredPomdp, PomdpError, TerminalCause};
pub use sar::{Action, Cell, FeatureVector, FeatureWeights, Observation, SarBelief, SarState, Scenario};
pub use solver::{solve, AlphaPolicy, SarPolicy, SolverConfig, SolverError};
