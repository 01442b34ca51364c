//! Order batching and sequencing for a hybrid warehouse that combines
//! picker-to-goods (PtG) shelving with a goods-to-person (GtP) shuttle
//! system.
//!
//! The crate models a single dispatching window as a semi-Markov decision
//! process. A discrete-event simulator ([`sim`]) tracks orders, pickers,
//! shuttles and consolidation workstations; the environment layer ([`env`])
//! exposes a 23-component state vector and 31 dispatch actions on top of it;
//! [`ppo`] trains an actor-critic policy against the environment, while
//! [`heuristics`] provides the classical batching and sequencing baselines
//! the policy is benchmarked against. [`instance`] generates seeded problem
//! instances and [`config`] holds the experiment configuration shared by the
//! command-line tools.

pub mod config;
pub mod env;
pub mod fsio;
pub mod heuristics;
pub mod instance;
pub mod nn;
pub mod ppo;
pub mod seeds;
pub mod sim;
