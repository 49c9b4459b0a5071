//! SLA-aware traffic steering for a two-path (fiber + satellite) backhaul.
//!
//! Two independent agents (downlink and uplink) each choose per-slice NTN
//! allocation fractions. Their payoffs share a quadratic oversubscription
//! penalty, which makes the interaction an exact potential game with a unique
//! pure Nash equilibrium; best-response iteration converges to it.
//!
//! The crate provides:
//!
//! - [`game`]: per-slice utilities, link demands, the coupling penalty,
//!   agent payoffs, the potential function and its analytic gradient;
//! - [`solver`]: per-agent best responses, best-response iteration,
//!   equilibrium and concavity verification;
//! - [`baselines`]: equal split, weighted round robin, random, and an
//!   SLA-aware redistribution heuristic;
//! - [`sim`]: a deterministic discrete-time fluid-flow simulator with
//!   non-stationary traffic, decentralized observation and SLA accounting;
//! - [`metrics`]: traffic-weighted RTT, loss, throughput, Jain fairness and
//!   per-slice SLA violation rates;
//! - [`verify`]: the numerical property suite (exact-potential identity,
//!   gradient check, concavity eigencheck, grid-oracle equivalence).

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod game;
pub mod link;
pub mod metrics;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod synth;
pub mod traffic;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use types::{
    Agent, AllocationVector, GameState, LinkTelemetry, SlaProfile, SliceClass, SliceSpec,
    UtilityWeights,
};
