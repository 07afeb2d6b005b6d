//! Agent-based simulator of skyscraper evacuation.
//!
//! Pedestrians follow the social-force model: a driving term that relaxes
//! each agent's velocity toward a desired direction, plus repulsive social
//! and contact forces from other agents and from walls. Desired directions
//! come from precomputed per-cell flow fields over discretized floor plans.
//! A building is a two-floor unit cell (upper floor, staircase channel,
//! lower floor) optionally replicated into an N-floor stack, and a
//! continuity-equation scheduler staggers per-floor evacuation start times
//! to keep staircase density constant.
//!
//! The crate exposes the full pipeline: geometry construction
//! ([`building`]), guidance fields ([`flowfield`]), force integration
//! ([`dynamics`]), start-time scheduling ([`scheduler`]), force/evacuation
//! metrics ([`metrics`]), and the scenario-file driven experiment runner
//! ([`scenario`], [`experiment`]). The `evacsim` binary wraps the runner in
//! a CLI; see the book under `book/` for a guided tour.

pub mod building;
pub mod cli;
pub mod dynamics;
pub mod experiment;
pub mod flowfield;
pub mod metrics;
pub mod output;
pub mod scenario;
pub mod scheduler;
pub mod vec2;

pub use vec2::Vec2;
