//! Planning and state-estimation toolkit for 2D robot soccer.
//!
//! The crate provides four building blocks that compose into a strategy
//! stack for a soccer-playing robot on a rectangular field:
//!
//! * [`field`]: field geometry, grid discretization and ball-motion
//!   classification (in play, goal, out of field with re-entry point).
//! * [`planner`]: an undiscounted shortest-time Markov decision process
//!   over ball cells. Offline value iteration produces a time-to-score
//!   value function; the online policy re-evaluates the same model one
//!   step deep with game-context shaping (restart rules, teammates,
//!   opponents).
//! * [`localization`]: a 3-DOF Monte-Carlo localizer (particle filter)
//!   driven by odometry deltas and landmark bearing/distance sightings.
//! * [`clustering`]: weighted expectation-maximization over particle
//!   positions, variance-driven selection of the mixture size, and a
//!   compact fixed-point wire format for sharing belief summaries.
//!
//! The crate is `no_std` compatible (with `alloc`); the `std` feature
//! (default) only widens error types and dependency features.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// Negated float comparisons are parameter guards that must reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod angles;
pub mod belief;
pub mod clustering;
pub mod field;
pub mod geom;
pub mod localization;
pub mod planner;

pub use belief::{belief_size, deserialize_belief, serialize_belief, BeliefError, BELIEF_MAGIC};
pub use clustering::{
    em_fit, internal_variance, select_k, Cluster, ClusteringError, ClusteringResult, EmFit,
    COV_REGULARIZATION, MAX_CLUSTERS,
};
pub use field::{BallOutcome, CellId, FieldError, FieldSpec, Landmark, LandmarkClass};
pub use geom::{Point2, Pose};
pub use localization::{
    effective_sample_size, LocalizationError, McLocalizer, NoiseConfig, ObservationSample,
    OdometryDelta, Particle, ParticleSet, DEFAULT_PARTICLE_COUNT,
};
pub use planner::{
    choose_action, greedy_action, shaped_cost, solve_value_function, time_to_reach,
    transition_distribution, ActionScore, ActionSet, ApproachModel, Decision, GameContext,
    KickAction, KickModel, PlannerError, RestartState, RewardParams, SolveOutcome,
    TransitionDistribution, ValueFunction, TRUNCATION_SIGMAS,
};
