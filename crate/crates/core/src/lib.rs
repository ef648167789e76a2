//! A generic distributed Bellman-Ford routing kernel.
//!
//! The crate models a routing problem as an algebra of path-weights with a
//! choice operator and per-edge policy functions, runs the protocol both
//! synchronously and under fully asynchronous schedules with unreliable
//! message delivery, and provides the machinery to analyse convergence:
//! axiom and property checkers, network freeness, dislodgement heights,
//! dissimilarity functions and contraction checks.

pub mod algebra;
pub mod asyncsim;
pub mod bgplite;
pub mod cli;
pub mod convergence;
pub mod pathalg;
pub mod protocol;
pub mod topology;
