//! Pavlov (win-stay lose-shift) Prisoner's Dilemma dynamics on graphs under
//! adversarial scheduling.
//!
//! The system is a discrete dynamical system: each vertex of an undirected
//! graph carries a bit, and playing an edge replaces both endpoint labels by
//! their XOR. The all-zeros configuration is the unique fixed point, and the
//! central question is which schedulers (daemons) let the system reach it
//! from every start.
//!
//! The crate provides:
//! - [`graph`]: graph families, spanning trees, general matchings and the
//!   structural decompositions the schedules and strategies are built on;
//! - [`dynamics`]: the XOR update rule, trajectories and reachability;
//! - [`gf2`]: the linear-algebraic view of deterministic schedules (update
//!   matrices over GF(2), nilpotency, integer path-count matrices);
//! - [`schedulers`]: the scheduler taxonomy, fairness monitors, and the
//!   adversarial schedule constructions;
//! - [`strategies`]: scheduler-luck games and the luck player's winning
//!   partner-selection strategies;
//! - [`verify`]: exhaustive and statistical verification harnesses,
//!   including the convergence-round experiments.

pub mod dynamics;
pub mod gf2;
pub mod graph;
pub mod rng;
pub mod schedulers;
pub mod strategies;
pub mod verify;

pub use dynamics::Configuration;
pub use graph::{Family, Graph, Matching, RootedTree, StarDecomposition};
pub use schedulers::{Decision, Scheduler, SchedulerKind};
pub use strategies::LuckStrategy;
