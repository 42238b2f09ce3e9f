//! Discrete-grid engine for game-theoretic Brownian motion.
//!
//! Sceptic's capital processes in the Lévy game and the modified Lévy game
//! are evaluated on sampled continuous paths ([`path`], [`game`]). The
//! [`strategies`] module builds the explicit betting strategies behind the
//! modulus-of-continuity and quadratic-variation bounds, [`heat`] builds the
//! heat-equation superhedge for cylinder functionals, and [`wiener`] supplies
//! seeded Brownian paths and Monte Carlo baselines.

pub mod error;
pub mod game;
pub mod harness;
pub mod heat;
pub mod path;
pub mod strategies;
pub mod wiener;

pub use error::{Error, Result};
pub use game::{
    combine, convert_modified_to_levy, evaluate_capital, evaluate_capital_from, CapitalTrajectory,
    CompoundStrategy, ElementaryStrategy, GameKind, StakeDecision, Stakes,
};
pub use path::{SampledPath, TimeGrid};
