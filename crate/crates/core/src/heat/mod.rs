//! Superreplication of cylinder functionals by the heat-equation hedge.

pub mod functional;
pub mod hedge;
pub mod hermite;
pub mod jet;
pub mod value;

pub use functional::{CylinderFunctional, Factor, FunctionalSpec, Generator};
pub use hedge::{
    hedge_strategy, hedge_strategy_levy, run_hedge, HedgeOutcome, HedgePlan, HedgeStrategy,
    HedgeSummary, ShortfallStats,
};
pub use hermite::GaussHermite;
pub use jet::Jet;
pub use value::{replication_price, Greeks, HeatTerms, ValueFunction, DEFAULT_DIM_CAP, DEFAULT_NODES};
