//! Stochastic N-player environmental-asset game.
//!
//! Each of N locations depletes a local environmental asset that follows
//! geometric Brownian motion with common and idiosyncratic noise; agents
//! value their own consumption, their local asset, and a geometric-mean
//! global index, all in logs. The crate provides:
//!
//! - [`model`]: parameters, utility conventions, the geometric-mean
//!   aggregate, and the exact log-dynamics of the leave-one-out aggregate;
//! - [`equilibria`]: closed forms for the feedback and precommitted Nash
//!   rates, the planner rate, the aligning consumption tax, growth rates,
//!   the welfare gap, and all log-linear value coefficients;
//! - [`sim`]: exact lognormal path ensembles (counter-based, bit
//!   reproducible), Monte Carlo payoff estimation with explicit truncation
//!   and quadrature bounds, aggregate statistics, empirical measures;
//! - [`verify`]: the analytic payoff oracle, derivative-free best
//!   responses, unilateral-deviation audits, stationary-equation residuals,
//!   the adjoint-system check, and the monotonicity form;
//! - [`mfg`]: the identical-agent limit value, the projected N-player
//!   value, and the O(1/N) convergence experiment;
//! - [`measure`]: finitely supported probability measures on (0, inf);
//! - [`rng`]: the counter-based normal generator.

pub mod equilibria;
pub mod error;
pub mod measure;
pub mod mfg;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod sim;
pub mod verify;

pub use equilibria::{
    EquilibriumReport, GameCoefficients, MasterCoefficients, PlannerCoefficients,
};
pub use error::{Error, Result};
pub use measure::DiscreteMeasure;
pub use model::{
    AgentParams, AggregateCoeffs, GameParams, HomogeneousParams, StrategyProfile,
    UtilityConvention,
};
pub use sim::{
    AggregateStats, PathEnsemble, PayoffEstimate, PayoffTarget, SamplingScheme, TimeGrid,
};
pub use verify::{AdjointReport, NashGapReport};
