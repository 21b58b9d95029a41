//! Shared fixtures for the benchmark targets.

use geogame_core::{AgentParams, GameParams, StrategyProfile};

/// The homogeneous baseline used throughout the benchmarks.
pub fn baseline(n_agents: usize) -> (GameParams, StrategyProfile) {
    let agent = AgentParams {
        gamma: 0.1,
        mu: 0.2,
        nu: 0.1,
        theta: 1.0,
        eta: 0.5,
        q0: 1.0,
    };
    let params = GameParams::homogeneous(agent, n_agents, 0.05).expect("valid baseline");
    let profile = StrategyProfile::constant(0.03, n_agents).expect("valid profile");
    (params, profile)
}
