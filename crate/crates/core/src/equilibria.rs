//! Closed-form equilibrium objects: depletion rates for the competitive
//! (feedback and precommitted) and cooperative solutions, the aligning tax,
//! growth rates, the welfare gap between planner and competition, and the
//! log-linear value-function coefficients of all three control problems.
//!
//! Rates:
//!
//! ```text
//! feedback (closed loop):   alpha_CL_i = rho / (1 + theta_i + eta_i/N)
//! precommitted (open loop): alpha_OL_i = rho / (1 + theta_i)
//! planner:                  alpha_SP_i = rho / (1 + theta_i + eta_bar)
//! aligning tax:             tau_i      = (eta_bar - eta_i/N) / rho
//! taxed feedback:           alpha_i(tau) = 1 / (tau + (1 + theta_i + eta_i/N)/rho)
//! ```
//!
//! Value functions are log-linear, `a ln q + b ln qhat + c`. The constant
//! `c` is always derived here as the unique constant zeroing the associated
//! stationary PDE residual (the non-constant coefficients vanish by the
//! choice of `a` and `b`, so `c` is pinned). Each coefficient set also
//! carries `c_direct`, the constant assembled from the direct closed-form
//! expression, so any disagreement between the two derivations is
//! observable rather than silently absorbed.

use crate::error::{Error, Result};
use crate::model::{aggregate_coeffs, GameParams, StrategyProfile};
use crate::numeric::neumaier_sum;

/// Feedback-equilibrium depletion rate `rho / (1 + theta_i + eta_i/N)`.
pub fn closed_loop_rate(index: usize, params: &GameParams) -> Result<f64> {
    let agent = params.agent(index)?;
    Ok(params.rho() / (1.0 + agent.theta + agent.eta / params.n_agents() as f64))
}

/// Precommitted-equilibrium depletion rate `rho / (1 + theta_i)`;
/// independent of the global-preference weight and of N.
pub fn open_loop_rate(index: usize, params: &GameParams) -> Result<f64> {
    let agent = params.agent(index)?;
    Ok(params.rho() / (1.0 + agent.theta))
}

/// Planner depletion rate `rho / (1 + theta_i + eta_bar)`.
pub fn social_planner_rate(index: usize, params: &GameParams) -> Result<f64> {
    let agent = params.agent(index)?;
    Ok(params.rho() / (1.0 + agent.theta + params.eta_bar()))
}

/// Consumption tax aligning the decentralized feedback rate with the
/// planner rate: `tau_i = (eta_bar - eta_i/N) / rho`.
pub fn pigouvian_tax(index: usize, params: &GameParams) -> Result<f64> {
    let agent = params.agent(index)?;
    Ok((params.eta_bar() - agent.eta / params.n_agents() as f64) / params.rho())
}

/// Feedback rate under a consumption tax `tau >= 0`:
/// `1 / (tau + (1 + theta_i + eta_i/N)/rho)`.
///
/// At `tau = pigouvian_tax(i)` this equals `social_planner_rate(i)` as an
/// algebraic identity.
pub fn taxed_closed_loop_rate(index: usize, tau: f64, params: &GameParams) -> Result<f64> {
    let agent = params.agent(index)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidTax(tau));
    }
    let w = 1.0 + agent.theta + agent.eta / params.n_agents() as f64;
    Ok(1.0 / (tau + w / params.rho()))
}

/// Expected log growth rate in location `i` under a constant rate:
/// `g_i = gamma_i - alpha - (mu_i^2 + nu_i^2)/2`.
pub fn expected_growth_rate(index: usize, alpha: f64, params: &GameParams) -> Result<f64> {
    let agent = params.agent(index)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidRate(alpha));
    }
    Ok(agent.log_drift(alpha))
}

/// The feedback-equilibrium profile `(alpha_CL_1, ..., alpha_CL_N)`.
pub fn closed_loop_profile(params: &GameParams) -> Result<StrategyProfile> {
    let rates = (0..params.n_agents())
        .map(|i| closed_loop_rate(i, params))
        .collect::<Result<Vec<_>>>()?;
    StrategyProfile::new(rates)
}

/// The precommitted-equilibrium profile.
pub fn open_loop_profile(params: &GameParams) -> Result<StrategyProfile> {
    let rates = (0..params.n_agents())
        .map(|i| open_loop_rate(i, params))
        .collect::<Result<Vec<_>>>()?;
    StrategyProfile::new(rates)
}

/// The planner profile.
pub fn social_planner_profile(params: &GameParams) -> Result<StrategyProfile> {
    let rates = (0..params.n_agents())
        .map(|i| social_planner_rate(i, params))
        .collect::<Result<Vec<_>>>()?;
    StrategyProfile::new(rates)
}

fn require_symmetric(params: &GameParams) -> Result<(f64, f64)> {
    let first = params.agents()[0];
    for a in params.agents() {
        if a.theta != first.theta || a.eta != first.eta || a.mu != first.mu || a.nu != first.nu
        {
            return Err(Error::Heterogeneous(
                "welfare-gap formulas need identical theta, eta, mu, nu",
            ));
        }
    }
    Ok((first.theta, first.eta))
}

fn poa_from_ratio(rho: f64, x: f64) -> f64 {
    (x - x.ln() - 1.0) / rho
}

/// Welfare gap between the planner optimum and the feedback equilibrium
/// for identical agents:
///
/// ```text
/// PoA = (1/rho) [ x - ln x - 1 ],   x = (1 + theta + eta) / (1 + theta + eta/N)
/// ```
///
/// Non-negative, zero exactly when `eta = 0` or `N = 1`. Evaluated per
/// capita at equal initial levels, where the initial-condition terms of
/// both welfare functionals cancel.
pub fn price_of_anarchy(params: &GameParams) -> Result<f64> {
    price_of_anarchy_for_n(params, params.n_agents())
}

/// Same welfare gap with the population size overridden, for convergence
/// sweeps in N.
pub fn price_of_anarchy_for_n(params: &GameParams, n_agents: usize) -> Result<f64> {
    let (theta, eta) = require_symmetric(params)?;
    if n_agents == 0 {
        return Err(Error::InvalidArgument("population size must be positive"));
    }
    let x = (1.0 + theta + eta) / (1.0 + theta + eta / n_agents as f64);
    Ok(poa_from_ratio(params.rho(), x))
}

/// Large-population limit of the welfare gap:
/// `(1/rho) [ x - ln x - 1 ]` with `x = (1 + theta + eta)/(1 + theta)`.
pub fn price_of_anarchy_limit(params: &GameParams) -> Result<f64> {
    let (theta, eta) = require_symmetric(params)?;
    let x = (1.0 + theta + eta) / (1.0 + theta);
    Ok(poa_from_ratio(params.rho(), x))
}

/// All equilibrium objects for one parameter set. Growth rates are
/// evaluated at the feedback equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub alpha_cl: Vec<f64>,
    pub alpha_ol: Vec<f64>,
    pub alpha_sp: Vec<f64>,
    pub tau: Vec<f64>,
    pub growth: Vec<f64>,
    /// Welfare gap; present only for identical agents.
    pub poa: Option<f64>,
}

pub fn equilibrium_report(params: &GameParams) -> Result<EquilibriumReport> {
    let n = params.n_agents();
    let mut report = EquilibriumReport {
        alpha_cl: Vec::with_capacity(n),
        alpha_ol: Vec::with_capacity(n),
        alpha_sp: Vec::with_capacity(n),
        tau: Vec::with_capacity(n),
        growth: Vec::with_capacity(n),
        poa: price_of_anarchy(params).ok(),
    };
    for i in 0..n {
        let cl = closed_loop_rate(i, params)?;
        report.alpha_cl.push(cl);
        report.alpha_ol.push(open_loop_rate(i, params)?);
        report.alpha_sp.push(social_planner_rate(i, params)?);
        report.tau.push(pigouvian_tax(i, params)?);
        report.growth.push(expected_growth_rate(i, cl, params)?);
    }
    Ok(report)
}

/// Coefficients of agent `i`'s log-linear value `a ln q + b ln qhat + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameCoefficients {
    pub agent: usize,
    /// `(1 + theta_i + eta_i/N) / rho`.
    pub a: f64,
    /// `eta_i / rho`.
    pub b: f64,
    /// Constant zeroing the stationary equation residual.
    pub c: f64,
    /// Constant from the direct closed-form expression; equality with `c`
    /// is a consistency check between the two derivations.
    pub c_direct: f64,
}

impl GameCoefficients {
    /// `c - c_direct`; zero when the two derivations agree.
    pub fn direct_deviation(&self) -> f64 {
        self.c - self.c_direct
    }
}

/// Value coefficients of agent `i` when the other agents play
/// `others` (their own entry in the profile is ignored).
pub fn game_value_coefficients(
    index: usize,
    others: &StrategyProfile,
    params: &GameParams,
) -> Result<GameCoefficients> {
    let agent = params.agent(index)?;
    others.check_len(params.n_agents())?;
    let rho = params.rho();
    let w = 1.0 + agent.theta + agent.eta / params.n_agents() as f64;
    let a = w / rho;
    let b = agent.eta / rho;
    let g_hat = aggregate_coeffs(index, others, params)?.g_hat;
    let half_var = 0.5 * agent.total_variance();
    // rho c + (sigma_i^2/2) a - gamma_i a + ln a + 1 - b g_hat = 0.
    let c = (agent.gamma * a - half_var * a - a.ln() - 1.0 + b * g_hat) / rho;
    let c_direct = -w.ln() / rho + rho.ln() / rho - 1.0 / rho + agent.gamma * w / (rho * rho)
        - w * half_var / (rho * rho)
        + agent.eta * g_hat / (rho * rho);
    Ok(GameCoefficients {
        agent: index,
        a,
        b,
        c,
        c_direct,
    })
}

/// Value coefficients of agent `i` when the others play their feedback
/// equilibrium rates.
pub fn game_value_coefficients_at_equilibrium(
    index: usize,
    params: &GameParams,
) -> Result<GameCoefficients> {
    game_value_coefficients(index, &closed_loop_profile(params)?, params)
}

/// Coefficients of the planner's log-linear value `sum_j a_j ln q_j + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerCoefficients {
    /// `a_j = (1 + theta_j + eta_bar) / (N rho)`.
    pub a: Vec<f64>,
    /// Constant zeroing the planner equation residual.
    pub c: f64,
    /// Total constant from the direct per-agent closed forms; see
    /// [`GameCoefficients::c_direct`].
    pub c_direct: f64,
}

impl PlannerCoefficients {
    pub fn n_agents(&self) -> usize {
        self.a.len()
    }

    /// Optimal feedback `1 / (N a_j)`, which reproduces the planner rate.
    pub fn feedback_rate(&self, index: usize) -> Result<f64> {
        let a = self.a.get(index).ok_or(Error::AgentIndex {
            index,
            n_agents: self.a.len(),
        })?;
        Ok(1.0 / (self.a.len() as f64 * a))
    }

    pub fn direct_deviation(&self) -> f64 {
        self.c - self.c_direct
    }
}

pub fn planner_value_coefficients(params: &GameParams) -> Result<PlannerCoefficients> {
    let rho = params.rho();
    let n = params.n_agents() as f64;
    let eta_bar = params.eta_bar();
    let a: Vec<f64> = params
        .agents()
        .iter()
        .map(|agent| (1.0 + agent.theta + eta_bar) / (n * rho))
        .collect();
    // rho c = sum_j (gamma_j - sigma_j^2/2) a_j - (1/N) sum_j ln(N a_j) - 1.
    let drift_part = neumaier_sum(
        params
            .agents()
            .iter()
            .zip(&a)
            .map(|(agent, &aj)| (agent.gamma - 0.5 * agent.total_variance()) * aj),
    );
    let log_part = neumaier_sum(a.iter().map(|&aj| (n * aj).ln())) / n;
    let c = (drift_part - log_part - 1.0) / rho;
    // Direct per-agent constants sum to (1/rho) sum_j [ (gamma_j -
    // sigma_j^2/2) a_j - 1 - ln a_j ].
    let direct = neumaier_sum(
        params
            .agents()
            .iter()
            .zip(&a)
            .map(|(agent, &aj)| {
                (agent.gamma - 0.5 * agent.total_variance()) * aj - 1.0 - aj.ln()
            }),
    );
    let c_direct = direct / rho;
    Ok(PlannerCoefficients { a, c, c_direct })
}

/// Coefficients of the limit value `a ln q + b <ln q, m> + c` for a
/// continuum of identical agents without common noise, together with the
/// limit equilibrium rate `alpha_star = 1/a = rho/(1 + theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterCoefficients {
    /// `(1 + theta) / rho`.
    pub a: f64,
    /// `eta / rho`.
    pub b: f64,
    /// Constant zeroing the limit-equation residual.
    pub c: f64,
    /// Constant from the direct closed-form expression.
    pub c_direct: f64,
    /// Limit equilibrium rate `1/a`.
    pub alpha_star: f64,
}

impl MasterCoefficients {
    pub fn direct_deviation(&self) -> f64 {
        self.c - self.c_direct
    }
}

/// Requires identical `theta`, `eta`, `mu`, `gamma`; the common-noise
/// loading `nu` is ignored (the limit model carries no common noise).
pub fn mfg_value_coefficients(params: &GameParams) -> Result<MasterCoefficients> {
    let first = params.agents()[0];
    for agent in params.agents() {
        if agent.theta != first.theta
            || agent.eta != first.eta
            || agent.mu != first.mu
            || agent.gamma != first.gamma
        {
            return Err(Error::Heterogeneous(
                "limit coefficients need identical theta, eta, mu, gamma",
            ));
        }
    }
    let rho = params.rho();
    let (theta, eta, mu, gamma) = (first.theta, first.eta, first.mu, first.gamma);
    let a = (1.0 + theta) / rho;
    let b = eta / rho;
    let alpha_star = 1.0 / a;
    // rho c + (a + b) mu^2/2 - (gamma - alpha*) (a + b) + ln alpha* = 0.
    let c = ((gamma - alpha_star) * (a + b) - 0.5 * (a + b) * mu * mu - a.ln()) / rho;
    let c_direct = -(1.0 + theta).ln() / rho + rho.ln() / rho - 1.0 / rho
        + gamma * (1.0 + theta) / (rho * rho)
        - (1.0 + theta) * mu * mu / (2.0 * rho * rho)
        + gamma * eta / (rho * rho)
        - eta / ((1.0 + theta) * rho)
        - eta * mu * mu / (2.0 * rho * rho);
    Ok(MasterCoefficients {
        a,
        b,
        c,
        c_direct,
        alpha_star,
    })
}
