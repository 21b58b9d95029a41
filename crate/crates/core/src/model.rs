//! Model parameters, utility conventions, the geometric-mean aggregate, and
//! the exact log-dynamics coefficients of the leave-one-out aggregate.
//!
//! Every multiplicative state quantity is stored and combined in log space;
//! the geometric mean is never formed as a direct product, so index levels
//! spanning hundreds of orders of magnitude stay finite.
//!
//! Two utility conventions coexist in the model and are kept explicit:
//! under [`UtilityConvention::Inclusive`] the global index averages over all
//! locations including the agent's own (own log-state exponent
//! `1 + theta_i + eta_i/N`), under [`UtilityConvention::Exclusive`] the
//! cross term runs over the other locations only (own exponent
//! `1 + theta_i`). Payoff-evaluating operations take the convention as a
//! runtime argument; nothing is hard-wired.

use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;

/// Per-location model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    /// Natural regeneration rate of the environmental asset (1/time), > 0.
    pub gamma: f64,
    /// Idiosyncratic volatility (1/sqrt(time)), >= 0.
    pub mu: f64,
    /// Common-noise volatility (1/sqrt(time)), >= 0.
    pub nu: f64,
    /// Preference weight on the local asset (dimensionless), > 0.
    pub theta: f64,
    /// Preference weight on the global asset (dimensionless), >= 0.
    ///
    /// Zero is admitted (an extension of the model's `eta > 0` standing
    /// assumption) so the ablation in which all equilibria coincide can be
    /// exercised.
    pub eta: f64,
    /// Initial asset level, > 0.
    pub q0: f64,
}

impl AgentParams {
    fn validate(&self, index: usize) -> Result<()> {
        let fail = |message| Err(Error::InvalidAgent { index, message });
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return fail("gamma must be positive");
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return fail("mu must be non-negative");
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return fail("nu must be non-negative");
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return fail("theta must be positive");
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return fail("eta must be non-negative");
        }
        if !(self.q0.is_finite() && self.q0 > 0.0) {
            return fail("q0 must be positive");
        }
        Ok(())
    }

    /// Total diffusion variance `mu^2 + nu^2`.
    pub fn total_variance(&self) -> f64 {
        self.mu * self.mu + self.nu * self.nu
    }

    /// Log-state drift `gamma - alpha - (mu^2 + nu^2)/2` under a constant
    /// depletion rate `alpha`.
    pub fn log_drift(&self, alpha: f64) -> f64 {
        self.gamma - alpha - 0.5 * self.total_variance()
    }
}

/// Full game description: the ordered agents plus the common discount rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GameParams {
    agents: Vec<AgentParams>,
    rho: f64,
}

impl GameParams {
    /// Build and validate. Rejects the first violated invariant, naming the
    /// offending agent.
    pub fn new(agents: Vec<AgentParams>, rho: f64) -> Result<Self> {
        let params = Self { agents, rho };
        params.validate()?;
        Ok(params)
    }

    /// N identical agents.
    pub fn homogeneous(agent: AgentParams, n_agents: usize, rho: f64) -> Result<Self> {
        Self::new(vec![agent; n_agents], rho)
    }

    /// Re-check all invariants; returns `self` unchanged on success.
    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidParams("at least one agent is required"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::InvalidParams("rho must be positive"));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            agent.validate(i)?;
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn agents(&self) -> &[AgentParams] {
        &self.agents
    }

    pub fn agent(&self, index: usize) -> Result<&AgentParams> {
        self.agents.get(index).ok_or(Error::AgentIndex {
            index,
            n_agents: self.agents.len(),
        })
    }

    /// Average global-preference weight `(1/N) sum_j eta_j`.
    pub fn eta_bar(&self) -> f64 {
        neumaier_sum(self.agents.iter().map(|a| a.eta)) / self.agents.len() as f64
    }

    /// Collapse to a single representative agent; errors unless every agent
    /// is identical in all fields.
    pub fn as_homogeneous(&self) -> Result<HomogeneousParams> {
        let first = self.agents[0];
        if self.agents.iter().any(|a| *a != first) {
            return Err(Error::Heterogeneous("agents differ"));
        }
        Ok(HomogeneousParams {
            agent: first,
            rho: self.rho,
            n_agents: self.agents.len(),
        })
    }
}

/// A homogeneous game collapsed to its representative agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousParams {
    pub agent: AgentParams,
    pub rho: f64,
    pub n_agents: usize,
}

/// Which own-term convention the utility uses; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityConvention {
    /// Global index includes the agent's own location.
    Inclusive,
    /// Cross term runs over the other locations only.
    Exclusive,
}

/// Constant depletion rates, one per agent. All equilibria of the model are
/// constant in time, so constants are the only profiles represented.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    rates: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        for &r in &rates {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidRate(r));
            }
        }
        if rates.is_empty() {
            return Err(Error::InvalidParams("profile needs at least one rate"));
        }
        Ok(Self { rates })
    }

    /// The same rate for every agent.
    pub fn constant(rate: f64, n_agents: usize) -> Result<Self> {
        Self::new(vec![rate; n_agents])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, index: usize) -> Result<f64> {
        self.rates.get(index).copied().ok_or(Error::AgentIndex {
            index,
            n_agents: self.rates.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Copy with agent `index`'s rate replaced.
    pub fn with_rate(&self, index: usize, rate: f64) -> Result<Self> {
        if index >= self.rates.len() {
            return Err(Error::AgentIndex {
                index,
                n_agents: self.rates.len(),
            });
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidRate(rate));
        }
        let mut rates = self.rates.clone();
        rates[index] = rate;
        Ok(Self { rates })
    }

    pub(crate) fn check_len(&self, n_agents: usize) -> Result<()> {
        if self.rates.len() == n_agents {
            Ok(())
        } else {
            Err(Error::ProfileLength {
                profile: self.rates.len(),
                n_agents,
            })
        }
    }
}

/// Exact log-dynamics coefficients of the leave-one-out geometric aggregate:
/// drift `g_hat`, common-noise loading `nu_hat`, and idiosyncratic loading
/// `xi_hat`, so that `d ln Qhat = g_hat dt + nu_hat dB + xi_hat dZ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateCoeffs {
    pub g_hat: f64,
    pub nu_hat: f64,
    pub xi_hat: f64,
}

impl AggregateCoeffs {
    /// Total log-variance rate `nu_hat^2 + xi_hat^2`.
    pub fn variance(&self) -> f64 {
        self.nu_hat * self.nu_hat + self.xi_hat * self.xi_hat
    }
}

/// Re-validates and returns the parameters unchanged.
pub fn validate_params(params: GameParams) -> Result<GameParams> {
    params.validate()?;
    Ok(params)
}

/// Exponent on the agent's own log state in its utility.
pub fn effective_weight(
    index: usize,
    params: &GameParams,
    convention: UtilityConvention,
) -> Result<f64> {
    let agent = params.agent(index)?;
    Ok(match convention {
        UtilityConvention::Inclusive => {
            1.0 + agent.theta + agent.eta / params.n_agents() as f64
        }
        UtilityConvention::Exclusive => 1.0 + agent.theta,
    })
}

/// Geometric mean `(prod q_j)^(1/N)`, evaluated in log space.
pub fn geometric_mean_index(levels: &[f64]) -> Result<f64> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("geometric mean of an empty vector"));
    }
    let mut log_sum = 0.0;
    for &q in levels {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::NonPositiveState(q));
        }
        log_sum += q.ln();
    }
    Ok((log_sum / levels.len() as f64).exp())
}

/// Instantaneous utility of agent `index` at depletion rate `alpha` and
/// state vector `levels`, under the chosen convention.
pub fn running_utility(
    index: usize,
    alpha: f64,
    levels: &[f64],
    params: &GameParams,
    convention: UtilityConvention,
) -> Result<f64> {
    let agent = params.agent(index)?;
    let n = params.n_agents();
    if levels.len() != n {
        return Err(Error::ProfileLength {
            profile: levels.len(),
            n_agents: n,
        });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidRate(alpha));
    }
    let mut own_log = 0.0;
    let mut log_sum = 0.0;
    for (j, &q) in levels.iter().enumerate() {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::NonPositiveState(q));
        }
        let lq = q.ln();
        log_sum += lq;
        if j == index {
            own_log = lq;
        }
    }
    let cross = match convention {
        UtilityConvention::Inclusive => log_sum,
        UtilityConvention::Exclusive => log_sum - own_log,
    };
    Ok(alpha.ln() + (1.0 + agent.theta) * own_log + agent.eta * cross / n as f64)
}

/// Drift and noise loadings of `ln Qhat^{-i}` under a constant profile:
///
/// ```text
/// g_hat  = (1/N) sum_{j != i} (gamma_j - alpha_j - (nu_j^2 + mu_j^2)/2)
/// nu_hat = (1/N) sum_{j != i} nu_j
/// xi_hat = ( sum_{j != i} mu_j^2 / N^2 )^(1/2)
/// ```
///
/// For a single agent the aggregate is degenerate and all coefficients are
/// zero by convention.
pub fn aggregate_coeffs(
    index: usize,
    profile: &StrategyProfile,
    params: &GameParams,
) -> Result<AggregateCoeffs> {
    params.agent(index)?;
    profile.check_len(params.n_agents())?;
    let n = params.n_agents() as f64;
    if params.n_agents() == 1 {
        return Ok(AggregateCoeffs {
            g_hat: 0.0,
            nu_hat: 0.0,
            xi_hat: 0.0,
        });
    }
    let mut g = 0.0;
    let mut nu = 0.0;
    let mut mu_sq = 0.0;
    for (j, agent) in params.agents().iter().enumerate() {
        if j == index {
            continue;
        }
        g += agent.log_drift(profile.rates()[j]);
        nu += agent.nu;
        mu_sq += agent.mu * agent.mu;
    }
    Ok(AggregateCoeffs {
        g_hat: g / n,
        nu_hat: nu / n,
        xi_hat: (mu_sq / (n * n)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn agent_baseline() -> AgentParams {
        AgentParams {
            gamma: 0.1,
            mu: 0.2,
            nu: 0.1,
            theta: 1.0,
            eta: 0.5,
            q0: 1.0,
        }
    }

    #[test]
    fn baseline_params_are_valid() {
        let p = GameParams::homogeneous(agent_baseline(), 2, 0.05).unwrap();
        assert_eq!(p.n_agents(), 2);
        validate_params(p).unwrap();
    }

    #[test]
    fn negative_gamma_is_reported_with_agent_index() {
        let mut bad = agent_baseline();
        bad.gamma = -0.1;
        let err = GameParams::new(vec![agent_baseline(), bad], 0.05).unwrap_err();
        assert_eq!(
            err,
            Error::InvalidAgent {
                index: 1,
                message: "gamma must be positive"
            }
        );
        assert!(err.to_string().contains("gamma must be positive"));
    }

    #[test]
    fn zero_rho_is_rejected() {
        let err = GameParams::homogeneous(agent_baseline(), 2, 0.0).unwrap_err();
        assert_eq!(err, Error::InvalidParams("rho must be positive"));
    }

    #[test]
    fn nonpositive_q0_is_rejected() {
        let mut bad = agent_baseline();
        bad.q0 = 0.0;
        let err = GameParams::new(vec![bad], 0.05).unwrap_err();
        assert!(err.to_string().contains("q0 must be positive"));
    }

    #[test]
    fn effective_weight_conventions() {
        let p = GameParams::homogeneous(agent_baseline(), 10, 0.05).unwrap();
        let incl = effective_weight(0, &p, UtilityConvention::Inclusive).unwrap();
        let excl = effective_weight(0, &p, UtilityConvention::Exclusive).unwrap();
        assert!((incl - 2.05).abs() < 1e-15);
        assert!((excl - 2.0).abs() < 1e-15);
    }

    #[test]
    fn conventions_coincide_without_global_preference() {
        let mut a = agent_baseline();
        a.eta = 0.0;
        for n in [1, 3, 17] {
            let p = GameParams::homogeneous(a, n, 0.05).unwrap();
            let incl = effective_weight(0, &p, UtilityConvention::Inclusive).unwrap();
            let excl = effective_weight(0, &p, UtilityConvention::Exclusive).unwrap();
            assert_eq!(incl, excl);
            assert_eq!(incl, 1.0 + a.theta);
        }
    }

    #[test]
    fn weight_out_of_range() {
        let p = GameParams::homogeneous(agent_baseline(), 2, 0.05).unwrap();
        assert!(matches!(
            effective_weight(2, &p, UtilityConvention::Inclusive),
            Err(Error::AgentIndex { index: 2, n_agents: 2 })
        ));
    }

    #[test]
    fn geometric_mean_basics() {
        assert!((geometric_mean_index(&[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((geometric_mean_index(&[2.0, 8.0]).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_mean_avoids_overflow() {
        // A direct product would overflow/underflow; log-space evaluation
        // gives exp(mean of +-690.77...) = 1.
        let g = geometric_mean_index(&[1e-300, 1e300]).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean_rejects_nonpositive() {
        assert!(matches!(
            geometric_mean_index(&[1.0, 0.0]),
            Err(Error::NonPositiveState(_))
        ));
    }

    #[test]
    fn running_utility_examples() {
        let p = GameParams::homogeneous(agent_baseline(), 3, 0.05).unwrap();
        let ones = [1.0, 1.0, 1.0];
        let u = running_utility(0, 1.0, &ones, &p, UtilityConvention::Inclusive).unwrap();
        assert_eq!(u, 0.0);
        let u = running_utility(0, std::f64::consts::E, &ones, &p, UtilityConvention::Inclusive)
            .unwrap();
        assert!((u - 1.0).abs() < 1e-15);
    }

    #[test]
    fn running_utility_both_conventions_derived_case() {
        // N=2, i=0, alpha=1, q=(1, e), theta=1, eta=0.5: both give 1/4.
        let p = GameParams::homogeneous(agent_baseline(), 2, 0.05).unwrap();
        let q = [1.0, std::f64::consts::E];
        let incl = running_utility(0, 1.0, &q, &p, UtilityConvention::Inclusive).unwrap();
        let excl = running_utility(0, 1.0, &q, &p, UtilityConvention::Exclusive).unwrap();
        assert!((incl - 0.25).abs() < 1e-15);
        assert!((excl - 0.25).abs() < 1e-15);
    }

    #[test]
    fn aggregate_coeffs_two_agent_worked_example() {
        let agent2 = AgentParams {
            gamma: 0.1,
            mu: 0.2,
            nu: 0.1,
            theta: 1.0,
            eta: 0.5,
            q0: 1.0,
        };
        let p = GameParams::new(vec![agent_baseline(), agent2], 0.05).unwrap();
        let profile = StrategyProfile::new(vec![0.123, 0.05]).unwrap();
        let c = aggregate_coeffs(0, &profile, &p).unwrap();
        assert!((c.g_hat - 0.0125).abs() < 1e-15);
        assert!((c.nu_hat - 0.05).abs() < 1e-15);
        assert!((c.xi_hat - 0.1).abs() < 1e-15);
        assert!((c.variance() - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn aggregate_coeffs_homogeneous_symmetry() {
        let a = agent_baseline();
        for n in [2usize, 5, 50] {
            let p = GameParams::homogeneous(a, n, 0.05).unwrap();
            let profile = StrategyProfile::constant(0.03, n).unwrap();
            let c = aggregate_coeffs(0, &profile, &p).unwrap();
            let expected = (n as f64 - 1.0) / n as f64 * a.log_drift(0.03);
            assert!((c.g_hat - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn aggregate_coeffs_single_agent_degenerates_to_zero() {
        let p = GameParams::homogeneous(agent_baseline(), 1, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.03, 1).unwrap();
        let c = aggregate_coeffs(0, &profile, &p).unwrap();
        assert_eq!(
            c,
            AggregateCoeffs {
                g_hat: 0.0,
                nu_hat: 0.0,
                xi_hat: 0.0
            }
        );
    }

    #[test]
    fn aggregate_bounds_hold() {
        let agents = vec![
            AgentParams { gamma: 0.2, mu: 0.3, nu: 0.15, theta: 0.5, eta: 0.2, q0: 2.0 },
            AgentParams { gamma: 0.1, mu: 0.1, nu: 0.05, theta: 1.5, eta: 0.9, q0: 0.5 },
            AgentParams { gamma: 0.3, mu: 0.25, nu: 0.2, theta: 2.0, eta: 0.4, q0: 1.0 },
        ];
        let p = GameParams::new(agents, 0.1).unwrap();
        let profile = StrategyProfile::new(vec![0.02, 0.04, 0.06]).unwrap();
        let n = p.n_agents() as f64;
        for i in 0..p.n_agents() {
            let c = aggregate_coeffs(i, &profile, &p).unwrap();
            let max_nu = p.agents().iter().map(|a| a.nu).fold(0.0, f64::max);
            let max_mu = p.agents().iter().map(|a| a.mu).fold(0.0, f64::max);
            assert!(c.nu_hat <= max_nu + 1e-15);
            assert!(c.xi_hat <= max_mu / (n - 1.0).sqrt() + 1e-15);
        }
    }
}
