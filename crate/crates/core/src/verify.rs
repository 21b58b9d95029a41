//! Independent oracles and residual checkers.
//!
//! The backbone is the closed-form payoff of a constant profile: with
//! `E ln Q_j(t) = ln q0_j + d_j t`, `d_j = gamma_j - alpha_j -
//! (mu_j^2 + nu_j^2)/2`, the discounted integrals reduce to
//! `int e^{-rho t} dt = 1/rho` and `int t e^{-rho t} dt = 1/rho^2`. That
//! turns every equilibrium claim into a one-dimensional calculus fact
//! which can be certified without touching the simulator; Monte Carlo is
//! only used to validate this oracle itself.
//!
//! Residuals of the candidate log-linear values are evaluated in closed
//! form (the derivatives of `a ln q + b ln qhat + c` are exact), not by
//! numerical differentiation.

use crate::equilibria::{GameCoefficients, PlannerCoefficients};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::model::{
    aggregate_coeffs, effective_weight, GameParams, StrategyProfile, UtilityConvention,
};
use crate::numeric::neumaier_sum;
use crate::sim::PayoffTarget;

/// Exact discounted payoff of a constant strategy profile.
///
/// The convention argument is ignored for the planner target, whose
/// objective has a single reading.
pub fn analytic_payoff(
    target: PayoffTarget,
    profile: &StrategyProfile,
    params: &GameParams,
    convention: UtilityConvention,
) -> Result<f64> {
    profile.check_len(params.n_agents())?;
    let rho = params.rho();
    let n = params.n_agents() as f64;
    match target {
        PayoffTarget::Agent(i) => {
            let agent = params.agent(i)?;
            let own_rate = profile.rate(i)?;
            let (mut cross_level, mut cross_slope) = (0.0, 0.0);
            for (j, (other, &alpha)) in
                params.agents().iter().zip(profile.rates()).enumerate()
            {
                if convention == UtilityConvention::Exclusive && j == i {
                    continue;
                }
                cross_level += other.q0.ln();
                cross_slope += other.log_drift(alpha);
            }
            let level = own_rate.ln()
                + (1.0 + agent.theta) * agent.q0.ln()
                + agent.eta / n * cross_level;
            let slope =
                (1.0 + agent.theta) * agent.log_drift(own_rate) + agent.eta / n * cross_slope;
            Ok(level / rho + slope / (rho * rho))
        }
        PayoffTarget::Planner => {
            let eta_bar = params.eta_bar();
            let total = neumaier_sum(params.agents().iter().zip(profile.rates()).map(
                |(agent, &alpha)| {
                    let weight = 1.0 + agent.theta + eta_bar;
                    let level = alpha.ln() + weight * agent.q0.ln();
                    let slope = weight * agent.log_drift(alpha);
                    level / rho + slope / (rho * rho)
                },
            ));
            Ok(total / n)
        }
    }
}

/// Agent `i`'s payoff with their own rate replaced.
fn payoff_with_own_rate(
    i: usize,
    rate: f64,
    profile: &StrategyProfile,
    params: &GameParams,
    convention: UtilityConvention,
) -> Result<f64> {
    analytic_payoff(
        PayoffTarget::Agent(i),
        &profile.with_rate(i, rate)?,
        params,
        convention,
    )
}

/// Derivative-free best response of agent `i` to the other agents' rates
/// (entry `i` of `others` is ignored).
///
/// Golden-section search on the bracket `[rho/(10 w_i), 10 rho/w_i]`,
/// shrunk to relative width `tol` and finished with one three-point
/// parabolic refinement; the final step recovers the accuracy a pure
/// comparison search loses to the flat quadratic top of the objective.
pub fn best_response(
    i: usize,
    others: &StrategyProfile,
    params: &GameParams,
    convention: UtilityConvention,
    tol: f64,
) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive"));
    }
    let w = effective_weight(i, params, convention)?;
    let rho = params.rho();
    let (mut lo, mut hi) = (rho / (10.0 * w), 10.0 * rho / w);
    let f = |alpha: f64| payoff_with_own_rate(i, alpha, others, params, convention);

    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let width_target = tol * (rho / w);
    for _ in 0..200 {
        if hi - lo <= width_target {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let mut best = 0.5 * (lo + hi);
    // Parabolic polish on a wider stencil where payoff differences are
    // still resolvable in f64.
    let h = 1e-4 * best;
    let (fm, f0, fp) = (f(best - h)?, f(best)?, f(best + h)?);
    let denom = fm - 2.0 * f0 + fp;
    if denom < 0.0 {
        let delta = 0.5 * h * (fm - fp) / denom;
        if delta.abs() <= h {
            best += delta;
        }
    }
    // The optimum is interior by strict concavity; touching the bracket
    // edge means the search itself is broken.
    if best <= rho / (10.0 * w) * 1.01 || best >= 10.0 * rho / w * 0.99 {
        return Err(Error::BracketFailure { agent: i });
    }
    Ok(best)
}

/// One agent's line of a unilateral-deviation audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentGap {
    pub agent: usize,
    pub profile_rate: f64,
    pub best_rate: f64,
    /// Payoff gain from deviating to `best_rate`; nonnegative up to search
    /// and round-off noise.
    pub improvement: f64,
    /// `|best_rate - profile_rate| / profile_rate`.
    pub rel_rate_gap: f64,
}

/// Unilateral-deviation audit of a profile under one convention.
#[derive(Debug, Clone, PartialEq)]
pub struct NashGapReport {
    pub convention: UtilityConvention,
    pub per_agent: Vec<AgentGap>,
    pub max_improvement: f64,
    pub max_rel_rate_gap: f64,
}

/// Best response and payoff gain for every agent against `profile`. A
/// certified equilibrium shows `max_improvement` and `max_rel_rate_gap`
/// at the search tolerance.
pub fn nash_gap(
    profile: &StrategyProfile,
    params: &GameParams,
    convention: UtilityConvention,
    tol: f64,
) -> Result<NashGapReport> {
    profile.check_len(params.n_agents())?;
    let mut per_agent = Vec::with_capacity(params.n_agents());
    for i in 0..params.n_agents() {
        let best_rate = best_response(i, profile, params, convention, tol)?;
        let baseline = analytic_payoff(PayoffTarget::Agent(i), profile, params, convention)?;
        let improved = payoff_with_own_rate(i, best_rate, profile, params, convention)?;
        let profile_rate = profile.rate(i)?;
        per_agent.push(AgentGap {
            agent: i,
            profile_rate,
            best_rate,
            improvement: improved - baseline,
            rel_rate_gap: (best_rate - profile_rate).abs() / profile_rate,
        });
    }
    let max_improvement = per_agent.iter().map(|g| g.improvement).fold(f64::MIN, f64::max);
    let max_rel_rate_gap = per_agent.iter().map(|g| g.rel_rate_gap).fold(0.0, f64::max);
    Ok(NashGapReport {
        convention,
        per_agent,
        max_improvement,
        max_rel_rate_gap,
    })
}

/// Interior maximizer `argmax { ln(alpha) - alpha q p } = 1/(q p)`,
/// defined only for a positive marginal value `p`.
pub fn hamiltonian_argmax(p: f64, q: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::NonPositiveState(q));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::NoMaximizer(p));
    }
    Ok(1.0 / (q * p))
}

/// Signed residual of agent `i`'s stationary equation at `(q, qhat)` for a
/// candidate log-linear value, with the aggregate coefficients evaluated
/// at `others`. All derivatives of the candidate are exact.
pub fn hjb_residual_game(
    q: f64,
    q_hat: f64,
    coeffs: &GameCoefficients,
    others: &StrategyProfile,
    params: &GameParams,
) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::NonPositiveState(q));
    }
    if !(q_hat.is_finite() && q_hat > 0.0) {
        return Err(Error::NonPositiveState(q_hat));
    }
    let agent = params.agent(coeffs.agent)?;
    if coeffs.a <= 0.0 {
        return Err(Error::NoMaximizer(coeffs.a));
    }
    let agg = aggregate_coeffs(coeffs.agent, others, params)?;
    let (a, b, c) = (coeffs.a, coeffs.b, coeffs.c);
    let n = params.n_agents() as f64;
    let w = 1.0 + agent.theta + agent.eta / n;

    let value = a * q.ln() + b * q_hat.ln() + c;
    let dq = a / q;
    let dqq = -a / (q * q);
    let dh = b / q_hat;
    let dhh = -b / (q_hat * q_hat);
    let cross = 0.0;

    let marginal = q * dq;
    let alpha_star = hamiltonian_argmax(dq, q)?;
    let sup_term =
        alpha_star.ln() + w * q.ln() + agent.eta * q_hat.ln() - alpha_star * marginal;

    let hat_var = agg.variance();
    Ok(params.rho() * value
        - 0.5 * hat_var * q_hat * q_hat * dhh
        - 0.5 * agent.total_variance() * q * q * dqq
        - q_hat * dh * (agg.g_hat + 0.5 * hat_var)
        - agent.gamma * marginal
        - sup_term
        - agent.nu * agg.nu_hat * q * q_hat * cross)
}

/// Signed residual of the planner's stationary equation at the state
/// vector `q` for a candidate separable log-linear value.
pub fn hjb_residual_planner(
    q: &[f64],
    coeffs: &PlannerCoefficients,
    params: &GameParams,
) -> Result<f64> {
    let n = params.n_agents();
    if q.len() != n || coeffs.a.len() != n {
        return Err(Error::ProfileLength {
            profile: q.len().max(coeffs.a.len()),
            n_agents: n,
        });
    }
    for &qi in q {
        if !(qi.is_finite() && qi > 0.0) {
            return Err(Error::NonPositiveState(qi));
        }
    }
    if coeffs.a.iter().any(|&a| a <= 0.0) {
        return Err(Error::NoMaximizer(0.0));
    }
    let nf = n as f64;
    let eta_bar = params.eta_bar();
    let value = neumaier_sum(coeffs.a.iter().zip(q).map(|(&a, &qi)| a * qi.ln())) + coeffs.c;
    let mut diffusion = 0.0;
    let mut drift = 0.0;
    let mut sup = -neumaier_sum(coeffs.a.iter().map(|&a| (nf * a).ln())) / nf - 1.0;
    for ((agent, &aj), &qj) in params.agents().iter().zip(&coeffs.a).zip(q) {
        diffusion += 0.5 * agent.total_variance() * qj * qj * (-aj / (qj * qj));
        drift += agent.gamma * qj * (aj / qj);
        sup += (1.0 + agent.theta + eta_bar) * qj.ln() / nf;
    }
    Ok(params.rho() * value - diffusion - drift - sup)
}

/// One agent's line of the adjoint-system check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointAgent {
    /// Stationary own-state costate coefficient `(1 + theta_i)/rho`.
    pub phi: f64,
    /// Stationary cross-state costate coefficient `eta_i/(N rho)`.
    pub psi: f64,
    /// Residual of `rho phi - (1 + theta_i)` (the stationary ODE).
    pub phi_ode_residual: f64,
    /// Residual of `rho psi - eta_i/N`.
    pub psi_ode_residual: f64,
    /// Rate implied by the coupling condition, `1/phi`.
    pub coupling_rate: f64,
    /// `1/coupling_rate - phi`; zero when the coupling condition holds.
    pub coupling_residual: f64,
    /// `e^{-rho t} phi` evaluated at `t = 200/rho`.
    pub transversality_decay: f64,
}

/// Adjoint-system audit of the precommitted equilibrium ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    pub per_agent: Vec<AdjointAgent>,
    /// True when every discounted costate product decays to zero.
    pub transversality_ok: bool,
}

/// Verifies that the stationary costate pair `phi_i = (1 + theta_i)/rho`,
/// `psi_j = eta_j/(N rho)` zeroes the adjoint ODEs, that the coupling
/// condition reproduces the precommitted rate `rho/(1 + theta_i)`, and
/// that the discounted transversality product vanishes.
pub fn pontryagin_ansatz_check(params: &GameParams) -> AdjointReport {
    let rho = params.rho();
    let n = params.n_agents() as f64;
    let per_agent: Vec<AdjointAgent> = params
        .agents()
        .iter()
        .map(|agent| {
            let phi = (1.0 + agent.theta) / rho;
            let psi = agent.eta / (n * rho);
            let coupling_rate = 1.0 / phi;
            AdjointAgent {
                phi,
                psi,
                phi_ode_residual: rho * phi - (1.0 + agent.theta),
                psi_ode_residual: rho * psi - agent.eta / n,
                coupling_rate,
                coupling_residual: 1.0 / coupling_rate - phi,
                transversality_decay: (-200.0f64).exp() * phi,
            }
        })
        .collect();
    let transversality_ok = per_agent
        .iter()
        .all(|a| a.transversality_decay.abs() < 1e-60);
    AdjointReport {
        per_agent,
        transversality_ok,
    }
}

/// The monotonicity form of the log-moment coupling,
/// `(F(m1) - F(m2)) * int d(m1 - m2)` with `F(m) = <ln q, m>`.
///
/// For probability measures the second factor is the mass difference
/// `1 - 1 = 0`, so the form vanishes identically; the function computes
/// both factors from the measures so the cancellation is observable.
pub fn ll_monotonicity_form(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
    (m1.log_moment() - m2.log_moment()) * (m1.mass() - m2.mass())
}
