//! Mean-field limit machinery: the limit value on (state, measure) pairs,
//! the projection of the N-player value onto a measure, the O(1/N)
//! convergence gap between the two, and the limit-equation residual.
//!
//! Everything here is for identical agents without common noise. The limit
//! value is the log-linear ansatz `U(q, m) = a ln q + b <ln q, m> + c`; the
//! projected N-player value integrates the N-player log-linear value over
//! the other agents' states,
//!
//! ```text
//! w_Ni(q, m) = a ln q + c_n + b (N-1)/N <ln q, m>,
//! ```
//!
//! whose constant `c_n` carries the leave-one-out aggregate drift at the
//! limit equilibrium rate `rho/(1 + theta)`. The gap between the two is
//! exactly proportional to 1/N.

use crate::equilibria::{mfg_value_coefficients, MasterCoefficients};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::model::GameParams;
use crate::numeric::{loglog_slope, neumaier_sum};

/// Identical-agent scalars used by the limit formulas.
struct LimitParams {
    theta: f64,
    eta: f64,
    mu: f64,
    gamma: f64,
    rho: f64,
}

fn limit_params(params: &GameParams) -> Result<LimitParams> {
    let first = params.agents()[0];
    for agent in params.agents() {
        if agent.theta != first.theta
            || agent.eta != first.eta
            || agent.mu != first.mu
            || agent.gamma != first.gamma
        {
            return Err(Error::Heterogeneous(
                "limit operations need identical theta, eta, mu, gamma",
            ));
        }
    }
    Ok(LimitParams {
        theta: first.theta,
        eta: first.eta,
        mu: first.mu,
        gamma: first.gamma,
        rho: params.rho(),
    })
}

/// Limit value `a ln q + b <ln q, m> + c`.
pub fn master_value(q: f64, m: &DiscreteMeasure, coeffs: &MasterCoefficients) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::NonPositiveState(q));
    }
    Ok(coeffs.a * q.ln() + coeffs.b * m.log_moment() + coeffs.c)
}

/// Constant of the identical-agent N-player value used by the projection:
/// the direct closed form with the leave-one-out aggregate drift evaluated
/// at the limit rate `rho/(1 + theta)`.
fn projected_constant(lp: &LimitParams, n: usize) -> f64 {
    let rho = lp.rho;
    let w = 1.0 + lp.theta;
    let nf = n as f64;
    let drift = lp.gamma - rho / w - 0.5 * lp.mu * lp.mu;
    let g_hat = (nf - 1.0) / nf * drift;
    -w.ln() / rho + rho.ln() / rho - 1.0 / rho + lp.gamma * w / (rho * rho)
        - w * lp.mu * lp.mu / (2.0 * rho * rho)
        + lp.eta * g_hat / (rho * rho)
}

/// Projection of the N-player value onto a measure over the other agents'
/// states: `a ln q + c_n + b (N-1)/N <ln q, m>`.
pub fn projected_value(
    q: f64,
    m: &DiscreteMeasure,
    n: usize,
    params: &GameParams,
) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::NonPositiveState(q));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("population size must be positive"));
    }
    let lp = limit_params(params)?;
    let coeffs = mfg_value_coefficients(params)?;
    let nf = n as f64;
    Ok(coeffs.a * q.ln()
        + projected_constant(&lp, n)
        + coeffs.b * (nf - 1.0) / nf * m.log_moment())
}

/// `int |w_Ni(q, m) - U(q, m)| m(dq)`, evaluated as a finite sum over the
/// atoms of `m`.
pub fn convergence_gap(m: &DiscreteMeasure, n: usize, params: &GameParams) -> Result<f64> {
    let coeffs = mfg_value_coefficients(params)?;
    let mut terms = Vec::with_capacity(m.len());
    for &(q, w) in m.atoms() {
        let diff = projected_value(q, m, n, params)? - master_value(q, m, &coeffs)?;
        terms.push(w * diff.abs());
    }
    Ok(neumaier_sum(terms))
}

/// Gap values over a list of population sizes with the fitted log-log
/// slope (exactly -1 for a fixed measure).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSweep {
    pub ns: Vec<usize>,
    pub gaps: Vec<f64>,
    pub slope: f64,
}

pub fn convergence_sweep(
    ns: &[usize],
    m: &DiscreteMeasure,
    params: &GameParams,
) -> Result<ConvergenceSweep> {
    if ns.len() < 2 {
        return Err(Error::InvalidArgument(
            "convergence sweep needs at least two population sizes",
        ));
    }
    let gaps = ns
        .iter()
        .map(|&n| convergence_gap(m, n, params))
        .collect::<Result<Vec<_>>>()?;
    if gaps.iter().any(|&g| g <= 0.0) {
        return Err(Error::InvalidArgument(
            "gap vanished; log-log slope is undefined",
        ));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &gaps);
    Ok(ConvergenceSweep {
        ns: ns.to_vec(),
        gaps,
        slope,
    })
}

/// Signed residual of the limit equation at `(q, m)` for a candidate
/// coefficient set, with the measure integrals evaluated atom by atom:
///
/// ```text
/// rho U - (mu^2/2) q^2 U_qq - (mu^2/2) int v^2 d_v DU(v) m(dv)
///   - (gamma - a*) q U_q - int (gamma - a*) v DU(v) m(dv)
///   - [ ln a* + (1 + theta) ln q + eta <ln q, m> ]
/// ```
///
/// where `DU(v) = b/v` is the measure derivative of the ansatz and
/// `a* = 1/a` the interior maximizer.
pub fn master_residual(
    q: f64,
    m: &DiscreteMeasure,
    coeffs: &MasterCoefficients,
    params: &GameParams,
) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::NonPositiveState(q));
    }
    let lp = limit_params(params)?;
    if coeffs.a <= 0.0 {
        return Err(Error::NoMaximizer(coeffs.a));
    }
    let (a, b) = (coeffs.a, coeffs.b);
    let alpha_star = 1.0 / a;
    let value = master_value(q, m, coeffs)?;
    let u_qq = -a / (q * q);
    let u_q = a / q;
    let half_var = 0.5 * lp.mu * lp.mu;
    let measure_diffusion = m.integrate(|v| v * v * (-b / (v * v)));
    let measure_drift = m.integrate(|v| (lp.gamma - alpha_star) * v * (b / v));
    let source = alpha_star.ln() + (1.0 + lp.theta) * q.ln() + lp.eta * m.log_moment();
    Ok(lp.rho * value
        - half_var * q * q * u_qq
        - half_var * measure_diffusion
        - (lp.gamma - alpha_star) * q * u_q
        - measure_drift
        - source)
}
