//! Exact-path simulation of the state system under constant profiles,
//! Monte Carlo payoff estimation, aggregate-dynamics statistics, and
//! empirical measures.
//!
//! The state is geometric Brownian motion with constant coefficients, so
//! grid values are sampled from the closed-form solution
//!
//! ```text
//! ln Q_i(t_k) = ln q0_i + (gamma_i - alpha_i - (mu_i^2 + nu_i^2)/2) t_k
//!               + nu_i B(t_k) + mu_i W_i(t_k)
//! ```
//!
//! with one common increment stream `B` per path and one idiosyncratic
//! stream per agent. There is no discretization bias: marginals at shared
//! time points are identical in law across grid refinements.
//!
//! Every normal increment is addressed by `(seed, path, stream, step)`
//! through the counter-based generator in [`crate::rng`], so ensembles are
//! bit-reproducible under any parallel schedule. Reductions are performed
//! in fixed path order for the same reason.

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::model::{GameParams, StrategyProfile, UtilityConvention};
use crate::numeric::{mean_and_se, neumaier_sum};
use crate::rng::normal;
use rayon::prelude::*;

/// Uniform grid on `[0, t_max]` with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid("t_max must be positive"));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1"));
        }
        if n_steps > u32::MAX as usize {
            return Err(Error::InvalidGrid("n_steps exceeds the addressable range"));
        }
        Ok(Self { t_max, n_steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    /// `t_k = k dt`, computed directly rather than by accumulation.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points()).map(|k| self.time(k)).collect()
    }
}

/// In-memory cap on ensemble size (number of f64 values, 2 GiB worth).
pub const MAX_ENSEMBLE_ELEMENTS: usize = 1 << 28;

/// Seeded log-state trajectories of all agents on a time grid.
///
/// Layout is `[path][step][agent]`; a deterministic function of
/// `(seed, grid, profile, params)`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    data: Vec<f64>,
    n_paths: usize,
    n_agents: usize,
    grid: TimeGrid,
    seed: u64,
    profile: StrategyProfile,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The constant profile the paths were generated under.
    pub fn profile(&self) -> &StrategyProfile {
        &self.profile
    }

    /// `ln Q_agent(t_step)` on the given path.
    pub fn log_state(&self, path: usize, step: usize, agent: usize) -> f64 {
        self.data[(path * self.grid.n_points() + step) * self.n_agents + agent]
    }

    /// Flat `[path][step][agent]` view of the whole ensemble.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn path_block(&self, path: usize) -> &[f64] {
        let stride = self.grid.n_points() * self.n_agents;
        &self.data[path * stride..(path + 1) * stride]
    }
}

/// Per-agent constants of the per-step recursions.
struct StepCoeffs {
    log_q0: Vec<f64>,
    drift_dt: Vec<f64>,
    level_drift_dt: Vec<f64>,
    common_load: Vec<f64>,
    own_load: Vec<f64>,
}

impl StepCoeffs {
    fn new(params: &GameParams, profile: &StrategyProfile, grid: &TimeGrid) -> Self {
        let dt = grid.dt();
        let sq = dt.sqrt();
        let agents = params.agents();
        Self {
            log_q0: agents.iter().map(|a| a.q0.ln()).collect(),
            drift_dt: agents
                .iter()
                .zip(profile.rates())
                .map(|(a, &alpha)| a.log_drift(alpha) * dt)
                .collect(),
            level_drift_dt: agents
                .iter()
                .zip(profile.rates())
                .map(|(a, &alpha)| (a.gamma - alpha) * dt)
                .collect(),
            common_load: agents.iter().map(|a| a.nu * sq).collect(),
            own_load: agents.iter().map(|a| a.mu * sq).collect(),
        }
    }
}

/// How grid values are produced from the noise increments.
///
/// The default samples the closed-form solution, which is exact in
/// distribution at every grid point. The explicit level-space scheme exists
/// only as a cross-check: it carries the usual O(dt) weak bias that the
/// exact scheme is free of, and it can in principle step through zero (an
/// error), which the exact scheme structurally cannot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingScheme {
    #[default]
    Exact,
    EulerLevel,
}

/// Fill `out` with paths `first_path..first_path + m`, where `m` is implied
/// by `out.len()`. Values depend only on the counters, never on the chunking.
fn fill_paths_into(
    coeffs: &StepCoeffs,
    grid: &TimeGrid,
    seed: u64,
    first_path: u64,
    scheme: SamplingScheme,
    out: &mut [f64],
) -> Result<()> {
    let n_agents = coeffs.log_q0.len();
    let n_points = grid.n_points();
    let stride = n_points * n_agents;
    debug_assert_eq!(out.len() % stride, 0);
    for (local, block) in out.chunks_exact_mut(stride).enumerate() {
        let path = first_path + local as u64;
        block[..n_agents].copy_from_slice(&coeffs.log_q0);
        for k in 0..grid.n_steps() {
            let z_common = normal(seed, path, 0, k as u32);
            let (prev, next) = block[k * n_agents..(k + 2) * n_agents].split_at_mut(n_agents);
            for i in 0..n_agents {
                let z_own = normal(seed, path, (i + 1) as u32, k as u32);
                let noise = coeffs.common_load[i] * z_common + coeffs.own_load[i] * z_own;
                match scheme {
                    SamplingScheme::Exact => {
                        next[i] = prev[i] + coeffs.drift_dt[i] + noise;
                    }
                    SamplingScheme::EulerLevel => {
                        // One explicit step on the level: Q (1 + (gamma -
                        // alpha) dt + noise), carried in logs.
                        let factor = 1.0 + coeffs.level_drift_dt[i] + noise;
                        if factor <= 0.0 {
                            return Err(Error::NonPositiveState(factor));
                        }
                        next[i] = prev[i] + factor.ln();
                    }
                }
            }
        }
    }
    Ok(())
}

fn paths_per_chunk(n_points: usize, n_agents: usize) -> usize {
    (2_000_000 / (n_points * n_agents)).clamp(16, 65_536)
}

/// Sample `n_paths` exact trajectories.
pub fn sample_paths(
    params: &GameParams,
    profile: &StrategyProfile,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    sample_paths_from(params, profile, grid, n_paths, seed, 0)
}

/// Sample exact paths with indices `first_path..first_path + n_paths`.
/// Disjoint index ranges under the same seed are independent, which is
/// what the cross-refinement distribution tests rely on.
pub fn sample_paths_from(
    params: &GameParams,
    profile: &StrategyProfile,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    first_path: u64,
) -> Result<PathEnsemble> {
    sample_paths_with_scheme(
        params,
        profile,
        grid,
        n_paths,
        seed,
        first_path,
        SamplingScheme::Exact,
    )
}

/// Sample paths under an explicit discretization scheme. The non-default
/// scheme exists purely as a bias cross-check for the exact sampler.
pub fn sample_paths_with_scheme(
    params: &GameParams,
    profile: &StrategyProfile,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    first_path: u64,
    scheme: SamplingScheme,
) -> Result<PathEnsemble> {
    profile.check_len(params.n_agents())?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1"));
    }
    let n_agents = params.n_agents();
    let total = n_paths
        .checked_mul(grid.n_points())
        .and_then(|v| v.checked_mul(n_agents))
        .ok_or(Error::EnsembleTooLarge {
            requested: usize::MAX,
            limit: MAX_ENSEMBLE_ELEMENTS,
        })?;
    if total > MAX_ENSEMBLE_ELEMENTS {
        return Err(Error::EnsembleTooLarge {
            requested: total,
            limit: MAX_ENSEMBLE_ELEMENTS,
        });
    }
    let coeffs = StepCoeffs::new(params, profile, grid);
    let mut data = vec![0.0f64; total];
    let stride = grid.n_points() * n_agents;
    let chunk = paths_per_chunk(grid.n_points(), n_agents);
    data.par_chunks_mut(chunk * stride)
        .enumerate()
        .try_for_each(|(ci, slab)| {
            fill_paths_into(
                &coeffs,
                grid,
                seed,
                first_path + (ci * chunk) as u64,
                scheme,
                slab,
            )
        })?;
    Ok(PathEnsemble {
        data,
        n_paths,
        n_agents,
        grid: *grid,
        seed,
        profile: profile.clone(),
    })
}

/// Whose payoff to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffTarget {
    Agent(usize),
    Planner,
}

/// A Monte Carlo payoff estimate with its error decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEstimate {
    pub estimate: f64,
    /// Standard error of the path average.
    pub std_error: f64,
    /// Analytic bound on the discarded tail beyond `t_max`.
    pub truncation_bound: f64,
    /// Bound on the trapezoid bias of the estimator mean.
    pub quadrature_bound: f64,
    pub n_paths: usize,
}

/// Per-agent log-state weights and the `ln alpha` constant of the target's
/// running utility, plus the affine-in-time coefficients `(A, B)` of its
/// expectation `A + B t`.
struct UtilitySpec {
    constant: f64,
    weights: Vec<f64>,
    mean_intercept: f64,
    mean_slope: f64,
}

fn utility_spec(
    target: PayoffTarget,
    profile: &StrategyProfile,
    params: &GameParams,
    convention: UtilityConvention,
) -> Result<UtilitySpec> {
    profile.check_len(params.n_agents())?;
    let n = params.n_agents();
    let nf = n as f64;
    let (constant, weights) = match target {
        PayoffTarget::Agent(i) => {
            let agent = params.agent(i)?;
            let mut w = vec![agent.eta / nf; n];
            w[i] = match convention {
                UtilityConvention::Inclusive => 1.0 + agent.theta + agent.eta / nf,
                UtilityConvention::Exclusive => 1.0 + agent.theta,
            };
            (profile.rate(i)?.ln(), w)
        }
        PayoffTarget::Planner => {
            let eta_bar = params.eta_bar();
            let w = params
                .agents()
                .iter()
                .map(|a| (1.0 + a.theta + eta_bar) / nf)
                .collect();
            let c = neumaier_sum(profile.rates().iter().map(|r| r.ln())) / nf;
            (c, w)
        }
    };
    let mean_intercept = constant
        + neumaier_sum(
            weights
                .iter()
                .zip(params.agents())
                .map(|(&w, a)| w * a.q0.ln()),
        );
    let mean_slope = neumaier_sum(
        weights
            .iter()
            .zip(params.agents())
            .zip(profile.rates())
            .map(|((&w, a), &alpha)| w * a.log_drift(alpha)),
    );
    Ok(UtilitySpec {
        constant,
        weights,
        mean_intercept,
        mean_slope,
    })
}

/// `int_T^inf e^{-rho t} (|A| + |B| t) dt`.
fn tail_bound(a: f64, b: f64, rho: f64, t_max: f64) -> f64 {
    let decay = (-rho * t_max).exp();
    decay * (a.abs() / rho + b.abs() * (t_max / rho + 1.0 / (rho * rho)))
}

/// Euler-Maclaurin style bound on the trapezoid bias for the mean
/// integrand `e^{-rho t}(A + B t)`: `(dt^2/12) (rho |A| + 3 |B|)`.
fn trapezoid_bias_bound(a: f64, b: f64, rho: f64, dt: f64) -> f64 {
    dt * dt / 12.0 * (rho * a.abs() + 3.0 * b.abs())
}

/// Trapezoid weights times discount factors.
fn discounted_weights(grid: &TimeGrid, rho: f64) -> Vec<f64> {
    let dt = grid.dt();
    (0..grid.n_points())
        .map(|k| {
            let w = if k == 0 || k == grid.n_steps() { 0.5 * dt } else { dt };
            w * (-rho * grid.time(k)).exp()
        })
        .collect()
}

/// Discounted trapezoid sum of the running utility along one path block.
fn path_payoff(block: &[f64], n_agents: usize, spec: &UtilitySpec, disc: &[f64], disc_total: f64) -> f64 {
    let mut acc = 0.0;
    for (row, &f) in block.chunks_exact(n_agents).zip(disc) {
        let mut dot = 0.0;
        for (q, w) in row.iter().zip(&spec.weights) {
            dot += q * w;
        }
        acc += f * dot;
    }
    spec.constant * disc_total + acc
}

fn estimate_from_payoffs(
    payoffs: &[f64],
    spec: &UtilitySpec,
    rho: f64,
    grid: &TimeGrid,
) -> PayoffEstimate {
    let (estimate, std_error) = mean_and_se(payoffs);
    PayoffEstimate {
        estimate,
        std_error,
        truncation_bound: tail_bound(spec.mean_intercept, spec.mean_slope, rho, grid.t_max()),
        quadrature_bound: trapezoid_bias_bound(
            spec.mean_intercept,
            spec.mean_slope,
            rho,
            grid.dt(),
        ),
        n_paths: payoffs.len(),
    }
}

/// Monte Carlo estimate of the discounted payoff over a stored ensemble.
///
/// The profile being evaluated is the one the ensemble was generated
/// under, so estimate and paths can never disagree about strategies. The
/// discount rate is an explicit argument so payoffs can be re-discounted
/// without resimulating.
pub fn estimate_payoff_mc(
    target: PayoffTarget,
    ensemble: &PathEnsemble,
    params: &GameParams,
    convention: UtilityConvention,
    rho: f64,
) -> Result<PayoffEstimate> {
    if params.n_agents() != ensemble.n_agents() {
        return Err(Error::ProfileLength {
            profile: ensemble.n_agents(),
            n_agents: params.n_agents(),
        });
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParams("rho must be positive"));
    }
    let spec = utility_spec(target, ensemble.profile(), params, convention)?;
    let grid = ensemble.grid();
    let disc = discounted_weights(grid, rho);
    let disc_total = neumaier_sum(disc.iter().copied());
    let payoffs: Vec<f64> = (0..ensemble.n_paths())
        .into_par_iter()
        .map(|p| path_payoff(ensemble.path_block(p), ensemble.n_agents(), &spec, &disc, disc_total))
        .collect();
    Ok(estimate_from_payoffs(&payoffs, &spec, rho, grid))
}

/// Same estimator without materializing the ensemble: paths are generated
/// chunk-wise from the identical counters and discarded after their payoff
/// is accumulated. Bit-identical to [`estimate_payoff_mc`] on the ensemble
/// with the same `(seed, grid, profile, params)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_payoff_mc_streaming(
    target: PayoffTarget,
    params: &GameParams,
    profile: &StrategyProfile,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    convention: UtilityConvention,
    rho: f64,
) -> Result<PayoffEstimate> {
    profile.check_len(params.n_agents())?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1"));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParams("rho must be positive"));
    }
    let n_agents = params.n_agents();
    let spec = utility_spec(target, profile, params, convention)?;
    let coeffs = StepCoeffs::new(params, profile, grid);
    let disc = discounted_weights(grid, rho);
    let disc_total = neumaier_sum(disc.iter().copied());
    let stride = grid.n_points() * n_agents;
    let chunk = paths_per_chunk(grid.n_points(), n_agents);
    let mut payoffs = vec![0.0f64; n_paths];
    payoffs
        .par_chunks_mut(chunk)
        .enumerate()
        .try_for_each(|(ci, out)| {
            let first = (ci * chunk) as u64;
            let mut buf = vec![0.0f64; out.len() * stride];
            fill_paths_into(&coeffs, grid, seed, first, SamplingScheme::Exact, &mut buf)?;
            for (y, block) in out.iter_mut().zip(buf.chunks_exact(stride)) {
                *y = path_payoff(block, n_agents, &spec, &disc, disc_total);
            }
            Ok(())
        })?;
    Ok(estimate_from_payoffs(&payoffs, &spec, rho, grid))
}

/// Smallest horizon `k/rho` (integer `k`) whose tail bound is below
/// `rel_tol` times the rough payoff magnitude `|A/rho + B/rho^2|`.
pub fn suggest_t_max(
    target: PayoffTarget,
    params: &GameParams,
    profile: &StrategyProfile,
    convention: UtilityConvention,
    rho: f64,
    rel_tol: f64,
) -> Result<f64> {
    let spec = utility_spec(target, profile, params, convention)?;
    let scale = (spec.mean_intercept / rho + spec.mean_slope / (rho * rho))
        .abs()
        .max(1e-8);
    for k in 1..=2_000 {
        let t = k as f64 / rho;
        if tail_bound(spec.mean_intercept, spec.mean_slope, rho, t) <= rel_tol * scale {
            return Ok(t);
        }
    }
    Ok(2_000.0 / rho)
}

/// Regression slopes of the leave-one-out aggregate's mean and variance,
/// with standard errors.
///
/// The mean slope is the per-path least-squares slope of `ln Qhat^{-i}`
/// against time, averaged over paths (paths are independent, so the
/// standard error is the sample one). The variance slope is a
/// through-origin fit of the cross-path variance against time, block
/// bootstrapped over contiguous path blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub mean_slope: f64,
    pub mean_slope_se: f64,
    pub variance_slope: f64,
    pub variance_slope_se: f64,
}

pub fn aggregate_path_stats(
    index: usize,
    ensemble: &PathEnsemble,
    params: &GameParams,
) -> Result<AggregateStats> {
    params.agent(index)?;
    if params.n_agents() != ensemble.n_agents() {
        return Err(Error::ProfileLength {
            profile: ensemble.n_agents(),
            n_agents: params.n_agents(),
        });
    }
    let n_points = ensemble.grid().n_points();
    let n_agents = ensemble.n_agents();
    let nf = n_agents as f64;
    let n_paths = ensemble.n_paths();
    let times = ensemble.grid().times();

    // ln Qhat^{-i}(t_k) per (path, k): mean of the other agents' logs.
    let hat = |block: &[f64], k: usize| -> f64 {
        let row = &block[k * n_agents..(k + 1) * n_agents];
        let mut s = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if j != index {
                s += v;
            }
        }
        s / nf
    };

    // Per-path least-squares slope weights.
    let tbar = neumaier_sum(times.iter().copied()) / n_points as f64;
    let sxx = neumaier_sum(times.iter().map(|&t| (t - tbar) * (t - tbar)));
    let weights: Vec<f64> = times.iter().map(|&t| (t - tbar) / sxx).collect();

    let slopes: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let block = ensemble.path_block(p);
            let mut s = 0.0;
            for (k, &w) in weights.iter().enumerate() {
                s += w * hat(block, k);
            }
            s
        })
        .collect();
    let (mean_slope, mean_slope_se) = mean_and_se(&slopes);

    // Cross-path variance of ln Qhat at each grid point, per block of paths.
    let n_blocks = (n_paths / 100).clamp(1, 50);
    let block_size = n_paths / n_blocks;
    let block_slopes: Vec<f64> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * block_size;
            let hi = lo + block_size;
            let m = (hi - lo) as f64;
            // Two-pass variance per grid point; a one-pass formula loses
            // the noise-free case to cancellation.
            let mut values = vec![0.0f64; (hi - lo) * n_points];
            for (local, p) in (lo..hi).enumerate() {
                let block = ensemble.path_block(p);
                for k in 0..n_points {
                    values[local * n_points + k] = hat(block, k);
                }
            }
            let mut variances = vec![0.0f64; n_points];
            for (k, var) in variances.iter_mut().enumerate() {
                let mut sum = 0.0;
                for local in 0..hi - lo {
                    sum += values[local * n_points + k];
                }
                let mean = sum / m;
                if hi - lo > 1 {
                    let mut ss = 0.0;
                    for local in 0..hi - lo {
                        let d = values[local * n_points + k] - mean;
                        ss += d * d;
                    }
                    *var = ss / (m - 1.0);
                }
            }
            crate::numeric::slope_through_origin(&times, &variances)
        })
        .collect();
    let (variance_slope, variance_slope_se) = mean_and_se(&block_slopes);
    Ok(AggregateStats {
        mean_slope,
        mean_slope_se,
        variance_slope,
        variance_slope_se,
    })
}

/// Equal-weight empirical measure of the sampled states at one grid point,
/// pooled over all paths and the requested (distinct) agents.
pub fn empirical_measure(
    ensemble: &PathEnsemble,
    t_index: usize,
    agents: &[usize],
) -> Result<DiscreteMeasure> {
    if t_index >= ensemble.grid().n_points() {
        return Err(Error::EnsembleIndex("time index out of range"));
    }
    if agents.is_empty() {
        return Err(Error::InvalidArgument("agent set must be non-empty"));
    }
    let mut seen = vec![false; ensemble.n_agents()];
    for &i in agents {
        if i >= ensemble.n_agents() {
            return Err(Error::AgentIndex {
                index: i,
                n_agents: ensemble.n_agents(),
            });
        }
        if seen[i] {
            return Err(Error::InvalidArgument("agent set contains a duplicate"));
        }
        seen[i] = true;
    }
    let mut points = Vec::with_capacity(ensemble.n_paths() * agents.len());
    for p in 0..ensemble.n_paths() {
        for &i in agents {
            points.push(ensemble.log_state(p, t_index, i).exp());
        }
    }
    DiscreteMeasure::equal_weights(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AgentParams;

    fn agent() -> AgentParams {
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
    fn grid_validation_and_times() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        let g = TimeGrid::new(10.0, 4).unwrap();
        assert_eq!(g.dt(), 2.5);
        assert_eq!(g.times(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn noise_free_paths_are_exact_exponentials() {
        let mut a = agent();
        a.mu = 0.0;
        a.nu = 0.0;
        let params = GameParams::homogeneous(a, 2, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.05, 2).unwrap();
        let grid = TimeGrid::new(10.0, 10).unwrap();
        let ens = sample_paths(&params, &profile, &grid, 3, 7).unwrap();
        for p in 0..3 {
            for i in 0..2 {
                // ln Q(10) = (0.1 - 0.05) * 10 = 0.5 on every path.
                assert!((ens.log_state(p, 10, i) - 0.5).abs() < 1e-12);
                assert!((ens.log_state(p, 0, i) - 0.0).abs() == 0.0);
            }
        }
    }

    #[test]
    fn ensembles_are_bit_reproducible() {
        let params = GameParams::homogeneous(agent(), 3, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.03, 3).unwrap();
        let grid = TimeGrid::new(2.0, 16).unwrap();
        let a = sample_paths(&params, &profile, &grid, 25, 99).unwrap();
        let b = sample_paths(&params, &profile, &grid, 25, 99).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(a.as_slice().iter().all(|v| v.is_finite()));
        let c = sample_paths(&params, &profile, &grid, 25, 100).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn euler_cross_check_carries_the_expected_bias() {
        // Noise-free: the explicit scheme compounds (1 + g dt)^k while the
        // exact scheme gives e^{g t}; the log gap shrinks linearly in dt.
        let mut a = agent();
        a.mu = 0.0;
        a.nu = 0.0;
        let params = GameParams::homogeneous(a, 1, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.05, 1).unwrap();
        let g = a.gamma - 0.05;
        let mut gaps = Vec::new();
        for n_steps in [10usize, 20, 40] {
            let grid = TimeGrid::new(10.0, n_steps).unwrap();
            let ens = sample_paths_with_scheme(
                &params,
                &profile,
                &grid,
                1,
                0,
                0,
                SamplingScheme::EulerLevel,
            )
            .unwrap();
            let euler = ens.log_state(0, n_steps, 0);
            let dt = grid.dt();
            let predicted = n_steps as f64 * (1.0 + g * dt).ln();
            assert!((euler - predicted).abs() < 1e-12);
            gaps.push((0.5 - euler).abs());
        }
        // Halving dt roughly halves the weak bias.
        assert!(gaps[0] > 1.8 * gaps[1] && gaps[1] > 1.8 * gaps[2]);
        // The exact scheme has no such bias at any step count.
        let grid = TimeGrid::new(10.0, 10).unwrap();
        let exact = sample_paths(&params, &profile, &grid, 1, 0).unwrap();
        assert!((exact.log_state(0, 10, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oversize_request_is_rejected() {
        let params = GameParams::homogeneous(agent(), 4, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.03, 4).unwrap();
        let grid = TimeGrid::new(1.0, 1 << 20).unwrap();
        let err = sample_paths(&params, &profile, &grid, 1 << 20, 1).unwrap_err();
        assert!(matches!(err, Error::EnsembleTooLarge { .. }));
    }

    #[test]
    fn deterministic_payoff_matches_closed_form() {
        // mu = nu = 0, rho=0.1, theta=1, eta=0, gamma=0.1, alpha=0.05, q0=1:
        // J = (1/rho) ln(alpha) + (1/rho^2)(1+theta)(gamma-alpha).
        let mut a = agent();
        a.mu = 0.0;
        a.nu = 0.0;
        a.eta = 0.0;
        let params = GameParams::homogeneous(a, 2, 0.1).unwrap();
        let profile = StrategyProfile::constant(0.05, 2).unwrap();
        let grid = TimeGrid::new(200.0, 20_000).unwrap();
        let ens = sample_paths(&params, &profile, &grid, 2, 5).unwrap();
        let est = estimate_payoff_mc(
            PayoffTarget::Agent(0),
            &ens,
            &params,
            UtilityConvention::Inclusive,
            0.1,
        )
        .unwrap();
        let exact = 10.0 * 0.05f64.ln() + 100.0 * 2.0 * 0.05;
        assert!((exact - (-19.957_322_735_539_91)).abs() < 1e-12);
        assert!(est.std_error == 0.0);
        assert!(
            (est.estimate - exact).abs() <= est.truncation_bound + est.quadrature_bound,
            "error {} exceeds reported budget {}",
            (est.estimate - exact).abs(),
            est.truncation_bound + est.quadrature_bound
        );
        assert!((est.estimate - exact).abs() < 1e-4);
    }

    #[test]
    fn streaming_estimator_is_bit_identical_to_stored() {
        let params = GameParams::homogeneous(agent(), 3, 0.08).unwrap();
        let profile = StrategyProfile::new(vec![0.02, 0.05, 0.04]).unwrap();
        let grid = TimeGrid::new(50.0, 128).unwrap();
        let ens = sample_paths(&params, &profile, &grid, 500, 12).unwrap();
        for target in [PayoffTarget::Agent(1), PayoffTarget::Planner] {
            let stored = estimate_payoff_mc(
                target,
                &ens,
                &params,
                UtilityConvention::Inclusive,
                0.08,
            )
            .unwrap();
            let streamed = estimate_payoff_mc_streaming(
                target,
                &params,
                &profile,
                &grid,
                500,
                12,
                UtilityConvention::Inclusive,
                0.08,
            )
            .unwrap();
            assert_eq!(stored.estimate.to_bits(), streamed.estimate.to_bits());
            assert_eq!(stored.std_error.to_bits(), streamed.std_error.to_bits());
        }
    }

    #[test]
    fn payoff_under_zero_eta_ignores_other_agents_rates() {
        let mut a = agent();
        a.eta = 0.0;
        let params = GameParams::homogeneous(a, 2, 0.1).unwrap();
        let grid = TimeGrid::new(100.0, 256).unwrap();
        let p1 = StrategyProfile::new(vec![0.05, 0.01]).unwrap();
        let p2 = StrategyProfile::new(vec![0.05, 0.20]).unwrap();
        let e1 = sample_paths(&params, &p1, &grid, 200, 3).unwrap();
        let e2 = sample_paths(&params, &p2, &grid, 200, 3).unwrap();
        let j1 = estimate_payoff_mc(PayoffTarget::Agent(0), &e1, &params, UtilityConvention::Inclusive, 0.1).unwrap();
        let j2 = estimate_payoff_mc(PayoffTarget::Agent(0), &e2, &params, UtilityConvention::Inclusive, 0.1).unwrap();
        // Same seed, same own rate, eta = 0: agent 0's payoff is untouched.
        assert_eq!(j1.estimate.to_bits(), j2.estimate.to_bits());
    }

    #[test]
    fn suggested_horizon_controls_the_tail() {
        let params = GameParams::homogeneous(agent(), 2, 0.1).unwrap();
        let profile = StrategyProfile::constant(0.05, 2).unwrap();
        let t = suggest_t_max(
            PayoffTarget::Agent(0),
            &params,
            &profile,
            UtilityConvention::Inclusive,
            0.1,
            1e-6,
        )
        .unwrap();
        assert!(t > 10.0 && t < 2_000.0);
    }

    #[test]
    fn aggregate_stats_noise_free() {
        let mut a = agent();
        a.mu = 0.0;
        a.nu = 0.0;
        let params = GameParams::homogeneous(a, 2, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.05, 2).unwrap();
        let grid = TimeGrid::new(5.0, 10).unwrap();
        let ens = sample_paths(&params, &profile, &grid, 50, 1).unwrap();
        let stats = aggregate_path_stats(0, &ens, &params).unwrap();
        // ghat = (1/2)(0.1 - 0.05) = 0.025 without noise.
        assert!((stats.mean_slope - 0.025).abs() < 1e-12);
        assert_eq!(stats.mean_slope_se, 0.0);
        assert!(stats.variance_slope.abs() < 1e-24);
        assert_eq!(stats.variance_slope_se, 0.0);
    }

    #[test]
    fn empirical_measure_snapshots() {
        let params = GameParams::homogeneous(agent(), 1, 0.05).unwrap();
        let profile = StrategyProfile::constant(0.05, 1).unwrap();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let ens = sample_paths(&params, &profile, &grid, 3, 11).unwrap();
        // t = 0 is the point mass at q0.
        let m0 = empirical_measure(&ens, 0, &[0]).unwrap();
        assert_eq!(m0.len(), 3);
        assert!(m0.atoms().iter().all(|&(q, _)| (q - 1.0).abs() < 1e-15));
        assert!((m0.log_moment()).abs() < 1e-15);
        // Out-of-range requests fail.
        assert!(empirical_measure(&ens, 3, &[0]).is_err());
        assert!(empirical_measure(&ens, 0, &[1]).is_err());
        assert!(empirical_measure(&ens, 0, &[0, 0]).is_err());
        assert!(empirical_measure(&ens, 0, &[]).is_err());
    }

    #[test]
    fn empirical_measure_mean_log_matches_cross_section() {
        // Three known atoms: construct directly from a 3-path, far-apart
        // ensemble is overkill; use the measure itself.
        let e = std::f64::consts::E;
        let m = DiscreteMeasure::equal_weights(&[1.0, e, e * e]).unwrap();
        assert!((m.log_moment() - 1.0).abs() < 1e-14);
    }
}
