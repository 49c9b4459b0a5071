//! Best responses and best-response iteration.
//!
//! Each agent's payoff is concave in its own allocation block (strictly so
//! when every throughput weight is positive and the link capacities differ).
//! Within one block the coupling term depends on the allocation only through
//! the agent's aggregate NTN demand: the two hinge arguments sum to a
//! constant once the other agent is fixed. The inner solver exploits this by
//! bisecting on a scalar congestion price `s`. For a given price, each
//! slice's allocation is an independent one-dimensional concave maximization
//! (safeguarded Newton on the analytic derivative with bisection fallback,
//! clamped to [0, 1]); the price is then driven to consistency with the
//! penalty slope at the implied aggregate. The consistency map is strictly
//! increasing, so the bisection converges globally, and each evaluation is
//! O(N) — one scalar search per slice.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    agent_link_demands, coupling_from_aggregates, potential, potential_gradient,
    slice_utility_derivative, slice_utility_second_derivative,
};
use crate::types::{Agent, AllocationVector, GameState, LinkTelemetry, SliceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Max-norm allocation change below which BRI declares convergence.
    pub tolerance: f64,
    /// Maximum number of full (both-agent) BRI sweeps.
    pub max_sweeps: usize,
    /// Per-coordinate search budget inside one best response.
    pub inner_max_iters: usize,
    /// Finite-difference step for numerical checks.
    pub fd_step: f64,
    /// Which agent moves first in each sweep.
    pub first_mover: Agent,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-4,
            max_sweeps: 50,
            inner_max_iters: 100,
            fd_step: 1e-6,
            first_mover: Agent::Dl,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::domain(format!(
                "solver tolerance must be strictly positive, got {}",
                self.tolerance
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::domain("max_sweeps must be >= 1".to_string()));
        }
        if self.inner_max_iters == 0 {
            return Err(Error::domain("inner_max_iters must be >= 1".to_string()));
        }
        if !self.fd_step.is_finite() || self.fd_step <= 0.0 {
            return Err(Error::domain(format!(
                "fd_step must be strictly positive, got {}",
                self.fd_step
            )));
        }
        Ok(())
    }
}

/// Record of one BRI run.
#[derive(Debug, Clone, Serialize)]
pub struct SolveTrace {
    /// Full sweeps executed.
    pub sweeps: usize,
    /// Potential before the first sweep and after each sweep; non-decreasing
    /// up to 1e-9 slack (best responses ascend the exact potential).
    pub potential_trajectory: Vec<f64>,
    /// Projected-gradient max-norm of the potential at the final profile.
    pub final_gradient_norm: f64,
    pub converged: bool,
}

/// One agent's decentralized view of the game: its own slices and telemetry
/// plus the opposing agent's per-link aggregate loads. This is the entire
/// controller input in the decentralized setting; nothing about the opposing
/// agent's slices or allocation enters beyond the two aggregates.
#[derive(Debug, Clone)]
pub struct AgentProblem<'a> {
    pub slices: &'a [SliceSpec],
    pub ntn: &'a LinkTelemetry,
    pub fib: &'a LinkTelemetry,
    pub coupling_coeff: f64,
    /// Opposing agent's aggregate NTN load, Mbps.
    pub other_ntn_mbps: f64,
    /// Opposing agent's aggregate fiber load, Mbps.
    pub other_fib_mbps: f64,
}

impl AgentProblem<'_> {
    /// The agent's payoff at `alloc` under this view. Equals the game payoff
    /// when the aggregates come from the true opposing allocation.
    pub fn payoff(&self, alloc: &AllocationVector) -> Result<f64> {
        let mut utilities = 0.0;
        for (spec, &alpha) in self.slices.iter().zip(alloc.as_slice()) {
            utilities += spec.priority * crate::game::slice_utility(alpha, spec, self.ntn, self.fib)?;
        }
        let (own_ntn, own_fib) = agent_link_demands(alloc, self.slices)?;
        let c = coupling_from_aggregates(
            self.other_ntn_mbps + own_ntn,
            self.other_fib_mbps + own_fib,
            self.ntn.capacity_mbps,
            self.fib.capacity_mbps,
        );
        Ok(utilities - self.coupling_coeff * c)
    }
}

/// Result of [`verify_equilibrium`].
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    /// Largest payoff gain any sampled unilateral deviation achieved.
    pub max_unilateral_gain: f64,
    pub is_equilibrium: bool,
}

/// Result of [`check_concavity`].
#[derive(Debug, Clone, Serialize)]
pub struct ConcavityReport {
    /// Interior points actually probed.
    pub points: usize,
    /// Largest Hessian eigenvalue seen across all probes.
    pub max_eigenvalue: f64,
    pub all_negative: bool,
    /// Worst relative error between the analytic Hessian diagonal and its
    /// numerical second difference.
    pub max_diag_rel_err: f64,
    pub diag_ok: bool,
    /// Oversubscription-indicator multipliers observed; each must be 0, 2 or 4.
    pub kappa_values: Vec<u8>,
    pub kappa_ok: bool,
}

const INTERVAL_EPS: f64 = 1e-12;

/// Maximizes a scalar concave payoff over [0, 1] given its first and second
/// derivatives. `prev` is returned unchanged when the payoff is flat (the
/// deterministic tie-break).
fn maximize_coordinate<F, G>(d1: F, d2: G, prev: f64, max_iters: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let at_zero = d1(0.0);
    let at_one = d1(1.0);
    if at_zero == 0.0 && at_one == 0.0 {
        // Concave derivative is non-increasing, so it vanishes on all of
        // [0, 1]: keep the previous allocation.
        return Ok(prev.clamp(0.0, 1.0));
    }
    if at_zero <= 0.0 {
        return Ok(0.0);
    }
    if at_one >= 0.0 {
        return Ok(1.0);
    }

    // The derivative crosses zero in (0, 1). Newton steps are safeguarded by
    // the shrinking bracket [lo, hi].
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut x = if prev > 0.0 && prev < 1.0 { prev } else { 0.5 };
    for _ in 0..max_iters {
        let d = d1(x);
        if d > 0.0 {
            lo = x;
        } else if d < 0.0 {
            hi = x;
        } else {
            return Ok(x);
        }
        if hi - lo < INTERVAL_EPS {
            return Ok(0.5 * (lo + hi));
        }
        let curvature = d2(x);
        let newton = if curvature < 0.0 { x - d / curvature } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // One-sided Newton convergence never closes the bracket, so a
        // vanishing step is also a terminal state.
        if (next - x).abs() < INTERVAL_EPS {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Solver {
        message: "coordinate search exhausted its iteration budget".to_string(),
        best: AllocationVector(vec![x]),
    })
}

/// Bisection budget for the congestion-price search. The interval halves
/// each step, so the relative-width exit below fires long before this.
const MAX_PRICE_ITERS: usize = 200;

/// Best response of one agent given its decentralized view, warm-started
/// from `start`. Returns the argmax of the agent's payoff over [0, 1]^N.
pub fn best_response_local(
    problem: &AgentProblem<'_>,
    start: &AllocationVector,
    cfg: &SolverConfig,
) -> Result<AllocationVector> {
    cfg.validate()?;
    if start.len() != problem.slices.len() {
        return Err(Error::contract(format!(
            "start allocation length {} != slice count {}",
            start.len(),
            problem.slices.len()
        )));
    }
    let n = problem.slices.len();
    let mut alpha: Vec<f64> = start.as_slice().iter().map(|a| a.clamp(0.0, 1.0)).collect();
    let mu = problem.coupling_coeff;
    let cap_ntn = problem.ntn.capacity_mbps;
    let cap_fib = problem.fib.capacity_mbps;

    let own_total: f64 = problem.slices.iter().map(|s| s.demand_mbps).sum();
    // With the opposing agent fixed, the two hinge arguments sum to a
    // constant, so the penalty slope is a function of the agent's aggregate
    // NTN demand alone.
    let grand_total = problem.other_ntn_mbps + problem.other_fib_mbps + own_total;
    let penalty_slope = |d_ntn: f64| {
        2.0 * (d_ntn - cap_ntn).max(0.0) - 2.0 * ((grand_total - d_ntn) - cap_fib).max(0.0)
    };

    // Per-slice maximizer of pi*U(alpha) - s*b*alpha for a given price.
    let solve_at_price = |s: f64, warm: &mut Vec<f64>| -> Result<f64> {
        let mut d_ntn = problem.other_ntn_mbps;
        for u in 0..n {
            let spec = &problem.slices[u];
            let b = spec.demand_mbps;
            let d1 = |a: f64| {
                spec.priority * slice_utility_derivative(a, spec, problem.ntn, problem.fib) - s * b
            };
            let d2 = |a: f64| {
                spec.priority * slice_utility_second_derivative(a, spec, problem.ntn, problem.fib)
            };
            let new = maximize_coordinate(d1, d2, warm[u], cfg.inner_max_iters).map_err(|_| {
                Error::Solver {
                    message: format!("slice {u} search exhausted its iteration budget"),
                    best: AllocationVector(warm.clone()),
                }
            })?;
            warm[u] = new;
            d_ntn += new * b;
        }
        Ok(d_ntn)
    };

    let price_min = mu * penalty_slope(problem.other_ntn_mbps);
    let price_max = mu * penalty_slope(problem.other_ntn_mbps + own_total);
    if price_min == price_max {
        // The penalty slope is constant over every reachable aggregate (in
        // particular mu = 0 or both hinges unreachable): one pass suffices.
        solve_at_price(price_min, &mut alpha)?;
        return Ok(AllocationVector(alpha));
    }

    // The consistency gap s - mu*slope(d_ntn(s)) is strictly increasing and
    // brackets zero on [price_min, price_max].
    let mut lo = price_min;
    let mut hi = price_max;
    let width_eps = 1e-11 * (1.0 + lo.abs() + hi.abs());
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_PRICE_ITERS {
        mid = 0.5 * (lo + hi);
        let d_ntn = solve_at_price(mid, &mut alpha)?;
        let gap = mid - mu * penalty_slope(d_ntn);
        if gap == 0.0 || hi - lo < width_eps {
            break;
        }
        if gap < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `alpha` already holds the solution at the final mid price.
    let _ = mid;
    Ok(AllocationVector(alpha))
}

/// Best response of `agent` in the full game state, holding the other
/// agent's allocation fixed.
pub fn best_response(agent: Agent, state: &GameState, cfg: &SolverConfig) -> Result<AllocationVector> {
    state.validate()?;
    state.require_distinct_capacities()?;
    let other = agent.other();
    let (other_ntn, other_fib) = agent_link_demands(state.alloc(other), state.slices(other))?;
    let problem = AgentProblem {
        slices: state.slices(agent),
        ntn: &state.ntn,
        fib: &state.fib,
        coupling_coeff: state.coupling_coeff,
        other_ntn_mbps: other_ntn,
        other_fib_mbps: other_fib,
    };
    best_response_local(&problem, state.alloc(agent), cfg)
}

/// Max-norm of the projected gradient of the potential: the largest
/// first-order improvement available to any coordinate inside the box.
pub fn projected_gradient_norm(state: &GameState) -> Result<f64> {
    let grad = potential_gradient(state)?;
    let alphas: Vec<f64> = state
        .dl_alloc
        .as_slice()
        .iter()
        .chain(state.ul_alloc.as_slice())
        .copied()
        .collect();
    let mut norm: f64 = 0.0;
    for (g, a) in grad.iter().zip(&alphas) {
        let residual = if *a <= 0.0 {
            g.max(0.0)
        } else if *a >= 1.0 {
            (-g).max(0.0)
        } else {
            g.abs()
        };
        norm = norm.max(residual);
    }
    Ok(norm)
}

/// Alternating best-response iteration from `initial` to the unique Nash
/// equilibrium. Sweeps stop when the joint allocation moves less than the
/// tolerance in max-norm or the projected gradient of the potential falls
/// below it; exhausting `max_sweeps` returns `converged = false` rather than
/// an error.
pub fn bri(initial: &GameState, cfg: &SolverConfig) -> Result<(GameState, SolveTrace)> {
    cfg.validate()?;
    initial.validate()?;
    initial.require_distinct_capacities()?;

    let mut state = initial.clone();
    let mut trajectory = vec![potential(&state)?];
    let order = [cfg.first_mover, cfg.first_mover.other()];
    let mut sweeps = 0;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let prev_dl = state.dl_alloc.clone();
        let prev_ul = state.ul_alloc.clone();
        for agent in order {
            let response = best_response(agent, &state, cfg)?;
            state.set_alloc(agent, response);
        }
        trajectory.push(potential(&state)?);
        let change = state
            .dl_alloc
            .max_abs_diff(&prev_dl)
            .max(state.ul_alloc.max_abs_diff(&prev_ul));
        grad_norm = projected_gradient_norm(&state)?;
        if change < cfg.tolerance || grad_norm < cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok((
        state,
        SolveTrace {
            sweeps,
            potential_trajectory: trajectory,
            final_gradient_norm: grad_norm,
            converged,
        },
    ))
}

/// Samples unilateral deviations (random full-block redraws plus every
/// single-coordinate boundary probe) and reports the best payoff gain found.
pub fn verify_equilibrium(
    state: &GameState,
    cfg: &SolverConfig,
    samples: usize,
    seed: u64,
) -> Result<EquilibriumReport> {
    state.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gain: f64 = 0.0;

    for agent in [Agent::Dl, Agent::Ul] {
        let base = crate::game::payoff(agent, state)?;
        let n = state.slices(agent).len();
        let mut probe = |alloc: AllocationVector| -> Result<()> {
            let mut deviated = state.clone();
            deviated.set_alloc(agent, alloc);
            let gain = crate::game::payoff(agent, &deviated)? - base;
            if gain > max_gain {
                max_gain = gain;
            }
            Ok(())
        };

        for u in 0..n {
            for bound in [0.0, 1.0] {
                let mut alloc = state.alloc(agent).clone();
                alloc.0[u] = bound;
                probe(alloc)?;
            }
        }
        for _ in 0..samples {
            let alloc = AllocationVector((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect());
            probe(alloc)?;
        }
    }

    Ok(EquilibriumReport {
        max_unilateral_gain: max_gain,
        is_equilibrium: max_gain <= cfg.tolerance,
    })
}

/// Step used for numerical second differences. Chosen so truncation and
/// roundoff are both far below the 1e-3 relative check on diagonal entries.
const HESSIAN_STEP: f64 = 1e-4;

fn joint_alpha(state: &GameState) -> Vec<f64> {
    state
        .dl_alloc
        .as_slice()
        .iter()
        .chain(state.ul_alloc.as_slice())
        .copied()
        .collect()
}

fn with_joint_alpha(state: &GameState, alpha: &[f64]) -> GameState {
    let n = state.dl_slices.len();
    let mut next = state.clone();
    next.dl_alloc = AllocationVector(alpha[..n].to_vec());
    next.ul_alloc = AllocationVector(alpha[n..].to_vec());
    next
}

/// Numerically estimates the Hessian of the potential at random interior
/// points and verifies strict concavity, the analytic diagonal entries and
/// the oversubscription-indicator multiplier.
pub fn check_concavity(
    state: &GameState,
    points: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    state.validate()?;
    state.require_distinct_capacities()?;
    if points == 0 {
        return Err(Error::domain("concavity check needs at least one point"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = state.dl_slices.len() + state.ul_slices.len();
    let h = HESSIAN_STEP;

    let mut max_eig = f64::NEG_INFINITY;
    let mut max_diag_rel_err: f64 = 0.0;
    let mut kappa_values = Vec::new();
    let mut probed = 0;

    'points: for _ in 0..points {
        // Resample until the probe sits away from every hinge kink; the
        // second differences below step 2h in each coordinate.
        let mut probe = None;
        for _ in 0..1000 {
            let alpha: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..0.95)).collect();
            let candidate = with_joint_alpha(state, &alpha);
            if crate::synth::clear_of_kinks(&candidate, 4.0 * h) {
                probe = Some(candidate);
                break;
            }
        }
        let Some(probe) = probe else { continue 'points };
        probed += 1;

        let alpha = joint_alpha(&probe);
        let phi = |a: &[f64]| -> Result<f64> { potential(&with_joint_alpha(&probe, a)) };
        let center = phi(&alpha)?;

        let mut hess = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut plus = alpha.clone();
            let mut minus = alpha.clone();
            plus[i] += h;
            minus[i] -= h;
            hess[(i, i)] = (phi(&plus)? - 2.0 * center + phi(&minus)?) / (h * h);
            for j in (i + 1)..dim {
                let mut pp = alpha.clone();
                let mut pm = alpha.clone();
                let mut mp = alpha.clone();
                let mut mm = alpha.clone();
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                let v = (phi(&pp)? - phi(&pm)? - phi(&mp)? + phi(&mm)?) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }

        let eigen = hess.clone().symmetric_eigen();
        for ev in eigen.eigenvalues.iter() {
            max_eig = max_eig.max(*ev);
        }

        // Analytic diagonal: priority-weighted utility curvature plus the
        // rank-1 coupling correction with multiplier kappa in {0, 2, 4}.
        let (d_ntn, d_fib) = crate::game::aggregate_demands(&probe)?;
        let ind_ntn = (d_ntn > probe.ntn.capacity_mbps) as u8;
        let ind_fib = (d_fib > probe.fib.capacity_mbps) as u8;
        let kappa = 2 * (ind_ntn + ind_fib);
        if !kappa_values.contains(&kappa) {
            kappa_values.push(kappa);
        }
        let mut idx = 0;
        for agent in [Agent::Dl, Agent::Ul] {
            let slices = probe.slices(agent);
            let alloc = probe.alloc(agent);
            for (spec, &a) in slices.iter().zip(alloc.as_slice()) {
                let analytic = spec.priority
                    * slice_utility_second_derivative(a, spec, &probe.ntn, &probe.fib)
                    - probe.coupling_coeff
                        * f64::from(kappa)
                        * spec.demand_mbps
                        * spec.demand_mbps;
                let numeric = hess[(idx, idx)];
                let rel = (analytic - numeric).abs() / analytic.abs().max(1e-6);
                max_diag_rel_err = max_diag_rel_err.max(rel);
                idx += 1;
            }
        }
    }

    kappa_values.sort_unstable();
    let kappa_ok = kappa_values.iter().all(|k| matches!(k, 0 | 2 | 4));
    Ok(ConcavityReport {
        points: probed,
        max_eigenvalue: max_eig,
        all_negative: probed > 0 && max_eig < 0.0,
        max_diag_rel_err,
        diag_ok: max_diag_rel_err < 1e-3,
        kappa_values,
        kappa_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_solver_instance, random_state};
    use crate::types::{SliceClass, UtilityWeights};

    fn single_slice_state(ntn: LinkTelemetry, fib: LinkTelemetry, mu: f64) -> GameState {
        GameState {
            dl_slices: vec![SliceSpec::preset(SliceClass::V2x, 10.0)],
            ul_slices: vec![],
            dl_alloc: AllocationVector(vec![0.5]),
            ul_alloc: AllocationVector(vec![]),
            ntn,
            fib,
            coupling_coeff: mu,
        }
    }

    #[test]
    fn fiber_dominant_slice_settles_at_zero() {
        // NTN strictly worse on RTT and loss, smaller capacity, no coupling.
        let state = single_slice_state(
            LinkTelemetry::new(80.0, 10.0, 0.05, 40.0),
            LinkTelemetry::new(5.0, 0.5, 0.0, 120.0),
            0.0,
        );
        let br = best_response(Agent::Dl, &state, &SolverConfig::default()).unwrap();
        assert_eq!(br.as_slice(), &[0.0]);
    }

    #[test]
    fn larger_ntn_capacity_with_pure_throughput_weight_settles_at_one() {
        let mut state = single_slice_state(
            LinkTelemetry::new(10.0, 1.0, 0.0, 150.0),
            LinkTelemetry::new(10.0, 1.0, 0.0, 50.0),
            0.0,
        );
        state.dl_slices[0].weights = UtilityWeights::new(1.0, 0.0, 0.0, 0.0, 0.0);
        let br = best_response(Agent::Dl, &state, &SolverConfig::default()).unwrap();
        assert_eq!(br.as_slice(), &[1.0]);
    }

    #[test]
    fn flat_payoff_keeps_previous_allocation() {
        let mut state = single_slice_state(
            LinkTelemetry::new(10.0, 1.0, 0.0, 60.0),
            LinkTelemetry::new(10.0, 1.0, 0.0, 100.0),
            0.0,
        );
        state.dl_slices[0].weights = UtilityWeights::new(0.0, 0.0, 0.0, 0.0, 0.0);
        state.dl_alloc = AllocationVector(vec![0.37]);
        let br = best_response(Agent::Dl, &state, &SolverConfig::default()).unwrap();
        assert_eq!(br.as_slice(), &[0.37]);
    }

    #[test]
    fn best_response_stays_in_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let state = random_state(&mut rng, 4, 3);
            for agent in [Agent::Dl, Agent::Ul] {
                let br = best_response(agent, &state, &SolverConfig::default()).unwrap();
                assert!(br.as_slice().iter().all(|a| (0.0..=1.0).contains(a)));
            }
        }
    }

    #[test]
    fn bri_converges_in_one_sweep_when_decoupled() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut state = random_state(&mut rng, 3, 3);
            state.coupling_coeff = 0.0;
            let (_, trace) = bri(&state, &SolverConfig::default()).unwrap();
            assert!(trace.converged);
            assert_eq!(trace.sweeps, 1);
        }
    }

    #[test]
    fn bri_at_a_fixed_point_stops_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let state = random_solver_instance(&mut rng, 3, 2);
        let cfg = SolverConfig::default();
        let (equilibrium, trace) = bri(&state, &cfg).unwrap();
        assert!(trace.converged);
        let (again, trace2) = bri(&equilibrium, &cfg).unwrap();
        assert!(trace2.converged);
        assert_eq!(trace2.sweeps, 1);
        assert!(equilibrium.dl_alloc.max_abs_diff(&again.dl_alloc) < cfg.tolerance);
        assert!(equilibrium.ul_alloc.max_abs_diff(&again.ul_alloc) < cfg.tolerance);
    }

    #[test]
    fn bri_rejects_equal_capacity_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = random_state(&mut rng, 2, 2);
        state.fib.capacity_mbps = state.ntn.capacity_mbps;
        let err = bri(&state, &SolverConfig::default()).unwrap_err();
        assert!(err.to_string().contains("standing assumption"));
    }

    #[test]
    fn potential_trajectory_is_nondecreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let state = random_state(&mut rng, 4, 4);
            let (_, trace) = bri(&state, &SolverConfig::default()).unwrap();
            for pair in trace.potential_trajectory.windows(2) {
                assert!(
                    pair[1] >= pair[0] - 1e-9,
                    "potential decreased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn converged_bri_passes_equilibrium_verification() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = SolverConfig::default();
        for round in 0..10 {
            let state = random_solver_instance(&mut rng, 3, 3);
            let (equilibrium, trace) = bri(&state, &cfg).unwrap();
            assert!(trace.converged);
            let report = verify_equilibrium(&equilibrium, &cfg, 200, 1000 + round).unwrap();
            assert!(
                report.is_equilibrium,
                "max unilateral gain {}",
                report.max_unilateral_gain
            );
            assert!(report.max_unilateral_gain <= 1e-4);
        }
    }

    #[test]
    fn perturbed_equilibrium_fails_verification() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = SolverConfig::default();
        let state = random_solver_instance(&mut rng, 3, 3);
        let (mut equilibrium, _) = bri(&state, &cfg).unwrap();
        let a = equilibrium.dl_alloc.0[0];
        equilibrium.dl_alloc.0[0] = if a <= 0.5 { a + 0.2 } else { a - 0.2 };
        let report = verify_equilibrium(&equilibrium, &cfg, 100, 99).unwrap();
        assert!(!report.is_equilibrium);
    }

    #[test]
    fn boundary_optimum_verifies_as_equilibrium() {
        let mut state = single_slice_state(
            LinkTelemetry::new(80.0, 10.0, 0.05, 40.0),
            LinkTelemetry::new(5.0, 0.5, 0.0, 120.0),
            0.0,
        );
        state.dl_alloc = AllocationVector(vec![0.0]);
        let report = verify_equilibrium(&state, &SolverConfig::default(), 100, 7).unwrap();
        assert!(report.is_equilibrium);
    }

    #[test]
    fn concavity_holds_with_default_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let state = random_state(&mut rng, 3, 2);
        let report = check_concavity(&state, 20, 21).unwrap();
        assert!(report.points > 0);
        assert!(report.all_negative, "max eigenvalue {}", report.max_eigenvalue);
        assert!(report.diag_ok, "diag rel err {}", report.max_diag_rel_err);
        assert!(report.kappa_ok, "kappa values {:?}", report.kappa_values);
    }

    #[test]
    fn concavity_check_rejects_equal_capacities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut state = random_state(&mut rng, 2, 2);
        state.fib.capacity_mbps = state.ntn.capacity_mbps;
        let err = check_concavity(&state, 5, 1).unwrap_err();
        assert!(err.to_string().contains("standing assumption"));
    }

    #[test]
    fn zero_throughput_weight_is_reported_not_asserted() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut state = random_state(&mut rng, 2, 2);
        state.ntn.loss = 0.0;
        state.fib.loss = 0.0;
        for spec in state.dl_slices.iter_mut().chain(state.ul_slices.iter_mut()) {
            spec.weights = UtilityWeights::new(0.0, 0.1, 0.1, 0.0, 0.0);
        }
        // Capacities far above demand keep every hinge inactive, so the
        // Hessian is identically zero; the report must simply say so.
        state.ntn.capacity_mbps = 10_000.0;
        state.fib.capacity_mbps = 20_000.0;
        let report = check_concavity(&state, 5, 2).unwrap();
        assert!(!report.all_negative);
    }

    #[test]
    fn order_invariance_of_the_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let state = random_solver_instance(&mut rng, 3, 3);
            let dl_first = SolverConfig {
                first_mover: Agent::Dl,
                ..SolverConfig::default()
            };
            let ul_first = SolverConfig {
                first_mover: Agent::Ul,
                ..SolverConfig::default()
            };
            let (a, ta) = bri(&state, &dl_first).unwrap();
            let (b, tb) = bri(&state, &ul_first).unwrap();
            assert!(ta.converged && tb.converged);
            let tol = 10.0 * dl_first.tolerance;
            assert!(a.dl_alloc.max_abs_diff(&b.dl_alloc) < tol);
            assert!(a.ul_alloc.max_abs_diff(&b.ul_alloc) < tol);
        }
    }
}
