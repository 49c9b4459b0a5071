//! Numerical property suite: exact-potential identity, analytic-gradient
//! check, concavity eigencheck, grid-oracle equivalence and convergence
//! statistics. The CLI `verify` subcommand and the acceptance tests both run
//! these; every failure carries the seed that reproduces it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::game::{coupling_from_aggregates, payoff, potential, potential_gradient, slice_utility};
use crate::solver::{bri, check_concavity, SolverConfig};
use crate::synth::{random_interior_state, random_solver_instance, random_state};
use crate::types::{Agent, AllocationVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Seed that reproduces this run.
    pub seed: u64,
}

impl PropertyResult {
    fn pass(name: &'static str, detail: String, seed: u64) -> Self {
        PropertyResult {
            name,
            passed: true,
            detail,
            seed,
        }
    }

    fn fail(name: &'static str, detail: String, seed: u64) -> Self {
        PropertyResult {
            name,
            passed: false,
            detail,
            seed,
        }
    }
}

/// For random states and unilateral deviations, the payoff change of the
/// deviating agent equals the potential change to within 1e-9.
pub fn exact_potential_identity(pairs_per_agent: usize, seed: u64) -> PropertyResult {
    const NAME: &str = "exact-potential identity";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..pairs_per_agent {
        let n = rng.gen_range(1..6);
        let m = rng.gen_range(1..6);
        let state = random_state(&mut rng, n, m);
        for agent in [Agent::Dl, Agent::Ul] {
            let k = state.slices(agent).len();
            let deviation = AllocationVector((0..k).map(|_| rng.gen_range(0.0..=1.0)).collect());
            let mut deviated = state.clone();
            deviated.set_alloc(agent, deviation);
            let d_payoff = match (payoff(agent, &deviated), payoff(agent, &state)) {
                (Ok(a), Ok(b)) => a - b,
                _ => return PropertyResult::fail(NAME, format!("payoff error at pair {i}"), seed),
            };
            let d_potential = match (potential(&deviated), potential(&state)) {
                (Ok(a), Ok(b)) => a - b,
                _ => return PropertyResult::fail(NAME, format!("potential error at pair {i}"), seed),
            };
            let gap = (d_payoff - d_potential).abs();
            worst = worst.max(gap);
            if gap >= 1e-9 {
                return PropertyResult::fail(
                    NAME,
                    format!("pair {i}, agent {agent}: |dJ - dPhi| = {gap:e}"),
                    seed,
                );
            }
        }
    }
    PropertyResult::pass(
        NAME,
        format!("{pairs_per_agent} deviation pairs per agent, worst gap {worst:.3e}"),
        seed,
    )
}

/// Gradient check against central finite differences at interior points away
/// from hinge kinks. Passes when every component agrees within relative 1e-5
/// (with a 1e-8 absolute floor guarding components near zero crossings).
pub fn gradient_check(points: usize, seed: u64) -> PropertyResult {
    gradient_check_inner(points, seed, false)
}

/// `corrupt = true` flips the sign of the first gradient component, which the
/// check must catch; tests use it as a negative control.
pub(crate) fn gradient_check_inner(points: usize, seed: u64, corrupt: bool) -> PropertyResult {
    const NAME: &str = "analytic gradient vs central differences";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let n = rng.gen_range(1..5);
        let m = rng.gen_range(1..5);
        let state = random_interior_state(&mut rng, n, m, 10.0 * h);
        let mut grad = match potential_gradient(&state) {
            Ok(g) => g,
            Err(e) => return PropertyResult::fail(NAME, format!("point {i}: {e}"), seed),
        };
        if corrupt {
            grad[0] = -grad[0] - 1.0;
        }
        let n_dl = state.dl_slices.len();
        for (idx, analytic) in grad.iter().enumerate() {
            let mut plus = state.clone();
            let mut minus = state.clone();
            let (block_plus, block_minus, j) = if idx < n_dl {
                (&mut plus.dl_alloc, &mut minus.dl_alloc, idx)
            } else {
                (&mut plus.ul_alloc, &mut minus.ul_alloc, idx - n_dl)
            };
            block_plus.0[j] += h;
            block_minus.0[j] -= h;
            let fd = match (potential(&plus), potential(&minus)) {
                (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
                _ => return PropertyResult::fail(NAME, format!("point {i}: eval error"), seed),
            };
            let err = (analytic - fd).abs();
            let rel = err / analytic.abs().max(1.0);
            worst = worst.max(rel);
            if err > (1e-5 * analytic.abs()).max(1e-8) {
                return PropertyResult::fail(
                    NAME,
                    format!("point {i} component {idx}: analytic {analytic} vs fd {fd}"),
                    seed,
                );
            }
        }
    }
    PropertyResult::pass(
        NAME,
        format!("{points} interior points, worst relative error {worst:.3e}"),
        seed,
    )
}

/// Strict concavity: the numerical Hessian of the potential has only
/// negative eigenvalues at random interior points of random default-weight
/// states, the analytic diagonal matches, and the oversubscription
/// multiplier stays in {0, 2, 4}.
pub fn concavity_check(points: usize, seed: u64) -> PropertyResult {
    const NAME: &str = "potential strict concavity";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_eig = f64::NEG_INFINITY;
    let mut probed = 0;
    for i in 0..points {
        let n = rng.gen_range(2..4);
        let m = rng.gen_range(1..4);
        let state = random_state(&mut rng, n, m);
        let report = match check_concavity(&state, 1, seed.wrapping_add(i as u64)) {
            Ok(r) => r,
            Err(e) => return PropertyResult::fail(NAME, format!("state {i}: {e}"), seed),
        };
        if report.points == 0 {
            continue;
        }
        probed += report.points;
        worst_eig = worst_eig.max(report.max_eigenvalue);
        if !report.all_negative {
            return PropertyResult::fail(
                NAME,
                format!("state {i}: max eigenvalue {:.3e} >= 0", report.max_eigenvalue),
                seed,
            );
        }
        if !report.diag_ok {
            return PropertyResult::fail(
                NAME,
                format!(
                    "state {i}: analytic diagonal off by relative {:.3e}",
                    report.max_diag_rel_err
                ),
                seed,
            );
        }
        if !report.kappa_ok {
            return PropertyResult::fail(
                NAME,
                format!("state {i}: unexpected kappa {:?}", report.kappa_values),
                seed,
            );
        }
    }
    PropertyResult::pass(
        NAME,
        format!("{probed} interior Hessians, max eigenvalue {worst_eig:.3e}"),
        seed,
    )
}

/// BRI fixed points match exhaustive grid maximization of the potential over
/// [0,1]^4 (N = M = 2) within one 1e-2 grid cell per coordinate.
pub fn grid_oracle_check(instances: usize, seed: u64) -> PropertyResult {
    const NAME: &str = "BRI vs exhaustive grid oracle";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let state = random_solver_instance(&mut rng, 2, 2);
        let (fixed_point, trace) = match bri(&state, &cfg) {
            Ok(r) => r,
            Err(e) => return PropertyResult::fail(NAME, format!("instance {i}: {e}"), seed),
        };
        if !trace.converged {
            return PropertyResult::fail(
                NAME,
                format!("instance {i}: BRI did not converge in {} sweeps", trace.sweeps),
                seed,
            );
        }
        let grid = grid_argmax_2x2(&state);
        let solved: Vec<f64> = fixed_point
            .dl_alloc
            .as_slice()
            .iter()
            .chain(fixed_point.ul_alloc.as_slice())
            .copied()
            .collect();
        for (idx, (a, g)) in solved.iter().zip(grid.iter()).enumerate() {
            let gap = (a - g).abs();
            worst = worst.max(gap);
            if gap > 0.01 + 1e-9 {
                return PropertyResult::fail(
                    NAME,
                    format!(
                        "instance {i} coordinate {idx}: BRI {a:.4} vs grid {g:.4} (gap {gap:.4})"
                    ),
                    seed,
                );
            }
        }
    }
    PropertyResult::pass(
        NAME,
        format!("{instances} instances, worst coordinate gap {worst:.4}"),
        seed,
    )
}

/// Exhaustive 1e-2-grid maximization of the potential for N = M = 2,
/// exploiting separability: per-slice utilities are tabulated once and the
/// coupling needs only the running demand sums.
fn grid_argmax_2x2(state: &crate::types::GameState) -> [f64; 4] {
    const STEPS: usize = 101;
    let grid: Vec<f64> = (0..STEPS).map(|i| i as f64 / 100.0).collect();

    let slices: Vec<&crate::types::SliceSpec> = state
        .dl_slices
        .iter()
        .chain(state.ul_slices.iter())
        .collect();
    assert_eq!(slices.len(), 4);

    // utility_table[s][i] = pi_s * U_s(grid[i]); demands accumulate linearly.
    let mut utility_table = vec![[0.0f64; STEPS]; 4];
    for (s, spec) in slices.iter().enumerate() {
        for (i, &a) in grid.iter().enumerate() {
            utility_table[s][i] =
                spec.priority * slice_utility(a, spec, &state.ntn, &state.fib).expect("valid");
        }
    }
    let b: Vec<f64> = slices.iter().map(|s| s.demand_mbps).collect();
    let mu = state.coupling_coeff;
    let cap_ntn = state.ntn.capacity_mbps;
    let cap_fib = state.fib.capacity_mbps;

    let mut best_phi = f64::NEG_INFINITY;
    let mut best = [0.0f64; 4];
    for i0 in 0..STEPS {
        let u0 = utility_table[0][i0];
        let n0 = b[0] * grid[i0];
        let f0 = b[0] - n0;
        for i1 in 0..STEPS {
            let u01 = u0 + utility_table[1][i1];
            let n01 = n0 + b[1] * grid[i1];
            let f01 = f0 + b[1] - b[1] * grid[i1];
            for i2 in 0..STEPS {
                let u012 = u01 + utility_table[2][i2];
                let n012 = n01 + b[2] * grid[i2];
                let f012 = f01 + b[2] - b[2] * grid[i2];
                for i3 in 0..STEPS {
                    let util = u012 + utility_table[3][i3];
                    let d_ntn = n012 + b[3] * grid[i3];
                    let d_fib = f012 + b[3] - b[3] * grid[i3];
                    let phi = util - mu * coupling_from_aggregates(d_ntn, d_fib, cap_ntn, cap_fib);
                    if phi > best_phi {
                        best_phi = phi;
                        best = [grid[i0], grid[i1], grid[i2], grid[i3]];
                    }
                }
            }
        }
    }
    best
}

/// Convergence statistics of BRI over random 5-slice-per-agent instances.
pub fn convergence_speed(instances: usize, seed: u64) -> PropertyResult {
    const NAME: &str = "BRI convergence speed";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();
    let mut sweeps = Vec::with_capacity(instances);
    for i in 0..instances {
        let state = random_solver_instance(&mut rng, 5, 5);
        let (_, trace) = match bri(&state, &cfg) {
            Ok(r) => r,
            Err(e) => return PropertyResult::fail(NAME, format!("instance {i}: {e}"), seed),
        };
        if !trace.converged || trace.sweeps > 20 {
            return PropertyResult::fail(
                NAME,
                format!(
                    "instance {i}: converged={} after {} sweeps",
                    trace.converged, trace.sweeps
                ),
                seed,
            );
        }
        sweeps.push(trace.sweeps);
    }
    sweeps.sort_unstable();
    let median = sweeps[sweeps.len() / 2];
    if median > 5 {
        return PropertyResult::fail(NAME, format!("median sweeps {median} > 5"), seed);
    }
    PropertyResult::pass(
        NAME,
        format!(
            "{instances} instances converged, median {} max {} sweeps",
            median,
            sweeps.last().copied().unwrap_or(0)
        ),
        seed,
    )
}

/// Runs the property suite. `Fast` covers the algebraic identities; `Full`
/// adds the exhaustive grid oracle.
pub fn run(level: Level, seed: u64) -> Vec<PropertyResult> {
    let mut results = vec![
        exact_potential_identity(1000, seed),
        gradient_check(200, seed.wrapping_add(1)),
        concavity_check(50, seed.wrapping_add(2)),
    ];
    if level == Level::Full {
        results.push(grid_oracle_check(25, seed.wrapping_add(3)));
    }
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        for r in run(Level::Fast, 42) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn gradient_check_catches_a_sign_error() {
        let result = gradient_check_inner(5, 7, true);
        assert!(!result.passed);
    }

    #[test]
    fn grid_oracle_smoke() {
        let r = grid_oracle_check(3, 11);
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn convergence_speed_smoke() {
        let r = convergence_speed(20, 13);
        assert!(r.passed, "{}", r.detail);
    }
}
