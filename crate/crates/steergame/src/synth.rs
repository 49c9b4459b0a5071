//! Synthetic game instances for the verification suite and for tests.
//!
//! Instances use the built-in class presets with randomized demands,
//! telemetry and allocations. Capacities are drawn from disjoint ranges so
//! the standing assumption (distinct link capacities) always holds.

use rand::Rng;

use crate::types::{AllocationVector, GameState, LinkTelemetry, SliceClass, SliceSpec};

const CLASS_POOL: [SliceClass; 5] = [
    SliceClass::V2x,
    SliceClass::Emergency,
    SliceClass::VideoStreaming,
    SliceClass::Iot,
    SliceClass::BestEffort,
];

fn random_slices<R: Rng>(rng: &mut R, n: usize) -> Vec<SliceSpec> {
    (0..n)
        .map(|i| {
            let class = CLASS_POOL[i % CLASS_POOL.len()].clone();
            SliceSpec::preset(class, rng.gen_range(2.0..40.0))
        })
        .collect()
}

fn random_link<R: Rng>(rng: &mut R, rtt_range: (f64, f64), cap_range: (f64, f64)) -> LinkTelemetry {
    LinkTelemetry::new(
        rng.gen_range(rtt_range.0..rtt_range.1),
        rng.gen_range(0.5..12.0),
        rng.gen_range(0.0..0.05),
        rng.gen_range(cap_range.0..cap_range.1),
    )
}

/// A random valid game state with `n` DL and `m` UL slices. Allocations are
/// uniform over the full box [0, 1].
pub fn random_state<R: Rng>(rng: &mut R, n: usize, m: usize) -> GameState {
    let dl_slices = random_slices(rng, n);
    let ul_slices = random_slices(rng, m);
    let dl_alloc = AllocationVector((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect());
    let ul_alloc = AllocationVector((0..m).map(|_| rng.gen_range(0.0..=1.0)).collect());
    GameState {
        dl_slices,
        ul_slices,
        dl_alloc,
        ul_alloc,
        ntn: random_link(rng, (40.0, 90.0), (20.0, 80.0)),
        fib: random_link(rng, (2.0, 25.0), (85.0, 180.0)),
        coupling_coeff: rng.gen_range(0.2..3.0),
    }
}

/// A random instance in the solver's target operating regime: the coupling
/// coefficient is scaled so the penalty curvature `2*mu*sum(b^2)` stays
/// commensurate with the utility curvature. Far stiffer coupling turns the
/// penalty into a near-hard capacity constraint whose equilibrium split is
/// determined only to first order by the utility slopes; alternating best
/// responses then drift along the constraint surface instead of converging
/// in a handful of sweeps.
pub fn random_solver_instance<R: Rng>(rng: &mut R, n: usize, m: usize) -> GameState {
    let mut state = random_state(rng, n, m);
    // Total demand between 40% and 120% of combined capacity mixes
    // uncongested instances with moderately oversubscribed ones.
    let combined = state.ntn.capacity_mbps + state.fib.capacity_mbps;
    let total: f64 = state
        .dl_slices
        .iter()
        .chain(&state.ul_slices)
        .map(|s| s.demand_mbps)
        .sum();
    let scale = rng.gen_range(0.4..1.2) * combined / total;
    let mut sum_sq = 0.0;
    for spec in state.dl_slices.iter_mut().chain(state.ul_slices.iter_mut()) {
        spec.demand_mbps *= scale;
        sum_sq += spec.demand_mbps * spec.demand_mbps;
    }
    let curvature_ratio = rng.gen_range(0.5..8.0);
    state.coupling_coeff = curvature_ratio * 0.05 / (4.0 * sum_sq.max(1.0));
    state
}

/// Like [`random_state`], but keeps every allocation inside the open box and
/// resamples until every hinge argument (blended SLA metrics and aggregate
/// link demands) sits at least `kink_margin` away from its kink, so central
/// finite differences of the potential are valid near the point.
pub fn random_interior_state<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    kink_margin: f64,
) -> GameState {
    loop {
        let mut state = random_state(rng, n, m);
        for a in state
            .dl_alloc
            .0
            .iter_mut()
            .chain(state.ul_alloc.0.iter_mut())
        {
            *a = rng.gen_range(0.05..0.95);
        }
        if clear_of_kinks(&state, kink_margin) {
            return state;
        }
    }
}

/// True when no squared-hinge argument lies within `margin` (scaled by the
/// hinge slope) of zero anywhere in the state.
pub fn clear_of_kinks(state: &GameState, margin: f64) -> bool {
    let (d_ntn, d_fib) = crate::game::aggregate_demands(state).expect("valid state");
    let total_demand: f64 = state
        .dl_slices
        .iter()
        .chain(&state.ul_slices)
        .map(|s| s.demand_mbps)
        .sum();
    // Demand hinges move at rate <= total demand per unit step in any
    // coordinate direction.
    if (d_ntn - state.ntn.capacity_mbps).abs() < margin * total_demand.max(1.0) {
        return false;
    }
    if (d_fib - state.fib.capacity_mbps).abs() < margin * total_demand.max(1.0) {
        return false;
    }
    for (slices, alloc) in [
        (&state.dl_slices, &state.dl_alloc),
        (&state.ul_slices, &state.ul_alloc),
    ] {
        for (spec, &alpha) in slices.iter().zip(alloc.as_slice()) {
            let pairs = [
                (state.ntn.rtt_ms, state.fib.rtt_ms, spec.sla.max_rtt_ms),
                (state.ntn.loss, state.fib.loss, spec.sla.max_loss),
                (state.ntn.jitter_ms, state.fib.jitter_ms, spec.sla.max_jitter_ms),
            ];
            for (ntn_v, fib_v, threshold) in pairs {
                let blended = crate::game::blended_metric(alpha, ntn_v, fib_v);
                let slope = (ntn_v - fib_v).abs();
                if (blended - threshold).abs() < margin * slope.max(1.0) {
                    return false;
                }
            }
        }
    }
    true
}
