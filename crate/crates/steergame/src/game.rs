//! Closed-form game mathematics: per-slice utilities, link demands, the
//! shared coupling penalty, agent payoffs, the exact potential function and
//! its analytic gradient.
//!
//! All functions are pure. Sums run left to right in slice order so results
//! are bit-reproducible across runs.

use crate::error::{Error, Result};
use crate::types::{Agent, AllocationVector, GameState, LinkTelemetry, SlaProfile, SliceSpec};

/// Metric dimensions entering the SLA penalty.
const SLA_DIMS: usize = 3;

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!(
            "allocation fraction must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn check_capacity(name: &str, cap: f64) -> Result<()> {
    if !cap.is_finite() || cap <= 0.0 {
        return Err(Error::domain(format!(
            "{name} capacity must be finite and strictly positive, got {cap}"
        )));
    }
    Ok(())
}

/// Throughput utility: `ln(1 + alpha*ntn_cap + (1-alpha)*fib_cap)`.
/// Strictly concave in `alpha` whenever the capacities differ.
pub fn throughput_utility(alpha: f64, ntn_cap: f64, fib_cap: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_capacity("NTN", ntn_cap)?;
    check_capacity("fiber", fib_cap)?;
    Ok((1.0 + alpha * ntn_cap + (1.0 - alpha) * fib_cap).ln())
}

/// Latency utility: the blended RTT normalized by the class latency ceiling,
/// negated. Affine in `alpha` and always <= 0.
pub fn latency_utility(alpha: f64, ntn_rtt: f64, fib_rtt: f64, latency_ceiling: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !latency_ceiling.is_finite() || latency_ceiling <= 0.0 {
        return Err(Error::domain(format!(
            "latency ceiling must be strictly positive, got {latency_ceiling}"
        )));
    }
    if !ntn_rtt.is_finite() || ntn_rtt < 0.0 || !fib_rtt.is_finite() || fib_rtt < 0.0 {
        return Err(Error::domain(format!(
            "RTTs must be finite and >= 0, got ntn={ntn_rtt}, fib={fib_rtt}"
        )));
    }
    Ok(-(alpha * ntn_rtt + (1.0 - alpha) * fib_rtt) / latency_ceiling)
}

/// Reliability utility: expected packet survival across the blend.
pub fn reliability_utility(alpha: f64, ntn_loss: f64, fib_loss: f64) -> Result<f64> {
    check_alpha(alpha)?;
    for (name, l) in [("ntn_loss", ntn_loss), ("fib_loss", fib_loss)] {
        if !l.is_finite() || !(0.0..=1.0).contains(&l) {
            return Err(Error::domain(format!("{name} must lie in [0, 1], got {l}")));
        }
    }
    Ok(alpha * (1.0 - ntn_loss) + (1.0 - alpha) * (1.0 - fib_loss))
}

/// Blended SLA metric on one dimension: `alpha*ntn + (1-alpha)*fib`.
pub fn blended_metric(alpha: f64, ntn_value: f64, fib_value: f64) -> f64 {
    alpha * ntn_value + (1.0 - alpha) * fib_value
}

/// The three blended metrics (rtt, loss, jitter) for one slice.
fn blended_metrics(alpha: f64, ntn: &LinkTelemetry, fib: &LinkTelemetry) -> [f64; SLA_DIMS] {
    [
        blended_metric(alpha, ntn.rtt_ms, fib.rtt_ms),
        blended_metric(alpha, ntn.loss, fib.loss),
        blended_metric(alpha, ntn.jitter_ms, fib.jitter_ms),
    ]
}

fn sla_thresholds(sla: &SlaProfile) -> [f64; SLA_DIMS] {
    [sla.max_rtt_ms, sla.max_loss, sla.max_jitter_ms]
}

/// SLA violation penalty: sum of squared hinge excesses of the blended
/// metrics over their thresholds, each normalized by its threshold. Zero iff
/// all blended metrics are within their SLA; piecewise quadratic, convex and
/// continuously differentiable in `alpha`.
pub fn sla_penalty(
    alpha: f64,
    ntn: &LinkTelemetry,
    fib: &LinkTelemetry,
    sla: &SlaProfile,
) -> Result<f64> {
    check_alpha(alpha)?;
    sla.validate()?;
    let metrics = blended_metrics(alpha, ntn, fib);
    let thresholds = sla_thresholds(sla);
    let mut penalty = 0.0;
    for k in 0..SLA_DIMS {
        let excess = (metrics[k] - thresholds[k]).max(0.0) / thresholds[k];
        penalty += excess * excess;
    }
    Ok(penalty)
}

/// Per-slice utility: `w_T*T + w_L*L + w_R*R - w_P*severity*P`, composed
/// from the four component terms above. Strictly concave in `alpha` when
/// `w_T > 0` and the capacities differ.
pub fn slice_utility(
    alpha: f64,
    spec: &SliceSpec,
    ntn: &LinkTelemetry,
    fib: &LinkTelemetry,
) -> Result<f64> {
    spec.validate()?;
    let w = &spec.weights;
    let t = throughput_utility(alpha, ntn.capacity_mbps, fib.capacity_mbps)?;
    let l = latency_utility(alpha, ntn.rtt_ms, fib.rtt_ms, spec.sla.latency_ceiling_ms)?;
    let r = reliability_utility(alpha, ntn.loss, fib.loss)?;
    let p = sla_penalty(alpha, ntn, fib, &spec.sla)?;
    Ok(w.w_throughput * t + w.w_latency * l + w.w_reliability * r - w.w_penalty * w.severity * p)
}

/// Derivative of the per-slice utility with respect to `alpha`.
/// The hinge derivative at a kink is 0, consistent with `2*max(0, .)`.
pub fn slice_utility_derivative(
    alpha: f64,
    spec: &SliceSpec,
    ntn: &LinkTelemetry,
    fib: &LinkTelemetry,
) -> f64 {
    let w = &spec.weights;
    let delta_cap = ntn.capacity_mbps - fib.capacity_mbps;
    let d_t = delta_cap / (1.0 + fib.capacity_mbps + alpha * delta_cap);
    let d_l = -(ntn.rtt_ms - fib.rtt_ms) / spec.sla.latency_ceiling_ms;
    let d_r = fib.loss - ntn.loss;
    let metrics = blended_metrics(alpha, ntn, fib);
    let thresholds = sla_thresholds(&spec.sla);
    let deltas = metric_deltas(ntn, fib);
    let mut d_p = 0.0;
    for k in 0..SLA_DIMS {
        let excess = (metrics[k] - thresholds[k]).max(0.0);
        d_p += 2.0 * excess * deltas[k] / (thresholds[k] * thresholds[k]);
    }
    w.w_throughput * d_t + w.w_latency * d_l + w.w_reliability * d_r
        - w.w_penalty * w.severity * d_p
}

/// Second derivative of the per-slice utility with respect to `alpha`.
pub fn slice_utility_second_derivative(
    alpha: f64,
    spec: &SliceSpec,
    ntn: &LinkTelemetry,
    fib: &LinkTelemetry,
) -> f64 {
    let w = &spec.weights;
    let delta_cap = ntn.capacity_mbps - fib.capacity_mbps;
    let denom = 1.0 + fib.capacity_mbps + alpha * delta_cap;
    let d2_t = -(delta_cap * delta_cap) / (denom * denom);
    let metrics = blended_metrics(alpha, ntn, fib);
    let thresholds = sla_thresholds(&spec.sla);
    let deltas = metric_deltas(ntn, fib);
    let mut d2_p = 0.0;
    for k in 0..SLA_DIMS {
        if metrics[k] > thresholds[k] {
            d2_p += 2.0 * deltas[k] * deltas[k] / (thresholds[k] * thresholds[k]);
        }
    }
    w.w_throughput * d2_t - w.w_penalty * w.severity * d2_p
}

fn metric_deltas(ntn: &LinkTelemetry, fib: &LinkTelemetry) -> [f64; SLA_DIMS] {
    [
        ntn.rtt_ms - fib.rtt_ms,
        ntn.loss - fib.loss,
        ntn.jitter_ms - fib.jitter_ms,
    ]
}

/// Per-link demand contributions of one agent: `(sum alpha_u * b_u,
/// sum (1-alpha_u) * b_u)` in Mbps, summed left to right.
pub fn agent_link_demands(alloc: &AllocationVector, slices: &[SliceSpec]) -> Result<(f64, f64)> {
    if alloc.len() != slices.len() {
        return Err(Error::contract(format!(
            "allocation length {} != slice count {}",
            alloc.len(),
            slices.len()
        )));
    }
    let mut ntn = 0.0;
    let mut fib = 0.0;
    for (a, spec) in alloc.as_slice().iter().zip(slices) {
        ntn += a * spec.demand_mbps;
        fib += (1.0 - a) * spec.demand_mbps;
    }
    Ok((ntn, fib))
}

/// Aggregate per-link demands of both agents combined.
pub fn aggregate_demands(state: &GameState) -> Result<(f64, f64)> {
    let (dl_ntn, dl_fib) = agent_link_demands(&state.dl_alloc, &state.dl_slices)?;
    let (ul_ntn, ul_fib) = agent_link_demands(&state.ul_alloc, &state.ul_slices)?;
    Ok((dl_ntn + ul_ntn, dl_fib + ul_fib))
}

/// Joint oversubscription cost shared by both agents: squared hinge of each
/// link's aggregate demand over its capacity estimate, in (Mbps)^2.
pub fn coupling_penalty(
    dl_alloc: &AllocationVector,
    ul_alloc: &AllocationVector,
    dl_slices: &[SliceSpec],
    ul_slices: &[SliceSpec],
    ntn_cap: f64,
    fib_cap: f64,
) -> Result<f64> {
    check_capacity("NTN", ntn_cap)?;
    check_capacity("fiber", fib_cap)?;
    let (dl_ntn, dl_fib) = agent_link_demands(dl_alloc, dl_slices)?;
    let (ul_ntn, ul_fib) = agent_link_demands(ul_alloc, ul_slices)?;
    Ok(coupling_from_aggregates(
        dl_ntn + ul_ntn,
        dl_fib + ul_fib,
        ntn_cap,
        fib_cap,
    ))
}

/// Coupling penalty from already-aggregated link demands.
pub fn coupling_from_aggregates(d_ntn: f64, d_fib: f64, ntn_cap: f64, fib_cap: f64) -> f64 {
    let over_ntn = (d_ntn - ntn_cap).max(0.0);
    let over_fib = (d_fib - fib_cap).max(0.0);
    over_ntn * over_ntn + over_fib * over_fib
}

fn priority_weighted_utilities(
    slices: &[SliceSpec],
    alloc: &AllocationVector,
    ntn: &LinkTelemetry,
    fib: &LinkTelemetry,
) -> Result<f64> {
    let mut total = 0.0;
    for (spec, &alpha) in slices.iter().zip(alloc.as_slice()) {
        total += spec.priority * slice_utility(alpha, spec, ntn, fib)?;
    }
    Ok(total)
}

/// Agent payoff: priority-weighted sum of its own slice utilities minus the
/// coupling term. The coupling term is identical for both agents.
pub fn payoff(agent: Agent, state: &GameState) -> Result<f64> {
    state.validate()?;
    let own = priority_weighted_utilities(
        state.slices(agent),
        state.alloc(agent),
        &state.ntn,
        &state.fib,
    )?;
    let (d_ntn, d_fib) = aggregate_demands(state)?;
    let c = coupling_from_aggregates(d_ntn, d_fib, state.ntn.capacity_mbps, state.fib.capacity_mbps);
    Ok(own - state.coupling_coeff * c)
}

/// Exact potential of the game: both agents' priority-weighted utility sums
/// minus the coupling term counted once. Any unilateral change in one
/// agent's allocation changes the potential by exactly that agent's payoff
/// change.
pub fn potential(state: &GameState) -> Result<f64> {
    state.validate()?;
    let dl = priority_weighted_utilities(&state.dl_slices, &state.dl_alloc, &state.ntn, &state.fib)?;
    let ul = priority_weighted_utilities(&state.ul_slices, &state.ul_alloc, &state.ntn, &state.fib)?;
    let (d_ntn, d_fib) = aggregate_demands(state)?;
    let c = coupling_from_aggregates(d_ntn, d_fib, state.ntn.capacity_mbps, state.fib.capacity_mbps);
    Ok(dl + ul - state.coupling_coeff * c)
}

/// Analytic gradient of the potential over the joint allocation, DL block
/// first. Component `u` is `pi_u * dU_u/dalpha - mu * dC/dalpha_u`, with the
/// hinge derivative taken as 0 at an inactive hinge.
pub fn potential_gradient(state: &GameState) -> Result<Vec<f64>> {
    state.validate()?;
    let (d_ntn, d_fib) = aggregate_demands(state)?;
    let over_ntn = (d_ntn - state.ntn.capacity_mbps).max(0.0);
    let over_fib = (d_fib - state.fib.capacity_mbps).max(0.0);
    let mu = state.coupling_coeff;

    let mut grad = Vec::with_capacity(state.dl_slices.len() + state.ul_slices.len());
    for agent in [Agent::Dl, Agent::Ul] {
        let slices = state.slices(agent);
        let alloc = state.alloc(agent);
        for (spec, &alpha) in slices.iter().zip(alloc.as_slice()) {
            let d_utility = spec.priority * slice_utility_derivative(alpha, spec, &state.ntn, &state.fib);
            let d_coupling = 2.0 * over_ntn * spec.demand_mbps - 2.0 * over_fib * spec.demand_mbps;
            grad.push(d_utility - mu * d_coupling);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::random_state;
    use crate::types::SliceClass;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn clean_link(rtt: f64, cap: f64) -> LinkTelemetry {
        LinkTelemetry::new(rtt, 1.0, 0.0, cap)
    }

    #[test]
    fn throughput_utility_matches_direct_evaluation() {
        assert!((throughput_utility(0.0, 50.0, 100.0).unwrap() - 4.61512051684126).abs() < 1e-12);
        assert!((throughput_utility(1.0, 50.0, 100.0).unwrap() - 3.9318256327243257).abs() < 1e-12);
        // Equal capacities: the blend is constant in alpha.
        let c = 42.0;
        for alpha in [0.0, 0.25, 0.5, 1.0] {
            assert!((throughput_utility(alpha, c, c).unwrap() - (1.0 + c).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn throughput_utility_rejects_bad_capacities() {
        assert!(throughput_utility(0.5, 0.0, 100.0).is_err());
        assert!(throughput_utility(0.5, 50.0, -1.0).is_err());
        assert!(throughput_utility(0.5, f64::NAN, 100.0).is_err());
        assert!(throughput_utility(1.5, 50.0, 100.0).is_err());
    }

    #[test]
    fn latency_utility_matches_direct_evaluation() {
        assert!((latency_utility(0.0, 60.0, 10.0, 60.0).unwrap() - (-10.0 / 60.0)).abs() < 1e-12);
        assert!((latency_utility(1.0, 60.0, 10.0, 60.0).unwrap() - (-1.0)).abs() < 1e-12);
        assert!((latency_utility(0.5, 60.0, 10.0, 60.0).unwrap() - (-35.0 / 60.0)).abs() < 1e-12);
        assert!(latency_utility(0.5, 60.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn latency_utility_is_monotone_decreasing_iff_ntn_slower() {
        let up = latency_utility(0.8, 60.0, 10.0, 60.0).unwrap()
            - latency_utility(0.2, 60.0, 10.0, 60.0).unwrap();
        assert!(up < 0.0);
        let down = latency_utility(0.8, 10.0, 60.0, 60.0).unwrap()
            - latency_utility(0.2, 10.0, 60.0, 60.0).unwrap();
        assert!(down > 0.0);
    }

    #[test]
    fn reliability_utility_matches_direct_evaluation() {
        assert!((reliability_utility(0.5, 0.02, 0.001).unwrap() - 0.9895).abs() < 1e-12);
        assert_eq!(reliability_utility(0.0, 0.73, 0.0).unwrap(), 1.0);
        assert_eq!(reliability_utility(1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(reliability_utility(0.5, 1.2, 0.0).is_err());
        // Monotone decreasing in alpha iff the NTN path loses more.
        let d = reliability_utility(0.9, 0.05, 0.01).unwrap()
            - reliability_utility(0.1, 0.05, 0.01).unwrap();
        assert!(d < 0.0);
    }

    #[test]
    fn blended_metric_interpolates_linearly() {
        assert!((blended_metric(0.25, 60.0, 10.0) - 22.5).abs() < 1e-12);
        assert_eq!(blended_metric(0.0, 7.0, 3.0), 3.0);
        assert_eq!(blended_metric(1.0, 7.0, 3.0), 7.0);
    }

    #[test]
    fn sla_penalty_only_counts_active_hinges() {
        let sla = SlaProfile::new(60.0, 15.0, 0.005);
        // alpha = 1 makes the blended metrics equal the NTN metrics.
        let ntn = LinkTelemetry::new(70.0, 12.0, 0.002, 60.0);
        let fib = clean_link(10.0, 100.0);
        let p = sla_penalty(1.0, &ntn, &fib, &sla).unwrap();
        assert!((p - 0.027777777777777776).abs() < 1e-12);

        // Everything within thresholds: exactly zero.
        let ntn_ok = LinkTelemetry::new(55.0, 8.0, 0.001, 60.0);
        for alpha in [0.0, 0.3, 1.0] {
            assert_eq!(sla_penalty(alpha, &ntn_ok, &fib, &sla).unwrap(), 0.0);
        }

        // Blended loss at twice its threshold, everything else within: 1.
        let ntn_lossy = LinkTelemetry::new(55.0, 8.0, 0.01, 60.0);
        let p = sla_penalty(1.0, &ntn_lossy, &fib, &sla).unwrap();
        assert!((p - 1.0).abs() < 1e-12);

        let bad = SlaProfile {
            max_rtt_ms: -1.0,
            ..sla
        };
        assert!(sla_penalty(0.5, &ntn, &fib, &bad).is_err());
    }

    #[test]
    fn slice_utility_matches_component_composition() {
        // Pinned example: unit weights, lossless in-SLA fiber, alpha = 0.
        let mut spec = SliceSpec::preset(SliceClass::V2x, 10.0);
        spec.weights = crate::types::UtilityWeights::new(1.0, 1.0, 1.0, 1.0, 1.0);
        let ntn = LinkTelemetry::new(60.0, 8.0, 0.01, 50.0);
        let fib = clean_link(10.0, 100.0);
        let u = slice_utility(0.0, &spec, &ntn, &fib).unwrap();
        assert!((u - 5.448453850174593).abs() < 1e-12);

        // Zero weights: zero utility for any alpha.
        spec.weights = crate::types::UtilityWeights::new(0.0, 0.0, 0.0, 0.0, 0.0);
        for alpha in [0.0, 0.4, 1.0] {
            assert_eq!(slice_utility(alpha, &spec, &ntn, &fib).unwrap(), 0.0);
        }
    }

    #[test]
    fn slice_utility_compositional_oracle_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut spec = SliceSpec::preset(SliceClass::VideoStreaming, rng.gen_range(1.0..40.0));
            spec.weights = crate::types::UtilityWeights::new(
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..4.0),
            );
            let ntn = LinkTelemetry::new(
                rng.gen_range(20.0..300.0),
                rng.gen_range(0.0..30.0),
                rng.gen_range(0.0..0.2),
                rng.gen_range(10.0..80.0),
            );
            let fib = LinkTelemetry::new(
                rng.gen_range(1.0..100.0),
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..0.1),
                rng.gen_range(90.0..200.0),
            );
            let alpha: f64 = rng.gen_range(0.0..1.0);
            let w = spec.weights.clone();
            let expected = w.w_throughput
                * throughput_utility(alpha, ntn.capacity_mbps, fib.capacity_mbps).unwrap()
                + w.w_latency
                    * latency_utility(alpha, ntn.rtt_ms, fib.rtt_ms, spec.sla.latency_ceiling_ms)
                        .unwrap()
                + w.w_reliability * reliability_utility(alpha, ntn.loss, fib.loss).unwrap()
                - w.w_penalty * w.severity * sla_penalty(alpha, &ntn, &fib, &spec.sla).unwrap();
            let got = slice_utility(alpha, &spec, &ntn, &fib).unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn agent_link_demands_split_and_conserve() {
        let slices = vec![
            SliceSpec::preset(SliceClass::Iot, 10.0),
            SliceSpec::preset(SliceClass::BestEffort, 30.0),
        ];
        let (ntn, fib) =
            agent_link_demands(&AllocationVector(vec![0.5, 0.5]), &slices).unwrap();
        assert!((ntn - 20.0).abs() < 1e-12);
        assert!((fib - 20.0).abs() < 1e-12);

        let (ntn, fib) = agent_link_demands(&AllocationVector(vec![0.0, 0.0]), &slices).unwrap();
        assert_eq!(ntn, 0.0);
        assert_eq!(fib, 40.0);
        let (ntn, fib) = agent_link_demands(&AllocationVector(vec![1.0, 1.0]), &slices).unwrap();
        assert_eq!(ntn, 40.0);
        assert_eq!(fib, 0.0);

        assert!(matches!(
            agent_link_demands(&AllocationVector(vec![0.5]), &slices),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn demand_conservation_on_random_allocations() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let n = rng.gen_range(1..8);
            let slices: Vec<_> = (0..n)
                .map(|_| SliceSpec::preset(SliceClass::Iot, rng.gen_range(0.5..50.0)))
                .collect();
            let alloc = AllocationVector((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
            let total: f64 = slices.iter().map(|s| s.demand_mbps).sum();
            let (ntn, fib) = agent_link_demands(&alloc, &slices).unwrap();
            assert!((ntn + fib - total).abs() < 1e-9 * total.max(1.0));
        }
    }

    #[test]
    fn coupling_penalty_matches_direct_evaluation() {
        let dl = vec![SliceSpec::preset(SliceClass::VideoStreaming, 120.0)];
        let ul = vec![SliceSpec::preset(SliceClass::VideoStreaming, 80.0)];
        let c = coupling_penalty(
            &AllocationVector(vec![1.0]),
            &AllocationVector(vec![0.0]),
            &dl,
            &ul,
            100.0,
            100.0,
        )
        .unwrap();
        assert_eq!(c, 400.0);

        // Both under capacity: exactly zero.
        let c = coupling_penalty(
            &AllocationVector(vec![0.5]),
            &AllocationVector(vec![0.5]),
            &dl,
            &ul,
            150.0,
            150.0,
        )
        .unwrap();
        assert_eq!(c, 0.0);

        // Both links over by the same amount x: 2 x^2.
        let c = coupling_from_aggregates(110.0, 130.0, 100.0, 120.0);
        assert!((c - 200.0).abs() < 1e-12);
    }

    #[test]
    fn payoff_decomposes_and_coupling_cancels_in_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut state = random_state(&mut rng, 3, 2);

        state.coupling_coeff = 0.0;
        let decoupled = payoff(Agent::Dl, &state).unwrap();
        let utilities = priority_weighted_utilities(
            &state.dl_slices,
            &state.dl_alloc,
            &state.ntn,
            &state.fib,
        )
        .unwrap();
        assert!((decoupled - utilities).abs() < 1e-12);

        // payoff(DL) - payoff(UL) is independent of the coupling coefficient.
        state.coupling_coeff = 1.0;
        let d1 = payoff(Agent::Dl, &state).unwrap() - payoff(Agent::Ul, &state).unwrap();
        state.coupling_coeff = 7.5;
        let d2 = payoff(Agent::Dl, &state).unwrap() - payoff(Agent::Ul, &state).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn single_slice_payoff_matches_hand_composition() {
        let mut spec = SliceSpec::preset(SliceClass::V2x, 30.0);
        spec.priority = 2.0;
        let state = GameState {
            dl_slices: vec![spec.clone()],
            ul_slices: vec![],
            dl_alloc: AllocationVector(vec![0.7]),
            ul_alloc: AllocationVector(vec![]),
            ntn: LinkTelemetry::new(65.0, 9.0, 0.01, 25.0),
            fib: clean_link(10.0, 100.0),
            coupling_coeff: 2.0,
        };
        let u = slice_utility(0.7, &spec, &state.ntn, &state.fib).unwrap();
        let c = coupling_from_aggregates(0.7 * 30.0, 0.3 * 30.0, 25.0, 100.0);
        let expected = 2.0 * u - 2.0 * c;
        assert!((payoff(Agent::Dl, &state).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn potential_decomposes_into_payoffs_plus_one_coupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let state = random_state(&mut rng, 3, 3);
            let (d_ntn, d_fib) = aggregate_demands(&state).unwrap();
            let c = coupling_from_aggregates(
                d_ntn,
                d_fib,
                state.ntn.capacity_mbps,
                state.fib.capacity_mbps,
            );
            let phi = potential(&state).unwrap();
            let sum = payoff(Agent::Dl, &state).unwrap() + payoff(Agent::Ul, &state).unwrap();
            // The coupling term appears twice in the payoff sum, once in Phi.
            assert!((phi - (sum + state.coupling_coeff * c)).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_potential_identity_under_unilateral_deviations() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let state = random_state(&mut rng, 3, 2);
            for agent in [Agent::Dl, Agent::Ul] {
                let n = state.slices(agent).len();
                let deviated_alloc =
                    AllocationVector((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect());
                let mut deviated = state.clone();
                deviated.set_alloc(agent, deviated_alloc);

                let d_payoff =
                    payoff(agent, &deviated).unwrap() - payoff(agent, &state).unwrap();
                let d_potential = potential(&deviated).unwrap() - potential(&state).unwrap();
                assert!(
                    (d_payoff - d_potential).abs() < 1e-9,
                    "exact potential identity violated: {d_payoff} vs {d_potential}"
                );
            }
        }
    }

    #[test]
    fn gradient_is_zero_for_flat_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut state = random_state(&mut rng, 2, 2);
        state.coupling_coeff = 0.0;
        for spec in state.dl_slices.iter_mut().chain(state.ul_slices.iter_mut()) {
            spec.weights = crate::types::UtilityWeights::new(0.0, 0.0, 0.0, 0.0, 0.0);
        }
        let grad = potential_gradient(&state).unwrap();
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let h = 1e-6;
        for _ in 0..40 {
            let state = crate::synth::random_interior_state(&mut rng, 3, 2, 10.0 * h);
            let grad = potential_gradient(&state).unwrap();
            let n_dl = state.dl_slices.len();
            for i in 0..grad.len() {
                let mut plus = state.clone();
                let mut minus = state.clone();
                let (agent, j) = if i < n_dl { (Agent::Dl, i) } else { (Agent::Ul, i - n_dl) };
                match agent {
                    Agent::Dl => {
                        plus.dl_alloc.0[j] += h;
                        minus.dl_alloc.0[j] -= h;
                    }
                    Agent::Ul => {
                        plus.ul_alloc.0[j] += h;
                        minus.ul_alloc.0[j] -= h;
                    }
                }
                let fd = (potential(&plus).unwrap() - potential(&minus).unwrap()) / (2.0 * h);
                let err = (grad[i] - fd).abs();
                let tol = 1e-5 * grad[i].abs().max(1.0);
                assert!(err < tol, "component {i}: analytic {} vs fd {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn coupling_contribution_vanishes_under_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let mut state = random_state(&mut rng, 3, 2);
        // Push capacities far above any achievable demand.
        state.ntn.capacity_mbps = 10_000.0;
        state.fib.capacity_mbps = 20_000.0;
        let with_mu = potential_gradient(&state).unwrap();
        state.coupling_coeff = 0.0;
        let without_mu = potential_gradient(&state).unwrap();
        assert_eq!(with_mu, without_mu);
    }

    #[test]
    fn penalties_are_nonnegative_and_vanish_on_an_open_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let state = random_state(&mut rng, 2, 2);
            let (d_ntn, d_fib) = aggregate_demands(&state).unwrap();
            let c = coupling_from_aggregates(
                d_ntn,
                d_fib,
                state.ntn.capacity_mbps,
                state.fib.capacity_mbps,
            );
            assert!(c >= 0.0);
            for (spec, &alpha) in state.dl_slices.iter().zip(state.dl_alloc.as_slice()) {
                assert!(sla_penalty(alpha, &state.ntn, &state.fib, &spec.sla).unwrap() >= 0.0);
            }
        }
        // Comfortable thresholds and capacities: both penalties are zero on a
        // neighborhood of any allocation.
        let sla = SlaProfile::new(1_000.0, 1_000.0, 0.9);
        let ntn = LinkTelemetry::new(55.0, 8.0, 0.0, 1_000.0);
        let fib = clean_link(10.0, 2_000.0);
        for alpha in [0.1, 0.5, 0.9] {
            assert_eq!(sla_penalty(alpha, &ntn, &fib, &sla).unwrap(), 0.0);
        }
    }
}
